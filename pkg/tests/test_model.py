import numpy as np
import pytest

from app.schemas.scenario import Activation
from app.schemas.training import ModelParams
from app.services.model import MLP, Adam, init_params
from app.services.validation import gradient_error


def numeric_gradient(model, theta, x, y, step=1e-5):
    grad = np.empty_like(theta)
    for k in range(theta.size):
        bump = np.zeros_like(theta)
        bump[k] = step
        grad[k] = (model.loss_and_grad(theta + bump, x, y)[0] - model.loss_and_grad(theta - bump, x, y)[0]) / (
            2 * step
        )
    return grad


def test_parameter_count():
    params = init_params((784, 32, 10), np.random.default_rng(0))
    assert params.dimension == 784 * 32 + 32 + 32 * 10 + 10
    assert MLP.for_params(params).num_params == params.dimension


def test_theta_length_validated():
    with pytest.raises(ValueError):
        ModelParams(theta=np.zeros(5), layer_sizes=(3, 2))


def test_gradient_check_small_tanh_net():
    assert gradient_error(master_seed=0) < 1e-4


@pytest.mark.parametrize("activation", [Activation.TANH, Activation.SIGMOID])
def test_gradient_matches_finite_differences(activation, rng):
    params = init_params((4, 5, 3), rng, activation)
    theta = params.theta + 0.1 * rng.standard_normal(params.dimension)
    x = rng.standard_normal((6, 4))
    y = rng.integers(0, 3, size=6)
    model = MLP.for_params(params)
    _, grad = model.loss_and_grad(theta, x, y)
    np.testing.assert_allclose(grad, numeric_gradient(model, theta, x, y), rtol=1e-4, atol=1e-8)


def test_initial_loss_near_uniform(rng):
    params = init_params((10, 16, 4), rng)
    x = rng.standard_normal((200, 10)) * 0.1
    loss, _ = MLP.for_params(params).loss_and_grad(params.theta, x, rng.integers(0, 4, size=200))
    assert loss == pytest.approx(np.log(4), rel=0.1)


def test_adam_first_step_moves_by_learning_rate():
    theta = np.array([1.0, -1.0, 0.5])
    Adam(lr=0.01).step(theta, np.array([3.0, -0.2, 0.0]))
    np.testing.assert_allclose(theta, [0.99, -0.99, 0.5], atol=1e-7)


def test_adam_minimises_quadratic():
    theta = np.array([5.0, -3.0])
    optimizer = Adam(lr=0.1)
    for _ in range(1000):
        optimizer.step(theta, 2 * theta)
    assert np.abs(theta).max() < 0.1


def test_predict_shape(rng):
    params = init_params((3, 4, 2), rng)
    predictions = MLP.for_params(params).predict(params.theta, rng.standard_normal((7, 3)))
    assert predictions.shape == (7,)
    assert set(predictions) <= {0, 1}
