import logging
from typing import Optional, Sequence

import numpy as np

from app.core.exceptions import InvariantViolation, ScenarioError, TrainingDivergedError
from app.core.seeding import child_rng
from app.schemas.channel import ChannelDraw
from app.schemas.privacy import ClippedUpdate
from app.schemas.scenario import FadingMode, Policy, PrivacyTarget, SystemParams, TrainingConfig
from app.schemas.training import Dataset, ModelParams, RoundStats, TraceRow
from app.services.aircomp import aggregate_round
from app.services.channel import draw_channel, draw_channels
from app.services.datasets import partition_iid
from app.services.model import MLP, Adam, init_params
from app.services.privacy import (
    PrivacyLedger,
    clip_update,
    compute_rho,
    epsilon_for_slots,
    tx_power_per_client,
)

logger = logging.getLogger(__name__)

CLIP_TOLERANCE = 1e-9


def model_for(dataset: Dataset, config: TrainingConfig, rng: np.random.Generator) -> ModelParams:
    """Freshly initialised parameters sized for ``dataset``."""
    layer_sizes = (dataset.num_features, *config.hidden_layers, dataset.num_classes)
    return init_params(layer_sizes, rng, config.activation)


def local_train(
    theta: ModelParams,
    dataset: Dataset,
    config: TrainingConfig,
    rng: np.random.Generator,
    epochs: Optional[int] = None,
    client: Optional[int] = None,
) -> np.ndarray:
    """
    Run local Adam epochs from ``theta`` and return the update theta_after - theta_before.

    Adam state starts fresh on every call. Each epoch shuffles the client's
    samples and visits them in mini-batches of ``config.batch_size`` (the last
    batch may be smaller).

    Args:
        theta: Starting parameters (not modified)
        dataset: Client data
        config: Training hyperparameters
        rng: Generator for shuffling
        epochs: Overrides config.local_steps_per_round
        client: Client index, used in diagnostics only

    Returns:
        Update vector of length D

    Raises:
        TrainingDivergedError: If a mini-batch loss is not finite
    """
    model = MLP.for_params(theta)
    weights = theta.theta.copy()
    optimizer = Adam(config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_epsilon)
    num_epochs = config.local_steps_per_round if epochs is None else epochs
    n = len(dataset)
    step = 0

    for _ in range(num_epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            loss, grad = model.loss_and_grad(weights, dataset.features[batch], dataset.labels[batch])
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss {loss} at step {step} (client {client}), "
                    f"parameter norm {np.linalg.norm(weights):.4g}"
                )
            optimizer.step(weights, grad)
            step += 1

    return weights - theta.theta


def centralized_train(
    theta: ModelParams, dataset: Dataset, config: TrainingConfig, rng: np.random.Generator, epochs: int
) -> ModelParams:
    """Plain (non-federated) training, used as a sanity reference."""
    return theta.with_theta(theta.theta + local_train(theta, dataset, config, rng, epochs=epochs))


def loss(theta: ModelParams, dataset: Dataset) -> float:
    """Mean cross-entropy over the whole dataset."""
    value, _ = MLP.for_params(theta).loss_and_grad(theta.theta, dataset.features, dataset.labels)
    return value


def evaluate(theta: ModelParams, dataset: Dataset) -> float:
    """Fraction of samples whose argmax prediction equals the label."""
    predictions = MLP.for_params(theta).predict(theta.theta, dataset.features)
    return float(np.mean(predictions == dataset.labels))


def client_weights(clients: Sequence[Dataset], config: TrainingConfig) -> np.ndarray:
    """w_i from the config, or the client data sizes."""
    if config.client_weights is not None:
        if len(config.client_weights) != len(clients):
            raise InvariantViolation(f"{len(config.client_weights)} weights for {len(clients)} clients")
        return np.asarray(config.client_weights, dtype=np.float64)
    return np.asarray([len(client) for client in clients], dtype=np.float64)


def fed_round(
    global_params: ModelParams,
    clients: Sequence[Dataset],
    params: SystemParams,
    target: PrivacyTarget,
    policy: Policy,
    draw: ChannelDraw,
    rng: np.random.Generator,
    config: TrainingConfig,
) -> tuple[ModelParams, RoundStats]:
    """
    One aggregation round through the noisy AirComp channel.

    Clients train locally, weight and clip their updates into symbols s_i,
    the policy picks rho on this round's draw, and the decoded estimate of
    sum_i s_i is added to the global parameters. The weighted-average
    normalisation is already inside s_i.

    Args:
        global_params: Current global model
        clients: One dataset per client
        params: System parameters (num_clients must match ``clients``)
        target: Privacy target and clipping threshold
        policy: Power-scaling policy
        draw: Channel gains, shape (I,) for block fading or (D, I) per slot
        rng: Round generator; per-client and noise generators are spawned from it
        config: Training hyperparameters

    Returns:
        Updated global model and round statistics
    """
    if len(clients) != params.num_clients:
        raise InvariantViolation(f"{len(clients)} client datasets for I={params.num_clients}")

    client_rngs = rng.spawn(len(clients))
    (noise_rng,) = rng.spawn(1)
    weights = client_weights(clients, config)
    w_sum = float(weights.sum())

    vectors = []
    for index, (client, client_rng) in enumerate(zip(clients, client_rngs)):
        update = local_train(global_params, client, config, client_rng, client=index)
        vectors.append(clip_update(update, float(weights[index]), w_sum, target.clip_threshold, target.clip_mode))
    symbols = ClippedUpdate.from_client_vectors(vectors)

    scaling = compute_rho(policy, params, target, draw, symbols.symbols)
    rho = np.broadcast_to(scaling.rho, (symbols.num_slots,))
    estimate = aggregate_round(symbols, rho, params, noise_rng)

    tx_power = tx_power_per_client(rho, draw, symbols.symbols, params)
    totals = symbols.column_sums()
    gb = params.antenna_gain_product * params.ref_path_loss
    with np.errstate(invalid="ignore"):
        slot_snr = np.where(totals == 0, 0.0, gb * rho * totals**2) / params.noise_power

    stats = RoundStats(
        policy=policy,
        num_slots=symbols.num_slots,
        rho=np.array(rho),
        per_slot_noise_std=estimate.per_slot_noise_std,
        dp_capped_fraction=float(np.mean(np.broadcast_to(scaling.dp_capped, (symbols.num_slots,)))),
        epsilon_target=target.epsilon,
        epsilon_worst_slot=epsilon_for_slots(params, target, rho),
        tx_power_max=tx_power.max(axis=0),
        max_symbol=symbols.max_magnitude,
        clip_bound_ok=symbols.max_magnitude <= target.clip_threshold * (1 + CLIP_TOLERANCE),
        snr_estimate=float(slot_snr.mean()),
        symbols=symbols,
    )
    return global_params.with_theta(global_params.theta + estimate.estimate), stats


def _round_draw(params: SystemParams, num_slots: int, rng: np.random.Generator) -> ChannelDraw:
    if params.fading is FadingMode.PER_SLOT:
        return draw_channels(rng, params, num_slots)
    return draw_channel(rng, params)


def run_training(
    params: SystemParams,
    target: PrivacyTarget,
    config: TrainingConfig,
    policy: Policy,
    train: Dataset,
    test: Dataset,
    master_seed: int,
    dataset_name: str = "synthetic",
    symbol_sink: Optional[list[np.ndarray]] = None,
) -> list[TraceRow]:
    """
    Federated training for ``config.rounds`` rounds, evaluated after every round.

    Partition, initial model, channel draws, local shuffles and receiver noise
    are keyed by (seed, I, round) but not by policy, so policies are compared
    on common random numbers.

    Args:
        params: System parameters (num_clients selects I)
        target: Privacy target
        config: Training hyperparameters
        policy: Power-scaling policy
        train: Training data, split IID among clients
        test: Held-out data for accuracy
        master_seed: Master seed
        dataset_name: Name written to each trace row
        symbol_sink: If given, each round's slot columns are appended to it

    Returns:
        One trace row per round
    """
    num_clients = params.num_clients
    clients = partition_iid(train, num_clients, child_rng(master_seed, "partition", num_clients))
    smallest = min(len(client) for client in clients)
    if config.batch_size > smallest:
        raise ScenarioError(
            [("batch_size", f"{config.batch_size} exceeds the smallest client dataset ({smallest} samples)")],
            source="training config",
        )

    model = model_for(train, config, child_rng(master_seed, "init"))
    ledger = PrivacyLedger()
    rows: list[TraceRow] = []

    for round_index in range(config.rounds):
        draw = _round_draw(params, model.dimension, child_rng(master_seed, "channel", num_clients, round_index))
        model, stats = fed_round(
            model,
            clients,
            params,
            target,
            policy,
            draw,
            child_rng(master_seed, "round", num_clients, round_index),
            config,
        )
        if not stats.clip_bound_ok:
            raise InvariantViolation(f"clipping bound violated: max |s| = {stats.max_symbol}")
        ledger.record(stats.rho, stats.num_slots)
        if symbol_sink is not None and stats.symbols is not None:
            symbol_sink.append(stats.symbols.symbols)

        row = TraceRow(
            round=round_index + 1,
            policy=policy,
            num_clients=num_clients,
            epsilon_target=target.epsilon,
            epsilon_achieved=ledger.epsilon(params, target),
            epsilon_worst_slot=stats.epsilon_worst_slot,
            rho=stats.mean_rho,
            snr_estimate=stats.snr_estimate,
            test_accuracy=evaluate(model, test),
            releases=ledger.releases,
            dataset=dataset_name,
        )
        rows.append(row)
        logger.info(
            f"[{policy.value} I={num_clients}] round {row.round}/{config.rounds}: acc={row.test_accuracy:.4f}, "
            f"rho={row.rho:.4g}, eps={row.epsilon_achieved:.4g}, releases={row.releases}"
        )

    return rows
