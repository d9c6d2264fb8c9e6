from pathlib import Path
from typing import Callable

import numpy as np
import pytest

from app.schemas.scenario import PrivacyTarget, Scenario, SystemParams
from app.services.scenario import parse_scenario

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

# Evaluation settings: G = 0 dBi, beta = -46 dB, alpha = 2, r = 100 m,
# sigma_n^2 = -60 dBm, P0 = 10 dBm, delta = 0.1, S = 5e-5
BETA = 10 ** (-4.6)
NOISE_POWER = 1e-9
P0 = 0.01


@pytest.fixture
def scenario() -> Scenario:
    """Scenario with every key at its default."""
    return parse_scenario({}, source="defaults")


@pytest.fixture
def params(scenario: Scenario) -> SystemParams:
    return scenario.params


@pytest.fixture
def target(scenario: Scenario) -> PrivacyTarget:
    return scenario.target


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def write_scenario(tmp_path: Path) -> Callable[..., Path]:
    """Write ``key = value`` lines to a scenario file and return its path."""

    def _write(name: str = "scenario.env", **values: object) -> Path:
        path = tmp_path / name
        path.write_text("".join(f"{key} = {value}\n" for key, value in values.items()))
        return path

    return _write


@pytest.fixture
def celery_eager():
    """Run Celery tasks in-process."""
    from app.celery_app import celery_app

    previous = (celery_app.conf.task_always_eager, celery_app.conf.task_eager_propagates)
    celery_app.conf.update(task_always_eager=True, task_eager_propagates=True)
    yield celery_app
    celery_app.conf.update(task_always_eager=previous[0], task_eager_propagates=previous[1])
