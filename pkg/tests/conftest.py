import numpy as np
import pytest

from sparsecast.ingest import SensorSpec, SyntheticSpec, generate_synthetic

ACCEPTANCE_RESULTS = []


@pytest.fixture
def record():
    def _record(criterion, passed, detail):
        ACCEPTANCE_RESULTS.append((criterion, passed, detail))

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}")


def lag_coupled_spec(length=288):
    """Target = upstream delayed 2 steps + 5% noise; a third sensor is pure noise."""
    return SyntheticSpec(
        (
            SensorSpec("upstream", ar_coef=0.97, scale=8.0),
            SensorSpec("target", source="upstream", delay=2, noise=0.05),
            SensorSpec("noise", ar_coef=0.0, scale=8.0),
        ),
        length=length,
        target="target",
    )


@pytest.fixture
def lag_coupled():
    dataset, _ = generate_synthetic(lag_coupled_spec(), seed=7)
    return dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
