import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from icovsynth.experiments import evaluate_case
from icovsynth.plants import GridFormingParams
from icovsynth.weights import table2_cases

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def reference_params():
    return GridFormingParams()


@pytest.fixture(scope="session")
def table2(reference_params):
    return {c.case_id: c for c in table2_cases(reference_params.frequencies())}


@pytest.fixture(scope="session")
def evaluations(reference_params, table2):
    """Every Table-II case synthesized, decomposed and simulated once per session."""
    return {cid: evaluate_case(reference_params, case) for cid, case in table2.items()}


_CRITERIA: dict[int, str] = {}


@pytest.fixture
def record_criterion():
    """Store the PASS/FAIL line of one acceptance criterion for the end-of-run summary."""

    def record(number: int, ok: bool, detail: str) -> None:
        _CRITERIA[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[k])
