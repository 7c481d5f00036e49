import numpy as np
import pytest

from uiuf.codes import CheckBasis, PauliOp, compute_syndrome

N_CRITERIA = 10
_CRITERIA: dict[int, list[tuple[str, str]]] = {}


def pytest_addoption(parser):
    parser.addoption(
        "--deep",
        action="store_true",
        default=False,
        help="run the full-size Monte Carlo and threshold jobs (hours)",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--deep"):
        return
    skip = pytest.mark.skip(reason="long-running job; run with --deep")
    for item in items:
        if "deep" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def criterion():
    """Record one acceptance verdict; printed in the terminal summary."""

    def record(number: int, passed: bool, detail: str) -> bool:
        _CRITERIA.setdefault(number, []).append(("PASS" if passed else "FAIL", detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    if not _CRITERIA:
        return
    missing = [("NOT RUN", "deselected" if config.getoption("--deep") else "long job; enable with --deep")]
    terminalreporter.section("acceptance criteria")
    for number in range(1, N_CRITERIA + 1):
        for verdict, detail in _CRITERIA.get(number, missing):
            terminalreporter.write_line(f"criterion {number:2d}: {verdict}  {detail}")


def random_pauli(rng: np.random.Generator, n: int, p: float) -> PauliOp:
    kind = rng.integers(1, 4, n) * (rng.random(n) < p)
    return PauliOp((kind & 1).astype(np.uint8), (kind >> 1).astype(np.uint8))


def syndromes(code, error):
    return compute_syndrome(code, error, CheckBasis.X), compute_syndrome(code, error, CheckBasis.Z)
