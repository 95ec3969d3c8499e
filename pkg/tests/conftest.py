import numpy as np
import pytest
from hypothesis import settings

from qsync.fock import DensityMatrix, FockSpace

settings.register_profile("qsync", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("qsync")


def random_dm(space: FockSpace, seed: int, rank: int | None = None) -> DensityMatrix:
    rng = np.random.default_rng(seed)
    d = space.dim
    k = rank or d
    G = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    m = G @ G.conj().T
    return DensityMatrix(space, m / np.trace(m))


def random_hermitian(d: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return A + A.conj().T


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one PASS/FAIL line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
