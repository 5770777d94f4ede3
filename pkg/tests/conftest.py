import numpy as np
import pytest

from mdlood.graphs import CIGraph


def random_spd(rng: np.random.Generator, d: int, n_factors: int = None) -> np.ndarray:
    """Well-conditioned random SPD matrix (sample covariance of a wide factor
    matrix, so eigenvalues stay O(1))."""
    n = n_factors if n_factors is not None else 3 * d
    a = rng.standard_normal((d, n))
    s = a @ a.T / n
    return (s + s.T) / 2.0


def random_graph(rng: np.random.Generator, d: int, density: float) -> CIGraph:
    iu, ju = np.triu_indices(d, k=1)
    mask = rng.random(iu.size) < density
    return CIGraph(d, frozenset(zip(iu[mask].tolist(), ju[mask].tolist())))


def glasso_objective(S: np.ndarray, omega: np.ndarray, lam: float) -> float:
    """The penalized log-likelihood being maximized (natural log; the
    off-diagonal l1 penalty matches the solver's convention)."""
    sign, logdet = np.linalg.slogdet(omega)
    if sign <= 0:
        return -np.inf
    off = np.abs(omega).sum() - np.abs(np.diag(omega)).sum()
    return logdet - float(np.sum(S * omega)) - lam * off


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
