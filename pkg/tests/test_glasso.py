import numpy as np
import pytest

from mdlood.errors import ModelInvalidError
from mdlood.gaussian import DataBatch, empirical_covariance
from mdlood.glasso import GlassoSolution, graphical_lasso, kkt_residual

from conftest import glasso_objective, random_spd


class TestBasicSolutions:
    def test_diagonal_s_zero_penalty(self):
        S = np.diag([2.0, 0.5, 1.25])
        sol = graphical_lasso(S, 0.0)
        assert sol.converged
        assert np.abs(sol.precision - np.diag([0.5, 2.0, 0.8])).max() < 1e-10

    def test_large_penalty_gives_exact_diagonal(self, rng):
        for seed in range(5):
            r = np.random.default_rng(seed)
            S = random_spd(r, 6)
            lam = np.abs(S - np.diag(np.diag(S))).max()
            sol = graphical_lasso(S, lam + 1e-12)
            off = sol.precision - np.diag(np.diag(sol.precision))
            assert np.all(off == 0.0)
            assert np.abs(np.diag(sol.precision) - 1.0 / np.diag(S)).max() < 1e-8
            # certified by the optimality conditions
            assert kkt_residual(S, lam + 1e-12, sol) <= 1e-6

    def test_2x2_closed_form(self):
        S = np.array([[1.0, 0.5], [0.5, 1.0]])
        lam = 0.1
        sol = graphical_lasso(S, lam)
        # shrunk covariance off-diagonal: 0.5 - 0.1
        assert sol.covariance_estimate[0, 1] == pytest.approx(0.4, abs=1e-10)
        w = np.array([[1.0, 0.4], [0.4, 1.0]])
        expected = np.linalg.inv(w)
        assert np.abs(sol.precision - expected).max() < 1e-8

    def test_2x2_beats_grid_search(self):
        # oracle: directly maximize the penalized objective on a fine grid
        S = np.array([[1.0, 0.5], [0.5, 1.0]])
        lam = 0.1
        sol = graphical_lasso(S, lam)
        ours = glasso_objective(S, sol.precision, lam)
        best = -np.inf
        best_omega = None
        for a in np.linspace(0.9, 1.6, 71):
            for b in np.linspace(-0.8, 0.0, 81):
                omega = np.array([[a, b], [b, a]])
                val = glasso_objective(S, omega, lam)
                if val > best:
                    best, best_omega = val, omega
        assert ours >= best - 1e-6
        assert np.abs(sol.precision - best_omega).max() < 2e-2


class TestKktResidual:
    def test_zero_for_exact_identity(self):
        sol = GlassoSolution(
            lam=0.0, precision=np.eye(3), covariance_estimate=np.eye(3),
            iterations=0, converged=True, kkt=0.0,
        )
        assert kkt_residual(np.eye(3), 0.0, sol) == 0.0

    def test_converged_solution_below_tol(self, rng):
        S = random_spd(rng, 8)
        sol = graphical_lasso(S, 0.2, tol=1e-6)
        assert sol.converged
        assert kkt_residual(S, 0.2, sol) <= 1e-6

    def test_perturbation_increases_residual(self, rng):
        S = random_spd(rng, 5)
        sol = graphical_lasso(S, 0.15)
        base = kkt_residual(S, 0.15, sol)
        prec = sol.precision.copy()
        prec[0, 1] += 0.01
        prec[1, 0] += 0.01
        w = np.linalg.inv(prec)
        bumped = GlassoSolution(
            lam=0.15, precision=prec, covariance_estimate=w,
            iterations=sol.iterations, converged=False, kkt=np.nan,
        )
        assert kkt_residual(S, 0.15, bumped) > base


class TestProperties:
    def test_monotone_sparsity_in_penalty(self):
        grid = np.logspace(np.log10(0.1), np.log10(1.0), 20)
        for seed in range(5):
            r = np.random.default_rng(100 + seed)
            S = random_spd(r, 10)
            counts = []
            for lam in grid:
                sol = graphical_lasso(S, lam)
                assert sol.converged
                counts.append(int(np.count_nonzero(
                    np.abs(sol.precision) > 1e-8)) - 10)
            assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_objective_beats_diagonal(self, rng):
        S = random_spd(rng, 7)
        diag = np.diag(1.0 / np.diag(S))
        for lam in np.logspace(-1, 0, 20):
            sol = graphical_lasso(S, lam)
            assert glasso_objective(S, sol.precision, lam) >= \
                glasso_objective(S, diag, lam) - 1e-9

    def test_row_order_invariance(self, rng):
        x = rng.standard_normal((40, 6))
        perm = rng.permutation(40)
        s1 = empirical_covariance(DataBatch(x), assume_zero_mean=True)
        s2 = empirical_covariance(DataBatch(x[perm]), assume_zero_mean=True)
        a = graphical_lasso(s1, 0.3)
        b = graphical_lasso(s2, 0.3)
        assert np.abs(a.precision - b.precision).max() < 1e-8

    def test_precision_symmetric_pd(self, rng):
        for seed in range(5):
            r = np.random.default_rng(seed)
            S = random_spd(r, 9)
            sol = graphical_lasso(S, 0.25)
            assert np.array_equal(sol.precision, sol.precision.T)
            assert np.linalg.eigvalsh(sol.precision).min() > 0


class TestValidation:
    def test_rejects_asymmetric(self):
        with pytest.raises(ModelInvalidError):
            graphical_lasso(np.array([[1.0, 0.2], [0.3, 1.0]]), 0.1)

    def test_rejects_nonpositive_diagonal(self):
        with pytest.raises(ModelInvalidError):
            graphical_lasso(np.array([[1.0, 0.0], [0.0, 0.0]]), 0.1)

    def test_rejects_negative_penalty(self):
        with pytest.raises(ValueError):
            graphical_lasso(np.eye(2), -0.1)

    def test_iteration_limit_flags_not_raises(self, rng):
        S = random_spd(rng, 6)
        sol = graphical_lasso(S, 0.05, tol=1e-14, max_iter=1)
        assert isinstance(sol.converged, bool)

    def test_singular_s_with_penalty_converges(self):
        # perfectly correlated pair: S is singular but the penalized
        # problem still has a PD solution
        S = np.array([[1.0, 1.0], [1.0, 1.0]])
        sol = graphical_lasso(S, 0.2)
        assert sol.converged
        assert sol.covariance_estimate[0, 1] == pytest.approx(0.8, abs=1e-8)
        assert np.linalg.eigvalsh(sol.precision).min() > 0
