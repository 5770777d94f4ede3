import math

import numpy as np
import pytest

from mdlood import _kernels
from mdlood.errors import ConvergenceError, ModelInvalidError, SelectionError
from mdlood.gaussian import DataBatch, GaussianModel, sample_gaussian
from mdlood.graphs import CIGraph
from mdlood.select import (
    SelectionConfig,
    completion_residual,
    dempster_completion,
    log_lambda_grid,
    predictive_mdl_codelength,
    predictive_per_sample,
    select_model,
)

from conftest import random_graph, random_spd


class TestDempsterCompletion:
    def test_complete_graph_returns_s(self, rng):
        S = random_spd(rng, 5)
        out = dempster_completion(S, CIGraph.complete(5))
        assert np.array_equal(out, S)

    def test_empty_graph_returns_diagonal(self, rng):
        S = random_spd(rng, 5)
        out = dempster_completion(S, CIGraph.empty(5))
        assert np.array_equal(out, np.diag(np.diag(S)))

    def test_chain_closed_form(self, rng):
        S = random_spd(rng, 3)
        g = CIGraph(3, frozenset({(0, 1), (1, 2)}))
        out = dempster_completion(S, g)
        # decomposable chain: the missing entry is S12*S23/S22
        assert out[0, 2] == pytest.approx(S[0, 1] * S[1, 2] / S[1, 1], rel=1e-9)
        assert completion_residual(out, S, g) <= 1e-7

    def test_both_conditions_random_instances(self):
        for seed in range(10):
            r = np.random.default_rng(seed)
            S = random_spd(r, 8)
            g = random_graph(r, 8, 0.3)
            out = dempster_completion(S, g)
            assert completion_residual(out, S, g) <= 1e-7

    def test_fixed_point(self, rng):
        S = random_spd(rng, 6)
        g = random_graph(rng, 6, 0.4)
        out = dempster_completion(S, g, tol=1e-9)
        again = out.copy()
        delta = _kernels.ggm_sweep(again, S, g.adjacency())
        assert delta <= 1e-9

    def test_iteration_limit_carries_best(self, rng):
        S = random_spd(rng, 10)
        g = random_graph(rng, 10, 0.4)
        with pytest.raises(ConvergenceError) as exc_info:
            dempster_completion(S, g, tol=1e-13, max_iter=1)
        err = exc_info.value
        assert err.best is not None and err.best.shape == (10, 10)
        assert err.residual > 1e-13

    def test_rejects_non_pd(self):
        g = CIGraph(2, frozenset({(0, 1)}))
        with pytest.raises(ModelInvalidError):
            dempster_completion(np.array([[1.0, 1.0], [1.0, 1.0]]), g)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ModelInvalidError):
            dempster_completion(random_spd(rng, 4), CIGraph.empty(3))


class TestPredictiveCodelength:
    def test_single_sample_equals_default(self, rng):
        d = 4
        default = GaussianModel(np.zeros(d), random_spd(rng, d))
        x = rng.standard_normal((1, d))
        batch = DataBatch(x)
        bits = predictive_mdl_codelength(batch, CIGraph.empty(d), default, warmup=1)
        from mdlood.gaussian import gaussian_codelength
        assert bits == pytest.approx(gaussian_codelength(batch, default), rel=1e-12)

    def test_entropy_rate_complete_graph(self):
        d = 3
        model = GaussianModel.standard(d)
        batch = sample_gaussian(model, 500, seed=42)
        bits = predictive_mdl_codelength(batch, CIGraph.complete(d), model, warmup=d + 1)
        per_sample = bits / 500
        entropy = 0.5 * d * math.log2(2 * math.pi * math.e)
        assert abs(per_sample - entropy) / entropy < 0.05

    def test_empty_graph_factorizes(self, rng):
        # oracle: an independent scalar plug-in implementation per coordinate
        d, m = 4, 60
        warmup = d + 1
        x = rng.standard_normal((m, d)) * np.array([0.5, 1.0, 2.0, 1.5])
        batch = DataBatch(x)
        got = predictive_per_sample(batch, CIGraph.empty(d), GaussianModel.standard(d), warmup)

        expected = np.zeros(m)
        for t in range(m):
            for c in range(d):
                if t < warmup:
                    var, mean = 1.0, 0.0
                else:
                    var = float(np.mean(x[:t, c] ** 2))
                    mean = 0.0
                expected[t] += 0.5 * math.log2(2 * math.pi * var) \
                    + (x[t, c] - mean) ** 2 / (2 * var * math.log(2))
        assert np.abs(got - expected).max() < 1e-9

    def test_warmup_defaults_then_model(self, rng):
        d = 3
        default = GaussianModel.standard(d)
        x = rng.standard_normal((20, d))
        batch = DataBatch(x)
        per = predictive_per_sample(batch, CIGraph.empty(d), default, warmup=d + 1)
        from mdlood.gaussian import gaussian_codelength_per_sample
        direct = gaussian_codelength_per_sample(batch, default)
        assert np.abs(per[:d + 1] - direct[:d + 1]).max() < 1e-9
        assert np.abs(per[d + 1:] - direct[d + 1:]).max() > 1e-6

    def test_universal_redundancy_nonnegative_asymptotically(self):
        d = 3
        cov = np.array([[1.0, 0.3, 0.0], [0.3, 1.0, -0.2], [0.0, -0.2, 1.0]])
        model = GaussianModel(np.zeros(d), cov)
        batch = sample_gaussian(model, 2000, seed=9)
        bits = predictive_mdl_codelength(batch, CIGraph.complete(d), model, warmup=d + 1)
        from mdlood.gaussian import gaussian_codelength
        known = gaussian_codelength(batch, model)
        # universal coding pays for the model; allow 3 standard errors of
        # slack for the finite-sample fluctuation of the difference
        slack = 3 * math.sqrt(d / 2.0) * math.log2(math.e)
        assert bits - known > -slack

    def test_deterministic(self, rng):
        d = 5
        batch = DataBatch(rng.standard_normal((40, d)))
        g = random_graph(rng, d, 0.4)
        default = GaussianModel.standard(d)
        a = predictive_per_sample(batch, g, default, d + 1)
        b = predictive_per_sample(batch, g, default, d + 1)
        assert np.array_equal(a, b)


class TestSelectModel:
    def test_iid_data_picks_near_empty_graph(self):
        model = GaussianModel.standard(10)
        batch = sample_gaussian(model, 500, seed=3)
        res = select_model(batch, log_lambda_grid())
        assert res.graph.edge_count <= 2

    def test_single_lambda_grid(self, rng):
        batch = DataBatch(rng.standard_normal((50, 4)))
        res = select_model(batch, [0.35])
        assert res.lambda_star == 0.35
        assert len(res.per_lambda_table) == 1

    def test_duplicated_grid_same_as_dedup(self, rng):
        batch = DataBatch(rng.standard_normal((60, 5)))
        a = select_model(batch, [0.2, 0.5, 0.9])
        b = select_model(batch, [0.2, 0.5, 0.2, 0.9, 0.5])
        assert a.lambda_star == b.lambda_star
        assert a.graph == b.graph
        assert a.total_bits == b.total_bits

    def test_reported_minimum_matches_table(self, rng):
        batch = DataBatch(rng.standard_normal((80, 6)))
        res = select_model(batch, log_lambda_grid())
        totals = [gb + db for _, gb, db in res.per_lambda_table]
        assert res.total_bits == pytest.approx(min(totals), rel=1e-12)
        assert all(res.total_bits <= t + 1e-12 for t in totals)

    def test_tie_breaks_to_larger_lambda(self, rng):
        # two penalties large enough to give the same (empty) graph produce
        # identical costs; the sparser-model tie-break keeps the larger one
        batch = DataBatch(rng.standard_normal((50, 4)))
        res = select_model(batch, [2.0, 3.0])
        assert res.lambda_star == 3.0

    def test_empty_grid_fails(self, rng):
        with pytest.raises(SelectionError):
            select_model(DataBatch(rng.standard_normal((10, 3))), [])

    def test_all_nonconverged_fails(self, rng):
        batch = DataBatch(rng.standard_normal((30, 4)))
        cfg = SelectionConfig(glasso_max_iter=0)
        with pytest.raises(SelectionError):
            select_model(batch, [0.2, 0.4], cfg)

    def test_completed_covariance_matches_selected_graph(self, rng):
        batch = DataBatch(rng.standard_normal((100, 5)))
        res = select_model(batch, log_lambda_grid())
        assert res.completed_covariance is not None
        from mdlood.gaussian import empirical_covariance
        S = empirical_covariance(batch, assume_zero_mean=True)
        assert completion_residual(res.completed_covariance, S, res.graph) <= 1e-7

    def test_grid_constructor(self):
        grid = log_lambda_grid()
        assert len(grid) == 20
        assert grid[0] == pytest.approx(0.1)
        assert grid[-1] == pytest.approx(1.0)
        assert np.allclose(np.diff(np.log(grid)), np.diff(np.log(grid))[0])
