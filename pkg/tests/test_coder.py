import math

import numpy as np
import pytest

from mdlood.coder import (
    CodelengthReport,
    TrainedDetector,
    scalar_iid_codelength,
    scalar_universal_codelength,
    scalar_universal_per_value,
    trained_codelength,
    universal_codelength,
)
from mdlood.errors import DimensionMismatchError, ModelInvalidError
from mdlood.gaussian import (
    DataBatch,
    GaussianModel,
    gaussian_codelength,
    sample_gaussian,
)
from mdlood.graphs import CIGraph
from mdlood.select import log_lambda_grid, predictive_mdl_codelength

from conftest import random_spd


def _normal_bits(v, mean, var):
    density = math.exp(-0.5 * (v - mean) ** 2 / var) / math.sqrt(2 * math.pi * var)
    return -math.log2(density)


def make_detector(m=3, n=5, residual_mean=0.1, residual_var=0.5, cov=None):
    cov = np.eye(m) if cov is None else cov
    return TrainedDetector(
        latent_model=GaussianModel(np.zeros(m), cov),
        residual_mean=residual_mean,
        residual_var=residual_var,
        data_dim=n,
        latent_dim=m,
    )


class TestTrainedDetector:
    def test_rejects_nonpositive_variance(self):
        with pytest.raises(ModelInvalidError):
            make_detector(residual_var=0.0)

    def test_rejects_latent_wider_than_data(self):
        with pytest.raises(DimensionMismatchError):
            make_detector(m=6, n=5)


class TestTrainedCodelength:
    def test_modes_closed_form(self):
        m, n, batch_rows = 3, 5, 4
        sigma2 = 0.5
        det = make_detector(m=m, n=n, residual_mean=0.1, residual_var=sigma2)
        latents = DataBatch(np.zeros((batch_rows, m)))
        residuals = DataBatch(np.full((batch_rows, n), 0.1))
        total, (l_lat, l_res) = trained_codelength(latents, residuals, det)
        assert l_lat == pytest.approx(batch_rows * m / 2 * math.log2(2 * math.pi), rel=1e-12)
        assert l_res == pytest.approx(
            batch_rows * n * 0.5 * math.log2(2 * math.pi * sigma2), rel=1e-12)
        assert total == l_lat + l_res

    def test_doubling_batch_doubles_l1(self, rng):
        det = make_detector()
        latents = rng.standard_normal((6, 3))
        residuals = rng.standard_normal((6, 5))
        one, _ = trained_codelength(DataBatch(latents), DataBatch(residuals), det)
        two, _ = trained_codelength(
            DataBatch(np.vstack([latents, latents])),
            DataBatch(np.vstack([residuals, residuals])), det)
        assert two == pytest.approx(2 * one, rel=1e-9)

    def test_matches_per_sample_oracle(self, rng):
        det = make_detector(cov=random_spd(rng, 3))
        latents = rng.standard_normal((8, 3))
        residuals = rng.standard_normal((8, 5))
        total, _ = trained_codelength(DataBatch(latents), DataBatch(residuals), det)
        expected = 0.0
        for i in range(8):
            expected += gaussian_codelength(DataBatch(latents[i:i + 1]), det.latent_model)
            for r in residuals[i]:
                expected += _normal_bits(r, det.residual_mean, det.residual_var)
        assert total == pytest.approx(expected, rel=1e-9)

    def test_row_permutation_invariant_bit_identical(self, rng):
        det = make_detector()
        latents = rng.standard_normal((10, 3))
        residuals = rng.standard_normal((10, 5))
        perm = rng.permutation(10)
        a, _ = trained_codelength(DataBatch(latents), DataBatch(residuals), det)
        b, _ = trained_codelength(DataBatch(latents[perm]), DataBatch(residuals[perm]), det)
        assert a == b

    def test_dimension_checks(self, rng):
        det = make_detector()
        with pytest.raises(DimensionMismatchError):
            trained_codelength(DataBatch(rng.standard_normal((4, 2))),
                               DataBatch(rng.standard_normal((4, 5))), det)
        with pytest.raises(DimensionMismatchError):
            trained_codelength(DataBatch(rng.standard_normal((4, 3))),
                               DataBatch(rng.standard_normal((3, 5))), det)


class TestScalarUniversal:
    def test_single_value_equals_default(self):
        v = 1.7
        assert scalar_universal_codelength([v]) == pytest.approx(
            _normal_bits(v, 0.0, 1.0), rel=1e-12)

    def test_first_two_values_use_default(self, rng):
        v = rng.standard_normal(2)
        bits = scalar_universal_per_value(v)
        assert bits[0] == pytest.approx(_normal_bits(v[0], 0, 1), rel=1e-12)
        assert bits[1] == pytest.approx(_normal_bits(v[1], 0, 1), rel=1e-12)

    def test_constant_sequence_stays_on_default(self):
        v = np.full(50, 3.25)
        bits = scalar_universal_per_value(v)
        expected = _normal_bits(3.25, 0.0, 1.0)
        assert np.abs(bits - expected).max() < 1e-12

    def test_matches_loop_oracle(self, rng):
        v = rng.standard_normal(30) * 2.0 + 0.5
        got = scalar_universal_per_value(v)
        expected = np.empty(30)
        for t in range(30):
            if t < 2:
                mean, var = 0.0, 1.0
            else:
                mean = float(np.mean(v[:t]))
                var = float(np.mean((v[:t] - mean) ** 2))
                if var < 1e-12:
                    mean, var = 0.0, 1.0
            expected[t] = _normal_bits(v[t], mean, var)
        assert np.abs(got - expected).max() < 1e-9

    def test_entropy_rate(self):
        rng = np.random.default_rng(77)
        v = rng.standard_normal(1000)
        per_value = scalar_universal_codelength(v) / 1000
        entropy = 0.5 * math.log2(2 * math.pi * math.e)
        assert abs(per_value - entropy) / entropy < 0.05

    def test_scale_equivariance(self, rng):
        v = rng.standard_normal(40)
        a, b = 3.0, -1.25
        base = scalar_universal_per_value(v, 0.0, 1.0)
        mapped = scalar_universal_per_value(a * v + b, a * 0.0 + b, a * a * 1.0)
        assert np.abs((mapped - base) - math.log2(a)).max() < 1e-9


class TestCodelengthReport:
    def test_breakdown_sums(self):
        r = CodelengthReport(1.0, 2.0, 3.0, 4.0, 5.0)
        assert r.l1_bits == pytest.approx(3.0, abs=1e-9)
        assert r.l2_bits == pytest.approx(12.0, abs=1e-9)
        assert r.score == pytest.approx(9.0, abs=1e-9)
        assert r.decision_at(-10.0) and not r.decision_at(0.0)


class TestUniversalCodelength:
    def test_minimal_batch_is_finite(self, rng):
        latents = DataBatch(rng.standard_normal((2, 4)))
        residuals = DataBatch(rng.standard_normal((2, 6)))
        total, parts, _ = universal_codelength(latents, residuals, log_lambda_grid())
        assert np.isfinite(total)
        assert total == pytest.approx(sum(parts), rel=1e-9)

    def test_in_distribution_pays_model_cost(self):
        # universal bits exceed trained bits on average for data drawn from
        # the trained model itself
        m_dim, n_dim, rows = 4, 6, 40
        cov = np.eye(m_dim)
        cov[0, 1] = cov[1, 0] = 0.5
        det = make_detector(m=m_dim, n=n_dim, residual_mean=0.0,
                            residual_var=1.0, cov=cov)
        grid = log_lambda_grid()
        scores = []
        for seed in range(100):
            r = np.random.default_rng(seed)
            latents = sample_gaussian(det.latent_model, rows, seed=seed)
            residuals = DataBatch(r.standard_normal((rows, n_dim)))
            l1, _ = trained_codelength(latents, residuals, det)
            l2, _, _ = universal_codelength(latents, residuals, grid)
            scores.append(l2 - l1)
        assert np.mean(scores) > 0

    def test_correlated_pair_edge_helps(self, rng):
        # a nearly duplicated coordinate: the selected graph keeps that edge
        # and predictive coding under it beats the empty graph
        rows, d = 80, 4
        x = rng.standard_normal((rows, d))
        x[:, 3] = x[:, 2] + 1e-3 * rng.standard_normal(rows)
        latents = DataBatch(x)
        _, _, sel = universal_codelength(latents, None, log_lambda_grid())
        assert (2, 3) in sel.graph.edges
        empty_bits = predictive_mdl_codelength(
            latents, CIGraph.empty(d), GaussianModel.standard(d), d + 1)
        assert sel.data_bits < empty_bits

    def test_row_permutation_small_effect_on_l2(self):
        # L2 is order-dependent (sequential coding); on iid data the change
        # from permuting rows stays within the Monte Carlo spread
        model = GaussianModel.standard(3)
        grid = log_lambda_grid()
        totals = []
        for seed in range(20):
            batch = sample_gaussian(model, 50, seed=seed)
            t, _, _ = universal_codelength(batch, None, grid)
            totals.append(t)
        spread = np.std(totals)
        base_batch = sample_gaussian(model, 50, seed=0)
        base, _, _ = universal_codelength(base_batch, None, grid)
        rng = np.random.default_rng(5)
        for _ in range(5):
            perm = rng.permutation(50)
            permuted = DataBatch(base_batch.values[perm])
            t, _, _ = universal_codelength(permuted, None, grid)
            assert abs(t - base) < 3 * spread


class TestScalarIid:
    def test_matches_density_oracle(self, rng):
        v = rng.standard_normal(12)
        got = scalar_iid_codelength(v, 0.3, 0.7)
        expected = sum(_normal_bits(x, 0.3, 0.7) for x in v)
        assert got == pytest.approx(expected, rel=1e-12)

    def test_rejects_bad_variance(self):
        with pytest.raises(ModelInvalidError):
            scalar_iid_codelength([1.0], 0.0, 0.0)
