import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from fracpath.fbm import (
    CHOLESKY_CAP,
    FbmConfig,
    Method,
    SampledPath,
    SamplerError,
    covariance_matrix,
    fbm_covariance,
    increment_autocovariance,
    sample_cholesky,
    sample_circulant,
    sample_paths,
)

HURSTS = (0.3, 0.5, 0.75, 0.9)


class TestCovariance:
    @pytest.mark.parametrize(
        "s, t, hurst, expected",
        [(1, 1, 0.75, 1.0), (1, 2, 0.5, 1.0), (0, 5, 0.3, 0.0)],
    )
    def test_examples(self, s, t, hurst, expected):
        assert fbm_covariance(s, t, hurst) == expected

    @given(
        st.floats(0, 50, allow_nan=False),
        st.floats(0, 50, allow_nan=False),
        st.floats(0.01, 0.99),
    )
    def test_symmetric(self, s, t, hurst):
        assert fbm_covariance(s, t, hurst) == fbm_covariance(t, s, hurst)

    @given(st.floats(0, 20), st.floats(0.01, 0.99))
    def test_variance_is_t_to_2h(self, t, hurst):
        assert math.isclose(fbm_covariance(t, t, hurst), t ** (2 * hurst), rel_tol=1e-12, abs_tol=1e-300)

    @given(st.floats(0, 10), st.floats(0, 10))
    def test_brownian_case_is_min(self, s, t):
        assert math.isclose(fbm_covariance(s, t, 0.5), min(s, t), rel_tol=1e-12, abs_tol=1e-12)

    @pytest.mark.parametrize("s, t, hurst", [(-1, 1, 0.5), (1, -0.1, 0.5), (1, 1, 0.0), (1, 1, 1.0), (1, 1, 1.5)])
    def test_domain_errors(self, s, t, hurst):
        with pytest.raises(ValueError):
            fbm_covariance(s, t, hurst)

    def test_broadcasts(self):
        t = np.linspace(0, 1, 5)
        out = fbm_covariance(t[:, None], t[None, :], 0.7)
        assert out.shape == (5, 5)
        np.testing.assert_allclose(out, out.T)

    def test_increment_autocovariance_unit_lag_zero(self):
        assert increment_autocovariance(0.8, [0])[0] == pytest.approx(1.0)
        np.testing.assert_allclose(increment_autocovariance(0.5, np.arange(1, 6)), 0.0, atol=1e-14)


class TestConfig:
    @pytest.mark.parametrize(
        "kw", [{"hurst": 0.0}, {"hurst": 1.0}, {"horizon": 0.0}, {"steps": 0}, {"seed": -1}, {"method": "euler"}]
    )
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            FbmConfig(**kw)

    def test_times(self):
        cfg = FbmConfig(steps=4, horizon=2.0)
        np.testing.assert_array_equal(cfg.times, [0, 0.5, 1.0, 1.5, 2.0])

    def test_sampled_path_is_read_only(self):
        p = SampledPath([0.0, 1.0], [0.0, 2.0])
        with pytest.raises(ValueError):
            p.values[0] = 1.0

    @pytest.mark.parametrize("times", [[1.0, 2.0], [0.0, 0.0], [0.0, 2.0, 1.0]])
    def test_sampled_path_validates(self, times):
        with pytest.raises(ValueError):
            SampledPath(times, np.zeros(len(times)))


class TestSamplers:
    @pytest.mark.parametrize("method", list(Method))
    def test_deterministic(self, method):
        cfg = FbmConfig(hurst=0.7, steps=64, seed=11, method=method)
        a = sample_paths(cfg, 0, 3)
        b = sample_paths(cfg, 0, 3)
        assert a.tobytes() == b.tobytes()

    @pytest.mark.parametrize("method", list(Method))
    def test_replica_independent_of_chunking(self, method):
        cfg = FbmConfig(hurst=0.65, steps=32, seed=5, method=method)
        block = sample_paths(cfg, 0, 6)
        for i in range(6):
            np.testing.assert_array_equal(sample_paths(cfg, i, 1)[0], block[i])

    def test_single_path_api(self):
        cfg = FbmConfig(hurst=0.75, steps=16, seed=3)
        for sampler in (sample_cholesky, sample_circulant):
            p = sampler(cfg)
            assert len(p) == 17 and p.values[0] == 0.0 and p.horizon == 1.0

    def test_cholesky_cap(self):
        with pytest.raises(SamplerError, match="capped"):
            sample_cholesky(FbmConfig(steps=CHOLESKY_CAP + 1))

    def test_circulant_negative_eigenvalue_diagnostic(self):
        # a negative tolerance turns exact zero eigenvalues into failures
        with pytest.raises(SamplerError, match="eigenvalue"):
            sample_circulant(FbmConfig(hurst=0.75, steps=8), eig_tol=-1.0)

    def test_steps_one_variance(self):
        # steps=1: B_{t_1} ~ N(0, t_1^{2H})
        cfg = FbmConfig(hurst=0.3, horizon=0.5, steps=1, seed=1, method=Method.CHOLESKY)
        x = sample_paths(cfg, 0, 100_000)[:, 1]
        target = 0.5 ** 0.6
        var = x.var(ddof=1)
        se = target * math.sqrt(2.0 / (x.size - 1))
        assert abs(var - target) <= 4 * se

    def test_brownian_increments_uncorrelated(self):
        cfg = FbmConfig(hurst=0.5, steps=8, seed=2, method=Method.CHOLESKY)
        d = np.diff(sample_paths(cfg, 0, 100_000), axis=1)
        r = np.corrcoef(d[:, 3], d[:, 4])[0, 1]
        assert abs(r) <= 4 / math.sqrt(d.shape[0])

    def test_brownian_qv_mean(self):
        cfg = FbmConfig(hurst=0.5, steps=256, seed=4)
        qv = np.sum(np.diff(sample_paths(cfg, 0, 1000), axis=1) ** 2, axis=1)
        assert abs(qv.mean() - 1.0) <= 4 * qv.std(ddof=1) / math.sqrt(qv.size)

    @pytest.mark.parametrize("hurst", HURSTS)
    @pytest.mark.parametrize("method", list(Method))
    def test_covariance_matrix_within_4se(self, hurst, method):
        cfg = FbmConfig(hurst=hurst, steps=8, seed=9, method=method)
        x = sample_paths(cfg, 0, 100_000)[:, 1:]
        n = x.shape[0]
        emp = x.T @ x / n
        cov = covariance_matrix(hurst, 1.0, 8)
        # var of X_i X_j for a centred Gaussian pair
        se = np.sqrt((np.outer(np.diag(cov), np.diag(cov)) + cov**2) / n)
        assert np.all(np.abs(emp - cov) <= 4 * se)

    @pytest.mark.parametrize("lag_offsets", [(0, 3, 6)])
    def test_stationary_increments(self, lag_offsets):
        cfg = FbmConfig(hurst=0.75, steps=16, seed=8)
        x = sample_paths(cfg, 0, 50_000)
        delta = 2
        target = (delta / 16) ** 1.5
        for k in lag_offsets:
            inc = x[:, k + delta] - x[:, k]
            se = target * math.sqrt(2.0 / (inc.size - 1))
            assert abs(inc.var(ddof=1) - target) <= 4 * se

    def test_ks_circulant_vs_cholesky(self):
        n = 10_000
        chol = sample_paths(FbmConfig(0.75, 1.0, 512, seed=1, method=Method.CHOLESKY), 0, n)[:, -1]
        circ = sample_paths(FbmConfig(0.75, 1.0, 512, seed=2, method=Method.CIRCULANT), 0, n)[:, -1]
        assert stats.ks_2samp(chol, circ).pvalue > 0.01

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.05, 0.95), st.integers(1, 64))
    def test_starts_at_zero(self, hurst, steps):
        p = sample_circulant(FbmConfig(hurst=hurst, steps=steps, seed=1))
        assert p.values[0] == 0.0 and np.all(np.isfinite(p.values))
