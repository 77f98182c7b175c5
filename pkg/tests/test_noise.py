import numpy as np
import pytest
from scipy import stats

from logdiffusion.noise import NoiseSpec, alpha_ramp, sample_gaussian, sample_sas


def test_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(0.0)
    with pytest.raises(ValueError):
        NoiseSpec(2.5)
    with pytest.raises(ValueError):
        NoiseSpec(1.5, scale=0.0)


def test_sas_alpha2_variance():
    # exp(-t^2) is the characteristic function of N(0, 2)
    x = sample_sas(NoiseSpec(2.0, 1.0), np.random.default_rng(1), size=1_000_000)
    assert abs(np.var(x) - 2.0) < 0.03 * 2.0


def test_sas_cauchy_median():
    x = sample_sas(NoiseSpec(1.0, 1.0), np.random.default_rng(2), size=1_000_000)
    assert abs(np.median(x)) < 0.01
    # standard Cauchy quartiles are +/- 1
    assert np.quantile(x, 0.75) == pytest.approx(1.0, abs=0.01)


@pytest.mark.parametrize("alpha", [0.7, 1.0, 1.2, 1.5, 1.8, 2.0])
def test_sas_symmetric(alpha):
    x = sample_sas(NoiseSpec(alpha, 1.0), np.random.default_rng(3), size=100_000)
    assert stats.binomtest(int(np.sum(x > 0)), x.size, 0.5).pvalue > 0.01


@pytest.mark.parametrize("alpha, scale", [(1.5, 1.0), (1.2, 0.3)])
def test_sas_matches_scipy_levy_stable(alpha, scale):
    # independent reference: scipy's S1 parameterization exp(-|c t|^alpha), c = scale^(1/alpha)
    ours = sample_sas(NoiseSpec(alpha, scale), np.random.default_rng(4), size=20_000)
    ref = stats.levy_stable(alpha, 0.0, scale=scale ** (1 / alpha))
    assert stats.kstest(ours, ref.cdf).pvalue > 0.01


def test_sas_gaussian_agreement():
    rng = np.random.default_rng(5)
    a = sample_sas(NoiseSpec(2.0, 0.5), rng, size=100_000)
    b = sample_gaussian(1.0, rng, size=100_000)
    assert stats.ks_2samp(a, b).pvalue > 0.01


def test_sas_tail_monotone():
    rng = np.random.default_rng(6)
    q = {a: np.quantile(np.abs(sample_sas(NoiseSpec(a), rng, size=1_000_000)), 0.999)
         for a in (1.2, 1.8)}
    assert q[1.2] > q[1.8]


def test_sas_deterministic_and_scalar():
    a = sample_sas(NoiseSpec(1.4), np.random.default_rng(9), size=10)
    b = sample_sas(NoiseSpec(1.4), np.random.default_rng(9), size=10)
    assert a.tobytes() == b.tobytes()
    assert isinstance(sample_sas(NoiseSpec(1.4), np.random.default_rng(9)), float)


def test_gaussian_moments():
    x = sample_gaussian(1.0, np.random.default_rng(7), size=1_000_000)
    assert abs(x.mean()) < 0.01
    assert abs(x.var() - 1.0) < 0.02


def test_gaussian_deterministic():
    a = sample_gaussian(2.0, np.random.default_rng(8), size=100)
    b = sample_gaussian(2.0, np.random.default_rng(8), size=100)
    assert a.tobytes() == b.tobytes()
    with pytest.raises(ValueError):
        sample_gaussian(0.0, np.random.default_rng(8))


def test_alpha_ramp():
    r = alpha_ramp(20, 1.2, 1.8)
    assert r[0] == 1.2 and r[-1] == 1.8 and len(r) == 20
    assert all(a < b for a, b in zip(r, r[1:]))
    assert alpha_ramp(1, 1.2, 1.8) == (1.2,)
