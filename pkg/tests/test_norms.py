import numpy as np
import pytest
from scipy import stats

from kng.norms import KNormNoiseParams, NormKind, norm, sample_knorm_noise


def test_norm_known_values():
    v = np.array([3.0, -4.0])
    assert norm(v, "l1") == 7.0
    assert norm(v, "l2") == 5.0
    assert norm(v, "linf") == 4.0


def test_norm_stacked_rows():
    v = np.array([[3.0, -4.0], [0.0, 1.0], [-2.0, 2.0]])
    np.testing.assert_allclose(norm(v, NormKind.L2), [5.0, 1.0, np.sqrt(8.0)])
    assert norm(v[None], "linf").shape == (1, 3)


@pytest.mark.parametrize("bad", [np.array([]), np.float64(1.0), np.zeros((3, 0))])
def test_norm_rejects_empty(bad):
    with pytest.raises(ValueError):
        norm(bad)


def test_parse_aliases():
    assert NormKind.parse("inf") is NormKind.LINF
    assert NormKind.parse("L2") is NormKind.L2
    assert NormKind.parse(NormKind.L1) is NormKind.L1
    with pytest.raises(ValueError):
        NormKind.parse("l3")


@pytest.mark.parametrize("kw", [dict(dim=0), dict(dim=1.5), dict(rate=0.0), dict(rate=np.inf)])
def test_params_validation(kw):
    base = dict(dim=2, kind="l2", rate=1.0)
    base.update(kw)
    with pytest.raises(ValueError):
        KNormNoiseParams(**base)


def test_sample_requires_params():
    with pytest.raises(TypeError):
        sample_knorm_noise((2, "l2", 1.0), np.random.default_rng(0))


@pytest.mark.parametrize("kind", list(NormKind))
def test_shapes_and_reproducibility(kind):
    p = KNormNoiseParams(3, kind, 2.0)
    assert sample_knorm_noise(p, np.random.default_rng(1)).shape == (3,)
    a = sample_knorm_noise(p, np.random.default_rng(1), size=5)
    b = sample_knorm_noise(p, np.random.default_rng(1), size=5)
    assert a.shape == (5, 3)
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("kind", list(NormKind))
@pytest.mark.parametrize("dim", [1, 3])
def test_radius_is_gamma(kind, dim):
    # ||b|| must be Gamma(dim, rate) whatever the direction law
    rate = 3.0
    b = sample_knorm_noise(KNormNoiseParams(dim, kind, rate), np.random.default_rng(7), size=20000)
    r = norm(b, kind)
    res = stats.kstest(r, stats.gamma(a=dim, scale=1.0 / rate).cdf)
    assert res.pvalue > 1e-3


@pytest.mark.parametrize("kind", list(NormKind))
def test_one_dimensional_noise_is_laplace(kind):
    b = sample_knorm_noise(KNormNoiseParams(1, kind, 2.0), np.random.default_rng(3), size=20000)
    res = stats.kstest(b[:, 0], stats.laplace(scale=0.5).cdf)
    assert res.pvalue > 1e-3


def test_l2_directions_are_isotropic():
    b = sample_knorm_noise(KNormNoiseParams(2, "l2", 1.0), np.random.default_rng(11), size=20000)
    angle = np.arctan2(b[:, 1], b[:, 0])
    assert stats.kstest(angle, stats.uniform(-np.pi, 2 * np.pi).cdf).pvalue > 1e-3


def test_linf_density_level_sets():
    # under exp(-c max|b_j|) the coordinate carrying the max is uniform over j,
    # and given ||b||_inf = R the other coordinates are uniform on [-R, R]
    b = sample_knorm_noise(KNormNoiseParams(3, "linf", 1.0), np.random.default_rng(5), size=30000)
    a = np.abs(b)
    arg = a.argmax(axis=1)
    counts = np.bincount(arg, minlength=3)
    assert stats.chisquare(counts).pvalue > 1e-3
    ratio = np.sort(a, axis=1)[:, 0] / a.max(axis=1)
    # min of two U(0,1) has cdf 1 - (1 - u)^2
    assert stats.kstest(ratio, lambda u: 1 - (1 - u) ** 2).pvalue > 1e-3


def test_l1_density_matches_exact_marginal():
    # for exp(-c ||b||_1) the coordinates are iid Laplace(1/c)
    b = sample_knorm_noise(KNormNoiseParams(3, "l1", 2.0), np.random.default_rng(9), size=20000)
    for j in range(3):
        assert stats.kstest(b[:, j], stats.laplace(scale=0.5).cdf).pvalue > 1e-3
    assert abs(np.corrcoef(np.abs(b[:, 0]), np.abs(b[:, 1]))[0, 1]) < 0.03
