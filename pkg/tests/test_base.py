import numpy as np
import pytest

from minlab.base import (EUCLIDEAN, HYPERBOLIC_DISK, SPHERE, AmbientIsometry, BaseIsometry, BaseManifold,
                         base_distance, check_chart, fit_isometry, grad_log_sigma, sigma)
from minlab.errors import DegenerateConfiguration, OutOfChart

ALL = (EUCLIDEAN, HYPERBOLIC_DISK, SPHERE)


def test_parse_aliases_and_curvature():
    assert BaseManifold.parse("h2") is HYPERBOLIC_DISK
    assert BaseManifold.parse("r2") is EUCLIDEAN
    assert BaseManifold.parse("sphere") is SPHERE
    assert [M.curvature for M in ALL] == [0.0, -1.0, 1.0]


def test_conformal_factors():
    z = np.array([0.0, 0.3 + 0.4j])
    assert np.allclose(sigma(EUCLIDEAN, z), 1.0)
    assert np.allclose(sigma(HYPERBOLIC_DISK, z), [2.0, 2.0 / 0.75])
    assert np.allclose(sigma(SPHERE, z), [2.0, 2.0 / 1.25])


@pytest.mark.parametrize("M", ALL)
def test_grad_log_sigma_matches_finite_differences(M):
    z = 0.21 - 0.37j
    e = 1e-6
    ls = lambda q: np.log(sigma(M, q))
    fd = (ls(z + e) - ls(z - e)) / (2 * e) + 1j * (ls(z + 1j * e) - ls(z - 1j * e)) / (2 * e)
    assert abs(grad_log_sigma(M, z) - fd) < 1e-8


def test_chart_violations():
    with pytest.raises(OutOfChart):
        check_chart(HYPERBOLIC_DISK, np.array([0.5, 1.0]))
    with pytest.raises(OutOfChart):
        check_chart(EUCLIDEAN, np.array([np.nan]))
    check_chart(EUCLIDEAN, np.array([10.0 + 3j]))


def test_hyperbolic_distance_closed_form():
    r = 0.6
    assert base_distance(HYPERBOLIC_DISK, 0.0, r) == pytest.approx(2 * np.arctanh(r), rel=1e-12)
    assert base_distance(SPHERE, 0.0, 1.0) == pytest.approx(np.pi / 2, rel=1e-12)


@pytest.mark.parametrize("M", ALL)
def test_distance_is_symmetric_and_triangular(M):
    rng = np.random.default_rng(1)
    a, b, c = 0.5 * (rng.uniform(-1, 1, 3) + 1j * rng.uniform(-1, 1, 3))
    assert base_distance(M, a, b) == pytest.approx(base_distance(M, b, a))
    assert base_distance(M, a, c) <= base_distance(M, a, b) + base_distance(M, b, c) + 1e-12


@pytest.mark.parametrize("M", ALL)
def test_isometries_preserve_metric_and_distance(M):
    z = 0.4 * np.exp(1j * np.linspace(0, 6, 13)) * np.linspace(0.1, 1, 13)
    for iso in (BaseIsometry.rotation(M, 0.7), BaseIsometry.translation(M, 0.3 - 0.2j, 1.1),
                BaseIsometry(M, BaseIsometry.translation(M, 0.1j).matrix, conjugate=True)):
        assert iso.preserves_metric(z)
        assert np.allclose(base_distance(M, iso(z[:-1]), iso(z[1:])), base_distance(M, z[:-1], z[1:]))


def test_ambient_isometry_moves_height():
    iso = AmbientIsometry(BaseIsometry.rotation(EUCLIDEAN, 0.0), vertical_shift=2.0, vertical_flip=-1)
    z, t = iso.apply(np.array([1 + 1j]), np.array([3.0]))
    assert z[0] == 1 + 1j and t[0] == -1.0


@pytest.mark.parametrize("M", ALL)
@pytest.mark.parametrize("reflect", [False, True])
def test_fit_isometry_recovers_known_motion(M, reflect):
    rng = np.random.default_rng(7)
    src = 0.5 * np.sqrt(rng.uniform(size=40)) * np.exp(2j * np.pi * rng.uniform(size=40))
    true = BaseIsometry.translation(M, 0.2 + 0.1j, 0.9)
    if reflect:
        true = BaseIsometry(M, true.matrix, conjugate=True)
    iso, res = fit_isometry(M, np.stack([src, true(src)]))
    assert res < 1e-10
    assert np.allclose(iso.base(src), true(src), atol=1e-10)


def test_fit_isometry_tolerates_noise():
    rng = np.random.default_rng(3)
    src = 0.5 * np.sqrt(rng.uniform(size=60)) * np.exp(2j * np.pi * rng.uniform(size=60))
    tgt = BaseIsometry.translation(HYPERBOLIC_DISK, -0.3, 2.0)(src) + 1e-6 * (rng.normal(size=60) + 1j * rng.normal(size=60))
    _, res = fit_isometry(HYPERBOLIC_DISK, np.stack([src, tgt]))
    assert res < 1e-5


def test_fit_isometry_rejects_collinear_samples():
    src = np.linspace(-0.5, 0.5, 20) + 0j
    with pytest.raises(DegenerateConfiguration):
        fit_isometry(HYPERBOLIC_DISK, np.stack([src, src]))
