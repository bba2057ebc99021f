import math

import numpy as np
import pytest

from minlab import catalog as C
from minlab.analysis import (ParamCurve, _unwrap_checked, classify_tail, conformal_curvature,
                             entire_graph_criterion, geodesic_pullback, image_curvature,
                             is_geodesically_convex, krust_graph_check, projected_curvature,
                             total_curvature, turning_angle_difference)
from minlab.associate import AssociateParams, conjugate, make_associate
from minlab.base import EUCLIDEAN, HYPERBOLIC_DISK
from minlab.errors import BranchAmbiguity, InconclusiveTail, ZeroSpeed


@pytest.fixture(scope="module")
def scherk():
    return C.scherk_h2().immersion(n=129)


@pytest.fixture(scope="module")
def pulled(scherk):
    return geodesic_pullback(scherk, 0.2 + 0.7j, 1.4)


def test_curve_validation():
    with pytest.raises(ValueError):
        ParamCurve(np.arange(10) * 0.1 + 0j, np.zeros(9), 0.1)
    with pytest.raises(ValueError):
        ParamCurve(np.arange(4) * 0.1 + 0j, np.zeros(4), 0.1)
    with pytest.raises(ValueError):
        ParamCurve(np.arange(10) ** 2 * 0.1 + 0j, np.zeros(10), 0.1)


def test_resampled_curve_has_equal_chords():
    s = np.linspace(0, 1, 400)
    c = ParamCurve.through(0.3 * np.exp(1j * s) + 0.1, 0.01)
    assert np.allclose(np.abs(np.diff(c.w)), 0.01, atol=1e-9)
    assert 0.3 - 0.011 < c.length <= 0.3 + 1e-9


def test_conformal_curvature_of_circles():
    dt = 1e-3
    t = np.arange(0, 1.0, dt)
    r = 0.4
    z = r * np.exp(1j * t / r)
    assert np.allclose(conformal_curvature(EUCLIDEAN, z, dt)[3:-3], 1 / r, rtol=1e-8)
    # a circle of euclidean radius r about 0 in the disk has curvature (1 + r^2) / (2 r)
    assert np.allclose(conformal_curvature(HYPERBOLIC_DISK, z, dt)[3:-3], (1 + r * r) / (2 * r), rtol=1e-8)


def test_pulled_back_curve_projects_to_a_geodesic(scherk, pulled):
    assert pulled.w.size > 50
    assert np.abs(image_curvature(scherk, pulled)[3:-3]).max() < 1e-6
    assert np.abs(projected_curvature(scherk, pulled)[3:-3]).max() < 1e-5


def test_curvature_from_data_matches_member_image(scherk, pulled):
    m = make_associate(scherk, AssociateParams(0.8))
    k_data = projected_curvature(scherk, pulled, 0.8)
    k_image = image_curvature(m.imm, pulled)
    assert np.abs(k_data - k_image)[3:-3].max() < 1e-4
    assert np.abs(k_image).max() > 0.1


def test_total_curvature_is_the_turning_change(scherk, pulled):
    m = make_associate(scherk, AssociateParams(0.8))
    td = turning_angle_difference(scherk, pulled, 0.8)
    assert total_curvature(m.imm, pulled) == pytest.approx(td.delta[-1] - td.delta[0], abs=1e-4)
    assert td.tan_identity_residual < 1e-10
    assert td.within()


def test_zero_rotation_turns_nothing(scherk, pulled):
    td = turning_angle_difference(scherk, pulled, 0.0)
    assert np.abs(td.delta).max() < 1e-14


def test_flat_cylinder_and_band_model_curvatures():
    cyl = C.cylinder().immersion(n=65)
    across = ParamCurve.segment(-0.5 + 0.1j, 0.5 + 0.1j, cyl.grid.h / 2)
    assert np.abs(image_curvature(cyl, across)[3:-3]).max() < 1e-6
    Y = C.canonical_disk().immersion(n=65)
    # horizontal lines of the band are geodesics; vertical lines are equidistant curves
    assert np.abs(image_curvature(Y, across)[3:-3]).max() < 1e-5
    up = image_curvature(Y, ParamCurve.segment(0.2 - 0.5j, 0.2 + 0.5j, Y.grid.h / 2))[3:-3]
    assert up.min() > 0.2 and np.ptp(up) < 1e-4


def test_branch_jump_is_reported():
    a = np.zeros(10)
    a[5:] = 2.0
    with pytest.raises(BranchAmbiguity):
        _unwrap_checked(a)


def test_pullback_refuses_to_start_on_a_fold():
    cat = C.catenoid_e3().immersion(n=65)
    with pytest.raises(ZeroSpeed):
        geodesic_pullback(cat, 0.0 + 0.1j, 1.0)


@pytest.mark.parametrize("p, verdict", [(0.5, "finite"), (1.5, "divergent")])
def test_power_tails(p, verdict):
    t = np.linspace(0, 0.999, 400)
    kind, fitted, _ = classify_tail(t, (1 - t) ** -p, 1.0)
    assert kind == verdict and fitted == pytest.approx(p)


def test_log_corrected_tail_is_inconclusive():
    t = np.linspace(0, 0.999, 400)
    with pytest.raises(InconclusiveTail):
        classify_tail(t, 1 / ((1 - t) * np.log(1 / (1 - t) + 1) ** 2), 1.0)


def test_entire_graph_relations(scherk, pulled):
    rep, res = entire_graph_criterion(scherk, [pulled], conjugate(scherk), labels=["a"])
    assert rep.passed, rep.summary()
    assert res[0].lower_bound_gap >= 0
    assert res[0].length_conjugate == pytest.approx(res[0].length_conjugate_formula, rel=1e-4)


def test_geodesic_convexity():
    circle = 0.5 * np.exp(1j * np.linspace(0, 2 * np.pi, 200, endpoint=False))
    assert is_geodesically_convex(HYPERBOLIC_DISK, circle)
    ell = np.array([0, 0.5, 0.5 + 0.2j, 0.2 + 0.2j, 0.2 + 0.5j, 0.5j])
    assert not is_geodesically_convex(EUCLIDEAN, ell)


def test_graph_check_on_planes_and_wrapped_annuli():
    plane = C.plane_e3().immersion(n=33)
    assert krust_graph_check(plane).passed
    e = C.catenoid_e3()
    wrapped = e.immersion(grid=e.grid(33, (0.5, 1.0, -3.5, 3.5)))
    rep = krust_graph_check(wrapped)
    assert rep.local_ok and rep.n_collisions > 0


def test_graph_check_reports_nonconvex_control():
    ctrl = C.sector_control_e3().immersion(n=65)
    base = krust_graph_check(ctrl, base=ctrl)
    assert base.passed and base.domain_convex is False and base.hypothesis_ok is False
    member = make_associate(ctrl, AssociateParams(math.pi / 2))
    assert krust_graph_check(member, base=ctrl).n_collisions > 0
