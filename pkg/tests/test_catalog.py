import numpy as np
import pytest

from minlab import catalog as C
from minlab.checks import residual_report
from minlab.immersion import intrinsic_curvature
from minlab.wdata import norms


def test_registry_and_unknown_names():
    assert {"cylinder", "scherk-h2", "screw-motion", "helicoid-e3", "catenoid-e3"} <= set(C.REGISTRY)
    assert C.get_entry("screw-motion", d=2.0).params == {"d": 2.0}
    with pytest.raises(KeyError, match="known entries"):
        C.get_entry("enneper")


@pytest.mark.parametrize("name", sorted(C.REGISTRY))
def test_entries_pass_default_residual_checks(name):
    rep = residual_report(C.get_entry(name).immersion(n=129))
    assert rep.passed, rep.summary()


@pytest.mark.parametrize("name", sorted(C.REGISTRY))
def test_analytic_derivatives_match_differences(name):
    e = C.get_entry(name)
    a, b = e.immersion(n=65), e.immersion(n=65, analytic=False)
    scale = np.abs(a.hfield.hw).max() + np.abs(a.hfield.hwb).max()
    assert norms(a.hfield.hw - b.hfield.hw, 3)[0] / scale < 1e-5
    assert norms(a.hfield.hwb - b.hfield.hwb, 3)[0] / scale < 1e-5


def test_screw_profile_quadrature_matches_closed_form():
    for d in (0.5, 1.0, 2.0):
        for s in (-0.8, 0.1, 0.9):
            lam, A = C._screw_profile(d, s)
            lam_c, A_c = C.screw_profile_closed_form(d, s)
            assert lam == pytest.approx(lam_c, abs=1e-10)
            assert A == pytest.approx(A_c, abs=1e-10)


def test_expected_curvature_is_met():
    for e in (C.cylinder(), C.screw_motion(0.5), C.equator_cylinder_s2(), C.plane_e3()):
        K = intrinsic_curvature(e.immersion(n=65))
        assert norms(K - e.expected_K)[0] < 1e-3


def test_scherk_height_is_the_closed_form_graph():
    imm = C.scherk_h2().immersion(n=65)
    z = C.half_plane(imm.h)
    assert np.abs(imm.f - C.scherk_closed_form(z.real, z.imag)).max() < 1e-12


def test_cylinder_sits_over_the_requested_geodesic():
    a, b = 0.4, 2.5
    h = C.cylinder(a, b).h(np.array([-40.0 + 0j, 40.0 + 0j]))
    ends = {complex(np.round(x, 9)) for x in h}
    assert ends == {complex(np.round(np.exp(1j * a), 9)), complex(np.round(np.exp(1j * b), 9))}
    with pytest.raises(ValueError):
        C.cylinder(1.0, 1.0)


def test_parameter_and_domain_guards():
    with pytest.raises(ValueError):
        C.screw_motion(0.0)
    with pytest.raises(ValueError):
        C.screw_motion(1.0).h(np.array([1.2 + 0j]))
    with pytest.raises(ValueError):
        C.scherk_h2().h(np.array([0.1 - 0.1j]))
    with pytest.raises(ValueError):
        C.sector_control_e3(eps=0.95, k=2.0)
    with pytest.raises(ValueError):
        C.helicoid_h2r(-1.0)


def test_hull_is_a_closed_convex_loop():
    from shapely.geometry import Polygon

    poly = Polygon(np.column_stack([C.scherk_hull().real, C.scherk_hull().imag]))
    assert poly.is_valid
    assert poly.convex_hull.area == pytest.approx(poly.area, rel=1e-9)
