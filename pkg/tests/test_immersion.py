from dataclasses import replace

import numpy as np
import pytest

from minlab import catalog as C
from minlab.errors import DegenerateMetric, PeriodDefect
from minlab.immersion import (gauss_map, integrate_height, intrinsic_curvature, metric_agreement,
                              normal_from_tangents, vertical_point_check)
from minlab.wdata import norms


@pytest.fixture(scope="module")
def screw():
    return C.screw_motion(1.0).immersion(n=65)


def test_gauss_map_is_unit_and_matches_tangents(screw):
    n = gauss_map(screw)
    assert np.allclose(np.linalg.norm(n, axis=0), 1.0)
    nt = normal_from_tangents(screw)
    assert np.abs(n - nt)[:, 2:-2, 2:-2].max() < 1e-6
    assert np.allclose(n[2], screw.N3)


def test_coordinate_frame_divides_by_sigma(screw):
    a, b = gauss_map(screw), gauss_map(screw, "coordinate")
    assert np.allclose(b[0] * screw.hfield.sigma, a[0])
    with pytest.raises(ValueError):
        gauss_map(screw, "polar")


def test_three_metrics_agree(screw):
    assert metric_agreement(screw) < 1e-6


def test_height_reintegrates_from_data(screw):
    f = integrate_height(screw.wf)
    ic, jc = screw.grid.center
    assert f[ic, jc] == 0.0
    assert norms(f - (screw.f - screw.f[ic, jc]), 0)[0] < 1e-8


def test_non_closed_eta_raises_period_defect(screw):
    u = screw.grid.w.real
    bent = replace(screw.wf, root=screw.wf.root * (1 + 0.2 * u))
    with pytest.raises(PeriodDefect):
        integrate_height(bent)


def test_cylinder_is_flat_with_horizontal_normal():
    cyl = C.cylinder().immersion(n=65)
    assert norms(intrinsic_curvature(cyl))[0] < 1e-6
    rep = vertical_point_check(cyl)
    assert rep.flagged[2:-2, 2:-2].all() and rep.passed


def test_vertical_point_check_needs_hyperbolic_base():
    with pytest.raises(ValueError):
        vertical_point_check(C.helicoid_e3().immersion(n=17))


def test_vanishing_metric_is_reported(screw):
    flat = replace(screw, lambda_sq=np.zeros_like(screw.lambda_sq))
    with pytest.raises(DegenerateMetric):
        intrinsic_curvature(flat)
