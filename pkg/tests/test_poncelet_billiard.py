import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fregier.conic_core import EllipseAxes, matrix_deviation
from fregier.errors import GeometryError, NotPeriodicError
from fregier.fregier_envelope import fit_envelope
from fregier.poncelet_billiard import (
    circle_picture,
    closure_defect,
    conjecture_scan,
    edge_residuals,
    find_caustic_for_period,
    invariant_sums,
    next_vertex,
    orbit,
    phase_report,
    radii_bound_check,
)
from fregier.trilinear_frame import build_frame, mandart_caustic, tri_conic_to_cart

PI = math.pi


def test_config_fields():
    cfg = circle_picture(2.0, 1.0, 0.3)
    assert cfg.R == 1.0
    assert cfg.a_c == pytest.approx(0.5 * math.sqrt(3.7))
    assert cfg.b_c == pytest.approx(math.sqrt(0.7))
    assert cfg.rho == pytest.approx(build_frame(2, 1).rho)
    with pytest.raises(GeometryError):
        circle_picture(2.0, 1.0, 1.0)


def test_three_periodic_caustic_is_the_squashed_mandart_conic():
    a, b = 2.0, 1.0
    frame = build_frame(a, b)
    lam = find_caustic_for_period(a, b, 3)
    cart = tri_conic_to_cart(frame, mandart_caustic(frame)[0])
    squash = np.diag([a / b, 1.0, 1.0])  # undoes (x, y) -> (x b / a, y)
    assert matrix_deviation(squash.T @ cart.m @ squash, circle_picture(a, b, lam).caustic) < 1e-9


def test_circle_billiard_triangle_is_equilateral():
    lam = find_caustic_for_period(1.0, 1.0, 3)
    assert lam == pytest.approx(0.75, abs=1e-12)
    orb = orbit(circle_picture(1.0, 1.0, lam), 0.4, 3)
    assert orb.angles == pytest.approx(np.full(3, PI / 3), abs=1e-9)
    assert invariant_sums(orb).sum_cos2 == pytest.approx(0.75, abs=1e-12)


def test_next_vertex_edge_is_tangent():
    cfg = circle_picture(2.0, 1.0, 0.4)
    P = np.array([cfg.R, 0.0])
    Q = next_vertex(cfg, P)
    assert np.hypot(*Q) == pytest.approx(cfg.R, abs=1e-12)
    assert math.atan2(Q[1], Q[0]) > 0
    assert next_vertex(cfg, P, orientation=-1)[1] < 0
    with pytest.raises(GeometryError):
        next_vertex(cfg, np.array([0.1, 0.0]))


def test_closure_defect_is_monotone_in_lambda():
    vals = [closure_defect(circle_picture(2.0, 1.0, lam), 3) for lam in np.linspace(0.05, 0.95, 10)]
    assert all(np.diff(vals) > 0)


@pytest.mark.parametrize("ab", [(2.0, 1.0), (1.5, 1.0), (1.2, 1.0), (3.0, 2.0)])
@pytest.mark.parametrize("n", [3, 4, 5, 7])
def test_orbits_close_and_stay_tangent(ab, n):
    cfg = circle_picture(*ab, find_caustic_for_period(*ab, n))
    for t in (0.0, 0.9, 2.2):
        orb = orbit(cfg, t, n)
        assert orb.closure_defect < 1e-9
        assert np.abs(np.hypot(orb.vertices[:, 0], orb.vertices[:, 1]) - cfg.R).max() < 1e-10 * cfg.R
        assert edge_residuals(orb).max() < 1e-9
        assert np.all((orb.angles > 0) & (orb.angles < PI))
        assert orb.radii == pytest.approx(cfg.R * np.abs(np.cos(orb.angles)))


def test_non_periodic_orbit_is_rejected():
    with pytest.raises(NotPeriodicError):
        orbit(circle_picture(2.0, 1.0, 0.3), 0.0, 5)


def test_period_three_needs_single_winding():
    with pytest.raises(GeometryError):
        find_caustic_for_period(2.0, 1.0, 2)


def test_fregier_circles_are_envelopes():
    """In the circle picture each vertex's chord envelope is the concentric
    circle of radius R |cos theta_i|."""
    cfg = circle_picture(2.0, 1.0, find_caustic_for_period(2.0, 1.0, 3))
    orb = orbit(cfg, 0.5, 3)
    circle = EllipseAxes((0.0, 0.0), cfg.R, cfg.R)
    for P, theta, r in zip(orb.vertices, orb.angles, orb.radii):
        env = fit_envelope(circle, P, theta)
        assert env.center == pytest.approx([0, 0], abs=1e-10)
        assert (env.axes.a, env.axes.b) == pytest.approx((r, r), abs=1e-10)


@pytest.mark.parametrize("ab", [(2.0, 1.0), (1.5, 1.0), (1.2, 1.0), (1.0, 1.0)])
def test_three_periodic_invariants(ab):
    rep = phase_report(*ab, 3, phases=32)
    rho = build_frame(*ab).rho
    b = ab[1]
    assert rep.sum_cos2 == pytest.approx(np.full(32, 1 - rho / 2), rel=1e-10)
    assert rep.sum_area == pytest.approx(np.full(32, PI * b * b * (1 - rho / 2)), rel=1e-10)
    assert rep.sum_diag2 == pytest.approx(np.full(32, 2 * b * b * (rho + 4)), rel=1e-10)
    assert rep.predicted_cos2 == pytest.approx(1 - rho / 2)


@given(st.floats(1.0, 4.0), st.floats(0, 2 * PI))
def test_radii_bound(ratio, start):
    cfg = circle_picture(ratio, 1.0, find_caustic_for_period(ratio, 1.0, 3))
    assert radii_bound_check(orbit(cfg, start, 3))


def test_radii_bound_only_for_triangles():
    cfg = circle_picture(2.0, 1.0, find_caustic_for_period(2.0, 1.0, 4))
    with pytest.raises(GeometryError):
        radii_bound_check(orbit(cfg, 0.0, 4))


@given(st.sampled_from([(2.0, 1.0), (1.5, 1.0), (3.0, 1.0)]), st.integers(3, 9), st.floats(0, 2 * PI))
def test_cos_and_diagonal_identity(ab, n, start):
    cfg = circle_picture(*ab, find_caustic_for_period(*ab, n))
    s = invariant_sums(orbit(cfg, start, n))
    assert s.sum_cos2 + s.sum_diag2 / (4 * cfg.R**2) == pytest.approx(n, abs=1e-10)


def test_four_periodic_orbits_are_rectangles():
    rep = phase_report(2.0, 1.0, 4, phases=16)
    assert np.abs(rep.sum_cos2).max() < 1e-12
    assert rep.spread < 1e-12


def test_conjecture_scan_reports_spreads():
    reports = conjecture_scan(2.0, 1.0, range(4, 9), phases=16)
    assert [r.n for r in reports] == [4, 5, 6, 7, 8]
    for r in reports:
        assert len(r.phases) == 16
        assert r.spread >= 0
        assert r.predicted_cos2 is None


def test_phase_count_floor():
    with pytest.raises(GeometryError):
        phase_report(2.0, 1.0, 3, phases=8)


def test_rho_limits():
    assert build_frame(1.0, 1.0).rho == 0.5
    assert build_frame(3e3, 1.0).rho < 2e-7
    assert build_frame(math.sqrt(3), 1.0).rho > 0.2
