import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from fregier.conic_core import (
    EllipseAxes,
    angle_at,
    circle_conic,
    conic_from_points,
    conic_intersection,
    ellipse_metrics,
    hpoint,
    join,
    matrix_deviation,
    point_residual,
)
from fregier.errors import DegenerateSampleError, GeometryError, InfiniteSolutionsError, SamplingFailure
from fregier.fregier_envelope import (
    _circumcircle,
    area_ratio_sq,
    axes_from_area_and_KM,
    center_locus,
    chord_at,
    chord_directions,
    fit_envelope,
    fregier_point,
    inscribed_special_check,
    orthoptic_check,
    reverse_problem,
    tangent_angle,
    tangent_contacts,
)
from fregier.trilinear_frame import build_frame

PI = math.pi
E21 = EllipseAxes((0.0, 0.0), 2.0, 1.0)
UNIT = EllipseAxes((0.0, 0.0), 1.0, 1.0)

ellipses = st.builds(lambda b, r: EllipseAxes((0.0, 0.0), b * r, b), st.floats(0.3, 3.0), st.floats(1.0, 3.0))
params = st.floats(0, 2 * PI)
angles = st.floats(0.2, PI - 0.2).filter(lambda t: abs(t - PI / 2) > 0.05)


def fregier_oracle(E, M):
    """Classical closed form for an axis-aligned centered ellipse."""
    k = (E.a**2 - E.b**2) / (E.a**2 + E.b**2)
    return k * np.array([M[0], -M[1]])


def chord_line(E, M, theta, phi):
    """Chord whose MN direction is phi from the tangent at M, built from scratch."""
    Mx, My = M
    tx, ty = -E.a * math.sin(E.param_of(M)), E.b * math.cos(E.param_of(M))
    base = math.atan2(ty, tx)

    def hit(direction):
        d = np.array([math.cos(direction), math.sin(direction)])
        qa = (d[0] / E.a) ** 2 + (d[1] / E.b) ** 2
        qb = 2 * (Mx * d[0] / E.a**2 + My * d[1] / E.b**2)
        return np.array([Mx, My]) - qb / qa * d

    N, L = hit(base + phi), hit(base + phi + theta)
    l = join(N, L)
    return l / np.linalg.norm(l[:2])


def envelope_arc_area(E, M, theta, count=40, step=1e-6):
    """Area of E' from characteristic points l(p - s) x l(p + s) of the chord
    family, fitted in point form (independent of the line-form fit)."""
    pts = []
    for phi in 0.02 + (PI - theta - 0.04) * np.arange(count) / (count - 1):
        p = np.cross(chord_line(E, M, theta, phi - step), chord_line(E, M, theta, phi + step))
        pts.append(hpoint(*(p[:2] / p[2])))
    return ellipse_metrics(conic_from_points(pts)).area


# ---- chords ---------------------------------------------------------------


def test_right_angle_chords_of_circle_are_diameters():
    ch = chord_at(UNIT, (1.0, 0.0), PI / 2, PI / 2)
    assert abs(ch.line[2]) / np.linalg.norm(ch.line[:2]) < 1e-12


@given(params, params, st.floats(0.2, PI - 0.2))
def test_circle_chords_at_fixed_distance(tm, tn, theta):
    M = UNIT.point(tm)
    assume(abs(math.remainder(tn - tm, 2 * PI)) > 1e-3)
    try:
        ch = chord_at(UNIT, M, theta, tn)
    except DegenerateSampleError:
        assume(False)
    assert abs(ch.line[2]) / np.linalg.norm(ch.line[:2]) == pytest.approx(abs(math.cos(theta)), abs=1e-12)


def test_chord_angle_on_ellipse():
    M = E21.point(0.7)
    ch = chord_at(E21, M, PI / 3, 2.0)
    assert angle_at(M, ch.N, ch.L) == pytest.approx(PI / 3, abs=1e-12)
    with pytest.raises(DegenerateSampleError):
        chord_at(E21, M, PI / 3, 0.7)


def test_chord_directions_are_cell_centered():
    d = chord_directions(PI / 3, 4)
    assert d == pytest.approx((np.arange(4) + 0.5) * (2 * PI / 3) / 4)


# ---- envelope fit ---------------------------------------------------------


def test_unit_circle_envelope_is_half_radius_circle():
    env = fit_envelope(UNIT, UNIT.point(1.1), PI / 3)
    assert env.classification == "ellipse"
    assert env.center == pytest.approx([0, 0], abs=1e-12)
    assert (env.axes.a, env.axes.b) == pytest.approx((0.5, 0.5), abs=1e-12)
    assert env.residual_max < 1e-12


def test_residuals_are_small_on_held_out_chords():
    env = fit_envelope(E21, E21.point(0.7), PI / 3)
    assert env.residual_max < 1e-8
    assert len(env.chords) == 48


def test_too_few_samples():
    with pytest.raises(SamplingFailure):
        fit_envelope(E21, E21.point(0.7), PI / 3, samples=10)
    with pytest.raises(GeometryError):
        fit_envelope(E21, E21.point(0.7), 0.0)


@pytest.mark.parametrize("t", [0.0, 0.7, 1.9, 3.3, 5.0])
def test_right_angle_gives_fregier_point(t):
    M = E21.point(t)
    env = fit_envelope(E21, M, PI / 2)
    assert env.classification == "point"
    assert env.center == pytest.approx(fregier_oracle(E21, M), abs=1e-8)
    assert fregier_point(E21, M) == pytest.approx(fregier_oracle(E21, M), abs=1e-9)


def test_fregier_point_examples():
    assert fregier_point(UNIT, (1.0, 0.0)) == pytest.approx([0, 0], abs=1e-12)
    assert fregier_point(E21, (2.0, 0.0))[1] == pytest.approx(0, abs=1e-12)


@given(ellipses, params, angles)
def test_supplementary_angles_give_same_envelope(E, t, theta):
    M = E.point(t)
    assert matrix_deviation(fit_envelope(E, M, theta).conic, fit_envelope(E, M, PI - theta).conic) < 1e-8


@given(ellipses, params, angles)
def test_tangent_angle_invariant(E, t, theta):
    env = fit_envelope(E, E.point(t), theta)
    assert tangent_angle(env) == pytest.approx(abs(PI - 2 * theta), abs=1e-9)


def test_tangent_angle_examples():
    assert tangent_angle(fit_envelope(E21, E21.point(0.3), PI / 4)) == pytest.approx(PI / 2, abs=1e-9)
    assert tangent_angle(fit_envelope(E21, E21.point(0.3), PI / 3)) == pytest.approx(PI / 3, abs=1e-9)
    assert tangent_angle(fit_envelope(UNIT, UNIT.point(0.3), PI / 3)) == pytest.approx(PI / 3, abs=1e-12)


def test_tangent_contacts_lie_on_envelope():
    env = fit_envelope(E21, E21.point(0.7), PI / 3)
    for T in tangent_contacts(env):
        assert point_residual(env.point_conic, hpoint(*T)) < 1e-10


def test_near_right_angle_degeneration():
    M = E21.point(0.7)
    env = fit_envelope(E21, M, PI / 2 + 1e-4)
    assert np.hypot(*(env.center - fregier_oracle(E21, M))) < 1e-6
    assert env.axes.a < 1e-3
    assert tangent_angle(env) == pytest.approx(2e-4, rel=1e-6)


# ---- area -----------------------------------------------------------------


def test_area_ratio_formula_examples():
    for theta in (0.3, 1.0, 2.0):
        assert area_ratio_sq(0.5, theta) == pytest.approx(math.cos(theta) ** 2, rel=1e-14)
    assert area_ratio_sq(0.2, PI / 2) == pytest.approx(0.0, abs=1e-30)
    for rho in (0.05, 0.2, 0.5):
        closed = 16 * rho**3 * (rho + 4) ** 3 / (4 * rho**2 + 10 * rho + 3) ** 3
        assert area_ratio_sq(rho, PI / 3) == pytest.approx(closed, rel=1e-13)


def test_rho_vanishes_for_flat_ellipses():
    rhos = [build_frame(r, 1.0).rho for r in (1.0, 3**0.5, 10.0, 1e3)]
    assert rhos[0] == 0.5
    assert rhos == sorted(rhos, reverse=True)
    assert rhos[1] > 0.1
    assert rhos[-1] < 1e-5


@given(params, st.sampled_from([PI / 6, PI / 4, PI / 3, 1.2]))
def test_area_is_independent_of_M(t, theta):
    ref = fit_envelope(E21, E21.point(0.1), theta).area
    assert fit_envelope(E21, E21.point(t), theta).area == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("ab", [(2.0, 1.0), (3.0, 1.5), (1.0, 1.0), (1.3, 1.0)])
@pytest.mark.parametrize("theta", [PI / 6, PI / 3, 1.2, 2.0])
def test_measured_area_ratio(ab, theta):
    """Independent oracle: the ratio is sqrt(k^2) |cos theta|, not sqrt(k^2)."""
    E = EllipseAxes((0.0, 0.0), *ab)
    M = E.point(0.7)
    oracle = envelope_arc_area(E, M, theta)
    fitted = fit_envelope(E, M, theta).area
    assert fitted == pytest.approx(oracle, rel=1e-9)
    k = math.sqrt(area_ratio_sq(build_frame(*ab).rho, theta))
    assert fitted / E.area == pytest.approx(k * abs(math.cos(theta)), rel=1e-9)


# ---- locus ----------------------------------------------------------------


def test_center_locus_is_concentric_ellipse():
    rep = center_locus(E21, PI / 3)
    assert rep.classification == "ellipse"
    assert rep.center_offset < 1e-7 * E21.b
    assert not rep.point_locus and not rep.fregier_limit


def test_center_locus_circle_is_a_point():
    rep = center_locus(UNIT, PI / 3)
    assert rep.point_locus and rep.classification == "point"
    assert rep.center_offset < 1e-12


def test_fregier_point_locus():
    rep = center_locus(E21, PI / 2)
    assert rep.fregier_limit
    assert rep.classification == "ellipse"
    assert rep.center_offset < 1e-7
    for K, t in zip(rep.centers, 0.1 + 2 * PI * np.arange(12) / 12):
        assert K == pytest.approx(fregier_oracle(E21, E21.point(t)), abs=1e-8)


# ---- reverse problem ------------------------------------------------------


def test_reverse_example():
    M = E21.point(0.7)
    ch = chord_at(E21, M, PI / 3, 2.0)
    sols = reverse_problem(E21, ch.N, ch.L, PI / 3)
    assert 1 <= len(sols) <= 2
    assert min(np.hypot(*(P - M)) for P in sols) < 1e-9


@given(params, params, st.floats(0.3, PI - 0.3))
def test_reverse_round_trip(tm, tn, theta):
    M = E21.point(tm)
    try:
        ch = chord_at(E21, M, theta, tn)
    except DegenerateSampleError:
        assume(False)
    assume(np.hypot(*(ch.N - M)) > 1e-3 and np.hypot(*(ch.L - M)) > 1e-3)
    sols = reverse_problem(E21, ch.N, ch.L, theta)
    assert len(sols) <= 2
    assert min(np.hypot(*(P - M)) for P in sols) < 1e-9
    both = reverse_problem(E21, ch.N, ch.L, theta, oriented=False)
    assert len(both) >= len(sols)
    for P in both:
        assert angle_at(P, ch.N, ch.L) == pytest.approx(theta, abs=1e-9)


def test_reverse_circle_degeneracy():
    with pytest.raises(InfiniteSolutionsError):
        reverse_problem(UNIT, (1.0, 0.0), (-1.0, 0.0), PI / 2)


# ---- special angles -------------------------------------------------------


@pytest.mark.parametrize("theta", [PI / 4, 3 * PI / 4])
def test_orthoptic_for_quarter_angles(theta):
    for t in (0.2, 1.4, 3.9):
        ok, res = orthoptic_check(fit_envelope(E21, E21.point(t), theta))
        assert ok, res
    ok, _ = orthoptic_check(fit_envelope(UNIT, UNIT.point(0.5), PI / 4))
    assert ok


def test_orthoptic_fails_elsewhere():
    ok, res = orthoptic_check(fit_envelope(E21, E21.point(0.7), PI / 3))
    assert not ok and abs(res) > 1e-3


def test_axes_from_area_and_KM():
    assert axes_from_area_and_KM(2 * PI, math.sqrt(5)) == pytest.approx((2.0, 1.0))
    assert axes_from_area_and_KM(PI * 0.49, 0.7 * math.sqrt(2)) == pytest.approx((0.7, 0.7), abs=1e-7)
    M = E21.point(0.9)
    env = fit_envelope(E21, M, PI / 4)
    got = axes_from_area_and_KM(env.area, float(np.hypot(*(M - env.center))))
    assert got == pytest.approx((env.axes.a, env.axes.b), abs=1e-7)
    with pytest.raises(GeometryError):
        axes_from_area_and_KM(10.0, 1.0)


@pytest.mark.parametrize("theta", [PI / 3, 2 * PI / 3])
def test_inscribed_for_cos2_quarter(theta):
    for t in (0.3, 1.7, 4.4):
        assert inscribed_special_check(E21, E21.point(t), theta).residual < 1e-8


@pytest.mark.parametrize("theta", [PI / 4, 2 * PI / 5, PI / 6])
def test_not_inscribed_otherwise(theta):
    assert inscribed_special_check(E21, E21.point(0.9), theta).residual > 1e-4


def test_unit_circle_equilateral_case():
    r = inscribed_special_check(UNIT, UNIT.point(0.4), PI / 3)
    assert r.residual < 1e-12
    assert r.M_prime is None


@pytest.mark.parametrize("ab,t", [((2.0, 1.0), 0.4), ((2.0, 1.0), 2.5), ((3.0, 1.0), 1.1), ((1.4, 1.0), 5.0)])
def test_fourth_concyclic_point(ab, t):
    """M' agrees with a direct circle/ellipse intersection and sees T1T2 under
    pi/3 (same arc as M); the obtuse angle between lines M'T1, M'T2 is 2 pi/3."""
    E = EllipseAxes((0.0, 0.0), *ab)
    M = E.point(t)
    r = inscribed_special_check(E, M, PI / 3)
    center, radius = _circumcircle(M, r.T1, r.T2)
    assert np.hypot(*(r.M_prime - center)) == pytest.approx(radius, abs=1e-10)
    hits = conic_intersection(E, circle_conic(center, radius))
    assert min(np.hypot(*(P - r.M_prime)) for P in hits) < 1e-8
    assert r.angle_at_M_prime == pytest.approx(PI / 3, abs=1e-9)
    assert PI - r.angle_at_M_prime == pytest.approx(2 * PI / 3, abs=1e-9)
