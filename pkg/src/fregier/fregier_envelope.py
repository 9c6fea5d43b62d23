"""Chords seen from a point M of an ellipse under a fixed angle, and their envelope.

For M on the ellipse E and theta in (0, pi), the chords NL with angle NML = theta
are all tangent to one conic E' (an ellipse, collapsing to the Fregier point
when theta = pi/2).  This module samples that chord family, fits E' as a line
conic, and measures the quantities attached to it: center, axes, area, the
angle under which M sees E', the orthoptic relation and the inscribed-triangle
property at theta = pi/3, 2pi/3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conic_core import (
    ConicMatrix,
    EllipseAxes,
    adjugate,
    angle_at,
    circle_conic,
    classify,
    conic_from_points,
    conic_intersection,
    dual_conic_from_lines,
    ellipse_metrics,
    hpoint,
    join,
    line_conic_intersection,
    tangency_residual,
    tangent_lines_from_point,
    to_cartesian,
)
from .errors import (
    DegenerateInputError,
    DegenerateSampleError,
    GeometryError,
    InfiniteSolutionsError,
    SamplingFailure,
)

__all__ = [
    "Chord",
    "EnvelopeResult",
    "chord_at",
    "chord_directions",
    "fit_envelope",
    "fregier_point",
    "area_ratio_sq",
    "tangent_directions",
    "tangent_angle",
    "tangent_contacts",
    "LocusReport",
    "center_locus",
    "reverse_problem",
    "orthoptic_check",
    "axes_from_area_and_KM",
    "SpecialCheck",
    "inscribed_special_check",
]

POINT_THETA_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Chord:
    N: np.ndarray
    L: np.ndarray
    line: np.ndarray


def _rot(v: np.ndarray, ang: float) -> np.ndarray:
    c, s = math.cos(ang), math.sin(ang)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def _second_hit(C: ConicMatrix, M: np.ndarray, d: np.ndarray) -> tuple[np.ndarray, float]:
    """Other intersection of the line M + s d with a conic through M."""
    Mh = np.append(M, 1.0)
    dh = np.append(d, 0.0)
    qa = dh @ C.m @ dh
    qb = 2 * Mh @ C.m @ dh
    if qa == 0.0:
        raise DegenerateSampleError("direction is asymptotic")
    # M is on the conic, so the roots are ~0 and -qb/qa
    s = -qb / qa
    return M + s * d, s


def chord_at(E: EllipseAxes, M, theta: float, t: float) -> Chord:
    """Chord NL with N = E(t) and L on the ray from M turned +theta from MN."""
    M = np.asarray(M, float)[:2]
    N = E.point(t)
    d = N - M
    scale = E.a
    if np.hypot(*d) < 1e-9 * scale:
        raise DegenerateSampleError("N coincides with M")
    L, s = _second_hit(E.to_conic(), M, _rot(d, theta))
    if s <= 0 or np.hypot(*(L - M)) < 1e-9 * scale:
        raise DegenerateSampleError("rotated ray leaves the ellipse at M")
    return Chord(N, L, join(N, L))


def _inward_tangent(E: EllipseAxes, M: np.ndarray) -> np.ndarray:
    """Unit tangent at M oriented so the ellipse interior lies to its left."""
    C = E.to_conic()
    g = C.m[:2, :2] @ M + C.m[:2, 2]
    T = np.array([-g[1], g[0]])
    return T / np.hypot(*T)


def chord_directions(theta: float, samples: int) -> np.ndarray:
    """Angles phi (from the inward tangent at M) of MN for which the +theta
    ray still enters the ellipse: phi in (0, pi - theta), cell-centered."""
    span = math.pi - theta
    return (np.arange(samples) + 0.5) * span / samples


def _sample_chords(E: EllipseAxes, M: np.ndarray, theta: float, samples: int) -> list:
    T = _inward_tangent(E, M)
    C = E.to_conic()
    chords = []
    for phi in chord_directions(theta, samples):
        N, _ = _second_hit(C, M, _rot(T, phi))
        try:
            chords.append(chord_at(E, M, theta, E.param_of(N)))
        except DegenerateSampleError:
            continue
    return chords


@dataclass(frozen=True, eq=False)
class EnvelopeResult:
    conic: ConicMatrix  # line form
    classification: str
    center: np.ndarray
    axes: EllipseAxes | None
    area: float
    residual_max: float
    residual_mean: float
    theta: float
    M: np.ndarray
    ellipse: EllipseAxes
    chords: list = field(repr=False, default_factory=list)

    @property
    def point_conic(self) -> ConicMatrix:
        return adjugate(self.conic)


def _point_residual(p: np.ndarray, line: np.ndarray) -> float:
    return abs(line @ p) / (np.linalg.norm(line) * np.linalg.norm(p))


def fit_envelope(E: EllipseAxes, M, theta: float, samples: int = 48, holdout: int = 12) -> EnvelopeResult:
    """Fit the envelope E' of the chords seen from M under ``theta``.

    Chords are sampled by the direction of MN; every ``samples // holdout``-th
    chord is withheld from the fit and used only for the residual statistics.
    """
    if not 0 < theta < math.pi:
        raise GeometryError("theta must lie in (0, pi)")
    if samples < 24:
        raise SamplingFailure("need at least 24 samples")
    M = np.asarray(M, float)[:2]
    chords = _sample_chords(E, M, theta, samples)
    stride = max(samples // holdout, 2) if holdout else 0
    held = [c for i, c in enumerate(chords) if stride and i % stride == stride - 1]
    used = [c for i, c in enumerate(chords) if not (stride and i % stride == stride - 1)]
    if len(used) < 6:
        raise SamplingFailure(f"only {len(used)} usable chords")
    dual = dual_conic_from_lines([c.line for c in used])
    kind = classify(dual)
    if abs(theta - math.pi / 2) < POINT_THETA_TOL or kind == "point":
        kind = "point"
        p = _concurrency_point([c.line for c in used])
        dual = ConicMatrix(np.outer(p, p), dual=True)
    check = held or used
    axes, area = None, 0.0
    if kind == "point":
        res = [_point_residual(p, c.line) for c in check]
        center = to_cartesian(p)
    else:
        res = [tangency_residual(dual, c.line) for c in check]
        center = to_cartesian(dual.m[:, 2])
        if kind == "ellipse":
            axes = ellipse_metrics(dual)
            area = axes.area
    return EnvelopeResult(
        conic=dual,
        classification=kind,
        center=center,
        axes=axes,
        area=area,
        residual_max=float(np.max(res)),
        residual_mean=float(np.mean(res)),
        theta=theta,
        M=M,
        ellipse=E,
        chords=chords,
    )


def _concurrency_point(lines) -> np.ndarray:
    """Least-squares common point (homogeneous) of a family of lines."""
    L = np.array([l / np.linalg.norm(l) for l in lines])
    return np.linalg.svd(L)[2][-1]


def fregier_point(E: EllipseAxes, M, count: int = 16) -> np.ndarray:
    """Common point of the right-angle chords from M (least squares)."""
    M = np.asarray(M, float)[:2]
    lines = [c.line for c in _sample_chords(E, M, math.pi / 2, count)]
    if len(lines) < 8:
        raise SamplingFailure("not enough right-angle chords")
    return to_cartesian(_concurrency_point(lines))


def area_ratio_sq(rho: float, theta: float) -> float:
    """k^2 = rho^3 (rho+4)^3 cos^2 t / ((rho+1)^2 + (2 rho - 1) cos^2 t)^3."""
    c2 = math.cos(theta) ** 2
    return rho**3 * (rho + 4) ** 3 * c2 / ((rho + 1) ** 2 + (2 * rho - 1) * c2) ** 3


def tangent_contacts(env: EnvelopeResult, M=None) -> list:
    """Contact points (Cartesian) of the two tangents from M to E'."""
    if env.classification != "ellipse":
        raise GeometryError(f"envelope is {env.classification!r}, not an ellipse")
    M = env.M if M is None else np.asarray(M, float)[:2]
    tang = tangent_lines_from_point(env.point_conic, hpoint(*M))
    if len(tang.points) != 2 or tang.on_conic:
        raise GeometryError("no tangents: M is not outside the envelope")
    return [to_cartesian(p) for p in tang.points]


def tangent_directions(env: EnvelopeResult, M=None) -> np.ndarray:
    """Unit directions from M of the two tangents to E', each pointing toward E'.

    Works on the line form directly: the line through M with direction
    (cos p, sin p) is sin p (-1, 0, Mx) + cos p (0, 1, -My), so tangency is a
    binary quadratic in (cos p, sin p).
    """
    if env.classification != "ellipse":
        raise GeometryError(f"envelope is {env.classification!r}, not an ellipse")
    M = env.M if M is None else np.asarray(M, float)[:2]
    P = np.array([[0.0, -1.0], [1.0, 0.0], [-M[1], M[0]]])
    Q = P.T @ (env.conic.m / np.linalg.norm(env.conic.m)) @ P
    lam, vec = np.linalg.eigh(Q)
    if not lam[0] < 0 < lam[1]:
        raise GeometryError("no tangents: M is not outside the envelope")
    psi = math.atan(math.sqrt(-lam[0] / lam[1]))
    out = []
    for sgn in (1, -1):
        d = math.cos(psi) * vec[:, 0] + sgn * math.sin(psi) * vec[:, 1]
        d = d / np.linalg.norm(d)
        # contact point of this tangent is the pole C* l
        T = to_cartesian(env.conic.m @ (P @ d))
        out.append(d if d @ (T - M) >= 0 else -d)
    return np.array(out)


def tangent_angle(env: EnvelopeResult, M=None) -> float:
    """Opening angle at M of the sector bounded by the tangents to E' and containing it."""
    d1, d2 = tangent_directions(env, M)
    return angle_at((0.0, 0.0), d1, d2)


@dataclass(frozen=True, eq=False)
class LocusReport:
    centers: np.ndarray
    conic: ConicMatrix | None
    classification: str
    center: np.ndarray
    center_offset: float  # distance of the locus center from the center of E
    point_locus: bool
    fregier_limit: bool


def center_locus(E: EllipseAxes, theta: float, num_M: int = 12, offset: float = 0.1) -> LocusReport:
    """Fit a conic through the envelope centers K(M) for ``num_M`` points M."""
    if num_M < 8:
        raise SamplingFailure("need at least 8 positions of M")
    fregier_limit = abs(theta - math.pi / 2) < POINT_THETA_TOL
    ts = offset + 2 * math.pi * np.arange(num_M) / num_M
    centers = np.array([fit_envelope(E, E.point(t), theta).center for t in ts])
    O = np.asarray(E.center)
    spread = np.max(np.linalg.norm(centers - centers.mean(axis=0), axis=1))
    if spread < 1e-9 * E.b:
        c = centers.mean(axis=0)
        return LocusReport(centers, None, "point", c, float(np.hypot(*(c - O))), True, fregier_limit)
    conic = conic_from_points([hpoint(*c) for c in centers])
    kind = classify(conic)
    c = ellipse_metrics(conic).center if kind == "ellipse" else np.full(2, np.nan)
    return LocusReport(centers, conic, kind, np.asarray(c), float(np.hypot(*(np.asarray(c) - O))), False, fregier_limit)


def _turn(P, N, L) -> float:
    """Signed angle from PN to PL in (-pi, pi]."""
    u = N - P
    v = L - P
    return math.atan2(u[0] * v[1] - u[1] * v[0], float(u @ v))


def reverse_problem(E: EllipseAxes, N, L, theta: float, tol: float = 1e-9, oriented: bool = True) -> list:
    """Points M of E from which chord NL is seen under ``theta``.

    Candidates come from intersecting E with the two circles through N and L
    whose inscribed angle is theta.  With ``oriented=True`` (the convention of
    ``chord_at``) L must be the +theta turn of N as seen from M, which leaves at
    most two solutions; otherwise both orientations are returned.
    """
    N = np.asarray(N, float)[:2]
    L = np.asarray(L, float)[:2]
    chord = L - N
    length = float(np.hypot(*chord))
    if length < 1e-12 * E.a:
        raise DegenerateInputError("N and L coincide")
    mid = (N + L) / 2
    normal = np.array([-chord[1], chord[0]]) / length
    radius = length / (2 * math.sin(theta))
    dist = length / (2 * math.tan(theta))
    out: list = []
    for side in (1.0, -1.0):
        c = mid + side * dist * normal
        if (
            abs(E.a - E.b) < 1e-12 * E.a
            and np.hypot(*(c - np.asarray(E.center))) < 1e-9 * E.a
            and abs(radius - E.a) < 1e-9 * E.a
        ):
            raise InfiniteSolutionsError("the construction circle coincides with the ellipse")
        for P in conic_intersection(E, circle_conic(c, radius)):
            if min(np.hypot(*(P - N)), np.hypot(*(P - L))) < 1e-7 * E.a:
                continue
            if abs(angle_at(P, N, L) - theta) > tol:
                continue
            if oriented and _turn(P, N, L) < 0:
                continue
            if all(np.hypot(*(P - Q)) > 1e-9 * E.a for Q in out):
                out.append(P)
    return out


def orthoptic_check(env: EnvelopeResult, M=None, rtol: float = 1e-8) -> tuple[bool, float]:
    """Residual |MK|^2 - (a1^2 + b1^2); True when M is on the orthoptic circle of E'."""
    if env.axes is None:
        raise GeometryError(f"envelope is {env.classification!r}, not an ellipse")
    M = env.M if M is None else np.asarray(M, float)[:2]
    d2 = float(np.sum((M - env.center) ** 2))
    res = d2 - (env.axes.a**2 + env.axes.b**2)
    return abs(res) < rtol * env.ellipse.b**2, res


def axes_from_area_and_KM(area: float, d: float) -> tuple[float, float]:
    """Semi-axes from area = pi a1 b1 and d^2 = a1^2 + b1^2."""
    p = area / math.pi
    disc = d**4 - 4 * p * p
    if disc < 0:
        if disc > -1e-12 * d**4:
            disc = 0.0
        else:
            raise GeometryError("inconsistent inputs: no ellipse with this area and orthoptic radius")
    r = math.sqrt(disc)
    z1 = (d * d + r) / 2
    z2 = p * p / z1 if z1 > 0 else 0.0
    return math.sqrt(z1), math.sqrt(z2)


@dataclass(frozen=True, eq=False)
class SpecialCheck:
    residual: float
    T1: np.ndarray
    T2: np.ndarray
    envelope: EnvelopeResult
    M_prime: np.ndarray | None = None
    angle_at_M_prime: float | None = None


def inscribed_special_check(E: EllipseAxes, M, theta: float) -> SpecialCheck:
    """Tangency of T1T2 to E', where T1, T2 are the second intersections with E
    of the tangents from M to E'.

    Also reports the fourth intersection M' of the circle MT1T2 with E and the
    angle T1 M' T2.  M' uses the concyclicity condition on eccentric angles
    (t_M + t_T1 + t_T2 + t_M' = 0 mod 2 pi), so a tangent circle yields the
    double point; for a circular E every point is concyclic and M' is None.
    """
    M = np.asarray(M, float)[:2]
    env = fit_envelope(E, M, theta)
    Ec = E.to_conic()
    ends = []
    for T in tangent_contacts(env, M):
        hits = line_conic_intersection(Ec, join(M, T))
        pts = [to_cartesian(p) for p in hits.points]
        ends.append(max(pts, key=lambda p: np.hypot(*(p - M))))
    T1, T2 = ends
    residual = tangency_residual(env.conic, join(T1, T2))
    M_prime = angle = None
    if E.a - E.b > 1e-12 * E.a:
        t4 = -(E.param_of(M) + E.param_of(T1) + E.param_of(T2))
        M_prime = E.point(t4)
        if min(np.hypot(*(M_prime - Q)) for Q in (T1, T2)) > 1e-9 * E.a:
            angle = angle_at(M_prime, T1, T2)
    return SpecialCheck(residual, T1, T2, env, M_prime, angle)


def _circumcircle(P, Q, R):
    ax, ay = P
    bx, by = Q
    cx, cy = R
    d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if abs(d) < 1e-14:
        return None
    ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay) + (cx * cx + cy * cy) * (ay - by)) / d
    uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx) + (cx * cx + cy * cy) * (bx - ax)) / d
    center = np.array([ux, uy])
    return center, float(np.hypot(*(np.asarray(P) - center)))
