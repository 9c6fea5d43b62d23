"""Projective conic toolkit: homogeneous points and lines, point/line conics,
duality, fitting, intersections and Euclidean metrics of ellipses.

Points and lines are plain ``numpy`` arrays of shape ``(3,)`` holding
homogeneous coordinates.  A line ``l`` contains a point ``p`` iff ``l @ p == 0``.
Residuals reported by this module are scale invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import DegenerateInputError, IdealPointError, NotAnEllipseError

__all__ = [
    "SV_RATIO",
    "hpoint",
    "normalize",
    "join",
    "meet",
    "to_cartesian",
    "angle_at",
    "ConicMatrix",
    "EllipseAxes",
    "circle_conic",
    "numerical_rank",
    "classify",
    "adjugate",
    "matrix_deviation",
    "point_residual",
    "conic_from_points",
    "dual_conic_from_lines",
    "ellipse_metrics",
    "LineHits",
    "line_conic_intersection",
    "Tangents",
    "tangent_lines_from_point",
    "tangency_residual",
    "conic_intersection",
]

# Rank decisions: singular value below this fraction of the largest counts as zero.
SV_RATIO = 1e-9


def hpoint(x: float, y: float) -> np.ndarray:
    return np.array([x, y, 1.0])


def _as_h(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape == (2,):
        return np.append(p, 1.0)
    if p.shape != (3,):
        raise ValueError(f"expected 2 or 3 coordinates, got shape {p.shape}")
    return p


def normalize(v) -> np.ndarray:
    """Scale homogeneous coordinates so the largest-magnitude entry is 1."""
    v = np.asarray(v, dtype=float)
    i = int(np.argmax(np.abs(v)))
    if v[i] == 0.0:
        raise DegenerateInputError("all homogeneous coordinates are zero")
    return v / v[i]


def join(p, q) -> np.ndarray:
    """Line through two points."""
    return np.cross(_as_h(p), _as_h(q))


def meet(l, m) -> np.ndarray:
    """Intersection point of two lines."""
    return np.cross(np.asarray(l, float), np.asarray(m, float))


def to_cartesian(p, tol: float = 1e-14) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if abs(p[2]) <= tol * np.max(np.abs(p)):
        raise IdealPointError(f"point {p} is at infinity")
    return p[:2] / p[2]


def angle_at(vertex, p, q) -> float:
    """Unsigned angle pvq in [0, pi]."""
    u = np.asarray(p, float)[:2] - np.asarray(vertex, float)[:2]
    v = np.asarray(q, float)[:2] - np.asarray(vertex, float)[:2]
    return math.atan2(abs(u[0] * v[1] - u[1] * v[0]), float(u @ v))


@dataclass(frozen=True, eq=False)
class ConicMatrix:
    """Symmetric 3x3 conic.  ``dual=True`` means line form (x^T M x = 0 over lines)."""

    m: np.ndarray
    dual: bool = False

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        if m.shape != (3, 3):
            raise ValueError("conic matrix must be 3x3")
        object.__setattr__(self, "m", 0.5 * (m + m.T))

    @classmethod
    def from_coeffs(cls, A, B, C, D, E, F, dual: bool = False) -> "ConicMatrix":
        """Ax^2 + Bxy + Cy^2 + Dxw + Eyw + Fw^2."""
        return cls(
            np.array([[A, B / 2, D / 2], [B / 2, C, E / 2], [D / 2, E / 2, F]]),
            dual=dual,
        )

    @property
    def coeffs(self) -> np.ndarray:
        m = self.m
        return np.array([m[0, 0], 2 * m[0, 1], m[1, 1], 2 * m[0, 2], 2 * m[1, 2], m[2, 2]])

    def value(self, v) -> float:
        v = _as_h(v)
        return float(v @ self.m @ v)

    def normalized(self) -> "ConicMatrix":
        m = self.m / np.linalg.norm(self.m)
        flat = m.ravel()
        if flat[np.argmax(np.abs(flat))] < 0:
            m = -m
        return ConicMatrix(m, self.dual)

    def __repr__(self) -> str:
        kind = "line" if self.dual else "point"
        return f"ConicMatrix({kind}-form, {np.array2string(self.normalized().m, precision=6)})"


@dataclass(frozen=True)
class EllipseAxes:
    """Ellipse by center, semi-axes ``a >= b > 0`` and tilt of the major axis in [0, pi)."""

    center: tuple[float, float]
    a: float
    b: float
    tilt: float = 0.0

    def __post_init__(self):
        if not (self.a >= self.b > 0):
            raise ValueError(f"need a >= b > 0, got a={self.a}, b={self.b}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "tilt", float(self.tilt) % math.pi)

    @property
    def area(self) -> float:
        return math.pi * self.a * self.b

    @property
    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.tilt), math.sin(self.tilt)
        return np.array([[c, -s], [s, c]])

    def point(self, t: float) -> np.ndarray:
        return np.asarray(self.center) + self.rotation @ np.array([self.a * math.cos(t), self.b * math.sin(t)])

    def param_of(self, p) -> float:
        local = self.rotation.T @ (np.asarray(p, float)[:2] - np.asarray(self.center))
        return math.atan2(local[1] / self.b, local[0] / self.a)

    def to_conic(self) -> ConicMatrix:
        R = self.rotation
        A2 = R @ np.diag([1 / self.a**2, 1 / self.b**2]) @ R.T
        c = np.asarray(self.center)
        m = np.empty((3, 3))
        m[:2, :2] = A2
        m[:2, 2] = m[2, :2] = -A2 @ c
        m[2, 2] = c @ A2 @ c - 1.0
        return ConicMatrix(m)


def circle_conic(center, r: float) -> ConicMatrix:
    cx, cy = center
    return ConicMatrix.from_coeffs(1.0, 0.0, 1.0, -2 * cx, -2 * cy, cx * cx + cy * cy - r * r)


def numerical_rank(m: np.ndarray, ratio: float = SV_RATIO) -> int:
    s = np.linalg.svd(np.asarray(m, float), compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > ratio * s[0]))


def adjugate(C: ConicMatrix) -> ConicMatrix:
    """Cofactor transpose; defined for singular input too.  Flips point/line form."""
    m = C.m
    adj = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            minor = np.delete(np.delete(m, j, axis=0), i, axis=1)
            adj[i, j] = (-1) ** (i + j) * (minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0])
    return ConicMatrix(adj, dual=not C.dual)


def classify(C: ConicMatrix) -> str:
    """One of: ellipse, imaginary, hyperbola, parabola, point, line-pair,
    double-line, degenerate, zero."""
    m = C.m / (np.linalg.norm(C.m) or 1.0)
    r = numerical_rank(m)
    if C.dual:
        if r == 3:
            return classify(adjugate(ConicMatrix(m, dual=True)))
        return {0: "zero", 1: "point"}.get(r, "degenerate")
    A2 = m[:2, :2]
    d2 = np.linalg.det(A2)
    if r == 3:
        if abs(d2) <= SV_RATIO * max(np.linalg.norm(A2) ** 2, np.finfo(float).tiny):
            return "parabola"
        if d2 < 0:
            return "hyperbola"
        return "ellipse" if np.linalg.det(m) * np.trace(A2) < 0 else "imaginary"
    if r == 2:
        return "point" if d2 > SV_RATIO * np.linalg.norm(A2) ** 2 else "line-pair"
    return "double-line" if r == 1 else "zero"


def matrix_deviation(A, B) -> float:
    """Distance between two matrices after normalising both to unit Frobenius
    norm, minimised over sign; 0 iff proportional."""
    a = np.asarray(getattr(A, "m", A), float).ravel()
    b = np.asarray(getattr(B, "m", B), float).ravel()
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    return float(min(np.linalg.norm(a - b), np.linalg.norm(a + b)))


def point_residual(C: ConicMatrix, p) -> float:
    """|p^T C p| / (|p|^2 ||C||_F)."""
    p = _as_h(p)
    return abs(float(p @ C.m @ p)) / (float(p @ p) * np.linalg.norm(C.m))


def tangency_residual(C_dual: ConicMatrix, line) -> float:
    """|l^T C* l| / (|l|^2 ||C*||_F); zero iff the line is tangent."""
    l = np.asarray(line, float)
    return abs(float(l @ C_dual.m @ l)) / (float(l @ l) * np.linalg.norm(C_dual.m))


def _sym_from_vec(v: np.ndarray) -> np.ndarray:
    return np.array([[v[0], v[1], v[3]], [v[1], v[2], v[4]], [v[3], v[4], v[5]]])


def _quadric_rows(X: np.ndarray) -> np.ndarray:
    x, y, w = X[:, 0], X[:, 1], X[:, 2]
    return np.stack([x * x, 2 * x * y, y * y, 2 * x * w, 2 * y * w, w * w], axis=1)


def _unit_rows(items) -> np.ndarray:
    X = np.array([_as_h(p) for p in items], dtype=float)
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def conic_from_points(points: Sequence) -> ConicMatrix:
    """Point conic through five (or more, least squares) points.

    Raises DegenerateInputError when the incidence system has a
    nullspace of dimension > 1, e.g. four collinear points.
    """
    if len(points) < 5:
        raise DegenerateInputError("need at least five points")
    X = _unit_rows(points)
    rows = _quadric_rows(X)
    if len(rows) < 6:
        rows = np.vstack([rows, np.zeros((6 - len(rows), 6))])
    _, s, vt = np.linalg.svd(rows)
    if s[-2] < SV_RATIO * s[0]:
        raise DegenerateInputError("degenerate input: conic through these points is not unique")
    return ConicMatrix(_sym_from_vec(vt[-1]))


def dual_conic_from_lines(lines: Sequence) -> ConicMatrix:
    """Line conic tangent to all given lines (least-squares nullspace).

    If the lines are concurrent the rank-1 dual conic ``p p^T`` of their
    common point is returned; ``classify`` reports it as ``"point"``.
    """
    if len(lines) < 5:
        raise DegenerateInputError("need at least five lines")
    L = _unit_rows(lines)
    _, s, vt = np.linalg.svd(L)
    if s[2] < SV_RATIO * s[0]:
        p = vt[2]
        return ConicMatrix(np.outer(p, p), dual=True)
    # Condition the fit: move the approximate common point of the lines to the
    # origin and scale by their RMS distance from it (matters for small envelopes).
    p = vt[2]
    if abs(p[2]) > 1e-12 * np.max(np.abs(p)):
        c = p[:2] / p[2]
        dist = np.abs(L @ np.append(c, 1.0)) / np.linalg.norm(L[:, :2], axis=1)
        scale = float(np.sqrt(np.mean(dist**2))) or 1.0
    else:
        c, scale = np.zeros(2), 1.0
    H = np.array([[1 / scale, 0, -c[0] / scale], [0, 1 / scale, -c[1] / scale], [0, 0, 1.0]])
    Hinv = np.linalg.inv(H)
    Ln = L @ Hinv  # lines in normalized coordinates: l' = H^-T l
    Ln /= np.linalg.norm(Ln, axis=1, keepdims=True)
    rows = _quadric_rows(Ln)
    if len(rows) < 6:
        rows = np.vstack([rows, np.zeros((6 - len(rows), 6))])
    _, s, vt = np.linalg.svd(rows)
    Cn = _sym_from_vec(vt[-1])
    return ConicMatrix(Hinv @ Cn @ Hinv.T, dual=True)


def ellipse_metrics(C: ConicMatrix) -> EllipseAxes:
    """Center, semi-axes and tilt of a real ellipse given in point or line form."""
    point_form = adjugate(C) if C.dual else C
    kind = classify(C)
    if kind != "ellipse":
        raise NotAnEllipseError(kind)
    m = point_form.m / np.linalg.norm(point_form.m)
    A2 = m[:2, :2]
    center = np.linalg.solve(A2, -m[:2, 2])
    f0 = m[2, 2] + m[:2, 2] @ center
    lam, vec = np.linalg.eigh(A2)
    semi = np.sqrt(-f0 / lam)
    major = int(np.argmax(semi))
    tilt = math.atan2(vec[1, major], vec[0, major])
    return EllipseAxes((center[0], center[1]), float(semi[major]), float(semi[1 - major]), tilt)


class LineHits(NamedTuple):
    points: list
    double: bool


def line_conic_intersection(C: ConicMatrix, line, tol: float = 1e-12) -> LineHits:
    """Real intersections of a point conic with a line (homogeneous, normalized).

    The line is parametrised by an orthonormal basis of its null space, which
    turns the problem into finding isotropic vectors of a 2x2 quadratic form.
    A tangent line yields one point with ``double=True``.
    """
    l = np.asarray(line, float)
    _, _, vt = np.linalg.svd(l.reshape(1, 3))
    basis = vt[1:].T  # 3x2, spans the points of the line
    S = basis.T @ C.m @ basis
    mu, E = np.linalg.eigh(S)
    scale = np.max(np.abs(mu))
    if scale == 0.0:
        raise DegenerateInputError("line is a component of the conic")
    k = int(np.argmin(np.abs(mu)))
    if abs(mu[k]) <= tol * scale:
        return LineHits([normalize(basis @ E[:, k])], True)
    if mu[0] * mu[1] > 0:
        return LineHits([], False)
    r0, r1 = math.sqrt(abs(mu[1])), math.sqrt(abs(mu[0]))
    pts = [normalize(basis @ (r0 * E[:, 0] + sgn * r1 * E[:, 1])) for sgn in (1.0, -1.0)]
    return LineHits(pts, False)


class Tangents(NamedTuple):
    lines: list
    polar: np.ndarray
    points: list
    on_conic: bool


def tangent_lines_from_point(C: ConicMatrix, P, on_tol: float = 1e-12) -> Tangents:
    """Tangent lines from P to a point conic, with the polar line and contact points.

    Inside -> no lines; on the conic -> the single tangent (``on_conic=True``);
    outside -> two lines.
    """
    P = _as_h(P)
    polar = C.m @ P
    if point_residual(C, P) < on_tol:
        return Tangents([normalize(polar)], polar, [normalize(P)], True)
    hits = line_conic_intersection(C, polar, tol=1e-15)
    lines = [normalize(np.cross(P, T)) for T in hits.points]
    return Tangents(lines, polar, hits.points, False)


def conic_intersection(ellipse: ConicMatrix | EllipseAxes, other: ConicMatrix) -> list:
    """Real intersection points (Cartesian) of an ellipse with another point conic.

    The ellipse is parametrised rationally with s = tan(t/2); the resulting
    quartic is solved with ``numpy.roots``, the excluded point t = pi is tested
    directly and every root gets Newton-polished on the angle t.
    """
    E = ellipse if isinstance(ellipse, EllipseAxes) else ellipse_metrics(ellipse)
    Q = other.m / np.linalg.norm(other.m)
    R = E.rotation
    cx, cy = E.center
    one_p = np.array([1.0, 0.0, 1.0])  # 1 + s^2
    one_m = np.array([1.0, 0.0, -1.0])  # 1 - s^2
    two_s = np.array([0.0, 2.0, 0.0])
    comps = [
        cx * one_p + R[0, 0] * E.a * one_m + R[0, 1] * E.b * two_s,
        cy * one_p + R[1, 0] * E.a * one_m + R[1, 1] * E.b * two_s,
        one_p,
    ]
    quartic = np.zeros(5)
    for i in range(3):
        for j in range(3):
            quartic = npoly.polyadd(quartic, Q[i, j] * npoly.polymul(comps[i], comps[j]))[:5]

    def g(t):
        X = np.append(E.point(t), 1.0)
        dX = np.append(R @ np.array([-E.a * math.sin(t), E.b * math.cos(t)]), 0.0)
        return float(X @ Q @ X), float(2 * X @ Q @ dX)

    ts = []
    coeffs = np.trim_zeros(quartic[::-1], "f")
    if len(coeffs) > 1:
        for s in np.roots(coeffs):
            if abs(s.imag) <= 1e-7 * max(1.0, abs(s)):
                ts.append(2 * math.atan(s.real))
    if abs(g(math.pi)[0]) < 1e-10:
        ts.append(math.pi)
    out = []
    for t in ts:
        for _ in range(3):
            f, df = g(t)
            if df == 0.0 or f == 0.0:
                break
            step = f / df
            t -= step
            if abs(step) < 1e-15:
                break
        p = E.point(t)
        if all(np.linalg.norm(p - q) > 1e-9 * E.a for q in out):
            out.append(p)
    return out
