"""Billiard reference frame and closed-form trilinear formulas.

The reference triangle ABC is the isosceles 3-periodic billiard orbit of the
ellipse x^2/a^2 + y^2/b^2 = 1 with apex A = (0, b) on the minor axis, B on the
left and C on the right.  Trilinear coordinates alpha : beta : gamma are signed
distances to BC, CA and AB (positive on the side of the opposite vertex).

In this frame the outer ellipse is the circumconic
``beta*gamma + gamma*alpha + alpha*beta = 0`` and the point with parameter u is
``E(u) = u + 1 : u(u + 1) : -u`` (u = 0 -> A, u = -1 -> C, u -> inf -> B).

Every closed form here is an independent check on the numerical pipeline in
``fregier_envelope``; the pipeline itself works in Cartesian coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .conic_core import ConicMatrix, line_conic_intersection
from .errors import GeometryError, IdealPointError, ParameterPoleError

__all__ = [
    "BilliardFrame",
    "solve_h",
    "build_frame",
    "tri_to_cart",
    "cart_to_tri",
    "tri_line_to_cart",
    "cart_line_to_tri",
    "tri_conic_to_cart",
    "ellipse_point_tri",
    "circle_picture_point",
    "CIRCUMCONIC",
    "line_ellipse_intersection_tri",
    "intersection_closed_form",
    "envelope_w",
    "tangent_lines_closed_form",
    "envelope_center_tri",
    "locus_conic_coeffs",
    "locus_conic_matrix",
    "mandart_caustic",
    "CausticParams",
    "caustic_tangent_params",
    "caustic_orbit_params",
]


def solve_h(a: float, b: float) -> float:
    """Root in [0, 1) of (a/b)^2 = (1+h)(3-h) / ((1-h)(3+h)).

    Cleared of denominators: (1-q) h^2 - 2(q+1) h - 3(1-q) = 0 with q = (a/b)^2.
    For q > 1 this is h^2 + 2p h - 3 = 0 with p = (q+1)/(q-1), whose positive
    root is written in the cancellation-free form 3 / (p + sqrt(p^2 + 3)).
    """
    if b <= 0 or a < b:
        raise GeometryError(f"orient ellipse with a >= b > 0 (got a={a}, b={b})")
    q = (a / b) ** 2
    if q == 1.0:
        return 0.0
    p = (q + 1) / (q - 1)
    return 3.0 / (p + math.sqrt(p * p + 3.0))


@dataclass(frozen=True, eq=False)
class BilliardFrame:
    a: float
    b: float
    h: float
    s: float
    rho: float
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    side_ab: float
    side_bc: float
    # rows map homogeneous Cartesian (x, y, 1) to signed distances to BC, CA, AB
    T: np.ndarray = field(repr=False)

    @property
    def side_lengths(self) -> np.ndarray:
        """Lengths |BC|, |CA|, |AB| (the line at infinity is their trilinear line)."""
        return np.array([self.side_bc, self.side_ab, self.side_ab])

    @property
    def center_tri(self) -> np.ndarray:
        return np.array([1 - self.h, 1 + self.h, 1 + self.h])


def _side_row(P, Q, R) -> np.ndarray:
    d = Q - P
    n = np.array([-d[1], d[0]]) / np.hypot(d[0], d[1])
    c = -n @ P
    if n @ R + c < 0:
        n, c = -n, -c
    return np.array([n[0], n[1], c])


def build_frame(a: float, b: float) -> BilliardFrame:
    h = solve_h(a, b)
    # s is pinned by A = (0, b), i.e. y(0) = b in the circle-picture formula
    s = b * (3 - h) * math.sqrt(3 + h) / (2 * math.sqrt(1 - h))
    side_ab = 2 * s / (3 + h)
    side_bc = 2 * (1 + h) * s / (3 + h)
    xb = side_bc / 2
    yb = b - math.sqrt(side_ab**2 - xb**2)
    A = np.array([0.0, b])
    B = np.array([-xb, yb])
    C = np.array([xb, yb])
    for V in (B, C):
        if abs((V[0] / a) ** 2 + (V[1] / b) ** 2 - 1) > 1e-9:
            raise GeometryError("reference triangle vertex is off the ellipse")
    T = np.array([_side_row(B, C, A), _side_row(C, A, B), _side_row(A, B, C)])
    return BilliardFrame(a, b, h, s, (1 - h * h) / 2, A, B, C, side_ab, side_bc, T)


def tri_to_cart(frame: BilliardFrame, p) -> np.ndarray:
    X = np.linalg.solve(frame.T, np.asarray(p, float))
    if abs(X[2]) <= 1e-13 * np.max(np.abs(X)):
        raise IdealPointError("ideal point: trilinears sum to the line at infinity")
    return X[:2] / X[2]


def cart_to_tri(frame: BilliardFrame, xy) -> np.ndarray:
    """Actual signed distances (one representative of the trilinear ray)."""
    return frame.T @ np.array([xy[0], xy[1], 1.0])


def tri_line_to_cart(frame: BilliardFrame, line) -> np.ndarray:
    return frame.T.T @ np.asarray(line, float)


def cart_line_to_tri(frame: BilliardFrame, line) -> np.ndarray:
    return np.linalg.solve(frame.T.T, np.asarray(line, float))


def tri_conic_to_cart(frame: BilliardFrame, C: ConicMatrix) -> ConicMatrix:
    if C.dual:
        Ti = np.linalg.inv(frame.T)
        return ConicMatrix(Ti @ C.m @ Ti.T, dual=True)
    return ConicMatrix(frame.T.T @ C.m @ frame.T)


def ellipse_point_tri(u: float) -> np.ndarray:
    if math.isinf(u):
        return np.array([0.0, 1.0, 0.0])
    return np.array([u + 1.0, u * (u + 1.0), -u])


def circle_picture_point(u: float, frame: BilliardFrame) -> np.ndarray:
    """E(u) pushed to the circle of radius b by the squash (x, y) -> (x b/a, y)."""
    h, s = frame.h, frame.s
    den = u * u + (1 + h) * (u + 1)
    if abs(den) < 1e-14:
        raise ParameterPoleError(f"parameter pole at u={u}")
    x = -u * (u + 2) * s * math.sqrt(1 - h * h) / (den * math.sqrt(9 - h * h))
    y = ((h - 1) * u * u + 2 * (1 + h) * u + 2 * (1 + h)) * s * math.sqrt(1 - h) / (
        den * (3 - h) * math.sqrt(3 + h)
    )
    return np.array([x, y])


CIRCUMCONIC = ConicMatrix(0.5 * (np.ones((3, 3)) - np.eye(3)))


def line_ellipse_intersection_tri(m: float, n: float) -> list:
    """Both points of the outer ellipse on the trilinear line 1 : m : n."""
    disc = (m - n) ** 2 - 2 * (m + n) + 1
    if disc < -1e-12 * (abs(m) + abs(n) + 1) ** 2:
        raise GeometryError("line misses ellipse")
    hits = line_conic_intersection(CIRCUMCONIC, np.array([1.0, m, n]))
    if hits.double:
        return [hits.points[0], hits.points[0]]
    return hits.points


def intersection_closed_form(m: float, n: float) -> list:
    """-2mn : (m - n + 1 +- sqrt D) n : -(m - n - 1 +- sqrt D) m.

    Placement of the +-1 terms matters: moving them breaks both incidences.
    """
    D = (m - n) ** 2 - 2 * (m + n) + 1
    r = math.sqrt(D)
    return [np.array([-2 * m * n, (m - n + 1 + sg * r) * n, -(m - n - 1 + sg * r) * m]) for sg in (1.0, -1.0)]


def envelope_w(theta: float, frame: BilliardFrame, alt_form: bool = False) -> float:
    """Angle parameter of the envelope formulas: sqrt(3+h) sqrt(1-h) cot(theta).

    ``alt_form=True`` substitutes cos(theta) for cot(theta); that variant fails
    the incidence checks and is kept only so tests can demonstrate it.
    """
    h = frame.h
    f = math.cos(theta) if alt_form else math.cos(theta) / math.sin(theta)
    return math.sqrt(3 + h) * math.sqrt(1 - h) * f


def _tangent_ks(u: float, h: float, alt_form: bool):
    lead = h * h * u - h * u * u + h * h + 2 * h * u + u * u + 2 * h + 1
    if not alt_form:
        lead += u  # forced by the lines passing through E(u): k1 = k4 - k3
    k1 = lead * (u + 2)
    k2 = h * u + u * u + h + u + 1
    k3 = 2 * h * u**3 - h * h * u + 3 * h * u * u - 2 * u**3 - h * h - 3 * u * u - 2 * h - 3 * u - 1
    k4 = h * h * u * u + h * u**3 + 2 * h * h * u + 3 * h * u * u - u**3 + h * h + 6 * h * u + 2 * h + 1
    return k1, k2, k3, k4


def tangent_lines_closed_form(u: float, theta: float, frame: BilliardFrame, alt_form: bool = False) -> list:
    """The two tangents from E(u) to the envelope, as trilinear lines.

    Lines are (k1 +- k2 u w) u : k3 +- k2 w : (k4 +- k2 (u+1) w)(u+1).
    """
    k1, k2, k3, k4 = _tangent_ks(u, frame.h, alt_form)
    w = envelope_w(theta, frame, alt_form)
    return [
        np.array([(k1 + sg * k2 * u * w) * u, k3 + sg * k2 * w, (k4 + sg * k2 * (u + 1) * w) * (u + 1)])
        for sg in (1.0, -1.0)
    ]


def envelope_center_tri(u: float, theta: float, frame: BilliardFrame, alt_form: bool = False) -> np.ndarray:
    h = frame.h
    w2 = envelope_w(theta, frame, alt_form) ** 2
    k = h * u + u * u + h + u + 1
    g = 3 - h * h
    alpha = (-(h * u + h + 2) * h - h * (u + 2) * u + u * u + u + 1) * g + k * (1 - h) * w2
    beta = ((h * u + h + 2) * h + h * (u + 4) * u + u * u + u + 1) * g + k * (1 + h) * w2
    gamma = ((h * u + h + 2) * h - h * u * u + u * u + u + 1) * g + k * (1 + h) * w2
    return np.array([alpha, beta, gamma])


def locus_conic_coeffs(theta: float, frame: BilliardFrame, alt_form: bool = False) -> tuple:
    """k1..k6 of k1 a^2 + k2 b^2 + k3 c^2 + k4 bc + k5 ca + k6 ab = 0 (trilinear)."""
    h = frame.h
    w2 = envelope_w(theta, frame, alt_form) ** 2
    g = 3 - h * h
    k2 = ((1 + h) * (3 - h) * w2 + g * (3 + h) * (1 - h)) * (w2 + g)
    k3 = k2
    k1 = k2 * (1 + h) ** 2
    common = (1 + h) * (3 - h) * w2 + 2 * g * g
    k4 = -common * (1 + 2 * h - h * h) * w2 - (h**4 - 4 * h * h + 4 * h + 3) * g * g
    k5 = -common * (1 - h * h) * w2 - (h**4 + 2 * h**3 - 2 * h + 3) * g * g
    k6 = k5
    return k1, k2, k3, k4, k5, k6


def _tri_conic(k1, k2, k3, k4, k5, k6) -> np.ndarray:
    return np.array([[k1, k6 / 2, k5 / 2], [k6 / 2, k2, k4 / 2], [k5 / 2, k4 / 2, k3]])


def locus_conic_matrix(theta: float, frame: BilliardFrame, alt_form: bool = False) -> ConicMatrix:
    return ConicMatrix(_tri_conic(*locus_conic_coeffs(theta, frame, alt_form)))


def mandart_caustic(frame: BilliardFrame) -> tuple[ConicMatrix, ConicMatrix]:
    """Point form of the Mandart inellipse (trilinear) and its closed-form dual."""
    h = frame.h
    point = ConicMatrix(
        _tri_conic(
            (h + 1) ** 4,
            (1 - h) ** 2,
            (1 - h) ** 2,
            -2 * (1 - h) ** 2,
            -2 * (1 + h) ** 2 * (1 - h),
            -2 * (1 + h) ** 2 * (1 - h),
        )
    )
    dual = ConicMatrix(_tri_conic(0.0, 0.0, 0.0, (1 + h) ** 2, 1 - h, 1 - h), dual=True)
    return point, dual


class CausticParams(NamedTuple):
    mu: float
    psi: float
    u2: float
    u3: float


def caustic_tangent_params(u: float, frame: BilliardFrame) -> CausticParams:
    """Parameters of the two points reached from E(u) along caustic tangents.

    They are the roots of X^2 - mu X + psi = 0.
    """
    h = frame.h
    if abs(u) < 1e-14 or abs(u + 1) < 1e-14 or h == 1.0:
        raise ParameterPoleError(f"parameter pole at u={u}")
    mu = ((1 - h) * u * u + (3 + h * h) * u + (1 + h) ** 2) / ((h - 1) * (u + 1) * u)
    psi = -((h + 1) ** 2) / ((h - 1) * u)
    disc = mu * mu - 4 * psi
    if disc < 0:
        raise GeometryError("no real caustic tangents from this point")
    r = math.sqrt(disc)
    # avoid cancellation in the smaller root
    big = (mu + math.copysign(r, mu)) / 2
    small = psi / big
    u2, u3 = sorted((big, small))
    return CausticParams(mu, psi, u2, u3)


def caustic_orbit_params(u: float, frame: BilliardFrame, steps: int = 3) -> list:
    """Iterate the caustic tangent map in u: each step takes the root other
    than the previous vertex."""
    first = caustic_tangent_params(u, frame)
    seq = [u, first.u2]
    for _ in range(steps - 1):
        p = caustic_tangent_params(seq[-1], frame)
        prev = seq[-2]
        seq.append(p.u3 if abs(p.u2 - prev) < abs(p.u3 - prev) else p.u2)
    return seq

