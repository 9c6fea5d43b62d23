"""Concentric circle/ellipse Poncelet configurations and Fregier circles.

The elliptic billiard in x^2/a^2 + y^2/b^2 = 1 with confocal caustic
x^2/(a^2 - lam) + y^2/(b^2 - lam) = 1 is squashed by (x, y) -> (x b/a, y): the
outer ellipse becomes the circle of radius R = b and the caustic stays an
axis-aligned ellipse.  Poncelet polygons of this pair carry, at each vertex
P_i with interior angle theta_i, a Fregier circle of radius R |cos theta_i|
(the envelope of chords seen from P_i under theta_i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .conic_core import ConicMatrix, EllipseAxes, adjugate, angle_at, join, tangency_residual
from .errors import GeometryError, NotPeriodicError
from .trilinear_frame import solve_h

__all__ = [
    "CirclePictureConfig",
    "circle_picture",
    "next_vertex",
    "closure_defect",
    "edge_residuals",
    "find_caustic_for_period",
    "PonceletOrbit",
    "orbit",
    "InvariantSums",
    "invariant_sums",
    "radii_bound_check",
    "InvariantReport",
    "phase_report",
    "conjecture_scan",
    "CONJECTURE_SPREAD_TOL",
]

TWO_PI = 2 * math.pi
CONJECTURE_SPREAD_TOL = 1e-7


@dataclass(frozen=True)
class CirclePictureConfig:
    R: float
    a_c: float
    b_c: float
    a: float
    b: float
    h: float
    rho: float
    lam: float

    @property
    def caustic(self) -> ConicMatrix:
        return ConicMatrix(np.diag([1 / self.a_c**2, 1 / self.b_c**2, -1.0]))

    @property
    def caustic_dual(self) -> ConicMatrix:
        return adjugate(self.caustic)

    @property
    def caustic_axes(self) -> EllipseAxes:
        if self.a_c >= self.b_c:
            return EllipseAxes((0.0, 0.0), self.a_c, self.b_c, 0.0)
        return EllipseAxes((0.0, 0.0), self.b_c, self.a_c, math.pi / 2)


def circle_picture(a: float, b: float, lam: float) -> CirclePictureConfig:
    if not 0 < lam < b * b:
        raise GeometryError(f"invalid confocal parameter lam={lam}; need 0 < lam < b^2")
    h = solve_h(a, b)
    return CirclePictureConfig(
        R=b,
        a_c=(b / a) * math.sqrt(a * a - lam),
        b_c=math.sqrt(b * b - lam),
        a=a,
        b=b,
        h=h,
        rho=(1 - h * h) / 2,
        lam=lam,
    )


def next_vertex(cfg: CirclePictureConfig, P, orientation: int = 1) -> np.ndarray:
    """Far end on the circle of the caustic tangent from P that advances in
    the given rotational sense (+1 counterclockwise).

    Contact points are found where the caustic is the unit circle
    (x / a_c, y / b_c), which stays well conditioned for flat caustics.
    """
    P = np.asarray(P, float)[:2]
    q = np.array([P[0] / cfg.a_c, P[1] / cfg.b_c])
    rq = math.hypot(q[0], q[1])
    if rq <= 1.0:
        raise GeometryError("point is not outside the caustic")
    base = math.atan2(q[1], q[0])
    half = math.acos(1.0 / rq)
    contacts = [np.array([cfg.a_c * math.cos(base + s * half), cfg.b_c * math.sin(base + s * half)]) for s in (1, -1)]
    tau = orientation * np.array([-P[1], P[0]])
    T = max(contacts, key=lambda c: float((c - P) @ tau))
    d = T - P
    return P - 2 * float(P @ d) / float(d @ d) * d


def _step_angle(P, Q, orientation: int) -> float:
    da = math.atan2(Q[1], Q[0]) - math.atan2(P[1], P[0])
    return (orientation * da) % TWO_PI


def closure_defect(cfg: CirclePictureConfig, n: int, start: float = 0.0, p: int = 1) -> float:
    """Total angle swept in n steps minus 2 pi p (increasing in lam)."""
    P = cfg.R * np.array([math.cos(start), math.sin(start)])
    total = 0.0
    for _ in range(n):
        Q = next_vertex(cfg, P)
        total += _step_angle(P, Q, 1)
        P = Q
    return total - TWO_PI * p


def find_caustic_for_period(a: float, b: float, n: int, p: int = 1, start: float = 0.0) -> float:
    """Confocal parameter lam* for which the Poncelet polygons close after n
    steps winding p times, by bisection on the closure defect."""
    if n < 3:
        raise GeometryError("period must be at least 3")
    lo, hi = b * b * 1e-12, b * b * (1 - 1e-12)

    def f(lam):
        return closure_defect(circle_picture(a, b, lam), n, start, p)

    f_lo, f_hi = f(lo), f(hi)
    if f_lo * f_hi > 0:
        raise GeometryError(f"period {n} with winding {p} not attainable (no sign change)")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo < 1e-14 * b * b:
            break
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True, eq=False)
class PonceletOrbit:
    n: int
    vertices: np.ndarray  # (n, 2)
    angles: np.ndarray
    radii: np.ndarray
    closure_defect: float
    config: CirclePictureConfig
    start: float


def orbit(cfg: CirclePictureConfig, start_angle: float, n: int, max_defect: float = 1e-6) -> PonceletOrbit:
    P = cfg.R * np.array([math.cos(start_angle), math.sin(start_angle)])
    pts = [P]
    for _ in range(n):
        pts.append(next_vertex(cfg, pts[-1]))
    back = pts[-1]
    defect = abs(math.remainder(math.atan2(back[1], back[0]) - start_angle, TWO_PI))
    if defect > max_defect:
        raise NotPeriodicError(f"orbit does not close after {n} steps (defect {defect:.3e})")
    V = np.array(pts[:n])
    angles = np.array([angle_at(V[i], V[i - 1], V[(i + 1) % n]) for i in range(n)])
    radii = cfg.R * np.abs(np.cos(angles))
    return PonceletOrbit(n, V, angles, radii, defect, cfg, start_angle)


def edge_residuals(orb: PonceletOrbit) -> np.ndarray:
    """Tangency residuals of every edge against the caustic."""
    D = orb.config.caustic_dual
    V = orb.vertices
    return np.array([tangency_residual(D, join(V[i], V[(i + 1) % orb.n])) for i in range(orb.n)])


class InvariantSums(NamedTuple):
    sum_cos2: float
    sum_area: float
    sum_diag2: float


def invariant_sums(orb: PonceletOrbit) -> InvariantSums:
    """Sum of cos^2 of the angles, of the Fregier-circle areas and of the
    squared short diagonals P_{i-1} P_{i+1}."""
    V = orb.vertices
    n = orb.n
    diag2 = sum(float(np.sum((V[(i + 1) % n] - V[i - 1]) ** 2)) for i in range(n))
    return InvariantSums(
        float(np.sum(np.cos(orb.angles) ** 2)),
        float(np.sum(math.pi * orb.radii**2)),
        diag2,
    )


def radii_bound_check(orb: PonceletOrbit) -> bool:
    """3/4 <= (r1^2 + r2^2 + r3^2) / R^2 <= 1 for a Poncelet triangle."""
    if orb.n != 3:
        raise GeometryError("bound stated for n=3 only")
    v = float(np.sum(orb.radii**2)) / orb.config.R**2
    return 0.75 - 1e-12 <= v <= 1.0 + 1e-12


@dataclass(frozen=True, eq=False)
class InvariantReport:
    n: int
    lam: float
    phases: np.ndarray
    sum_cos2: np.ndarray
    sum_area: np.ndarray
    sum_diag2: np.ndarray
    closure_defects: np.ndarray
    predicted_cos2: float | None = None
    predicted_area: float | None = None
    predicted_diag2: float | None = None

    @staticmethod
    def _spread(v: np.ndarray) -> float:
        # unit floor: sums that vanish identically (n = 4 gives rectangles) stay finite
        return float((v.max() - v.min()) / max(abs(v.mean()), 1.0))

    @property
    def spread(self) -> float:
        """Relative spread of the cos^2 sum across phases."""
        return self._spread(self.sum_cos2)

    @property
    def spread_area(self) -> float:
        return self._spread(self.sum_area)

    @property
    def spread_diag2(self) -> float:
        return self._spread(self.sum_diag2)

    @property
    def supports_conjecture(self) -> bool:
        return self.spread < CONJECTURE_SPREAD_TOL


def phase_report(a: float, b: float, n: int, phases: int = 32, lam: float | None = None) -> InvariantReport:
    if phases < 16:
        raise GeometryError("use at least 16 phases")
    lam = find_caustic_for_period(a, b, n) if lam is None else lam
    cfg = circle_picture(a, b, lam)
    starts = TWO_PI * np.arange(phases) / phases
    sums, defects = [], []
    for t in starts:
        orb = orbit(cfg, float(t), n)
        sums.append(invariant_sums(orb))
        defects.append(orb.closure_defect)
    S = np.array(sums)
    pred = (None, None, None)
    if n == 3:
        rho = cfg.rho
        pred = (1 - rho / 2, math.pi * b * b * (1 - rho / 2), 2 * b * b * (rho + 4))
    return InvariantReport(n, lam, starts, S[:, 0], S[:, 1], S[:, 2], np.array(defects), *pred)


def conjecture_scan(a: float, b: float, n_range: Sequence[int], phases: int = 32) -> list:
    """Per-period invariant reports; measures, does not assume, constancy."""
    return [phase_report(a, b, n, phases) for n in n_range]
