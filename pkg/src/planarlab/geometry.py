"""Triangular billiards and Poncelet maps between superellipses."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.stats import kstest

from .errors import DomainError, NumericFailure

CORNER_TOL = 1e-10


def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1]


def _cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


# -- billiards -------------------------------------------------------------------------

@dataclass(frozen=True)
class Triangle:
    A: tuple
    B: tuple
    C: tuple

    def __post_init__(self):
        for k in "ABC":
            object.__setattr__(self, k, tuple(float(v) for v in getattr(self, k)))
        if abs(self.area) <= 1e-12:
            raise DomainError("degenerate triangle")

    @property
    def vertices(self):
        return (self.A, self.B, self.C)

    @property
    def area(self) -> float:
        return 0.5 * _cross(_sub(self.B, self.A), _sub(self.C, self.A))

    def edges(self):
        """Edge i is opposite vertex i: (B, C), (C, A), (A, B)."""
        V = self.vertices
        return [(V[(i + 1) % 3], V[(i + 2) % 3]) for i in range(3)]

    @property
    def angles(self) -> tuple:
        V = self.vertices
        out = []
        for i in range(3):
            u, v = _sub(V[(i + 1) % 3], V[i]), _sub(V[(i + 2) % 3], V[i])
            out.append(math.atan2(abs(_cross(u, v)), _dot(u, v)))
        return tuple(out)

    @property
    def kind(self) -> str:
        m = max(self.angles)
        if abs(m - math.pi / 2) < 1e-12:
            return "right"
        return "acute" if m < math.pi / 2 else "obtuse"

    def contains(self, p, strict=True) -> bool:
        s = math.copysign(1.0, self.area)
        vals = [s * _cross(_sub(b, a), _sub(p, a)) for a, b in self.edges()]
        return all(v > 0 for v in vals) if strict else all(v >= 0 for v in vals)


@dataclass(frozen=True)
class Reflection:
    point: tuple
    edge: int
    incoming: tuple
    outgoing: tuple
    angle_in: float       # angle between incoming ray and the edge normal
    angle_out: float


@dataclass
class BilliardPath:
    points: list
    reflections: list
    status: str = "ok"      # ok | corner

    def to_csv(self) -> str:
        return "x,y\n" + "".join(f"{p[0]!r},{p[1]!r}\n" for p in self.points)


def _hit(tri: Triangle, p, d, skip: int | None):
    best = None
    for i, (a, b) in enumerate(tri.edges()):
        if i == skip:
            continue
        e = _sub(b, a)
        den = _cross(d, e)
        if den == 0.0:
            continue
        w = _sub(a, p)
        t = _cross(w, e) / den
        s = _cross(w, d) / den
        if t > 1e-14 and -1e-12 <= s <= 1 + 1e-12 and (best is None or t < best[0]):
            best = (t, i, s)
    if best is None:
        raise NumericFailure("ray does not meet the triangle boundary")
    return best


def billiard_trajectory(tri: Triangle, start, direction, bounces: int) -> BilliardPath:
    """Unit-speed billiard path with specular reflection; stops at corners."""
    p = tuple(float(v) for v in start)
    if not tri.contains(p):
        raise DomainError("start must lie strictly inside the triangle")
    nd = math.hypot(*direction)
    if nd == 0:
        raise DomainError("direction must be nonzero")
    d = (direction[0] / nd, direction[1] / nd)
    path = BilliardPath([p], [])
    skip = None
    for _ in range(bounces):
        t, i, s = _hit(tri, p, d, skip)
        q = (p[0] + t * d[0], p[1] + t * d[1])
        path.points.append(q)
        if any(math.dist(q, v) < CORNER_TOL for v in tri.vertices):
            path.status = "corner"
            return path
        a, b = tri.edges()[i]
        e = _sub(b, a)
        ne = math.hypot(*e)
        n = (-e[1] / ne, e[0] / ne)
        dn = _dot(d, n)
        out = (d[0] - 2 * dn * n[0], d[1] - 2 * dn * n[1])
        ang_in = math.acos(min(1.0, abs(dn)))
        ang_out = math.acos(min(1.0, abs(_dot(out, n))))
        path.reflections.append(Reflection(q, i, d, out, ang_in, ang_out))
        p, d, skip = q, out, i
    return path


@dataclass
class FagnanoOrbit:
    feet: list
    closure_residual: float
    reflection_residual: float
    path: BilliardPath


def _foot(p, a, b):
    e = _sub(b, a)
    t = _dot(_sub(p, a), e) / _dot(e, e)
    return (a[0] + t * e[0], a[1] + t * e[1])


def fagnano_orbit(tri: Triangle) -> FagnanoOrbit:
    """Orthic triangle as a 3-periodic billiard orbit, checked by the billiard flow."""
    if tri.kind != "acute":
        raise DomainError(f"Fagnano orbit needs an acute triangle (got {tri.kind})")
    V = tri.vertices
    feet = [_foot(V[i], *tri.edges()[i]) for i in range(3)]
    # reflection law at each foot: the two orbit legs make equal angles with the side
    refl = 0.0
    for i in range(3):
        a, b = tri.edges()[i]
        e = _sub(b, a)
        u, v = _sub(feet[(i + 1) % 3], feet[i]), _sub(feet[(i + 2) % 3], feet[i])
        cu = _dot(u, e) / math.hypot(*u)
        cv = -_dot(v, e) / math.hypot(*v)
        refl = max(refl, abs(cu - cv))
    # start just inside on the leg F0 -> F1 and follow three bounces
    mid = ((feet[0][0] + feet[1][0]) / 2, (feet[0][1] + feet[1][1]) / 2)
    d = _sub(feet[1], feet[0])
    path = billiard_trajectory(tri, mid, d, 3)
    end = path.points[-1]
    closure = math.dist(end, feet[0])
    if path.status == "ok":
        # the leg after the third bounce must point back along F0 -> F1
        out = path.reflections[-1].outgoing
        nd = math.hypot(*d)
        closure = max(closure, math.hypot(out[0] - d[0] / nd, out[1] - d[1] / nd))
    else:
        closure = math.inf
    return FagnanoOrbit(feet, closure, refl, path)


# -- Poncelet map between superellipses -----------------------------------------------

@dataclass(frozen=True)
class PonceletConfig:
    """Inner x^2n + y^2n = rho^2n, outer x^2m + y^2m = 2 (counterclockwise)."""
    n: int
    m: int
    inner_radius: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise DomainError("exponents must be >= 1")
        if not 0 < self.inner_radius:
            raise DomainError("inner_radius must be positive")

    def inner_point(self, phi: float) -> tuple:
        c, s = math.cos(phi), math.sin(phi)
        r = self.inner_radius / (c ** (2 * self.n) + s ** (2 * self.n)) ** (1 / (2 * self.n))
        return (r * c, r * s)

    def inner_grad(self, p) -> tuple:
        k = 2 * self.n - 1
        return (p[0] ** k, p[1] ** k)

    def outer_F(self, p) -> float:
        return p[0] ** (2 * self.m) + p[1] ** (2 * self.m) - 2.0

    def outer_point(self, theta: float) -> tuple:
        c, s = math.cos(theta), math.sin(theta)
        r = (2.0 / (c ** (2 * self.m) + s ** (2 * self.m))) ** (1 / (2 * self.m))
        return (r * c, r * s)


@dataclass(frozen=True)
class PonceletStep:
    point: tuple
    tangency: tuple
    advance: float          # angle gained, in (0, 2 pi)
    outer_residual: float
    tangency_residual: float


def poncelet_step(cfg: PonceletConfig, p, check: bool = True) -> PonceletStep:
    """Next point of the counterclockwise tangent-chord map on the outer curve."""
    p = (float(p[0]), float(p[1]))
    if check and abs(cfg.outer_F(p)) > 1e-10:
        raise DomainError("point is not on the outer curve")
    th = math.atan2(p[1], p[0])

    def h(phi):
        g = cfg.inner_point(phi)
        grad = cfg.inner_grad(g)
        return _dot(grad, _sub(p, g))

    # visible from p near phi = th, hidden near th + pi: the ccw tangency lies between
    try:
        phi = brentq(h, th, th + math.pi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    except ValueError as exc:
        raise NumericFailure(f"tangency bracket failed at p={p}: h={h(th)}, {h(th + math.pi)}") from exc
    g = cfg.inner_point(phi)
    d = _sub(g, p)

    def G(s):
        return cfg.outer_F((p[0] + s * d[0], p[1] + s * d[1]))
    hi = 2.0
    while G(hi) < 0:
        hi *= 2
        if hi > 1e6:
            raise NumericFailure(f"chord from {p} does not leave the outer curve")
    s = brentq(G, 1.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    q = (p[0] + s * d[0], p[1] + s * d[1])
    grad = cfg.inner_grad(g)
    tres = abs(h(phi)) / (math.hypot(*grad) * math.hypot(*d))
    adv = (math.atan2(q[1], q[0]) - th) % (2 * math.pi)
    return PonceletStep(q, g, adv, abs(cfg.outer_F(q)), tres)


@dataclass(frozen=True)
class RotationEstimate:
    estimate: float
    bound: float
    iterations: int
    p0: tuple

    def to_json(self):
        return {"estimate": self.estimate, "bound": self.bound, "iterations": self.iterations,
                "p0": list(self.p0)}


def rotation_number(cfg: PonceletConfig, p0=None, iterations: int = 1000) -> RotationEstimate:
    """Mean lifted angular advance / 2 pi.

    For a circle homeomorphism |lift^N(x) - x - N rho| < 1, so 1/N bounds the error.
    """
    if iterations < 100:
        raise DomainError("iterations must be >= 100")
    p = tuple(p0) if p0 is not None else cfg.outer_point(0.0)
    total = 0.0
    for _ in range(iterations):
        st = poncelet_step(cfg, p, check=False)
        total += st.advance
        p = st.point
    return RotationEstimate(total / (2 * math.pi * iterations), 1.0 / iterations, iterations,
                            tuple(p0) if p0 is not None else cfg.outer_point(0.0))


def orbit(cfg: PonceletConfig, p0, steps: int) -> list:
    pts = [tuple(p0)]
    for _ in range(steps):
        pts.append(poncelet_step(cfg, pts[-1], check=False).point)
    return pts


@dataclass
class ConjugacyReport:
    verdict: str                  # ConsistentWithRotation | NotConjugate | Inconclusive
    rotation: float
    displacements: list
    witness: tuple | None = None
    ks_statistic: float | None = None

    def to_json(self):
        return {"verdict": self.verdict, "rotation_number": self.rotation,
                "displacements": self.displacements,
                "witness": None if self.witness is None else list(self.witness),
                "ks_statistic": self.ks_statistic}


def conjugacy_diagnostic(cfg: PonceletConfig, samples: Sequence[float] | None = None,
                         iterations: int = 400, periodic_tol: float = 1e-9,
                         aperiodic_tol: float = 1e-4) -> ConjugacyReport:
    """Compare 4-step displacements across sample angles on the outer curve.

    With rotation number 1/4 a conjugacy to a rotation forces all points to be
    4-periodic, so a mix of periodic and clearly non-periodic samples is a
    witness against it. Otherwise the fractional orbit angles are tested for
    equidistribution (Kolmogorov-Smirnov against uniform).
    """
    thetas = list(samples) if samples is not None else [k * math.pi / 24 for k in range(12)]
    if len(thetas) < 2:
        raise DomainError("need at least 2 sample points")
    rot = rotation_number(cfg, cfg.outer_point(thetas[0]), iterations).estimate
    if abs(rot - 0.25) < 2.0 / iterations:
        disp = []
        for th in thetas:
            p = cfg.outer_point(th)
            disp.append(math.dist(orbit(cfg, p, 4)[-1], p))
        per = [d < periodic_tol for d in disp]
        if all(per):
            return ConjugacyReport("ConsistentWithRotation", rot, disp)
        bad = [i for i, d in enumerate(disp) if d > aperiodic_tol]
        if any(per) and bad:
            w = max(bad, key=lambda i: disp[i])
            return ConjugacyReport("NotConjugate", rot, disp, cfg.outer_point(thetas[w]))
        return ConjugacyReport("Inconclusive", rot, disp)
    pts = orbit(cfg, cfg.outer_point(thetas[0]), iterations)
    frac = [(math.atan2(q[1], q[0]) / (2 * math.pi)) % 1.0 for q in pts]
    ks = float(kstest(frac, "uniform").statistic)
    verdict = "ConsistentWithRotation" if ks < 0.05 else "Inconclusive"
    return ConjugacyReport(verdict, rot, [], None, ks)
