"""Two-zone piecewise-linear systems separated by a graph y = c(x)."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from scipy.optimize import brentq

from .algebra import SparsePoly, chebyshev_t
from .errors import DomainError, NoReturn, NumericFailure, Sliding, Tangency
from .flow import Event, EventRecord, Trajectory, integrate

log = logging.getLogger(__name__)

TANGENCY_TOL = 1e-10
ROOT_RESIDUAL = 1e-6


def _frac(v):
    return Fraction(str(v)) if isinstance(v, float) else Fraction(v)


@dataclass(frozen=True)
class AffineField:
    """X(p) = A p + b with exact entries."""
    A: tuple
    b: tuple

    def __post_init__(self):
        A = tuple(tuple(_frac(v) for v in row) for row in self.A)
        if len(A) != 2 or any(len(r) != 2 for r in A) or len(self.b) != 2:
            raise DomainError("affine field needs a 2x2 matrix and a 2-vector")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", tuple(_frac(v) for v in self.b))
        fa = tuple(tuple(float(v) for v in r) for r in A)
        object.__setattr__(self, "_f", (fa, tuple(float(v) for v in self.b)))

    def __call__(self, x, y):
        (a, b), (c, d) = self._f[0]
        e, f = self._f[1]
        return (a * x + b * y + e, c * x + d * y + f)

    def rhs(self, t, s):
        return list(self(s[0], s[1]))

    @property
    def trace(self) -> float:
        return float(self.A[0][0] + self.A[1][1])

    def polys(self):
        x, y = SparsePoly.variables(2)
        (a, b), (c, d) = self.A
        return a * x + b * y + self.b[0], c * x + d * y + self.b[1]

    def to_json(self):
        return {"A": [[str(v) for v in r] for r in self.A], "b": [str(v) for v in self.b]}

    @classmethod
    def from_json(cls, data):
        return cls(data["A"], data["b"])


@dataclass(frozen=True)
class PwlSystem:
    """Upper field on y >= c(x), lower field on y <= c(x)."""
    upper: AffineField
    lower: AffineField
    separation: SparsePoly
    eps: float | None = None
    n: int | None = None

    def __post_init__(self):
        sep = self.separation
        if sep.nvars != 1:
            raise DomainError("separation must be a univariate polynomial c(x)")
        object.__setattr__(self, "_c", sep.compile())
        object.__setattr__(self, "_dc", sep.diff(0).compile())

    def c(self, x: float) -> float:
        return float(self._c(x))

    def dc(self, x: float) -> float:
        return float(self._dc(x))

    def g(self, x: float, y: float) -> float:
        return y - self.c(x)

    def normal(self, x: float) -> tuple:
        """Gradient of g = y - c(x) at the curve point over x."""
        return (-self.dc(x), 1.0)

    def normal_components(self, x: float) -> tuple:
        p = (x, self.c(x))
        nx, ny = self.normal(x)
        u, l = self.upper(*p), self.lower(*p)
        return (nx * u[0] + ny * u[1], nx * l[0] + ny * l[1])

    def check_crossing(self, x: float) -> int:
        """+1 (upward crossing), -1 (downward); raises Sliding / Tangency."""
        nu, nl = self.normal_components(x)
        p = (x, self.c(x))
        if abs(nu) < TANGENCY_TOL or abs(nl) < TANGENCY_TOL:
            raise Tangency(p)
        if (nu > 0) != (nl > 0):
            raise Sliding(p)
        return 1 if nu > 0 else -1

    def hamiltonians(self):
        """(H+, H-) for the Chebyshev construction, None otherwise."""
        if self.n is None:
            return None
        x, y = SparsePoly.variables(2)
        return 8 * y + x * x - 4 * x * y + 8 * y * y, -2 * y + x * x + y * y

    def chebyshev_zeros(self) -> list[float]:
        """Positive zeros x_k = cos((2k+1) pi / (2n)), k = 0..[(n-2)/2]."""
        if self.n is None:
            return []
        m = (self.n - 2) // 2
        return [math.cos((2 * k + 1) * math.pi / (2 * self.n)) for k in range(m + 1)]

    def to_json(self):
        return {"upper": self.upper.to_json(), "lower": self.lower.to_json(),
                "separation": self.separation.to_json(), "eps": self.eps, "n": self.n}

    @classmethod
    def from_json(cls, data):
        return cls(AffineField.from_json(data["upper"]), AffineField.from_json(data["lower"]),
                   SparsePoly.from_json(data["separation"]), data.get("eps"), data.get("n"))


def chebyshev_system(n: int, eps) -> PwlSystem:
    """Upper (x - 4y - 2, x/2 - y), lower (-y + 1, x), separation y = eps T_n(x)."""
    if n < 2:
        raise DomainError("n must be >= 2")
    e = Fraction(str(eps)) if isinstance(eps, float) else Fraction(eps)
    if e < 0:
        raise DomainError("eps must be >= 0")
    upper = AffineField(((1, -4), (Fraction(1, 2), -1)), (-2, 0))
    lower = AffineField(((0, -1), (1, 0)), (1, 0))
    return PwlSystem(upper, lower, chebyshev_t(n) * e, float(eps), n)


# -- integration with crossings -----------------------------------------------------

def _join(parts: list[Trajectory]) -> Trajectory:
    out = Trajectory(parts[0].x0, list(parts[0].ts), list(parts[0].ys), list(parts[0].ks),
                     list(parts[0].hs), [], parts[0].status, parts[0].nfev)
    for p in parts[1:]:
        out.ts += p.ts[1:]
        out.ys += p.ys[1:]
        out.ks += p.ks
        out.hs += p.hs
        out.nfev += p.nfev
        out.status = p.status
    return out


def _half(sys: PwlSystem, field_, start, zone: int, t0: float, t1: float, tol: float):
    """Integrate one field until the orbit leaves its zone (or time runs out)."""
    ev = Event(lambda t, s: s[1] - sys.c(s[0]), direction=-zone, terminal=1, name="crossing")
    return integrate(field_.rhs, start, (t0, t1), tol=tol, events=[ev])


def pwl_integrate(sys: PwlSystem, x0: Sequence[float], t_span, tol: float = 1e-12,
                  max_crossings: int = 10_000) -> Trajectory:
    """Integrate the active affine field, switching at transversal crossings.

    Crossing events are recorded with direction +1 (upward) / -1 (downward);
    Sliding and Tangency are raised at the offending curve point.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 < t0:
        raise DomainError("pwl_integrate runs forward in time only")
    g0 = sys.g(*x0)
    if g0 == 0.0:
        raise DomainError("initial point lies on the separation curve")
    zone = 1 if g0 > 0 else -1
    parts, crossings = [], []
    start, t = tuple(float(v) for v in x0), t0
    while True:
        field_ = sys.upper if zone > 0 else sys.lower
        tr = _half(sys, field_, start, zone, t, t1, tol)
        parts.append(tr)
        if tr.status != "event":
            break
        rec = tr.events[-1]
        x = rec.state[0]
        direction = sys.check_crossing(x)
        if direction != -zone:
            raise Sliding((x, sys.c(x)))
        crossings.append(EventRecord(0, rec.t, (x, sys.c(x)), direction))
        if len(crossings) >= max_crossings:
            break
        zone = -zone
        start, t = (x, sys.c(x)), rec.t
        if t >= t1:
            break
    out = _join(parts)
    out.events = crossings
    out.status = "completed"
    return out


# -- crossing return map --------------------------------------------------------------

@dataclass(frozen=True)
class HalfMap:
    x0: float
    x1: float
    T: float
    flux0: float
    flux1: float
    trace: float

    @property
    def derivative(self) -> float:
        # transition-map derivative between two graph sections parameterised by x
        return self.flux0 / self.flux1 * math.exp(self.trace * self.T)


def _half_map(sys: PwlSystem, x: float, zone: int, tol: float, max_time: float) -> HalfMap:
    field_ = sys.upper if zone > 0 else sys.lower
    start = (x, sys.c(x))
    d0 = sys.check_crossing(x)
    if d0 != zone:
        raise NoReturn(f"orbit from x={x} does not enter the {'upper' if zone > 0 else 'lower'} zone")
    tr = _half(sys, field_, start, zone, 0.0, max_time, tol)
    if tr.status != "event":
        raise NoReturn(f"no return to the separation curve from x={x}")
    rec = tr.events[-1]
    x1 = rec.state[0]
    sys.check_crossing(x1)
    idx = 0 if zone > 0 else 1
    f0 = sys.normal_components(x)[idx]
    f1 = sys.normal_components(x1)[idx]
    return HalfMap(x, x1, rec.t, f0, f1, field_.trace)


@dataclass(frozen=True)
class CrossingReturn:
    x: float
    Pi: float
    T: float
    derivative: float
    x_mid: float


def crossing_return(sys: PwlSystem, x: float, tol: float = 1e-12,
                    max_time: float = 100.0) -> CrossingReturn:
    """Upward crossing at x -> upper half-map -> lower half-map -> next upward crossing."""
    h1 = _half_map(sys, x, 1, tol, max_time)
    h2 = _half_map(sys, h1.x1, -1, tol, max_time)
    return CrossingReturn(x, h2.x1, h1.T + h2.T, h1.derivative * h2.derivative, h1.x1)


@dataclass(frozen=True)
class CrossingCycle:
    point: tuple
    pi_prime: float
    pi_prime_fd: float
    classification: str
    period: float

    def to_json(self):
        return {"point": list(self.point), "pi_prime": self.pi_prime,
                "pi_prime_fd": self.pi_prime_fd, "classification": self.classification,
                "period": self.period}


@dataclass
class CrossingScan:
    cycles: list
    continuum: bool = False
    failures: list = field(default_factory=list)

    def __len__(self):
        return len(self.cycles)

    def __iter__(self):
        return iter(self.cycles)

    def __getitem__(self, i):
        return self.cycles[i]

    def to_json(self):
        return {"continuum": self.continuum, "cycles": [c.to_json() for c in self.cycles],
                "failures": [[x, m] for x, m in self.failures],
                "note": "separation restricted to function graphs y = c(x)"}


def _fd_derivative(sys, x, tol, max_time, h=None):
    h = h or 1e-4 * max(abs(x), 1e-2)

    def D(hh):
        a = crossing_return(sys, x + hh, tol, max_time).Pi
        b = crossing_return(sys, x - hh, tol, max_time).Pi
        return (a - b) / (2 * hh)
    d1, d2 = D(h), D(h / 2)
    return (4 * d2 - d1) / 3


def crossing_cycles(sys: PwlSystem, x_range=(0.01, 1.2), grid: int | Sequence[float] = 240,
                    tol: float = 1e-12, xtol: float = 1e-10, max_time: float = 100.0,
                    hyperbolic_margin: float = 1e-4, closure_tol: float = 1e-9) -> CrossingScan:
    """Fixed points of the crossing return map over upward crossings at x in x_range."""
    from .cycles import classify_multiplier
    if isinstance(grid, int):
        lo, hi = x_range
        xs = [lo + (hi - lo) * i / (grid - 1) for i in range(grid)]
    else:
        xs = [float(v) for v in grid]
    samples, failures = [], []
    for x in xs:
        try:
            samples.append(crossing_return(sys, x, tol, max_time))
        except NumericFailure as exc:
            failures.append((x, f"{type(exc).__name__}: {exc}"))
    if len(samples) < 2:
        raise DomainError("crossing return map defined on fewer than 2 grid points")
    disp = [s.Pi - s.x for s in samples]
    if all(abs(d) < closure_tol for d in disp):
        return CrossingScan([], True, failures)

    def f(x):
        return crossing_return(sys, x, tol, max_time).Pi - x

    roots = []
    for a, b, da, db in zip(samples, samples[1:], disp, disp[1:]):
        if b.x - a.x > 4 * (xs[1] - xs[0]) + 1e-15:
            continue   # a failed grid point lies in between
        if da == 0.0:
            roots.append(a.x)
        elif da * db < 0:
            try:
                roots.append(brentq(f, a.x, b.x, xtol=xtol, rtol=1e-15))
            except NumericFailure as exc:
                failures.append((a.x, f"bracket refinement failed: {exc}"))
    cycles = []
    for r in roots:
        ret = crossing_return(sys, r, tol, max_time)
        if abs(ret.Pi - r) > ROOT_RESIDUAL * max(1.0, abs(r)):
            # sign change across a jump of the return map (an arc grazes the curve)
            failures.append((r, f"displacement jumps at x={r:.10g} (residual {ret.Pi - r:.3g})"))
            continue
        fd = _fd_derivative(sys, r, tol, max_time)
        cycles.append(CrossingCycle((r, sys.c(r)), ret.derivative, fd,
                                    classify_multiplier(ret.derivative, hyperbolic_margin), ret.T))
    return CrossingScan(cycles, False, failures)


# -- algebraic crossing cycles ------------------------------------------------------

@dataclass
class AlgebraicCycleReport:
    checks: dict
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(v is True for v in self.checks.values() if v != "not evaluated")

    def __bool__(self):
        return self.ok

    def to_json(self):
        return {"ok": self.ok, "checks": self.checks, "details": self.details}


def _invariant(f: SparsePoly, P: SparsePoly, Q: SparsePoly):
    """f divides its Lie derivative; degrees force a constant cofactor for affine fields."""
    L = P * f.diff(0) + Q * f.diff(1)
    if L.is_zero():
        return True, Fraction(0)
    d = f.degree()
    if L.degree() > d:
        return False, None
    top = f.homogeneous_part(d)
    Ltop = L.homogeneous_part(d)
    if Ltop.is_zero():
        return False, None
    e, c = top.sorted_terms()[0]
    K = Ltop.terms.get(e, 0) / c
    return (L - f * K).is_zero(), K


def verify_algebraic_cycle(sys: PwlSystem | None, upper_curve: SparsePoly, lower_curve: SparsePoly,
                           crossing_points: Sequence[Sequence[float]], separation: SparsePoly | None = None,
                           residual_tol: float = 1e-9) -> AlgebraicCycleReport:
    """Checks that two invariant curve pieces close up into a crossing cycle.

    (a) both curves pass through both crossing points; (b) each curve is
    invariant for its field; (c) crossings are transversal. With ``sys=None``
    (geometry-only) (b) is "not evaluated" and (c) checks that the curves cut
    the separation curve transversally.
    """
    if len(crossing_points) != 2:
        raise DomainError("exactly two crossing points are required")
    sep = sys.separation if sys is not None else separation
    if sep is None:
        x = SparsePoly.var(0, 1, ("x",))
        sep = x * 0
    c, dc = sep.compile(), sep.diff(0).compile()
    checks, details = {}, {}
    res = []
    for curve in (upper_curve, lower_curve):
        fn = curve.compile()
        res += [abs(float(fn(*p))) for p in crossing_points]
    res += [abs(float(p[1] - c(p[0]))) for p in crossing_points]
    details["residuals"] = res
    checks["a_through_points"] = max(res) < residual_tol
    if sys is None:
        checks["b_invariant"] = "not evaluated"
    else:
        ok_u, Ku = _invariant(upper_curve, *sys.upper.polys())
        ok_l, Kl = _invariant(lower_curve, *sys.lower.polys())
        details["cofactors"] = [None if Ku is None else str(Ku), None if Kl is None else str(Kl)]
        checks["b_invariant"] = ok_u and ok_l
    trans = True
    for p in crossing_points:
        x = float(p[0])
        n = (-float(dc(x)), 1.0)
        for curve in (upper_curve, lower_curve):
            gx, gy = float(curve.diff(0)(*p)), float(curve.diff(1)(*p))
            # curve tangent (-gy, gx) must not be parallel to the separation tangent
            if abs(n[0] * -gy + n[1] * gx) < TANGENCY_TOL:
                trans = False
        if sys is not None:
            try:
                sys.check_crossing(x)
            except (Sliding, Tangency) as exc:
                details.setdefault("crossing_errors", []).append(str(exc))
                trans = False
    checks["c_transversal"] = trans
    return AlgebraicCycleReport(checks, details)
