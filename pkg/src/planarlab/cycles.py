"""Return maps, limit cycles, Melnikov functions and period functions."""
from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .algebra import GaussQ, RationalFn, SparsePoly, vf_calculus
from .errors import DomainError, NoReturn, NumericFailure
from .flow import Event, VectorField, VectorField2, integrate

log = logging.getLogger(__name__)

CLOSURE_TOL = 1e-8
ROOT_RESIDUAL = 1e-6
RETURN_TOL = 1e-12


# -- sections and return maps ----------------------------------------------------

@dataclass(frozen=True)
class Section:
    """Segment ``p0 + r*d`` for r in [r_min, r_max] (d is normalised)."""
    p0: tuple = (0.0, 0.0)
    d: tuple = (1.0, 0.0)
    r_min: float = 0.0
    r_max: float = math.inf

    def __post_init__(self):
        n = math.hypot(*self.d)
        if n == 0:
            raise DomainError("section direction must be nonzero")
        object.__setattr__(self, "d", (self.d[0] / n, self.d[1] / n))
        object.__setattr__(self, "p0", (float(self.p0[0]), float(self.p0[1])))

    def point(self, r: float) -> tuple:
        return (self.p0[0] + r * self.d[0], self.p0[1] + r * self.d[1])

    def coord(self, s) -> float:
        return (s[0] - self.p0[0]) * self.d[0] + (s[1] - self.p0[1]) * self.d[1]

    def g(self, t, s) -> float:
        # signed distance from the section line
        return self.d[0] * (s[1] - self.p0[1]) - self.d[1] * (s[0] - self.p0[0])

    def flux(self, vf, r: float) -> float:
        """<X, d_perp> at the section point; zero means tangency."""
        X = vf(*self.point(r))
        return self.d[0] * X[1] - self.d[1] * X[0]

    def check_transversal(self, vf, rs: Sequence[float] | None = None, rel: float = 1e-12):
        if rs is None:
            hi = self.r_max if math.isfinite(self.r_max) else self.r_min + 1.0
            rs = np.linspace(self.r_min, hi, 9)[1:]
        signs = set()
        for r in rs:
            X = vf(*self.point(r))
            f = self.d[0] * X[1] - self.d[1] * X[0]
            if abs(f) <= rel * max(1.0, math.hypot(*X)):
                raise DomainError(f"section is tangent to the field at r={r}")
            signs.add(f > 0)
        if len(signs) > 1:
            raise DomainError("field crosses the section in both directions")


@dataclass(frozen=True)
class ReturnSample:
    r: float
    Pi: float
    T: float
    windings: int = 1
    in_range: bool = True


def _as_field(vf):
    return vf if isinstance(vf, VectorField) else VectorField2(*vf)


def return_map(vf, section: Section, r: float, windings: int = 1, tol: float = RETURN_TOL,
               max_time: float = 1000.0, escape_norm: float | None = None) -> ReturnSample:
    """Return of the section point ``r`` after ``windings`` same-side crossings."""
    vf = _as_field(vf)
    x0 = section.point(r)
    f0 = section.flux(vf, r)
    if abs(f0) <= 1e-14 * max(1.0, math.hypot(*vf(*x0))):
        raise DomainError(f"section not transversal at r={r}")
    sgn = 1 if f0 > 0 else -1
    ev = Event(section.g, direction=sgn, terminal=windings,
               accept=lambda t, s: section.coord(s) > 0)
    tr = integrate(vf, x0, (0.0, max_time), tol=tol, events=[ev], escape_norm=escape_norm)
    if tr.status != "event":
        raise NoReturn(f"no return to the section within t={max_time} from r={r}")
    last = tr.events[-1]
    Pi = section.coord(last.state)
    return ReturnSample(r, Pi, last.t, windings, section.r_min <= Pi <= section.r_max)


@dataclass(frozen=True)
class Cycle:
    r_star: float
    pi_prime: float
    classification: str   # hyperbolic-stable | hyperbolic-unstable | non-hyperbolic-candidate

    def to_json(self):
        return {"r_star": self.r_star, "pi_prime": self.pi_prime,
                "classification": self.classification}


@dataclass
class CycleScan:
    cycles: list
    continuum: bool = False
    samples: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.cycles)

    def __len__(self):
        return len(self.cycles)

    def __getitem__(self, i):
        return self.cycles[i]

    def to_json(self):
        return {"continuum": self.continuum, "cycles": [c.to_json() for c in self.cycles],
                "failures": [[r, msg] for r, msg in self.failures]}


def pi_prime_fd(vf, section: Section, r: float, h: float | None = None, tol: float = 1e-13,
                **kw) -> float:
    """Central difference of the return map with one Richardson halving."""
    h = h or 1e-3 * max(abs(r), 1e-2)

    def D(hh):
        a = return_map(vf, section, r + hh, tol=tol, **kw).Pi
        b = return_map(vf, section, r - hh, tol=tol, **kw).Pi
        return (a - b) / (2 * hh)
    d1, d2 = D(h), D(h / 2)
    return (4 * d2 - d1) / 3


def classify_multiplier(pp: float, hyperbolic_margin: float = 1e-4) -> str:
    if abs(pp - 1.0) <= hyperbolic_margin:
        return "non-hyperbolic-candidate"
    return "hyperbolic-stable" if pp < 1.0 else "hyperbolic-unstable"


def find_cycles(vf, section: Section, grid: Sequence[float], tol: float = RETURN_TOL,
                xtol: float = 1e-10, max_time: float = 1000.0, hyperbolic_margin: float = 1e-4,
                escape_norm: float | None = None) -> CycleScan:
    """Isolated zeros of the displacement Pi(r) - r on ``grid``."""
    vf = _as_field(vf)
    kw = dict(tol=tol, max_time=max_time, escape_norm=escape_norm)
    samples, failures = [], []
    for r in grid:
        try:
            samples.append(return_map(vf, section, float(r), **kw))
        except NumericFailure as exc:   # NoReturn, BlowUp, LeftDomain, Pole
            log.info("return map failed at r=%g: %s", r, exc)
            failures.append((float(r), f"{type(exc).__name__}: {exc}"))
        except DomainError as exc:
            log.info("return map undefined at r=%g: %s", r, exc)
            failures.append((float(r), f"{type(exc).__name__}: {exc}"))
    if len(samples) < 2:
        raise DomainError("return map succeeded on fewer than 2 grid points")
    disp = [s.Pi - s.r for s in samples]
    if all(abs(d) < CLOSURE_TOL for d in disp):
        return CycleScan([], True, samples, failures)
    cycles = []

    def f(r):
        return return_map(vf, section, r, **kw).Pi - r

    roots = []
    for a, b, da, db in zip(samples, samples[1:], disp, disp[1:]):
        if da == 0.0:
            roots.append(a.r)
        elif da * db < 0:
            try:
                r = brentq(f, a.r, b.r, xtol=xtol, rtol=1e-15)
            except NumericFailure as exc:
                failures.append((a.r, f"bracket refinement failed: {exc}"))
                continue
            res = f(r)
            if abs(res) > ROOT_RESIDUAL * max(1.0, abs(r)):
                failures.append((r, f"displacement jumps at r={r:.10g} (residual {res:.3g})"))
                continue
            roots.append(r)
    if disp[-1] == 0.0:
        roots.append(samples[-1].r)
    for r in roots:
        try:
            pp = pi_prime_fd(vf, section, r, tol=max(1e-13, tol * 0.1), max_time=max_time,
                             escape_norm=escape_norm)
        except NumericFailure:
            pp = math.nan
        cls = classify_multiplier(pp, hyperbolic_margin) if math.isfinite(pp) else "non-hyperbolic-candidate"
        cycles.append(Cycle(r, pp, cls))
    return CycleScan(cycles, False, samples, failures)


def _divergence_fn(vf):
    if vf.is_symbolic:
        return vf_calculus(vf.P, vf.Q).divergence.compile()
    J = vf.jacobian_fn()
    return lambda x, y: float(np.trace(J(x, y)))


def pi_prime_formula(vf, point: Sequence[float], section0: Section, section1: Section | None = None,
                     windings: int = 1, tol: float = 1e-12, max_time: float = 1000.0,
                     divergence: Callable | None = None) -> float:
    """Derivative of the transition map from ``section0`` to ``section1``.

    Uses <X(p), d0_perp> / <X(q), d1_perp> * exp(int div X dt) along the
    orbit from p to its arrival q; the divergence integral is carried as an
    extra state component.
    """
    vf = _as_field(vf)
    section1 = section1 or section0
    div = divergence or _divergence_fn(vf)
    rhs = vf.rhs

    def aug(t, s):
        v = rhs(t, s)
        return [v[0], v[1], div(s[0], s[1])]

    x0 = tuple(point)
    X0 = vf(*x0)
    num = section0.d[0] * X0[1] - section0.d[1] * X0[0]
    if abs(num) <= 1e-12 * max(1.0, math.hypot(*X0)):
        raise DomainError("initial section is not transversal to the field")
    g = lambda t, s: section1.g(t, s[:2])
    probe = section1.d[0] * X0[1] - section1.d[1] * X0[0] if section1 is section0 else 0
    ev = Event(g, direction=(1 if probe > 0 else -1) if probe else 0, terminal=windings,
               accept=lambda t, s: section1.coord(s[:2]) > 0)
    tr = integrate(aug, (*x0, 0.0), (0.0, max_time), tol=tol, events=[ev])
    if tr.status != "event":
        raise NoReturn("orbit did not reach the arrival section")
    last = tr.events[-1]
    X1 = vf(*last.state[:2])
    den = section1.d[0] * X1[1] - section1.d[1] * X1[0]
    if abs(den) <= 1e-12 * max(1.0, math.hypot(*X1)):
        raise DomainError("arrival section is not transversal to the field")
    return num / den * math.exp(last.state[2])


# -- Melnikov function of the homogeneous perturbation ----------------------------

@dataclass(frozen=True)
class MelnikovSpec:
    """x' = y^(2k-1) + eps*sum a_j/j y^(2k-1-j) x^j,
    y' = -x^(2l-1) + eps*sum b_j/j x^(2l-1-j) y^j,  k > l >= 1.

    Levels: h = w^(2kl), rho = w^(k-l), so rho^2 = w^(2(k-l)).
    """
    k: int
    l: int
    a: tuple
    b: tuple

    def __post_init__(self):
        if not (self.k > self.l >= 1):
            raise DomainError("need k > l >= 1")
        if len(self.a) != 2 * self.k - 1 or len(self.b) != 2 * self.l - 1:
            raise DomainError(f"need {2 * self.k - 1} a-coefficients and {2 * self.l - 1} b-coefficients")

    @property
    def n(self):
        return 2 * self.k - 1

    @property
    def m(self):
        return 2 * self.l - 1

    def hamiltonian(self) -> SparsePoly:
        x, y = SparsePoly.variables(2)
        return x ** (2 * self.l) * Fraction(1, 2 * self.l) + y ** (2 * self.k) * Fraction(1, 2 * self.k)

    def perturbation(self):
        x, y = SparsePoly.variables(2)
        R = sum((y ** (self.n - j) * x ** j * (Fraction(self.a[j - 1]) / j) for j in range(1, self.n + 1)),
                SparsePoly.const(0))
        S = sum((x ** (self.m - j) * y ** j * (Fraction(self.b[j - 1]) / j) for j in range(1, self.m + 1)),
                SparsePoly.const(0))
        return R, S

    def field(self, eps) -> VectorField2:
        x, y = SparsePoly.variables(2)
        R, S = self.perturbation()
        eps = Fraction(eps)
        return VectorField2(y ** self.n + R * eps, -(x ** self.m) + S * eps,
                            name=f"homogeneous perturbation k={self.k} l={self.l}")


def _cache_path():
    d = os.environ.get("PLANARLAB_CACHE")
    return Path(d) / "irs.json" if d else None


def _cache_load(path):
    try:
        return json.loads(path.read_text())
    except (OSError, ValueError):
        return {}


@lru_cache(maxsize=None)
def _i_rs(k, l, r, s, tol):
    X = (2.0 * l) ** (1.0 / (2 * l))
    beta = (2 * s + 1) / (2 * k)

    def fn(x):
        # (1 - x^(2l)/(2l)) = (X - x) * sum_j X^j x^(2l-1-j) / (2l), kept cancellation free
        q = sum(X ** j * x ** (2 * l - 1 - j) for j in range(2 * l)) / (2 * l)
        return x ** (2 * r) * (2.0 * k * q) ** beta

    val, err = quad(fn, 0.0, X, weight="alg", wvar=(0.0, beta), epsabs=0.0, epsrel=tol, limit=200)
    return 4.0 * val / (2 * s + 1)


def i_rs(k: int, l: int, r: int, s: int, tol: float = 1e-12) -> float:
    """Integral of x^(2r) y^(2s) over {x^(2l)/(2l) + y^(2k)/(2k) <= 1}.

    Outer adaptive quadrature in x with the algebraic endpoint weight; the
    inner y-integral is done in closed form.  Values are memoised and, when
    PLANARLAB_CACHE is set, stored in that directory.
    """
    if not (k > l >= 1) or r < 0 or s < 0:
        raise DomainError("need k > l >= 1 and r, s >= 0")
    return i_rs_any(k, l, r, s, tol)


def i_rs_any(k, l, r, s, tol=1e-12) -> float:
    """Same integral without the k > l restriction (used for symmetry checks)."""
    path = _cache_path()
    key = f"{k},{l},{r},{s},{tol:g}"
    if path is not None:
        data = _cache_load(path)
        if key in data:
            return float(data[key])
    v = _i_rs(int(k), int(l), int(r), int(s), float(tol))
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        data = _cache_load(path)
        data[key] = repr(v)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(data, sort_keys=True))
        tmp.replace(path)
    return v


@dataclass(frozen=True)
class MelnikovPoly:
    """M(h) = w^(2kl) * rho^(1-2l) * sum_j c_j (rho^2)^j with h = w^(2kl), rho = w^(k-l)."""
    spec: MelnikovSpec
    c: tuple

    def poly_value(self, z: float) -> float:
        return sum(cj * z ** j for j, cj in enumerate(self.c))

    def __call__(self, h: float) -> float:
        k, l = self.spec.k, self.spec.l
        w = h ** (1.0 / (2 * k * l))
        rho = w ** (k - l)
        return w ** (2 * k * l) * rho ** (1 - 2 * l) * self.poly_value(rho * rho)

    def z_to_h(self, z: float) -> float:
        k, l = self.spec.k, self.spec.l
        return z ** (k * l / (k - l))

    def positive_roots(self) -> list[float]:
        """Positive real roots in the rho^2 variable, ascending."""
        if not any(self.c):
            return []
        rts = np.roots(list(reversed(self.c)))
        return sorted(float(z.real) for z in rts if abs(z.imag) < 1e-9 * max(1, abs(z)) and z.real > 0)

    def level_roots(self) -> list[float]:
        return [self.z_to_h(z) for z in self.positive_roots()]


def melnikov_poly(spec: MelnikovSpec, tol: float = 1e-12) -> MelnikovPoly:
    """Coefficients c_0..c_{k+l-1} of the first-order Melnikov function.

    c_{l+i} = a_{2i+1} I_{i,k-1-i} (i < k) and c_{l-1-i} = b_{2i+1} I_{l-1-i,i} (i < l).
    """
    k, l = spec.k, spec.l
    c = [0.0] * (k + l)
    for i in range(k):
        a = float(spec.a[2 * i])
        if a:
            c[l + i] = a * i_rs(k, l, i, k - 1 - i, tol)
    for i in range(l):
        b = float(spec.b[2 * i])
        if b:
            c[l - 1 - i] = b * i_rs(k, l, l - 1 - i, i, tol)
    return MelnikovPoly(spec, tuple(c))


def melnikov_spec_for(k: int, l: int, target: Sequence[float]) -> MelnikovSpec:
    """Coefficients a, b realising a prescribed polynomial sum c_j (rho^2)^j."""
    if len(target) != k + l:
        raise DomainError(f"target needs {k + l} coefficients c_0..c_(k+l-1)")
    a = [0.0] * (2 * k - 1)
    b = [0.0] * (2 * l - 1)
    for i in range(k):
        a[2 * i] = target[l + i] / i_rs(k, l, i, k - 1 - i)
    for i in range(l):
        b[2 * i] = target[l - 1 - i] / i_rs(k, l, l - 1 - i, i)
    return MelnikovSpec(k, l, tuple(a), tuple(b))


def melnikov_direct(spec: MelnikovSpec, h: float, tol: float = 1e-12) -> float:
    """Line integral of S dx - R dy along the level H = h, orbit orientation."""
    x0 = (2 * spec.l * h) ** (1.0 / (2 * spec.l))
    x, y = SparsePoly.variables(2)
    R, S = spec.perturbation()
    ham = VectorField2(y ** spec.n, -(x ** spec.m))
    Rf, Sf = R.compile(), S.compile()
    rhs = ham.rhs

    def aug(t, s):
        v = rhs(t, s)
        return [v[0], v[1], Sf(s[0], s[1]) * v[0] - Rf(s[0], s[1]) * v[1]]

    ev = Event(lambda t, s: s[1], direction=-1, terminal=1, accept=lambda t, s: s[0] > 0)
    tr = integrate(aug, (x0, 0.0, 0.0), (0.0, 1e6), tol=tol, events=[ev], first_step=1e-3)
    if tr.status != "event":
        raise NoReturn("level curve did not close")
    return tr.events[-1].state[2]


# -- period functions --------------------------------------------------------------

@dataclass
class PeriodScan:
    samples: list
    excluded: list = field(default_factory=list)   # (s, reason)

    def __iter__(self):
        return iter(self.samples)

    def __len__(self):
        return len(self.samples)

    @property
    def s(self):
        return [p.r for p in self.samples]

    @property
    def T(self):
        return [p.T for p in self.samples]


def period_scan(vf, section: Section, s_grid: Sequence[float], tol: float = 1e-12,
                max_time: float = 1000.0) -> PeriodScan:
    """Periods of the closed orbits through the section points ``s_grid``."""
    vf = _as_field(vf)
    out, excluded = [], []
    for s in s_grid:
        s = float(s)
        try:
            rs = return_map(vf, section, s, tol=tol, max_time=max_time)
        except (NumericFailure, DomainError) as exc:
            excluded.append((s, f"{type(exc).__name__}: {exc}"))
            continue
        if abs(rs.Pi - s) < CLOSURE_TOL:
            out.append(rs)
        else:
            excluded.append((s, f"orbit not closed: |Pi(s) - s| = {abs(rs.Pi - s):.3g}"))
    return PeriodScan(out, excluded)


@dataclass
class CriticalPeriods:
    count: int
    locations: list
    trace: list = field(default_factory=list)

    def to_json(self):
        return {"count": self.count, "locations": self.locations, "trace": self.trace}


def _derivative_signs(s, T, noise):
    s = np.asarray(s, float)
    T = np.asarray(T, float)
    d = np.gradient(T, s)
    dT = np.abs(np.gradient(T)) if len(T) > 1 else np.zeros_like(T)
    sig = np.where(dT > noise, np.sign(d), 0.0)
    return d, sig


def critical_periods(samples, refine: Callable[[float], float] | None = None, rounds: int = 3,
                     factor: int = 4, s_tol: float = 1e-6, noise_rel: float = 1e-9) -> CriticalPeriods:
    """Zeros of T'(s) from period samples (``PeriodScan`` or (s, T) pairs).

    With ``refine`` (a function s -> T) each bracketed sign change of T' is
    resampled ``rounds`` times on a ``factor``-times finer local grid and
    then bisected to ``s_tol``.
    """
    if isinstance(samples, PeriodScan):
        pairs = list(zip(samples.s, samples.T))
    else:
        pairs = [(float(p.r), float(p.T)) if isinstance(p, ReturnSample) else (float(p[0]), float(p[1]))
                 for p in samples]
    if len(pairs) < 8:
        raise DomainError("critical_periods needs at least 8 samples")
    pairs.sort()
    s = [p[0] for p in pairs]
    T = [p[1] for p in pairs]
    noise = noise_rel * max(abs(v) for v in T)
    _, sig = _derivative_signs(s, T, noise)
    brackets = []
    last = None
    for i, v in enumerate(sig):
        if v == 0:
            continue
        if last is not None and sig[last] != v:
            brackets.append((s[last], s[i]))
        last = i
    trace = [{"round": 0, "brackets": [list(b) for b in brackets]}]
    if refine is None:
        return CriticalPeriods(len(brackets), [0.5 * (a + b) for a, b in brackets], trace)
    locs = []
    for a, b in brackets:
        lo, hi = a, b
        for rd in range(1, rounds + 1):
            width = hi - lo
            grid = np.linspace(lo - width / 2, hi + width / 2, 2 * factor + 1)
            grid = grid[(grid >= a - (b - a)) & (grid <= b + (b - a))]
            Tg = [refine(float(g)) for g in grid]
            d, sg = _derivative_signs(grid, Tg, noise)
            nz = [i for i in range(len(sg)) if sg[i] != 0]
            hit = None
            for i, j in zip(nz, nz[1:]):
                if sg[i] != sg[j]:
                    hit = (float(grid[i]), float(grid[j]))
                    break
            trace.append({"round": rd, "bracket": [lo, hi], "refined": list(hit) if hit else None})
            if hit is None:
                break
            lo, hi = hit
        h = max(s_tol, 1e-4 * (hi - lo))

        def dT(x):
            return (refine(x + h) - refine(x - h)) / (2 * h)
        try:
            fa, fb = dT(lo), dT(hi)
            while hi - lo > s_tol and fa * fb < 0:
                m = 0.5 * (lo + hi)
                fm = dT(m)
                if fm == 0:
                    lo = hi = m
                    break
                if fm * fa < 0:
                    hi, fb = m, fm
                else:
                    lo, fa = m, fm
        except (NumericFailure, DomainError):
            pass
        locs.append(0.5 * (lo + hi))
    return CriticalPeriods(len(locs), locs, trace)


# -- quadratic reversible centres and their equivariant relatives --------------------

@dataclass(frozen=True)
class LoudParams:
    D: float
    F: float

    def __post_init__(self):
        if not (math.isfinite(self.D) and math.isfinite(self.F)):
            raise DomainError("Loud parameters must be finite")

    def field(self) -> VectorField2:
        x, y = SparsePoly.variables(2)
        D, F = Fraction(self.D).limit_denominator(10 ** 12), Fraction(self.F).limit_denominator(10 ** 12)
        return VectorField2(-y + x * y, x + x * x * D + y * y * F, name=f"loud({self.D},{self.F})")


def equivariant_to_loud(n: int, k: int) -> LoudParams:
    """Loud parameters whose period function matches z' = iz + (z zbar)^n z^(k+1)."""
    if n < 0 or k < 1:
        raise DomainError("need n >= 0 and k >= 1")
    D = Fraction(-k, 2 * (k + n))
    return LoudParams(float(D), float(1 + D))


def equivariant_field(n: int, k: int) -> VectorField2:
    """Real form of z' = i z + (z zbar)^n z^(k+1)."""
    if n < 0 or k < 1:
        raise DomainError("need n >= 0 and k >= 1")
    x, y = SparsePoly.variables(2)
    i = GaussQ(0, 1)
    z = x + y * i
    zb = x - y * i
    F = z * i + (z * zb) ** n * z ** (k + 1)
    return VectorField2(F.real_part(), F.imag_part(), name=f"equivariant(n={n},k={k})")


def equivariant_transit_time(n: int, k: int, s: float, tol: float = 1e-12) -> float:
    """Time to go from theta = 0 to theta = 2 pi / k starting at (s, 0)."""
    vf = equivariant_field(n, k)
    ang = 2 * math.pi / k
    sec = Section((0.0, 0.0), (math.cos(ang), math.sin(ang)))
    ev = Event(sec.g, direction=1, terminal=1, accept=lambda t, st: sec.coord(st) > 0)
    tr = integrate(vf, (s, 0.0), (0.0, 1000.0), tol=tol, events=[ev])
    if tr.status != "event":
        raise NoReturn("sector not traversed")
    return tr.events[-1].t
