"""Adaptive Runge-Kutta integration, equilibria and the index of planar fields."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .algebra import RationalFn, SparsePoly, vf_calculus
from .errors import BlowUp, DomainError, LeftDomain, NumericFailure, PoleError, ResourceError

# Dormand-Prince 5(4) tableau with Shampine's free quartic interpolant.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_E = (-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40)
_P = (
    (1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799),
    (0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072),
    (0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)

SAFETY = 0.9
BETA = 0.04
ALPHA = 0.2 - 0.75 * BETA
MIN_FACTOR, MAX_FACTOR = 0.2, 5.0
UNDERFLOW_STEP = 1e-14
BLOWUP_NORM = 1e8
POLE_TOL = 1e-10
EVENT_XTOL = 1e-12
ESCAPE_TIME = 1e-9


# -- vector fields --------------------------------------------------------------

def _component_fn(c, nvars):
    if isinstance(c, (SparsePoly, RationalFn)):
        if c.nvars != nvars:
            raise DomainError(f"component has {c.nvars} variables, field has dimension {nvars}")
        return c.compile()
    if isinstance(c, (int, float)):
        v = float(c)
        return lambda *a: v
    if callable(c):
        return c
    raise DomainError(f"unsupported vector field component {type(c).__name__}")


class VectorField:
    """Autonomous field on R^n with components given as polynomials,
    rational functions or plain float callables ``f(x, y, ...)``.

    ``domain`` is an optional predicate on the state; leaving it raises
    :class:`LeftDomain`.  Denominators of rational components form the
    declared pole set.
    """

    def __init__(self, *components, name: str = "", domain: Callable | None = None):
        if len(components) == 1 and isinstance(components[0], (list, tuple)):
            components = tuple(components[0])
        self.components = tuple(components)
        self.dim = len(self.components)
        self.name = name
        self.domain = domain
        self._fns = [_component_fn(c, self.dim) for c in self.components]
        dens = [c.den for c in self.components if isinstance(c, RationalFn) and c.den.degree() > 0]
        self._dens = [d.compile() for d in dens]
        fns = self._fns
        if self.dim == 2:
            f0, f1 = fns
            self.rhs = lambda t, s: [f0(s[0], s[1]), f1(s[0], s[1])]
        else:
            self.rhs = lambda t, s: [f(*s) for f in fns]

    @property
    def is_polynomial(self) -> bool:
        return all(isinstance(c, SparsePoly) for c in self.components)

    @property
    def is_symbolic(self) -> bool:
        return all(isinstance(c, (SparsePoly, RationalFn)) for c in self.components)

    @property
    def degree(self):
        if self.is_polynomial:
            return max(c.degree() for c in self.components)
        return None

    @property
    def monomial_count(self):
        """Number of distinct monomials used across all components."""
        if not self.is_polynomial:
            return None
        return len(set().union(*(c.terms.keys() for c in self.components)))

    def __call__(self, *state):
        return [f(*state) for f in self._fns]

    def pole_distance(self, state) -> float:
        if not self._dens:
            return math.inf
        return min(abs(d(*state)) for d in self._dens)

    def jacobian_fn(self):
        """Float Jacobian evaluator (exact derivatives for symbolic components)."""
        if self.is_symbolic:
            rows = [[c.diff(j).compile() for j in range(self.dim)] for c in self.components]
            return lambda *s: np.array([[g(*s) for g in row] for row in rows])

        def fd(*s):
            s = np.array(s, dtype=float)
            J = np.empty((self.dim, self.dim))
            for j in range(self.dim):
                h = 1e-7 * max(1.0, abs(s[j]))
                a, b = s.copy(), s.copy()
                a[j] += h
                b[j] -= h
                J[:, j] = (np.array(self(*a)) - np.array(self(*b))) / (2 * h)
            return J
        return fd

    def to_json(self):
        kind = "polynomial" if self.is_polynomial else "rational"
        if not self.is_symbolic:
            raise DomainError("black-box fields have no JSON form")
        return {"kind": kind, "name": self.name,
                "components": [RationalFn.lift(c).to_json() if kind == "rational" else c.to_json()
                               for c in self.components]}

    @classmethod
    def from_json(cls, data):
        kind = data.get("kind", "polynomial")
        if kind.startswith("builtin:"):
            from .builtins import builtin_field
            return builtin_field(kind.split(":", 1)[1])
        comps = []
        for c in data["components"]:
            if "num" in c:
                comps.append(RationalFn(SparsePoly.from_json(c["num"]), SparsePoly.from_json(c["den"])))
            else:
                comps.append(SparsePoly.from_json(c))
        out = cls(*comps, name=data.get("name", ""))
        if len(comps) == 2 and cls is VectorField:
            out = VectorField2(*comps, name=data.get("name", ""))
        return out


class VectorField2(VectorField):
    """Planar field (P, Q)."""

    def __init__(self, P, Q, name: str = "", domain: Callable | None = None):
        super().__init__(P, Q, name=name, domain=domain)

    @property
    def P(self):
        return self.components[0]

    @property
    def Q(self):
        return self.components[1]

    @classmethod
    def parse(cls, P: str, Q: str, names=("x", "y"), name: str = "") -> "VectorField2":
        comps = []
        for s in (P, Q):
            r = RationalFn.parse(s, names)
            comps.append(r.num if r.den.degree() == 0 and r.den.constant_term() == 1 else r)
        return cls(*comps, name=name)


# -- trajectories ----------------------------------------------------------------

@dataclass
class Event:
    """Zero crossings of ``g(t, state)``.

    direction: +1 (g increasing), -1 (decreasing) or 0 (both).
    terminal: stop after this many accepted crossings (0 = never).
    accept: optional predicate filtering crossings (e.g. a half-line section).
    """
    g: Callable
    direction: int = 0
    terminal: int = 0
    accept: Callable | None = None
    name: str = ""


@dataclass(frozen=True)
class EventRecord:
    event: int
    t: float
    state: tuple
    direction: int


@dataclass
class Trajectory:
    x0: tuple
    ts: list
    ys: list
    ks: list                      # stage derivatives of each step, for dense output
    hs: list = field(default_factory=list)   # full step of each segment
    events: list = field(default_factory=list)
    status: str = "completed"     # completed | event | blowup
    nfev: int = 0

    @property
    def t_final(self) -> float:
        return self.ts[-1]

    @property
    def y_final(self) -> tuple:
        return tuple(self.ys[-1])

    def _segment(self, t):
        ts = self.ts
        fwd = ts[-1] >= ts[0]
        lo, hi = 0, len(ts) - 1
        if not (min(ts[0], ts[-1]) <= t <= max(ts[0], ts[-1])):
            raise DomainError(f"t={t} outside the integrated range")
        while hi - lo > 1:
            m = (lo + hi) // 2
            if (ts[m] <= t) == fwd:
                lo = m
            else:
                hi = m
        return lo

    def __call__(self, t: float) -> tuple:
        """Dense-output state at time ``t``."""
        if len(self.ts) == 1:
            return tuple(self.ys[0])
        i = self._segment(t)
        return tuple(_dense(self.ts[i], self.hs[i], self.ys[i], self.ks[i], t))

    def to_csv(self, names=None) -> str:
        dim = len(self.x0)
        names = names or ["x", "y", "z"][:dim] if dim <= 3 else [f"x{i}" for i in range(dim)]
        nev = 1 + max((e.event for e in self.events), default=-1)
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["t", *names, *[f"event{i}" for i in range(nev)]])
        rows = [(t, tuple(y), -1) for t, y in zip(self.ts, self.ys)]
        rows += [(e.t, e.state, e.event) for e in self.events]
        fwd = self.ts[-1] >= self.ts[0]
        rows.sort(key=lambda r: r[0] if fwd else -r[0])
        for t, y, ev in rows:
            w.writerow([repr(t), *map(repr, y), *[int(ev == i) for i in range(nev)]])
        return buf.getvalue()


def _dense(t0, h, y0, K, t):
    th = (t - t0) / h if h else 0.0
    pw = (th, th * th, th ** 3, th ** 4)
    coef = [sum(p[j] * pw[j] for j in range(4)) for p in _P]
    return [y0[i] + h * sum(coef[s] * K[s][i] for s in range(7)) for i in range(len(y0))]


def _initial_step(rhs, t0, y0, f0, direction, tol):
    d0 = max(abs(v) for v in y0)
    d1 = max(abs(v) for v in f0)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = [a + direction * h0 * b for a, b in zip(y0, f0)]
    f1 = rhs(t0 + direction * h0, y1)
    d2 = max(abs(a - b) for a, b in zip(f1, f0)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    scale = tol ** 0.2
    return min(100 * h0, h1 * scale if scale < 1 else h1)


def integrate(vf, x0: Sequence[float], t_span, tol: float = 1e-10, events: Sequence[Event] = (),
              max_step: float = math.inf, max_steps: int = 2_000_000, first_step: float | None = None,
              escape_norm: float | None = None) -> Trajectory:
    """Integrate ``vf`` (a :class:`VectorField` or a callable ``rhs(t, state)``).

    Errors are measured in the max norm with scale ``tol * max(1, |y|)``.
    Finite-time escape raises :class:`BlowUp` (attribute ``trajectory`` holds
    the partial solution); an optional ``escape_norm`` declares blow-up as
    soon as the state norm passes it.
    """
    if tol < 1e-13:
        raise DomainError("tol must be >= 1e-13")
    if isinstance(vf, VectorField):
        rhs, field_ = vf.rhs, vf
    else:
        rhs, field_ = vf, None
    t0, t1 = float(t_span[0]), float(t_span[1])
    y = [float(v) for v in x0]
    direction = 1.0 if t1 >= t0 else -1.0
    traj = Trajectory(tuple(y), [t0], [list(y)], [])
    if field_ is not None:
        if field_.pole_distance(y) < POLE_TOL:
            raise PoleError(t0, tuple(y))
        if field_.domain is not None and not field_.domain(y):
            raise LeftDomain(t0, tuple(y))
    if t0 == t1:
        return traj

    def call(t, s):
        try:
            out = rhs(t, s)
        except ZeroDivisionError:
            raise PoleError(t, tuple(s)) from None
        except OverflowError:
            raise BlowUp(t, tuple(s)) from None
        return out

    f = call(t0, y)
    traj.nfev = 1
    h = first_step if first_step else _initial_step(call, t0, y, f, direction, tol)
    h = min(abs(h), max_step, abs(t1 - t0))
    ev_prev = [e.g(t0, y) for e in events]
    ev_count = [0] * len(events)
    err_prev = 1.0
    t = t0
    n = len(y)
    steps = 0
    rejected = False
    while direction * (t1 - t) > 0:
        steps += 1
        if steps > max_steps:
            raise ResourceError(f"integration exceeded {max_steps} steps at t={t}")
        if h < UNDERFLOW_STEP * max(1.0, abs(t)) or h < UNDERFLOW_STEP:
            norm = max(abs(v) for v in y)
            speed = max(abs(v) for v in f)
            # large state, or a state that would double in less than ESCAPE_TIME
            if norm > BLOWUP_NORM or (norm > 1.0 and norm < ESCAPE_TIME * speed):
                exc = BlowUp(t, tuple(y))
                traj.status = "blowup"
                exc.trajectory = traj
                raise exc
            if field_ is not None and field_.pole_distance(y) < 1e-6:
                raise PoleError(t, tuple(y))
            raise NumericFailure(f"step size underflow at t={t} (|state|={norm:.3g})")
        hs = direction * h
        if direction * (t + hs - t1) > 0:
            hs = t1 - t
        K = [f]
        for s in range(1, 6):
            a = _A[s]
            ys = [y[i] + hs * sum(a[j] * K[j][i] for j in range(s)) for i in range(n)]
            K.append(call(t + _C[s] * hs, ys))
        ynew = [y[i] + hs * sum(_B[j] * K[j][i] for j in range(6)) for i in range(n)]
        fnew = call(t + hs, ynew)
        K.append(fnew)
        traj.nfev += 6
        finite = all(math.isfinite(v) for v in ynew) and all(math.isfinite(v) for v in fnew)
        if not finite:
            err = math.inf
        else:
            err = 0.0
            for i in range(n):
                e = hs * sum(_E[j] * K[j][i] for j in range(7))
                sc = tol * max(1.0, abs(y[i]), abs(ynew[i]))
                err = max(err, abs(e) / sc)
        if err <= 1.0:
            tnew = t + hs
            if field_ is not None:
                if field_.pole_distance(ynew) < POLE_TOL:
                    raise PoleError(tnew, tuple(ynew))
            traj.ts.append(tnew)
            traj.ys.append(ynew)
            traj.ks.append(K)
            traj.hs.append(hs)
            stop = False
            if events:
                stop = _locate_events(events, ev_prev, ev_count, traj, t, hs, y, K, tnew, ynew)
            if field_ is not None and field_.domain is not None and not field_.domain(ynew):
                raise LeftDomain(tnew, tuple(ynew))
            if escape_norm is not None and max(abs(v) for v in ynew) > escape_norm:
                exc = BlowUp(tnew, tuple(ynew), "escape norm exceeded")
                traj.status = "blowup"
                exc.trajectory = traj
                raise exc
            t, y, f = tnew, ynew, fnew
            if stop:
                traj.status = "event"
                return traj
            if err == 0.0:
                fac = MAX_FACTOR
            else:
                fac = SAFETY * err ** (-ALPHA) * err_prev ** BETA
                fac = min(MAX_FACTOR, max(MIN_FACTOR, fac))
            if rejected:
                fac = min(fac, 1.0)
            h = min(abs(hs) * fac, max_step)
            err_prev = max(err, 1e-4)
            rejected = False
        else:
            if not finite:
                fac = MIN_FACTOR
            else:
                fac = max(MIN_FACTOR, SAFETY * err ** (-ALPHA))
            h = abs(hs) * fac
            rejected = True
            if not finite and h < UNDERFLOW_STEP:
                exc = BlowUp(t, tuple(y))
                traj.status = "blowup"
                exc.trajectory = traj
                raise exc
    return traj


def _locate_events(events, ev_prev, ev_count, traj, t, hs, y, K, tnew, ynew) -> bool:
    found = []
    for k, ev in enumerate(events):
        g0 = ev_prev[k]
        g1 = ev.g(tnew, ynew)
        ev_prev[k] = g1
        if g0 == 0.0 or not (g0 < 0 <= g1 or g0 > 0 >= g1):
            continue
        sgn = 1 if g1 > g0 else -1
        if ev.direction and sgn != ev.direction:
            continue
        if g1 == 0.0:
            tr = tnew
        else:
            fn = lambda s: ev.g(s, _dense(t, hs, y, K, s))
            a, b = (t, tnew) if hs > 0 else (tnew, t)
            tr = brentq(fn, a, b, xtol=EVENT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=200)
        st = tuple(_dense(t, hs, y, K, tr))
        if ev.accept is not None and not ev.accept(tr, st):
            continue
        found.append((tr, k, st, sgn))
    found.sort(key=lambda r: r[0] if hs > 0 else -r[0])
    for tr, k, st, sgn in found:
        traj.events.append(EventRecord(k, tr, st, sgn))
        ev_count[k] += 1
        if events[k].terminal and ev_count[k] >= events[k].terminal:
            # the last segment keeps its full step; only its end moves to the event
            traj.ts[-1] = tr
            traj.ys[-1] = list(st)
            return True
    return False


# -- equilibria ------------------------------------------------------------------

@dataclass(frozen=True)
class Equilibrium:
    point: tuple
    kind: str          # center | center-candidate | saddle | node | focus | degenerate
    eigenvalues: tuple
    index: int


def _newton2(F, J, x, iters=50, tol=1e-14):
    x = np.array(x, dtype=float)
    for _ in range(iters):
        try:
            dx = np.linalg.solve(J(*x), np.array(F(*x)))
        except np.linalg.LinAlgError:
            return None
        x = x - dx
        if not np.all(np.isfinite(x)):
            return None
        if np.max(np.abs(dx)) < tol * max(1.0, np.max(np.abs(x))):
            return x
    return x if np.max(np.abs(F(*x))) < 1e-9 else None


def classify_equilibria(vf: VectorField2, box, grid: int = 25, dedup: float = 1e-8,
                        degenerate_tol: float = 1e-9) -> list[Equilibrium]:
    """Zeros of (P, Q) in ``box = ((xlo, xhi), (ylo, yhi))`` with linear type.

    Purely imaginary eigenvalues give ``center`` when the field is
    divergence-free (Hamiltonian) and ``center-candidate`` otherwise.
    """
    if not vf.is_symbolic:
        raise DomainError("classify_equilibria needs polynomial or rational components")
    (xl, xh), (yl, yh) = box
    J = vf.jacobian_fn()
    div = vf_calculus(vf.P, vf.Q).divergence
    hamiltonian = div.num.is_zero()
    found: list[np.ndarray] = []
    slack = 1e-9 * max(1.0, xh - xl, yh - yl)
    for xs in np.linspace(xl, xh, grid):
        for ys in np.linspace(yl, yh, grid):
            r = _newton2(vf, J, (xs, ys))
            if r is None:
                continue
            if not (xl - slack <= r[0] <= xh + slack and yl - slack <= r[1] <= yh + slack):
                continue
            if max(abs(v) for v in vf(*r)) > 1e-9:
                continue
            if any(np.max(np.abs(r - q)) < dedup for q in found):
                continue
            found.append(r)
    found.sort(key=lambda p: (round(p[0], 9), round(p[1], 9)))
    out = []
    for p in found:
        A = J(*p)
        ev = np.linalg.eigvals(A)
        det, tr = float(np.linalg.det(A)), float(np.trace(A))
        scale = max(1.0, float(np.max(np.abs(A)))) ** 2
        if abs(det) <= degenerate_tol * scale:
            kind = "degenerate"
            try:
                idx = field_index(vf, tuple(p), 1e-3)
            except DomainError:
                idx = 0
        elif det < 0:
            kind, idx = "saddle", -1
        else:
            idx = 1
            if abs(tr) <= 1e-10 * math.sqrt(scale):
                kind = "center" if hamiltonian else "center-candidate"
            elif tr * tr - 4 * det >= 0:
                kind = "node"
            else:
                kind = "focus"
        out.append(Equilibrium(tuple(float(v) for v in p), kind, tuple(complex(v) for v in ev), idx))
    return out


def field_index(vf, center=(0.0, 0.0), radius: float = 1.0, samples: int = 64,
                max_refine: int = 40) -> int:
    """Winding number of the field along a circle, by argument accumulation.

    Arcs are bisected until each argument increment is below pi/2.
    """
    cx, cy = center

    def val(th):
        return vf(cx + radius * math.cos(th), cy + radius * math.sin(th))

    thetas = np.linspace(0.0, 2 * math.pi, samples + 1)
    vals = [val(th) for th in thetas]
    mags = [math.hypot(*v) for v in vals]
    floor = 1e-12 * max(max(mags), 1e-300)
    if min(mags) <= floor:
        raise DomainError("vector field vanishes on the circle; choose another radius")

    def inc(a, b):
        d = math.atan2(b[1], b[0]) - math.atan2(a[1], a[0])
        return (d + math.pi) % (2 * math.pi) - math.pi

    total = 0.0
    stack = [(thetas[i], vals[i], thetas[i + 1], vals[i + 1], 0) for i in range(samples)][::-1]
    while stack:
        a, va, b, vb, depth = stack.pop()
        d = inc(va, vb)
        if abs(d) < math.pi / 2:
            total += d
            continue
        if depth >= max_refine:
            raise DomainError("vector field (nearly) vanishes on the circle; choose another radius")
        m = 0.5 * (a + b)
        vm = val(m)
        if math.hypot(*vm) <= floor:
            raise DomainError("vector field vanishes on the circle; choose another radius")
        stack.append((m, vm, b, vb, depth + 1))
        stack.append((a, va, m, vm, depth + 1))
    return int(round(total / (2 * math.pi)))
