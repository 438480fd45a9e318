"""Periodic scalar equations: Riccati/Abel shooting, rigid systems, x^p x'' = f(t)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .algebra import SparsePoly, squarefree_factors, sturm_count, upoly_mul
from .errors import BlowUp, DomainError, LeftDomain, NumericFailure
from .flow import VectorField2, integrate

TWO_PI = 2 * math.pi
CONTINUUM_TOL = 1e-8


# -- trigonometric polynomials ------------------------------------------------------

class TrigPoly:
    """sum_k a_k cos(k w t) + b_k sin(k w t) with exact rational a_k, b_k, w = 2 pi / T."""

    __slots__ = ("h", "period", "_fn")

    def __init__(self, harmonics: Mapping[int, tuple] | None = None, period: float = TWO_PI):
        h = {}
        for k, (a, b) in (harmonics or {}).items():
            k = int(k)
            if k < 0:
                raise DomainError("harmonic index must be >= 0")
            a, b = Fraction(a), Fraction(b)
            if k == 0:
                b = Fraction(0)
            if a or b:
                h[k] = (a, b)
        self.h = h
        self.period = float(period)
        self._fn = None

    @classmethod
    def const(cls, c, period=TWO_PI):
        return cls({0: (c, 0)}, period)

    @classmethod
    def cos(cls, k=1, c=1, period=TWO_PI):
        return cls({k: (c, 0)}, period)

    @classmethod
    def sin(cls, k=1, c=1, period=TWO_PI):
        return cls({k: (0, c)}, period)

    @classmethod
    def from_list(cls, terms: Sequence[tuple], period=TWO_PI):
        """From (harmonic, cos-coeff, sin-coeff) triples."""
        out = cls({}, period)
        for k, a, b in terms:
            out = out + cls({k: (a, b)}, period)
        return out

    def _same(self, o):
        if isinstance(o, TrigPoly):
            if abs(o.period - self.period) > 1e-12 * self.period:
                raise DomainError("trigonometric polynomials with different periods")
            return o
        return TrigPoly.const(Fraction(o), self.period)

    def __add__(self, o):
        o = self._same(o)
        h = dict(self.h)
        for k, (a, b) in o.h.items():
            a0, b0 = h.get(k, (0, 0))
            h[k] = (a0 + a, b0 + b)
        return TrigPoly(h, self.period)

    __radd__ = __add__

    def __neg__(self):
        return TrigPoly({k: (-a, -b) for k, (a, b) in self.h.items()}, self.period)

    def __sub__(self, o):
        return self + (-self._same(o))

    def __rsub__(self, o):
        return self._same(o) - self

    def __mul__(self, o):
        if not isinstance(o, TrigPoly):
            c = Fraction(o)
            return TrigPoly({k: (a * c, b * c) for k, (a, b) in self.h.items()}, self.period)
        o = self._same(o)
        acc: dict = {}

        def put(k, a, b):
            if k < 0:
                k, b = -k, -b
            a0, b0 = acc.get(k, (0, 0))
            acc[k] = (a0 + a, b0 + b)

        half = Fraction(1, 2)
        for j, (a1, b1) in self.h.items():
            for k, (a2, b2) in o.h.items():
                # cos cos, sin sin, cos sin, sin cos by product-to-sum
                put(j - k, half * (a1 * a2 + b1 * b2), half * (b1 * a2 - a1 * b2))
                put(j + k, half * (a1 * a2 - b1 * b2), half * (a1 * b2 + b1 * a2))
        return TrigPoly(acc, self.period)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = TrigPoly.const(1, self.period)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, o):
        return isinstance(o, TrigPoly) and self.h == o.h and abs(self.period - o.period) < 1e-12

    def __hash__(self):
        return hash(tuple(sorted(self.h.items())))

    @property
    def degree(self) -> int:
        return max(self.h, default=0)

    def is_zero(self) -> bool:
        return not self.h

    @property
    def mean(self) -> Fraction:
        return self.h.get(0, (Fraction(0), 0))[0]

    def integral(self) -> float:
        """Integral over one period (exact mean times T)."""
        return float(self.mean) * self.period

    def compile(self):
        if self._fn is None:
            w = TWO_PI / self.period
            terms = [(k * w, float(a), float(b)) for k, (a, b) in sorted(self.h.items())]
            c0 = float(self.mean)
            terms = [t for t in terms if t[0] != 0]
            cos, sin = math.cos, math.sin
            if not terms:
                self._fn = lambda t: c0
            else:
                self._fn = lambda t: c0 + sum(a * cos(kw * t) + b * sin(kw * t) for kw, a, b in terms)
        return self._fn

    def __call__(self, t):
        return self.compile()(t)

    def weierstrass(self) -> list:
        """Dense ascending polynomial in u = tan(w t / 2) equal to f * (1 + u^2)^N."""
        N = self.degree
        one_p = [Fraction(1), Fraction(0), Fraction(1)]      # 1 + u^2
        c1 = [Fraction(1), Fraction(0), Fraction(-1)]        # (1 - u^2)
        s1 = [Fraction(0), Fraction(2)]                      # 2u
        # cos(k t), sin(k t) as numerators over (1+u^2)^k via Chebyshev-style recursion
        cos_n = [[Fraction(1)]]
        sin_n = [[Fraction(0)]]
        for k in range(1, N + 1):
            ck = _padd(upoly_mul(cos_n[-1], c1), [-v for v in upoly_mul(sin_n[-1], s1)])
            sk = _padd(upoly_mul(sin_n[-1], c1), upoly_mul(cos_n[-1], s1))
            cos_n.append(ck)
            sin_n.append(sk)
        out = [Fraction(0)]
        for k, (a, b) in self.h.items():
            num = _padd([a * v for v in cos_n[k]], [b * v for v in sin_n[k]])
            for _ in range(N - k):
                num = upoly_mul(num, one_p)
            out = _padd(out, num)
        while len(out) > 1 and out[-1] == 0:
            out.pop()
        return out

    def to_json(self):
        hs = []
        for k, (a, b) in sorted(self.h.items()):
            d = {"k": k}
            if a:
                d["cos"] = str(a)
            if b:
                d["sin"] = str(b)
            hs.append(d)
        per = "2*pi" if abs(self.period - TWO_PI) < 1e-15 else repr(self.period)
        return {"harmonics": hs, "period": per}

    @classmethod
    def from_json(cls, data):
        per = data.get("period", "2*pi")
        if isinstance(per, str):
            per = per.replace(" ", "")
            if per.endswith("*pi"):
                per = float(Fraction(per[:-3] or "1")) * math.pi
            elif per == "pi":
                per = math.pi
            else:
                per = float(per)
        return cls({d["k"]: (Fraction(str(d.get("cos", "0"))), Fraction(str(d.get("sin", "0"))))
                    for d in data["harmonics"]}, per)

    def __repr__(self):
        parts = []
        for k, (a, b) in sorted(self.h.items()):
            if k == 0:
                parts.append(f"{a}")
                continue
            if a:
                parts.append(f"{a}*cos({k}t)")
            if b:
                parts.append(f"{b}*sin({k}t)")
        return "TrigPoly(" + (" + ".join(parts) or "0") + ")"


def _padd(a, b):
    n = max(len(a), len(b))
    return [(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)]


def trig_of_form(F: SparsePoly) -> TrigPoly:
    """F(cos t, sin t) for a bivariate polynomial F."""
    if F.nvars != 2:
        raise DomainError("need a bivariate polynomial")
    c, s = TrigPoly.cos(), TrigPoly.sin()
    out = TrigPoly()
    for (i, j), coef in F.terms.items():
        out = out + (c ** i) * (s ** j) * Fraction(coef)
    return out


# -- periodic scalar equations --------------------------------------------------------

@dataclass
class PeriodicScalarEq:
    """x' = sum_j A_j(t) x^j with T-periodic trigonometric A_j."""
    coeffs: dict                 # exponent -> TrigPoly
    period: float = TWO_PI

    def __post_init__(self):
        if not self.period > 0:
            raise DomainError("period must be positive")
        self.coeffs = {int(j): (A if isinstance(A, TrigPoly) else TrigPoly.const(A, self.period))
                       for j, A in self.coeffs.items() if not (isinstance(A, TrigPoly) and A.is_zero())}

    @property
    def exponents(self):
        return sorted(self.coeffs)

    def rhs_fn(self):
        # harmonics are shared across coefficients, so evaluate cos/sin once per call
        if not self.coeffs:
            return lambda t, s: [0.0]
        if any(A.degree and abs(A.period - self.period) > 1e-12 * self.period for A in self.coeffs.values()):
            items = [(j, A.compile()) for j, A in sorted(self.coeffs.items())]
            return lambda t, s: [sum(A(t) * s[0] ** j for j, A in items)]
        deg = max(self.coeffs)
        K = max(A.degree for A in self.coeffs.values())
        w = TWO_PI / self.period
        rows = []
        for j in range(deg, -1, -1):
            A = self.coeffs.get(j)
            if A is None:
                rows.append((0.0, ()))
                continue
            rows.append((float(A.mean), tuple((k - 1, float(a), float(b))
                                              for k, (a, b) in sorted(A.h.items()) if k)))
        cos, sin = math.cos, math.sin
        ks = [k * w for k in range(1, K + 1)]

        def rhs(t, s):
            x = s[0]
            cs = [cos(kw * t) for kw in ks]
            sn = [sin(kw * t) for kw in ks]
            acc = 0.0
            for c0, terms in rows:
                v = c0
                for i, a, b in terms:
                    v += a * cs[i] + b * sn[i]
                acc = acc * x + v
            return [acc]
        return rhs

    def dfdx_fn(self):
        items = [(j, A.compile()) for j, A in sorted(self.coeffs.items()) if j >= 1]
        return lambda t, x: sum(j * A(t) * x ** (j - 1) for j, A in items)

    def to_json(self):
        return {"period": self.coeffs and next(iter(self.coeffs.values())).to_json()["period"],
                "coeffs": {str(j): A.to_json() for j, A in sorted(self.coeffs.items())}}

    @classmethod
    def from_json(cls, data):
        co = {int(j): TrigPoly.from_json(v) for j, v in data["coeffs"].items()}
        per = next(iter(co.values())).period if co else TWO_PI
        return cls(co, per)


@dataclass(frozen=True)
class FlowResult:
    rho: float
    value: float | None
    blowup: bool = False
    t_star: float | None = None
    direction: int = 0       # sign of the escape for blow-ups


def scalar_flow(eq: PeriodicScalarEq, rho: float, tol: float = 1e-12, backward: bool = False,
                escape_norm: float = 1e12) -> FlowResult:
    """phi(T; rho), or the blow-up time when the solution escapes first."""
    if not math.isfinite(rho):
        raise DomainError("initial value must be finite")
    T = -eq.period if backward else eq.period
    try:
        tr = integrate(eq.rhs_fn(), [float(rho)], (0.0, T), tol=tol, escape_norm=escape_norm)
    except BlowUp as exc:
        st = exc.state[0]
        return FlowResult(rho, None, True, exc.t, 1 if st > 0 else -1)
    return FlowResult(rho, tr.y_final[0])


@dataclass(frozen=True)
class PeriodicSolution:
    rho: float
    multiplier: float
    classification: str


@dataclass
class PeriodicCount:
    solutions: list
    continuum: bool = False
    blowups: list = field(default_factory=list)    # (rho, t_star)

    def __len__(self):
        return len(self.solutions)

    def __iter__(self):
        return iter(self.solutions)

    @property
    def rhos(self):
        return [s.rho for s in self.solutions]


def multiplier(eq: PeriodicScalarEq, rho: float, tol: float = 1e-12) -> float:
    """d phi(T; rho)/d rho = exp(int_0^T df/dx(t, x(t)) dt)."""
    base = eq.rhs_fn()
    fx = eq.dfdx_fn()

    def aug(t, s):
        return [base(t, s)[0], fx(t, s[0])]
    tr = integrate(aug, [float(rho), 0.0], (0.0, eq.period), tol=tol)
    return math.exp(tr.y_final[1])


def _disp_sign(eq, rho, tol, escape_norm=1e12):
    r = scalar_flow(eq, rho, tol, escape_norm=escape_norm)
    if r.blowup:
        return r.direction, r
    d = r.value - rho
    return (0 if d == 0 else (1 if d > 0 else -1)), r


def count_periodic(eq: PeriodicScalarEq, rho_range: tuple, grid: int | Sequence[float] = 41,
                   tol: float = 1e-12, xtol: float = 1e-10, hyperbolic_margin: float = 1e-5,
                   escape_norm: float = 1e12) -> PeriodicCount:
    """Isolated T-periodic solutions with initial value in ``rho_range``.

    Blown-up grid points still carry the sign of the displacement (the escape
    direction) so brackets next to unstable solutions are not lost; they are
    listed in ``blowups``. Orbits with |x| > ``escape_norm`` count as blown up.
    """
    lo, hi = rho_range
    rs = np.linspace(lo, hi, grid) if isinstance(grid, int) else np.asarray(grid, float)
    rs = [float(r) for r in rs if lo <= r <= hi]
    signs, finite, blowups = [], [], []
    for r in rs:
        sg, res = _disp_sign(eq, r, tol, escape_norm)
        signs.append(sg)
        if res.blowup:
            blowups.append((r, res.t_star))
        else:
            finite.append(res.value - r)
    if finite and not blowups and all(abs(d) < CONTINUUM_TOL for d in finite):
        return PeriodicCount([], True, blowups)
    roots = []
    for i, (r, sg) in enumerate(zip(rs, signs)):
        if sg == 0:
            roots.append(r)
            continue
        if i + 1 < len(rs) and signs[i + 1] != 0 and signs[i + 1] != sg:
            a, b, sa = r, rs[i + 1], sg
            while b - a > xtol * max(1.0, abs(a)):
                m = 0.5 * (a + b)
                sm, _ = _disp_sign(eq, m, tol, escape_norm)
                if sm == 0:
                    a = b = m
                    break
                if sm == sa:
                    a = m
                else:
                    b = m
            roots.append(0.5 * (a + b))
    sols = []
    for r in roots:
        try:
            mu = multiplier(eq, r, tol)
        except NumericFailure:
            mu = math.nan
        if not math.isfinite(mu) or abs(mu - 1) < hyperbolic_margin:
            cls = "non-hyperbolic-candidate"
        else:
            cls = "hyperbolic-stable" if mu < 1 else "hyperbolic-unstable"
        sols.append(PeriodicSolution(r, mu, cls))
    return PeriodicCount(sols, False, blowups)


# -- rigid systems ---------------------------------------------------------------------

@dataclass(frozen=True)
class RigidParams:
    """x' = -y + x F, y' = x + y F with F = a + bx + cy + dx^2 + exy + fy^2."""
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0
    e: float = 0.0
    f: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.as_tuple()):
            raise DomainError("rigid parameters must be finite")

    def as_tuple(self):
        return (self.a, self.b, self.c, self.d, self.e, self.f)

    @property
    def discriminant(self) -> float:
        return self.e ** 2 - 4 * self.d * self.f

    def F(self) -> SparsePoly:
        x, y = SparsePoly.variables(2)
        a, b, c, d, e, f = (Fraction(v) for v in self.as_tuple())
        return SparsePoly.const(a) + x * b + y * c + x * x * d + x * y * e + y * y * f

    def field(self) -> VectorField2:
        return rigid_field(self.F())


def rigid_field(F: SparsePoly) -> VectorField2:
    x, y = SparsePoly.variables(2)
    return VectorField2(-y + x * F, x + y * F, name="rigid")


def rigid_to_scalar(F: SparsePoly) -> PeriodicScalarEq:
    """dr/dtheta = sum_j F_j(cos, sin) r^(j+1) for F = sum of homogeneous parts F_j."""
    if F.nvars != 2:
        raise DomainError("F must be a bivariate polynomial")
    co = {}
    for j, Fj in enumerate(F.homogeneous_parts()):
        if not Fj.is_zero():
            co[j + 1] = trig_of_form(Fj)
    return PeriodicScalarEq(co)


def rigid_lyapunov(p: RigidParams) -> tuple:
    """First three Lyapunov constants (V1, V3, V5)."""
    a, b, c, d, e, f = p.as_tuple()
    V1 = math.expm1(2 * math.pi * a)
    V3 = math.pi * (d + f)
    V5 = math.pi * ((c * c - b * b) * d - b * c * e) / 2
    return V1, V3, V5


# -- x^p x'' = f(t) --------------------------------------------------------------------

@dataclass(frozen=True)
class NecessaryVerdict:
    changes_sign: bool
    mean: Fraction
    verdict: str          # FailsSign | FailsMean | Candidate

    def to_json(self):
        return {"changes_sign": self.changes_sign, "mean": str(self.mean), "verdict": self.verdict}


def trig_changes_sign(f: TrigPoly) -> bool:
    """Exact test: does f take both signs on a period?"""
    p = f.weierstrass()
    if len(p) <= 1:
        return False
    if (len(p) - 1) % 2 == 1:
        return True
    odd = [Fraction(1)]
    for i, q in enumerate(squarefree_factors(p), start=1):
        if i % 2 == 1 and len(q) > 1:
            odd = upoly_mul(odd, q)
    return sturm_count(odd) > 0


def singular_necessary(f: TrigPoly, T: float | None = None) -> NecessaryVerdict:
    """The two necessary conditions for positive periodic solutions of x^p x'' = f."""
    if f.is_zero():
        raise DomainError("f must not vanish identically")
    if T is not None and abs(T - f.period) > 1e-12 * f.period:
        f = TrigPoly(f.h, T)
    ch = trig_changes_sign(f)
    mean = f.mean
    if not ch:
        v = "FailsSign"
    elif mean >= 0:
        v = "FailsMean"
    else:
        v = "Candidate"
    return NecessaryVerdict(ch, mean, v)


@dataclass
class ShootResult:
    found: bool
    x0: float | None = None
    v0: float | None = None
    residual: float | None = None
    trajectory: object = None
    diagnostics: list = field(default_factory=list)


def singular_shoot(p_exp: float, f: TrigPoly, guess: tuple, tol: float = 1e-12, max_iter: int = 50,
                   res_tol: float = 1e-11) -> ShootResult:
    """Damped Newton on (x0, v0) -> (x(T) - x0, x'(T) - v0) for x^p x'' = f(t)."""
    if p_exp <= 0:
        raise DomainError("exponent p must be positive")
    if guess[0] <= 0:
        raise DomainError("initial guess needs x0 > 0")
    nec = singular_necessary(f)
    if nec.verdict != "Candidate":
        return ShootResult(False, diagnostics=[f"necessary condition fails: {nec.verdict}"])
    ff = f.compile()
    T = f.period

    def rhs(t, s):
        return [s[1], ff(t) / s[0] ** p_exp]

    def flow(z):
        tr = integrate(rhs, list(z), (0.0, T), tol=tol, escape_norm=1e8)
        if any(y[0] <= 0 for y in tr.ys):
            raise LeftDomain(T, tuple(tr.ys[-1]))
        return tr

    def G(z):
        tr = flow(z)
        xT, vT = tr.y_final
        return np.array([xT - z[0], vT - z[1]]), tr

    diag = []
    z = np.array(guess, dtype=float)
    try:
        g, tr = G(z)
    except (NumericFailure, ZeroDivisionError, OverflowError) as exc:
        return ShootResult(False, diagnostics=[f"initial orbit failed: {type(exc).__name__}"])
    for it in range(max_iter):
        nrm = float(np.max(np.abs(g)))
        diag.append(f"iter {it}: |G| = {nrm:.3e}")
        if nrm < res_tol:
            return ShootResult(True, float(z[0]), float(z[1]), nrm, tr, diag)
        J = np.empty((2, 2))
        for j in range(2):
            h = 1e-6 * max(1.0, abs(z[j]))
            e = np.zeros(2)
            e[j] = h
            try:
                gp, _ = G(z + e)
                gm, _ = G(z - e)
            except (NumericFailure, ZeroDivisionError, OverflowError) as exc:
                diag.append(f"jacobian failed: {type(exc).__name__}")
                return ShootResult(False, diagnostics=diag)
            J[:, j] = (gp - gm) / (2 * h)
        try:
            step = np.linalg.solve(J, -g)
        except np.linalg.LinAlgError:
            diag.append("singular shooting jacobian")
            return ShootResult(False, diagnostics=diag)
        lam = 1.0
        while lam > 1e-6:
            zn = z + lam * step
            if zn[0] > 0:
                try:
                    gn, trn = G(zn)
                    if np.max(np.abs(gn)) < (1 - 1e-4 * lam) * nrm:
                        break
                except (NumericFailure, ZeroDivisionError, OverflowError):
                    diag.append(f"step {lam:g} rejected: orbit reached x <= 0 or escaped")
            lam *= 0.5
        else:
            diag.append("line search failed")
            return ShootResult(False, diagnostics=diag)
        z, g, tr = zn, gn, trn
    diag.append("newton did not converge")
    return ShootResult(False, diagnostics=diag)
