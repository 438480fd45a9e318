"""Exact sparse multivariate polynomials and rational functions over Q and Q(i).

Coefficients are :class:`fractions.Fraction` (or :class:`GaussQ` for the
Gaussian-rational story).  Float evaluation goes through :meth:`SparsePoly.compile`
and is never mixed into exact arithmetic.
"""
from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from itertools import product
from typing import Callable, Iterable, Mapping, Sequence

from .errors import DomainError, ResourceError

DEFAULT_NAMES = ("x", "y", "z", "w", "u", "v")


class GaussQ:
    """Gaussian rational a + b*i with Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def _lift(other):
        if isinstance(other, GaussQ):
            return other
        if isinstance(other, (int, Fraction)):
            return GaussQ(other, 0)
        return NotImplemented

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return GaussQ(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return GaussQ(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return GaussQ(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("GaussQ division by zero")
        n = self * o.conjugate()
        return GaussQ(n.re / d, n.im / d)

    def __neg__(self):
        return GaussQ(-self.re, -self.im)

    def conjugate(self):
        return GaussQ(self.re, -self.im)

    def __eq__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return False
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im)) if self.im else hash(self.re)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussQ({self.re}, {self.im})"


I = GaussQ(0, 1)


def _coerce(c):
    if isinstance(c, (Fraction, GaussQ)):
        return c
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, float):
        # floats enter exactly; callers wanting 0.1 should pass Fraction("0.1")
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    if isinstance(c, complex):
        return GaussQ(Fraction(c.real), Fraction(c.imag))
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


def _grlex_key(e):
    return (sum(e), e)


class SparsePoly:
    """Immutable sparse polynomial ``{exponent tuple: coefficient}``.

    Zero coefficients are never stored.  Variable names are carried for
    printing and JSON; arithmetic requires matching ``nvars``.
    """

    __slots__ = ("terms", "nvars", "names", "_compiled", "_hash", "cache")

    def __init__(self, terms: Mapping[tuple, object] | None = None, nvars: int | None = None,
                 names: Sequence[str] | None = None):
        terms = terms or {}
        if nvars is None:
            if names is not None:
                nvars = len(names)
            elif terms:
                nvars = len(next(iter(terms)))
            else:
                nvars = 1
        clean = {}
        for e, c in terms.items():
            e = tuple(int(k) for k in e)
            if len(e) != nvars:
                raise DomainError(f"exponent {e} does not have length {nvars}")
            if any(k < 0 for k in e):
                raise DomainError(f"negative exponent in {e}")
            c = _coerce(c)
            if c:
                clean[e] = clean.get(e, 0) + c
                if not clean[e]:
                    del clean[e]
        self.terms = clean
        self.nvars = nvars
        if names is None:
            names = DEFAULT_NAMES[:nvars] if nvars <= len(DEFAULT_NAMES) else tuple(
                f"x{i}" for i in range(nvars))
        self.names = tuple(names)
        self._compiled = None
        self._hash = None
        self.cache = {}

    # -- constructors -----------------------------------------------------
    @classmethod
    def const(cls, c, nvars=2, names=None):
        return cls({(0,) * nvars: c}, nvars, names)

    @classmethod
    def var(cls, i, nvars=2, names=None):
        e = [0] * nvars
        e[i] = 1
        return cls({tuple(e): 1}, nvars, names)

    @classmethod
    def variables(cls, nvars=2, names=None):
        return tuple(cls.var(i, nvars, names) for i in range(nvars))

    @classmethod
    def from_coeffs(cls, coeffs: Sequence, names=("x",)):
        """Univariate polynomial from ascending coefficients."""
        return cls({(k,): c for k, c in enumerate(coeffs)}, 1, names)

    @classmethod
    def parse(cls, text: str, names: Sequence[str] = ("x", "y")) -> "SparsePoly":
        """Parse ``"x^6 + 61/43*y^3 - y"``; ``^`` and ``**`` both mean power."""
        return _parse_expr(text, tuple(names), allow_division=False)

    def _new(self, terms):
        return SparsePoly(terms, self.nvars, self.names)

    def _check(self, other):
        if self.nvars != other.nvars:
            raise DomainError(f"nvars mismatch: {self.nvars} vs {other.nvars}")

    def _wrap(self, other):
        if isinstance(other, SparsePoly):
            self._check(other)
            return other
        if isinstance(other, (int, float, Fraction, GaussQ, str)):
            return SparsePoly.const(other, self.nvars, self.names)
        return None

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        o = self._wrap(other)
        if o is None:
            return NotImplemented
        t = dict(self.terms)
        for e, c in o.terms.items():
            t[e] = t.get(e, 0) + c
        return self._new(t)

    __radd__ = __add__

    def __neg__(self):
        return self._new({e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        o = self._wrap(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._wrap(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._wrap(other)
        if o is None:
            return NotImplemented
        t = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in o.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                t[e] = t.get(e, 0) + c1 * c2
        return self._new(t)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction, GaussQ)):
            return self * (Fraction(1) / other if not isinstance(other, GaussQ) else GaussQ(1) / other)
        if isinstance(other, SparsePoly):
            return RationalFn(self, other)
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise DomainError("polynomial powers need a non-negative integer")
        result = SparsePoly.const(1, self.nvars, self.names)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        o = self._wrap(other) if not isinstance(other, RationalFn) else None
        if o is None:
            if isinstance(other, RationalFn):
                return other == self
            return NotImplemented
        return self.terms == o.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    # -- structure --------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    def degree_in(self, i: int) -> int:
        return max((e[i] for e in self.terms), default=-1)

    @property
    def monomial_count(self) -> int:
        return len(self.terms)

    def is_real(self) -> bool:
        return all(not isinstance(c, GaussQ) or c.im == 0 for c in self.terms.values())

    def constant_term(self):
        return self.terms.get((0,) * self.nvars, Fraction(0))

    def homogeneous_part(self, d: int) -> "SparsePoly":
        return self._new({e: c for e, c in self.terms.items() if sum(e) == d})

    def homogeneous_parts(self) -> list["SparsePoly"]:
        return [self.homogeneous_part(d) for d in range(self.degree() + 1)]

    def used_vars(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.nvars) if any(e[i] for e in self.terms))

    def sorted_terms(self):
        """Terms in descending graded-lex order (the canonical serialization order)."""
        return sorted(self.terms.items(), key=lambda kv: _grlex_key(kv[0]), reverse=True)

    def coeffs(self) -> list:
        """Dense ascending coefficient list of a univariate polynomial."""
        if self.nvars != 1:
            raise DomainError("coeffs() needs a univariate polynomial")
        d = self.degree()
        return [self.terms.get((k,), Fraction(0)) for k in range(d + 1)]

    def real_part(self) -> "SparsePoly":
        return self._new({e: (c.re if isinstance(c, GaussQ) else c) for e, c in self.terms.items()})

    def imag_part(self) -> "SparsePoly":
        return self._new({e: c.im for e, c in self.terms.items() if isinstance(c, GaussQ)})

    def with_names(self, names) -> "SparsePoly":
        return SparsePoly(self.terms, self.nvars, names)

    def extend(self, nvars: int, names=None) -> "SparsePoly":
        """Embed into a ring with more (trailing) variables."""
        pad = (0,) * (nvars - self.nvars)
        return SparsePoly({e + pad: c for e, c in self.terms.items()}, nvars,
                          names or (self.names + tuple(DEFAULT_NAMES[self.nvars:nvars])))

    # -- calculus ---------------------------------------------------------
    def diff(self, i: int = 0, order: int = 1) -> "SparsePoly":
        t = {}
        for e, c in self.terms.items():
            k = e[i]
            if k < order:
                continue
            f = 1
            for j in range(order):
                f *= k - j
            e2 = list(e)
            e2[i] = k - order
            t[tuple(e2)] = c * f
        return self._new(t)

    def antiderivative(self, i: int = 0) -> "SparsePoly":
        t = {}
        for e, c in self.terms.items():
            e2 = list(e)
            e2[i] += 1
            t[tuple(e2)] = c / e2[i]
        return self._new(t)

    def integrate_unit_cube(self):
        """Exact integral over [0,1]^nvars."""
        total = Fraction(0)
        for e, c in self.terms.items():
            w = Fraction(1)
            for k in e:
                w /= k + 1
            total += c * w
        return total

    # -- evaluation -------------------------------------------------------
    def evaluate(self, point: Sequence):
        """Exact evaluation at rational (or Gaussian) points."""
        total = 0
        for e, c in self.terms.items():
            m = c
            for v, k in zip(point, e):
                if k:
                    m = m * v ** k
            total = total + m
        return total

    def subs(self, images: Sequence["SparsePoly"]) -> "SparsePoly":
        """Compose: replace variable i by ``images[i]`` (all in a common ring)."""
        if len(images) != self.nvars:
            raise DomainError("need one image per variable")
        target = images[0]
        result = SparsePoly({}, target.nvars, target.names)
        cache: dict[tuple[int, int], SparsePoly] = {}

        def power(i, k):
            if (i, k) not in cache:
                cache[(i, k)] = images[i] ** k
            return cache[(i, k)]

        for e, c in self.terms.items():
            m = SparsePoly.const(c, target.nvars, target.names)
            for i, k in enumerate(e):
                if k:
                    m = m * power(i, k)
            result = result + m
        return result

    def compile(self) -> Callable[..., float]:
        """Float evaluator ``f(*coords)``; cached on the instance."""
        if self._compiled is None:
            self._compiled = _compile_terms(self.terms, self.nvars)
        return self._compiled

    def __call__(self, *coords):
        return self.compile()(*coords)

    # -- printing / serialization ------------------------------------------
    def __repr__(self):
        return f"SparsePoly({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(
                (n if k == 1 else f"{n}^{k}") for n, k in zip(self.names, e) if k)
            if isinstance(c, GaussQ):
                cs = f"({c.re}{'+' if c.im >= 0 else '-'}{abs(c.im)}*i)"
                parts.append(f"{cs}*{mono}" if mono else cs)
                continue
            if mono:
                if c == 1:
                    parts.append(mono)
                elif c == -1:
                    parts.append(f"-{mono}")
                else:
                    parts.append(f"{c}*{mono}")
            else:
                parts.append(str(c))
        return " + ".join(parts).replace("+ -", "- ")

    def to_json(self) -> dict:
        terms = []
        for e, c in self.sorted_terms():
            if isinstance(c, GaussQ):
                terms.append({"e": list(e), "c": {"re": str(c.re), "im": str(c.im)}})
            else:
                terms.append({"e": list(e), "c": str(c)})
        return {"vars": list(self.names), "terms": terms}

    @classmethod
    def from_json(cls, data: Mapping) -> "SparsePoly":
        names = tuple(data["vars"])
        terms = {}
        for t in data["terms"]:
            c = t["c"]
            if isinstance(c, Mapping):
                c = GaussQ(Fraction(str(c.get("re", "0"))), Fraction(str(c.get("im", "0"))))
            else:
                c = Fraction(str(c))
            e = tuple(t["e"])
            terms[e] = terms.get(e, 0) + c
        return cls(terms, len(names), names)


def _compile_terms(terms, nvars):
    args = [f"a{i}" for i in range(nvars)]
    if not terms:
        return eval(f"lambda {', '.join(args)}: 0.0")
    lines = []
    maxpow = [max(e[i] for e in terms) for i in range(nvars)]
    for i in range(nvars):
        if maxpow[i] >= 2:
            lines.append(f"    p{i}_1 = a{i}")
            for k in range(2, maxpow[i] + 1):
                lines.append(f"    p{i}_{k} = p{i}_{k - 1} * a{i}")
    pieces = []
    for e, c in terms.items():
        if isinstance(c, GaussQ):
            cf = repr(complex(c))
        else:
            cf = repr(float(c))
        factors = [cf]
        for i, k in enumerate(e):
            if k == 1:
                factors.append(f"a{i}")
            elif k >= 2:
                factors.append(f"p{i}_{k}")
        pieces.append("*".join(factors))
    src = f"def _f({', '.join(args)}):\n" + "\n".join(lines) + \
        ("\n" if lines else "") + f"    return {' + '.join(pieces)}\n"
    ns: dict = {}
    exec(src, ns)
    return ns["_f"]


class RationalFn:
    """Numerator/denominator pair.  No automatic gcd cancellation."""

    __slots__ = ("num", "den")

    def __init__(self, num: SparsePoly, den: SparsePoly | None = None):
        if den is None:
            den = SparsePoly.const(1, num.nvars, num.names)
        if isinstance(num, (int, Fraction)):
            num = SparsePoly.const(num, den.nvars, den.names)
        num._check(den)
        if den.is_zero():
            raise DomainError("RationalFn denominator is identically zero")
        self.num = num
        self.den = den

    @property
    def nvars(self):
        return self.num.nvars

    @property
    def names(self):
        return self.num.names

    @staticmethod
    def lift(x) -> "RationalFn":
        if isinstance(x, RationalFn):
            return x
        if isinstance(x, SparsePoly):
            return RationalFn(x)
        raise TypeError(f"cannot lift {type(x).__name__} to RationalFn")

    def _other(self, other):
        if isinstance(other, RationalFn):
            return other
        if isinstance(other, SparsePoly):
            return RationalFn(other)
        if isinstance(other, (int, Fraction, GaussQ)):
            return RationalFn(SparsePoly.const(other, self.nvars, self.names))
        return None

    def __add__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        if o.den == self.den:
            return RationalFn(self.num + o.num, self.den)
        return RationalFn(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFn(-self.num, self.den)

    def __sub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return RationalFn(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        if o.num.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFn(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other):
        return self._other(other) / self

    def __pow__(self, k: int):
        return RationalFn(self.num ** k, self.den ** k)

    def __eq__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return self.num * o.den == o.num * self.den

    __hash__ = None

    def diff(self, i: int = 0) -> "RationalFn":
        return RationalFn(self.num.diff(i) * self.den - self.num * self.den.diff(i), self.den * self.den)

    def is_polynomial(self) -> bool:
        return self.den.degree() == 0

    def normalize(self) -> "RationalFn":
        """Cancel monomial factors, constant content, and univariate gcds."""
        num, den = self.num, self.den
        if num.is_zero():
            return RationalFn(num, SparsePoly.const(1, self.nvars, self.names))
        shift = [min(e[i] for e in list(num.terms) + list(den.terms)) for i in range(self.nvars)]
        if any(shift):
            num = num._new({tuple(a - b for a, b in zip(e, shift)): c for e, c in num.terms.items()})
            den = den._new({tuple(a - b for a, b in zip(e, shift)): c for e, c in den.terms.items()})
        used = set(num.used_vars()) | set(den.used_vars())
        if len(used) == 1:
            (v,) = used
            nu = _to_univariate(num, v)
            du = _to_univariate(den, v)
            g = upoly_gcd(nu, du)
            if len(g) > 1:
                nu, _ = upoly_divmod(nu, g)
                du, _ = upoly_divmod(du, g)
                num = _from_univariate(nu, v, num)
                den = _from_univariate(du, v, den)
        lead = den.sorted_terms()[0][1]
        if lead != 1 and not isinstance(lead, GaussQ):
            num = num * (Fraction(1) / lead)
            den = den * (Fraction(1) / lead)
        return RationalFn(num, den)

    def compile(self):
        n = self.num.compile()
        d = self.den.compile()
        return lambda *a: n(*a) / d(*a)

    def __call__(self, *coords):
        return self.num(*coords) / self.den(*coords)

    def __repr__(self):
        return f"RationalFn(({self.num}) / ({self.den}))"

    def to_json(self):
        return {"num": self.num.to_json(), "den": self.den.to_json()}

    @classmethod
    def parse(cls, text: str, names: Sequence[str] = ("x", "y")) -> "RationalFn":
        r = _parse_expr(text, tuple(names), allow_division=True)
        return cls.lift(r)


def _to_univariate(p: SparsePoly, v: int) -> list:
    d = p.degree_in(v)
    out = [Fraction(0)] * (d + 1)
    for e, c in p.terms.items():
        out[e[v]] += c
    return out


def _from_univariate(coeffs, v, like: SparsePoly) -> SparsePoly:
    t = {}
    for k, c in enumerate(coeffs):
        e = [0] * like.nvars
        e[v] = k
        t[tuple(e)] = c
    return like._new(t)


# -- expression parsing -------------------------------------------------------

def _parse_expr(text, names, allow_division):
    tree = ast.parse(text.replace("^", "**"), mode="eval")
    nv = len(names)
    gens = {n: SparsePoly.var(i, nv, names) for i, n in enumerate(names)}

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            v = node.value
            return Fraction(str(v)) if isinstance(v, float) else Fraction(v)
        if isinstance(node, ast.Name):
            if node.id in gens:
                return gens[node.id]
            if node.id == "i":
                return GaussQ(0, 1)
            raise DomainError(f"unknown symbol {node.id!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            a, b = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return _lift_num(a, nv, names) + b if isinstance(b, (SparsePoly, RationalFn)) else a + b
            if isinstance(node.op, ast.Sub):
                return _lift_num(a, nv, names) - b if isinstance(b, (SparsePoly, RationalFn)) else a - b
            if isinstance(node.op, ast.Mult):
                return _lift_num(a, nv, names) * b if isinstance(b, (SparsePoly, RationalFn)) else a * b
            if isinstance(node.op, ast.Pow):
                if not isinstance(b, Fraction) or b.denominator != 1 or b < 0:
                    raise DomainError("exponents must be non-negative integers")
                return a ** int(b)
            if isinstance(node.op, ast.Div):
                if isinstance(b, (Fraction, GaussQ)):
                    return a / b if not isinstance(a, SparsePoly) else a * (1 / b)
                if not allow_division:
                    raise DomainError("division by a polynomial; use RationalFn.parse")
                return RationalFn.lift(_lift_num(a, nv, names)) / RationalFn.lift(b)
        raise DomainError(f"unsupported syntax in polynomial expression: {ast.dump(node)}")

    out = ev(tree)
    return _lift_num(out, nv, names)


def _lift_num(v, nv, names):
    if isinstance(v, (Fraction, GaussQ, int)):
        return SparsePoly.const(v, nv, names)
    return v


# -- dense univariate helpers (ascending coefficient lists) -------------------

def _trim(p):
    p = list(p)
    while p and not p[-1]:
        p.pop()
    return p


def upoly_divmod(a, b, modulus=None):
    a, b = _trim(a), _trim(b)
    if not b:
        raise ZeroDivisionError("univariate division by zero polynomial")
    if modulus:
        inv = pow(int(b[-1]) % modulus, -1, modulus)
    q = [0] * max(len(a) - len(b) + 1, 1)
    r = list(a)
    while len(r) >= len(b) and r:
        shift = len(r) - len(b)
        f = (r[-1] * inv) % modulus if modulus else Fraction(r[-1]) / b[-1]
        q[shift] = f
        for i, c in enumerate(b):
            r[i + shift] = r[i + shift] - f * c
            if modulus:
                r[i + shift] %= modulus
        r = _trim(r)
    return _trim(q), r


def upoly_gcd(a, b, modulus=None):
    """Monic gcd over Q (or GF(modulus))."""
    a, b = _trim(a), _trim(b)
    if modulus:
        a = _trim([int(c) % modulus for c in a])
        b = _trim([int(c) % modulus for c in b])
    while b:
        _, r = upoly_divmod(a, b, modulus)
        a, b = b, r
    if not a:
        return []
    if modulus:
        inv = pow(a[-1], -1, modulus)
        return [(c * inv) % modulus for c in a]
    lead = Fraction(a[-1])
    return [Fraction(c) / lead for c in a]


def upoly_deriv(a, order=1, modulus=None):
    out = list(a)
    for _ in range(order):
        out = [k * c for k, c in enumerate(out)][1:]
        if modulus:
            out = [c % modulus for c in out]
    return _trim(out)


def upoly_eval(a, x):
    acc = 0
    for c in reversed(a):
        acc = acc * x + c
    return acc


def upoly_mul(a, b):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def squarefree_factors(a):
    """Yun's algorithm over Q: returns [a_1, a_2, ...] with a = c * prod a_i^i."""
    a = _trim([Fraction(c) for c in a])
    out = []
    b = upoly_gcd(a, upoly_deriv(a))
    c, _ = upoly_divmod(a, b)
    d_, _ = upoly_divmod(upoly_deriv(a), b)
    d = _sub(d_, upoly_deriv(c))
    while len(c) > 1:
        y = upoly_gcd(c, d)
        out.append(y)
        c, _ = upoly_divmod(c, y)
        d_, _ = upoly_divmod(d, y)
        d = _sub(d_, upoly_deriv(c))
    return out


def _sub(a, b):
    n = max(len(a), len(b))
    return _trim([(a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(n)])


def sturm_count(a, lo=None, hi=None) -> int:
    """Number of distinct real roots of ``a`` in (lo, hi]; None means infinite."""
    a = _trim([Fraction(c) for c in a])
    if len(a) <= 1:
        return 0
    seq = [a, upoly_deriv(a)]
    while len(seq[-1]) > 1:
        _, r = upoly_divmod(seq[-2], seq[-1])
        if not r:
            break
        seq.append([-c for c in r])

    def changes(x):
        if x is None:
            return None
        vals = [upoly_eval(p, x) for p in seq]
        vals = [v for v in vals if v]
        return sum(1 for u, v in zip(vals, vals[1:]) if (u > 0) != (v > 0))

    def changes_inf(sign):
        vals = []
        for p in seq:
            deg = len(p) - 1
            s = 1 if p[-1] > 0 else -1
            if sign < 0 and deg % 2:
                s = -s
            vals.append(s)
        return sum(1 for u, v in zip(vals, vals[1:]) if u != v)

    vlo = changes(lo) if lo is not None else changes_inf(-1)
    vhi = changes(hi) if hi is not None else changes_inf(+1)
    return vlo - vhi


# -- operations ---------------------------------------------------------------

def descartes_bound(p: SparsePoly) -> int:
    """Sign changes of the nonzero coefficient sequence (ascending degree)."""
    if p.nvars != 1:
        raise DomainError("descartes_bound needs a univariate polynomial")
    if p.is_zero():
        raise DomainError("descartes_bound of the zero polynomial")
    signs = [1 if c > 0 else -1 for _, c in sorted(p.terms.items())]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


DEFAULT_MOMENT_CAP = 200


def moments(f: SparsePoly, m_max: int, cap: int = DEFAULT_MOMENT_CAP) -> list[Fraction]:
    """Exact moments M_m = int_{[0,1]^n} f^m for m = 1..m_max."""
    if f.nvars > 2:
        raise DomainError("moments supports at most two variables")
    deg = max(f.degree(), 0)
    if m_max * deg > cap:
        raise ResourceError(f"moment degree {m_max * deg} exceeds cap {cap}")
    out = []
    power = SparsePoly.const(1, f.nvars, f.names)
    for _ in range(m_max):
        power = power * f
        out.append(power.integrate_unit_cube())
    return out


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    r = math.isqrt(n)
    return all(n % k for k in range(3, r + 1, 2))


@dataclass(frozen=True)
class CasasAlveroVerdict:
    shares: bool
    witnesses: tuple = ()
    fails_at: int | None = None
    modulus: int | None = None


def casas_alvero(p: SparsePoly, modulus: int | None = None) -> CasasAlveroVerdict:
    """Does ``p`` share a root with each derivative p^(k), k = 1..deg-1?

    Witnesses are the gcds (ascending coefficient lists).  Over GF(q) a
    derivative that vanishes identically shares every root of ``p``.
    """
    if modulus is not None and not _is_prime(modulus):
        raise DomainError(f"modulus {modulus} is not prime")
    coeffs = p.coeffs()
    if modulus is not None:
        if any(Fraction(c).denominator % modulus == 0 for c in coeffs):
            raise DomainError("coefficient denominator not invertible modulo the prime")
        coeffs = [(Fraction(c).numerator * pow(Fraction(c).denominator, -1, modulus)) % modulus
                  for c in coeffs]
        coeffs = _trim(coeffs)
    n = len(coeffs) - 1
    if n < 2:
        raise DomainError("casas_alvero needs degree >= 2")
    witnesses = []
    for k in range(1, n):
        dk = upoly_deriv(coeffs, k, modulus)
        g = upoly_gcd(coeffs, dk, modulus) if dk else upoly_gcd(coeffs, [], modulus)
        if len(g) <= 1:
            return CasasAlveroVerdict(False, tuple(witnesses), k, modulus)
        witnesses.append(tuple(g))
    return CasasAlveroVerdict(True, tuple(witnesses), None, modulus)


def chebyshev_t(n: int) -> SparsePoly:
    if n < 0:
        raise DomainError("Chebyshev index must be non-negative")
    x = SparsePoly.var(0, 1, ("x",))
    t0, t1 = SparsePoly.const(1, 1, ("x",)), x
    if n == 0:
        return t0
    for _ in range(n - 1):
        t0, t1 = t1, 2 * x * t1 - t0
    return t1


@dataclass(frozen=True)
class LoewnerField:
    f: SparsePoly
    n: int
    components: tuple  # (P, Q) real polynomials
    degenerate: bool   # origin not an isolated zero (n >= deg f)

    @property
    def field(self):
        from .flow import VectorField2
        return VectorField2(*self.components, name=f"loewner(n={self.n})")


def loewner_field(f: SparsePoly, n: int) -> LoewnerField:
    """Planar field (2^n Re d^n f/dzbar^n, 2^n Im d^n f/dzbar^n).

    Computed by rewriting f in (z, zbar) with Gaussian-rational coefficients.
    """
    if n < 1:
        raise DomainError("Loewner order must be >= 1")
    if f.nvars != 2 or not f.is_real():
        raise DomainError("Loewner field needs a real bivariate polynomial")
    if f.constant_term() != 0:
        raise DomainError("Loewner field needs f(0,0) = 0")
    names = ("z", "zb")
    z, zb = SparsePoly.variables(2, names)
    half = Fraction(1, 2)
    x_img = (z + zb) * half
    y_img = (z - zb) * GaussQ(0, Fraction(-1, 2))   # (z - zb) / (2i)
    g = f.subs([x_img, y_img])
    g = g.diff(1, n)
    x, y = SparsePoly.variables(2, f.names)
    back = g.subs([x + y * I, x - y * I]) * (2 ** n)
    P, Q = back.real_part(), back.imag_part()
    return LoewnerField(f, n, (P, Q), n >= f.degree())


@dataclass(frozen=True)
class FieldCalculus:
    divergence: RationalFn
    jacobian: tuple  # ((P_x, P_y), (Q_x, Q_y))


def vf_calculus(P, Q) -> FieldCalculus:
    P, Q = RationalFn.lift(P), RationalFn.lift(Q)
    if P.nvars < 2 or P.nvars != Q.nvars:
        raise DomainError("vector field components must share >= 2 variables")
    Px, Py, Qx, Qy = P.diff(0), P.diff(1), Q.diff(0), Q.diff(1)
    div = Px + Qy
    if Px.den == Qy.den:
        div = RationalFn(Px.num + Qy.num, Px.den)
    return FieldCalculus(div, ((Px, Py), (Qx, Qy)))


def random_poly(rng, nvars=2, degree=4, density=0.6, coeff_range=9, denominators=(1, 2, 3, 5)):
    """Random sparse polynomial with small rational coefficients (testing helper)."""
    terms = {}
    for e in product(range(degree + 1), repeat=nvars):
        if sum(e) <= degree and rng.random() < density:
            c = Fraction(rng.randint(-coeff_range, coeff_range), rng.choice(denominators))
            if c:
                terms[e] = c
    return SparsePoly(terms, nvars)


def poly_from_roots(roots: Iterable, names=("x",)) -> SparsePoly:
    x = SparsePoly.var(0, 1, names)
    return reduce(lambda acc, r: acc * (x - r), roots, SparsePoly.const(1, 1, names))
