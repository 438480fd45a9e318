"""Outward-rounded interval arithmetic and box certification.

Rounding is done by stepping every computed endpoint one ulp outward with
:func:`math.nextafter`, so no FPU rounding-mode manipulation is needed.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .algebra import RationalFn, SparsePoly

_INF = math.inf


def _dn(v: float) -> float:
    return math.nextafter(v, -_INF)


def _up(v: float) -> float:
    return math.nextafter(v, _INF)


def _float_below(q) -> float:
    f = float(q)
    if isinstance(q, float) or Fraction(f) <= q:
        return f
    return _dn(f)


def _float_above(q) -> float:
    f = float(q)
    if isinstance(q, float) or Fraction(f) >= q:
        return f
    return _up(f)


class Interval:
    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        if hi is None:
            hi = lo
        if isinstance(lo, (Fraction, int)) or isinstance(hi, (Fraction, int)):
            lo, hi = _float_below(Fraction(lo)), _float_above(Fraction(hi))
        if not lo <= hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo = float(lo)
        self.hi = float(hi)

    @classmethod
    def point(cls, q) -> "Interval":
        """Tightest float enclosure of an exact number."""
        if isinstance(q, float):
            return cls(q, q)
        q = Fraction(q)
        return cls(_float_below(q), _float_above(q))

    @staticmethod
    def _lift(o):
        if isinstance(o, Interval):
            return o
        return Interval.point(o)

    def __add__(self, o):
        o = self._lift(o)
        return Interval(_dn(self.lo + o.lo), _up(self.hi + o.hi))

    __radd__ = __add__

    def __sub__(self, o):
        o = self._lift(o)
        return Interval(_dn(self.lo - o.hi), _up(self.hi - o.lo))

    def __rsub__(self, o):
        return self._lift(o) - self

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __mul__(self, o):
        o = self._lift(o)
        a, b, c, d = self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi
        lo, hi = min(a, b, c, d), max(a, b, c, d)
        if lo == 0.0 and hi == 0.0 and (self.lo == self.hi == 0.0 or o.lo == o.hi == 0.0):
            return Interval(0.0, 0.0)
        return Interval(_dn(lo), _up(hi))

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = self._lift(o)
        if o.lo <= 0.0 <= o.hi:
            raise ZeroDivisionError("interval division by an interval containing 0")
        a, b, c, d = self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi
        return Interval(_dn(min(a, b, c, d)), _up(max(a, b, c, d)))

    def __rtruediv__(self, o):
        return self._lift(o) / self

    def __pow__(self, k: int):
        if k == 0:
            return Interval(1.0, 1.0)
        if k == 1:
            return self
        lo, hi = self.lo, self.hi
        if k % 2 == 0:
            if lo >= 0:
                a, b = lo, hi
            elif hi <= 0:
                a, b = -hi, -lo
            else:
                return Interval(0.0, _pow_up(max(-lo, hi), k))
            return Interval(_pow_dn(a, k), _pow_up(b, k))
        return Interval(_pow_dn_signed(lo, k), _pow_up_signed(hi, k))

    # -- queries ------------------------------------------------------------
    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, v) -> bool:
        if isinstance(v, Interval):
            return self.lo <= v.lo and v.hi <= self.hi
        if isinstance(v, Fraction):
            return Fraction(self.lo) <= v <= Fraction(self.hi)
        return self.lo <= v <= self.hi

    __contains__ = contains

    def interior_contains(self, v: "Interval") -> bool:
        return self.lo < v.lo and v.hi < self.hi

    def excludes_zero(self) -> bool:
        return self.lo > 0.0 or self.hi < 0.0

    def intersect(self, o: "Interval"):
        lo, hi = max(self.lo, o.lo), min(self.hi, o.hi)
        return Interval(lo, hi) if lo <= hi else None

    def hull(self, o: "Interval") -> "Interval":
        return Interval(min(self.lo, o.lo), max(self.hi, o.hi))

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"

    def __eq__(self, o):
        return isinstance(o, Interval) and self.lo == o.lo and self.hi == o.hi

    def __hash__(self):
        return hash((self.lo, self.hi))


def _pow_up(a, k):
    # a >= 0; repeated multiplication with upward steps
    r = 1.0
    for _ in range(k):
        r = _up(r * a)
    return r


def _pow_dn(a, k):
    r = 1.0
    for _ in range(k):
        r = _dn(r * a)
    return max(r, 0.0)


def _pow_up_signed(a, k):
    return _pow_up(a, k) if a >= 0 else -_pow_dn(-a, k)


def _pow_dn_signed(a, k):
    return _pow_dn(a, k) if a >= 0 else -_pow_up(-a, k)


class Box(tuple):
    """Axis-aligned box: a tuple of :class:`Interval`."""

    def __new__(cls, intervals):
        ivs = []
        for iv in intervals:
            if isinstance(iv, Interval):
                ivs.append(iv)
            else:
                lo, hi = iv
                ivs.append(Interval(lo, hi))
        if not ivs:
            raise ValueError("a box needs at least one dimension")
        return super().__new__(cls, ivs)

    @classmethod
    def from_exact(cls, bounds) -> "Box":
        return cls([Interval(_float_below(Fraction(lo)), _float_above(Fraction(hi))) for lo, hi in bounds])

    @property
    def dim(self) -> int:
        return len(self)

    @property
    def mid(self) -> tuple:
        return tuple(iv.mid for iv in self)

    @property
    def widths(self) -> tuple:
        return tuple(iv.width for iv in self)

    @property
    def max_width(self) -> float:
        return max(self.widths)

    def widest(self) -> int:
        w = self.widths
        return max(range(len(w)), key=lambda i: (w[i], -i))

    def bisect(self, i: int | None = None):
        if i is None:
            i = self.widest()
        iv = self[i]
        m = iv.mid
        a = list(self)
        b = list(self)
        a[i] = Interval(iv.lo, m)
        b[i] = Interval(m, iv.hi)
        return Box(a), Box(b)

    def face(self, i: int, upper: bool) -> "Box":
        b = list(self)
        v = self[i].hi if upper else self[i].lo
        b[i] = Interval(v, v)
        return Box(b)

    def contains_point(self, p) -> bool:
        return all(iv.contains(v) for iv, v in zip(self, p))

    def interior_contains(self, other: "Box") -> bool:
        return all(a.interior_contains(b) for a, b in zip(self, other))

    def intersect(self, other: "Box"):
        out = []
        for a, b in zip(self, other):
            c = a.intersect(b)
            if c is None:
                return None
            out.append(c)
        return Box(out)

    def intersects(self, other: "Box") -> bool:
        return self.intersect(other) is not None

    def to_json(self):
        return [[repr(iv.lo), repr(iv.hi)] for iv in self]


# -- polynomial enclosures -----------------------------------------------------

def _horner_plan(p: SparsePoly, var: int = 0):
    """Nested sparse-Horner plan: list of (exponent, sub-plan or Interval coeff)."""
    if var == p.nvars:
        (c,) = p.terms.values() if p.terms else (Fraction(0),)
        return Interval.point(c)
    groups: dict[int, dict] = {}
    for e, c in p.terms.items():
        groups.setdefault(e[var], {})[e] = c
    plan = []
    for k in sorted(groups, reverse=True):
        sub = SparsePoly({e[:var] + (0,) + e[var + 1:]: c for e, c in groups[k].items()}, p.nvars)
        plan.append((k, _horner_plan(sub, var + 1)))
    return plan


def _eval_plan(plan, box, var):
    if isinstance(plan, Interval):
        return plan
    X = box[var]
    acc = None
    prev = None
    for k, sub in plan:
        c = _eval_plan(sub, box, var + 1)
        if acc is None:
            acc = c
        else:
            acc = acc * (X ** (prev - k)) + c
        prev = k
    if prev:
        acc = acc * (X ** prev)
    return acc


def eval_box(p, b: Sequence[Interval]) -> Interval:
    """Natural interval extension of ``p`` over ``b`` (sparse Horner per variable).

    ``p`` may also be a callable taking Interval arguments; this documents the
    dependency effect of interval arithmetic, e.g. ``lambda x: x - x``.
    """
    if callable(p) and not isinstance(p, (SparsePoly, RationalFn)):
        out = p(*b)
        return out if isinstance(out, Interval) else Interval.point(out)
    if isinstance(p, RationalFn):
        return eval_box(p.num, b) / eval_box(p.den, b)
    if p.nvars != len(b):
        raise ValueError(f"polynomial has {p.nvars} variables, box has {len(b)}")
    if not p.terms:
        return Interval(0.0, 0.0)
    plan = p.cache.get("horner")
    if plan is None:
        plan = p.cache["horner"] = _horner_plan(p)
    return _eval_plan(plan, b, 0)


class Sign(enum.Enum):
    POSITIVE = "StrictlyPositive"
    NEGATIVE = "StrictlyNegative"
    UNKNOWN = "Unknown"

    def __neg__(self):
        return {Sign.POSITIVE: Sign.NEGATIVE, Sign.NEGATIVE: Sign.POSITIVE}.get(self, Sign.UNKNOWN)


def certify_sign(f, b: Sequence[Interval], max_depth: int = 12) -> Sign:
    """Certify a strict sign of ``f`` on ``b`` by adaptive bisection."""
    if isinstance(f, RationalFn):
        sd = certify_sign(f.den, b, max_depth)
        if sd is Sign.UNKNOWN:
            return Sign.UNKNOWN
        sn = certify_sign(f.num, b, max_depth)
        if sn is Sign.UNKNOWN:
            return Sign.UNKNOWN
        return sn if sd is Sign.POSITIVE else -sn
    b = Box(b)
    found = None
    stack = [(b, 0)]
    while stack:
        box, d = stack.pop()
        enc = eval_box(f, box)
        if enc.lo > 0:
            s = Sign.POSITIVE
        elif enc.hi < 0:
            s = Sign.NEGATIVE
        else:
            if d >= max_depth:
                return Sign.UNKNOWN
            # a point value of the wrong sign ends the search early
            pv = eval_box(f, Box([Interval(v, v) for v in box.mid]))
            if found is not None and ((found is Sign.POSITIVE and pv.hi < 0) or
                                      (found is Sign.NEGATIVE and pv.lo > 0)):
                return Sign.UNKNOWN
            if pv.lo <= 0 <= pv.hi and all(iv.width == 0 for iv in box):
                return Sign.UNKNOWN
            stack.extend((c, d + 1) for c in box.bisect())
            continue
        if found is None:
            found = s
        elif found is not s:
            return Sign.UNKNOWN
    return found if found is not None else Sign.UNKNOWN


# -- Poincare-Miranda -------------------------------------------------------------

@dataclass
class MirandaResult:
    certified: bool
    permutation: tuple = ()
    signs: tuple = ()
    faces: dict = field(default_factory=dict)

    def to_json(self):
        return {"certified": self.certified, "permutation": list(self.permutation),
                "signs": list(self.signs),
                "faces": {f"{k[0]},{k[1]}": v for k, v in self.faces.items()}}


def poincare_miranda(sys: Sequence, b: Sequence[Interval], max_depth: int = 16) -> MirandaResult:
    """Search component permutations/sign flips satisfying the Poincare-Miranda faces.

    Component ``perm[i]`` (times ``signs[i]``) must be certified negative on
    the face x_i = L_i and positive on x_i = U_i.
    """
    b = Box(b)
    n = len(sys)
    if n != b.dim:
        raise ValueError("system size and box dimension differ")
    face_sign: dict = {}

    def pair(i, j):
        key = (i, j)
        if key not in face_sign:
            lo = certify_sign(sys[j], b.face(i, False), max_depth)
            hi = Sign.UNKNOWN
            if lo is not Sign.UNKNOWN:
                hi = certify_sign(sys[j], b.face(i, True), max_depth)
            face_sign[key] = (lo.value, hi.value)
        lo, hi = face_sign[key]
        if lo == Sign.NEGATIVE.value and hi == Sign.POSITIVE.value:
            return 1
        if lo == Sign.POSITIVE.value and hi == Sign.NEGATIVE.value:
            return -1
        return 0

    perms = itertools.permutations(range(n)) if n <= 3 else [tuple(range(n))]
    for perm in perms:
        signs = []
        for i, j in enumerate(perm):
            s = pair(i, j)
            if s == 0 or (n > 3 and s != 1):
                break
            signs.append(s)
        else:
            return MirandaResult(True, tuple(perm), tuple(signs), face_sign)
    return MirandaResult(False, (), (), face_sign)


# -- Krawczyk ------------------------------------------------------------------

def _jacobian_polys(sys):
    n = len(sys)
    return [[sys[i].diff(j) for j in range(n)] for i in range(n)]


class _System:
    """Square polynomial system with cached Jacobian and float evaluators."""

    def __init__(self, sys):
        self.f = list(sys)
        self.n = len(self.f)
        if any(p.nvars != self.n for p in self.f):
            raise ValueError("system must be square")
        self.J = _jacobian_polys(self.f)
        self._ff = [p.compile() for p in self.f]
        self._jf = [[q.compile() for q in row] for row in self.J]

    def fval(self, x):
        return np.array([g(*x) for g in self._ff])

    def jval(self, x):
        return np.array([[g(*x) for g in row] for row in self._jf])

    def newton(self, x0, iters=60, tol=1e-15):
        x = np.array(x0, dtype=float)
        for _ in range(iters):
            try:
                dx = np.linalg.solve(self.jval(x), self.fval(x))
            except np.linalg.LinAlgError:
                return None
            x = x - dx
            if not np.all(np.isfinite(x)):
                return None
            if np.max(np.abs(dx)) <= tol * max(1.0, np.max(np.abs(x))):
                break
        return x

    def krawczyk(self, X: Box):
        """Krawczyk image K(X), or None when the midpoint Jacobian is singular."""
        m = X.mid
        try:
            Y = np.linalg.inv(self.jval(m))
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(Y)):
            return None
        mbox = Box([Interval(v, v) for v in m])
        fm = [eval_box(p, mbox) for p in self.f]
        JX = [[eval_box(q, X) for q in row] for row in self.J]
        n = self.n
        d = [X[j] - m[j] for j in range(n)]
        K = []
        for i in range(n):
            acc = Interval(m[i], m[i])
            for j in range(n):
                acc = acc - Interval(Y[i, j], Y[i, j]) * fm[j]
            for j in range(n):
                c = Interval(1.0 if i == j else 0.0)
                for k in range(n):
                    c = c - Interval(Y[i, k], Y[i, k]) * JX[k][j]
                acc = acc + c * d[j]
            K.append(acc)
        return Box(K)

    def excluded(self, X: Box) -> bool:
        return any(eval_box(p, X).excludes_zero() for p in self.f)

    def certify_tiny(self, x, widths=(1e-13, 1e-12, 1e-11, 1e-10, 2e-10)):
        """Krawczyk-certified box of width <= 1e-9 around an approximate root."""
        for w in widths:
            r = [w * max(1.0, abs(v)) for v in x]
            X = Box([Interval(v - ri, v + ri) for v, ri in zip(x, r)])
            K = self.krawczyk(X)
            if K is not None and X.interior_contains(K):
                return K
        return None


@dataclass
class KrawczykResult:
    unique: bool
    box: Box | None = None
    root: tuple | None = None
    reason: str = ""
    method: str = ""

    def to_json(self):
        return {"status": "UniqueRoot" if self.unique else "Inconclusive",
                "box": self.box.to_json() if self.box is not None else None,
                "root": list(self.root) if self.root is not None else None,
                "reason": self.reason, "method": self.method}


@dataclass
class _Cover:
    roots: list = field(default_factory=list)       # (refined box, root, source box, box_level)
    unresolved: list = field(default_factory=list)
    excluded: int = 0


def _add_root(cover: _Cover, refined: Box, root, source: Box, box_level: bool):
    for k, (rb, rr, sb, lvl) in enumerate(cover.roots):
        if rb.intersects(refined):
            if box_level and not lvl:
                cover.roots[k] = (rb, rr, source, True)
            return
    cover.roots.append((refined, tuple(float(v) for v in root), source, box_level))


def _subdivide(S: _System, box: Box, max_depth: int, polish_leaves: bool) -> _Cover:
    cover = _Cover()
    stack = [(box, 0)]
    while stack:
        X, d = stack.pop()
        if S.excluded(X):
            cover.excluded += 1
            continue
        K = S.krawczyk(X)
        if K is not None:
            KX = K.intersect(X)
            if KX is None:
                cover.excluded += 1
                continue
            if X.interior_contains(K):
                x = S.newton(X.mid)
                if x is None or not K.contains_point(x):
                    x = np.array(K.mid)
                tiny = S.certify_tiny(x) or K
                _add_root(cover, tiny, x, X, True)
                continue
        if d >= max_depth:
            cover.unresolved.append(X)
            if polish_leaves:
                x = S.newton(X.mid)
                if x is not None:
                    slack = [iv.width for iv in X]
                    near = all(iv.lo - s <= v <= iv.hi + s for iv, v, s in zip(X, x, slack))
                    if near:
                        tiny = S.certify_tiny(x)
                        if tiny is not None:
                            _add_root(cover, tiny, x, X, False)
            continue
        a, c = X.bisect()
        stack.append((c, d + 1))
        stack.append((a, d + 1))
    return cover


def krawczyk_unique(sys: Sequence[SparsePoly], b: Sequence[Interval], max_depth: int = 30,
                    direct_iterations: int = 8) -> KrawczykResult:
    """Certify that ``sys`` has exactly one zero in ``b``.

    First the Krawczyk operator is iterated on the box itself (strict
    inclusion K(X) in int X proves a unique zero).  When the Jacobian is too
    far from constant over ``b`` the box is covered by subdivision instead:
    every piece must be excluded or Krawczyk-certified, and all certified
    pieces must refer to the same zero.
    """
    b = Box(b)
    S = _System(sys)
    if len(sys) > 3:
        raise ValueError("krawczyk_unique supports dimension <= 3")
    X = b
    for _ in range(direct_iterations):
        K = S.krawczyk(X)
        if K is None:
            break
        if X.interior_contains(K):
            x = S.newton(K.mid)
            if x is None or not K.contains_point(x):
                x = np.array(K.mid)
            tiny = S.certify_tiny(x) or K
            return KrawczykResult(True, tiny, tuple(float(v) for v in x), method="direct")
        KX = K.intersect(X)
        if KX is None:
            return KrawczykResult(False, reason="no zero in box (Krawczyk image disjoint)")
        if KX.max_width > 0.9 * X.max_width:
            break
        X = KX
    cover = _subdivide(S, b, max_depth, polish_leaves=False)
    if cover.unresolved:
        return KrawczykResult(False, reason=f"{len(cover.unresolved)} unresolved sub-boxes at depth {max_depth}")
    if len(cover.roots) != 1:
        return KrawczykResult(False, reason=f"{len(cover.roots)} certified zeros in box")
    rb, root, _, _ = cover.roots[0]
    return KrawczykResult(True, rb, root, method="subdivision")


@dataclass
class CensusReport:
    count: int
    boxes: list          # certified refined boxes
    roots: list
    sources: list        # subdivision boxes the certificates came from
    miranda: list        # Poincare-Miranda verdict on each source box
    unresolved: list
    depth: int

    def to_json(self):
        out = []
        for rb, src, pm in zip(self.boxes, self.sources, self.miranda):
            out.append({"status": "certified", "box": rb.to_json(), "source": src.to_json(),
                        "assignment": {"permutation": list(pm.permutation), "signs": list(pm.signs)}
                        if pm.certified else None})
        for u in self.unresolved:
            out.append({"status": "unresolved", "box": u.to_json(), "assignment": None})
        return {"count": self.count, "depth": self.depth, "boxes": out}


def census_positive(sys: Sequence[SparsePoly], quadrant_box: Sequence[Interval], depth: int = 14,
                    miranda_depth: int = 12) -> CensusReport:
    """Certified lower bound on the number of simple zeros in ``quadrant_box``.

    Sub-boxes are excluded by enclosure or Krawczyk emptiness, certified by
    Krawczyk inclusion, or kept as leaves.  Leaves whose Newton limit lies
    nearby get a tiny Krawczyk certificate; they stay listed as unresolved
    since other zeros could hide in them.
    """
    b = Box(quadrant_box)
    S = _System(sys)
    cover = _subdivide(S, b, depth, polish_leaves=True)
    roots = sorted(cover.roots, key=lambda r: r[1])
    boxes = [r[0] for r in roots]
    pm = [poincare_miranda(sys, r[2], miranda_depth) for r in roots]
    return CensusReport(len(roots), boxes, [r[1] for r in roots], [r[2] for r in roots], pm,
                        cover.unresolved, depth)
