"""Bendixson-Dulac certificates: exact M_s and interval sign proofs."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import RationalFn, SparsePoly, sturm_count
from .errors import DomainError
from .interval import Box, Interval, Sign, certify_sign, eval_box

log = logging.getLogger(__name__)


@dataclass
class DulacInstance:
    """V, field (P, Q) and exponent s; x and y are variables 0 and 1.

    ``factor``/``cofactor`` split M_s = factor * cofactor when M_s is only
    semidefinite: factor must be a monomial with even exponents and positive
    coefficient, cofactor must be strictly signed.
    """
    V: object
    P: object
    Q: object
    s: Fraction
    factor: SparsePoly | None = None
    cofactor: object = None

    def __post_init__(self):
        self.s = Fraction(self.s)


def m_s(inst: DulacInstance) -> RationalFn:
    """V_x P + V_y Q + s (P_x + Q_y) V, assembled over a common denominator."""
    if not isinstance(inst.V, (SparsePoly, RationalFn)):
        raise DomainError("only polynomial or rational V is representable")
    V = RationalFn.lift(inst.V)
    P, Q = RationalFn.lift(inst.P), RationalFn.lift(inst.Q)
    div = P.diff(0) + Q.diff(1)
    M = V.diff(0) * P + V.diff(1) * Q + div * V * inst.s
    return M.normalize()


def lienard(F, names=("x", "y")):
    """(P, Q) = (y - F(x), -x); F is a SparsePoly/RationalFn in (x, y, ...)."""
    nv = F.nvars
    x, y = SparsePoly.var(0, nv, F.names), SparsePoly.var(1, nv, F.names)
    if isinstance(F, RationalFn):
        return RationalFn(y * F.den - F.num, F.den), -x
    return y - F, -x


def discriminant_y(V):
    """(dis_y(V), leading coefficient) for V = A y^2 + B y + C, else None.

    Rational V is accepted when its denominator does not involve y.
    """
    V = RationalFn.lift(V)
    N, D = V.num, V.den
    if N.degree_in(1) != 2 or D.degree_in(1) != 0:
        return None
    parts = {0: {}, 1: {}, 2: {}}
    for e, c in N.terms.items():
        parts[e[1]][e[:1] + (0,) + e[2:]] = c
    C, B, A = (SparsePoly(parts[k], N.nvars, N.names) for k in range(3))
    return RationalFn(B * B - A * C * 4, D * D).normalize(), RationalFn(A, D).normalize()


def _is_even_monomial(f: SparsePoly) -> bool:
    if len(f.terms) != 1:
        return False
    (e, c), = f.terms.items()
    return all(k % 2 == 0 for k in e) and c > 0


@dataclass
class LeadingCheck:
    ok: bool
    sign: int = 0
    radius: float | None = None
    note: str = ""


def _restrict(p: SparsePoly, used):
    """Drop unused variables (keeps the order of the used ones)."""
    return SparsePoly({tuple(e[i] for i in used): c for e, c in p.terms.items()}, len(used),
                      tuple(p.names[i] for i in used))


def leading_form_check(p: SparsePoly, face_depth: int = 10) -> LeadingCheck:
    """Sign of p far from the origin from its top-degree homogeneous part.

    The leading form L must be definite (exact Sturm test on L(1, t) in two
    variables); m = min |L| on the sup-norm unit sphere is bounded below by
    interval subdivision of the faces, and p has the sign of L wherever
    |x|_inf > R = max(1, sum |lower coefficients| / m).
    """
    used = p.used_vars()
    if not used:
        c = p.constant_term()
        return LeadingCheck(bool(c), (c > 0) - (c < 0), 0.0, "constant")
    if len(used) > 2:
        return LeadingCheck(False, note="more than two variables")
    q = _restrict(p, used)
    d = q.degree()
    L = q.homogeneous_part(d)
    if d % 2:
        return LeadingCheck(False, note="odd leading degree changes sign at infinity")
    if len(used) == 1:
        lc = L.terms[(d,)]
        sign = 1 if lc > 0 else -1
        m = abs(lc)
    else:
        # L(x, y) = x^d L(1, y/x): definite iff L(1, t) has no real roots and L(0, 1) != 0
        uni = [Fraction(0)] * (d + 1)
        for (i, j), c in L.terms.items():
            uni[j] += c
        if uni[d] == 0 or sturm_count(uni) > 0:
            return LeadingCheck(False, note="leading form is not definite")
        sign = 1 if uni[0] > 0 else -1
        m = float("inf")
        for i in range(2):
            for side in (-1.0, 1.0):
                stack = [(-1.0, 1.0, 0)]
                while stack:
                    a, b, k = stack.pop()
                    bx = [Interval(side, side), Interval(a, b)] if i == 0 else [Interval(a, b), Interval(side, side)]
                    enc = eval_box(L, Box(bx))
                    lo = enc.lo if sign > 0 else -enc.hi
                    if lo > 0 or k >= face_depth:
                        m = min(m, max(lo, 0.0))
                        continue
                    mid = 0.5 * (a + b)
                    stack += [(a, mid, k + 1), (mid, b, k + 1)]
        if m <= 0:
            return LeadingCheck(False, sign, note="could not bound the leading form away from 0")
    lower = sum(abs(float(c)) for e, c in q.terms.items() if sum(e) < d)
    R = max(1.0, lower / m)
    return LeadingCheck(True, sign, R * (1 + 1e-12), f"leading degree {d}")


def _global_sign(f, box, depth, evidence, label):
    """Strict sign of f on the whole plane: box certificate plus leading-form tail."""
    if isinstance(f, RationalFn):
        sd = _global_sign(f.den, box, depth, evidence, label + ".den")
        if sd is Sign.UNKNOWN:
            return Sign.UNKNOWN
        sn = _global_sign(f.num, box, depth, evidence, label + ".num")
        if sn is Sign.UNKNOWN:
            return Sign.UNKNOWN
        return sn if sd is Sign.POSITIVE else -sn
    lead = leading_form_check(f)
    used = f.used_vars()
    box = list(box)
    if lead.ok:
        R = lead.radius
        for i in used:
            if box[i].lo > -R or box[i].hi < R:
                if R > 1e6:
                    evidence.append(f"{label}: tail radius {R:.3g} too large")
                    return Sign.UNKNOWN
                box[i] = box[i].hull(Interval(-R, R))
    # bisect only the variables f actually depends on
    if used:
        s = certify_sign(_restrict(f, used), Box([box[i] for i in used]), depth)
    else:
        c = f.constant_term()
        s = Sign.POSITIVE if c > 0 else Sign.NEGATIVE if c < 0 else Sign.UNKNOWN
    evidence.append({"part": label, "box_sign": s.value,
                     "box": Box(box).to_json(),
                     "leading_form": {"ok": lead.ok, "sign": lead.sign, "radius": lead.radius,
                                      "note": lead.note}})
    if s is Sign.UNKNOWN:
        return s
    if not used:
        return s
    if not lead.ok:
        evidence.append(f"{label}: no global sign outside the box ({lead.note})")
        return Sign.UNKNOWN
    want = Sign.POSITIVE if lead.sign > 0 else Sign.NEGATIVE
    return s if s is want else Sign.UNKNOWN


@dataclass
class DulacVerdict:
    verdict: str                  # AtMostOneCycle | NoCycles | Unknown
    M: RationalFn | None = None
    sign: str = "Unknown"
    evidence: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    discriminant: object = None

    def to_json(self):
        return {"verdict": self.verdict, "M_s": None if self.M is None else self.M.to_json(),
                "cofactor_sign": self.sign, "evidence": self.evidence, "warnings": self.warnings,
                "discriminant_y": None if self.discriminant is None else RationalFn.lift(self.discriminant).to_json()}


def certify_dulac(inst: DulacInstance, box, depth: int = 14) -> DulacVerdict:
    """Apply the Bendixson-Dulac case split after certifying that M_s keeps its sign."""
    if not isinstance(inst.V, (SparsePoly, RationalFn)):
        return DulacVerdict("Unknown", evidence=["V is outside the representable (polynomial/rational) class"])
    M = m_s(inst)
    b = Box(box)
    if M.nvars != b.dim:
        raise DomainError(f"box has dimension {b.dim}, M_s has {M.nvars} variables")
    evidence = []
    if inst.factor is not None:
        if not _is_even_monomial(inst.factor):
            return DulacVerdict("Unknown", M, evidence=["factor hint must be an even monomial with positive coefficient"])
        cof = RationalFn.lift(inst.cofactor)
        if not (RationalFn.lift(inst.factor) * cof == M):
            return DulacVerdict("Unknown", M, evidence=["factor * cofactor does not equal M_s"])
        evidence.append("M_s = factor * cofactor verified exactly")
        target = cof
    else:
        target = M
    sign = _global_sign(target, b, depth, evidence, "cofactor" if inst.factor is not None else "M_s")
    if sign is Sign.UNKNOWN:
        note = "sign not certified"
        if inst.factor is None:
            note += " (if M_s is semidefinite, supply an even-monomial factor hint)"
        evidence.append(note)
        return DulacVerdict("Unknown", M, sign.value, evidence)
    warn = []
    dis = discriminant_y(inst.V)
    if dis is not None and dis[1].is_polynomial() and dis[1].num.degree() == 0:
        disc = dis[0]
        evidence.append("V is quadratic in y with constant leading coefficient: "
                        "at most one complementary component has a hole")
    else:
        disc = None
        warn.append("topological hypothesis on {V = 0} not checked (V not quadratic in y with constant leading coefficient)")
    warn.append("caller must ensure {V = 0} contains no periodic orbit")
    for w in warn:
        log.debug(w)
    verdict = "AtMostOneCycle" if inst.s < 0 else "NoCycles"
    return DulacVerdict(verdict, M, sign.value, evidence, warn, disc)


def lienard_discriminant(F) -> RationalFn:
    """dis_y of V = y^2 - F(x) y + x^2, i.e. F^2 - 4 x^2, as a normalized rational function."""
    Fr = RationalFn.lift(F)
    x = SparsePoly.var(0, Fr.nvars, Fr.names)
    return (Fr * Fr - RationalFn.lift(x * x * 4)).normalize()
