import random
from fractions import Fraction

from hypothesis import given, strategies as st

from planarlab.algebra import RationalFn, SparsePoly, random_poly
from planarlab.dulac import (DulacInstance, certify_dulac, discriminant_y, lienard,
                             lienard_discriminant, m_s)

F_ = Fraction


def test_m_s_polynomial_family():
    x, y, c = SparsePoly.variables(3, ("x", "y", "c"))
    F = c * x ** 3 + x ** 5
    P, Q = lienard(F)
    V = y * y - F * y + x * x + c * F_(2, 5)
    want = RationalFn(x * x * (x ** 4 * 10 + c * x * x * 10 + c * c * 3) * F_(2, 5))
    assert m_s(DulacInstance(V, P, Q, -1)) == want


def test_m_s_rational_family():
    x, y, c = SparsePoly.variables(3, ("x", "y", "c"))
    F = RationalFn(x * (1 - c * x * x), 1 + c * x * x)
    P, Q = lienard(F)
    V = RationalFn.lift(y * y + x * x) - F * RationalFn.lift(y)
    assert m_s(DulacInstance(V, P, Q, -1)) == RationalFn(-c * x ** 4 * 4, (1 + c * x * x) ** 2)
    dis = discriminant_y(V)[0]
    assert dis == RationalFn(-x * x * (c * x * x + 3) * (c * x * x * 3 + 1), (c * x * x + 1) ** 2)


def test_m_s_constant_V_is_divergence():
    x, y = SparsePoly.variables(2)
    M = m_s(DulacInstance(SparsePoly.const(F_(1, 3), 2), x * x * y, y ** 3, 1))
    assert M == RationalFn(x * y * F_(2, 3) + y * y)


def test_certify_with_factor_hint():
    x, y = SparsePoly.variables(2)
    F = -x ** 3 + x ** 5
    P, Q = lienard(F)
    V = y * y - F * y + x * x - F_(2, 5)
    cof = (x ** 4 * 10 - x * x * 10 + 3) * F_(2, 5)
    v = certify_dulac(DulacInstance(V, P, Q, -1, x * x, cof), [(-5, 5), (-5, 5)])
    assert v.verdict == "AtMostOneCycle" and v.sign == "StrictlyPositive"
    assert any("no periodic orbit" in w for w in v.warnings)


def test_certify_rational_case_and_missing_hint():
    x, y = SparsePoly.variables(2)
    F = RationalFn(x * (1 - x * x), 1 + x * x)
    P, Q = lienard(F)
    V = RationalFn.lift(y * y + x * x) - F * RationalFn.lift(y)
    v = certify_dulac(DulacInstance(V, P, Q, -1, x ** 4, RationalFn(SparsePoly.const(-4, 2), (1 + x * x) ** 2)),
                      [(-5, 5), (-5, 5)])
    assert v.verdict == "AtMostOneCycle" and v.sign == "StrictlyNegative"
    assert v.discriminant == RationalFn(-x * x * 3 - x ** 4 * 10 - x ** 6 * 3, (x * x + 1) ** 2)
    assert certify_dulac(DulacInstance(V, P, Q, -1), [(-5, 5), (-5, 5)]).verdict == "Unknown"


def test_bad_factor_hint_rejected():
    x, y = SparsePoly.variables(2)
    P, Q = lienard(-x ** 3 + x)
    V = y * y + x * x
    v = certify_dulac(DulacInstance(V, P, Q, -1, x ** 3, SparsePoly.const(1, 2)), [(-1, 1), (-1, 1)])
    assert v.verdict == "Unknown"
    v = certify_dulac(DulacInstance(V, P, Q, -1, x * x, SparsePoly.const(1, 2)), [(-1, 1), (-1, 1)])
    assert v.verdict == "Unknown" and "does not equal" in v.evidence[0]


def test_non_algebraic_V_unknown():
    x, y = SparsePoly.variables(2)
    P, Q = lienard(x)
    assert certify_dulac(DulacInstance("exp(-2*b*y)", P, Q, 1), [(-1, 1), (-1, 1)]).verdict == "Unknown"


def test_positive_s_gives_no_cycles():
    # divergence 2 everywhere: Bendixson with V = 1
    x, y = SparsePoly.variables(2)
    v = certify_dulac(DulacInstance(SparsePoly.const(1, 2), x - y, x + y, 1), [(-3, 3), (-3, 3)])
    assert v.verdict == "NoCycles" and v.sign == "StrictlyPositive"


def test_lienard_discriminant():
    x, y = SparsePoly.variables(2)
    F = x ** 3 - x
    assert lienard_discriminant(F) == RationalFn(F * F - x * x * 4)


@given(st.integers(0, 10 ** 6), st.integers(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_m_s_matches_finite_differences(seed, s, px, py):
    rng = random.Random(seed)
    V, P, Q = (random_poly(rng, 2, 3) for _ in range(3))
    M = m_s(DulacInstance(V, P, Q, s))
    Vf, Pf, Qf = (p.compile() for p in (V, P, Q))
    h = 1e-5

    def d(f, i):
        e = (h, 0) if i == 0 else (0, h)
        return (f(px + e[0], py + e[1]) - f(px - e[0], py - e[1])) / (2 * h)

    want = d(Vf, 0) * Pf(px, py) + d(Vf, 1) * Qf(px, py) + s * (d(Pf, 0) + d(Qf, 1)) * Vf(px, py)
    got = M(px, py)
    assert abs(got - want) < 1e-5 * (1 + abs(want))


@given(st.integers(0, 10 ** 6), st.integers(-3, 3), st.integers(-3, 3), st.floats(-2, 2), st.floats(-2, 2))
def test_m_s_is_linear_in_field_and_in_V(seed, a, b, px, py):
    rng = random.Random(seed)
    V1, V2, P1, Q1, P2, Q2 = (random_poly(rng, 2, 2) for _ in range(6))
    s = F_(rng.randint(-3, 3), 2)

    def M(V, P, Q):
        return m_s(DulacInstance(V, P, Q, s))

    # exact identities first, then a pointwise check of the same identity
    assert M(V1, P1 * a + P2 * b, Q1 * a + Q2 * b) == M(V1, P1, Q1) * a + M(V1, P2, Q2) * b
    assert M(V1 * a + V2 * b, P1, Q1) == M(V1, P1, Q1) * a + M(V2, P1, Q1) * b
    lhs = M(V1 * a + V2 * b, P1, Q1)(px, py)
    rhs = a * M(V1, P1, Q1)(px, py) + b * M(V2, P1, Q1)(px, py)
    assert abs(lhs - rhs) < 1e-9 * (1 + abs(lhs))


def test_at_most_one_cycle_agrees_with_numerical_scan():
    from planarlab.cycles import Section, find_cycles
    from planarlab.flow import VectorField2

    x, y = SparsePoly.variables(2)
    for c in (F_(-1), F_(-1, 2), F_(-2), F_(1, 2), F_(1)):
        F = x ** 3 * c + x ** 5
        P, Q = lienard(F)
        V = y * y - F * y + x * x + c * F_(2, 5)
        cof = (x ** 4 * 10 + x * x * c * 10 + c * c * 3) * F_(2, 5)
        v = certify_dulac(DulacInstance(V, P, Q, -1, x * x, cof), [(-4, 4), (-4, 4)])
        assert v.verdict == "AtMostOneCycle", c
        scan = find_cycles(VectorField2(P, Q), Section(d=(0, 1)), [0.2 * k for k in range(1, 21)],
                           tol=1e-10)
        assert len(scan.cycles) < 2, (c, [cy.r for cy in scan.cycles])
        if c < 0:
            # weak unstable focus inside a strongly damped annulus: exactly one
            assert len(scan.cycles) == 1
