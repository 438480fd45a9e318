import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from planarlab.algebra import RationalFn, SparsePoly, random_poly
from planarlab.builtins import KOU_INTERVALS, KOU_ROOTS, kou_system
from planarlab.interval import (Box, Interval, Sign, census_positive, certify_sign, eval_box,
                                krawczyk_unique, poincare_miranda)

x, y = SparsePoly.variables(2)
KOU = kou_system()
I = KOU_INTERVALS


def B(*sides):
    return Box.from_exact([(Fraction(a), Fraction(b)) for a, b in sides])


def test_eval_box_examples():
    r = eval_box(x + y, B((1, 2), (3, 4)))
    assert r.lo <= 4 and r.hi >= 6 and r.lo > 4 - 1e-12 and r.hi < 6 + 1e-12
    r = eval_box(x * x + y * y, B((0, 1), (0, 1)))
    assert r.lo <= 0 and r.hi >= 2 and r.hi < 2 + 1e-12


def test_dependency_effect():
    # natural extension treats both occurrences of x independently
    r = eval_box(lambda X: X - X, B((0, 1)))
    assert r.lo <= -1 and r.hi >= 1


def test_certify_sign_examples():
    p = x ** 4 * 10 - x * x * 10 + 3
    assert certify_sign(SparsePoly.parse("10*x^4 - 10*x^2 + 3", ("x",)), B((-5, 5)), 14) is Sign.POSITIVE
    assert certify_sign(p, B((-5, 5), (-1, 1)), 14) is Sign.POSITIVE
    assert certify_sign(SparsePoly.var(0, 1), B((-1, 1))) is Sign.UNKNOWN
    assert certify_sign(SparsePoly.parse("1 + x^2", ("x",)), B((-10, 10))) is Sign.POSITIVE


def test_certify_sign_rational():
    r = RationalFn(SparsePoly.const(-4), (1 + x * x) ** 2)
    assert certify_sign(r, B((-5, 5), (-5, 5))) is Sign.NEGATIVE


def test_poincare_miranda_examples():
    assert poincare_miranda([x, y], B((-1, 1), (-1, 1))).certified
    assert poincare_miranda(KOU, B(I[0], I[4])).certified
    assert poincare_miranda(KOU, B(I[1], I[3])).certified
    assert not poincare_miranda([x * x + 1, y], B((-1, 1), (-1, 1))).certified


def test_krawczyk_examples():
    r = krawczyk_unique([SparsePoly.parse("x - 1/2", ("x",))], B((0, 1)))
    assert r.unique and abs(r.root[0] - 0.5) < 1e-12 and r.box.max_width <= 1e-9
    r = krawczyk_unique(KOU, B(I[2], I[2]))
    assert r.unique
    assert abs(r.root[0] - KOU_ROOTS[2]) < 1e-8 and abs(r.root[1] - KOU_ROOTS[2]) < 1e-8
    assert not krawczyk_unique([x * x, y], B((-1, 1), (-1, 1))).unique


@pytest.mark.parametrize("i", range(5))
def test_paper_boxes_hold_unique_roots(i):
    r = krawczyk_unique(KOU, B(I[i], I[4 - i]))
    assert r.unique
    assert abs(r.root[0] - KOU_ROOTS[i]) < 1e-8 and abs(r.root[1] - KOU_ROOTS[4 - i]) < 1e-8


def test_census_examples():
    rep = census_positive(KOU, B((Fraction(1, 100), 2), (Fraction(1, 100), 2)), depth=14)
    assert rep.count == 5
    got = sorted(tuple(r) for r in rep.roots)
    for (a, b), i in zip(got, range(5)):
        assert abs(a - KOU_ROOTS[i]) < 1e-6 and abs(b - KOU_ROOTS[4 - i]) < 1e-6
    assert census_positive([x - 1, y - 1], B((0, 2), (0, 2))).count == 1
    assert census_positive([x * x + y * y + 1, x], B((0, 1), (0, 1))).count == 0


def test_census_report_json():
    data = census_positive([x - 1, y - 1], B((0, 2), (0, 2))).to_json()
    assert data["count"] == 1
    assert {b["status"] for b in data["boxes"]} <= {"certified", "unresolved"}
    assert all(isinstance(v, str) for side in data["boxes"][0]["box"] for v in side)


def test_census_monotone_in_depth():
    counts = [census_positive(KOU, B((Fraction(1, 100), 2), (Fraction(1, 100), 2)), depth=d).count
              for d in (6, 9, 12, 14)]
    assert counts == sorted(counts)


def test_miranda_boxes_refine_by_newton():
    for i in (0, 1):
        bx = B(I[i], I[4 - i])
        assert poincare_miranda(KOU, bx).certified
        F = [p.compile() for p in KOU]
        J = [[p.diff(j).compile() for j in range(2)] for p in KOU]
        z = np.array(bx.mid, dtype=float)
        for _ in range(30):
            z = z - np.linalg.solve([[g(*z) for g in row] for row in J], [f(*z) for f in F])
        assert bx.contains_point(tuple(z))
        assert max(abs(f(*z)) for f in F) < 1e-10


def test_polynomial_containment_ten_thousand():
    rng = random.Random(5)
    polys = [random_poly(rng, 2, 5) for _ in range(50)]
    bad = 0
    for k in range(10_000):
        p = polys[k % 50]
        lo = [Fraction(rng.randint(-300, 300), 100) for _ in range(2)]
        w = [Fraction(rng.randint(0, 200), 100) for _ in range(2)]
        box = Box.from_exact([(a, a + d) for a, d in zip(lo, w)])
        pt = [a + d * Fraction(rng.randint(0, 100), 100) for a, d in zip(lo, w)]
        r = eval_box(p, box)
        v = p.evaluate(pt)
        if not Fraction(r.lo) <= v <= Fraction(r.hi):
            bad += 1
    assert bad == 0


@given(st.fractions(), st.fractions())
def test_directed_rounding_sum(a, b):
    s = Interval.point(a) + Interval.point(b)
    assert Fraction(s.lo) <= a + b <= Fraction(s.hi)


@given(st.fractions(), st.fractions(), st.integers(2, 9))
def test_directed_rounding_product_and_power(a, b, k):
    p = Interval.point(a) * Interval.point(b)
    assert Fraction(p.lo) <= a * b <= Fraction(p.hi)
    q = Interval.point(a) ** k
    assert Fraction(q.lo) <= a ** k <= Fraction(q.hi)


@given(st.fractions(), st.fractions().filter(lambda v: v != 0))
def test_directed_rounding_quotient(a, b):
    d = Interval.point(a) / Interval.point(b)
    assert Fraction(d.lo) <= a / b <= Fraction(d.hi)


def test_empty_interval_rejected():
    with pytest.raises(ValueError):
        Interval(1.0, 0.0)
