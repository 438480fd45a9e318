import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import dblquad, quad

from conftest import polys
from planarlab.algebra import (GaussQ, RationalFn, SparsePoly, casas_alvero, chebyshev_t,
                               descartes_bound, loewner_field, moments, poly_from_roots, vf_calculus)
from planarlab.errors import DomainError, ResourceError

x, y = SparsePoly.variables(2)
u = SparsePoly.var(0, 1, ("x",))


def upoly(text):
    return SparsePoly.parse(text, ("x",))


class TestDescartes:
    def test_examples(self):
        assert descartes_bound(upoly("x^2 - 1")) == 1
        assert descartes_bound(upoly("x^2 + 1")) == 0
        assert descartes_bound(upoly("x^6 + 61/43*x^3 - x")) == 1

    def test_zero_polynomial_rejected(self):
        with pytest.raises(DomainError):
            descartes_bound(SparsePoly.const(0, 1, ("x",)))

    @given(st.lists(st.integers(1, 20), min_size=1, max_size=6, unique=True))
    def test_bounds_positive_roots(self, roots):
        p = poly_from_roots([Fraction(r) for r in roots])
        assert descartes_bound(p) >= len(roots)
        assert (descartes_bound(p) - len(roots)) % 2 == 0


class TestMoments:
    def test_examples(self):
        assert moments(SparsePoly.const(0, 1, ("x",)), 3) == [0, 0, 0]
        assert moments(u, 3) == [Fraction(1, 2), Fraction(1, 3), Fraction(1, 4)]
        assert moments(2 * u - 1, 3) == [0, Fraction(1, 3), 0]

    def test_antiderivative_oracle(self):
        # (2x-1)^(m+1) / (2(m+1)) evaluated on [0, 1]
        want = [Fraction(1 - (-1) ** (m + 1), 2 * (m + 1)) for m in range(1, 9)]
        assert moments(2 * u - 1, 8) == want

    def test_cap(self):
        with pytest.raises(ResourceError, match="degree"):
            moments(u ** 50, 10)

    @given(polys(nvars=2, degree=4))
    def test_matches_quadrature(self, f):
        fn = f.compile()
        ms = moments(f, 2)
        for m, M in enumerate(ms, start=1):
            val, _ = dblquad(lambda yy, xx: fn(xx, yy) ** m, 0, 1, 0, 1, epsabs=1e-13, epsrel=1e-13)
            assert abs(float(M) - val) < 1e-10 * max(1.0, abs(val))


class TestCasasAlvero:
    def test_examples(self):
        assert casas_alvero((u - 2) ** 5).shares
        assert casas_alvero(u ** 2 * (u ** 2 + 1), 5).shares
        v = casas_alvero(u ** 2 * (u - 1))
        assert not v.shares and v.fails_at == 2

    def test_modulus_must_be_prime(self):
        with pytest.raises(DomainError):
            casas_alvero(u ** 3, 6)

    @given(st.fractions(max_denominator=50).filter(lambda q: abs(q) < 100), st.integers(2, 10))
    def test_prime_powers_share(self, a, n):
        assert casas_alvero((u - a) ** n).shares


class TestChebyshevAndLoewner:
    def test_small_cases(self):
        assert chebyshev_t(0) == SparsePoly.const(1, 1, ("x",))
        assert chebyshev_t(2) == 2 * u * u - 1
        assert chebyshev_t(3) == 4 * u ** 3 - 3 * u

    @pytest.mark.parametrize("n", range(1, 21))
    def test_cosine_identity(self, n):
        T = chebyshev_t(n)
        for th in np.linspace(0, math.pi, 100):
            # exact evaluation: monomial-form float Horner loses ~n^2 2^n ulps
            val = T.evaluate([Fraction(math.cos(th))])
            assert abs(float(val) - math.cos(n * th)) < 1e-12

    def test_loewner_examples(self):
        lf = loewner_field(x * x + y * y, 1)
        assert lf.components == (2 * x, 2 * y)
        lf = loewner_field((x * x + y * y) ** 2, 2)
        assert lf.components == (8 * x * x - 8 * y * y, 16 * x * y) and not lf.degenerate
        lf = loewner_field(x * x - y * y, 2)
        assert lf.components == (SparsePoly.const(4), SparsePoly.const(0)) and lf.degenerate

    @given(polys(nvars=2, degree=5))
    def test_loewner_first_order_is_gradient(self, f):
        f = f - f.constant_term()
        if f.is_zero():
            return
        P, Q = loewner_field(f, 1).components
        assert P == f.diff(0) and Q == f.diff(1)

    @given(polys(nvars=2, degree=5))
    def test_loewner_second_order_second_partials(self, f):
        f = f - f.constant_term()
        if f.is_zero():
            return
        P, Q = loewner_field(f, 2).components
        assert P == f.diff(0, 2) - f.diff(1, 2)
        assert Q == 2 * f.diff(0).diff(1)


class TestArithmetic:
    @given(polys(degree=6), polys(degree=6), polys(degree=6))
    def test_distributive(self, p, q, r):
        assert (p + q) * r == p * r + q * r

    @given(polys(degree=12, density=0.15), polys(degree=12, density=0.15), polys(degree=12, density=0.15))
    @settings(max_examples=10)
    def test_ring_laws_degree_twelve(self, p, q, r):
        assert (p + q) * r == p * r + q * r
        assert p * (q * r) == (p * q) * r
        assert p * q == q * p

    @given(polys(degree=5), polys(degree=5))
    def test_leibniz(self, p, q):
        for i in (0, 1):
            assert (p * q).diff(i) == p.diff(i) * q + p * q.diff(i)

    @given(polys(degree=4))
    def test_json_round_trip(self, p):
        assert SparsePoly.from_json(p.to_json()) == p

    def test_canonical_serialization(self):
        p = SparsePoly.parse("y^2 + x - 3/4 + x*y")
        # graded lex, highest degree first
        assert p.to_json() == {"vars": ["x", "y"], "terms": [
            {"e": [1, 1], "c": "1"}, {"e": [0, 2], "c": "1"}, {"e": [1, 0], "c": "1"}, {"e": [0, 0], "c": "-3/4"}]}
        assert SparsePoly.parse("x*y - 3/4 + x + y^2").to_json() == p.to_json()

    def test_gaussian_coefficients(self):
        z = x + y * GaussQ(0, 1)
        w = z * z
        assert w.real_part() == x * x - y * y and w.imag_part() == 2 * x * y
        assert not w.is_real()

    def test_rational_has_no_auto_cancel(self):
        r = RationalFn(x * x - 1, x - 1)
        assert r.den == x - 1
        assert r.normalize().den.degree() == 0


class TestVfCalculus:
    def test_examples(self):
        assert vf_calculus(-y, x).divergence == RationalFn(SparsePoly.const(0))
        assert vf_calculus(x * x, y ** 3).divergence == RationalFn(2 * x + 3 * y * y)
        d = vf_calculus(RationalFn(x, 1 + x * x), SparsePoly.const(0)).divergence
        # quotient-rule oracle: (1 - x^2) / (1 + x^2)^2
        assert d == RationalFn(1 - x * x, (1 + x * x) ** 2)
