import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from planarlab.errors import DomainError
from planarlab.stability import (charpoly, cimen_jacobian, counter_normals, jury, jury_batch,
                                 lasalle_check, mc_probability, my_verify, routh_hurwitz,
                                 routh_hurwitz_batch, spectral_radius)


def test_routh_hurwitz_examples():
    assert routh_hurwitz([1, 1]) and routh_hurwitz([1, 1, 1])
    assert routh_hurwitz([1, 3, 3, 1])          # (l+1)^3
    assert not routh_hurwitz([1, 0, 1])         # roots on the imaginary axis
    assert not routh_hurwitz([-1, 1])


def test_jury_examples():
    assert jury([0, 1])
    assert not jury([-1, 0, 1])                 # roots +-1 on the circle
    assert jury([0, -1, 2])
    assert not jury([3, 1])


def test_degree_argument_checked():
    with pytest.raises(DomainError):
        routh_hurwitz([1, 2, 3], n=3)
    with pytest.raises(DomainError):
        jury([1, 0])


coefs = st.lists(st.floats(-3, 3, allow_nan=False).filter(lambda v: abs(v) > 1e-3), min_size=2, max_size=9)


@given(coefs)
@settings(max_examples=200)
def test_criteria_match_roots(a):
    r = np.roots(a[::-1])
    assume(np.all(np.abs(r.real) > 1e-6) and np.all(np.abs(np.abs(r) - 1) > 1e-6))
    assert routh_hurwitz(a) == bool(np.all(r.real < 0))
    assert jury(a) == bool(np.all(np.abs(r) < 1))


@given(coefs)
def test_batch_matches_scalar(a):
    A = np.array([a])
    assert routh_hurwitz_batch(A)[0] == routh_hurwitz(a)
    assert jury_batch(A)[0] == jury(a)


@given(st.lists(st.integers(-6, 6), min_size=2, max_size=7).filter(lambda a: a[-1] != 0))
def test_exact_integer_input(a):
    r = np.roots(a[::-1])
    assume(np.all(np.abs(r.real) > 1e-6))
    assert routh_hurwitz(a) == bool(np.all(r.real < 0))


def test_counter_normals_reproducible_and_sliceable():
    full = counter_normals(3, 0, 100, 4)
    assert np.array_equal(full[40:60], counter_normals(3, 40, 20, 4))
    assert not np.array_equal(full, counter_normals(4, 0, 100, 4))
    assert abs(full.mean()) < 0.2 and abs(full.std() - 1) < 0.15


# exact stability probabilities of Gaussian polynomials for low degree
@pytest.mark.parametrize("n,kind,p", [(1, "diff", 0.5), (2, "diff", 0.25), (3, "diff", 1 / 16),
                                      (2, "ddiff", math.atan(math.sqrt(2)) / math.pi)])
def test_mc_probability_known_values(n, kind, p):
    b = mc_probability(n, kind, 200_000, seed=11)
    assert abs(b.estimate - p) < 5 * math.sqrt(p * (1 - p) / b.trials)


def test_mc_independent_of_workers_and_chunks():
    a = mc_probability(3, "diff", 100_000, 3)
    assert a == mc_probability(3, "diff", 100_000, 3, workers=4, chunk=4096)
    assert a == mc_probability(3, "diff", 100_000, 3, chunk=4096)
    for w in (2, 8):
        assert a == mc_probability(3, "diff", 100_000, 3, workers=w, chunk=8192)


def test_mc_rejects_bad_arguments():
    with pytest.raises(DomainError):
        mc_probability(2, "other", 10)
    with pytest.raises(DomainError):
        mc_probability(0, "diff", 10)


def test_markus_yamabe_counterexample():
    rep = my_verify(3)
    assert rep.ok and rep.exact_charpoly_ok
    assert rep.residual_t1 < 1e-7 and rep.growth_rate >= 1.9
    assert my_verify(4, samples=10).ok


@given(st.lists(st.fractions(-5, 5, max_denominator=50), min_size=3, max_size=3))
def test_cimen_jacobian_unipotent_spectrum(p):
    assert charpoly(cimen_jacobian(3, p)) == [1, 3, 3, 1]


def test_charpoly_small():
    M = [[Fraction(1), Fraction(2)], [Fraction(3), Fraction(4)]]
    assert charpoly(M) == [-2, -5, 1]


def test_spectral_radius_matches_eigvals():
    rng = np.random.default_rng(0)
    for _ in range(20):
        M = np.abs(rng.standard_normal((4, 4)))
        rho, _ = spectral_radius(M)
        assert abs(rho - np.max(np.abs(np.linalg.eigvals(M)))) < 1e-9


def test_lasalle_examples():
    assert lasalle_check(lambda v: v / 2, "C1", [(-1, 1)], 20).satisfied_on_samples
    c, s = 0.9 * math.cos(math.pi / 4), 0.9 * math.sin(math.pi / 4)
    R = np.array([[c, -s], [s, c]])
    r1 = lasalle_check(lambda v: R @ v, "C1", [(-1, 1)] * 2, 5)
    r2 = lasalle_check(lambda v: R @ v, "C2", [(-1, 1)] * 2, 5)
    assert r1.satisfied_on_samples and abs(r1.max_rho - 0.9) < 1e-8
    assert not r2.satisfied_on_samples and abs(r2.max_rho - 0.9 * math.sqrt(2)) < 1e-8
    with pytest.raises(DomainError):
        lasalle_check(lambda v: v, "C3", [(-1, 1)])


def _mobius(p):
    """(1 - l)^n p((1 + l)/(1 - l)) as ascending coefficients."""
    n = len(p) - 1
    out = [Fraction(0)] * (n + 1)
    for k, a in enumerate(p):
        # (1 + l)^k (1 - l)^(n - k)
        term = [Fraction(1)]
        for f in [(1, 1)] * k + [(1, -1)] * (n - k):
            term = [(term[i] if i < len(term) else 0) * f[0] + (term[i - 1] if i else 0) * f[1]
                    for i in range(len(term) + 1)]
        for i, c in enumerate(term):
            out[i] += a * c
    return out


@given(st.lists(st.integers(-6, 6), min_size=2, max_size=6))
def test_jury_is_routh_hurwitz_after_mobius_map(a):
    assume(a[-1] != 0)
    q = _mobius(a)
    # leading coefficient of q is (-1)^n p(-1); a root at -1 is unstable for both
    assume(q[-1] != 0)
    assert jury(a) == routh_hurwitz(q)


def test_mc_stderr_halves_with_four_times_the_trials():
    a = mc_probability(2, "diff", 50_000, seed=5)
    b = mc_probability(2, "diff", 200_000, seed=5)
    assert abs(a.stderr / b.stderr - 2) < 0.4


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_mc_differential_probability_below_two_to_minus_n(n):
    b = mc_probability(n, "diff", 100_000, seed=n)
    assert b.estimate - 3 * b.stderr < 0.5 ** n
