import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import dblquad
from scipy.special import beta as B

from planarlab.algebra import SparsePoly
from planarlab.cycles import (LoudParams, MelnikovSpec, Section, critical_periods, equivariant_field,
                              equivariant_to_loud, equivariant_transit_time, find_cycles, i_rs,
                              i_rs_any, melnikov_direct, melnikov_poly, melnikov_spec_for,
                              period_scan, pi_prime_fd, pi_prime_formula, return_map)
from planarlab.errors import DomainError
from planarlab.flow import VectorField2

x, y = SparsePoly.variables(2)
one = SparsePoly.const(1)
SEC = Section()
ROT = VectorField2(-y, x)
LIMIT = VectorField2(-y + x * (one - x * x - y * y), x + y * (one - x * x - y * y))

# beta-function values of the moment integrals for k=2, l=1 (r, s in {0, 1})
I21_FROZEN = {(0, 0): 6.9921534781123205, (0, 1): 3.834048751153894,
              (1, 0): 3.99551627320704, (1, 1): 1.7040216671795083}


def beta_oracle(k, l, r, s):
    return (4 / (2 * s + 1) * (2 * k) ** ((2 * s + 1) / (2 * k)) * (2 * l) ** ((2 * r + 1) / (2 * l))
            / (2 * l) * B((2 * r + 1) / (2 * l), (2 * s + 1) / (2 * k) + 1))


def test_rotation_return_map():
    rs = return_map(ROT, SEC, 1.0)
    assert abs(rs.Pi - 1) < 1e-9 and abs(rs.T - 2 * math.pi) < 1e-9


def test_linear_focus_return_map():
    a = SparsePoly.const(0.1)
    rs = return_map(VectorField2(-y + x * a, x + y * a), SEC, 0.7)
    assert abs(rs.Pi - 0.7 * math.exp(0.2 * math.pi)) < 1e-9


def test_limit_cycle_closed_form():
    u0, T = 0.25, 2 * math.pi
    u = u0 * math.exp(2 * T) / (1 - u0 + u0 * math.exp(2 * T))
    assert abs(return_map(LIMIT, SEC, 0.5).Pi - math.sqrt(u)) < 1e-9


def test_find_limit_cycle():
    sc = find_cycles(LIMIT, SEC, [0.3, 0.6, 0.9, 1.2, 1.5])
    assert len(sc.cycles) == 1
    c = sc.cycles[0]
    assert abs(c.r_star - 1) < 1e-9
    assert abs(c.pi_prime - math.exp(-4 * math.pi)) < 1e-9
    assert c.classification == "hyperbolic-stable"


def test_multiplier_two_ways():
    want = math.exp(-4 * math.pi)
    assert abs(pi_prime_formula(LIMIT, (1.0, 0.0), SEC) - want) < 1e-10
    assert abs(pi_prime_fd(LIMIT, SEC, 1.0) - want) < 1e-6


def test_center_flagged_as_continuum():
    assert find_cycles(ROT, SEC, [0.5, 1, 1.5]).continuum


def test_section_validation():
    with pytest.raises(DomainError):
        Section(d=(0, 0))


@pytest.mark.parametrize("rs", sorted(I21_FROZEN))
def test_moment_integral_frozen(rs):
    r, s = rs
    assert abs(i_rs(2, 1, r, s) - I21_FROZEN[rs]) < 1e-11


@pytest.mark.parametrize("k,l", [(3, 1), (3, 2), (4, 1), (5, 3)])
def test_moment_integral_beta_oracle(k, l):
    for r in range(2):
        for s in range(2):
            want = beta_oracle(k, l, r, s)
            assert abs(i_rs(k, l, r, s) - want) < 1e-10 * want


def test_moment_integral_area_by_dblquad():
    # area of x^2/2 + y^4/4 <= 1
    X = math.sqrt(2)
    area, _ = dblquad(lambda yy, xx: 1.0, -X, X, lambda xx: -(4 * (1 - xx * xx / 2)) ** 0.25,
                      lambda xx: (4 * (1 - xx * xx / 2)) ** 0.25, epsabs=1e-12, epsrel=1e-12)
    assert abs(i_rs(2, 1, 0, 0) - area) < 1e-8


def test_moment_integral_domain():
    with pytest.raises(DomainError):
        i_rs(1, 2, 0, 0)


@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 3), st.integers(0, 3))
@settings(max_examples=25)
def test_moment_integral_swap_symmetry(k, l, r, s):
    a, b = i_rs_any(k, l, r, s), i_rs_any(l, k, s, r)
    assert abs(a - b) < 1e-9 * max(1, a)


@pytest.mark.parametrize("spec", [MelnikovSpec(2, 1, (1, 0, 0), (0,)),
                                  MelnikovSpec(2, 1, (0.3, 0.7, -0.4), (0.9,)),
                                  MelnikovSpec(3, 2, (0.3, 0.7, -0.4, 1, 2), (0.9, 0.1, -1))])
def test_melnikov_formula_matches_line_integral(spec):
    mp = melnikov_poly(spec)
    for h in (0.5, 1.0, 2.0):
        d = melnikov_direct(spec, h)
        assert abs(mp(h) - d) < 1e-8 * max(1, abs(d))


def test_melnikov_spec_for_prescribed_roots():
    sp = melnikov_spec_for(2, 1, (4, -5, 1))
    mp = melnikov_poly(sp)
    assert np.allclose(mp.c, (4, -5, 1), atol=1e-12)
    assert np.allclose(mp.level_roots(), [1.0, 16.0], rtol=1e-10)
    with pytest.raises(DomainError):
        melnikov_spec_for(2, 1, (1, 2))


def test_melnikov_cycles_near_predicted_levels():
    sp = melnikov_spec_for(2, 1, (4, -5, 1))
    sc = find_cycles(sp.field(1e-3), SEC, np.linspace(0.5, 8, 16))
    predicted = [math.sqrt(2 * h) for h in melnikov_poly(sp).level_roots()]
    got = sorted(c.r_star for c in sc.cycles)
    assert len(got) == len(predicted)
    assert all(abs(g - p) < 0.05 * p for g, p in zip(got, predicted))


def test_isochronous_linear_center():
    ps = period_scan(ROT, SEC, np.linspace(0.1, 2, 10))
    assert max(abs(T - 2 * math.pi) for T in ps.T) < 1e-8


def test_homogeneous_cubic_period_scaling():
    ps = period_scan(VectorField2(-y ** 3, x ** 3), SEC, np.geomspace(0.2, 2, 10))
    v = [T * s * s for s, T in zip(ps.s, ps.T)]
    assert (max(v) - min(v)) / v[0] < 1e-7
    assert critical_periods(ps).count == 0


def test_loud_monotone_period():
    ps = period_scan(LoudParams(-0.5, 0.5).field(), SEC, np.linspace(0.05, 0.95, 19))
    assert len(ps) == 19 and critical_periods(ps).count == 0


def test_critical_periods_synthetic():
    s = np.linspace(0, 3, 40)
    cp = critical_periods(list(zip(s, (s - 1) ** 2 * (s - 2) ** 2)),
                          refine=lambda t: (t - 1) ** 2 * (t - 2) ** 2)
    assert cp.count == 3
    assert np.allclose(sorted(cp.locations), [1, 1.5, 2], atol=1e-5)
    with pytest.raises(DomainError):
        critical_periods([(0, 1), (1, 2)])


def test_equivariant_matches_loud_counterpart():
    L = equivariant_to_loud(1, 1)
    assert (L.D, L.F) == (-0.25, 0.75)
    ps = period_scan(L.field(), Section(d=(-1, 0)), np.linspace(0.05, 3, 20))
    ps2 = period_scan(equivariant_field(1, 1), SEC, np.linspace(0.05, 0.8, 20))
    assert critical_periods(ps).count == critical_periods(ps2).count


def test_equivariant_sector_time():
    ps = period_scan(equivariant_field(1, 2), SEC, [0.1, 0.2])
    for s, T in zip(ps.s, ps.T):
        assert abs(2 * equivariant_transit_time(1, 2, s) - T) < 1e-8


VDP = VectorField2(y, -x + (one - x * x) * y)
MONOTONE_CASES = [
    (ROT, SEC, np.linspace(0.1, 2, 20)),
    (VectorField2(-y + x * 0.1, x + y * 0.1), SEC, np.linspace(0.1, 2, 20)),
    (LIMIT, SEC, np.linspace(0.2, 2, 20)),
    (VDP, Section(d=(0, 1)), np.linspace(0.2, 4, 20)),
    (LoudParams(-0.5, 0.5).field(), SEC, np.linspace(0.05, 0.95, 20)),
]


@pytest.mark.parametrize("vf,sec,grid", MONOTONE_CASES)
def test_return_map_strictly_increasing(vf, sec, grid):
    Pi = [return_map(vf, sec, float(r)).Pi for r in grid]
    assert all(b > a for a, b in zip(Pi, Pi[1:]))


@pytest.mark.parametrize("vf,sec,r", [(LIMIT, SEC, 0.4), (VDP, Section(d=(0, 1)), 1.0),
                                      (VectorField2(-y + x * 0.1, x + y * 0.1), SEC, 0.5)])
def test_double_winding_equals_two_returns(vf, sec, r):
    tol = 1e-11
    once = return_map(vf, sec, return_map(vf, sec, r, tol=tol).Pi, tol=tol)
    twice = return_map(vf, sec, r, windings=2, tol=tol)
    assert abs(once.Pi - twice.Pi) < 2 * tol * max(1, abs(twice.Pi))


@given(st.floats(-5, 5).filter(lambda v: abs(v) > 1e-3))
@settings(max_examples=20)
def test_melnikov_coefficients_homogeneous(lam):
    spec = MelnikovSpec(3, 2, (0.3, 0.7, -0.4, 1, 2), (0.9, 0.1, -1))
    scaled = MelnikovSpec(3, 2, tuple(lam * v for v in spec.a), tuple(lam * v for v in spec.b))
    for c, cs in zip(melnikov_poly(spec).c, melnikov_poly(scaled).c):
        assert abs(cs - lam * c) <= 1e-14 * abs(lam * c) * 4


def test_detected_cycles_multiplier_methods_agree():
    for vf, sec, grid in [(LIMIT, SEC, [0.3, 0.6, 0.9, 1.2, 1.5]),
                          (VDP, Section(d=(0, 1)), np.linspace(0.5, 4, 8))]:
        sc = find_cycles(vf, sec, grid)
        assert sc.cycles
        for c in sc.cycles:
            fd = pi_prime_fd(vf, sec, c.r_star)
            assert abs(fd - c.pi_prime) < 1e-5 * abs(c.pi_prime)


@pytest.mark.parametrize("n,k", [(1, 1), (1, 2), (2, 3)])
def test_equivariant_reduction(n, k):
    ps = period_scan(equivariant_field(n, k), SEC, np.linspace(0.05, 0.8, 20))
    for s, T in list(zip(ps.s, ps.T))[::7]:
        assert abs(k * equivariant_transit_time(n, k, s) - T) < 1e-8 * T
    L = equivariant_to_loud(n, k)
    loud = period_scan(L.field(), Section(d=(-1, 0)), np.linspace(0.05, 3, 20))
    assert critical_periods(loud).count == critical_periods(ps).count
