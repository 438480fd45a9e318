import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from planarlab.algebra import SparsePoly
from planarlab.errors import DomainError
from planarlab.scalar import (PeriodicScalarEq, RigidParams, TrigPoly, count_periodic, multiplier,
                              rigid_lyapunov, rigid_to_scalar, scalar_flow, singular_necessary,
                              singular_shoot, trig_changes_sign)

C, S = TrigPoly.cos, TrigPoly.sin
x, y = SparsePoly.variables(2)


def test_linear_forced_flow():
    # x' = -x + sin t, x(0) = 0 has x(t) = (sin t - cos t)/2 + e^{-t}/2
    r = scalar_flow(PeriodicScalarEq({1: -1, 0: S()}), 0.0)
    assert abs(r.value - (-0.5 + 0.5 * math.exp(-2 * math.pi))) < 1e-10


def test_riccati_blowup_time():
    r = scalar_flow(PeriodicScalarEq({2: 1}, 2.0), 1.0)
    assert r.blowup and r.value is None
    assert abs(r.t_star - 1.0) < 1e-6 and r.direction == 1


def test_odd_cosine_center():
    eq = PeriodicScalarEq({3: C()})
    assert abs(scalar_flow(eq, 0.1).value - 0.1) < 1e-12
    assert count_periodic(eq, (-0.3, 0.3), 13).continuum


def test_riccati_two_periodic_solutions():
    r = count_periodic(PeriodicScalarEq({2: 1, 0: -1}), (-2, 2), 21)
    assert [round(s.rho, 8) for s in r.solutions] == [-1.0, 1.0]
    lo, hi = r.solutions
    assert abs(lo.multiplier - math.exp(-4 * math.pi)) < 1e-9
    assert abs(hi.multiplier / math.exp(4 * math.pi) - 1) < 1e-6
    assert lo.classification == "hyperbolic-stable" and hi.classification == "hyperbolic-unstable"
    assert r.blowups


def test_multiplier_linear():
    eq = PeriodicScalarEq({1: TrigPoly.const(Fraction(1, 10))})
    assert abs(multiplier(eq, 0.3) - math.exp(0.2 * math.pi)) < 1e-9


def test_rigid_reduction_examples():
    assert rigid_to_scalar(SparsePoly.const(Fraction(1, 3), 2)).coeffs == {1: TrigPoly.const(Fraction(1, 3))}
    assert rigid_to_scalar(x * 2 + y * 3).coeffs == {2: C(1, 2) + S(1, 3)}
    co = rigid_to_scalar(RigidParams(0, 1, 2, 1, 0, 0).F()).coeffs
    assert co[2] == C() + S(1, 2)
    assert co[3] == TrigPoly.const(Fraction(1, 2)) + C(2, Fraction(1, 2))


def test_rigid_center_and_perturbations():
    b, c, d = 0.7, -0.4, 0.9
    e = (c * c - b * b) * d / (b * c)
    p = RigidParams(0, b, c, d, e, -d)
    assert max(abs(v) for v in rigid_lyapunov(p)) < 1e-15
    assert count_periodic(rigid_to_scalar(p.F()), (0.01, 0.5), 11).continuum
    q = RigidParams(0, b, c, d, e + 0.3, -d)
    assert rigid_lyapunov(q)[2] != 0
    r = count_periodic(rigid_to_scalar(q.F()), (0.01, 0.5), 11)
    assert not r.continuum and r.solutions == []


def _extrapolated(p, order, rho, points):
    eq = rigid_to_scalar(p.F())
    hs = [rho * (k + 1) for k in range(points)]
    q = [(scalar_flow(eq, h, tol=1e-13).value - h) / h ** order for h in hs]
    return float(np.polyval(np.polyfit(hs, q, points - 1), 0.0))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_lyapunov_constants_against_displacement(seed):
    rng = random.Random(seed)
    b, c, d, e, f = (rng.uniform(-1, 1) for _ in range(5))
    V1, V3, _ = rigid_lyapunov(RigidParams(0.01, b, c, d, e, f))
    assert abs(_extrapolated(RigidParams(0.01, b, c, d, e, f), 1, 1e-3, 2) - V1) < 1e-4 * abs(V1)
    V3 = rigid_lyapunov(RigidParams(0, b, c, d, e, f))[1]
    assert abs(_extrapolated(RigidParams(0, b, c, d, e, f), 3, 1e-2, 4) - V3) < 1e-3 * (abs(V3) + 1e-2)
    p = RigidParams(0, b, c, d, e, -d)
    V5 = rigid_lyapunov(p)[2]
    assert abs(_extrapolated(p, 5, 3e-2, 5) - V5) < 1e-2 * (abs(V5) + 5e-3)


@pytest.mark.parametrize("f,verdict", [(S(), "FailsMean"), (S() - Fraction(1, 10), "Candidate"),
                                        (TrigPoly.const(-1), "FailsSign"), (C() * C(), "FailsSign"),
                                        (C() - 1, "FailsSign"), (C() + 1, "FailsSign")])
def test_singular_necessary(f, verdict):
    assert singular_necessary(f).verdict == verdict


def test_singular_shoot_known_solution():
    # x = 2 + cos t solves x^2 x'' = -(cos t + 2)^2 cos t
    r = singular_shoot(2, -(C() + 2) ** 2 * C(), (3.1, 0.1))
    assert r.found and abs(r.x0 - 3) < 1e-9 and abs(r.v0) < 1e-9


def test_singular_shoot_rejects_noncandidates():
    assert not singular_shoot(2, TrigPoly.const(-1), (1, 0)).found
    assert not singular_shoot(2, S(), (1, 0)).found
    with pytest.raises(DomainError):
        singular_shoot(0, S(), (1, 0))


def test_trigpoly_json_roundtrip():
    f = C(3, Fraction(2, 7)) + S(1, -1) + 5
    assert TrigPoly.from_json(f.to_json()) == f


coef = st.integers(-5, 5)


@st.composite
def trigpolys(draw):
    f = TrigPoly.const(draw(coef))
    for k in range(1, draw(st.integers(1, 3)) + 1):
        f = f + C(k, draw(coef)) + S(k, draw(coef))
    return f


@given(trigpolys(), trigpolys(), st.floats(0, 2 * math.pi))
def test_trig_product_pointwise(f, g, t):
    assert abs((f * g)(t) - f(t) * g(t)) < 1e-9 * (1 + abs(f(t) * g(t)))


@given(trigpolys())
@settings(max_examples=60)
def test_sign_change_matches_sampling(f):
    ts = np.linspace(0, 2 * math.pi, 4001)
    vals = np.array([f(t) for t in ts])
    scale = 1 + np.max(np.abs(vals))
    if vals.min() < -1e-6 * scale and vals.max() > 1e-6 * scale:
        assert trig_changes_sign(f)
    elif vals.min() > 1e-3 * scale or vals.max() < -1e-3 * scale:
        assert not trig_changes_sign(f)


@given(trigpolys())
def test_mean_matches_quadrature(f):
    ts = np.linspace(0, 2 * math.pi, 257)[:-1]
    assert abs(float(f.mean) - np.mean([f(t) for t in ts])) < 1e-9


def _rand_trig(rng, scale, harmonics=2):
    f = TrigPoly.const(Fraction(rng.randint(-10, 10), 10) * scale)
    for k in range(1, harmonics + 1):
        f = f + C(k, Fraction(rng.randint(-10, 10), 10) * scale) + S(k, Fraction(rng.randint(-10, 10), 10) * scale)
    return f


def _cross_ratio(a, b, c, d):
    return (a - c) * (b - d) / ((b - c) * (a - d))


@pytest.mark.parametrize("seed", range(6))
def test_riccati_period_map_is_moebius(seed):
    rng = random.Random(seed)
    eq = PeriodicScalarEq({2: _rand_trig(rng, Fraction(1, 5)), 1: _rand_trig(rng, Fraction(1, 5)),
                           0: _rand_trig(rng, Fraction(1, 5))})
    rhos = [-0.4, -0.1, 0.15, 0.35]
    vals = [scalar_flow(eq, r, tol=1e-13) for r in rhos]
    assert not any(v.blowup for v in vals)
    assert abs(_cross_ratio(*rhos) - _cross_ratio(*(v.value for v in vals))) < 1e-6


@pytest.mark.parametrize("seed", range(4))
def test_rigid_reduction_reflection_symmetry(seed):
    # F quadratic: dr/dtheta = F1 r^2 + F2 r^3, and -r(theta + pi) is again a solution
    from planarlab.flow import integrate
    rng = random.Random(seed)
    b, c, d, e, f = (rng.uniform(-1, 1) for _ in range(5))
    eq = rigid_to_scalar(RigidParams(0, b, c, d, e, f).F())
    rho = 0.1
    tr = integrate(eq.rhs_fn(), [rho], (0, 3 * math.pi), tol=1e-13)
    shifted = scalar_flow(eq, -tr(math.pi)[0], tol=1e-13)
    assert abs(shifted.value + tr(3 * math.pi)[0]) < 1e-10


def test_abel_with_definite_cubic_has_at_most_three():
    rng = random.Random(2024)
    worst = 0
    for _ in range(100):
        A3 = TrigPoly.const(Fraction(rng.choice((-1, 1)) * 2)) + C(1, Fraction(rng.randint(-9, 9), 10))
        eq = PeriodicScalarEq({3: A3, 2: _rand_trig(rng, 1, 1), 1: _rand_trig(rng, 1, 1),
                               0: _rand_trig(rng, Fraction(1, 4), 1)})
        r = count_periodic(eq, (-3, 3), 25, tol=1e-9, xtol=1e-6, escape_norm=1e4)
        assert not r.continuum
        worst = max(worst, len(r.solutions))
    assert worst <= 3


def test_center_condition_gives_continuum():
    rng = random.Random(7)
    for _ in range(20):
        b, c, d = rng.uniform(0.3, 1), rng.uniform(-1, -0.3), rng.uniform(-1, 1)
        e = (c * c - b * b) * d / (b * c)
        p = RigidParams(0, b, c, d, e, -d)
        assert max(abs(v) for v in rigid_lyapunov(p)) < 1e-12
        assert count_periodic(rigid_to_scalar(p.F()), (0.01, 0.3), 9).continuum
        q = RigidParams(0, b, c, d, e + 0.5, -d)
        assert not count_periodic(rigid_to_scalar(q.F()), (0.01, 0.3), 9).continuum
