import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from planarlab.algebra import SparsePoly, loewner_field
from planarlab.builtins import chessboard_field, cimen_polys
from planarlab.errors import BlowUp, DomainError, PoleError
from planarlab.flow import (Event, VectorField, VectorField2, classify_equilibria, field_index,
                            integrate)

S = SparsePoly.parse
x, y = SparsePoly.variables(2)
ROT = VectorField2(-y, x)


def test_rotation_full_turn():
    tr = integrate(ROT, (1, 0), (0, 2 * math.pi))
    assert abs(tr.y_final[0] - 1) < 1e-9 and abs(tr.y_final[1]) < 1e-9


def test_exponential_growth():
    tr = integrate(VectorField(S("x", ("x",))), (1,), (0, 1))
    assert abs(tr.y_final[0] - math.e) < 1e-10


def test_cimen_closed_form():
    # x + y z = 6 e^t along this orbit, giving an explicit solution
    tr = integrate(VectorField(*cimen_polys(3)), (18, -12, 1), (0, 1))
    want = (18 * math.e, -12 * math.e ** 2, 1 / math.e)
    assert all(abs(a - b) < 1e-8 for a, b in zip(tr.y_final, want))


def test_events_at_each_turn():
    tr = integrate(ROT, (1, 0), (0, 20), events=[Event(lambda t, s: s[1], direction=1)])
    assert len(tr.events) == 3
    for i, e in enumerate(tr.events):
        assert abs(e.t - 2 * math.pi * (i + 1)) < 1e-9


def test_terminal_event_and_dense_output():
    tr = integrate(ROT, (1, 0), (0, 20), events=[Event(lambda t, s: s[1], direction=1, terminal=1)])
    assert tr.status == "event"
    assert abs(tr.t_final - 2 * math.pi) < 1e-9
    p = tr(3.0)
    assert abs(p[0] - math.cos(3)) < 1e-8 and abs(p[1] - math.sin(3)) < 1e-8
    with pytest.raises(DomainError):
        tr(10.0)


def test_event_accept_filter():
    ev = Event(lambda t, s: s[1], accept=lambda t, s: s[0] > 0)
    tr = integrate(ROT, (1, 0), (0, 20), events=[ev])
    assert all(e.state[0] > 0 for e in tr.events)


def test_blowup_reported():
    with pytest.raises(BlowUp) as info:
        integrate(VectorField(S("x^3", ("x",))), (1,), (0, 1))
    assert abs(info.value.t - 0.5) < 1e-3


def test_escape_norm():
    with pytest.raises(BlowUp):
        integrate(VectorField(S("x", ("x",))), (1,), (0, 10), escape_norm=100)


def test_pole_error():
    vf = VectorField2.parse("1", "1/x")
    with pytest.raises(PoleError):
        integrate(vf, (0, 0), (0, 1))


def test_tolerance_floor():
    with pytest.raises(DomainError):
        integrate(ROT, (1, 0), (0, 1), tol=1e-15)


def test_csv_output():
    tr = integrate(ROT, (1, 0), (0, 1), events=[Event(lambda t, s: s[0] - 0.9)])
    lines = tr.to_csv().splitlines()
    assert lines[0] == "t,x,y,event0"
    assert sum(1 for ln in lines[1:] if ln.endswith(",1")) == len(tr.events) == 1


def test_chessboard_equilibria():
    eq = classify_equilibria(chessboard_field(), ((0, 4), (0, 4)))
    kinds = [e.kind for e in eq]
    assert kinds.count("center") == 5 and kinds.count("saddle") == 4
    assert field_index(chessboard_field(), (2, 2), 3) == sum(e.index for e in eq) == 1


def test_field_index_examples():
    assert field_index(VectorField2(x, y)) == 1
    assert field_index(VectorField2(x * x - y * y, 2 * x * y)) == 2
    assert field_index(VectorField2(x, -y)) == -1
    assert field_index(loewner_field((x * x + y * y) ** 2, 2).field) == 2
    with pytest.raises(DomainError):
        field_index(VectorField2(x - 1, y), (0, 0), 1.0)


def test_saddle_classification():
    (e,) = classify_equilibria(VectorField2(x, -y), ((-1, 1), (-1, 1)), 5)
    assert e.kind == "saddle" and e.index == -1


def test_field_json_roundtrip():
    vf = VectorField2.parse("x^2 - y", "x*y + 1/2")
    back = VectorField.from_json(vf.to_json())
    assert back(0.3, -0.7) == vf(0.3, -0.7)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.1, 6))
def test_rotation_preserves_radius(a, b, T):
    tr = integrate(ROT, (a, b), (0, T))
    r0, r1 = math.hypot(a, b), math.hypot(*tr.y_final)
    assert abs(r1 - r0) < 1e-8 * max(1, r0)


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1),
       st.floats(-1, 1), st.floats(-1, 1))
def test_linear_flow_matches_matrix_exponential(a, b, c, d, u, v):
    A = np.array([[a, b], [c, d]])
    vf = VectorField2(x * a + y * b, x * c + y * d)
    tr = integrate(vf, (u, v), (0, 1))
    want = expm(A) @ np.array([u, v])
    assert np.max(np.abs(np.array(tr.y_final) - want)) < 1e-8


@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_backward_integration_returns(a, b):
    vf = VectorField2(y, -x - (x * x - 1) * y * 0.5)
    fw = integrate(vf, (a, b), (0, 3))
    bw = integrate(vf, fw.y_final, (3, 0))
    assert max(abs(p - q) for p, q in zip(bw.y_final, (a, b))) < 100 * 1e-10


DOUBLE_WELL_H = y * y * 0.5 + x ** 4 * 0.25 - x * x * 0.5


@given(st.floats(-1.5, 1.5), st.floats(-1, 1))
@settings(max_examples=10)
def test_hamiltonian_conserved_to_t100(a, b):
    H = DOUBLE_WELL_H
    tol = 1e-10
    vf = VectorField2(H.diff(1), -H.diff(0))
    tr = integrate(vf, (a, b), (0, 100), tol=tol)
    h0 = H(a, b)
    drift = max(abs(H(*tr(t)) - h0) for t in np.linspace(0, 100, 400))
    assert drift < 100 * tol * max(1, abs(h0))


@given(st.floats(0.2, 2), st.floats(-1, 1))
@settings(max_examples=15)
def test_event_states_on_surface(c, phase):
    g = lambda t, s: s[0] * s[0] + 0.3 * s[1] - c * 0.5
    tr = integrate(ROT, (math.cos(phase), math.sin(phase)), (0, 15), events=[Event(g)])
    assert tr.events
    assert all(abs(g(e.t, e.state)) < 1e-10 for e in tr.events)


@pytest.mark.parametrize("vf,center,radii,index", [
    (VectorField2(x * x - y * y, 2 * x * y), (0, 0), (0.5, 1, 3), 2),
    (VectorField2(x, -y), (0, 0), (0.2, 1, 10), -1),
    (chessboard_field(), (2, 2), (2.3, 2.5, 2.7), 1),
])
def test_index_independent_of_radius(vf, center, radii, index):
    assert [field_index(vf, center, r) for r in radii] == [index] * 3
