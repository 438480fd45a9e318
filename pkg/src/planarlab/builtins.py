"""Named systems used by the command line and the acceptance runs."""
from __future__ import annotations

from fractions import Fraction

from .algebra import SparsePoly
from .errors import DomainError
from .flow import VectorField, VectorField2

KOU_COEFF = Fraction(61, 43)

# x~_1 .. x~_5 of the trinomial system; the roots are (x~_i, x~_{6-i})
KOU_ROOTS = (0.59679166, 0.68913517, 0.74035310, 0.77980435, 0.81602099)
KOU_INTERVALS = (
    (Fraction(1, 2), Fraction(1619, 2500)),
    (Fraction(1619, 2500), Fraction(18, 25)),
    (Fraction(18, 25), Fraction(75857, 100000)),
    (Fraction(75857, 100000), Fraction(4, 5)),
    (Fraction(4, 5), Fraction(83, 100)),
)


def kou_system() -> list[SparsePoly]:
    """x^6 + (61/43) y^3 - y, y^6 + (61/43) x^3 - x."""
    x, y = SparsePoly.variables(2)
    return [x ** 6 + y ** 3 * KOU_COEFF - y, y ** 6 + x ** 3 * KOU_COEFF - x]


def cimen_polys(n: int = 3) -> list[SparsePoly]:
    names = ("x", "y") + tuple(f"z{i}" for i in range(1, n - 1))
    v = SparsePoly.variables(n, names)
    x, y, z = v[0], v[1], v[2]
    u = x + y * z
    return [-x + z * u * u, -y - u * u] + [-w for w in v[2:]]


def chessboard_field(roots=(1, 2, 3)) -> VectorField2:
    """(F(y), -F(x)) with F(u) = prod (u - r)."""
    x, y = SparsePoly.variables(2)
    Fx, Fy = SparsePoly.const(1, 2), SparsePoly.const(1, 2)
    for r in roots:
        Fx = Fx * (x - r)
        Fy = Fy * (y - r)
    return VectorField2(Fy, -Fx, name=f"chessboard{tuple(roots)}")


def _parse_pair(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise DomainError(f"expected two comma-separated numbers, got {text!r}")
    return tuple(Fraction(p.strip()) for p in parts)


def builtin(name: str):
    """kou | chebyshev<N>[@eps] | cimen<N> | loud:D,F | chessboard | melnikov21."""
    from .cycles import LoudParams, melnikov_spec_for
    from .pwl import chebyshev_system
    name = name.strip()
    if name == "kou":
        return kou_system()
    if name.startswith("chebyshev"):
        rest = name[len("chebyshev"):]
        n, _, eps = rest.partition("@")
        return chebyshev_system(int(n), Fraction(eps) if eps else Fraction(1, 1000))
    if name.startswith("cimen"):
        n = int(name[len("cimen"):] or 3)
        return VectorField(*cimen_polys(n), name=name)
    if name.startswith("loud:"):
        D, F = _parse_pair(name[5:])
        return LoudParams(float(D), float(F)).field()
    if name == "chessboard":
        return chessboard_field()
    if name == "melnikov21":
        return melnikov_spec_for(2, 1, (1.0, 4.0)).field(1e-3)
    raise DomainError(f"unknown builtin system {name!r}")


def builtin_field(name: str) -> VectorField:
    obj = builtin(name)
    if not isinstance(obj, VectorField):
        raise DomainError(f"builtin {name!r} is not a vector field")
    return obj
