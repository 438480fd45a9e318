"""Integer sequences: digit products, reverse-and-add, Pascal multiplicities, periodic recurrences."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import DomainError


# Python ints are the arbitrary-precision naturals; these give the base-b view.

def digits(n: int, base: int = 10) -> list[int]:
    """Most significant digit first; digits(0) == [0]."""
    if base < 2:
        raise DomainError("base must be >= 2")
    if n < 0:
        raise DomainError("only non-negative integers have digit expansions here")
    if n == 0:
        return [0]
    if base == 10:
        return [ord(c) - 48 for c in str(n)]
    out = []
    while n:
        n, r = divmod(n, base)
        out.append(r)
    return out[::-1]


def from_digits(ds: Sequence[int], base: int = 10) -> int:
    v = 0
    for d in ds:
        if not 0 <= d < base:
            raise DomainError(f"digit {d} out of range for base {base}")
        v = v * base + d
    return v


def digit_product(n: int, base: int = 10) -> int:
    return math.prod(digits(n, base))


def reverse(n: int, base: int = 10) -> int:
    return from_digits(digits(n, base)[::-1], base)


def is_palindrome(n: int, base: int = 10) -> bool:
    d = digits(n, base)
    return d == d[::-1]


def persistence(n: int, base: int = 10) -> int:
    """Smallest m >= 0 with Pi^m(n) == Pi^(m+1)(n), Pi the digit product."""
    m = 0
    while True:
        nxt = digit_product(n, base)
        if nxt == n:
            return m
        n, m = nxt, m + 1


def persistence_chain(n: int, base: int = 10) -> list[int]:
    chain = [n]
    while True:
        nxt = digit_product(chain[-1], base)
        if nxt == chain[-1]:
            return chain
        chain.append(nxt)


def smallest_with_persistence(max_m: int, limit: int = 10**6, base: int = 10) -> dict[int, int]:
    """Smallest n < limit with persistence exactly m, for m = 1..max_m (where found)."""
    out = {}
    for n in range(limit):
        p = persistence(n, base)
        if 1 <= p <= max_m and p not in out:
            out[p] = n
            if len(out) == max_m:
                break
    return out


@dataclass(frozen=True)
class ReverseAdd:
    status: str                 # Palindrome | NoneWithin
    steps: int
    value: int
    iterates: tuple = ()

    def to_json(self):
        return {"status": self.status, "steps": self.steps, "value": str(self.value)}


def reverse_add_steps(n: int, base: int = 10, cap: int = 1000, keep: bool = False) -> ReverseAdd:
    """Iterate n -> n + rev_b(n) until the first palindrome (k >= 1) or ``cap`` steps."""
    if cap < 1:
        raise DomainError("cap must be >= 1")
    its = [n] if keep else []
    for k in range(1, cap + 1):
        n = n + reverse(n, base)
        if keep:
            its.append(n)
        if is_palindrome(n, base):
            return ReverseAdd("Palindrome", k, n, tuple(its))
    return ReverseAdd("NoneWithin", cap, n, tuple(its))


def lychrel_table(n_max: int, cap: int = 1000, base: int = 10) -> list[tuple[int, int]]:
    """(n, h(n)) with h(n) the palindrome step count, or cap when none is reached."""
    return [(n, reverse_add_steps(n, base, cap).steps) for n in range(1, n_max + 1)]


def binary_lychrel_pattern(m: int) -> int:
    """10, then m+1 ones, then 01, then m+1 zeros (base 2)."""
    return int("10" + "1" * (m + 1) + "01" + "0" * (m + 1), 2)


def singmaster_count(N: int, row_cap: int = 10**6) -> int:
    """Number of positions (row, col) of Pascal's triangle holding N >= 2.

    For each column k >= 2 with C(2k, k) <= N, C(r, k) is increasing in r, so
    at most one row matches and a binary search finds it; C(N, 1) and
    C(N, N-1) are added explicitly. ``row_cap`` bounds the rows searched.
    """
    if N < 2:
        raise DomainError("N must be >= 2")
    if N == 2:
        return 1                # C(2, 1) is central
    count = 2
    k = 2
    while math.comb(2 * k, k) <= N and 2 * k <= row_cap:
        lo, hi = 2 * k, min(N, row_cap)
        while lo <= hi:
            r = (lo + hi) // 2
            v = math.comb(r, k)
            if v == N:
                count += 1 if 2 * k == r else 2
                break
            if v < N:
                lo = r + 1
            else:
                hi = r - 1
        k += 1
    return count


# -- rational difference equations -------------------------------------------------------

@dataclass(frozen=True)
class DifferenceEquation:
    """x_{n+k} = (A_0 + sum_i A_i x_{n+i-1}) / (B_0 + sum_i B_i x_{n+i-1}), i = 1..k."""
    A: tuple
    B: tuple

    def __post_init__(self):
        A = tuple(Fraction(a) for a in self.A)
        B = tuple(Fraction(b) for b in self.B)
        if len(A) != len(B) or len(A) < 2:
            raise DomainError("A and B need k+1 >= 2 entries each")
        if any(a < 0 for a in A) or any(b < 0 for b in B) or sum(A) <= 0 or sum(B) <= 0:
            raise DomainError("coefficients must be non-negative with positive sums")
        if A[1] == 0 and B[1] == 0:
            raise DomainError("A_1^2 + B_1^2 must be nonzero")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def k(self) -> int:
        return len(self.A) - 1

    def step(self, window: Sequence[Fraction]) -> Fraction:
        num = self.A[0] + sum(a * x for a, x in zip(self.A[1:], window))
        den = self.B[0] + sum(b * x for b, x in zip(self.B[1:], window))
        if den == 0:
            raise ZeroDivisionError
        return num / den

    @classmethod
    def unfold(cls, base: "DifferenceEquation", l: int) -> "DifferenceEquation":
        """Order k*l equation obtained by spacing the lags l apart."""
        A = [base.A[0]] + [Fraction(0)] * (base.k * l)
        B = [base.B[0]] + [Fraction(0)] * (base.k * l)
        for i in range(1, base.k + 1):
            A[(i - 1) * l + 1] = base.A[i]
            B[(i - 1) * l + 1] = base.B[i]
        return cls(tuple(A), tuple(B))

    def to_json(self):
        return {"A": [str(a) for a in self.A], "B": [str(b) for b in self.B]}

    @classmethod
    def from_json(cls, data):
        return cls(tuple(Fraction(a) for a in data["A"]), tuple(Fraction(b) for b in data["B"]))


@dataclass
class PeriodicityVerdict:
    status: str                  # Periodic | AperiodicUpTo | UndefinedOrbit
    period: int | None = None
    horizon: int = 0
    trial_periods: list = field(default_factory=list)
    undefined_trials: list = field(default_factory=list)
    empirical: bool = True

    def to_json(self):
        return {"status": self.status, "period": self.period, "horizon": self.horizon,
                "trial_periods": self.trial_periods, "undefined_trials": self.undefined_trials,
                "empirical": self.empirical}


MAX_BITS = 20_000


def _orbit(eq: DifferenceEquation, x0: Sequence[Fraction], horizon: int):
    xs = list(x0)
    while len(xs) < horizon:
        x = eq.step(xs[-eq.k:])
        xs.append(x)
        if x.numerator.bit_length() + x.denominator.bit_length() > MAX_BITS:
            break
    return xs


def difference_periodicity(eq: DifferenceEquation, trials: int = 5, horizon: int = 200,
                           seed: int = 0) -> PeriodicityVerdict:
    """Empirical period from exact orbits of random positive rational initial windows."""
    rng = random.Random(seed)
    k = eq.k
    periods, undefined, orbits = [], [], []
    for t in range(trials):
        x0 = [Fraction(rng.randint(1, 997), rng.randint(1, 997)) for _ in range(k)]
        try:
            xs = _orbit(eq, x0, horizon)
        except ZeroDivisionError:
            undefined.append(t)
            continue
        orbits.append(xs)
        p = next((p for p in range(1, len(xs) - k + 1) if xs[p:p + k] == xs[:k]), None)
        periods.append(p)
    if undefined and not orbits:
        return PeriodicityVerdict("UndefinedOrbit", None, horizon, periods, undefined)
    if any(p is None for p in periods):
        return PeriodicityVerdict("AperiodicUpTo", None, horizon, periods, undefined)
    p = math.lcm(*periods)
    ok = all(len(xs) >= horizon and all(xs[i + p] == xs[i] for i in range(len(xs) - p)) for xs in orbits)
    if not ok:
        return PeriodicityVerdict("AperiodicUpTo", None, horizon, periods, undefined)
    return PeriodicityVerdict("Periodic", p, horizon, periods, undefined)


LYNESS = {
    "lyness5": DifferenceEquation((1, 0, 1), (0, 1, 0)),
    "ratio6": DifferenceEquation((0, 0, 1), (0, 1, 0)),
    "todd8": DifferenceEquation((1, 0, 1, 1), (0, 1, 0, 0)),
}
