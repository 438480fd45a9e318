import math

import pytest
from hypothesis import given, strategies as st

from planarlab.errors import DomainError
from planarlab.seq import (LYNESS, DifferenceEquation, binary_lychrel_pattern, difference_periodicity,
                           digit_product, digits, from_digits, is_palindrome, lychrel_table,
                           persistence, persistence_chain, reverse, reverse_add_steps,
                           singmaster_count, smallest_with_persistence)


def test_persistence_examples():
    assert persistence(7) == 0 and persistence(10) == 1 and persistence(68889) == 7
    assert persistence_chain(68889) == [68889, 27648, 2688, 768, 336, 54, 20, 0]


def test_smallest_with_persistence_known_values():
    # OEIS A003001
    assert smallest_with_persistence(7, limit=10 ** 5) == {1: 10, 2: 25, 3: 39, 4: 77, 5: 679,
                                                          6: 6788, 7: 68889}


def test_reverse_add_examples():
    r = reverse_add_steps(183)
    assert (r.status, r.steps, r.value) == ("Palindrome", 4, 13431)
    assert reverse_add_steps(89).to_json() == {"status": "Palindrome", "steps": 24, "value": "8813200023188"}
    assert reverse_add_steps(196, cap=300).status == "NoneWithin"
    with pytest.raises(DomainError):
        reverse_add_steps(5, cap=0)


def test_binary_pattern_recurs():
    r = reverse_add_steps(0b10110, 2, 400, keep=True)
    assert r.status == "NoneWithin"
    assert all(r.iterates[4 * m] == binary_lychrel_pattern(m) for m in range(1, 50))


def test_lychrel_table_prefix():
    # 1..4 double to a one-digit palindrome; 5..9 need a second step (e.g. 5 -> 10 -> 11)
    assert lychrel_table(12) == [(n, 1 if n < 5 else 2) for n in range(1, 10)] + [(10, 1), (11, 1), (12, 1)]


@pytest.mark.parametrize("N,count", [(2, 1), (3, 2), (6, 3), (10, 4), (120, 6), (3003, 8)])
def test_singmaster_known_counts(N, count):
    assert singmaster_count(N) == count


@given(st.integers(2, 400))
def test_singmaster_matches_brute_force(N):
    brute = 0
    for r in range(N + 1):
        for k in range(r // 2 + 1):
            c = math.comb(r, k)
            if c > N:
                break
            if c == N:
                brute += 1 if 2 * k == r else 2
    assert singmaster_count(N) == brute


@pytest.mark.parametrize("name,period", [("lyness5", 5), ("ratio6", 6), ("todd8", 8)])
def test_known_periodic_recurrences(name, period):
    v = difference_periodicity(LYNESS[name])
    assert v.status == "Periodic" and v.period == period


@pytest.mark.parametrize("l,period", [(2, 10), (3, 15)])
def test_unfolded_periods(l, period):
    v = difference_periodicity(DifferenceEquation.unfold(LYNESS["lyness5"], l))
    assert v.status == "Periodic" and v.period == period


def test_aperiodic_recurrence():
    assert difference_periodicity(DifferenceEquation((1, 1, 1), (0, 1, 0))).status == "AperiodicUpTo"


def test_difference_equation_validation():
    with pytest.raises(DomainError):
        DifferenceEquation((1,), (1,))
    with pytest.raises(DomainError):
        DifferenceEquation((-1, 1), (0, 1))
    with pytest.raises(DomainError):
        DifferenceEquation((1, 0, 1), (1, 0, 0))
    eq = LYNESS["todd8"]
    assert DifferenceEquation.from_json(eq.to_json()) == eq


@given(st.integers(0, 10 ** 30), st.integers(2, 16))
def test_digits_roundtrip(n, base):
    assert from_digits(digits(n, base), base) == n
    assert digit_product(n, base) == math.prod(digits(n, base))


@given(st.integers(1, 10 ** 30), st.integers(2, 16))
def test_reverse_involution(n, base):
    if n % base:
        assert reverse(reverse(n, base), base) == n
    assert is_palindrome(n * base ** len(digits(n, base)) + reverse(n, base), base)


@given(st.integers(0, 10 ** 12))
def test_persistence_chain_consistent(n):
    ch = persistence_chain(n)
    assert len(ch) - 1 == persistence(n)
    assert all(b == digit_product(a) for a, b in zip(ch, ch[1:]))
    assert ch[-1] < 10


@given(st.sampled_from([2, 10, 16]), st.data())
def test_digit_strings_roundtrip(base, data):
    ds = data.draw(st.lists(st.integers(0, base - 1), min_size=1, max_size=60))
    if len(ds) > 1:
        ds[0] = ds[0] or 1
    assert digits(from_digits(ds, base), base) == ds


def _smooth_form(v):
    # 2^i 3^j 7^k or 3^i 5^j 7^k
    f = v
    for p in (2, 3, 5, 7):
        while f % p == 0:
            f //= p
    return f == 1 and not (v % 2 == 0 and v % 5 == 0)


def test_persistence_intermediates_avoid_mixing_two_and_five():
    seen = 0
    for n in range(10 ** 6):
        ch = persistence_chain(n)
        if len(ch) - 1 <= 3:
            continue
        seen += 1
        mids = ch[1:-1]
        if ch[-1] == 0:
            mids = mids[:-1]     # the step into 0 is a multiple of 10
        assert all(_smooth_form(v) for v in mids), ch
    assert seen > 0


def test_singmaster_matches_table_of_small_rows():
    R, LIMIT = 2000, 10 ** 6
    counts = {}
    for r in range(2, R + 1):
        c = 1
        for k in range(1, r // 2 + 1):
            c = c * (r - k + 1) // k
            if c > LIMIT:
                break
            counts[c] = counts.get(c, 0) + (1 if 2 * k == r else 2)
    for N, cnt in counts.items():
        # row N itself contributes C(N, 1) = C(N, N - 1) = N beyond the table
        want = cnt + (2 if N > R else 0)
        assert singmaster_count(N) == want, N
