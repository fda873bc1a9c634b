import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mifkit.groups import family, free_pair
from mifkit.heights import (
    HeightConstants,
    HeightError,
    WindowExhausted,
    find_escape_prime,
    height_matrix,
    height_poly,
    height_scalar,
    mod_p_threshold,
    nonzero_mod,
    prime_window_search,
)
from mifkit.primes import is_prime, primes_between
from mifkit.ring import RingElement, canonical_scalar, parse_poly


def P(text, names=("x1", "x2")):
    return parse_poly(text, list(names))


# ---------------------------------------------------------------- definitions


def test_scalar_heights():
    assert height_scalar(canonical_scalar(3, 1, 2), 2) == 1  # 3/2
    assert height_scalar(canonical_scalar(1, 0, 2), 2) == 0
    assert height_scalar(canonical_scalar(8, 0, 2), 2) == pytest.approx(3)
    assert height_scalar(canonical_scalar(0, 0, 2), 2) == 0


def test_poly_heights():
    assert height_poly(P("3/2*x1^2"), 2) == 3
    assert height_poly(P("x1 + 4*x2"), 2) == pytest.approx(3)
    assert height_poly(P("0"), 2) == 0


def test_matrix_heights():
    s = free_pair()
    assert height_matrix(s.identity(), 2) == 0
    assert height_matrix(s.letter(1), 2) == pytest.approx(1)
    f = family()
    AB = f.letter(1) @ f.letter(2)
    assert height_matrix(AB, 2) == pytest.approx(2)


# ---------------------------------------------------------------- constants


def test_constants_floor():
    for N in (2, 3, 4, 6, 10):
        c = HeightConstants.for_ring(N)
        assert c.C_R >= N ** math.log2(N) - 1e-9
    with pytest.raises(HeightError):
        HeightConstants(1.0, 4, 0)


def test_log2_constant_is_too_small_for_n2():
    # N=2, r=3/2: h = 1 and N^{log2 N} = 2, yet the numerator vanishes mod 3 > 2
    r = P("3/2")
    assert height_poly(r, 2) == 1
    assert not nonzero_mod(r, 3)
    consts = HeightConstants.for_ring(2)
    assert mod_p_threshold(r, consts) >= 3


def test_threshold_examples():
    consts = HeightConstants.for_ring(2)
    r3 = P("3")
    thr = mod_p_threshold(r3, consts)
    assert all(3 % p != 0 for p in primes_between(5, 97) if p > thr)
    assert mod_p_threshold(P("1"), consts) == 1
    r6 = P("6*x1")
    thr = mod_p_threshold(r6, HeightConstants.for_ring(2, 2))
    assert all(nonzero_mod(r6, p) for p in primes_between(2, 100) if p > thr)
    with pytest.raises(HeightError):
        mod_p_threshold(P("0"), consts)


# ---------------------------------------------------------------- escape primes


def linear_search(r, n, hi):
    for p in range(n, hi + 1):
        if is_prime(p) and 2 % p and nonzero_mod(r, p):
            return p
    return None


@pytest.mark.parametrize("r,n,expected", [("15", 7, 7), ("7", 7, 11), ("1", 11, 11)])
def test_find_escape_prime_examples(r, n, expected):
    consts = HeightConstants.for_ring(2)
    assert find_escape_prime(P(r), n, consts) == expected


@given(st.integers(-10**6, 10**6).filter(bool), st.integers(2, 60))
def test_escape_prime_matches_linear_search(a, n):
    consts = HeightConstants.for_ring(2)
    r = RingElement.const(a, 0)
    h = height_poly(r, 2)
    n = max(n, math.ceil(h), 2)
    res = prime_window_search(r, n, consts)
    assert res.p == linear_search(r, n, res.hi)
    assert a % res.p != 0


def test_escape_prime_preconditions():
    consts = HeightConstants.for_ring(2)
    with pytest.raises(HeightError):
        find_escape_prime(P("0"), 10, consts)
    with pytest.raises(HeightError):
        find_escape_prime(P("1024"), 2, consts)  # n below h = 10


def test_window_doubling_is_reported(caplog):
    # narrowest legal window for N=2 is [n, 2n]; at n=2 it holds 2 (divides N)
    # and 3 (divides r), so the search must widen to [5, 8]
    consts = HeightConstants(2.0, 2, 0)
    r = P("3")
    with caplog.at_level("WARNING"):
        res = prime_window_search(r, 2, consts)
    assert (res.p, res.window) == (5, 1)
    assert res.skipped == (2, 3)
    assert "exhausted" in caplog.text
    with pytest.raises(WindowExhausted):
        prime_window_search(r, 2, consts, max_doublings=0)
