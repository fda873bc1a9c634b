"""Height functions on Z[1/N] and Z[1/N][x_1..x_t], and the escape-prime window.

    h(a / N^k)          = max{k, log_N^+ |a / N^k|}        (a not divisible by N)
    h(sum a_I x^I)      = max{h(a_I) + |I| : a_I != 0}
    h((a_ij))           = max h(a_ij)

h(0) is defined as 0; operations that need a nonzero argument check it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List

from .groups import GroupElement
from .primes import is_prime
from .ring import NLocInt, RingCtx, RingElement, to_nloc

log = logging.getLogger(__name__)


class HeightError(ValueError):
    pass


class WindowExhausted(HeightError):
    """No admissible prime in any of the widened windows."""


@dataclass(frozen=True)
class HeightConstants:
    C_R: float
    N: int
    t: int

    @classmethod
    def for_ring(cls, N: int, t: int = 0) -> "HeightConstants":
        # N^{log2 N} is too small for N < 4: the mod-p claim needs p > N^{2h}.
        return cls(float(N) ** max(2.0, math.log2(N)), N, t)

    @classmethod
    def for_ctx(cls, ctx: RingCtx) -> "HeightConstants":
        return cls.for_ring(ctx.N, ctx.t)

    def __post_init__(self):
        floor = float(self.N) ** math.log2(self.N)
        if self.C_R < floor * (1 - 1e-12):
            raise HeightError(f"C_R={self.C_R} below N^log2(N)={floor}")


def _log_N(v: int, N: int) -> float:
    # math.log handles arbitrarily large ints
    return math.log(v) / math.log(N)


def height_scalar(r: NLocInt, ctx: RingCtx | int) -> float:
    N = ctx if isinstance(ctx, int) else ctx.N
    if r.a == 0:
        return 0.0
    log_abs = _log_N(abs(r.a), N) - r.k
    return max(float(r.k), log_abs, 0.0)


def height_of_coeff(c, N: int) -> float:
    return height_scalar(to_nloc(c, N), N)


def height_poly(r: RingElement, ctx: RingCtx | int) -> float:
    N = ctx if isinstance(ctx, int) else ctx.N
    if r.is_zero():
        return 0.0
    return max(height_of_coeff(c, N) + sum(e) for e, c in r.terms.items())


def height_matrix(M: GroupElement, ctx: RingCtx | int) -> float:
    return max(height_poly(e, ctx) for row in M.entries for e in row)


def mod_p_threshold(r: RingElement, consts: HeightConstants) -> float:
    """C_R^{h(r)}: every prime above it keeps r nonzero in F_p[x]."""
    if r.is_zero():
        raise HeightError("threshold undefined for r = 0")
    return consts.C_R ** height_poly(r, consts.N)


def nonzero_mod(r: RingElement, p: int) -> bool:
    """Whether the image of r in F_p[x_1..x_t] is a nonzero polynomial."""
    try:
        return not r.reduce_mod(p).is_zero()
    except ZeroDivisionError:
        return False


@dataclass(frozen=True)
class PrimeWindowResult:
    p: int
    window: int  # 0 for the first window [n, C_R n]
    lo: int
    hi: int
    skipped: tuple


def prime_window_search(
    r: RingElement, n: int, consts: HeightConstants, max_doublings: int = 8
) -> PrimeWindowResult:
    """Smallest admissible prime in [n, ceil(C_R n)], widening by doubling n if none.

    Admissible: p does not divide N and r mod p is a nonzero polynomial. Every
    widening is logged.
    """
    if r.is_zero():
        raise HeightError("r = 0 has no escape prime")
    h = height_poly(r, consts.N)
    if n < max(consts.N, h):
        raise HeightError(f"n={n} below max(N, h(r))={max(consts.N, h):.4g}")
    lo = n
    skipped = []
    for window in range(max_doublings + 1):
        hi = math.ceil(consts.C_R * n)
        for p in range(lo, hi + 1):
            if not is_prime(p):
                continue
            if consts.N % p != 0 and nonzero_mod(r, p):
                return PrimeWindowResult(p, window, lo, hi, tuple(skipped))
            skipped.append(p)
        log.warning("escape-prime window [%d, %d] exhausted; doubling n", lo, hi)
        lo = hi + 1
        n *= 2
    raise WindowExhausted(f"no admissible prime after {max_doublings} doublings (last hi={hi})")


def find_escape_prime(r: RingElement, n: int, consts: HeightConstants, max_doublings: int = 8) -> int:
    return prime_window_search(r, n, consts, max_doublings).p


def support_size_bound(deg: int, t: int) -> int:
    return math.comb(deg + t, t)


def heights_of(values: List[RingElement], N: int) -> List[float]:
    return [height_poly(v, N) for v in values]
