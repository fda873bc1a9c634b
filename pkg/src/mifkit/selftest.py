"""Randomised property suites.

Each suite returns ``PropertyResult`` rows. They back ``mifkit selftest`` and
``mifkit heights --selftest`` and are reused by the acceptance tests at full
sample counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional

import numpy as np

from .freeprod import (
    IdentitySpec,
    evaluate,
    evaluate_mod_p,
    identity_factory,
    random_word,
    reduce,
)
from .groups import GroupSpec, free_pair, family, parse_group_spec
from .heights import (
    HeightConstants,
    find_escape_prime,
    height_poly,
    mod_p_threshold,
    nonzero_mod,
    prime_window_search,
    support_size_bound,
)
from .modp import count_zeros, dkl_bound, reduce_matrix, specialize
from .primes import primes_between
from .ring import RingElement
from .seeding import substream

SLACK = 1e-9


@dataclass
class PropertyResult:
    property: str
    samples: int
    violations: int
    max_slack: float  # max of lhs - rhs; <= SLACK means no violation
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def row(self):
        return [self.property, self.samples, self.violations, f"{self.max_slack:.6g}"]


class _Tally:
    def __init__(self, name: str):
        self.name = name
        self.n = 0
        self.bad = 0
        self.worst = -math.inf
        self.note = ""

    def check(self, lhs: float, rhs: float):
        self.n += 1
        gap = lhs - rhs
        self.worst = max(self.worst, gap)
        if gap > SLACK:
            self.bad += 1

    def flag(self, ok: bool):
        self.n += 1
        if not ok:
            self.bad += 1
        self.worst = max(self.worst, 0.0 if ok else 1.0)

    def result(self) -> PropertyResult:
        return PropertyResult(self.name, self.n, self.bad, self.worst, self.note)


# ------------------------------------------------------------------ random polynomials

RING_CHOICES = ((2, 0), (2, 1), (2, 2), (3, 1), (6, 1), (10, 2))


def random_poly(rng: np.random.Generator, N: int, t: int, max_terms: int = 4, max_deg: int = 3,
                max_k: int = 3, max_log: float = 6.0) -> RingElement:
    """A nonzero element of Z[1/N][x_1..x_t] with small height."""
    while True:
        terms = {}
        for _ in range(int(rng.integers(1, max_terms + 1))):
            deg = int(rng.integers(0, max_deg + 1)) if t else 0
            e = [0] * t
            for _ in range(deg):
                e[int(rng.integers(t))] += 1
            amax = max(1, int(N**max_log))
            a = int(rng.integers(-amax, amax + 1))
            k = int(rng.integers(0, max_k + 1))
            terms[tuple(e)] = terms.get(tuple(e), 0) + Fraction(a, N**k)
        r = RingElement(terms, t)
        if not r.is_zero():
            return r


def heights_suite(samples: int = 10_000, seed: int = 0) -> List[PropertyResult]:
    """Sum, product, pair-product and support inequalities of the height calculus."""
    rng = substream(seed, 1)
    sum_t, prod_t, pair_t, supp_t = (
        _Tally("sum"), _Tally("product"), _Tally("pair_product"), _Tally("support"))
    sharp_t = _Tally("product_scalar_sharp")
    for i in range(samples):
        N, t = RING_CHOICES[int(rng.integers(len(RING_CHOICES)))]
        consts = HeightConstants.for_ring(N, t)
        # sum of m <= 8
        m = int(rng.integers(1, 9))
        rs = [random_poly(rng, N, t) for _ in range(m)]
        total = rs[0]
        for r in rs[1:]:
            total = total + r
        sum_t.check(height_poly(total, N), math.log(m, N) + max(height_poly(r, N) for r in rs))
        # product of m <= 4 (kept small: supports multiply)
        m = int(rng.integers(1, 5))
        rs = [random_poly(rng, N, t, max_terms=3) for _ in range(m)]
        prod = rs[0]
        for r in rs[1:]:
            prod = prod * r
        prod_t.check(height_poly(prod, N), m * consts.C_R + (t + 1) * sum(height_poly(r, N) for r in rs))
        if t == 0:
            a, b = rs[0], random_poly(rng, N, 0)
            sharp_t.check(height_poly(a * b, N), height_poly(a, N) + height_poly(b, N))
        # pair bound
        a, b = random_poly(rng, N, t), random_poly(rng, N, t)
        pair_t.check(height_poly(a * b, N), (t + 2) * height_poly(a, N) + height_poly(b, N))
        # support bound: |supp| <= binom(deg + t, t), and < deg^(t+1) once deg >= 2
        a = random_poly(rng, N, t, max_terms=12, max_deg=4)
        supp_t.check(len(a.supp), support_size_bound(a.deg, t))
        if a.deg >= 2:
            supp_t.check(len(a.supp), a.deg ** (t + 1) - 1)
    return [sum_t.result(), prod_t.result(), pair_t.result(), supp_t.result(), sharp_t.result()]


def nonvanishing_suite(samples: int = 1000, seed: int = 0, pmax: int = 200, max_height: float = 8.0) -> List[PropertyResult]:
    """Primes above C_R^h(r) keep r nonzero; the escape-prime window finds a prime in <= 2 windows."""
    rng = substream(seed, 2)
    nv, win = _Tally("nonvanishing"), _Tally("escape_window")
    primes = list(primes_between(2, pmax))
    drawn = 0
    tested = 0
    while drawn < samples:
        N, t = RING_CHOICES[int(rng.integers(len(RING_CHOICES)))]
        r = random_poly(rng, N, t, max_terms=3, max_deg=2, max_k=2, max_log=3.0)
        h = height_poly(r, N)
        if h > max_height:
            continue
        drawn += 1
        consts = HeightConstants.for_ring(N, t)
        thr = mod_p_threshold(r, consts)
        above = [p for p in primes if p > thr]
        tested += bool(above)
        nv.flag(all(nonzero_mod(r, p) for p in above))
        n = max(N, math.ceil(h))
        res = prime_window_search(r, n, consts)
        win.flag(res.window <= 1 and res.p == find_escape_prime(r, n, consts))
    nv.note = f"{tested} samples had a prime in (C_R^h, {pmax}]"
    return [nv.result(), win.result()]


# ------------------------------------------------------------------ free products


def freeprod_suite(samples: int = 10_000, seed: int = 0, max_len: int = 8) -> List[PropertyResult]:
    """reduce idempotence, substitution homomorphism, and the mod-p commutation square."""
    rng = substream(seed, 3)
    specs = [free_pair(), family()]
    idem, hom, square = _Tally("reduce_idempotent"), _Tally("substitution_hom"), _Tally("modp_square")
    for i in range(samples):
        spec = specs[i % 2]
        u = random_word(spec, int(rng.integers(1, max_len + 1)), rng, require_x=False)
        v = random_word(spec, int(rng.integers(1, max_len + 1)), rng, require_x=False)
        idem.flag(reduce(reduce(u)) == reduce(u) and reduce(u * v) == u * v)
        gword = [spec.letters[j] for j in rng.integers(len(spec.letters), size=int(rng.integers(0, 4)))]
        g = spec.element(gword)
        uv = evaluate(u * v, g)
        hom.flag(uv == evaluate(u, g) @ evaluate(v, g) and evaluate(u.inverse(), g) == evaluate(u, g).inverse())
        p = [5, 7, 11, 13, 101, 1_000_003][int(rng.integers(6))]
        point = tuple(int(a) for a in rng.integers(0, p, size=spec.ctx.t))
        phi = specialize(spec, p, point)
        lhs = reduce_matrix(uv, phi)
        rhs = evaluate_mod_p(u * v, reduce_matrix(g, phi), phi)
        square.flag(bool(np.array_equal(lhs, rhs)))
    return [idem.result(), hom.result(), square.result()]


# ------------------------------------------------------------------ identity examples

CENTRAL = {
    "name": "free pair with -I",
    "d": 2, "t": 0, "N": 2,
    "generators": {"A": [["1", "2"], ["0", "1"]], "B": [["1", "0"], ["2", "1"]], "Z": [["-1", "0"], ["0", "-1"]]},
}
BOREL = {
    "name": "upper triangular Z[1/2]",
    "d": 2, "t": 0, "N": 2, "density_asserted": False,
    "generators": {"U": [["1", "1"], ["0", "1"]], "D": [["2", "0"], ["0", "1/2"]]},
}


def _block(M, N, d=2):
    z = "0"
    rows = []
    for i in range(d):
        rows.append([M[i][j] for j in range(d)] + [z] * d)
    for i in range(d):
        rows.append([z] * d + [N[i][j] for j in range(d)])
    return rows


_I2 = [["1", "0"], ["0", "1"]]
_A = [["1", "2"], ["0", "1"]]
_B = [["1", "0"], ["2", "1"]]
PRODUCT = {
    "name": "block diagonal free pair x free pair",
    "d": 4, "t": 0, "N": 2, "density_asserted": False,
    "generators": {"P": _block(_A, _I2), "Q": _block(_B, _I2), "R": _block(_I2, _A), "S": _block(_I2, _B)},
}


def central_group() -> GroupSpec:
    return parse_group_spec(CENTRAL)


def borel_group() -> GroupSpec:
    return parse_group_spec(BOREL)


def product_group() -> GroupSpec:
    return parse_group_spec(PRODUCT)


def identity_cases():
    """(label, spec, word, sampler) for the three identity kinds."""
    cen = central_group()
    minus_i = cen.letter(3)
    bor = borel_group()
    u = bor.letter(1)
    prod = product_group()
    b, c = prod.letter(1), prod.letter(4)
    return [
        ("finite-normalized", cen, identity_factory(IdentitySpec("finite-normalized", k=1, a=minus_i, order=2), cen)),
        ("finite-normalized k=2", cen, identity_factory(IdentitySpec("finite-normalized", k=2, a=minus_i, order=2), cen)),
        ("infinite-abelian-normalized", bor, identity_factory(IdentitySpec("infinite-abelian-normalized", k=1, a=u), bor)),
        ("infinite-abelian-normalized k=2", bor, identity_factory(IdentitySpec("infinite-abelian-normalized", k=2, a=u), bor)),
        ("centralized", prod, identity_factory(IdentitySpec("centralized", k=1, b=b, c=c), prod)),
        ("centralized k=3", prod, identity_factory(IdentitySpec("centralized", k=3, b=b, c=c), prod)),
    ]


def ball(spec: GroupSpec, radius: int):
    from .ssa import exact_ball

    return exact_ball(spec, radius)


def identity_suite(samples: int = 1000, seed: int = 0, central_radius: int = 6) -> List[PropertyResult]:
    """Factory identities vanish on sampled elements (central case: the whole ball)."""
    rng = substream(seed, 4)
    out = []
    cen_ball = None
    for label, spec, w in identity_cases():
        tally = _Tally(f"identity[{label}]")
        if label.startswith("finite"):
            if cen_ball is None:
                cen_ball = ball(spec, central_radius)
            elems = cen_ball
            tally.note = f"exhaustive ball radius {central_radius} ({len(elems)} elements)"
        else:
            elems = []
            for _ in range(samples):
                L = int(rng.integers(0, 13))
                elems.append(spec.element([spec.letters[j] for j in rng.integers(len(spec.letters), size=L)]))
        for g in elems:
            tally.flag(evaluate(w, g).is_identity())
        if w.is_trivial():
            tally.bad += 1
            tally.note = "factory word reduced to the trivial word"
        out.append(tally.result())
    return out


# ------------------------------------------------------------------ DKL


def dkl_suite(samples: int = 1000, seed: int = 0, pmax: int = 31) -> List[PropertyResult]:
    """Zero counts against deg * p^(t-1); also reports max Pr(s = 0) * p / h(s)."""
    rng = substream(seed, 5)
    primes = list(primes_between(5, pmax))
    tally = _Tally("dkl_zero_count")
    ratio = 0.0
    drawn = 0
    while drawn < samples:
        t = int(rng.integers(0, 3))
        N = 2
        s = random_poly(rng, N, t, max_terms=5, max_deg=6, max_k=2, max_log=4.0)
        p = primes[int(rng.integers(len(primes)))]
        sp = s.reduce_mod(p)
        if sp.is_zero():
            continue
        drawn += 1
        z = count_zeros(s, p)
        tally.check(z, dkl_bound(s, p))
        h = height_poly(s, N)
        if h > 0:
            ratio = max(ratio, (z / p**t) * p / h)
    res = tally.result()
    res.note = f"measured C = {ratio:.4g} (max of Pr(s=0) * p / h(s))"
    return [res]


def measured_dkl_constant(result: PropertyResult) -> Optional[float]:
    if "measured C =" not in result.note:
        return None
    return float(result.note.split("measured C =")[1].split()[0])


SUITES = {
    "heights": heights_suite,
    "nonvanishing": nonvanishing_suite,
    "freeprod": freeprod_suite,
    "identities": identity_suite,
    "dkl": dkl_suite,
}

QUICK = {"heights": 500, "nonvanishing": 100, "freeprod": 300, "identities": 50, "dkl": 100}
FULL = {"heights": 10_000, "nonvanishing": 1000, "freeprod": 10_000, "identities": 1000, "dkl": 1000}


def run_all(quick: bool = False, seed: int = 0, progress: Optional[Callable[[str], None]] = None) -> List[PropertyResult]:
    counts = QUICK if quick else FULL
    out = []
    for name, fn in SUITES.items():
        if progress:
            progress(name)
        kwargs = {"samples": counts[name], "seed": seed}
        if name == "identities" and quick:
            kwargs["central_radius"] = 3
        out.extend(fn(**kwargs))
    return out
