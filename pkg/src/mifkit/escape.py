"""Witnesses for mixed words: Las Vegas escape, the brute-force f_X oracle, and phi_X.

A witness for w is an element gamma with w(gamma) != 1. Every returned
witness carries a certificate that re-verifies independently: either an entry
of w(gamma) mod p that differs from the identity, or an exact evaluation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .freeprod import (
    MixedWord,
    WordError,
    combine_all_audited,
    default_sigmas,
    enumerate_words,
    evaluate,
    evaluate_mod_p,
    random_word,
)
from .groups import GroupElement, GroupError, GroupSpec, adjugate, free_reduce
from .heights import HeightConstants, height_poly
from .modp import Specialization, reduce_matrix, sample_hom
from .primes import next_prime
from .ring import RingElement
from .seeding import substream
from .walk import CONTROL_STREAM, WalkConfig, letter_mats_mod, walk_letters

log = logging.getLogger(__name__)

ORACLE_RADIUS_MAX = 15


class EscapeFailed(RuntimeError):
    """Search budget exhausted; ``diagnostics`` says how far it got."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


class OracleCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class EscapeConfig:
    """k = ceil(c0 * log||w||) + c0_prime; primes come from (D||w||, D*C_R*||w||].

    ``c0=None`` calibrates c0 by a pilot run; ``D=None`` uses the measured
    degree/height surrogate. ``exact_cost_cap`` bounds ||w|| * k for the exact
    fallback on mod-p identities.
    """

    c0: Optional[float] = None
    c0_prime: int = 1
    D: Optional[float] = None
    retries: int = 8
    max_doublings: int = 6
    seed: int = 42
    extra_primes: int = 3
    exact_cost_cap: int = 20_000

    def __post_init__(self):
        if self.c0 is not None and self.c0 <= 0:
            raise ValueError("c0 must be positive")
        if self.D is not None and self.D < 1:
            raise ValueError("D must be >= 1")
        if self.retries < 1:
            raise ValueError("retries must be >= 1")
        if self.max_doublings < 0 or self.c0_prime < 0:
            raise ValueError("max_doublings and c0_prime must be >= 0")


@dataclass
class Certificate:
    p: Optional[int] = None
    point: Tuple[int, ...] = ()
    entry: Optional[Tuple[int, int]] = None
    value: Optional[int] = None
    exact: bool = False

    def to_json(self) -> dict:
        if self.exact:
            return {"exact": True}
        return {"p": self.p, "point": list(self.point), "entry": list(self.entry), "value": self.value}


@dataclass
class Witness:
    gamma: GroupElement
    k_used: int
    certificate: Certificate
    attempts: int

    @property
    def length(self) -> int:
        return len(free_reduce(self.gamma.word))

    def to_json(self, spec: GroupSpec, w: MixedWord) -> dict:
        return {
            "word": w.to_string(spec),
            "gamma_word": spec.word_string(free_reduce(self.gamma.word)),
            "gamma_length": self.length,
            "k_used": self.k_used,
            "certificate": self.certificate.to_json(),
            "attempts": self.attempts,
        }


# ------------------------------------------------------------------ constants


@dataclass(frozen=True)
class MeasuredConstants:
    """Per-letter degree (C1) and height (C2) growth of w(x) entries, x a generic matrix."""

    C1: float
    C2: float
    C_R: float
    D: float
    probes: int


def _lift(r: RingElement, extra: int) -> RingElement:
    pad = (0,) * extra
    return RingElement({e + pad: c for e, c in r.terms.items()}, r.t + extra)


def _rows_mul(A, B):
    d = len(A)
    return [[sum((A[i][l] * B[l][j] for l in range(1, d)), A[i][0] * B[0][j]) for j in range(d)] for i in range(d)]


def measure_constants(spec: GroupSpec, seed: int = 0, lengths=range(2, 7), per_length: int = 3) -> MeasuredConstants:
    """Evaluate probe words at a generic determinant-one-scheme point x.

    x has d^2 fresh variables and x^-1 is its adjugate, so entries of w(x) are
    polynomials whose degree and height are measured per unit of ||w||.
    """
    d, t = spec.d, spec.ctx.t
    T = t + d * d
    X = [[RingElement.var(t + i * d + j, T) for j in range(d)] for i in range(d)]
    Xinv = [list(r) for r in adjugate(X)]
    lifted = {}
    rng = substream(seed, CONTROL_STREAM + 7)
    C1 = C2 = 0.0
    probes = 0
    for n in lengths:
        for _ in range(per_length):
            w = random_word(spec, n, rng)
            acc = None
            for s in w.syllables:
                if isinstance(s, int):
                    base = X if s > 0 else Xinv
                    m = base
                    for _ in range(abs(s) - 1):
                        m = _rows_mul(m, base)
                else:
                    key = s.elem.entries
                    if key not in lifted:
                        lifted[key] = [[_lift(e, d * d) for e in row] for row in key]
                    m = lifted[key]
                acc = m if acc is None else _rows_mul(acc, m)
            L = max(w.length, 1)
            C1 = max(C1, max(e.deg for row in acc for e in row) / L)
            C2 = max(C2, max(height_poly(e, spec.ctx.N) for row in acc for e in row) / L)
            probes += 1
    C_R = HeightConstants.for_ctx(spec.ctx).C_R
    D = max(10 * C2 * C_R, 4 * C1 * (d * d - 1), 1.0)
    return MeasuredConstants(C1, C2, C_R, D, probes)


def constants_for(spec: GroupSpec) -> MeasuredConstants:
    """measure_constants, memoised on the spec object."""
    cache = spec.__dict__.setdefault("_escape_cache", {})
    if "constants" not in cache:
        cache["constants"] = measure_constants(spec)
    return cache["constants"]


# ------------------------------------------------------------------ primes


def window_primes(spec: GroupSpec, n: int, D: float, C_R: float, count: int) -> List[int]:
    """Up to ``count`` smallest primes in (D n, D C_R n] not dividing N."""
    lo = math.floor(D * max(n, 1))
    hi = min(math.floor(D * C_R * max(n, 1)), kernels.MAX_PRIME - 1)
    out = []
    p = lo
    while len(out) < count:
        p = next_prime(p + 1)
        if p > hi:
            break
        if spec.ctx.N % p:
            out.append(p)
    if not out:
        raise EscapeFailed(f"prime window ({lo}, {hi}] is empty", {"lo": lo, "hi": hi})
    return out


def _nonidentity_entry(M: np.ndarray) -> Optional[Tuple[int, int]]:
    d = M.shape[0]
    diff = np.argwhere(M != np.eye(d, dtype=np.int64))
    if len(diff) == 0:
        return None
    i, j = diff[0]
    return int(i), int(j)


# ------------------------------------------------------------------ escape


@dataclass
class _Context:
    spec: GroupSpec
    w: MixedWord
    primes: List[int]
    phis: Dict[int, Specialization] = field(default_factory=dict)
    letter_mats: Dict[int, Dict[int, np.ndarray]] = field(default_factory=dict)
    syl_cache: Dict[int, dict] = field(default_factory=dict)

    def phi(self, p: int, seed: int) -> Specialization:
        if p not in self.phis:
            self.phis[p] = sample_hom(p, self.spec, seed, CONTROL_STREAM + 3 + p)
            self.letter_mats[p] = letter_mats_mod(self.spec, self.phis[p])
            self.syl_cache[p] = {}
        return self.phis[p]

    def test(self, letters: Sequence[int], p: int, seed: int):
        phi = self.phi(p, seed)
        d = self.spec.d
        mats = self.letter_mats[p]
        if letters:
            g = kernels.chain_product_mod(np.stack([mats[s] for s in letters]), p)
        else:
            g = np.eye(d, dtype=np.int64)
        val = evaluate_mod_p(self.w, g, phi, self.syl_cache[p])
        return phi, val


def escape(spec: GroupSpec, w: MixedWord, cfg: EscapeConfig = EscapeConfig(), exact_fallback: bool = True) -> Witness:
    """Las Vegas witness search; the result always re-verifies.

    Each attempt walks k = ceil(c0 log||w||) + c0' steps and tests w(gamma)
    mod the smallest window prime, then further window primes, then exactly
    (when the cost cap allows). ``cfg.retries`` attempts per k, then k doubles.
    """
    if w.is_trivial():
        raise WordError("escape needs a nontrivial word")
    if not spec.density_asserted:
        raise GroupError("escape requires a group whose Zariski density is asserted")
    consts = constants_for(spec)
    D = cfg.D if cfg.D is not None else consts.D
    c0 = cfg.c0 if cfg.c0 is not None else calibrate_c0(spec, seed=cfg.seed)
    n = w.length
    ctx = _Context(spec, w, window_primes(spec, n, D, consts.C_R, 1 + cfg.extra_primes))
    k = math.ceil(c0 * math.log(max(n, 1))) + cfg.c0_prime
    attempts = 0
    mod_p_identities = 0
    tried_k = []
    for _ in range(cfg.max_doublings + 1):
        tried_k.append(k)
        for _ in range(cfg.retries):
            letters = walk_letters(spec, WalkConfig(k, 1, cfg.seed), attempts)
            attempts += 1
            for p in ctx.primes:
                phi, val = ctx.test(letters, p, cfg.seed)
                entry = _nonidentity_entry(val)
                if entry is not None:
                    cert = Certificate(p, phi.point, entry, int(val[entry]))
                    return Witness(spec.element(letters), k, cert, attempts)
                mod_p_identities += 1
            if exact_fallback and n * max(k, 1) <= cfg.exact_cost_cap:
                gamma = spec.element(letters)
                if not evaluate(w, gamma).is_identity():
                    return Witness(gamma, k, Certificate(exact=True), attempts)
        k = max(2 * k, 1)
    raise EscapeFailed(
        f"no witness after {attempts} attempts (k up to {tried_k[-1]})",
        {"k_tried": tried_k, "primes": ctx.primes, "attempts": attempts, "mod_p_identities": mod_p_identities},
    )


def _mul_mod_py(A, B, p):
    d = len(A)
    return [[sum(A[i][l] * B[l][j] for l in range(d)) % p for j in range(d)] for i in range(d)]


def verify_witness(spec: GroupSpec, w: MixedWord, wit: Witness) -> bool:
    """Re-check a certificate by a different route than escape used.

    The mod-p path reduces the exact gamma (not the letter product) and
    multiplies syllables right to left in Python integers; the exact path
    multiplies right to left from the explicit inverse.
    """
    gamma = spec.element(wit.gamma.word)
    if gamma != wit.gamma:
        return False
    cert = wit.certificate
    d = spec.d
    if cert.exact:
        acc = GroupElement.identity(d, spec.ctx.t)
        inv = gamma.inverse()
        for s in reversed(w.syllables):
            if isinstance(s, int):
                for _ in range(abs(s)):
                    acc = (gamma if s > 0 else inv) @ acc
            else:
                acc = s.elem @ acc
        return not acc.is_identity()
    phi = Specialization(cert.p, tuple(cert.point), spec.ctx, spec.localizer)
    p = cert.p
    g = reduce_matrix(gamma, phi).tolist()
    g_inv = reduce_matrix(gamma.inverse(), phi).tolist()
    acc = np.eye(d, dtype=np.int64).tolist()
    for s in reversed(w.syllables):
        if isinstance(s, int):
            for _ in range(abs(s)):
                acc = _mul_mod_py(g if s > 0 else g_inv, acc, p)
        else:
            acc = _mul_mod_py(reduce_matrix(s.elem, phi).tolist(), acc, p)
    i, j = cert.entry
    ident = 1 if i == j else 0
    return acc[i][j] == cert.value and acc[i][j] != ident


# ------------------------------------------------------------------ calibration


def calibrate_c0(spec: GroupSpec, seed: int = 42, lengths=(8, 16, 32), words_per_length: int = 8,
                 walks_per_word: int = 8, floor: float = 0.1, c0_prime: int = 1) -> float:
    """Smallest c0 (>= floor) whose k = ceil(c0 log n) + c0' reaches success rate >= 1/2.

    For each probe length n, k doubles from 1 until at least half of the
    (word, walk) pairs give w(gamma) != 1 mod a window-sized prime.
    """
    cache = spec.__dict__.setdefault("_escape_cache", {})
    key = ("c0", seed, tuple(lengths), words_per_length, walks_per_word, floor, c0_prime)
    if key in cache:
        return cache[key]
    consts = constants_for(spec)
    c0 = floor
    for n in lengths:
        rng = substream(seed, CONTROL_STREAM + 11 + n)
        words = [random_word(spec, n, rng) for _ in range(words_per_length)]
        p = window_primes(spec, n, consts.D, consts.C_R, 1)[0]
        k = 1
        while True:
            ok = 0
            total = 0
            for wi, w in enumerate(words):
                ctx = _Context(spec, w, [p])
                for j in range(walks_per_word):
                    letters = walk_letters(spec, WalkConfig(k, 1, seed), 10_000 * (wi + 1) + j)
                    _, val = ctx.test(letters, p, seed)
                    ok += _nonidentity_entry(val) is not None
                    total += 1
            if 2 * ok >= total or k > 4096:
                break
            k *= 2
        c0 = max(c0, (k - c0_prime) / math.log(n))
    cache[key] = c0
    return c0


# ------------------------------------------------------------------ oracle


def fx_oracle(spec: GroupSpec, w: MixedWord, radius_cap: int = 6) -> int:
    """Exact f_X(w) = min ||gamma|| with w(gamma) != 1, by BFS over balls.

    Each element is screened mod a large prime (a nonidentity residue is a
    proof); residues equal to the identity are decided exactly.
    """
    if w.is_trivial():
        raise WordError("fx_oracle needs a nontrivial word")
    if radius_cap > ORACLE_RADIUS_MAX:
        raise ValueError(f"radius cap {radius_cap} exceeds {ORACLE_RADIUS_MAX}")
    p = next_prime(1_000_000_007 - 1)
    while spec.ctx.N % p == 0:
        p = next_prime(p)
    ctx = _Context(spec, w, [p])
    phi = ctx.phi(p, 0)
    frontier = [spec.identity()]
    seen = {frontier[0]}
    for r in range(radius_cap + 1):
        for g in frontier:
            val = evaluate_mod_p(w, reduce_matrix(g, phi), phi, ctx.syl_cache[p])
            if _nonidentity_entry(val) is not None or not evaluate(w, g).is_identity():
                return r
        nxt = []
        for g in frontier:
            for s in spec.letters:
                h = g @ spec.letter(s)
                if h not in seen:
                    seen.add(h)
                    nxt.append(h)
        frontier = nxt
    raise OracleCapExceeded(f"no witness within radius {radius_cap}")


# ------------------------------------------------------------------ f_X curve


@dataclass
class FxRow:
    n: int
    max_witness_len: int
    oracle_fx: Optional[int]
    words: int


@dataclass
class FxCurve:
    rows: List[FxRow]
    fitted_C: float
    samples: List[Tuple[int, int]]  # (||w||, witness length)


def fit_through_origin(xs: Sequence[float], ys: Sequence[float]) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    den = float(x @ x)
    return float(x @ y) / den if den > 0 else float("nan")


def fx_curve(spec: GroupSpec, n_range: Sequence[int], cfg: EscapeConfig = EscapeConfig(),
             words_per_n: int = 100, oracle_radius: int = 4, oracle_max_len: int = 16) -> FxCurve:
    """Escape-witness lengths against ||w|| for random words of each length n.

    The oracle column is the largest exact f_X among the n's words, filled only
    when n <= ``oracle_max_len`` and every oracle call stays within the radius.
    """
    rows = []
    samples = []
    for n in n_range:
        rng = substream(cfg.seed, CONTROL_STREAM + 100 + n)
        worst = 0
        oracle: Optional[int] = 0 if n <= oracle_max_len else None
        for i in range(words_per_n):
            w = random_word(spec, n, rng)
            wit = escape(spec, w, cfg)
            worst = max(worst, wit.length)
            samples.append((w.length, wit.length))
            if oracle is not None:
                try:
                    oracle = max(oracle, fx_oracle(spec, w, oracle_radius))
                except OracleCapExceeded:
                    oracle = None
        rows.append(FxRow(n, worst, oracle, words_per_n))
    C = fit_through_origin([math.log(max(n, 2)) for n, _ in samples], [L for _, L in samples])
    return FxCurve(rows, C, samples)


# ------------------------------------------------------------------ phi_X


@dataclass
class PhiReport:
    n: int
    words: int
    W_length: int
    bound: int
    within_bound: bool
    rounds: int
    max_participation: int
    gamma_length: int
    verified: int
    failures: List[str]
    certificate: dict

    @property
    def ratio(self) -> float:
        """||gamma|| / n, the empirical C in phi_X(n) <= C n."""
        return self.gamma_length / self.n


def phi_witness(spec: GroupSpec, n: int, cfg: EscapeConfig = EscapeConfig()):
    """One gamma with w(gamma) != 1 for every nontrivial reduced word of length <= n.

    The combined word W is escaped mod p (exact fallback is far too costly at
    this length) and every enumerated word is then checked exactly.
    """
    if not 1 <= n <= 4:
        raise ValueError("phi_witness enumerates (|X|+2)^n words; need 1 <= n <= 4")
    words = enumerate_words(spec, n)
    s1, s2 = default_sigmas(spec)
    audit = combine_all_audited(words, s1, s2)
    W = audit.W
    wit = escape(spec, W, cfg, exact_fallback=False)
    failures = []
    for w in words:
        if evaluate(w, wit.gamma).is_identity():
            failures.append(w.to_string(spec))
    if failures:
        raise AssertionError(
            f"combiner contract violated: W(gamma) != 1 but {len(failures)} words vanish, e.g. {failures[0]}"
        )
    report = PhiReport(
        n=n,
        words=len(words),
        W_length=audit.length,
        bound=audit.bound,
        within_bound=audit.within_bound,
        rounds=audit.rounds,
        max_participation=audit.max_participation,
        gamma_length=wit.length,
        verified=len(words),
        failures=failures,
        certificate=wit.certificate.to_json(),
    )
    return wit, report
