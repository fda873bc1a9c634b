"""Simple random walks on Gamma and the empirical decay of Pr(w(gamma_k) = 1)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from . import kernels
from .freeprod import MixedWord, WordError, evaluate, evaluate_mod_p_batch
from .groups import GroupElement, GroupSpec
from .modp import Specialization, reduce_matrix, sample_hom
from .primes import next_prime
from .seeding import substream

# stream indices >= this are reserved for experiment-level draws (prime choice, ...)
CONTROL_STREAM = 1 << 62


@dataclass(frozen=True)
class WalkConfig:
    steps: int
    trials: int = 1
    seed: int = 0
    hold: float = 0.0

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0.0 <= self.hold < 1.0:
            raise ValueError("hold probability must lie in [0, 1)")


def walk_steps(spec: GroupSpec, cfg: WalkConfig, trial: int = 0) -> List[int]:
    """Signed letter per step of trial ``trial``; 0 marks a held step."""
    rng = substream(cfg.seed, trial)
    letters = np.asarray(spec.letters, dtype=np.int64)
    steps = letters[rng.integers(0, len(letters), size=cfg.steps)]
    if cfg.hold > 0:
        steps[rng.random(cfg.steps) < cfg.hold] = 0
    return steps.tolist()


def walk_letters(spec: GroupSpec, cfg: WalkConfig, trial: int = 0) -> List[int]:
    """The word trace of trial ``trial`` (held steps dropped)."""
    return [s for s in walk_steps(spec, cfg, trial) if s]


def sample_walk(spec: GroupSpec, cfg: WalkConfig, trial: int = 0) -> GroupElement:
    """gamma_k = s_1 s_2 ... s_k with iid uniform s_i in X; the word is the trace."""
    return spec.element(walk_letters(spec, cfg, trial))


def letter_mats_mod(spec: GroupSpec, phi: Specialization) -> Dict[int, np.ndarray]:
    return {s: reduce_matrix(spec.letter(s), phi) for s in spec.letters}


def wilson(hits: int, n: int, z: float = 1.959963984540054):
    if n == 0:
        return 0.0, 1.0
    ph = hits / n
    den = 1 + z * z / n
    centre = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class DecayRow:
    k: int
    hits: int
    trials: int
    p_hat: float
    lo95: float
    hi95: float


@dataclass
class DecayCurve:
    rows: List[DecayRow]
    slope: float = float("nan")
    intercept: float = float("nan")
    r2: float = float("nan")
    prime: int = 0
    false_identities: int = 0
    fit_ks: List[int] = field(default_factory=list)

    @property
    def rate(self) -> float:
        """Fitted a in Pr ~ b a^k."""
        return math.exp(self.slope)


def fit_log_linear(ks: Sequence[int], ps: Sequence[float]):
    """Least squares of log p on k: (slope, intercept, R^2)."""
    x = np.asarray(ks, dtype=float)
    y = np.log(np.asarray(ps, dtype=float))
    if len(x) < 2:
        return float("nan"), float("nan"), float("nan")
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = slope * x + intercept
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def fast_path_specialization(spec: GroupSpec, seed: int) -> Specialization:
    """A random prime in [1e9, 2e9] (and a random point when t > 0)."""
    rng = substream(seed, CONTROL_STREAM)
    while True:
        p = next_prime(int(rng.integers(10**9, 2 * 10**9)))
        if p <= 2 * 10**9 and spec.ctx.N % p:
            break
    return sample_hom(p, spec, seed, CONTROL_STREAM + 1)


def decay_curve(
    spec: GroupSpec,
    w: MixedWord,
    k_range: Sequence[int],
    trials: int,
    seed: int,
    hold: float = 0.0,
    fit_from: int = 1,
) -> DecayCurve:
    """Empirical Pr(w(gamma_k) = 1) for each k, with Wilson intervals and a log-linear fit.

    All k share the same walks: trial i uses the prefixes of one letter
    sequence. Identity mod p is confirmed by exact evaluation before counting.
    """
    if w.is_trivial():
        raise WordError("decay_curve needs a nontrivial word")
    ks = sorted(set(int(k) for k in k_range))
    if not ks or ks[0] < 0:
        raise ValueError("k_range must be a nonempty set of k >= 0")
    kmax = ks[-1]
    walk_cfg = WalkConfig(kmax, 1, seed, hold)
    phi = fast_path_specialization(spec, seed)
    p = phi.p
    d = spec.d
    mats = letter_mats_mod(spec, phi)
    eye = np.eye(d, dtype=np.int64)
    keys = [0] + list(spec.letters)
    stack = np.stack([eye] + [mats[s] for s in spec.letters])
    inv_stack = np.stack([eye] + [mats[-s] for s in spec.letters])
    lookup = {s: i for i, s in enumerate(keys)}

    steps = [walk_steps(spec, walk_cfg, i) for i in range(trials)]
    L_idx = np.array([[lookup[s] for s in row] for row in steps], dtype=np.int64).reshape(trials, kmax)

    gam = np.broadcast_to(eye, (trials, d, d)).copy()
    gam_inv = gam.copy()
    exact_cache: Dict[int, List[GroupElement]] = {}
    syl_cache: Dict = {}
    rows = []
    false_id = 0
    kset = set(ks)
    for step in range(kmax + 1):
        if step > 0:
            idx = L_idx[:, step - 1]
            gam = kernels.batch_matmul_mod(gam, stack[idx], p)
            gam_inv = kernels.batch_matmul_mod(inv_stack[idx], gam_inv, p)
        if step not in kset:
            continue
        vals = evaluate_mod_p_batch(w, gam, gam_inv, phi, syl_cache)
        ident = np.all(vals == eye, axis=(1, 2))
        hits = 0
        for i in np.flatnonzero(ident):
            g = _exact_prefix(spec, steps[int(i)], step, exact_cache, int(i))
            if evaluate(w, g).is_identity():
                hits += 1
            else:
                false_id += 1
        lo, hi = wilson(hits, trials)
        rows.append(DecayRow(step, hits, trials, hits / trials, lo, hi))
    fit = [(r.k, r.p_hat) for r in rows if r.k >= fit_from and r.hits > 0]
    slope, intercept, r2 = fit_log_linear([k for k, _ in fit], [q for _, q in fit])
    return DecayCurve(rows, slope, intercept, r2, p, false_id, [k for k, _ in fit])


def _exact_prefix(spec, steps, k, cache, i) -> GroupElement:
    """Exact gamma_k of trial i, extending a per-trial prefix cache."""
    seq = cache.setdefault(i, [spec.identity()])
    while len(seq) <= k:
        s = steps[len(seq) - 1]
        seq.append(seq[-1] @ spec.letter(s) if s else seq[-1])
    return seq[k]
