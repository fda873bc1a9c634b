"""Exhaustive specialization study of a parametric group over small primes.

For each prime p and each point a of F_p^t with localizer(a) != 0: does the
reduction generate SL_d(F_p), what is the spectral gap of its Cayley graph,
and is the reduction injective on the exact ball X^m with m = ceil(alpha log p)?
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .cayley import ClosureCapExceeded, bfs_closure, is_generating, spectral_gap
from .groups import GroupElement, GroupSpec
from .modp import CapacityError, DEFAULT_CAP, Specialization, count_zeros, reduce_matrix
from .primes import is_prime


@dataclass(frozen=True)
class SsaConfig:
    primes: Tuple[int, ...] = (5, 7, 11, 13, 17, 19, 23, 29, 31)
    eta: float = 0.5
    alpha: float = 0.3
    cap: int = 200_000
    seed: int = 0
    eps: Optional[float] = None  # expander threshold; None = half the median gap at the smallest prime
    method: str = "lanczos"

    def __post_init__(self):
        if not self.primes:
            raise ValueError("need at least one prime")
        for p in self.primes:
            if p < 5 or not is_prime(p):
                raise ValueError(f"primes must be >= 5 and prime, got {p}")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.method not in ("dense", "lanczos", "auto"):
            raise ValueError(f"unknown eigensolver {self.method!r}")


@dataclass
class SsaPoint:
    p: int
    point: Tuple[int, ...]
    localizer_nonzero: bool
    generating: bool = False
    order: int = 0
    gap: float = float("nan")
    injective_on_ball: bool = False
    m: int = 0


@dataclass
class PrimeSummary:
    p: int
    points: int
    evaluated: int
    non_generating: int
    min_gap: float
    median_gap: float
    non_injective: int
    expanders: int = 0

    @property
    def non_generating_fraction(self) -> float:
        return self.non_generating / self.evaluated if self.evaluated else float("nan")


@dataclass
class SsaReport:
    rows: List[SsaPoint]
    summaries: List[PrimeSummary]
    fitted_C: float
    eps: float
    eta: float
    p0: Optional[int] = None  # smallest prime from which every later prime beats 1 - 1/p^(1-eta)
    notes: List[str] = field(default_factory=list)


def exact_ball(spec: GroupSpec, m: int, cap: int = DEFAULT_CAP) -> List[GroupElement]:
    """Distinct elements of X^{<=m} in BFS order (exact matrices over the ring)."""
    ball = [spec.identity()]
    seen = {ball[0]}
    frontier = ball
    for _ in range(m):
        nxt = []
        for g in frontier:
            for s in spec.letters:
                h = g @ spec.letter(s)
                if h not in seen:
                    seen.add(h)
                    nxt.append(h)
                    if len(seen) > cap:
                        raise CapacityError(f"ball of radius {m} exceeds {cap} elements")
        ball += nxt
        frontier = nxt
    return ball


def ball_radius(p: int, alpha: float) -> int:
    return max(1, math.ceil(alpha * math.log(p)))


def _points(p: int, t: int):
    return [tuple(int(v) for v in a) for a in np.ndindex(*(p,) * t)] if t else [()]


def run_ssa(spec: GroupSpec, cfg: SsaConfig = SsaConfig()) -> SsaReport:
    """Every valid specialization at every prime, with per-prime aggregates."""
    t = spec.ctx.t
    balls: Dict[int, List[GroupElement]] = {}
    rows: List[SsaPoint] = []
    for p in cfg.primes:
        if spec.ctx.N % p == 0:
            continue
        if p**t > DEFAULT_CAP:
            raise CapacityError(f"F_{p}^{t} has {p**t} points, above {DEFAULT_CAP}")
        m = ball_radius(p, cfg.alpha)
        if m not in balls:
            balls[m] = exact_ball(spec, m)
        for a in _points(p, t):
            if spec.localizer.eval_mod(a, p) == 0:
                rows.append(SsaPoint(p, a, False, m=m))
                continue
            phi = Specialization(p, a, spec.ctx, spec.localizer)
            rows.append(_evaluate_point(spec, phi, balls[m], m, cfg))
    return summarize(rows, cfg, spec)


def _evaluate_point(spec: GroupSpec, phi: Specialization, ball, m: int, cfg: SsaConfig) -> SsaPoint:
    p = phi.p
    gens = np.stack([reduce_matrix(spec.letter(s), phi) for s in spec.letters])
    try:
        table = bfs_closure(gens, p, cfg.cap)
    except ClosureCapExceeded as exc:
        raise CapacityError(str(exc)) from exc
    gen = is_generating(table)
    gap = spectral_gap(table, cfg.method).gap if gen else float("nan")
    images = np.stack([reduce_matrix(g, phi) for g in ball])
    injective = len(np.unique(kernels.encode_mod(images, p))) == len(ball)
    return SsaPoint(p, phi.point, True, gen, table.order, gap, injective, m)


def summarize(rows: Sequence[SsaPoint], cfg: SsaConfig, spec: Optional[GroupSpec] = None) -> SsaReport:
    by_p: Dict[int, List[SsaPoint]] = {}
    for r in rows:
        by_p.setdefault(r.p, []).append(r)
    sums = []
    notes = []
    for p, pts in by_p.items():
        ev = [r for r in pts if r.localizer_nonzero]
        if spec is not None:
            zeros = count_zeros(spec.localizer, p)
            if len(ev) != len(pts) - zeros:
                notes.append(f"p={p}: evaluated {len(ev)} points but localizer has {zeros} zeros")
        gaps = [r.gap for r in ev if r.generating]
        sums.append(
            PrimeSummary(
                p=p,
                points=len(pts),
                evaluated=len(ev),
                non_generating=sum(not r.generating for r in ev),
                min_gap=min(gaps) if gaps else float("nan"),
                median_gap=statistics.median(gaps) if gaps else float("nan"),
                non_injective=sum(not r.injective_on_ball for r in ev),
            )
        )
    eps = cfg.eps
    if eps is None:
        first = sums[0].median_gap if sums else float("nan")
        eps = first / 2 if first == first else 0.0
    for s in sums:
        s.expanders = sum(r.generating and r.gap >= eps for r in by_p[s.p] if r.localizer_nonzero)
    fitted_C = max((s.p * s.non_generating_fraction for s in sums if s.evaluated), default=float("nan"))
    # p0: smallest prime from which the expander fraction always exceeds 1 - 1/p^(1-eta)
    p0 = None
    for s in reversed(sums):
        if s.evaluated and s.expanders / s.evaluated > 1 - 1 / s.p ** (1 - cfg.eta):
            p0 = s.p
        else:
            break
    return SsaReport(list(rows), sums, fitted_C, eps, cfg.eta, p0, notes)
