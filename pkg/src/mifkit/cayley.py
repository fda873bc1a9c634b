"""Finite matrix groups mod p, their Cayley graphs and Markov spectra."""

from __future__ import annotations

import hashlib
import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import kernels
from .eigen import dense_markov, lanczos_extremes
from .modp import det_mod, inv_mod

log = logging.getLogger(__name__)

DENSE_LIMIT = 5000


class ClosureCapExceeded(RuntimeError):
    pass


def sl_order(d: int, p: int) -> int:
    """|SL_d(F_p)| = p^{d(d-1)/2} prod_{i=2..d} (p^i - 1)."""
    out = p ** (d * (d - 1) // 2)
    for i in range(2, d + 1):
        out *= p**i - 1
    return out


@dataclass
class FiniteGroupTable:
    """Elements of <S> mod p in BFS order (index 0 is the identity).

    ``perms[s, i]`` is the index of ``S[s] @ elements[i]``: the Cayley graph
    edges for left multiplication.
    """

    elements: Optional[np.ndarray]
    perms: np.ndarray
    p: int
    d: int
    generators: Optional[np.ndarray] = None
    _sorted_codes: Optional[np.ndarray] = field(default=None, repr=False)
    _order: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def order(self) -> int:
        return self.perms.shape[1]

    @classmethod
    def from_perms(cls, perms) -> "FiniteGroupTable":
        """A synthetic table (e.g. a circulant) with no matrices behind it."""
        perms = np.asarray(perms, dtype=np.int64)
        return cls(elements=None, perms=perms, p=0, d=0)

    def _index(self):
        if self._sorted_codes is None:
            codes = kernels.encode_mod(self.elements, self.p)
            self._order = np.argsort(codes, kind="stable")
            self._sorted_codes = codes[self._order]
        return self._sorted_codes, self._order

    def index_of(self, mats: np.ndarray) -> np.ndarray:
        """Indices of the given matrices; -1 for matrices outside the table."""
        sc, order = self._index()
        codes = kernels.encode_mod(np.asarray(mats, dtype=np.int64).reshape(-1, self.d, self.d), self.p)
        pos = np.searchsorted(sc, codes)
        pos = np.minimum(pos, len(sc) - 1)
        hit = sc[pos] == codes
        return np.where(hit, order[pos], -1)


def _check_generators(gens: np.ndarray, p: int):
    for g in gens:
        if det_mod(g, p) != 1:
            raise ValueError("generators must have determinant 1 mod p")
    codes = set(kernels.encode_mod(gens, p).tolist())
    for g in gens:
        code = int(kernels.encode_mod(inv_mod(g, p)[None], p)[0])
        if code not in codes:
            raise ValueError("generator set is not symmetric mod p")


def _cache_path(gens: np.ndarray, p: int) -> Optional[Path]:
    root = os.environ.get("MIFKIT_CACHE")
    if not root:
        return None
    h = hashlib.sha256(np.ascontiguousarray(gens, dtype=np.int64).tobytes() + str(p).encode()).hexdigest()[:24]
    return Path(root) / f"closure_{p}_{h}.npz"


def bfs_closure(generators: Sequence[np.ndarray], p: int, cap: int = 200_000) -> FiniteGroupTable:
    """Breadth-first closure of a symmetric generating set of SL_d(F_p).

    Order: BFS layer, then frontier position, then generator position.
    ``MIFKIT_CACHE`` (a directory) memoises results per (generators, p).
    """
    gens = np.asarray(generators, dtype=np.int64) % p
    G, d, _ = gens.shape
    _check_generators(gens, p)
    cpath = _cache_path(gens, p)
    if cpath is not None and cpath.exists():
        data = np.load(cpath)
        return FiniteGroupTable(data["elements"], data["perms"], p, d, gens)

    ident = np.eye(d, dtype=np.int64)[None]
    elements = [ident]
    seen = np.sort(kernels.encode_mod(ident, p))
    frontier = ident
    total = 1
    while len(frontier):
        F = len(frontier)
        A = np.broadcast_to(gens[None], (F, G, d, d)).reshape(F * G, d, d)
        B = np.broadcast_to(frontier[:, None], (F, G, d, d)).reshape(F * G, d, d)
        prods = kernels.batch_matmul_mod(A, B, p)
        codes = kernels.encode_mod(prods, p)
        pos = np.minimum(np.searchsorted(seen, codes), len(seen) - 1)
        fresh = seen[pos] != codes
        if not fresh.any():
            break
        cand = codes[fresh]
        _, first = np.unique(cand, return_index=True)
        first.sort()
        new = prods[fresh][first]
        total += len(new)
        if total > cap:
            raise ClosureCapExceeded(f"closure exceeds cap {cap} (p={p})")
        elements.append(new)
        seen = np.sort(np.concatenate([seen, cand[first]]))
        frontier = new
    elements = np.concatenate(elements)
    table = FiniteGroupTable(elements, np.zeros((G, len(elements)), dtype=np.int64), p, d, gens)
    for s in range(G):
        prods = kernels.batch_matmul_mod(np.broadcast_to(gens[s], elements.shape), elements, p)
        table.perms[s] = table.index_of(prods)
    if (table.perms < 0).any():
        raise AssertionError("closure is not closed under the generators")
    if cpath is not None:
        cpath.parent.mkdir(parents=True, exist_ok=True)
        np.savez(cpath, elements=elements, perms=table.perms)
    return table


def is_generating(table: FiniteGroupTable) -> bool:
    return table.order == sl_order(table.d, table.p)


def order_sandwich(d: int, p: int):
    """((p-1)^dim, |SL_d(F_p)|, (p+1)^dim) with dim = d^2 - 1."""
    dim = d * d - 1
    return (p - 1) ** dim, sl_order(d, p), (p + 1) ** dim


@dataclass
class SpectralReport:
    eigenvalues: np.ndarray
    lambda2_abs: float
    gap: float
    method: str
    residual: float
    seconds: float = 0.0
    lam_max_nontrivial: float = float("nan")
    lam_min: float = float("nan")

    def is_expander(self, eps: float) -> bool:
        return self.gap >= eps


def _dense_report(perms) -> SpectralReport:
    t0 = time.perf_counter()
    M = dense_markov(perms)
    if not np.allclose(M, M.T):
        raise ValueError("Markov operator is not symmetric; generator set must be symmetric")
    lam = np.linalg.eigvalsh(M)[::-1]
    # drop one copy of the trivial eigenvalue
    rest = lam[1:]
    lam2 = float(max(abs(rest[0]), abs(rest[-1]))) if len(rest) else 0.0
    lam2 = min(lam2, 1.0)
    return SpectralReport(
        eigenvalues=lam,
        lambda2_abs=lam2,
        gap=max(0.0, 1.0 - lam2),
        method="dense",
        residual=0.0,
        seconds=time.perf_counter() - t0,
        lam_max_nontrivial=float(rest[0]) if len(rest) else 0.0,
        lam_min=float(lam[-1]),
    )


def _lanczos_report(perms, tol, seed) -> SpectralReport:
    t0 = time.perf_counter()
    n = perms.shape[1]
    res = lanczos_extremes(lambda v: kernels.markov_apply(perms, v), n, tol=tol, seed=seed)
    if not res.converged:
        log.warning("Lanczos stopped at residual %.3g > %.3g", res.residual, tol)
    lam2 = min(1.0, max(abs(res.lam_max), abs(res.lam_min)))
    return SpectralReport(
        eigenvalues=np.array([1.0, res.lam_max, res.lam_min]),
        lambda2_abs=lam2,
        gap=max(0.0, 1.0 - lam2),
        method="lanczos",
        residual=res.residual,
        seconds=time.perf_counter() - t0,
        lam_max_nontrivial=res.lam_max,
        lam_min=res.lam_min,
    )


def spectral_gap(table: FiniteGroupTable, method: str = "auto", tol: float = 1e-8, seed: int = 0) -> SpectralReport:
    """1 - |lambda_2| for the averaging operator over the generators.

    ``method``: "dense" (full symmetric eigensolve), "lanczos", or "auto"
    (dense up to 5000 vertices).
    """
    if method == "auto" or table.order <= 2:
        method = "dense" if table.order <= DENSE_LIMIT else "lanczos"
    if method == "dense":
        return _dense_report(table.perms)
    if method == "lanczos":
        return _lanczos_report(table.perms, tol, seed)
    raise ValueError(f"unknown method {method!r}")


def walk_distribution(table: FiniteGroupTable, k: int, v0: int = 0) -> np.ndarray:
    """Exact law of the k-th step of the simple walk started at vertex v0."""
    mu = np.zeros(table.order)
    mu[v0] = 1.0
    for _ in range(k):
        mu = kernels.push_forward(table.perms, mu)
    return mu


def mixing_threshold(order: int, lambda2_abs: float) -> int:
    """Smallest k with k >= -log|V| / log(1 - eps), eps = 1 - |lambda_2|."""
    if lambda2_abs <= 0:
        return 0
    if lambda2_abs >= 1:
        return math.inf
    return math.ceil(-math.log(order) / math.log(lambda2_abs))


@dataclass
class RWCheck:
    probability: float
    bound: float
    passed: bool
    k: int
    threshold: int
    asserted: bool


def rw_bound_check(
    table: FiniteGroupTable,
    U: Sequence[int],
    k: int,
    v0: int = 0,
    report: Optional[SpectralReport] = None,
    mu: Optional[np.ndarray] = None,
) -> RWCheck:
    """Exact Pr(x_k in U) against 2|U|/|V|.

    The bound is only asserted once k reaches the mixing threshold; below it
    the probability is still computed and ``asserted`` is False.
    """
    report = report or spectral_gap(table)
    thr = mixing_threshold(table.order, report.lambda2_abs)
    if mu is None:
        mu = walk_distribution(table, k, v0)
    U = np.unique(np.asarray(U, dtype=np.int64))
    prob = float(mu[U].sum()) if len(U) else 0.0
    bound = 2.0 * len(U) / table.order
    passed = prob < bound if len(U) else prob == 0.0
    return RWCheck(prob, bound, passed, k, thr, k >= thr)


@dataclass
class SubgroupMass:
    max_mass: float
    argmax_element: int
    subgroup_order: int
    proxy: str = "cyclic subgroups <g>, g ranging over all elements"


def cyclic_subgroup_masses(table: FiniteGroupTable, mu: np.ndarray):
    """mu(<g>) and |<g>| for every element g."""
    n, p, d = table.order, table.p, table.d
    els = table.elements
    mass = mu[0] + np.zeros(n)  # the identity belongs to every <g>
    orders = np.ones(n, dtype=np.int64)
    cur = els.copy()
    idx = np.arange(n)
    active = idx != 0
    while active.any():
        mass[active] += mu[idx[active]]
        orders[active] += 1
        cur_a = kernels.batch_matmul_mod(cur[active], els[active], p)
        cur[active] = cur_a
        idx[active] = table.index_of(cur_a)
        active = active & (idx != 0)
    orders[0] = 1
    return mass, orders


def subgroup_escape_mass(table: FiniteGroupTable, k: int, v0: int = 0) -> SubgroupMass:
    """max over cyclic subgroups H of mu^k(H) (a lower-bound proxy for all proper H)."""
    mu = walk_distribution(table, k, v0)
    mass, orders = cyclic_subgroup_masses(table, mu)
    proper = orders < table.order
    mass = np.where(proper, mass, -1.0)
    i = int(np.argmax(mass))
    return SubgroupMass(float(mass[i]), i, int(orders[i]))


def cycle_table(n: int) -> FiniteGroupTable:
    """Cay(Z/n, {+1, -1})."""
    i = np.arange(n)
    return FiniteGroupTable.from_perms(np.stack([(i + 1) % n, (i - 1) % n]))
