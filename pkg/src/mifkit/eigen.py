"""Lanczos for the extreme nontrivial eigenvalues of a Markov operator.

The operator is applied through a callback; the constant vector is projected
out at every step so the trivial eigenvalue 1 never enters the Krylov space.
Full reorthogonalisation keeps the Ritz values clean for the highly
degenerate spectra of Cayley graphs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class LanczosResult:
    lam_max: float
    lam_min: float
    residual: float
    iterations: int
    converged: bool


def _deflate(v):
    return v - v.mean()


def lanczos_extremes(
    apply: Callable[[np.ndarray], np.ndarray],
    n: int,
    tol: float = 1e-8,
    maxiter: int = 600,
    seed: int = 0,
    check_every: int = 8,
) -> LanczosResult:
    """Largest and smallest eigenvalue of ``apply`` restricted to the complement of constants."""
    rng = np.random.default_rng(seed)
    v = _deflate(rng.standard_normal(n))
    v /= np.linalg.norm(v)
    m = min(maxiter, n - 1)
    V = np.zeros((m + 1, n))
    alpha = np.zeros(m)
    beta = np.zeros(m)
    V[0] = v
    res = np.inf
    lam_max = lam_min = 0.0
    j = 0
    for j in range(m):
        w = _deflate(apply(V[j]))
        alpha[j] = V[j] @ w
        w -= alpha[j] * V[j]
        if j:
            w -= beta[j - 1] * V[j - 1]
        # two passes of classical Gram-Schmidt against the whole basis
        for _ in range(2):
            w -= V[: j + 1].T @ (V[: j + 1] @ w)
        beta[j] = np.linalg.norm(w)
        done = beta[j] < 1e-14
        if done or (j + 1) % check_every == 0 or j == m - 1:
            T = np.diag(alpha[: j + 1]) + np.diag(beta[:j], 1) + np.diag(beta[:j], -1)
            theta, S = np.linalg.eigh(T)
            lam_min, lam_max = theta[0], theta[-1]
            # residual of a Ritz pair = |beta_j * last component of its eigenvector|
            res = max(abs(beta[j] * S[-1, 0]), abs(beta[j] * S[-1, -1]))
            if done or res <= tol:
                return LanczosResult(float(lam_max), float(lam_min), float(res), j + 1, True)
        V[j + 1] = w / beta[j]
    return LanczosResult(float(lam_max), float(lam_min), float(res), j + 1, res <= tol)


def dense_markov(perms: np.ndarray) -> np.ndarray:
    g, n = perms.shape
    M = np.zeros((n, n))
    rows = np.arange(n)
    for s in range(g):
        np.add.at(M, (rows, perms[s]), 1.0 / g)
    return M
