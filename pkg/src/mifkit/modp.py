"""Specializations R[1/r] -> F_p, matrix reduction and zero counting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from . import kernels
from .groups import GroupElement, GroupSpec
from .primes import is_prime
from .ring import RingCtx, RingElement
from .seeding import substream

DEFAULT_CAP = 10**7


class SpecializationError(ValueError):
    """A ring element or matrix cannot be specialized at the requested point."""


class CapacityError(RuntimeError):
    """An enumeration would exceed its configured cap."""


@dataclass(frozen=True)
class Specialization:
    """The homomorphism sending x_i to point[i] and reducing coefficients mod p."""

    p: int
    point: Tuple[int, ...]
    ctx: RingCtx
    localizer: RingElement

    def __post_init__(self):
        if not is_prime(self.p):
            raise SpecializationError(f"{self.p} is not prime")
        if self.ctx.N % self.p == 0:
            raise SpecializationError(f"p={self.p} divides N={self.ctx.N}")
        if len(self.point) != self.ctx.t:
            raise SpecializationError(f"point has {len(self.point)} coordinates, t={self.ctx.t}")
        object.__setattr__(self, "point", tuple(int(v) % self.p for v in self.point))
        if self.apply(self.localizer) == 0:
            raise SpecializationError(f"localizer vanishes at {self.point} mod {self.p}")

    def apply(self, r: RingElement) -> int:
        try:
            return r.eval_mod(self.point, self.p)
        except ZeroDivisionError as exc:
            raise SpecializationError(str(exc)) from exc


def count_homs(p: int, ctx: RingCtx) -> int:
    """|Hom(Z[1/N][x_1..x_t], F_p)| = p^t for p not dividing N."""
    if ctx.N % p == 0:
        raise SpecializationError(f"p={p} divides N={ctx.N}: Hom is empty")
    return p**ctx.t


def specialize(spec: GroupSpec, p: int, point: Sequence[int] = ()) -> Specialization:
    return Specialization(p, tuple(point), spec.ctx, spec.localizer)


def sample_hom(p: int, spec: GroupSpec, seed: int, stream: int = 0) -> Specialization:
    """Uniform point of {a in F_p^t : r(a) != 0} by rejection sampling.

    After 64*t rejected draws the valid set is enumerated (when small enough)
    and sampled directly, so the law stays uniform.
    """
    ctx, r = spec.ctx, spec.localizer
    if ctx.N % p == 0:
        raise SpecializationError(f"p={p} divides N={ctx.N}")
    t = ctx.t
    rng = substream(seed, stream)
    if t == 0:
        return Specialization(p, (), ctx, r)
    for _ in range(64 * t):
        point = tuple(int(v) for v in rng.integers(0, p, size=t))
        if r.eval_mod(point, p) != 0:
            return Specialization(p, point, ctx, r)
    if p**t > DEFAULT_CAP:
        raise SpecializationError(f"rejection sampling failed for p={p} and F_p^t is too large to enumerate")
    valid = [a for a in np.ndindex(*(p,) * t) if r.eval_mod(a, p) != 0]
    if not valid:
        raise SpecializationError(f"localizer vanishes on all of F_{p}^{t}")
    return Specialization(p, tuple(int(v) for v in valid[rng.integers(len(valid))]), ctx, r)


def reduce_matrix(M: GroupElement, phi: Specialization) -> np.ndarray:
    """Entrywise image of M under phi, as an int64 array with entries in [0, p)."""
    out = np.empty((M.d, M.d), dtype=np.int64)
    for i, row in enumerate(M.entries):
        for j, e in enumerate(row):
            out[i, j] = phi.apply(e)
    return out


def det_mod(A: np.ndarray, p: int) -> int:
    """Determinant mod p by Gaussian elimination."""
    A = [[int(v) % p for v in row] for row in A]
    d = len(A)
    det = 1
    for c in range(d):
        piv = next((r for r in range(c, d) if A[r][c]), None)
        if piv is None:
            return 0
        if piv != c:
            A[c], A[piv] = A[piv], A[c]
            det = -det
        det = det * A[c][c] % p
        inv = pow(A[c][c], -1, p)
        for r in range(c + 1, d):
            f = A[r][c] * inv % p
            if f:
                A[r] = [(a - f * b) % p for a, b in zip(A[r], A[c])]
    return det % p


def inv_mod(A: np.ndarray, p: int) -> np.ndarray:
    """Inverse of an invertible matrix mod p (Gauss-Jordan)."""
    d = A.shape[0]
    M = [[int(v) % p for v in row] + [int(i == j) for j in range(d)] for i, row in enumerate(A)]
    for c in range(d):
        piv = next((r for r in range(c, d) if M[r][c]), None)
        if piv is None:
            raise SpecializationError("matrix is singular mod p")
        M[c], M[piv] = M[piv], M[c]
        inv = pow(M[c][c], -1, p)
        M[c] = [v * inv % p for v in M[c]]
        for r in range(d):
            if r != c and M[r][c]:
                f = M[r][c]
                M[r] = [(a - f * b) % p for a, b in zip(M[r], M[c])]
    return np.array([row[d:] for row in M], dtype=np.int64)


def is_identity_mod(A: np.ndarray) -> bool:
    return bool(np.array_equal(A, np.eye(A.shape[-1], dtype=A.dtype)))


def count_zeros(s: RingElement, p: int, cap: int = DEFAULT_CAP) -> int:
    """Exact number of a in F_p^t with s(a) = 0."""
    if not is_prime(p):
        raise SpecializationError(f"{p} is not prime")
    t = s.t
    if p**t > cap:
        raise CapacityError(f"p^t = {p}^{t} exceeds enumeration cap {cap}")
    sp = s.reduce_mod(p)
    if sp.is_zero():
        raise SpecializationError(f"s vanishes identically mod {p}")
    exps = np.array(list(sp.terms), dtype=np.int64).reshape(len(sp.terms), t)
    coeffs = np.array([int(c) for c in sp.terms.values()], dtype=np.int64)
    return kernels.count_zeros_grid(coeffs, exps, p, t)


def dkl_bound(s: RingElement, p: int) -> float:
    """deg(s) * p^(t-1): the point-count bound for the hypersurface s = 0."""
    return s.reduce_mod(p).deg * float(p) ** (s.t - 1)
