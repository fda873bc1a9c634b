"""Hot numeric kernels.

Every kernel has two bodies: a numba ``@njit`` loop and a vectorised numpy
path. ``USE_NUMBA`` picks one at import; both must return identical arrays
(integer kernels are exact, the float kernel agrees to rounding).

Matrices mod p are int64 arrays with entries in ``[0, p)``. Products reduce
after every term, so any ``p < 3.0e9`` is safe from overflow.
"""

import numpy as np

from ._jit import HAS_NUMBA, njit

USE_NUMBA = HAS_NUMBA

MAX_PRIME = 3_000_000_000


# ---------------------------------------------------------------- numba bodies


@njit
def _batch_matmul_mod_nb(A, B, p):
    n, d, _ = A.shape
    out = np.empty((n, d, d), dtype=np.int64)
    for s in range(n):
        for i in range(d):
            for j in range(d):
                acc = 0
                for l in range(d):
                    acc = (acc + (A[s, i, l] * B[s, l, j]) % p) % p
                out[s, i, j] = acc
    return out


@njit
def _chain_product_mod_nb(mats, p):
    m, d, _ = mats.shape
    acc = np.zeros((d, d), dtype=np.int64)
    for i in range(d):
        acc[i, i] = 1
    tmp = np.empty((d, d), dtype=np.int64)
    for s in range(m):
        for i in range(d):
            for j in range(d):
                v = 0
                for l in range(d):
                    v = (v + (acc[i, l] * mats[s, l, j]) % p) % p
                tmp[i, j] = v
        for i in range(d):
            for j in range(d):
                acc[i, j] = tmp[i, j]
    return acc


@njit
def _markov_apply_nb(perms, x):
    g, n = perms.shape
    y = np.zeros(n, dtype=np.float64)
    for s in range(g):
        for i in range(n):
            y[i] += x[perms[s, i]]
    for i in range(n):
        y[i] /= g
    return y


@njit
def _push_forward_nb(perms, mu):
    g, n = perms.shape
    out = np.zeros(n, dtype=np.float64)
    for s in range(g):
        for i in range(n):
            out[perms[s, i]] += mu[i]
    for i in range(n):
        out[i] /= g
    return out


@njit
def _count_zeros_nb(coeffs, exps, p, t):
    # exps: (m, t); enumerates F_p^t in lexicographic order
    m = coeffs.shape[0]
    point = np.zeros(t, dtype=np.int64)
    total = 1
    for _ in range(t):
        total *= p
    zeros = 0
    for _ in range(total):
        val = 0
        for a in range(m):
            term = coeffs[a]
            for v in range(t):
                e = exps[a, v]
                base = point[v]
                r = 1
                while e > 0:
                    if e & 1:
                        r = (r * base) % p
                    base = (base * base) % p
                    e >>= 1
                term = (term * r) % p
            val = (val + term) % p
        if val == 0:
            zeros += 1
        v = t - 1
        while v >= 0:
            point[v] += 1
            if point[v] < p:
                break
            point[v] = 0
            v -= 1
    return zeros


# ---------------------------------------------------------------- numpy bodies


def _batch_matmul_mod_np(A, B, p):
    d = A.shape[1]
    out = np.zeros((A.shape[0], d, d), dtype=np.int64)
    for l in range(d):
        out = (out + (A[:, :, l, None] * B[:, None, l, :]) % p) % p
    return out


def _chain_product_mod_np(mats, p):
    d = mats.shape[1]
    acc = np.eye(d, dtype=np.int64)
    for M in mats:
        nxt = np.zeros((d, d), dtype=np.int64)
        for l in range(d):
            nxt = (nxt + (acc[:, l, None] * M[None, l, :]) % p) % p
        acc = nxt
    return acc


def _markov_apply_np(perms, x):
    return x[perms].mean(axis=0)


def _push_forward_np(perms, mu):
    out = np.zeros_like(mu, dtype=np.float64)
    for row in perms:
        np.add.at(out, row, mu)
    return out / perms.shape[0]


def _count_zeros_np(coeffs, exps, p, t):
    if t == 0:
        return int(int(coeffs.sum()) % p == 0)
    grids = np.meshgrid(*[np.arange(p, dtype=np.int64)] * t, indexing="ij")
    pts = [g.ravel() for g in grids]
    val = np.zeros(p**t, dtype=np.int64)
    for c, e in zip(coeffs, exps):
        term = np.full(p**t, int(c) % p, dtype=np.int64)
        for v in range(t):
            term = (term * _powmod_vec(pts[v], int(e[v]), p)) % p
        val = (val + term) % p
    return int(np.count_nonzero(val == 0))


def _powmod_vec(base, e, p):
    r = np.ones_like(base)
    b = base % p
    while e:
        if e & 1:
            r = (r * b) % p
        b = (b * b) % p
        e >>= 1
    return r


# ---------------------------------------------------------------- public API


def _as_i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def _check_prime_size(p):
    if p >= MAX_PRIME:
        raise ValueError(f"modulus {p} too large for int64 kernels")


def batch_matmul_mod(A, B, p):
    """Stacked product ``A[s] @ B[s] mod p`` for arrays of shape (n, d, d)."""
    _check_prime_size(p)
    A, B = _as_i64(A), _as_i64(B)
    if A.shape[0] != B.shape[0]:
        A, B = np.broadcast_arrays(A, B)
        A, B = _as_i64(A), _as_i64(B)
    if USE_NUMBA:
        return _batch_matmul_mod_nb(A, B, np.int64(p))
    return _batch_matmul_mod_np(A, B, p)


def chain_product_mod(mats, p):
    """Left-to-right product of a (m, d, d) stack mod p."""
    _check_prime_size(p)
    mats = _as_i64(mats)
    if USE_NUMBA:
        return _chain_product_mod_nb(mats, np.int64(p))
    return _chain_product_mod_np(mats, p)


def markov_apply(perms, x):
    """``(M x)[i] = mean_s x[perms[s, i]]``: the averaging operator of the Cayley graph."""
    perms = _as_i64(perms)
    x = np.ascontiguousarray(x, dtype=np.float64)
    if USE_NUMBA:
        return _markov_apply_nb(perms, x)
    return _markov_apply_np(perms, x)


def push_forward(perms, mu):
    """One step of the walk law: mass at i moves to perms[s, i] with weight 1/|S|."""
    perms = _as_i64(perms)
    mu = np.ascontiguousarray(mu, dtype=np.float64)
    if USE_NUMBA:
        return _push_forward_nb(perms, mu)
    return _push_forward_np(perms, mu)


def count_zeros_grid(coeffs, exps, p, t):
    """Number of points of F_p^t where ``sum c_a x^{e_a}`` vanishes."""
    _check_prime_size(p)
    coeffs = np.array([int(c) % p for c in coeffs], dtype=np.int64)
    exps = _as_i64(exps).reshape(len(coeffs), t)
    if USE_NUMBA:
        return int(_count_zeros_nb(coeffs, exps, np.int64(p), t))
    return _count_zeros_np(coeffs, exps, p, t)


def encode_mod(mats, p):
    """Pack (n, d, d) matrices mod p into int64 codes (base-p digits, row major)."""
    n, d, _ = mats.shape
    if float(p) ** (d * d) >= 2.0**63:
        raise ValueError(f"p={p}, d={d}: packed codes overflow int64")
    flat = _as_i64(mats).reshape(n, d * d)
    weights = np.array([p**i for i in range(d * d)], dtype=np.int64)
    return flat @ weights


def decode_mod(codes, p, d):
    codes = np.asarray(codes, dtype=np.int64).copy()
    out = np.empty((codes.shape[0], d * d), dtype=np.int64)
    for i in range(d * d):
        out[:, i] = codes % p
        codes //= p
    return out.reshape(-1, d, d)
