"""Mixed words: elements of the free product Gamma * <x>.

A reduced word is an alternating tuple of syllables. A Gamma-syllable is a
``Syl`` wrapping a non-identity GroupElement that carries its generator word;
an x-syllable is a nonzero int (the exponent of x). Triviality of merged
Gamma-syllables is decided by exact matrix comparison, so reduced forms are
canonical for any linear Gamma.

Commutators are ``[u, v] = u v u^-1 v^-1`` and conjugation is ``u^a = a^-1 u a``.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .groups import GroupElement, GroupError, GroupSpec, free_reduce, invert_word, mat_inv
from .modp import Specialization, reduce_matrix


class WordError(ValueError):
    """Unparseable word, unknown generator, or a trivial word where one is not allowed."""


class Syl:
    """A Gamma-syllable: a non-identity group element with a generator word."""

    __slots__ = ("elem", "_inv", "_len")

    def __init__(self, elem: GroupElement):
        if elem.word is None:
            raise WordError("Gamma-syllables need a generator word")
        self.elem = GroupElement(elem.entries, free_reduce(elem.word), check=False)
        self._inv = None
        self._len = len(self.elem.word)

    @property
    def length(self) -> int:
        return self._len

    def inverse(self) -> "Syl":
        if self._inv is None:
            inv = Syl.__new__(Syl)
            inv.elem = mat_inv(self.elem)
            inv._len = self._len
            inv._inv = self
            self._inv = inv
        return self._inv

    def __eq__(self, other):
        return isinstance(other, Syl) and self.elem.entries == other.elem.entries

    def __hash__(self):
        return hash(self.elem)

    def __repr__(self):
        return f"Syl({self.elem.word})"


def _merge(a: Syl, b: Syl) -> Optional[Syl]:
    prod = a.elem @ b.elem
    if prod.is_identity():
        return None
    return Syl(prod)


def _push(stack: list, s) -> bool:
    """Append syllable ``s`` to a reduced stack; True when it merged with the top."""
    if isinstance(s, int):
        if s == 0:
            return True
        if stack and isinstance(stack[-1], int):
            v = stack[-1] + s
            if v:
                stack[-1] = v
            else:
                stack.pop()
            return True
    else:
        if stack and isinstance(stack[-1], Syl):
            m = _merge(stack[-1], s)
            if m is None:
                stack.pop()
            else:
                stack[-1] = m
            return True
    stack.append(s)
    return False


def _concat(a: Sequence, b: Sequence) -> tuple:
    """Reduced form of the product of two reduced syllable sequences."""
    stack = list(a)
    i = 0
    while i < len(b):
        merged = _push(stack, b[i])
        i += 1
        if not merged:
            break
        # a merge that kept the top ends the cascade: b alternates kinds
        if stack and len(stack) > 0 and i < len(b) and type(stack[-1]) is not type(b[i]):
            break
    stack.extend(b[i:])
    return tuple(stack)


class MixedWord:
    """A reduced element of Gamma * <x>."""

    __slots__ = ("syllables", "spec", "_key", "_len")

    def __init__(self, syllables: Sequence = (), spec: Optional[GroupSpec] = None, reduced: bool = False):
        if reduced:
            self.syllables = tuple(syllables)
        else:
            stack: list = []
            for s in syllables:
                if isinstance(s, GroupElement):
                    if s.is_identity():
                        continue
                    s = Syl(s)
                _push(stack, s)
            self.syllables = tuple(stack)
        self.spec = spec
        self._key = None
        self._len = None

    # -------------------------------------------------------------- basics
    @classmethod
    def x(cls, n: int = 1, spec=None) -> "MixedWord":
        return cls((n,), spec)

    @classmethod
    def const(cls, g: GroupElement, spec=None) -> "MixedWord":
        return cls((g,), spec)

    def is_trivial(self) -> bool:
        return not self.syllables

    @property
    def length(self) -> int:
        """||w||: generator-word lengths of Gamma-syllables plus |x-exponents|."""
        if self._len is None:
            self._len = sum(abs(s) if isinstance(s, int) else s.length for s in self.syllables)
        return self._len

    @property
    def x_degree(self) -> int:
        return sum(abs(s) for s in self.syllables if isinstance(s, int))

    def key(self):
        if self._key is None:
            self._key = tuple(s if isinstance(s, int) else s.elem.entries for s in self.syllables)
        return self._key

    def __eq__(self, other):
        return isinstance(other, MixedWord) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __mul__(self, other: "MixedWord") -> "MixedWord":
        return MixedWord(_concat(self.syllables, other.syllables), self.spec or other.spec, reduced=True)

    def inverse(self) -> "MixedWord":
        inv = tuple(-s if isinstance(s, int) else s.inverse() for s in reversed(self.syllables))
        return MixedWord(inv, self.spec, reduced=True)

    def __pow__(self, n: int) -> "MixedWord":
        base = self if n >= 0 else self.inverse()
        out = MixedWord((), self.spec, reduced=True)
        for _ in range(abs(n)):
            out = out * base
        return out

    def conj(self, a: "MixedWord") -> "MixedWord":
        """w^a = a^-1 w a."""
        return a.inverse() * self * a

    def __repr__(self):
        if self.spec is not None:
            return f"MixedWord({self.to_string()!r})"
        return f"MixedWord({self.syllables!r})"

    def to_string(self, spec: Optional[GroupSpec] = None) -> str:
        spec = spec or self.spec
        if spec is None:
            raise WordError("a GroupSpec is needed to name generators")
        toks = []
        for s in self.syllables:
            if isinstance(s, int):
                toks.append("x" if s == 1 else f"x^{s}")
            else:
                toks.append(spec.word_string(s.elem.word))
        return " ".join(toks)

    __str__ = to_string


def commutator(u: MixedWord, v: MixedWord) -> MixedWord:
    return u * v * u.inverse() * v.inverse()


def reduce(w) -> MixedWord:
    """Reduced form of a word or of any syllable sequence."""
    if isinstance(w, MixedWord):
        return MixedWord(w.syllables, w.spec)
    return MixedWord(w)


# ------------------------------------------------------------------ parsing

_TOKEN = re.compile(r"^([A-Za-z_][A-Za-z_0-9]*)(?:\^([+-]?\d+))?$")


def parse_word(text: str, spec: GroupSpec) -> MixedWord:
    """Parse whitespace-separated tokens ``name`` or ``name^k`` (``x`` is the variable)."""
    index = {n: i + 1 for i, n in enumerate(spec.names)}
    sylls = []
    for tok in text.split():
        m = _TOKEN.match(tok)
        if m is None:
            raise WordError(f"malformed token {tok!r}")
        name, exp = m.group(1), m.group(2)
        try:
            k = int(exp) if exp is not None else 1
        except ValueError as exc:
            raise WordError(f"malformed exponent in {tok!r}") from exc
        if name == "x":
            sylls.append(k)
        elif name in index:
            if k:
                s = index[name] if k > 0 else -index[name]
                sylls.append(spec.element([s] * abs(k)))
        else:
            raise WordError(f"unknown generator {name!r}")
    return MixedWord(sylls, spec)


# ------------------------------------------------------------------ evaluation


def evaluate(w: MixedWord, gamma: GroupElement) -> GroupElement:
    """Exact w(gamma): substitute gamma for x and multiply out."""
    if not w.syllables:
        return GroupElement.identity(gamma.d, gamma.t, () if gamma.word is not None else None)
    first = next(s for s in w.syllables if not isinstance(s, int)) if any(
        not isinstance(s, int) for s in w.syllables
    ) else None
    if first is not None and (first.elem.d != gamma.d or first.elem.t != gamma.t):
        raise GroupError("word and gamma live in different groups")
    powers: Dict[int, GroupElement] = {}
    inv = None

    def power(n):
        nonlocal inv
        if n not in powers:
            if n > 0:
                base = gamma
            else:
                if inv is None:
                    inv = mat_inv(gamma)
                base = inv
            acc = base
            for _ in range(abs(n) - 1):
                acc = acc @ base
            powers[n] = acc
        return powers[n]

    acc = None
    for s in w.syllables:
        m = power(s) if isinstance(s, int) else s.elem
        acc = m if acc is None else acc @ m
    return acc


def _syllable_mats_mod(w: MixedWord, phi: Specialization, cache: Dict) -> List:
    out = []
    for s in w.syllables:
        if isinstance(s, int):
            out.append(s)
        else:
            key = id(s)
            if key not in cache:
                cache[key] = (s, reduce_matrix(s.elem, phi))
            out.append(cache[key][1])
    return out


def _mod_powers(gamma_p: np.ndarray, gamma_inv_p: np.ndarray, exps, p: int) -> Dict[int, np.ndarray]:
    powers = {}
    need = sorted({abs(n) for n in exps})
    for sign, base in ((1, gamma_p), (-1, gamma_inv_p)):
        if not any(n * sign > 0 for n in exps):
            continue
        acc = base
        k = 1
        for n in need:
            while k < n:
                acc = kernels.batch_matmul_mod(acc[None], base[None], p)[0]
                k += 1
            powers[sign * n] = acc
    return powers


def evaluate_mod_p(w: MixedWord, gamma_p: np.ndarray, phi: Specialization, cache: Optional[Dict] = None) -> np.ndarray:
    """phi(w)(gamma_p): substitute an F_p matrix for x and multiply out mod p."""
    from .modp import inv_mod

    p = phi.p
    d = gamma_p.shape[0]
    if not w.syllables:
        return np.eye(d, dtype=np.int64)
    gamma_p = np.asarray(gamma_p, dtype=np.int64) % p
    seq = _syllable_mats_mod(w, phi, {} if cache is None else cache)
    exps = [s for s in seq if isinstance(s, int)]
    powers = _mod_powers(gamma_p, inv_mod(gamma_p, p), exps, p) if exps else {}
    stack = np.stack([powers[s] if isinstance(s, int) else s for s in seq])
    return kernels.chain_product_mod(stack, p)


def evaluate_mod_p_batch(
    w: MixedWord, gammas: np.ndarray, gamma_invs: np.ndarray, phi: Specialization, cache: Optional[Dict] = None
) -> np.ndarray:
    """Vectorised evaluate_mod_p over a (T, d, d) stack of gammas (with their inverses)."""
    p = phi.p
    T, d, _ = gammas.shape
    out = np.broadcast_to(np.eye(d, dtype=np.int64), (T, d, d)).copy()
    if not w.syllables:
        return out
    seq = _syllable_mats_mod(w, phi, {} if cache is None else cache)
    powers: Dict[int, np.ndarray] = {}
    for n in sorted({s for s in seq if isinstance(s, int)}, key=abs):
        base = gammas if n > 0 else gamma_invs
        prev = powers.get(n - 1 if n > 0 else n + 1)
        if prev is None:
            acc = base
            for _ in range(abs(n) - 1):
                acc = kernels.batch_matmul_mod(acc, base, p)
        else:
            acc = kernels.batch_matmul_mod(prev, base, p)
        powers[n] = acc
    for s in seq:
        m = powers[s] if isinstance(s, int) else np.broadcast_to(s, (T, d, d))
        out = kernels.batch_matmul_mod(out, m, p)
    return out


# ------------------------------------------------------------------ identity factory

KINDS = ("finite-normalized", "infinite-abelian-normalized", "centralized")


@dataclass(frozen=True)
class IdentitySpec:
    kind: str
    k: int = 1
    a: Optional[GroupElement] = None
    b: Optional[GroupElement] = None
    c: Optional[GroupElement] = None
    order: Optional[int] = None


def identity_factory(ispec: IdentitySpec, spec: Optional[GroupSpec] = None) -> MixedWord:
    """Mixed words that vanish on groups with a normalized solvable or centralized subgroup.

    finite-normalized            [x^k, a]^|A|
    infinite-abelian-normalized  [x^k a x^-k, a]
    centralized                  [x^k b x^-k, c]

    The group-theoretic hypotheses are the caller's responsibility.
    """
    if ispec.kind not in KINDS:
        raise WordError(f"unknown identity kind {ispec.kind!r}")
    if ispec.k < 1:
        raise WordError("k must be >= 1")
    xk = MixedWord.x(ispec.k, spec)

    def const(g, label):
        if g is None or g.is_identity():
            raise WordError(f"parameter {label} must be a nontrivial element")
        if not g.word:
            raise WordError(f"parameter {label} needs a generator word")
        return MixedWord.const(g, spec)

    if ispec.kind == "finite-normalized":
        a = const(ispec.a, "a")
        if not ispec.order or ispec.order < 1:
            raise WordError("finite-normalized identities need the order |A| >= 1")
        return commutator(xk, a) ** ispec.order
    if ispec.kind == "infinite-abelian-normalized":
        a = const(ispec.a, "a")
        return commutator(a.conj(xk.inverse()), a)
    b, c = const(ispec.b, "b"), const(ispec.c, "c")
    return commutator(b.conj(xk.inverse()), c)


# ------------------------------------------------------------------ combiner

CANDIDATE_LABELS = ("1", "s1", "s2", "x", "x^-1")


def candidate_conjugators(s1: GroupElement, s2: GroupElement, spec=None) -> List[MixedWord]:
    return [
        MixedWord((), spec),
        MixedWord.const(s1, spec),
        MixedWord.const(s2, spec),
        MixedWord.x(1, spec),
        MixedWord.x(-1, spec),
    ]


def default_sigmas(spec: GroupSpec) -> Tuple[GroupElement, GroupElement]:
    """The first two distinct nontrivial elements among the positive generators (then inverses)."""
    pool = [spec.letter(s) for s in spec.letters]
    pool = [g for g in pool if not g.is_identity()]
    order = [g for g in pool if g.word[0] > 0] + [g for g in pool if g.word[0] < 0]
    s1 = order[0]
    for g in order[1:]:
        if g != s1:
            return s1, g
    raise WordError("need two distinct nontrivial generators")


def combine_pair(w1: MixedWord, w2: MixedWord, s1: GroupElement, s2: GroupElement):
    """[w1^a1, w2^a2] for the lexicographically first (a1, a2) making it nontrivial.

    Candidates are ordered (1, s1, s2, x, x^-1). Returns (W, a1, a2) with the
    conjugators as MixedWords.
    """
    W, i, j = _combine_pair_idx(w1, w2, s1, s2)
    cands = candidate_conjugators(s1, s2, w1.spec)
    return W, cands[i], cands[j]


def _combine_pair_idx(w1, w2, s1, s2):
    if w1.is_trivial() or w2.is_trivial():
        raise WordError("combine_pair needs nontrivial words")
    if s1 == s2 or s1.is_identity() or s2.is_identity():
        raise WordError("s1, s2 must be distinct nontrivial elements")
    cands = candidate_conjugators(s1, s2, w1.spec)
    conj1 = [w1.conj(a) for a in cands]
    conj2 = [w2.conj(a) for a in cands]
    for i, j in itertools.product(range(5), range(5)):
        W = commutator(conj1[i], conj2[j])
        if not W.is_trivial():
            return W, i, j
    raise AssertionError("no nontrivial commutator among 25 candidates")


@dataclass
class CombineAudit:
    W: MixedWord
    k: int
    n: int
    rounds: int
    choices: List[List[Tuple[str, str]]] = field(default_factory=list)
    participation: List[int] = field(default_factory=list)

    @property
    def length(self) -> int:
        return self.W.length

    @property
    def bound(self) -> int:
        # n * 2m * k^2; for k = 1 the tree is empty and W = w_1, so the bound is n
        return max(self.n, self.n * 2 * self.rounds * self.k**2)

    @property
    def within_bound(self) -> bool:
        return self.length <= self.bound

    @property
    def max_participation(self) -> int:
        return max(self.participation) if self.participation else 0

    @property
    def participation_excess(self) -> List[int]:
        """Indices of words appearing more than k times in W."""
        return [i for i, c in enumerate(self.participation) if c > self.k]


def combine_all_audited(words: Sequence[MixedWord], s1: GroupElement, s2: GroupElement) -> CombineAudit:
    if not words:
        raise WordError("combine_all needs at least one word")
    if any(w.is_trivial() for w in words):
        raise WordError("combine_all needs nontrivial words")
    k = len(words)
    n = max(w.length for w in words)
    level = [(w, {i: 1}) for i, w in enumerate(words)]
    audit = CombineAudit(W=words[0], k=k, n=n, rounds=math.ceil(math.log2(k)) if k > 1 else 0)
    while len(level) > 1:
        nxt = []
        picks = []
        for a in range(0, len(level) - 1, 2):
            (u, cu), (v, cv) = level[a], level[a + 1]
            W, i, j = _combine_pair_idx(u, v, s1, s2)
            picks.append((CANDIDATE_LABELS[i], CANDIDATE_LABELS[j]))
            counts = {key: 2 * c for key, c in cu.items()}
            for key, c in cv.items():
                counts[key] = counts.get(key, 0) + 2 * c
            nxt.append((W, counts))
        if len(level) % 2:
            nxt.append(level[-1])
        audit.choices.append(picks)
        level = nxt
    W, counts = level[0]
    audit.W = W
    audit.participation = [counts.get(i, 0) for i in range(k)]
    return audit


def combine_all(words: Sequence[MixedWord], s1: GroupElement, s2: GroupElement) -> MixedWord:
    """One word W built by a binary commutator tree; W(g) != 1 forces every w_i(g) != 1."""
    return combine_all_audited(words, s1, s2).W


# ------------------------------------------------------------------ enumeration / sampling


def word_letters(spec: GroupSpec) -> List[Tuple[str, int]]:
    """The alphabet X u {x, x^-1} as (kind, value) pairs; Gamma letters first."""
    return [("g", s) for s in spec.letters] + [("x", 1), ("x", -1)]


def word_from_letters(spec: GroupSpec, letters: Sequence[Tuple[str, int]]) -> MixedWord:
    sylls = [v if kind == "x" else spec.letter(v) for kind, v in letters]
    return MixedWord(sylls, spec)


def enumerate_words(spec: GroupSpec, n: int) -> List[MixedWord]:
    """All distinct nontrivial reduced words of length <= n, in first-seen order."""
    alphabet = word_letters(spec)
    seen = {}
    for L in range(1, n + 1):
        for letters in itertools.product(alphabet, repeat=L):
            w = word_from_letters(spec, letters)
            if w.is_trivial() or w.length > n:
                continue
            seen.setdefault(w.key(), w)
    return list(seen.values())


def random_word(spec: GroupSpec, length: int, rng: np.random.Generator, require_x: bool = True) -> MixedWord:
    """A random letter string with no adjacent cancelling pair, reduced.

    With ``require_x`` the string contains at least one x-letter (so the word is
    not a constant). For a free Gamma the reduced length equals ``length``.
    """
    alphabet = word_letters(spec)
    inverse_of = {i: alphabet.index((kind, -v)) for i, (kind, v) in enumerate(alphabet)}
    for _ in range(1000):
        idx: List[int] = []
        while len(idx) < length:
            j = int(rng.integers(len(alphabet)))
            if idx and inverse_of[idx[-1]] == j:
                continue
            idx.append(j)
        if require_x and not any(alphabet[j][0] == "x" for j in idx):
            continue
        w = word_from_letters(spec, [alphabet[j] for j in idx])
        if not w.is_trivial():
            return w
    raise WordError("could not sample a nontrivial word")
