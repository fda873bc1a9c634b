"""Matrices of determinant 1 over Z[1/N][x_1..x_t] and group-spec documents."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .ring import (
    RESERVED,
    RingCtx,
    RingElement,
    RingError,
    lcm_denominator,
    parse_poly,
    radical,
)

Word = Tuple[int, ...]


class GroupError(ValueError):
    """Invalid group data: bad determinant, dimension mismatch, asymmetric X, ..."""


def free_reduce(word: Sequence[int]) -> Word:
    """Cancel adjacent ``i, -i`` letters."""
    out: List[int] = []
    for g in word:
        if out and out[-1] == -g:
            out.pop()
        else:
            out.append(g)
    return tuple(out)


def invert_word(word: Sequence[int]) -> Word:
    return tuple(-g for g in reversed(word))


def determinant(rows) -> RingElement:
    d = len(rows)
    if d == 1:
        return rows[0][0]
    if d == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = None
    for j in range(d):
        a = rows[0][j]
        if a.is_zero():
            continue
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        term = a * determinant(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    return total if total is not None else rows[0][0] * 0


def adjugate(rows):
    d = len(rows)
    if d == 2:
        (a, b), (c, e) = rows
        return ((e, -b), (-c, a))
    out = []
    for i in range(d):
        row = []
        for j in range(d):
            minor = [r[:i] + r[i + 1:] for k, r in enumerate(rows) if k != j]
            m = determinant(minor)
            row.append(-m if (i + j) % 2 else m)
        out.append(tuple(row))
    return tuple(out)


class GroupElement:
    """A d x d matrix over the ring with determinant 1, plus the generator word that built it.

    ``word is None`` marks an element built from raw entries; asking for its
    length raises instead of pretending it is 0.
    """

    __slots__ = ("entries", "d", "t", "word", "_hash")

    def __init__(self, entries, word: Optional[Sequence[int]] = None, check: bool = True):
        rows = tuple(tuple(r) for r in entries)
        d = len(rows)
        if d == 0 or any(len(r) != d for r in rows):
            raise GroupError("entries must form a nonempty square matrix")
        t = rows[0][0].t
        if any(e.t != t for r in rows for e in r):
            raise GroupError("entries live in different rings")
        self.entries = rows
        self.d = d
        self.t = t
        self.word = None if word is None else tuple(word)
        self._hash = None
        if check:
            det = determinant(rows)
            if not det.is_one():
                raise GroupError(f"determinant is {det.to_string()}, not 1")

    @classmethod
    def identity(cls, d: int, t: int, word: Optional[Sequence[int]] = ()) -> "GroupElement":
        one, zero = RingElement.const(1, t), RingElement.const(0, t)
        rows = tuple(tuple(one if i == j else zero for j in range(d)) for i in range(d))
        return cls(rows, word, check=False)

    @classmethod
    def from_ints(cls, rows, t: int = 0, word=None) -> "GroupElement":
        return cls([[RingElement.const(v, t) for v in r] for r in rows], word)

    @property
    def length(self) -> int:
        """Length of the freely reduced generator word."""
        if self.word is None:
            raise GroupError("element has no generator word; its length is unknown")
        return len(free_reduce(self.word))

    def is_identity(self) -> bool:
        for i, r in enumerate(self.entries):
            for j, e in enumerate(r):
                if i == j:
                    if not e.is_one():
                        return False
                elif not e.is_zero():
                    return False
        return True

    def key(self):
        return self.entries

    def __eq__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        return self.entries == other.entries

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.entries)
        return self._hash

    def __matmul__(self, other):
        return mat_mul(self, other)

    def inverse(self):
        return mat_inv(self)

    def to_lists(self, names=None):
        return [[e.to_string(names) for e in r] for r in self.entries]

    def __repr__(self):
        return f"GroupElement({self.to_lists()}, word={self.word})"


def mat_mul(A: GroupElement, B: GroupElement) -> GroupElement:
    """Exact product; the word is the concatenation of the two words."""
    if A.d != B.d or A.t != B.t:
        raise GroupError(f"dimension mismatch: {A.d}x{A.d}/t={A.t} vs {B.d}x{B.d}/t={B.t}")
    d = A.d
    cols = list(zip(*B.entries))
    rows = []
    for r in A.entries:
        row = []
        for c in cols:
            acc = r[0] * c[0]
            for k in range(1, d):
                acc = acc + r[k] * c[k]
            row.append(acc)
        rows.append(tuple(row))
    word = None if A.word is None or B.word is None else A.word + B.word
    return GroupElement(rows, word, check=False)


def mat_inv(A: GroupElement) -> GroupElement:
    """Inverse of a determinant-1 matrix, i.e. its adjugate."""
    if not determinant(A.entries).is_one():
        raise GroupError("mat_inv requires determinant 1")
    word = None if A.word is None else invert_word(A.word)
    return GroupElement(adjugate(A.entries), word, check=False)


def commutator(a: GroupElement, b: GroupElement) -> GroupElement:
    return a @ b @ a.inverse() @ b.inverse()


@dataclass
class GroupSpec:
    """Generators of a subgroup of SL_d(R[1/r]) with their inverses.

    Signed letter ``+(i+1)`` is generator ``i`` and ``-(i+1)`` its inverse; the
    symmetric set X lists them as ``[g1, g1^-1, g2, g2^-1, ...]``.
    """

    ctx: RingCtx
    d: int
    names: Tuple[str, ...]
    generators: Tuple[GroupElement, ...]
    inverses: Tuple[GroupElement, ...]
    localizer: RingElement
    density_asserted: bool = True
    source: Dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.d < 2:
            raise GroupError("d must be >= 2")
        for name, g, h in zip(self.names, self.generators, self.inverses):
            if not (g @ h).is_identity() or not (h @ g).is_identity():
                raise GroupError(f"asymmetric generator set: {name} and its listed inverse")
        if self.localizer.is_zero():
            raise GroupError("localizer must be nonzero")

    @property
    def letters(self) -> Tuple[int, ...]:
        out = []
        for i in range(len(self.generators)):
            out += [i + 1, -(i + 1)]
        return tuple(out)

    @property
    def X(self) -> List[GroupElement]:
        return [self.letter(s) for s in self.letters]

    def letter(self, s: int) -> GroupElement:
        i = abs(s) - 1
        g = self.generators[i] if s > 0 else self.inverses[i]
        return GroupElement(g.entries, (s,), check=False)

    def letter_name(self, s: int) -> str:
        name = self.names[abs(s) - 1]
        return name if s > 0 else f"{name}^-1"

    def identity(self) -> GroupElement:
        return GroupElement.identity(self.d, self.ctx.t)

    def element(self, word: Sequence[int]) -> GroupElement:
        """Multiply out a signed-letter word."""
        acc = self.identity()
        for s in word:
            acc = acc @ self.letter(s)
        return acc

    def word_string(self, word: Sequence[int]) -> str:
        """Render a letter word as ``A^2 B^-1`` style tokens."""
        toks = []
        word = list(word)
        i = 0
        while i < len(word):
            j = i
            while j < len(word) and word[j] == word[i]:
                j += 1
            run = j - i
            name = self.names[abs(word[i]) - 1]
            exp = run if word[i] > 0 else -run
            toks.append(name if exp == 1 else f"{name}^{exp}")
            i = j
        return " ".join(toks)

    def all_denominators(self) -> int:
        return lcm_denominator(
            e for g in self.generators + self.inverses for r in g.entries for e in r
        )


def _prime_support_ok(den: int, N: int) -> bool:
    r = radical(den)
    return r == 1 or N % r == 0


def parse_group_spec(doc) -> GroupSpec:
    """Build a validated GroupSpec from a JSON-compatible document.

    Fields: ``N``, ``t``, ``vars``, ``d``, ``generators`` (name -> d x d array of
    polynomial strings); optional ``inverses`` (same shape, validated),
    ``localizer`` (polynomial string, default 1) and ``density_asserted``.
    """
    if isinstance(doc, (str, Path)):
        text = Path(doc).read_text() if Path(str(doc)).suffix == ".json" else str(doc)
        doc = json.loads(text)
    try:
        N_in = int(doc.get("N", 2))
        t = int(doc.get("t", 0))
        names = tuple(doc.get("vars", [f"x{i + 1}" for i in range(t)]))
        d = int(doc["d"])
        gens_doc = doc["generators"]
    except (KeyError, TypeError) as exc:
        raise GroupError(f"malformed group spec: {exc}") from exc
    if N_in < 2:
        N_in = 2
    # validates t / names / reserved identifier
    RingCtx(N_in, t, names)
    if not gens_doc:
        raise GroupError("no generators")

    def matrix(name, rows):
        if len(rows) != d or any(len(r) != d for r in rows):
            raise GroupError(f"generator {name} is not {d}x{d}")
        return [[parse_poly(str(v), names) for v in r] for r in rows]

    gen_names = []
    raw = []
    for name, rows in gens_doc.items():
        if name == RESERVED:
            raise GroupError(f"generator name '{RESERVED}' is reserved for the word variable")
        if not name.isidentifier():
            raise GroupError(f"bad generator name {name!r}")
        gen_names.append(name)
        raw.append(matrix(name, rows))

    den = lcm_denominator(e for m in raw for r in m for e in r)
    if not _prime_support_ok(den, N_in):
        raise RingError(f"denominator {den} is not a power of N={N_in}")
    N = radical(den) if den > 1 else 2
    ctx = RingCtx(N, t, names)

    gens = []
    for name, m in zip(gen_names, raw):
        try:
            gens.append(GroupElement(m))
        except GroupError as exc:
            raise GroupError(f"generator {name}: {exc}") from exc

    inv_doc = doc.get("inverses") or {}
    invs = []
    for name, g in zip(gen_names, gens):
        if name in inv_doc:
            invs.append(GroupElement(matrix(name, inv_doc[name]), check=False))
        else:
            invs.append(GroupElement(adjugate(g.entries), check=False))
    extra = set(inv_doc) - set(gen_names)
    if extra:
        raise GroupError(f"asymmetric generator set: inverses for unknown {sorted(extra)}")

    loc = parse_poly(str(doc.get("localizer", "1")), names)
    spec = GroupSpec(
        ctx=ctx,
        d=d,
        names=tuple(gen_names),
        generators=tuple(GroupElement(g.entries, (i + 1,), check=False) for i, g in enumerate(gens)),
        inverses=tuple(GroupElement(h.entries, (-(i + 1),), check=False) for i, h in enumerate(invs)),
        localizer=loc,
        density_asserted=bool(doc.get("density_asserted", True)),
        source=dict(doc),
    )
    return spec


def load_group(path) -> GroupSpec:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"group file not found: {path}")
    return parse_group_spec(json.loads(path.read_text()))


FREE_PAIR = {
    "N": 2,
    "t": 0,
    "vars": [],
    "d": 2,
    "generators": {"A": [["1", "2"], ["0", "1"]], "B": [["1", "0"], ["2", "1"]]},
}

FAMILY = {
    "N": 2,
    "t": 1,
    "vars": ["x1"],
    "d": 2,
    "generators": {"A": [["1", "x1"], ["0", "1"]], "B": [["1", "0"], ["2", "1"]]},
}


def free_pair() -> GroupSpec:
    """Sanov's pair <[[1,2],[0,1]], [[1,0],[2,1]]>, free of rank 2 and Zariski dense in SL_2."""
    return parse_group_spec(FREE_PAIR)


def family() -> GroupSpec:
    """The one-parameter family A_s = [[1,s],[0,1]], B = [[1,0],[2,1]]."""
    return parse_group_spec(FAMILY)
