"""Exact arithmetic in Z[1/N][x_1, ..., x_t].

Coefficients are Python ints or ``fractions.Fraction`` whose denominators are
products of primes dividing N; a coefficient equal to an integer is always
stored as an ``int`` so the common t = 0, integral case stays on fast paths.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Sequence, Tuple

Exponent = Tuple[int, ...]
RESERVED = "x"


class RingError(ValueError):
    """Malformed ring data (bad polynomial string, bad denominator, ...)."""


@dataclass(frozen=True)
class RingCtx:
    N: int
    t: int
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.N < 2:
            raise RingError(f"N must be >= 2, got {self.N}")
        if self.t < 0:
            raise RingError(f"t must be >= 0, got {self.t}")
        names = tuple(self.names) if self.names else tuple(f"x{i + 1}" for i in range(self.t))
        object.__setattr__(self, "names", names)
        if len(names) != self.t:
            raise RingError(f"expected {self.t} variable names, got {len(names)}")
        if len(set(names)) != len(names):
            raise RingError(f"variable names not distinct: {names}")
        if RESERVED in names:
            raise RingError(f"'{RESERVED}' is reserved for the word variable")


@dataclass(frozen=True)
class NLocInt:
    """The number a / N^k in canonical form (k minimal)."""

    a: int
    k: int
    N: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.a, self.N**self.k)


def canonical_scalar(numerator: int, exponent: int, N: int) -> NLocInt:
    """Canonical (a, k) with a / N^k equal to numerator / N^exponent and k minimal."""
    if exponent < 0:
        return canonical_scalar(numerator * N ** (-exponent), 0, N)
    if numerator == 0:
        return NLocInt(0, 0, N)
    a, k = numerator, exponent
    while k > 0 and a % N == 0:
        a //= N
        k -= 1
    return NLocInt(a, k, N)


def to_nloc(c, N: int) -> NLocInt:
    """Express a coefficient of Z[1/N] as a canonical NLocInt."""
    c = Fraction(c)
    den = c.denominator
    k = 0
    Nk = 1
    while den != 1 and Nk % den != 0:
        k += 1
        Nk *= N
        if k > 4 * den.bit_length() + 4:
            raise RingError(f"{c} does not lie in Z[1/{N}]")
    return canonical_scalar(c.numerator * (Nk // den), k, N)


def _norm(c):
    if isinstance(c, Fraction) and c.denominator == 1:
        return c.numerator
    return c


def radical(n: int) -> int:
    """Product of the distinct primes dividing n (1 for n = 1)."""
    n = abs(n)
    r, q = 1, 2
    while q * q <= n:
        if n % q == 0:
            r *= q
            while n % q == 0:
                n //= q
        q += 1
    if n > 1:
        r *= n
    return r


class RingElement:
    """Sparse polynomial: a map from exponent vectors to nonzero coefficients."""

    __slots__ = ("terms", "t", "_hash")

    def __init__(self, terms: Mapping[Exponent, object], t: int):
        clean: Dict[Exponent, object] = {}
        for e, c in terms.items():
            if c != 0:
                if len(e) != t:
                    raise RingError(f"exponent {e} has wrong length for t={t}")
                clean[tuple(e)] = _norm(c)
        self.terms = clean
        self.t = t
        self._hash = None

    @classmethod
    def _raw(cls, terms: Dict[Exponent, object], t: int) -> "RingElement":
        obj = cls.__new__(cls)
        obj.terms = terms
        obj.t = t
        obj._hash = None
        return obj

    @classmethod
    def const(cls, c, t: int) -> "RingElement":
        return cls({(0,) * t: c}, t)

    @classmethod
    def var(cls, i: int, t: int) -> "RingElement":
        e = [0] * t
        e[i] = 1
        return cls({tuple(e): 1}, t)

    # ------------------------------------------------------------- predicates
    def is_zero(self) -> bool:
        return not self.terms

    def is_one(self) -> bool:
        return len(self.terms) == 1 and self.terms.get((0,) * self.t) == 1

    def constant_value(self):
        """The value when the polynomial is constant, else None."""
        if not self.terms:
            return 0
        if len(self.terms) == 1:
            (e, c), = self.terms.items()
            if not any(e):
                return c
        return None

    @property
    def supp(self):
        return frozenset(self.terms)

    @property
    def deg(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    # ------------------------------------------------------------- arithmetic
    def _coerce(self, other) -> "RingElement":
        if isinstance(other, RingElement):
            if other.t != self.t:
                raise RingError(f"variable count mismatch: {self.t} vs {other.t}")
            return other
        if isinstance(other, (int, Fraction)):
            return RingElement.const(other, self.t)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e, 0) + c
            if v == 0:
                out.pop(e, None)
            else:
                out[e] = _norm(v)
        return RingElement._raw(out, self.t)

    __radd__ = __add__

    def __neg__(self):
        return RingElement._raw({e: -c for e, c in self.terms.items()}, self.t)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not self.terms or not other.terms:
            return RingElement._raw({}, self.t)
        if self.t == 0:
            v = _norm(self.terms[()] * other.terms[()])
            return RingElement._raw({(): v}, 0)
        out: Dict[Exponent, object] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return RingElement._raw({e: _norm(c) for e, c in out.items() if c != 0}, self.t)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise RingError("negative powers are not ring operations")
        result = RingElement.const(1, self.t)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = RingElement.const(other, self.t)
        if not isinstance(other, RingElement):
            return NotImplemented
        return self.t == other.t and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.t, frozenset(self.terms.items())))
        return self._hash

    # ------------------------------------------------------------- evaluation
    def denominators(self) -> Iterable[int]:
        for c in self.terms.values():
            if isinstance(c, Fraction):
                yield c.denominator

    def eval_mod(self, point: Sequence[int], p: int) -> int:
        """Value at ``point`` in F_p; raises ZeroDivisionError on a bad denominator."""
        total = 0
        for e, c in self.terms.items():
            if isinstance(c, Fraction):
                den = c.denominator % p
                if den == 0:
                    raise ZeroDivisionError(f"denominator {c.denominator} vanishes mod {p}")
                cm = c.numerator * pow(den, -1, p)
            else:
                cm = c
            for v, k in zip(point, e):
                if k:
                    cm = cm * pow(v, k, p)
            total += cm
        return total % p

    def reduce_mod(self, p: int) -> "RingElement":
        """Image in F_p[x], coefficients as representatives in [0, p)."""
        out = {}
        for e, c in self.terms.items():
            if isinstance(c, Fraction):
                den = c.denominator % p
                if den == 0:
                    raise ZeroDivisionError(f"denominator {c.denominator} vanishes mod {p}")
                v = c.numerator * pow(den, -1, p) % p
            else:
                v = c % p
            if v:
                out[e] = v
        return RingElement._raw(out, self.t)

    def substitute(self, values: Sequence["RingElement"]) -> "RingElement":
        """Compose with polynomials ``values`` (one per variable, in a common ring)."""
        if len(values) != self.t:
            raise RingError("wrong number of substitution values")
        t_out = values[0].t if values else 0
        acc = RingElement._raw({}, t_out)
        for e, c in self.terms.items():
            term = RingElement.const(c, t_out)
            for v, k in zip(values, e):
                if k:
                    term = term * v**k
            acc = acc + term
        return acc

    # ------------------------------------------------------------- display
    def to_string(self, names: Sequence[str] | None = None) -> str:
        if not self.terms:
            return "0"
        names = names or [f"x{i + 1}" for i in range(self.t)]
        parts = []
        for e in sorted(self.terms, key=lambda e: (sum(e), e)):
            c = self.terms[e]
            mono = "*".join(
                n if k == 1 else f"{n}^{k}" for n, k in zip(names, e) if k
            )
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if mono and mag == 1:
                body = mono
            elif mono:
                body = f"{mag}*{mono}"
            else:
                body = str(mag)
            parts.append((sign, body))
        s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            s += f" {sign} {body}"
        return s

    def __repr__(self):
        return f"RingElement({self.to_string()!r})"


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


def parse_poly(text: str, names: Sequence[str]) -> RingElement:
    """Parse a polynomial string over the variables ``names``.

    Grammar: ``poly := ["-"] term (("+" | "-") term)*``, ``term := factor ("*" factor)*``,
    ``factor := int ["/" uint] | var ["^" uint]``.
    """
    t = len(names)
    index = {n: i for i, n in enumerate(names)}
    tokens = []
    pos = 0
    text = str(text)
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        if m.end() == pos:
            break
        pos = m.end()
        num, ident, sym = m.groups()
        if num is not None:
            tokens.append(("num", int(num)))
        elif ident is not None:
            tokens.append(("id", ident))
        elif sym is not None:
            tokens.append(("sym", sym))
    if not tokens:
        raise RingError(f"empty polynomial string {text!r}")

    i = 0

    def peek():
        return tokens[i] if i < len(tokens) else (None, None)

    def take(kind, value=None):
        nonlocal i
        k, v = peek()
        if k != kind or (value is not None and v != value):
            raise RingError(f"malformed polynomial {text!r}: expected {value or kind} at token {i}")
        i += 1
        return v

    def factor():
        k, v = peek()
        if k == "num":
            take("num")
            c = Fraction(v)
            if peek() == ("sym", "/"):
                take("sym", "/")
                den = take("num")
                if den == 0:
                    raise RingError(f"zero denominator in {text!r}")
                c = Fraction(v, den)
            return RingElement.const(c, t)
        if k == "id":
            take("id")
            if v not in index:
                raise RingError(f"unknown variable {v!r} in {text!r}")
            e = 1
            if peek() == ("sym", "^"):
                take("sym", "^")
                e = take("num")
            return RingElement.var(index[v], t) ** e
        raise RingError(f"malformed polynomial {text!r}")

    def term():
        acc = factor()
        while peek() == ("sym", "*"):
            take("sym", "*")
            acc = acc * factor()
        return acc

    sign = 1
    if peek() == ("sym", "-"):
        take("sym", "-")
        sign = -1
    elif peek() == ("sym", "+"):
        take("sym", "+")
    total = term() * sign
    while i < len(tokens):
        k, v = peek()
        if k == "sym" and v in "+-":
            take("sym")
            nxt = term()
            total = total + nxt if v == "+" else total - nxt
        else:
            raise RingError(f"malformed polynomial {text!r}: unexpected {v!r}")
    return total


def lcm_denominator(elems: Iterable[RingElement]) -> int:
    out = 1
    for r in elems:
        for den in r.denominators():
            out = out * den // math.gcd(out, den)
    return out
