import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mifkit.freeprod import (
    IdentitySpec,
    MixedWord,
    WordError,
    combine_all,
    combine_all_audited,
    combine_pair,
    commutator,
    default_sigmas,
    enumerate_words,
    evaluate,
    evaluate_mod_p,
    evaluate_mod_p_batch,
    identity_factory,
    parse_word,
    random_word,
    reduce,
)
from mifkit.groups import GroupElement, free_pair, free_reduce
from mifkit.modp import reduce_matrix, specialize
from mifkit.selftest import central_group

FP = free_pair()


def W(text, spec=FP):
    return parse_word(text, spec)


def ints(M):
    return [[e.constant_value() for e in row] for row in M.entries]


# ---------------------------------------------------------------- parsing and reduction


def test_parse_examples():
    assert W("x x^-1").is_trivial()
    assert W("A x^2 A^-1 A x^-1") == W("A x")
    w = W("A x A^-1 x^-1")
    assert len(w.syllables) == 4 and w.length == 4
    assert W("A^0 x^0").is_trivial()
    assert W("A B x").length == 3


@pytest.mark.parametrize("bad", ["C", "x^", "A^b", "x^1.5", "A^^2"])
def test_parse_errors(bad):
    with pytest.raises(WordError):
        W(bad)


def test_reduce_examples():
    A, Ai, B = FP.letter(1), FP.letter(-1), FP.letter(2)
    assert reduce(MixedWord([A, Ai])).is_trivial()
    w = W("A x B x^-1")
    assert reduce(w) == w
    merged = MixedWord([A, 1, -1, B], FP)
    assert merged == MixedWord([A @ B], FP)
    assert merged.length == 2
    assert MixedWord([A, 1, -1, Ai]).is_trivial()


def test_to_string_roundtrip():
    w = W("A^2 x B^-1 x^-3")
    assert W(str(w)) == w
    assert str(w) == "A^2 x B^-1 x^-3"


# ---------------------------------------------------------------- evaluation


def test_evaluate_examples():
    A, B = FP.letter(1), FP.letter(2)
    assert evaluate(W("x"), A) == A
    assert evaluate(W("A x A^-1 x^-1"), A).is_identity()
    got = evaluate(W("A x A^-1 x^-1"), B)
    assert ints(got) == [[21, -8], [8, -3]]
    phi = specialize(FP, 5)
    mod = evaluate_mod_p(W("A x A^-1 x^-1"), reduce_matrix(B, phi), phi)
    assert mod.tolist() == [[1, 2], [3, 2]]
    assert evaluate_mod_p(MixedWord((), FP), reduce_matrix(B, phi), phi).tolist() == [[1, 0], [0, 1]]
    g = np.array([[2, 3], [1, 2]])
    assert evaluate_mod_p(W("x"), g, phi).tolist() == g.tolist()


words = st.lists(st.sampled_from(["A", "A^-1", "B", "B^-1", "x", "x^-1", "x^2"]), min_size=1, max_size=8).map(" ".join)
gammas = st.lists(st.sampled_from([1, -1, 2, -2]), max_size=6)


@settings(max_examples=150, deadline=None)
@given(words, words, gammas)
def test_substitution_is_homomorphism(u, v, g):
    gamma = FP.element(g)
    wu, wv = W(u), W(v)
    assert evaluate(wu * wv, gamma) == evaluate(wu, gamma) @ evaluate(wv, gamma)
    assert evaluate(wu.inverse(), gamma) == evaluate(wu, gamma).inverse()


@settings(max_examples=100, deadline=None)
@given(words, gammas, st.sampled_from([5, 7, 101]))
def test_mod_p_commutes_with_reduction(u, g, p):
    gamma = FP.element(g)
    phi = specialize(FP, p)
    w = W(u)
    exact = reduce_matrix(evaluate(w, gamma), phi)
    assert np.array_equal(evaluate_mod_p(w, reduce_matrix(gamma, phi), phi), exact)
    gp = reduce_matrix(gamma, phi)
    gi = reduce_matrix(gamma.inverse(), phi)
    batch = evaluate_mod_p_batch(w, np.stack([gp, gp]), np.stack([gi, gi]), phi)
    assert np.array_equal(batch[1], exact)


@settings(max_examples=100, deadline=None)
@given(words)
def test_reduce_idempotent(u):
    w = W(u)
    assert reduce(reduce(w)) == reduce(w)


# ---------------------------------------------------------------- identities


def test_central_identity():
    cen = central_group()
    minus_i = cen.letter(3)
    w = identity_factory(IdentitySpec("finite-normalized", k=1, a=minus_i, order=1), cen)
    assert w == commutator(MixedWord.x(1, cen), MixedWord.const(minus_i, cen))
    assert not w.is_trivial()
    for word in itertools.product(cen.letters, repeat=3):
        assert evaluate(w, cen.element(word)).is_identity()


def test_identity_formulas():
    cen = central_group()
    a = cen.letter(3)
    x2 = MixedWord.x(2, cen)
    A = MixedWord.const(a, cen)
    got = identity_factory(IdentitySpec("finite-normalized", k=2, a=a, order=2), cen)
    assert got == commutator(x2, A) ** 2
    b, c = FP.letter(1), FP.letter(2)
    got = identity_factory(IdentitySpec("centralized", k=1, b=b, c=c), FP)
    assert got == commutator(W("x A x^-1"), W("B"))
    got = identity_factory(IdentitySpec("infinite-abelian-normalized", k=1, a=b), FP)
    assert got == commutator(W("x A x^-1"), W("A"))


def test_identity_factory_errors():
    with pytest.raises(WordError):
        identity_factory(IdentitySpec("nilpotent", a=FP.letter(1)), FP)
    with pytest.raises(WordError):
        identity_factory(IdentitySpec("finite-normalized", a=FP.letter(1)), FP)  # no order
    with pytest.raises(WordError):
        identity_factory(IdentitySpec("centralized", k=0, b=FP.letter(1), c=FP.letter(2)), FP)
    with pytest.raises(WordError):
        identity_factory(IdentitySpec("centralized", b=FP.identity(), c=FP.letter(2)), FP)


# ---------------------------------------------------------------- combiner


def test_combine_pair_examples():
    s1, s2 = default_sigmas(FP)
    assert (s1, s2) == (FP.letter(1), FP.letter(2))
    Wd, a1, a2 = combine_pair(W("x"), W("A"), s1, s2)
    assert Wd == commutator(W("x"), W("A"))
    assert a1.is_trivial() and a2.is_trivial()
    Wd, a1, a2 = combine_pair(W("x"), W("x"), s1, s2)
    assert not Wd.is_trivial()
    assert Wd == commutator(W("x").conj(a1), W("x").conj(a2))
    with pytest.raises(WordError):
        combine_pair(W("x"), MixedWord((), FP), s1, s2)
    with pytest.raises(WordError):
        combine_pair(W("x"), W("A"), s1, s1)


@settings(max_examples=60, deadline=None)
@given(words, words, gammas)
def test_combine_pair_homomorphism(u, v, g):
    s1, s2 = default_sigmas(FP)
    wu, wv = W(u), W(v)
    if wu.is_trivial() or wv.is_trivial():
        return
    Wd, a1, a2 = combine_pair(wu, wv, s1, s2)
    gamma = FP.element(g)
    lhs = evaluate(Wd, gamma)
    e1, e2 = evaluate(wu.conj(a1), gamma), evaluate(wv.conj(a2), gamma)
    assert lhs == e1 @ e2 @ e1.inverse() @ e2.inverse()
    # W(g) != 1 forces both factors nontrivial
    if not lhs.is_identity():
        assert not evaluate(wu, gamma).is_identity() and not evaluate(wv, gamma).is_identity()


def test_combine_all_degenerate():
    s1, s2 = default_sigmas(FP)
    assert combine_all([W("A x")], s1, s2) == W("A x")
    pair = combine_all([W("x"), W("A")], s1, s2)
    assert pair == combine_pair(W("x"), W("A"), s1, s2)[0]
    with pytest.raises(WordError):
        combine_all([], s1, s2)


def free_group_words(n, rank=3):
    """Oracle: reduced words of length 1..n in a free group of the given rank."""
    letters = [i for r in range(1, rank + 1) for i in (r, -r)]
    out = set()
    for L in range(1, n + 1):
        for w in itertools.product(letters, repeat=L):
            r = free_reduce(w)
            if len(r) == L:
                out.add(r)
    return out


@pytest.mark.parametrize("n", [1, 2, 3])
def test_enumerate_matches_free_group(n):
    # Gamma is free on A, B, so Gamma * <x> is free of rank 3
    assert len(enumerate_words(FP, n)) == len(free_group_words(n))


def test_combine_all_bound_audit():
    s1, s2 = default_sigmas(FP)
    ws = enumerate_words(FP, 2)
    audit = combine_all_audited(ws, s1, s2)
    assert audit.k == len(ws) == 36
    assert audit.rounds == 6
    assert audit.within_bound
    assert not audit.W.is_trivial()
    assert len(audit.choices) == audit.rounds


def test_combine_all_implication_random():
    s1, s2 = default_sigmas(FP)
    rng = np.random.default_rng(7)
    ws = [random_word(FP, int(rng.integers(1, 5)), rng) for _ in range(6)]
    Wd = combine_all(ws, s1, s2)
    for _ in range(200):
        g = FP.element([int(v) for v in rng.choice([1, -1, 2, -2], size=int(rng.integers(0, 6)))])
        if not evaluate(Wd, g).is_identity():
            assert all(not evaluate(w, g).is_identity() for w in ws)


def test_random_word_has_x_and_length():
    rng = np.random.default_rng(1)
    for L in (1, 4, 9):
        w = random_word(FP, L, rng)
        assert w.x_degree >= 1
        assert w.length == L


def test_syllable_needs_word():
    with pytest.raises(WordError):
        MixedWord([GroupElement.from_ints([[1, 1], [0, 1]])])
