import math
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mifkit.freeprod import MixedWord, WordError, evaluate, parse_word
from mifkit.groups import family, free_pair, free_reduce
from mifkit.walk import (
    WalkConfig,
    decay_curve,
    fit_log_linear,
    sample_walk,
    walk_letters,
    walk_steps,
    wilson,
)

FP = free_pair()
COMM = parse_word("A x A^-1 x^-1", FP)


def test_k0_is_identity():
    g = sample_walk(FP, WalkConfig(0, seed=3))
    assert g.is_identity() and g.word == ()


def test_k1_is_uniform_over_generators():
    n = 10_000
    counts = Counter(walk_letters(FP, WalkConfig(1, seed=42), i)[0] for i in range(n))
    assert set(counts) == set(FP.letters)
    q = 1 / len(FP.letters)
    sigma = math.sqrt(n * q * (1 - q))
    for c in counts.values():
        assert abs(c - n * q) < 4 * sigma


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 30), st.integers(0, 2**64 - 1), st.integers(0, 1000))
def test_trace_reproduces_matrix(k, seed, trial):
    cfg = WalkConfig(k, seed=seed)
    letters = walk_letters(FP, cfg, trial)
    g = sample_walk(FP, cfg, trial)
    assert g.word == tuple(letters)  # the raw trace
    assert g.length == len(free_reduce(letters))
    assert FP.element(letters) == g
    assert walk_letters(FP, cfg, trial) == letters  # deterministic


def test_hold_steps():
    cfg = WalkConfig(200, seed=5, hold=0.5)
    steps = walk_steps(FP, cfg)
    assert len(steps) == 200
    held = steps.count(0)
    assert 60 < held < 140
    assert walk_letters(FP, cfg) == [s for s in steps if s]


def test_walk_config_validation():
    for bad in (dict(steps=-1), dict(steps=1, trials=0), dict(steps=1, hold=1.0)):
        with pytest.raises(ValueError):
            WalkConfig(**bad)


def test_wilson_interval():
    lo, hi = wilson(0, 100)
    assert lo == pytest.approx(0.0, abs=1e-12) and 0 < hi < 0.05
    lo, hi = wilson(50, 100)
    assert lo < 0.5 < hi
    assert wilson(0, 0) == (0.0, 1.0)


def test_fit_log_linear_exact():
    ks = [1, 2, 3, 4]
    slope, intercept, r2 = fit_log_linear(ks, [0.5**k for k in ks])
    assert slope == pytest.approx(math.log(0.5))
    assert intercept == pytest.approx(0.0, abs=1e-12)
    assert r2 == pytest.approx(1.0)


def test_decay_k0_and_trivial_word():
    curve = decay_curve(FP, COMM, [0], 50, seed=1)
    assert curve.rows[0].p_hat == 1.0
    with pytest.raises(WordError):
        decay_curve(FP, MixedWord((), FP), [0, 1], 10, seed=1)
    with pytest.raises(ValueError):
        decay_curve(FP, COMM, [], 10, seed=1)


@pytest.mark.parametrize("hold", [0.0, 0.3])
def test_decay_matches_exact_evaluation(hold):
    # oracle: evaluate w at every exact prefix
    ks, trials, seed = [0, 1, 2, 3, 5, 8], 300, 11
    curve = decay_curve(FP, COMM, ks, trials, seed, hold=hold)
    cfg = WalkConfig(max(ks), 1, seed, hold)
    for row in curve.rows:
        hits = 0
        for i in range(trials):
            steps = walk_steps(FP, cfg, i)[: row.k]
            g = FP.element([s for s in steps if s])
            hits += evaluate(COMM, g).is_identity()
        assert row.hits == hits
    assert curve.false_identities == 0
    assert 10**9 <= curve.prime <= 2 * 10**9


def test_decay_on_family():
    fam = family()
    w = parse_word("A x A^-1 x^-1", fam)
    curve = decay_curve(fam, w, [0, 2, 4], 100, seed=2)
    assert [r.k for r in curve.rows] == [0, 2, 4]
    assert curve.rows[0].p_hat == 1.0
