from __future__ import annotations

import random
from fractions import Fraction

import pytest

from oddcf.cf import CFWord, evaluate, expand, orbit
from oddcf.errors import PatternMismatch, PoleError
from oddcf.numeric import GOLDEN_SMALL, compare
from oddcf.rewrite import (
    GeneralWord,
    insert_minus,
    insert_plus,
    same_value,
    same_value_at,
    shift_block,
    singularize_minus,
    singularize_plus,
)
from wordgen import COMPOSITES, PRIMITIVES, apply, random_case, random_tail


def _gw(head, *terms):
    return GeneralWord(head, terms)


# --- primitive moves -----------------------------------------------------------

def test_singularize_plus_example():
    before = _gw(0, (1, 1), (1, 1), (1, 1))
    after = singularize_plus(before, 1)
    assert after == _gw(0, (1, 2), (-1, 2))
    assert evaluate(before) == evaluate(after) == Fraction(2, 3)


def test_singularize_plus_general_shape():
    after = singularize_plus(_gw(0, (1, 5), (1, 1), (1, 7), (-1, 3)), 1)
    assert after == _gw(0, (1, 6), (-1, 8), (-1, 3))


def test_singularize_plus_rejects_three():
    with pytest.raises(PatternMismatch):
        singularize_plus(_gw(0, (1, 3), (1, 1)), 0)


def test_insert_minus_example():
    before = _gw(0, (-1, 3))
    after = insert_minus(before, 0)
    assert after == _gw(1, (-1, 1), (-1, 4))
    assert evaluate(before) == evaluate(after) == Fraction(-1, 3)
    with pytest.raises(PatternMismatch):
        insert_minus(_gw(0, (-1, 1)), 0)


def test_singularize_minus_example():
    before = _gw(0, (1, 1), (-1, 3))
    after = singularize_minus(before, 0)
    assert after == _gw(1, (1, 2))
    assert evaluate(before) == evaluate(after) == Fraction(3, 2)
    with pytest.raises(PatternMismatch):
        singularize_minus(_gw(0, (1, 1), (-1, 1)), 0)


def test_insert_plus_example():
    before = _gw(0, (1, 3))
    after = insert_plus(before, 0)
    assert after == _gw(1, (-1, 1), (1, 2))
    assert evaluate(before) == evaluate(after) == Fraction(1, 3)
    with pytest.raises(PatternMismatch):
        insert_plus(_gw(0, (1, 2)), 0)


def test_missing_slot():
    with pytest.raises(PatternMismatch):
        singularize_plus(_gw(0, (1, 1)), 0)
    with pytest.raises(PatternMismatch):
        insert_plus(_gw(0, (1, 3)), 4)


# --- composite moves -----------------------------------------------------------

def test_ge_g_example():
    before = CFWord(0, ((1, 3), (1, 1), (1, 5)))
    after = shift_block(before, 1, "ge_g")
    assert after.digits == ((1, 5), (-1, 1), (-1, 7))
    assert evaluate(before) == evaluate(after) == Fraction(6, 23)


def test_gt_one_example():
    before = CFWord(0, ((1, 3), (1, 1), (-1, 7)))
    after = shift_block(before, 1, "gt_one")
    assert after.digits == ((1, 5), (-1, 1), (1, 5))
    assert same_value(before, after)


def test_lt_g_example():
    before = CFWord(0, ((1, 1), (1, 3), (-1, 1), (-1, 9), (1, 3)))
    after = shift_block(before, 1, "lt_g")
    assert after.digits == ((1, 3), (-1, 1), (-1, 3), (1, 7), (1, 3))
    assert same_value(before, after)


def test_composite_outputs_are_odd():
    rng = random.Random(3)
    for move in COMPOSITES:
        for _ in range(200):
            word, slot = random_case(rng, move)
            out = shift_block(word, slot, move)
            assert all(a % 2 == 1 for _, a in out.digits)


def test_unknown_regime():
    with pytest.raises(ValueError):
        shift_block(CFWord(0, ((1, 1), (1, 1))), 0, "gt_g")


def test_composite_pattern_mismatch():
    with pytest.raises(PatternMismatch):
        shift_block(CFWord(0, ((1, 3), (1, 1))), 0, "ge_g")
    with pytest.raises(PatternMismatch):
        shift_block(CFWord(0, ((1, 1), (-1, 1))), 0, "gt_one")


@pytest.mark.parametrize("move", list(PRIMITIVES) + list(COMPOSITES))
def test_value_preservation(move):
    rng = random.Random(hash(move) % 1000)
    for _ in range(500):
        word, slot = random_case(rng, move)
        after = apply(move, word, slot)
        assert same_value(word, after)
        tails = [random_tail(rng) for _ in range(3)]
        try:
            ok = same_value_at(word, after, tails)
        except PoleError:
            continue
        assert ok


def test_certificate_detects_change():
    assert not same_value(_gw(0, (1, 3)), _gw(0, (1, 5)))


# --- the alpha = 1 expansion rewritten into the alpha-expansion ---------------------

def _rewrite_from_one(alpha, x):
    word = expand(1, x)
    for n, t in enumerate(orbit(1, x)[:-1]):
        if compare(t, alpha) >= 0:
            word = shift_block(word, n, "ge_g")
    return word


@pytest.mark.parametrize("alpha", [GOLDEN_SMALL, Fraction(7, 10), Fraction(9, 10)])
def test_ge_g_converts_expansions(alpha):
    rng = random.Random(11)
    for _ in range(150):
        q = rng.randint(2, 10**4)
        x = Fraction(rng.randint(-q, q - 1), q)
        word = _rewrite_from_one(alpha, x)
        # a head of 2 means x itself lay in [alpha, 1)
        target = expand(alpha, x - word.head)
        assert word.digits == target.digits
