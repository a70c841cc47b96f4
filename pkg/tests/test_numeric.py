from __future__ import annotations

import math
from fractions import Fraction

import gmpy2
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oddcf.errors import MixedFieldError, PoleError
from oddcf.numeric import (
    ALPHA_13,
    GOLDEN_BIG,
    GOLDEN_SMALL,
    GOLDEN_SMALL_SQ,
    IDENTITY,
    Mat2,
    QuadExt,
    R,
    S,
    VMat,
    compare,
    digit_matrix,
    floor_exact,
    floor_sum,
    format_scalar,
    make_float,
    mat_mul,
    mobius_apply,
    parse_scalar,
    sign,
    to_float,
)

g, G = GOLDEN_SMALL, GOLDEN_BIG

rationals = st.fractions(min_value=-50, max_value=50, max_denominator=10**6)
digit_mats = st.builds(digit_matrix, st.sampled_from([-1, 1]), st.integers(0, 20).map(lambda k: 2 * k + 1))


# --- QuadExt ---------------------------------------------------------------

def test_quadext_canonical_form():
    z = QuadExt(2, 4, -6, 5)
    assert (z.a, z.b, z.c) == (-1, -2, 3)
    assert QuadExt.make(3, 0, 6) == Fraction(1, 2)


def test_golden_identities():
    assert g * G == 1
    assert G - 2 == -GOLDEN_SMALL_SQ
    assert 1 / (1 + G) == GOLDEN_SMALL_SQ
    assert (1 - g) / g == g
    assert 2 - g == 1 + g * g


def test_mixed_field_arithmetic_is_refused():
    with pytest.raises(MixedFieldError):
        g + ALPHA_13


def test_mixed_field_compare_escalates():
    assert compare(ALPHA_13, g) < 0
    assert compare(g, ALPHA_13) > 0
    assert compare(ALPHA_13, Fraction(43, 100)) > 0


def test_quadext_division_by_zero():
    with pytest.raises(PoleError):
        QuadExt(1, 1, 0)


@given(st.integers(-10**6, 10**6), st.integers(-10**6, 10**6).filter(bool), st.integers(1, 10**4),
       st.sampled_from([5, 13]))
@settings(max_examples=300, deadline=None)
def test_sign_and_floor_match_high_precision(a, b, c, d):
    z = QuadExt(a, b, c, d)
    with gmpy2.context(precision=512):
        ref = (gmpy2.mpfr(a) + b * gmpy2.sqrt(gmpy2.mpfr(d))) / c
    assert sign(z) == gmpy2.sign(ref)
    assert floor_exact(z) == int(gmpy2.floor(ref))


# --- floor -----------------------------------------------------------------

def test_floor_examples():
    assert floor_exact(Fraction(3, 2)) == 1
    assert floor_exact(G) == 1
    assert floor_exact(ALPHA_13) == 0
    assert floor_exact(Fraction(-1, 3)) == -1


def test_floor_sum_mixed_fields():
    assert floor_sum(g, ALPHA_13) == 1
    assert floor_sum(-g, -ALPHA_13) == -2


@given(rationals)
@settings(max_examples=500, deadline=None)
def test_floor_matches_float_floor_away_from_integers(z):
    if abs(z - round(z)) < Fraction(1, 10**9):
        return
    assert floor_exact(z) == math.floor(float(z))
    assert floor_exact(make_float(z, 256)) == math.floor(z)


# --- Mat2 ------------------------------------------------------------------

def test_matrix_examples():
    assert mobius_apply(R, Fraction(1, 3)) == Fraction(4, 3)
    assert mobius_apply(Mat2(-1, 0, 2, 1), Fraction(-2, 5)) == 2
    assert mobius_apply(S, G) == g
    SR2S = mat_mul(mat_mul(S, mat_mul(R, R)), S)
    assert SR2S == Mat2(1, 0, 2, 1)
    assert mat_mul(VMat, SR2S) == Mat2(-1, 0, 2, 1)
    assert mat_mul(IDENTITY, SR2S) == SR2S


def test_mobius_apply_int_stays_exact():
    assert isinstance(mobius_apply(S, 3), Fraction)


def test_mobius_pole():
    with pytest.raises(PoleError):
        mobius_apply(Mat2(1, 0, 1, 1), Fraction(-1))


@given(st.sampled_from([-1, 1]), st.integers(0, 50))
def test_digit_matrix_determinant(eps, k):
    assert digit_matrix(eps, 2 * k + 1).det == -eps


@given(st.lists(digit_mats, min_size=1, max_size=20), st.lists(digit_mats, min_size=1, max_size=20), rationals)
@settings(max_examples=300, deadline=None)
def test_mobius_action_is_compatible_with_products(m1s, m2s, z):
    m1 = m2 = IDENTITY
    for m in m1s:
        m1 = mat_mul(m1, m)
    for m in m2s:
        m2 = mat_mul(m2, m)
    assert abs(m1.det) == 1 and abs(m2.det) == 1
    try:
        inner = mobius_apply(m2, z)
        lhs = mobius_apply(m1, inner)
    except PoleError:
        return
    assert mobius_apply(mat_mul(m1, m2), z) == lhs


# --- text forms --------------------------------------------------------------

@pytest.mark.parametrize("text,value", [
    ("-5/3", Fraction(-5, 3)),
    ("1.3", Fraction(13, 10)),
    ("(1+1*sqrt(5))/2", G),
    ("(-1+1*sqrt(13))/6", ALPHA_13),
    ("g", g),
    ("G", G),
    ("7", Fraction(7)),
])
def test_parse_exact(text, value):
    assert parse_scalar(text) == value


@pytest.mark.parametrize("z", [Fraction(-5, 3), Fraction(4), G, ALPHA_13, -GOLDEN_SMALL_SQ])
def test_format_round_trip(z):
    assert parse_scalar(format_scalar(z)) == z


def test_format_examples():
    assert format_scalar(Fraction(-5, 3)) == "-5/3"
    assert format_scalar(G) == "(1+1*sqrt(5))/2"


def test_float_round_trip_keeps_precision():
    x = make_float(Fraction(1, 3), 200)
    text = format_scalar(x)
    assert text.endswith("@200")
    y = parse_scalar(text)
    assert y.precision == 200 and y == x


def test_parse_rejects_junk():
    with pytest.raises(ValueError):
        parse_scalar("one third")


def test_to_float():
    assert to_float(G) == pytest.approx((1 + 5 ** 0.5) / 2, rel=1e-15)
