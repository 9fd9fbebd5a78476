from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ssalg.scalar import (
    GaussianRational,
    QI,
    QQ,
    ScalarError,
    conj,
    parse_scalar,
    render_scalar,
)

rationals = st.fractions(min_value=-100, max_value=100, max_denominator=10**4)
gaussians = st.builds(GaussianRational, rationals, rationals)


def test_parse_fraction():
    assert parse_scalar("1/2", "rational") == Fraction(1, 2)


def test_parse_unit_imaginary():
    assert parse_scalar("i") == GaussianRational(0, 1)
    assert parse_scalar("-i") == GaussianRational(0, -1)


def test_parse_mixed():
    # hand-check: "2-3/4i" is 2 - (3/4)i in the grammar
    assert parse_scalar("2-3/4i") == GaussianRational(2, Fraction(-3, 4))
    assert parse_scalar("-1/3+5i") == GaussianRational(Fraction(-1, 3), 5)


@pytest.mark.parametrize(
    "text,offset",
    [
        ("", 0),
        ("1/", 2),
        ("1/0", 2),
        ("2+", 2),
        ("2+3", 3),
        ("abc", 0),
        ("1ii", 2),
        ("2--3i", 2),
    ],
)
def test_parse_errors_carry_offsets(text, offset):
    with pytest.raises(ScalarError) as exc:
        parse_scalar(text)
    assert exc.value.offset == offset


def test_imaginary_rejected_in_rational_field():
    with pytest.raises(ScalarError):
        parse_scalar("i", "rational")


@pytest.mark.parametrize(
    "text,canon",
    [
        ("1/2", "1/2"),
        ("i", "i"),
        ("-i", "-i"),
        ("0+1i", "i"),
        ("3+0i", "3"),
        ("1i", "i"),
        ("2-3/4i", "2-3/4i"),
        ("-2/4", "-1/2"),
    ],
)
def test_render_is_canonical(text, canon):
    assert render_scalar(parse_scalar(text)) == canon


@given(gaussians)
def test_render_parse_roundtrip(x):
    assert parse_scalar(render_scalar(x)) == x


def test_conj_examples():
    assert conj(QI.i) == GaussianRational(0, -1)
    assert conj(QQ.of(3)) == Fraction(3)
    assert conj(GaussianRational(1, 2)) == GaussianRational(1, -2)


@given(gaussians, gaussians)
def test_conj_is_field_automorphism(x, y):
    assert conj(conj(x)) == x
    assert conj(x * y) == conj(x) * conj(y)
    assert conj(x + y) == conj(x) + conj(y)


@given(gaussians, gaussians, gaussians)
def test_field_axioms_sample(x, y, z):
    assert (x + y) * z == x * z + y * z
    assert x * (y * z) == (x * y) * z
    if y:
        assert (x / y) * y == x


def test_exactness():
    a = parse_scalar("1/3") + parse_scalar("1/6")
    assert a == GaussianRational(Fraction(1, 2))
    assert (QI.i * QI.i) == QI.of(-1)
