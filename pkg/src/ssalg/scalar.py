"""Exact field arithmetic over Q and the Gaussian rationals Q(i).

Rationals are plain ``fractions.Fraction`` (always reduced, positive
denominator).  Gaussian rationals are pairs of Fractions with complex
conjugation.  Every coefficient in the engine is one of these two types;
the field is fixed per input and never mixed silently.
"""

from __future__ import annotations

from fractions import Fraction


class ScalarError(ValueError):
    """Malformed scalar text or invalid scalar construction."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


class GaussianRational:
    """An element re + im*i of Q(i), both parts exact Fractions."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("GaussianRational is immutable")

    # -- ring structure ----------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return GaussianRational(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return GaussianRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        norm = other.re * other.re + other.im * other.im
        if norm == 0:
            raise ZeroDivisionError("division by zero in Q(i)")
        return GaussianRational(
            (self.re * other.re + self.im * other.im) / norm,
            (self.im * other.re - self.re * other.im) / norm,
        )

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other / self

    # -- comparisons -------------------------------------------------------

    def __eq__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def __repr__(self):
        return f"GaussianRational({self.re!r}, {self.im!r})"

    def __str__(self):
        return render_scalar(self)


def _coerce(x):
    if isinstance(x, GaussianRational):
        return x
    if isinstance(x, (int, Fraction)):
        return GaussianRational(x)
    return NotImplemented


RATIONAL = "rational"
GAUSSIAN = "gaussian_rational"

FIELD_TAGS = (RATIONAL, GAUSSIAN)


class Field:
    """A field tag together with its scalar constructors.

    Two instances exist (``QQ`` and ``QI``); equality is by tag.
    """

    def __init__(self, tag):
        if tag not in FIELD_TAGS:
            raise ScalarError(f"unknown field tag {tag!r}")
        self.tag = tag

    def __repr__(self):
        return f"Field({self.tag})"

    def __eq__(self, other):
        return isinstance(other, Field) and self.tag == other.tag

    def __hash__(self):
        return hash(self.tag)

    @property
    def zero(self):
        return Fraction(0) if self.tag == RATIONAL else GaussianRational(0)

    @property
    def one(self):
        return Fraction(1) if self.tag == RATIONAL else GaussianRational(1)

    @property
    def i(self):
        if self.tag == RATIONAL:
            raise ScalarError("i does not exist in the rational field")
        return GaussianRational(0, 1)

    def of(self, x):
        """Coerce an int/Fraction (or GaussianRational for Q(i)) into this field."""
        if self.tag == RATIONAL:
            if isinstance(x, GaussianRational):
                if x.im != 0:
                    raise ScalarError("imaginary value in rational field")
                return x.re
            return Fraction(x)
        if isinstance(x, GaussianRational):
            return x
        return GaussianRational(x)

    def conj(self, x):
        if self.tag == RATIONAL:
            return x
        return self.of(x).conjugate()

    def parse(self, text):
        return parse_scalar(text, self.tag)

    def render(self, x):
        return render_scalar(x)


QQ = Field(RATIONAL)
QI = Field(GAUSSIAN)


def field_for(tag):
    if tag == RATIONAL:
        return QQ
    if tag == GAUSSIAN:
        return QI
    raise ScalarError(f"unknown field tag {tag!r}")


def conj(x):
    """Complex conjugation; fixes rationals."""
    if isinstance(x, GaussianRational):
        return x.conjugate()
    return x


# -- parsing ----------------------------------------------------------------
#
# Grammar:  [-]rat | [-]rat"i" | rat("+"|"-")rat"i" | "i" | "-i"
# with rat = int["/"posint].  No whitespace inside a scalar.


def _parse_rat(text, pos, allow_sign=True):
    start = pos
    n = len(text)
    if allow_sign and pos < n and text[pos] == "-":
        pos += 1
    digits0 = pos
    while pos < n and text[pos].isdigit():
        pos += 1
    if pos == digits0:
        raise ScalarError("expected a digit", offset=pos)
    num = int(text[start:pos])
    if pos < n and text[pos] == "/":
        pos += 1
        den0 = pos
        while pos < n and text[pos].isdigit():
            pos += 1
        if pos == den0:
            raise ScalarError("expected a digit after '/'", offset=pos)
        den = int(text[den0:pos])
        if den == 0:
            raise ScalarError("denominator is zero", offset=den0)
        return Fraction(num, den), pos
    return Fraction(num), pos


def parse_scalar(text, field_tag=GAUSSIAN):
    """Parse a scalar literal; raise ScalarError with a byte offset on junk."""
    if field_tag not in FIELD_TAGS:
        raise ScalarError(f"unknown field tag {field_tag!r}")
    n = len(text)
    if n == 0:
        raise ScalarError("empty scalar", offset=0)
    pos = 0
    if text == "i":
        value = GaussianRational(0, 1)
        pos = 1
    elif text == "-i":
        value = GaussianRational(0, -1)
        pos = 2
    else:
        first, pos = _parse_rat(text, pos)
        if pos < n and text[pos] == "i":
            pos += 1
            value = GaussianRational(0, first)
        elif pos < n and text[pos] in "+-":
            negative = text[pos] == "-"
            pos += 1
            if pos < n and text[pos] == "i":
                second = Fraction(1)
            else:
                second, pos = _parse_rat(text, pos, allow_sign=False)
            if pos >= n or text[pos] != "i":
                raise ScalarError("expected 'i' after imaginary part", offset=pos)
            pos += 1
            value = GaussianRational(first, -second if negative else second)
        else:
            value = GaussianRational(first)
    if pos != n:
        raise ScalarError(f"trailing characters {text[pos:]!r}", offset=pos)
    if field_tag == RATIONAL:
        if value.im != 0:
            raise ScalarError("imaginary literal in rational field", offset=0)
        return value.re
    return value


def render_scalar(x):
    """Canonical text form; parse(render(x)) == x."""
    if isinstance(x, (int, Fraction)):
        return str(Fraction(x))
    re, im = x.re, x.im
    if im == 0:
        return str(re)
    if im == 1:
        imag = "i"
    elif im == -1:
        imag = "-i"
    else:
        imag = f"{im}i"
    if re == 0:
        return imag
    if im > 0:
        return f"{re}+{imag}"
    return f"{re}-{imag[1:]}"
