"""ssalg: exact spectral sequences of filtered dg-algebras and the
A-infinity structures living on their pages.

The engine works over Q or Q(i) with exact arithmetic throughout; every
splitting choice is canonical, so outputs are reproducible bit for bit.
"""

from .scalar import (
    Field,
    GaussianRational,
    QI,
    QQ,
    ScalarError,
    conj,
    field_for,
    parse_scalar,
    render_scalar,
)

__all__ = [
    "Field",
    "GaussianRational",
    "QI",
    "QQ",
    "ScalarError",
    "conj",
    "field_for",
    "parse_scalar",
    "render_scalar",
]

__version__ = "0.1.0"
