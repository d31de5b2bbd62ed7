"""Exact-arithmetic invariants of Bernoulli convolutions.

The distribution of the random series sum(+-lambda^j) is approximated at
every finite depth by an atomic measure that this package manipulates
exactly: atom positions live in Q or in a number field Q(lambda), masses
are rationals, and the derived quantities (Shannon and scale entropy,
Mahler measure, algebraic classification, dimension brackets, Fourier
decay, root separation audits, self-similar densities) carry certified
error bounds whenever floats appear.
"""

__version__ = "0.1.0"

from .errors import (
    BconvError,
    CapExceeded,
    InvalidInput,
    PolynomialSyntaxError,
    PrecisionError,
    UndecidedError,
)
from .polynomial import IntPolynomial, parse_polynomial

__all__ = [
    "BconvError",
    "CapExceeded",
    "InvalidInput",
    "PolynomialSyntaxError",
    "PrecisionError",
    "UndecidedError",
    "IntPolynomial",
    "parse_polynomial",
    "__version__",
]
