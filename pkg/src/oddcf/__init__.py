"""Odd alpha-continued fractions: exact expansions, natural extensions,
entropy estimates and matching."""

from __future__ import annotations

from .cf import AlphaParam, CFWord, SignedDigit, convergents, digit, evaluate, expand, orbit, step
from .numeric import ALPHA_13, GOLDEN_BIG, GOLDEN_SMALL, QuadExt, format_scalar, parse_scalar

__version__ = "0.1.0"

__all__ = [
    "ALPHA_13",
    "AlphaParam",
    "CFWord",
    "GOLDEN_BIG",
    "GOLDEN_SMALL",
    "QuadExt",
    "SignedDigit",
    "convergents",
    "digit",
    "evaluate",
    "expand",
    "format_scalar",
    "orbit",
    "parse_scalar",
    "step",
]
