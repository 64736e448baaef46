"""
Utility functions for the toric residue engine.

Conversion between exact rationals, arbitrary precision numbers and the
string forms used in every report.
"""
import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

import mpmath
import numpy as np

from src.config import DECIMAL_DIGITS, LOG_LEVEL

logging.basicConfig(
    level=LOG_LEVEL,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

Rational = Union[int, Fraction]


def to_fraction(value: Any) -> Fraction:
    """
    Convert an exact value or a "p/q" string to a Fraction.

    Args:
        value: int, Fraction, sympy Rational or string such as "-1/2"

    Returns:
        Fraction equal to the value
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    if hasattr(value, 'p') and hasattr(value, 'q'):
        return Fraction(int(value.p), int(value.q))
    if isinstance(value, float) and value.is_integer():
        return Fraction(int(value))
    raise TypeError(f"Cannot convert {value!r} to an exact rational")


def format_rational(value: Rational) -> str:
    """Format an exact rational as "p/q" (or "p" for integers)."""
    value = to_fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def to_mpf(value: Any) -> mpmath.mpf:
    """Real arbitrary precision value of an exact or floating number."""
    if isinstance(value, Fraction):
        return mpmath.mpf(value.numerator) / value.denominator
    if isinstance(value, (int, np.integer)):
        return mpmath.mpf(int(value))
    return mpmath.mpf(value)


def to_mpc(value: Any) -> mpmath.mpc:
    """Complex arbitrary precision value of an exact, real or complex number."""
    if isinstance(value, mpmath.mpc):
        return value
    if isinstance(value, complex):
        return mpmath.mpc(value.real, value.imag)
    return mpmath.mpc(to_mpf(value))


def format_decimal(value: Any, digits: int = DECIMAL_DIGITS) -> str:
    """Format a real number as a decimal string with the given significant digits."""
    if isinstance(value, Fraction):
        value = to_mpf(value)
    return mpmath.nstr(mpmath.mpf(value), digits, strip_zeros=False)


def format_complex(value: Any, digits: int = DECIMAL_DIGITS) -> Dict[str, str]:
    """Format a complex number as {"re": ..., "im": ...} decimal strings."""
    value = to_mpc(value)
    return {"re": format_decimal(value.real, digits), "im": format_decimal(value.imag, digits)}


def format_scalar(value: Any, digits: int = DECIMAL_DIGITS) -> Any:
    """Exact values become "p/q", real numbers decimal strings, complex numbers dicts."""
    if isinstance(value, (int, np.integer, Fraction)):
        return format_rational(value)
    if isinstance(value, (mpmath.mpc, complex)):
        return format_complex(value, digits)
    return format_decimal(value, digits)


def format_vector(vector: Iterable[Any]) -> list:
    """Lattice vectors as plain int lists, other vectors entrywise via format_scalar."""
    out = []
    for x in vector:
        if isinstance(x, (int, np.integer)):
            out.append(int(x))
        else:
            out.append(format_scalar(x))
    return out


def ensure_directory(path: Path) -> None:
    """Ensure directory exists, create if it doesn't."""
    path.mkdir(parents=True, exist_ok=True)


def dump_json(payload: Any, output_file: Optional[Path] = None) -> str:
    """Deterministic JSON text (sorted keys, two-space indent), optionally written to disk."""
    text = json.dumps(payload, indent=2, sort_keys=True)
    if output_file is not None:
        ensure_directory(Path(output_file).parent)
        Path(output_file).write_text(text + "\n")
    return text


def is_exact(value: Any) -> bool:
    return isinstance(value, (int, np.integer, Fraction))


def mixed_add(a: Any, b: Any) -> Any:
    """Sum kept exact for rationals, promoted to mpmath complex otherwise."""
    if is_exact(a) and is_exact(b):
        return Fraction(a) + Fraction(b)
    return to_mpc(a) + to_mpc(b)


def mixed_sub(a: Any, b: Any) -> Any:
    if is_exact(a) and is_exact(b):
        return Fraction(a) - Fraction(b)
    return to_mpc(a) - to_mpc(b)


def mixed_mul(a: Any, b: Any) -> Any:
    if is_exact(a) and is_exact(b):
        return Fraction(a) * Fraction(b)
    return to_mpc(a) * to_mpc(b)


def mixed_div(a: Any, b: Any) -> Any:
    if is_exact(a) and is_exact(b):
        return Fraction(a) / Fraction(b)
    return to_mpc(a) / to_mpc(b)
