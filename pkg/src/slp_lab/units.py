"""Unit-suffixed scalar parsing.

Angular rates must be written either in ``rad/s`` (with SI prefixes) or as a
cyclic frequency tagged ``_x2pi`` (``60 kHz_x2pi`` means 2*pi*60e3 rad/s).
A bare ``MHz`` is only accepted where a cyclic frequency is expected, which
keeps the 2*pi factor explicit in every file.
"""

from __future__ import annotations

import math
import re
from decimal import Decimal

__all__ = ["UnitError", "DIMENSIONS", "parse_quantity", "format_time"]


class UnitError(ValueError):
    """Raised for malformed numbers, unknown units or dimension mismatches."""


_PREFIX = {"T": 1e12, "G": 1e9, "M": 1e6, "k": 1e3, "": 1.0}

_LENGTH = {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9}
_TIME = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9, "ps": 1e-12}
_FREQ = {p + "Hz": v for p, v in _PREFIX.items()}
_RATE = {p + "rad/s": v for p, v in _PREFIX.items()}
_RATE.update({p + "Hz_x2pi": 2.0 * math.pi * v for p, v in _PREFIX.items()})
_RATE["/s"] = 1.0
_ANGLE = {"rad": 1.0, "mrad": 1e-3, "deg": math.pi / 180.0}

DIMENSIONS: dict[str, dict[str, float]] = {
    "dimensionless": {"": 1.0},
    "length": _LENGTH,
    "time": _TIME,
    "frequency": _FREQ,
    "rate": _RATE,
    "angle": _ANGLE,
}

_QUANTITY = re.compile(
    r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([A-Za-zµ/_0-9]*)\s*$"
)


def parse_quantity(text: str, dimension: str) -> float:
    """Parse ``"<number> [unit]"`` and return the value in SI units.

    ``dimension`` is one of the keys of :data:`DIMENSIONS`. Angles given
    without a unit are taken as radians; every other dimensioned quantity
    requires an explicit unit.
    """
    try:
        table = DIMENSIONS[dimension]
    except KeyError:
        raise UnitError(f"unknown dimension {dimension!r}") from None
    m = _QUANTITY.match(text)
    if m is None:
        raise UnitError(f"cannot parse quantity {text!r}")
    number, unit = m.groups()
    value = float(number)
    if unit == "" and dimension == "angle":
        return value
    if unit not in table:
        if unit == "":
            raise UnitError(f"{text!r}: a {dimension} needs a unit ({', '.join(sorted(table))})")
        if dimension == "rate" and unit in _FREQ:
            raise UnitError(f"{text!r}: angular rate given in {unit}; write {unit}_x2pi or rad/s")
        raise UnitError(f"{text!r}: unknown {dimension} unit {unit!r}")
    return _scale(number, table[unit])


def _scale(number: str, factor: float) -> float:
    # decimal prefixes are applied exactly, so "6.6us" is the double nearest 6.6e-6
    exponent = round(math.log10(factor)) if factor > 0 else 0
    if factor == 10.0**exponent:
        return float(Decimal(number).scaleb(exponent))
    return float(number) * factor


def format_time(seconds: float) -> str:
    """Shortest ``<x>us`` string that parses back to exactly ``seconds``."""
    if not math.isfinite(seconds):
        raise UnitError(f"cannot format non-finite time {seconds!r}")
    if seconds == 0.0:
        return "0us"
    micro = Decimal(repr(float(seconds))).scaleb(6).normalize()
    return f"{micro:f}us"
