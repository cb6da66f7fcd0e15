"""Clamp-and-round observation quantization with signed fixed-point codes.

A scheme with bound ``b`` and ``m`` decimals maps a real ``x`` to
``round(clamp(x, -b, b), m)``.  The rounded value is held as the integer
``code = value * 10**m``, which fits in ``1 + ceil(log2 b) + ceil(m log2 10)``
bits (sign, integer part, decimal part).  Ties round half away from zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class QuantizationError(ValueError):
    """Invalid scheme parameters or an out-of-range code."""


class InvalidObservationError(ValueError):
    """Raised for NaN or infinite observation components."""


@dataclass(frozen=True)
class QuantScheme:
    bound: float
    decimals: int
    integer_bits: int = field(init=False)
    frac_bits: int = field(init=False)
    total_bits: int = field(init=False)
    scale: int = field(init=False)
    max_code: int = field(init=False)

    def __post_init__(self) -> None:
        if not (self.bound > 0) or not math.isfinite(self.bound):
            raise QuantizationError(f"bound must be positive and finite, got {self.bound!r}")
        if int(self.decimals) != self.decimals or self.decimals < 0:
            raise QuantizationError(f"decimals must be a non-negative integer, got {self.decimals!r}")
        decimals = int(self.decimals)
        integer_bits = math.ceil(math.log2(self.bound))
        frac_bits = math.ceil(decimals * math.log2(10))
        total_bits = 1 + integer_bits + frac_bits
        scale = 10**decimals
        max_code = int(_round_half_away(np.float64(self.bound) * scale))
        if total_bits < 1 or total_bits > 64:
            raise QuantizationError(f"scheme needs {total_bits} bits; must be within 1..64")
        if (1 << (total_bits - 1)) - 1 < max_code:
            raise QuantizationError(
                f"{total_bits} bits cannot represent magnitude {max_code} "
                f"(bound={self.bound}, decimals={decimals})"
            )
        object.__setattr__(self, "decimals", decimals)
        object.__setattr__(self, "integer_bits", integer_bits)
        object.__setattr__(self, "frac_bits", frac_bits)
        object.__setattr__(self, "total_bits", total_bits)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "max_code", max_code)

    @property
    def resolution(self) -> float:
        """Spacing between adjacent representable values."""
        return 1.0 / self.scale

    def to_dict(self) -> dict:
        return {
            "bound": self.bound,
            "decimals": self.decimals,
            "integer_bits": self.integer_bits,
            "frac_bits": self.frac_bits,
            "total_bits": self.total_bits,
        }


def make_scheme(bound: float, decimals: int) -> QuantScheme:
    return QuantScheme(float(bound), decimals)


def _round_half_away(y):
    # trunc and the fractional remainder are both exact in binary floating point
    t = np.trunc(y)
    return t + np.sign(y) * (np.abs(y - t) >= 0.5)


def _check_finite(x: np.ndarray) -> None:
    if not np.all(np.isfinite(x)):
        raise InvalidObservationError("observation contains NaN or infinite components")


def encode(x, scheme: QuantScheme):
    """Map real value(s) to integer codes.

    Accepts a scalar or an array; returns ``int`` or an ``int64`` array.
    """
    arr = np.asarray(x, dtype=np.float64)
    _check_finite(arr)
    clamped = np.clip(arr, -scheme.bound, scheme.bound)
    codes = _round_half_away(clamped * scheme.scale).astype(np.int64)
    if codes.ndim == 0:
        return int(codes)
    return codes


def encode_row(values: list[float], scheme: QuantScheme) -> list[int]:
    """Scalar-loop twin of :func:`encode` for short rows of Python floats.

    Performs the same IEEE operations in the same order, so results are
    identical; it just avoids numpy call overhead on tiny inputs.
    """
    bound, scale = scheme.bound, scheme.scale
    codes = []
    for x in values:
        if not math.isfinite(x):
            raise InvalidObservationError("observation contains NaN or infinite components")
        y = min(max(x, -bound), bound) * scale
        t = math.trunc(y)
        if abs(y - t) >= 0.5:
            t += 1 if y > 0 else -1
        codes.append(t)
    return codes


def decode(code, scheme: QuantScheme):
    codes = np.asarray(code)
    if codes.dtype.kind not in "iu":
        raise QuantizationError(f"codes must be integers, got dtype {codes.dtype}")
    if codes.size and (codes.min() < -scheme.max_code or codes.max() > scheme.max_code):
        raise QuantizationError(f"code outside [-{scheme.max_code}, {scheme.max_code}]")
    values = codes.astype(np.float64) / scheme.scale
    if values.ndim == 0:
        return float(values)
    return values


def quantize(x, scheme: QuantScheme):
    """``round(clamp(x, -bound, bound), decimals)``, identical to ``decode(encode(x))``."""
    return decode(encode(x, scheme), scheme)


def bits_per_value(bound: float, decimals: int) -> int:
    """Bit budget of a scheme without constructing (or validating) it."""
    return 1 + math.ceil(math.log2(bound)) + math.ceil(decimals * math.log2(10))
