"""Bit-exact lane containers used by both interpreters."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

from .isa_model import ElementType

_FLOAT_FMT = {16: "e", 32: "f", 64: "d"}
_INT_FMT = {8: "B", 16: "H", 32: "I", 64: "Q"}

# One quiet NaN per width; both sides of a comparison are folded onto it.
CANONICAL_NAN = {16: 0x7E00, 32: 0x7FC00000, 64: 0x7FF8000000000000}


def to_signed(bits: int, width: int) -> int:
    return bits - (1 << width) if bits >> (width - 1) else bits


def float_from_bits(bits: int, width: int) -> float:
    return struct.unpack("<" + _FLOAT_FMT[width], struct.pack("<" + _INT_FMT[width], bits))[0]


def float_to_bits(value: float, width: int) -> int:
    """Round ``value`` to the given binary format and return its encoding.

    Overflow rounds to infinity, as IEEE round-to-nearest does; ``struct``
    would raise instead.
    """
    try:
        packed = struct.pack("<" + _FLOAT_FMT[width], value)
    except OverflowError:
        packed = struct.pack("<" + _FLOAT_FMT[width], math.copysign(math.inf, value))
    return struct.unpack("<" + _INT_FMT[width], packed)[0]


def is_nan_bits(bits: int, width: int) -> bool:
    exp_bits = {16: 5, 32: 8, 64: 11}[width]
    frac_bits = width - 1 - exp_bits
    exp = (bits >> frac_bits) & ((1 << exp_bits) - 1)
    return exp == (1 << exp_bits) - 1 and bits & ((1 << frac_bits) - 1) != 0


@dataclass(frozen=True)
class VectorValue:
    elem: ElementType
    bits: tuple[int, ...]

    def __post_init__(self):
        m = self.elem.mask
        for b in self.bits:
            if not 0 <= b <= m:
                raise ValueError(f"lane pattern {b:#x} does not fit {self.elem.name}")

    @property
    def lanes(self) -> int:
        return len(self.bits)

    @classmethod
    def from_ints(cls, elem: ElementType, values: Iterable[int]) -> "VectorValue":
        """Integers are wrapped to the lane width, so negatives are accepted."""
        m = elem.mask
        return cls(elem, tuple(int(v) & m for v in values))

    @classmethod
    def from_floats(cls, elem: ElementType, values: Iterable[float]) -> "VectorValue":
        return cls(elem, tuple(float_to_bits(v, elem.bit_width) for v in values))

    @classmethod
    def from_bytes(cls, elem: ElementType, data: bytes) -> "VectorValue":
        w = elem.byte_width
        return cls(elem, tuple(int.from_bytes(data[i:i + w], "little") for i in range(0, len(data), w)))

    @classmethod
    def splat(cls, elem: ElementType, lanes: int, pattern: int) -> "VectorValue":
        return cls(elem, (pattern & elem.mask,) * lanes)

    def to_bytes(self) -> bytes:
        w = self.elem.byte_width
        return b"".join(b.to_bytes(w, "little") for b in self.bits)

    def signed(self) -> list[int]:
        w = self.elem.bit_width
        return [to_signed(b, w) for b in self.bits]

    def floats(self) -> list[float]:
        w = self.elem.bit_width
        return [float_from_bits(b, w) for b in self.bits]

    def values(self) -> list:
        """Lanes as Python numbers interpreted per the element class."""
        if self.elem.is_float:
            return self.floats()
        if self.elem.is_signed:
            return self.signed()
        return list(self.bits)

    def reinterpret(self, elem: ElementType) -> "VectorValue":
        if elem.bit_width != self.elem.bit_width:
            raise ValueError("reinterpret requires equal lane widths")
        return VectorValue(elem, self.bits)

    def slice(self, start: int, stop: int) -> "VectorValue":
        return VectorValue(self.elem, self.bits[start:stop])

    def canonical(self) -> "VectorValue":
        """Copy with every NaN lane replaced by the canonical quiet NaN."""
        if not self.elem.is_float:
            return self
        w = self.elem.bit_width
        nan = CANONICAL_NAN[w]
        return VectorValue(self.elem, tuple(nan if is_nan_bits(b, w) else b for b in self.bits))

    def __str__(self):
        digits = self.elem.bit_width // 4
        return f"{self.elem.name}[{', '.join(f'{b:0{digits}x}' for b in self.bits)}]"


def concat(parts: Sequence[VectorValue]) -> VectorValue:
    elem = parts[0].elem
    return VectorValue(elem, tuple(b for p in parts for b in p.bits))
