"""Fixed-width bit strings, SHA-1, simulated clock and nonce source.

Every protocol value is a :class:`BitString` packed most-significant bit
first. XOR and hash calls take an optional :class:`OpCounter` so a session
can attribute primitive invocations to the role that performed them.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

HASH_BITS = 160
KEY_BITS = 160
NONCE_BITS = 160
TS_BITS = 32
IN_ID_BITS = 16

TS_MOD = 1 << TS_BITS


class WidthMismatch(ValueError):
    """Binary operation on bit strings of different widths."""


@dataclass
class OpCounter:
    """Per-role tally of hash and XOR invocations."""

    hashes: int = 0
    xors: int = 0

    def reset(self) -> None:
        self.hashes = 0
        self.xors = 0


@dataclass(frozen=True, slots=True)
class BitString:
    width: int
    value: int

    def __post_init__(self) -> None:
        if self.width <= 0:
            raise ValueError(f"width must be positive, got {self.width}")
        if not 0 <= self.value < (1 << self.width):
            raise ValueError(f"value does not fit in {self.width} bits")

    @classmethod
    def zeros(cls, width: int) -> BitString:
        return cls(width, 0)

    @classmethod
    def from_bytes(cls, data: bytes, width: int | None = None) -> BitString:
        """Inverse of :meth:`to_bytes`; ``width`` defaults to ``8 * len(data)``."""
        full = 8 * len(data)
        if width is None:
            width = full
        if not full - 8 < width <= full:
            raise ValueError(f"{len(data)} bytes cannot hold exactly {width} bits")
        return cls(width, int.from_bytes(data, "big") >> (full - width))

    @classmethod
    def from_hex(cls, text: str, width: int | None = None) -> BitString:
        return cls.from_bytes(bytes.fromhex(text), width)

    def to_bytes(self) -> bytes:
        # left-aligned: trailing pad bits (if any) are zero
        nbytes = (self.width + 7) // 8
        return (self.value << (8 * nbytes - self.width)).to_bytes(nbytes, "big")

    def hex(self) -> str:
        return self.to_bytes().hex()

    def bit(self, index: int) -> int:
        """Bit at ``index`` counted from the most significant end."""
        if not 0 <= index < self.width:
            raise IndexError(index)
        return (self.value >> (self.width - 1 - index)) & 1

    def flip(self, index: int) -> BitString:
        if not 0 <= index < self.width:
            raise IndexError(index)
        return BitString(self.width, self.value ^ (1 << (self.width - 1 - index)))

    def __len__(self) -> int:
        return self.width

    def __repr__(self) -> str:
        return f"BitString({self.width}, 0x{self.value:0{(self.width + 3) // 4}x})"


def xor(a: BitString, b: BitString, ops: OpCounter | None = None) -> BitString:
    if a.width != b.width:
        raise WidthMismatch(f"xor of {a.width}-bit and {b.width}-bit strings")
    if ops is not None:
        ops.xors += 1
    return BitString(a.width, a.value ^ b.value)


def concat(*parts: BitString) -> BitString:
    """Raw concatenation; the first operand lands in the most significant bits."""
    if not parts:
        raise ValueError("concat needs at least one operand")
    width = 0
    value = 0
    for p in parts:
        value = (value << p.width) | p.value
        width += p.width
    return BitString(width, value)


def split(s: BitString, high_width: int) -> tuple[BitString, BitString]:
    if not 0 < high_width < s.width:
        raise ValueError(f"split point {high_width} outside (0, {s.width})")
    low_width = s.width - high_width
    return (
        BitString(high_width, s.value >> low_width),
        BitString(low_width, s.value & ((1 << low_width) - 1)),
    )


def sha1(msg: BitString | bytes, ops: OpCounter | None = None) -> BitString:
    """SHA-1 over the byte serialization of ``msg``; no framing between operands."""
    if ops is not None:
        ops.hashes += 1
    data = msg if isinstance(msg, bytes) else msg.to_bytes()
    return BitString(HASH_BITS, int.from_bytes(hashlib.sha1(data).digest(), "big"))


# Timestamps are plain ints in [0, 2**32).

def timestamp(value: int) -> int:
    return value % TS_MOD


def ts_bits(t: int) -> BitString:
    return BitString(TS_BITS, timestamp(t))


def ts_distance(a: int, b: int) -> int:
    """Wraparound-safe ``|a - b|`` on the 32-bit timestamp circle."""
    d = (a - b) % TS_MOD
    return min(d, TS_MOD - d)


class SimClock:
    """Monotonic simulated clock; reads are reduced modulo 2**32."""

    def __init__(self, start: int = 0) -> None:
        if start < 0:
            raise ValueError("clock cannot start before zero")
        self._t = start

    @property
    def ticks(self) -> int:
        """Unreduced tick count."""
        return self._t

    def now(self) -> int:
        return self._t % TS_MOD

    def advance(self, units: int) -> int:
        if units < 0:
            raise ValueError("clock cannot move backward")
        self._t += units
        return self.now()

    def advance_to(self, ticks: int) -> int:
        if ticks < self._t:
            raise ValueError(f"clock at {self._t} cannot move back to {ticks}")
        self._t = ticks
        return self.now()


class NonceSource:
    """Seeded 160-bit nonce generator. Simulation-grade, not a CSPRNG."""

    def __init__(self, seed: int) -> None:
        self._rng = random.Random(seed)

    def next_nonce(self) -> BitString:
        return BitString(NONCE_BITS, self._rng.getrandbits(NONCE_BITS))

    def bits(self, width: int) -> BitString:
        return BitString(width, self._rng.getrandbits(width))


def now(clock: SimClock) -> int:
    return clock.now()


def next_nonce(rng: NonceSource) -> BitString:
    return rng.next_nonce()
