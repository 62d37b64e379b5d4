"""Bit-exact codecs for the four handshake frames.

Layouts (MSB first, no tag, no length prefix)::

    Message1  SN -> IN   m1:160 | m2:192 | tN:32            = 384 bits
    Message2  IN -> HN   m1:160 | m2:192 | tN:32 | idIN:16  = 400 bits
    Message3  HN -> IN   m3:160 | m4:160 | tH:32 | idIN:16  = 368 bits
    Message4  IN -> SN   m3:160 | m4:160 | tH:32            = 352 bits

Transcript files hold one delivered frame per line:
``direction, sim_time, hex``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

from .primitives import BitString, IN_ID_BITS, TS_BITS, concat


class Hop(enum.Enum):
    SN_IN = "SN->IN"
    IN_HN = "IN->HN"
    HN_IN = "HN->IN"
    IN_SN = "IN->SN"

    @property
    def number(self) -> int:
        return list(Hop).index(self) + 1

    @property
    def kind(self) -> FrameKind:
        return FrameKind(self.number)


@dataclass(frozen=True)
class Message1:
    m1: BitString
    m2: BitString
    t_n: int


@dataclass(frozen=True)
class Message2:
    m1: BitString
    m2: BitString
    t_n: int
    id_in: BitString


@dataclass(frozen=True)
class Message3:
    m3: BitString
    m4: BitString
    t_h: int
    id_in: BitString


@dataclass(frozen=True)
class Message4:
    m3: BitString
    m4: BitString
    t_h: int


Frame = Union[Message1, Message2, Message3, Message4]

# field name -> bit width, in wire order
_LAYOUTS: dict[type, tuple[tuple[str, int], ...]] = {
    Message1: (("m1", 160), ("m2", 192), ("t_n", TS_BITS)),
    Message2: (("m1", 160), ("m2", 192), ("t_n", TS_BITS), ("id_in", IN_ID_BITS)),
    Message3: (("m3", 160), ("m4", 160), ("t_h", TS_BITS), ("id_in", IN_ID_BITS)),
    Message4: (("m3", 160), ("m4", 160), ("t_h", TS_BITS)),
}

_TIMESTAMP_FIELDS = {"t_n", "t_h"}


class FrameKind(enum.Enum):
    MESSAGE1 = 1
    MESSAGE2 = 2
    MESSAGE3 = 3
    MESSAGE4 = 4

    @property
    def cls(self) -> type:
        return (Message1, Message2, Message3, Message4)[self.value - 1]

    @property
    def bits(self) -> int:
        return sum(w for _, w in _LAYOUTS[self.cls])

    @property
    def size(self) -> int:
        return self.bits // 8

    @property
    def hop(self) -> Hop:
        return list(Hop)[self.value - 1]


FRAME_BITS = {kind: kind.bits for kind in FrameKind}


class WrongLength(ValueError):
    def __init__(self, kind: FrameKind, got: int) -> None:
        super().__init__(f"{kind.name} needs {kind.size} bytes, got {got}")
        self.kind = kind
        self.got = got


def kind_of(frame: Frame) -> FrameKind:
    return FrameKind((Message1, Message2, Message3, Message4).index(type(frame)) + 1)


def encode(frame: Frame) -> bytes:
    parts = []
    for name, width in _LAYOUTS[type(frame)]:
        v = getattr(frame, name)
        if name in _TIMESTAMP_FIELDS:
            v = BitString(width, v)
        elif v.width != width:
            raise ValueError(f"{type(frame).__name__}.{name} must be {width} bits, got {v.width}")
        parts.append(v)
    return concat(*parts).to_bytes()


def decode(kind: FrameKind, data: bytes) -> Frame:
    if len(data) != kind.size:
        raise WrongLength(kind, len(data))
    value = int.from_bytes(data, "big")
    remaining = kind.bits
    values = {}
    for name, width in _LAYOUTS[kind.cls]:
        remaining -= width
        field = (value >> remaining) & ((1 << width) - 1)
        values[name] = field if name in _TIMESTAMP_FIELDS else BitString(width, field)
    return kind.cls(**values)


@dataclass(frozen=True)
class TranscriptRecord:
    sim_time: int
    hop: Hop
    data: bytes
    annotation: str = ""

    @property
    def bits(self) -> int:
        return 8 * len(self.data)

    def frame(self) -> Frame:
        return decode(self.hop.kind, self.data)


class Transcript:
    """Append-only log of delivered frames."""

    def __init__(self, records: Iterable[TranscriptRecord] = ()) -> None:
        self._records = list(records)

    def append(self, record: TranscriptRecord) -> None:
        self._records.append(record)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    def __getitem__(self, i: int) -> TranscriptRecord:
        return self._records[i]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Transcript):
            return NotImplemented
        return self._records == other._records

    def on_hop(self, hop: Hop) -> list[TranscriptRecord]:
        return [r for r in self._records if r.hop is hop]

    def dumps(self) -> str:
        return "".join(f"{r.hop.value}, {r.sim_time}, {r.data.hex()}\n" for r in self._records)

    @classmethod
    def loads(cls, text: str) -> Transcript:
        records = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                direction, t, hexdata = (s.strip() for s in line.split(","))
                records.append(TranscriptRecord(int(t), Hop(direction), bytes.fromhex(hexdata)))
            except ValueError as exc:
                raise ValueError(f"transcript line {lineno}: {exc}") from None
        return cls(records)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def read(cls, path: str | Path) -> Transcript:
        return cls.loads(Path(path).read_text())

