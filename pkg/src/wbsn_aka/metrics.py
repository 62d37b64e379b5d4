"""Cost accounting: operation counts, storage, bandwidth, time and energy.

Time and energy are analytic. Each SHA-1 call costs ``hash_ms`` on the
reference micro-controller and the active power draw is ``power_mw``;
XOR time is taken as zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .primitives import IN_ID_BITS, OpCounter
from .registry import SENSOR_STORAGE_BITS, hub_storage_bits
from .wire import Hop, Transcript

ROLES = ("SN", "IN", "HN")


@dataclass(frozen=True)
class CostModel:
    hash_ms: float = 0.06
    power_mw: float = 118.8  # 3.3 V x 36 mA

    def time_ms(self, hashes: int) -> float:
        return self.hash_ms * hashes

    def energy_mj(self, hashes: int) -> float:
        return self.time_ms(hashes) * self.power_mw / 1000


DEFAULT_MODEL = CostModel()


@dataclass
class SessionOps:
    """One counter per role, owned by a single session run."""

    sn: OpCounter = field(default_factory=OpCounter)
    in_: OpCounter = field(default_factory=OpCounter)
    hn: OpCounter = field(default_factory=OpCounter)

    def for_role(self, role: str) -> OpCounter:
        return {"SN": self.sn, "IN": self.in_, "HN": self.hn}[role]


@dataclass(frozen=True)
class RoleCost:
    hash_count: int
    xor_count: int
    storage_bits: int
    time_ms: float
    energy_mj: float


@dataclass(frozen=True)
class CostReport:
    roles: dict[str, RoleCost]
    bits_sent: dict[Hop, int]

    @property
    def sn(self) -> RoleCost:
        return self.roles["SN"]

    @property
    def hn(self) -> RoleCost:
        return self.roles["HN"]

    @property
    def in_(self) -> RoleCost:
        return self.roles["IN"]

    def to_dict(self) -> dict:
        out: dict = {}
        for role, c in self.roles.items():
            out[role] = {
                "hashCount": c.hash_count,
                "xorCount": c.xor_count,
                "storageBits": c.storage_bits,
                "timeMs": round(c.time_ms, 9),
                "energyMJ": round(c.energy_mj, 9),
            }
        out["bitsSent"] = {f"hop{h.number}": self.bits_sent.get(h, 0) for h in Hop}
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def storage_account(n_sensors: int, m_intermediates: int) -> dict[str, int]:
    return {
        "SN": SENSOR_STORAGE_BITS,
        "IN": IN_ID_BITS,
        "HN": hub_storage_bits(n_sensors, m_intermediates),
    }


def bandwidth_account(transcript: Transcript) -> dict[Hop, int]:
    """Bits delivered per hop; every transmission counts, replays included."""
    bits = {h: 0 for h in Hop}
    for rec in transcript:
        bits[rec.hop] += rec.bits
    return bits


def collect(
    ops: SessionOps,
    transcript: Transcript,
    n_sensors: int,
    m_intermediates: int,
    model: CostModel = DEFAULT_MODEL,
) -> CostReport:
    storage = storage_account(n_sensors, m_intermediates)
    roles = {}
    for role in ROLES:
        c = ops.for_role(role)
        roles[role] = RoleCost(
            hash_count=c.hashes,
            xor_count=c.xors,
            storage_bits=storage[role],
            time_ms=model.time_ms(c.hashes),
            energy_mj=model.energy_mj(c.hashes),
        )
    return CostReport(roles, bandwidth_account(transcript))
