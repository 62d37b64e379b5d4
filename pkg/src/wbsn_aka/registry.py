"""Administrator-side setup: hub master key, sensor and intermediate registration.

The deployment file is JSON with lowercase hex values::

    {"hub_key": "...", "sensors": [{"id": "...", "k": "..."}], "intermediates": ["0001"]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .primitives import (
    BitString,
    IN_ID_BITS,
    KEY_BITS,
    NonceSource,
    concat,
    sha1,
    xor,
)

SENSOR_STORAGE_BITS = 4 * KEY_BITS  # idN, aN, bN, session key
HUB_ENTRY_BITS = 3 * KEY_BITS  # kN, aN, session key


class RegistrationError(ValueError):
    pass


class DuplicateSensor(RegistrationError):
    pass


class DuplicateIntermediate(RegistrationError):
    pass


@dataclass
class SensorCredentials:
    id_n: BitString
    a_n: BitString
    b_n: BitString
    session_key: BitString | None = None

    @property
    def storage_bits(self) -> int:
        return SENSOR_STORAGE_BITS


@dataclass
class HubEntry:
    k_n: BitString
    a_n: BitString
    session_key: BitString | None = None


@dataclass(frozen=True)
class IntermediateState:
    id_in: BitString

    @property
    def storage_bits(self) -> int:
        return self.id_in.width


@dataclass
class HubState:
    k_hn: BitString
    intermediates: list[BitString] = field(default_factory=list)
    table: list[HubEntry] = field(default_factory=list)

    @property
    def storage_bits(self) -> int:
        return hub_storage_bits(len(self.table), len(self.intermediates))

    def knows_intermediate(self, id_in: BitString) -> bool:
        return id_in in self.intermediates

    def table_bytes(self) -> bytes:
        """Serialized (kN, aN) pairs; session keys are excluded."""
        return b"".join(e.k_n.to_bytes() + e.a_n.to_bytes() for e in self.table)


def hub_storage_bits(n_sensors: int, m_intermediates: int) -> int:
    return HUB_ENTRY_BITS * n_sensors + IN_ID_BITS * m_intermediates + KEY_BITS


def init_hub(k_hn: BitString) -> HubState:
    if k_hn.width != KEY_BITS:
        raise ValueError(f"hub key must be {KEY_BITS} bits")
    return HubState(k_hn)


def register_sensor(hub: HubState, id_n: BitString, k_n: BitString) -> SensorCredentials:
    """Derive the sensor's stored tuple and add (kN, aN) to the hub table.

    ``hub`` is updated in place.
    """
    if id_n.width != KEY_BITS or k_n.width != KEY_BITS:
        raise ValueError(f"sensor id and key must be {KEY_BITS} bits")
    a_n = sha1(concat(id_n, k_n))
    if any(e.a_n == a_n for e in hub.table):
        raise DuplicateSensor(f"aN {a_n.hex()} already registered")
    b_n = xor(xor(hub.k_hn, k_n), id_n)
    hub.table.append(HubEntry(k_n, a_n))
    return SensorCredentials(id_n, a_n, b_n)


def register_intermediate(hub: HubState, id_in: BitString) -> IntermediateState:
    if id_in.width != IN_ID_BITS:
        raise ValueError(f"intermediate id must be {IN_ID_BITS} bits")
    if hub.knows_intermediate(id_in):
        raise DuplicateIntermediate(f"intermediate {id_in.hex()} already registered")
    hub.intermediates.append(id_in)
    return IntermediateState(id_in)


@dataclass
class Deployment:
    """Everything the administrator provisions, in a reproducible form."""

    hub_key: BitString
    sensors: list[tuple[BitString, BitString]]  # (idN, kN)
    intermediates: list[BitString]

    @classmethod
    def generate(cls, n_sensors: int, m_intermediates: int, seed: int) -> Deployment:
        if n_sensors < 1 or m_intermediates < 1:
            raise ValueError("need at least one sensor and one intermediate")
        rng = NonceSource(seed)
        hub_key = rng.bits(KEY_BITS)
        sensors: list[tuple[BitString, BitString]] = []
        ids: set[BitString] = set()
        a_values: set[BitString] = set()
        while len(sensors) < n_sensors:
            id_n, k_n = rng.bits(KEY_BITS), rng.bits(KEY_BITS)
            a_n = sha1(concat(id_n, k_n))
            if id_n in ids or a_n in a_values:
                continue
            ids.add(id_n)
            a_values.add(a_n)
            sensors.append((id_n, k_n))
        intermediates: list[BitString] = []
        while len(intermediates) < m_intermediates:
            id_in = rng.bits(IN_ID_BITS)
            if id_in not in intermediates:
                intermediates.append(id_in)
        return cls(hub_key, sensors, intermediates)

    def provision(self) -> tuple[HubState, list[SensorCredentials], list[IntermediateState]]:
        hub = init_hub(self.hub_key)
        creds = [register_sensor(hub, id_n, k_n) for id_n, k_n in self.sensors]
        ins = [register_intermediate(hub, id_in) for id_in in self.intermediates]
        return hub, creds, ins

    def to_dict(self) -> dict:
        return {
            "hub_key": self.hub_key.hex(),
            "sensors": [{"id": i.hex(), "k": k.hex()} for i, k in self.sensors],
            "intermediates": [i.hex() for i in self.intermediates],
        }

    @classmethod
    def from_dict(cls, d: dict) -> Deployment:
        try:
            return cls(
                BitString.from_hex(d["hub_key"], KEY_BITS),
                [
                    (BitString.from_hex(s["id"], KEY_BITS), BitString.from_hex(s["k"], KEY_BITS))
                    for s in d["sensors"]
                ],
                [BitString.from_hex(i, IN_ID_BITS) for i in d["intermediates"]],
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed deployment: {exc!r}") from None

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def read(cls, path: str | Path) -> Deployment:
        return cls.from_dict(json.loads(Path(path).read_text()))
