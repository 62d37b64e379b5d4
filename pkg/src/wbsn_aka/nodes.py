"""Sensor, intermediate and hub handshake steps.

Step 1  SN  -> IN   m1 = aN ^ rN,  m2 = ((idN ^ bN) || tN) ^ (tN || rN)
Step 2  IN  -> HN   append idIN
Step 3  HN  -> IN   check idIN, freshness, table lookup; m3 = aN ^ rH,
                    m4 = kHN ^ kN ^ h(aN || rN || rH); derive kS
Step 4  IN  -> SN   strip idIN if it is ours
Step 5  SN          check freshness, rH = m3 ^ aN, verify m4, derive kS

Hub table lookup: with D = m2 ^ (kHN || tN), an entry (kN, aN) matches
when D ^ (tN || (m1 ^ aN)) == kN || 0^32. This follows from
idN ^ bN = kHN ^ kN.
"""

from __future__ import annotations

from dataclasses import dataclass

from .primitives import (
    BitString,
    NonceSource,
    OpCounter,
    SimClock,
    TS_BITS,
    concat,
    sha1,
    ts_bits,
    ts_distance,
    xor,
)
from .registry import HubEntry, HubState, IntermediateState, SensorCredentials
from .wire import Message1, Message2, Message3, Message4

_ZERO_TS = BitString.zeros(TS_BITS)


class ProtocolError(Exception):
    """A node refused to continue. ``step`` is the handshake step (1-5)."""

    step = 0

    def __init__(self, message: str = "", step: int | None = None) -> None:
        super().__init__(message or type(self).__name__)
        if step is not None:
            self.step = step


class UnknownIntermediate(ProtocolError):
    step = 3


class StaleTimestamp(ProtocolError):
    pass


class NoMatchingSensor(ProtocolError):
    step = 3


class WrongIntermediate(ProtocolError):
    step = 4


class AuthFailed(ProtocolError):
    step = 5


class NoPendingSession(ProtocolError):
    step = 5


@dataclass(frozen=True)
class FreshnessPolicy:
    delta_t: int = 5
    hop_delay: int = 1

    def __post_init__(self) -> None:
        if self.delta_t <= 0:
            raise ValueError("delta_t must be positive")
        if self.hop_delay < 0:
            raise ValueError("hop_delay must be non-negative")

    def is_fresh(self, received: int, stamped: int) -> bool:
        return ts_distance(received, stamped) < self.delta_t


@dataclass
class PendingSession:
    r_n: BitString
    t_n: int
    m1: BitString
    consumed: bool = False


def sn_begin_auth(
    creds: SensorCredentials,
    clock: SimClock,
    rng: NonceSource,
    ops: OpCounter | None = None,
) -> tuple[Message1, PendingSession]:
    t_n = clock.now()
    r_n = rng.next_nonce()
    m1 = xor(creds.a_n, r_n, ops)
    t = ts_bits(t_n)
    m2 = xor(concat(xor(creds.id_n, creds.b_n, ops), t), concat(t, r_n), ops)
    return Message1(m1, m2, t_n), PendingSession(r_n, t_n, m1)


def in_forward_up(state: IntermediateState, msg: Message1) -> Message2:
    return Message2(msg.m1, msg.m2, msg.t_n, state.id_in)


def lookup_sensor(
    hub: HubState, m1: BitString, m2: BitString, t_n: int, ops: OpCounter | None = None
) -> HubEntry | None:
    """Scan the whole table for the entry that produced (m1, m2, tN).

    Every entry is visited even after a hit so the XOR count is 2n + 1.
    """
    t = ts_bits(t_n)
    d = xor(m2, concat(hub.k_hn, t), ops)
    found = None
    for entry in hub.table:
        r_i = xor(m1, entry.a_n, ops)
        if xor(d, concat(t, r_i), ops) == concat(entry.k_n, _ZERO_TS) and found is None:
            found = entry
    return found


def session_key(
    m1: BitString,
    r_n: BitString,
    a_n: BitString,
    r_h: BitString,
    t_n: int,
    m4: BitString,
    t_h: int,
    ops: OpCounter | None = None,
) -> BitString:
    return sha1(concat(m1, r_n, a_n, r_h, ts_bits(t_n), m4, ts_bits(t_h)), ops)


def hn_process(
    hub: HubState,
    msg: Message2,
    clock: SimClock,
    rng: NonceSource,
    policy: FreshnessPolicy,
    ops: OpCounter | None = None,
) -> tuple[Message3, BitString]:
    if not hub.knows_intermediate(msg.id_in):
        raise UnknownIntermediate(f"intermediate {msg.id_in.hex()} not registered")
    if not policy.is_fresh(clock.now(), msg.t_n):
        raise StaleTimestamp(f"tN={msg.t_n} received at {clock.now()}", step=3)
    entry = lookup_sensor(hub, msg.m1, msg.m2, msg.t_n, ops)
    if entry is None:
        raise NoMatchingSensor("no table entry satisfies the lookup check")
    r_n = xor(msg.m1, entry.a_n, ops)
    t_h = clock.now()
    r_h = rng.next_nonce()
    m3 = xor(entry.a_n, r_h, ops)
    m4 = xor(xor(hub.k_hn, entry.k_n, ops), sha1(concat(entry.a_n, r_n, r_h), ops), ops)
    k_s = session_key(msg.m1, r_n, entry.a_n, r_h, msg.t_n, m4, t_h, ops)
    entry.session_key = k_s
    return Message3(m3, m4, t_h, msg.id_in), k_s


def in_forward_down(state: IntermediateState, msg: Message3) -> Message4:
    if msg.id_in != state.id_in:
        raise WrongIntermediate(f"frame for {msg.id_in.hex()}, this is {state.id_in.hex()}")
    return Message4(msg.m3, msg.m4, msg.t_h)


def sn_complete_auth(
    creds: SensorCredentials,
    pending: PendingSession | None,
    msg: Message4,
    clock: SimClock,
    policy: FreshnessPolicy,
    ops: OpCounter | None = None,
) -> BitString:
    """Verify the hub's reply and store the session key in ``creds``.

    ``pending`` is consumed whether or not verification succeeds; after a
    failure the sensor starts over with :func:`sn_begin_auth`.
    """
    if pending is None or pending.consumed:
        raise NoPendingSession("no outstanding authentication request")
    pending.consumed = True
    if not policy.is_fresh(clock.now(), msg.t_h):
        raise StaleTimestamp(f"tH={msg.t_h} received at {clock.now()}", step=5)
    r_h = xor(msg.m3, creds.a_n, ops)
    lhs = xor(xor(msg.m4, creds.id_n, ops), creds.b_n, ops)
    if lhs != sha1(concat(creds.a_n, pending.r_n, r_h), ops):
        raise AuthFailed("hub proof does not verify")
    k_s = session_key(pending.m1, pending.r_n, creds.a_n, r_h, pending.t_n, msg.m4, msg.t_h, ops)
    creds.session_key = k_s
    return k_s

