"""Deterministic discrete-event channel SN <-> IN <-> HN with a scripted adversary.

The adversary sees and controls frames only. Scripts can drop, delay,
tamper with or replay frames, and capture a sensor, which yields the
sensor's stored tuple. Nothing in the script API reaches the hub key or
any per-sensor key.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Sequence, Union

from . import nodes
from .metrics import CostModel, CostReport, DEFAULT_MODEL, SessionOps, collect
from .nodes import FreshnessPolicy, PendingSession, ProtocolError
from .primitives import BitString, NonceSource, SimClock, concat, sha1, xor
from .registry import Deployment, HubState, IntermediateState, SensorCredentials
from .wire import Hop, Transcript, TranscriptRecord, WrongLength, decode, encode


# -- adversary actions -------------------------------------------------------
# ``nth`` selects the nth honest frame on the hop (0-based); None means all.

@dataclass(frozen=True)
class Observe:
    hop: Hop


@dataclass(frozen=True)
class Drop:
    hop: Hop
    nth: int | None = None


@dataclass(frozen=True)
class Delay:
    hop: Hop
    by: int
    nth: int | None = None


@dataclass(frozen=True)
class Tamper:
    hop: Hop
    bits: tuple[int, ...]
    nth: int | None = None


@dataclass(frozen=True)
class Replay:
    """Re-inject transcript record ``index`` so that it is delivered at tick ``at``."""

    index: int
    at: int


@dataclass(frozen=True)
class CaptureSensor:
    """Read out a sensor's memory once the run has finished."""

    sensor_index: int


Action = Union[Observe, Drop, Delay, Tamper, Replay, CaptureSensor]


@dataclass(frozen=True)
class CapturedTuple:
    id_n: BitString
    a_n: BitString
    b_n: BitString
    session_key: BitString | None


class NoResponse(ProtocolError):
    """The run ended with a step still waiting for a frame."""


class KeyMismatch(ProtocolError):
    step = 5


# -- world -------------------------------------------------------------------

class World:
    """Provisioned nodes sharing one simulated clock."""

    def __init__(
        self,
        hub: HubState,
        sensors: list[SensorCredentials],
        intermediates: list[IntermediateState],
        policy: FreshnessPolicy | None = None,
        clock: SimClock | None = None,
    ) -> None:
        self.hub = hub
        self.sensors = sensors
        self.intermediates = intermediates
        self.policy = policy or FreshnessPolicy()
        self.clock = clock or SimClock()
        self.pending: dict[int, PendingSession] = {}

    @classmethod
    def from_deployment(cls, deployment: Deployment, policy: FreshnessPolicy | None = None) -> World:
        hub, sensors, ins = deployment.provision()
        return cls(hub, sensors, ins, policy)

    @property
    def n_sensors(self) -> int:
        return len(self.hub.table)

    @property
    def m_intermediates(self) -> int:
        return len(self.hub.intermediates)


@dataclass
class SessionOutcome:
    agreed: bool
    sn_key: BitString | None
    hn_key: BitString | None
    transcript: Transcript
    costs: CostReport
    step: int | None = None
    error: ProtocolError | None = None
    captured: list[CapturedTuple] = field(default_factory=list)
    observed: list[TranscriptRecord] = field(default_factory=list)

    @property
    def reason(self) -> str | None:
        return None if self.error is None else type(self.error).__name__

    def __str__(self) -> str:
        if self.agreed:
            return f"AgreedKeys({self.sn_key.hex()})"
        return f"AbortedAt(Step{self.step}, {self.reason})"


@dataclass(order=True)
class _Event:
    deliver_at: int
    seq: int
    hop: Hop = field(compare=False)
    payload: bytes | None = field(compare=False)
    annotation: str = field(compare=False, default="")
    replay_index: int | None = field(compare=False, default=None)


def _flip_bits(data: bytes, positions: Sequence[int]) -> bytes:
    buf = bytearray(data)
    for p in positions:
        if not 0 <= p < 8 * len(buf):
            raise ValueError(f"bit {p} outside a {8 * len(buf)}-bit frame")
        buf[p // 8] ^= 0x80 >> (p % 8)
    return bytes(buf)


def _matches(action: Drop | Delay | Tamper, hop: Hop, nth: int) -> bool:
    return action.hop is hop and (action.nth is None or action.nth == nth)


def run_session(
    world: World,
    script: Sequence[Action] = (),
    seed: int = 0,
    sensor: int = 0,
    intermediate: int = 0,
    start: int | None = None,
    prior: Transcript | None = None,
    initiate: bool = True,
    model: CostModel = DEFAULT_MODEL,
) -> SessionOutcome:
    """Run one handshake for ``world.sensors[sensor]`` through the event queue.

    ``start`` moves the shared clock forward before Step 1. Replay indices
    refer to ``prior`` when given, otherwise to this run's own transcript.
    With ``initiate=False`` the sensor stays silent and only replays move.
    """
    clock = world.clock
    if start is not None:
        clock.advance_to(start)
    policy = world.policy
    rng = NonceSource(seed)
    ops = SessionOps()
    transcript = Transcript()
    observed: list[TranscriptRecord] = []
    observe_hops = {a.hop for a in script if isinstance(a, Observe)}
    queue: list[_Event] = []
    seq = itertools.count()
    sent_on = {h: 0 for h in Hop}
    creds = world.sensors[sensor]
    relay = world.intermediates[intermediate]

    errors: list[ProtocolError] = []
    progress = 0
    sn_key: BitString | None = None
    hn_key: BitString | None = None

    def transmit(hop: Hop, data: bytes) -> None:
        nth = sent_on[hop]
        sent_on[hop] += 1
        deliver_at = clock.ticks + policy.hop_delay
        notes = []
        for action in script:
            if isinstance(action, Drop) and _matches(action, hop, nth):
                observed.append(TranscriptRecord(clock.now(), hop, data, "dropped"))
                return
            if isinstance(action, Delay) and _matches(action, hop, nth):
                deliver_at += action.by
                notes.append(f"delayed+{action.by}")
            elif isinstance(action, Tamper) and _matches(action, hop, nth):
                data = _flip_bits(data, action.bits)
                notes.append("tampered@" + "/".join(map(str, action.bits)))
        if hop in observe_hops:
            observed.append(TranscriptRecord(clock.now(), hop, data, "observed"))
        heapq.heappush(queue, _Event(deliver_at, next(seq), hop, data, ";".join(notes)))

    for action in script:
        if isinstance(action, Replay):
            if action.at < clock.ticks:
                raise ValueError(f"replay at {action.at} is before the current tick {clock.ticks}")
            # payload is resolved at delivery so in-run records can be replayed
            heapq.heappush(queue, _Event(action.at, next(seq), Hop.SN_IN, None, "replay", action.index))

    if initiate:
        msg1, pending = nodes.sn_begin_auth(creds, clock, rng, ops.sn)
        world.pending[sensor] = pending
        progress = 1
        transmit(Hop.SN_IN, encode(msg1))

    while queue:
        ev = heapq.heappop(queue)
        clock.advance_to(ev.deliver_at)
        hop, data = ev.hop, ev.payload
        if ev.replay_index is not None:
            source = prior if prior is not None else transcript
            try:
                rec = source[ev.replay_index]
            except IndexError:
                continue
            hop, data = rec.hop, rec.data
        transcript.append(TranscriptRecord(clock.now(), hop, data, ev.annotation))
        try:
            frame = decode(hop.kind, data)
        except WrongLength:
            continue  # malformed frames are dropped silently
        try:
            if hop is Hop.SN_IN:
                progress = max(progress, 2)
                transmit(Hop.IN_HN, encode(nodes.in_forward_up(relay, frame)))
            elif hop is Hop.IN_HN:
                msg3, key = nodes.hn_process(world.hub, frame, clock, rng, policy, ops.hn)
                if hn_key is None:
                    hn_key = key
                progress = max(progress, 3)
                transmit(Hop.HN_IN, encode(msg3))
            elif hop is Hop.HN_IN:
                msg4 = nodes.in_forward_down(relay, frame)
                progress = max(progress, 4)
                transmit(Hop.IN_SN, encode(msg4))
            else:
                key = nodes.sn_complete_auth(
                    creds, world.pending.pop(sensor, None), frame, clock, policy, ops.sn
                )
                if sn_key is None:
                    sn_key = key
                progress = 5
        except ProtocolError as exc:
            errors.append(exc)

    captured = [
        CapturedTuple(s.id_n, s.a_n, s.b_n, s.session_key)
        for s in (world.sensors[a.sensor_index] for a in script if isinstance(a, CaptureSensor))
    ]
    costs = collect(ops, transcript, world.n_sensors, world.m_intermediates, model)
    outcome = SessionOutcome(
        agreed=False,
        sn_key=sn_key,
        hn_key=hn_key,
        transcript=transcript,
        costs=costs,
        captured=captured,
        observed=observed,
    )
    if errors:
        outcome.error = errors[0]
        outcome.step = errors[0].step
    elif sn_key is None or hn_key is None:
        outcome.error = NoResponse(f"no frame reached step {progress + 1}", step=progress + 1)
        outcome.step = progress + 1
    elif sn_key != hn_key:
        outcome.error = KeyMismatch("sensor and hub derived different keys")
        outcome.step = 5
    else:
        outcome.agreed = True
    return outcome


def replay_attack(world: World, recorded: Transcript, at: int, seed: int = 0) -> SessionOutcome:
    """Inject the first recorded IN->HN frame so the hub receives it at tick ``at``."""
    for index, rec in enumerate(recorded):
        if rec.hop is Hop.IN_HN:
            break
    else:
        raise ValueError("transcript holds no IN->HN frame")
    return run_session(world, [Replay(index, at)], seed=seed, prior=recorded, initiate=False)


def adversary_can_compute(target: BitString, outcome: SessionOutcome) -> bool:
    """Try the obvious derivations from public frames and captured tuples.

    Checks whether ``target`` lies in the XOR span of every same-width value
    the adversary holds. A structural check only, not cryptanalysis.
    """
    known: list[BitString] = []
    for rec in list(outcome.transcript) + outcome.observed:
        try:
            frame = rec.frame()
        except WrongLength:
            continue
        for v in vars(frame).values():
            if isinstance(v, BitString) and v.width == target.width:
                known.append(v)
    for c in outcome.captured:
        known.extend(v for v in (c.id_n, c.a_n, c.b_n, c.session_key) if v is not None)
    if target in known:
        return True
    span = {0}
    for v in dict.fromkeys(known):
        span |= {s ^ v.value for s in span}
        if len(span) > 1 << 16:
            break
    return target.value in span


@dataclass
class CaptureReport:
    sensor_index: int
    captured: CapturedTuple
    combined_is_key_sum: bool
    hub_key_derivable: bool
    sensor_key_derivable: bool
    a_n_needs_sensor_key: bool
    others_agreed: dict[int, bool]

    @property
    def contained(self) -> bool:
        return (
            self.combined_is_key_sum
            and not self.hub_key_derivable
            and not self.sensor_key_derivable
            and self.a_n_needs_sensor_key
            and all(self.others_agreed.values())
        )


def capture_analysis(world: World, sensor_index: int, seed: int = 0) -> CaptureReport:
    """Capture one sensor after an honest run and check what leaks.

    The checker itself reads hub secrets to confirm non-derivability; the
    adversary only ever holds the captured tuple and the transcript.
    """
    outcome = run_session(world, [CaptureSensor(sensor_index)], seed=seed, sensor=sensor_index)
    tup = outcome.captured[0]
    entry = next(e for e in world.hub.table if e.a_n == tup.a_n)
    k_hn, k_n = world.hub.k_hn, entry.k_n

    combined = xor(tup.id_n, tup.b_n)
    # a_n via the hash oracle: only matches with the real kN supplied
    a_n_needs_key = (
        sha1(concat(tup.id_n, k_n)) == tup.a_n
        and sha1(concat(tup.id_n, combined)) != tup.a_n
        and sha1(concat(tup.id_n, tup.b_n)) != tup.a_n
    )
    others = {}
    for j in range(len(world.sensors)):
        if j != sensor_index:
            others[j] = run_session(world, seed=seed + 1 + j, sensor=j).agreed
    return CaptureReport(
        sensor_index=sensor_index,
        captured=tup,
        combined_is_key_sum=combined == xor(k_hn, k_n),
        hub_key_derivable=adversary_can_compute(k_hn, outcome),
        sensor_key_derivable=adversary_can_compute(k_n, outcome),
        a_n_needs_sensor_key=a_n_needs_key,
        others_agreed=others,
    )
