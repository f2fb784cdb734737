"""Deterministic discrete-event radio simulation.

Time lives on an integer nanosecond clock; events are ordered by
(time, insertion sequence), so two runs with the same scenario and seed
replay the exact same history. The channel model is per-frame: every
transmission produces one reception candidate per other node, and all
temporally overlapping frames at a receiver are judged together when the
frame ends (strongest wins only with a clear capture margin).
"""

from __future__ import annotations

import hashlib
import heapq
import random
from collections import Counter, deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

from .geo import LatLonAlt, geo_to_local, node_distance_m
from .mesh import (
    ActionKind,
    MeshPacket,
    RouterState,
    RxMetadata,
    default_slot_time_s,
)
from .phy import (
    DecodeOutcome,
    EnvironmentClass,
    RadioConfig,
    decode_outcome,
    noise_floor_dbm,
    path_loss_db,
    received_signal,
    time_on_air_s,
)
from .scenarios import (
    EnvBand,
    LinkOverride,
    NodeSpec,
    Route,
    Scenario,
    ScenarioError,
)
from . import telemetry

__all__ = [
    "Event",
    "EventKind",
    "GatewayDelivery",
    "LinkTable",
    "ReceptionOutcome",
    "ReceptionRecord",
    "SimReport",
    "derive_seed",
    "geo_to_local",
    "node_distance_m",
    "propagate",
    "resolve_collisions",
    "run",
]

NS_PER_S = 1_000_000_000

# Frames older than this can no longer overlap anything new; see _prune.
_FRAME_WINDOW_NS = 60 * NS_PER_S


def derive_seed(master: int, *tags: object) -> int:
    """Stable per-stream seed derivation, independent of hash randomization."""
    text = ":".join([str(master), *map(str, tags)])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


class ReceptionOutcome(Enum):
    DECODED = "DECODED"
    BELOW_SENSITIVITY = "BELOW_SENSITIVITY"
    BELOW_SNR_FLOOR = "BELOW_SNR_FLOOR"
    COLLIDED = "COLLIDED"
    TX_BUSY = "TX_BUSY"


_FROM_DECODE = {
    DecodeOutcome.DECODED: ReceptionOutcome.DECODED,
    DecodeOutcome.BELOW_SENSITIVITY: ReceptionOutcome.BELOW_SENSITIVITY,
    DecodeOutcome.BELOW_SNR_FLOOR: ReceptionOutcome.BELOW_SNR_FLOOR,
}


class EventKind(Enum):
    APP_EMIT = "APP_EMIT"
    TX_START = "TX_START"
    TX_END = "TX_END"
    REBROADCAST_FIRE = "REBROADCAST_FIRE"


@dataclass(frozen=True)
class Event:
    """One scheduled action; data carries the kind-specific payload."""

    time_ns: int
    seq: int
    kind: EventKind
    subject: str
    packet: MeshPacket | None = None
    data: Any = None

    @property
    def time_s(self) -> float:
        return self.time_ns / NS_PER_S


class LinkTable:
    """Per-pair channel overrides; symmetric unless an entry is directed."""

    def __init__(self, overrides: Iterable[LinkOverride] = ()):
        self._directed: dict[tuple[str, str], LinkOverride] = {}
        self._symmetric: dict[tuple[str, str], LinkOverride] = {}
        for ov in overrides:
            if ov.directed:
                self._directed[(ov.a, ov.b)] = ov
            else:
                self._symmetric[self._key(ov.a, ov.b)] = ov

    @staticmethod
    def _key(a: str, b: str) -> tuple[str, str]:
        return (a, b) if a <= b else (b, a)

    def lookup(self, tx: str, rx: str) -> LinkOverride | None:
        hit = self._directed.get((tx, rx))
        if hit is not None:
            return hit
        return self._symmetric.get(self._key(tx, rx))


@dataclass
class ReceptionRecord:
    """One transmitter-receiver candidate for one frame."""

    time_s: float
    transmitter: str
    receiver: str
    origin: str
    packet_id: int
    port: str
    hop_limit: int
    rssi_dbm: float
    snr_db: float
    distance_m: float
    outcome: ReceptionOutcome
    tx_position: LatLonAlt

    def to_dict(self) -> dict[str, Any]:
        return {
            "time_s": round(self.time_s, 6),
            "transmitter": self.transmitter,
            "receiver": self.receiver,
            "origin": self.origin,
            "packet_id": self.packet_id,
            "port": self.port,
            "hop_limit": self.hop_limit,
            "rssi_dbm": round(self.rssi_dbm, 6),
            "snr_db": round(self.snr_db, 6),
            "distance_m": round(self.distance_m, 6),
            "outcome": self.outcome.value,
            "tx_latitude": round(self.tx_position.latitude, 7),
            "tx_longitude": round(self.tx_position.longitude, 7),
            "tx_altitude_m": round(self.tx_position.altitude_m, 3),
        }


@dataclass(frozen=True)
class GatewayDelivery:
    """A packet that reached a gateway's application layer."""

    time_s: float
    gateway_id: str
    packet: MeshPacket
    rx: RxMetadata


@dataclass
class SimReport:
    scenario_name: str
    seed: int
    duration_s: float
    receptions: list[ReceptionRecord] = field(default_factory=list)
    transmissions: int = 0
    duplicates_suppressed: int = 0
    originated: Counter = field(default_factory=Counter)
    delivered_to_gateway: Counter = field(default_factory=Counter)
    app_deliveries: Counter = field(default_factory=Counter)
    hop_count_histogram: Counter = field(default_factory=Counter)
    airtime_busy_fraction: dict[str, float] = field(default_factory=dict)
    gateway_deliveries: list[GatewayDelivery] = field(default_factory=list)
    trace: list[str] | None = None

    @property
    def collisions(self) -> int:
        return self.outcome_counts().get(ReceptionOutcome.COLLIDED, 0)

    def outcome_counts(self) -> Counter:
        return Counter(r.outcome for r in self.receptions)

    def link_stats(self) -> dict[str, dict[str, float]]:
        """Mean decoded RSSI/SNR per directed transmitter->receiver pair."""
        acc: dict[str, list[tuple[float, float]]] = {}
        for r in self.receptions:
            if r.outcome is ReceptionOutcome.DECODED:
                acc.setdefault(f"{r.transmitter}->{r.receiver}", []).append(
                    (r.rssi_dbm, r.snr_db)
                )
        return {
            key: {
                "frames": len(vals),
                "mean_rssi_dbm": round(sum(v[0] for v in vals) / len(vals), 6),
                "mean_snr_db": round(sum(v[1] for v in vals) / len(vals), 6),
            }
            for key, vals in sorted(acc.items())
        }

    def pdr(self) -> dict[str, float]:
        return {
            origin: round(self.delivered_to_gateway.get(origin, 0) / count, 6)
            for origin, count in sorted(self.originated.items())
            if count > 0
        }

    def summary_dict(self) -> dict[str, Any]:
        counts = self.outcome_counts()
        return {
            "scenario": self.scenario_name,
            "seed": self.seed,
            "duration_s": self.duration_s,
            "counts": {
                "transmissions": self.transmissions,
                "decoded": counts.get(ReceptionOutcome.DECODED, 0),
                "collided": counts.get(ReceptionOutcome.COLLIDED, 0),
                "below_sensitivity": counts.get(ReceptionOutcome.BELOW_SENSITIVITY, 0),
                "below_snr_floor": counts.get(ReceptionOutcome.BELOW_SNR_FLOOR, 0),
                "tx_busy": counts.get(ReceptionOutcome.TX_BUSY, 0),
                "duplicates_suppressed": self.duplicates_suppressed,
            },
            "originated": dict(sorted(self.originated.items())),
            "delivered_to_gateway": dict(sorted(self.delivered_to_gateway.items())),
            "pdr": self.pdr(),
            "app_deliveries": dict(sorted(self.app_deliveries.items())),
            "hop_count_histogram": {
                str(k): v for k, v in sorted(self.hop_count_histogram.items())
            },
            "airtime_busy_fraction": {
                node: round(fraction, 9)
                for node, fraction in sorted(self.airtime_busy_fraction.items())
            },
            "links": self.link_stats(),
        }

    def to_dict(self) -> dict[str, Any]:
        out = self.summary_dict()
        out["receptions"] = [r.to_dict() for r in self.receptions]
        return out


def env_for_distance(bands: Sequence[EnvBand], distance_m: float) -> EnvironmentClass:
    for band in bands:
        if band.max_distance_m is None or distance_m <= band.max_distance_m:
            return band.env
    return bands[-1].env


def resolve_collisions(
    candidates: Sequence[ReceptionRecord],
    capture_threshold_db: float = 6.0,
) -> list[ReceptionOutcome]:
    """Judge a set of mutually overlapping candidates at one receiver.

    A frame survives only when its RSSI clears every other overlapping
    frame by the capture threshold and it would have decoded alone;
    everything else in the set is a collision loss. A singleton set is
    returned unchanged.
    """
    if len(candidates) == 1:
        return [candidates[0].outcome]
    outcomes: list[ReceptionOutcome] = []
    for i, cand in enumerate(candidates):
        strongest_other = max(
            c.rssi_dbm for j, c in enumerate(candidates) if j != i
        )
        dominant = cand.rssi_dbm >= strongest_other + capture_threshold_db
        if dominant and cand.outcome is ReceptionOutcome.DECODED:
            outcomes.append(ReceptionOutcome.DECODED)
        else:
            outcomes.append(ReceptionOutcome.COLLIDED)
    return outcomes


def propagate(
    transmitter: str,
    packet: MeshPacket,
    start_time_s: float,
    positions: Mapping[str, LatLonAlt],
    radios: Mapping[str, RadioConfig],
    link_table: LinkTable,
    default_env: Sequence[EnvBand],
    rng: random.Random,
    transmitting: frozenset[str] | set[str] = frozenset(),
) -> list[ReceptionRecord]:
    """Compute the reception candidate at every node other than the sender.

    Shadowing is drawn per (link, frame) from rng unless the link pins a
    fixed shadow value. Nodes currently transmitting are marked TX_BUSY;
    collisions are resolved later, once all overlapping frames are known.
    """
    tx_cfg = radios[transmitter]
    tx_pos = positions[transmitter]
    end_time_s = start_time_s + time_on_air_s(len(packet.payload), tx_cfg)
    records: list[ReceptionRecord] = []
    for receiver, rx_pos in positions.items():
        if receiver == transmitter:
            continue
        override = link_table.lookup(transmitter, receiver)
        if override is not None and override.distance_m is not None:
            distance = override.distance_m
        else:
            distance = node_distance_m(tx_pos, rx_pos)
        if override is not None and override.env is not None:
            env = override.env
        else:
            env = env_for_distance(default_env, distance)
        if override is not None and override.shadow_db is not None:
            shadow = override.shadow_db
        elif env.shadowing_sigma_db > 0:
            shadow = rng.gauss(0.0, env.shadowing_sigma_db)
        else:
            shadow = 0.0
        loss = path_loss_db(distance, env, shadow)
        rssi, snr = received_signal(tx_cfg, loss)
        rx_cfg = radios[receiver]
        if rx_cfg is not tx_cfg:
            # SNR is set by the receiver's own noise floor.
            snr = rssi - noise_floor_dbm(rx_cfg)
        if receiver in transmitting:
            outcome = ReceptionOutcome.TX_BUSY
        else:
            outcome = _FROM_DECODE[decode_outcome(rssi, snr, radios[receiver])]
        records.append(
            ReceptionRecord(
                time_s=end_time_s,
                transmitter=transmitter,
                receiver=receiver,
                origin=packet.origin,
                packet_id=packet.packet_id,
                port=packet.port.value,
                hop_limit=packet.hop_limit,
                rssi_dbm=rssi,
                snr_db=snr,
                distance_m=distance,
                outcome=outcome,
                tx_position=tx_pos,
            )
        )
    return records


class _AirFrame:
    """A frame in flight plus its per-receiver candidates."""

    __slots__ = ("transmitter", "packet", "start_ns", "end_ns", "candidates", "rssi_at")

    def __init__(
        self,
        transmitter: str,
        packet: MeshPacket,
        start_ns: int,
        end_ns: int,
        candidates: list[ReceptionRecord],
    ):
        self.transmitter = transmitter
        self.packet = packet
        self.start_ns = start_ns
        self.end_ns = end_ns
        self.candidates = candidates
        self.rssi_at = {c.receiver: c.rssi_dbm for c in candidates}

    def overlaps(self, start_ns: int, end_ns: int) -> bool:
        return self.start_ns < end_ns and self.end_ns > start_ns


class _NodeRuntime:
    __slots__ = ("spec", "radio", "state", "route", "busy_until_ns", "tx_intervals")

    def __init__(self, spec: NodeSpec, radio: RadioConfig, state: RouterState, route: Route | None):
        self.spec = spec
        self.radio = radio
        self.state = state
        self.route = route
        self.busy_until_ns = 0
        self.tx_intervals: list[tuple[int, int]] = []

    def position_at(self, time_s: float) -> LatLonAlt:
        if self.route is not None:
            return self.route.position_at(time_s)
        return self.spec.position

    def transmitted_during(self, start_ns: int, end_ns: int) -> bool:
        # Intervals are sequential, so scan back only while they can overlap.
        for tx_start, tx_end in reversed(self.tx_intervals):
            if tx_end <= start_ns:
                return False
            if tx_start < end_ns:
                return True
        return False


class _Simulation:
    def __init__(self, scenario: Scenario, collect_trace: bool):
        self.scenario = scenario
        self.duration_ns = round(scenario.duration_s * NS_PER_S)
        self.link_table = LinkTable(scenario.links)
        self.shadow_rng = random.Random(derive_seed(scenario.seed, "shadow"))
        self.heap: list[tuple[int, int, Event]] = []
        self.seq = 0
        self.recent_frames: deque[_AirFrame] = deque()
        self.flood_initial_hop: dict[tuple[str, int], int] = {}
        self.report = SimReport(
            scenario_name=scenario.name,
            seed=scenario.seed,
            duration_s=scenario.duration_s,
            trace=[] if collect_trace else None,
        )
        self.nodes: dict[str, _NodeRuntime] = {}
        for spec in scenario.nodes:
            radio = scenario.node_radio(spec)
            state = RouterState(
                spec.id,
                spec.role,
                rng=random.Random(derive_seed(scenario.seed, "backoff", spec.id)),
                first_packet_id=derive_seed(scenario.seed, "pktid", spec.id) % (1 << 32),
                contention=scenario.contention,
                slot_time_s=default_slot_time_s(radio),
            )
            self.nodes[spec.id] = _NodeRuntime(
                spec, radio, state, scenario.node_route(spec)
            )

    # -- scheduling ------------------------------------------------------

    def push(
        self,
        time_ns: int,
        kind: EventKind,
        subject: str,
        packet: MeshPacket | None = None,
        data: Any = None,
    ) -> None:
        self.seq += 1
        event = Event(time_ns, self.seq, kind, subject, packet, data)
        heapq.heappush(self.heap, (time_ns, self.seq, event))

    def schedule_app_emissions(self) -> None:
        for spec in self.scenario.nodes:
            for app in spec.apps:
                for i in range(app.emission_count(self.scenario.duration_s)):
                    t_s = app.start_offset_s + i * app.period_s
                    self.push(round(t_s * NS_PER_S), EventKind.APP_EMIT, spec.id, data=app)

    # -- event handlers ---------------------------------------------------

    def run(self) -> SimReport:
        self.schedule_app_emissions()
        while self.heap:
            _, _, event = heapq.heappop(self.heap)
            self.trace(event)
            if event.kind is EventKind.APP_EMIT:
                self.on_app_emit(event)
            elif event.kind is EventKind.TX_START:
                self.on_tx_start(event)
            elif event.kind is EventKind.TX_END:
                self.on_tx_end(event)
            elif event.kind is EventKind.REBROADCAST_FIRE:
                self.queue_tx(self.nodes[event.subject], event.packet, event.time_ns)
        self.finish()
        return self.report

    def trace(self, event: Event) -> None:
        if self.report.trace is None:
            return
        parts = [f"t={event.time_ns / NS_PER_S:.6f}", f"seq={event.seq}",
                 event.kind.value, f"node={event.subject}"]
        if event.packet is not None:
            parts.append(
                f"packet={event.packet.origin}:{event.packet.packet_id}"
                f" hop={event.packet.hop_limit}"
            )
        self.report.trace.append(" ".join(parts))

    def on_app_emit(self, event: Event) -> None:
        node = self.nodes[event.subject]
        app = event.data
        time_s = event.time_ns / NS_PER_S
        payload = self.build_payload(node, app, time_s)
        packet = node.state.originate(app.port, payload, node.radio.hop_limit, time_s)
        self.report.originated[node.spec.id] += 1
        self.flood_initial_hop[(packet.origin, packet.packet_id)] = packet.hop_limit
        self.queue_tx(node, packet, event.time_ns)

    def build_payload(self, node: _NodeRuntime, app, time_s: float) -> bytes:
        if app.payload_source.value == "IRRADIANCE_SENSOR":
            adc = telemetry.irradiance_adc(time_s, self.scenario.irradiance_profile)
            return telemetry.encode_irradiance(telemetry.IrradianceSample.from_adc(adc))
        if app.payload_source.value == "GNSS_TRACKER":
            pos = node.position_at(time_s)
            return telemetry.encode_position(
                pos.latitude,
                pos.longitude,
                pos.altitude_m,
                self.scenario.epoch_s + int(time_s),
            )
        return app.text.encode("utf-8")

    def queue_tx(self, node: _NodeRuntime, packet: MeshPacket, earliest_ns: int) -> None:
        start_ns = max(earliest_ns, node.busy_until_ns)
        self.push(start_ns, EventKind.TX_START, node.spec.id, packet=packet)

    def on_tx_start(self, event: Event) -> None:
        node = self.nodes[event.subject]
        if node.busy_until_ns > event.time_ns:
            # A rebroadcast landed mid-transmission; retry when the radio frees.
            self.push(node.busy_until_ns, EventKind.TX_START, event.subject, packet=event.packet)
            return
        packet = event.packet
        toa_ns = round(time_on_air_s(len(packet.payload), node.radio) * NS_PER_S)
        start_ns, end_ns = event.time_ns, event.time_ns + toa_ns
        node.busy_until_ns = end_ns
        node.tx_intervals.append((start_ns, end_ns))
        self.report.transmissions += 1
        time_s = start_ns / NS_PER_S
        positions = {nid: rt.position_at(time_s) for nid, rt in self.nodes.items()}
        radios = {nid: rt.radio for nid, rt in self.nodes.items()}
        mid_tx = {
            nid for nid, rt in self.nodes.items()
            if nid != event.subject and rt.busy_until_ns > start_ns
        }
        candidates = propagate(
            event.subject,
            packet,
            time_s,
            positions,
            radios,
            self.link_table,
            self.scenario.default_env,
            self.shadow_rng,
            transmitting=mid_tx,
        )
        frame = _AirFrame(event.subject, packet, start_ns, end_ns, candidates)
        self.recent_frames.append(frame)
        self.push(end_ns, EventKind.TX_END, event.subject, packet=packet, data=frame)

    def on_tx_end(self, event: Event) -> None:
        frame: _AirFrame = event.data
        self.prune_frames(event.time_ns)
        for cand in frame.candidates:
            rx = self.nodes[cand.receiver]
            if rx.transmitted_during(frame.start_ns, frame.end_ns):
                cand.outcome = ReceptionOutcome.TX_BUSY
            else:
                rivals = [
                    g.rssi_at[cand.receiver]
                    for g in self.recent_frames
                    if g is not frame
                    and g.transmitter != cand.receiver
                    and g.overlaps(frame.start_ns, frame.end_ns)
                ]
                if rivals:
                    dominant = cand.rssi_dbm >= max(rivals) + self.scenario.capture_threshold_db
                    if not (dominant and cand.outcome is ReceptionOutcome.DECODED):
                        cand.outcome = ReceptionOutcome.COLLIDED
            self.report.receptions.append(cand)
            if cand.outcome is ReceptionOutcome.DECODED:
                self.deliver(cand, frame.packet, event.time_ns)

    def deliver(self, cand: ReceptionRecord, packet: MeshPacket, now_ns: int) -> None:
        rx = self.nodes[cand.receiver]
        meta = RxMetadata(
            time_s=now_ns / NS_PER_S, rssi_dbm=cand.rssi_dbm, snr_db=cand.snr_db
        )
        for action in rx.state.on_receive(packet, meta):
            if action.kind is ActionKind.DROP_DUPLICATE:
                self.report.duplicates_suppressed += 1
            elif action.kind is ActionKind.DELIVER_TO_APP:
                self.report.app_deliveries[cand.receiver] += 1
                initial = self.flood_initial_hop.get(
                    (packet.origin, packet.packet_id), packet.hop_limit
                )
                self.report.hop_count_histogram[initial - packet.hop_limit + 1] += 1
            elif action.kind is ActionKind.EMIT_UPLINK:
                self.report.delivered_to_gateway[packet.origin] += 1
                self.report.gateway_deliveries.append(
                    GatewayDelivery(
                        time_s=meta.time_s,
                        gateway_id=cand.receiver,
                        packet=packet,
                        rx=meta,
                    )
                )
            elif action.kind is ActionKind.SCHEDULE_REBROADCAST:
                fire_ns = now_ns + round(action.delay_s * NS_PER_S)
                self.push(
                    fire_ns, EventKind.REBROADCAST_FIRE, cand.receiver, packet=action.packet
                )

    def prune_frames(self, now_ns: int) -> None:
        while self.recent_frames and self.recent_frames[0].end_ns < now_ns - _FRAME_WINDOW_NS:
            self.recent_frames.popleft()

    def finish(self) -> None:
        for nid, rt in self.nodes.items():
            busy_ns = sum(
                max(0, min(end, self.duration_ns) - min(start, self.duration_ns))
                for start, end in rt.tx_intervals
            )
            self.report.airtime_busy_fraction[nid] = busy_ns / self.duration_ns


def run(scenario: Scenario, collect_trace: bool = False) -> SimReport:
    """Validate and execute a scenario; raises ScenarioError when unsound."""
    violations = scenario.validate()
    if violations:
        raise ScenarioError(violations)
    return _Simulation(scenario, collect_trace).run()
