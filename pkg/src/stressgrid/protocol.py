"""Emulation of the in-home wireless control protocol.

A command frame carries one byte per device: bits 0-4 are the five relay
states of the device's disconnectivity column, bits 5-7 are zero. Devices
acknowledge in fixed slots of 5 ms keyed by device id. A command attempt
succeeds only if both the command and its ack survive the link (packet
reception rate squared); the sender retries up to three times, waiting out
the ack timeout on each failure.

Statistics produced per delivery: success flag, attempts used, end-to-end
latency in milliseconds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RELAY_BITS = 5
ACK_SLOT_MS = 5.0
BASE_TIMEOUT_MS = 21.0
RETRIES = 3

# Measured reception rate by distance; linear in between, clamped outside.
PRR_TABLE = {10.0: 1.00, 25.0: 0.98, 50.0: 0.50}


def encode(relay_columns) -> bytes:
    """Pack per-device relay states (5 bools each) into one byte per device."""
    out = bytearray()
    for bits in relay_columns:
        if len(bits) != RELAY_BITS:
            raise ValueError(f"expected {RELAY_BITS} relay bits, got {len(bits)}")
        byte = 0
        for k, bit in enumerate(bits):
            if bit:
                byte |= 1 << k
        out.append(byte)
    return bytes(out)


def decode(frame: bytes, device_id: int) -> tuple[bool, ...]:
    """Relay states addressed to `device_id` (1-based position in frame)."""
    if not 1 <= device_id <= len(frame):
        raise ValueError(f"device id {device_id} outside frame of {len(frame)}")
    byte = frame[device_id - 1]
    if byte >> RELAY_BITS:
        raise ValueError("non-zero padding bits")
    return tuple(bool(byte & (1 << k)) for k in range(RELAY_BITS))


def ack_slot(device_id: int, slot_ms: float = ACK_SLOT_MS) -> float:
    """Start of the device's acknowledgment slot, ms after the command."""
    if device_id < 1:
        raise ValueError("device ids are 1-based")
    return (device_id - 1) * slot_ms


@dataclass(frozen=True)
class DeviceProfile:
    kind: str
    power_active_w: float
    power_shed_w: float = 0.10


MBD = DeviceProfile("MBD", 0.36)  # bridge device, one per home
SBD = DeviceProfile("SBD", 0.40)  # switching device, one per room


@dataclass(frozen=True)
class LinkModel:
    prr_by_distance: dict[float, float] = field(
        default_factory=lambda: dict(PRR_TABLE)
    )
    retries: int = RETRIES
    ack_slot_ms: float = ACK_SLOT_MS
    base_timeout_ms: float = BASE_TIMEOUT_MS
    sw_latency_ms: float = 2.0
    sw_latency_worst_ms: float = 8.0
    hw_latency_ms: float = 28.0

    def prr_at(self, distance_m: float) -> float:
        xs = sorted(self.prr_by_distance)
        ys = [self.prr_by_distance[x] for x in xs]
        return float(np.interp(distance_m, xs, ys))

    def delivery_probability(self, distance_m: float) -> float:
        """Chance a command lands within the retry budget (command and ack
        each independently survive with probability prr)."""
        p = self.prr_at(distance_m) ** 2
        return 1.0 - (1.0 - p) ** (1 + self.retries)


@dataclass
class DeliveryResult:
    delivered: bool
    attempts: int
    latency_ms: float


def attempt_timeout_ms(frame_devices: int, link: LinkModel) -> float:
    """Wait before a retry: the nominal timeout, stretched when the ack
    schedule of a large frame would not fit inside it."""
    return max(link.base_timeout_ms, frame_devices * link.ack_slot_ms)


def deliver(
    frame: bytes,
    link: LinkModel,
    distance_m: float,
    rng: np.random.Generator,
    worst_case: bool = False,
) -> DeliveryResult:
    """Send one frame through the lossy link, retrying on silence."""
    if len(frame) == 0:
        raise ValueError("empty frame")
    p = link.prr_at(distance_m) ** 2
    timeout = attempt_timeout_ms(len(frame), link)
    sw = link.sw_latency_worst_ms if worst_case else link.sw_latency_ms
    elapsed = 0.0
    for attempt in range(1, link.retries + 2):
        if rng.random() < p:
            return DeliveryResult(True, attempt, elapsed + sw + link.hw_latency_ms)
        elapsed += timeout
    return DeliveryResult(False, link.retries + 1, elapsed)


def overhead_power(rooms: int, shed: bool = False) -> float:
    """Control-plane draw of one home: a bridge plus one device per room."""
    if rooms < 1:
        raise ValueError("need at least one room")
    if shed:
        return (rooms + 1) * MBD.power_shed_w
    return rooms * SBD.power_active_w + MBD.power_active_w


class CommandChannel:
    """Applies power-state commands to homes.

    By default delivery is perfect and instantaneous at the 1 s round
    granularity (command latency is tens of milliseconds). With a link
    attached, each command succeeds with the link's delivery probability;
    a lost command leaves the home's state unchanged.
    """

    def __init__(
        self,
        link: LinkModel | None = None,
        distance_m: float = 10.0,
        rng: np.random.Generator | None = None,
    ):
        self.link = link
        self.distance_m = distance_m
        self.rng = rng
        self.sent = 0
        self.lost = 0
        self._p = None if link is None else link.delivery_probability(distance_m)

    def apply(self, home, level) -> bool:
        self.sent += 1
        if self._p is not None and self.rng.random() >= self._p:
            self.lost += 1
            return False
        home.current_level = level
        return True
