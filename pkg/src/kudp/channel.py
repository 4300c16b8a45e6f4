"""Seeded hazard models that turn a sent stream into what the receiver sees.

Two models, each consuming exactly one uniform draw per packet in stream
order:

* loss: every packet is dropped independently with probability ``loss_ratio``;
* swap: every packet is marked with probability ``swap_ratio``, then a left
  to right scan exchanges a marked packet with its successor. Two marks in a
  row cancel and both packets stay put.

The generator is numpy's PCG64 (``numpy.random.default_rng``), pinned so
that CSV output is reproducible across builds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from kudp.keying import StreamPacket


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class HazardConfig:
    loss_ratio: float = 0.0
    swap_ratio: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("loss_ratio", "swap_ratio"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @classmethod
    def from_percent(cls, loss_pct: float = 0.0, swap_pct: float = 0.0, seed: int = 0) -> "HazardConfig":
        return cls(round(loss_pct, 2) / 100.0, round(swap_pct, 2) / 100.0, seed)

    @property
    def is_joint(self) -> bool:
        return self.loss_ratio > 0 and self.swap_ratio > 0

    @property
    def kind(self) -> str:
        if self.is_joint:
            return "joint"
        if self.loss_ratio > 0:
            return "loss"
        if self.swap_ratio > 0:
            return "swap"
        return "none"

    @property
    def ratio(self) -> float:
        return self.loss_ratio if self.kind == "loss" else self.swap_ratio

    def rng(self) -> np.random.Generator:
        return make_rng(self.seed)


@dataclass(frozen=True)
class ArrivalEvent:
    """One datagram as seen by the receiver.

    ``ground_truth_index`` exists for scoring only; the reconstruction never
    reads it.
    """

    dest_port: int
    payload: bytes
    ground_truth_index: int | None = None
    received_at: float | None = field(default=None, compare=False)

    @classmethod
    def from_packet(cls, packet: StreamPacket) -> "ArrivalEvent":
        return cls(packet.dest_port, packet.payload, packet.seq_index)


@dataclass
class ArrivalSequence:
    events: list[ArrivalEvent] = field(default_factory=list)

    def __iter__(self) -> Iterator[ArrivalEvent]:
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def __getitem__(self, i):
        return self.events[i]

    def append(self, event: ArrivalEvent) -> None:
        self.events.append(event)

    def ground_truth(self) -> list[int | None]:
        return [e.ground_truth_index for e in self.events]

    def dropped(self, stream_length: int) -> set[int]:
        """Ground-truth indices in ``range(stream_length)`` that never arrived."""
        seen = {e.ground_truth_index for e in self.events}
        return {i for i in range(stream_length) if i not in seen}

    @classmethod
    def from_packets(cls, packets: Sequence[StreamPacket]) -> "ArrivalSequence":
        return cls([ArrivalEvent.from_packet(p) for p in packets])


def apply_loss(stream: Sequence[StreamPacket], loss_ratio: float, rng: np.random.Generator) -> ArrivalSequence:
    draws = rng.random(len(stream))
    return ArrivalSequence.from_packets([p for p, u in zip(stream, draws) if u >= loss_ratio])


def swap_marks(n: int, swap_ratio: float, rng: np.random.Generator) -> np.ndarray:
    return rng.random(n) < swap_ratio


def swap_order(marks: Sequence[bool]) -> list[int]:
    """Arrival order (as source positions) produced by a mark vector."""
    n = len(marks)
    order = list(range(n))
    i = 0
    while i < n - 1:
        if marks[i]:
            if not marks[i + 1]:
                order[i], order[i + 1] = order[i + 1], order[i]
            # a mark consumes its successor either way
            i += 2
        else:
            i += 1
    return order


def apply_swap(stream: Sequence[StreamPacket], swap_ratio: float, rng: np.random.Generator) -> ArrivalSequence:
    order = swap_order(swap_marks(len(stream), swap_ratio, rng))
    return ArrivalSequence.from_packets([stream[i] for i in order])


def apply_hazard(stream: Sequence[StreamPacket], config: HazardConfig) -> ArrivalSequence:
    """Apply ``config`` with a fresh generator seeded from ``config.seed``.

    Joint configurations apply loss first and then swap the survivors; the
    simulation harness refuses them, but the channel can still express them.
    """
    rng = config.rng()
    arrivals = ArrivalSequence.from_packets(stream)
    if config.loss_ratio > 0:
        arrivals = apply_loss(stream, config.loss_ratio, rng)
    if config.swap_ratio > 0:
        order = swap_order(swap_marks(len(arrivals), config.swap_ratio, rng))
        arrivals = ArrivalSequence([arrivals[i] for i in order])
    return arrivals
