"""Stream reconstruction by election over candidate lists.

The receiver only knows the destination port of each datagram, i.e. its
offset in the key's cycle. After every arrival it snapshots the packets
it has not yet placed into a *candidate list*: ``k`` slots covering the
absolute positions ``[next_position, next_position + k)``, where slot ``o``
holds the earliest-arrived unplaced packet whose port offset is ``o``, or
nothing (the "failure to receive" marker). Later packets with the same
offset wait for a later cycle.

Position ``n`` is elected once ``n + 1`` lists exist. The vote runs over the
``buffer_size`` most recent lists that cover ``n``: the packet seen most
often in slot ``n % k`` wins, ties going to the earliest list and then the
earliest arrival. If no list offers a candidate the slot is ``Missing``
(``None``). A packet can win only once.

A packet that shows up right after its own slot was closed as Missing
(the late half of an adjacent swap) becomes a *hidden candidate*: it is
parked on that slot and written there when the stream is drained.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

from kudp.channel import ArrivalEvent
from kudp.keying import PortKey, PortOutsideKey, offset_of_port

Slot = tuple[int, "ArrivalEvent | None"]


class NothingToElect(RuntimeError):
    """No retained candidate list covers the position being elected."""


def default_buffer_size(k: int) -> int:
    return math.ceil(k / 2)


@dataclass(frozen=True)
class CandidateList:
    """k slots over the absolute positions ``[start, start + k)``.

    ``slots[o]`` is the arrival id of the packet placed at the position with
    port offset ``o``, or ``None`` for an empty slot.
    """

    start: int
    slots: tuple[int | None, ...]

    @property
    def k(self) -> int:
        return len(self.slots)

    def covers(self, position: int) -> bool:
        return self.start <= position < self.start + len(self.slots)

    def at(self, position: int) -> int | None:
        if not self.covers(position):
            raise IndexError(f"position {position} outside list starting at {self.start}")
        return self.slots[position % len(self.slots)]

    def positions(self) -> dict[int, int]:
        """Absolute position -> arrival id for every filled slot."""
        k = len(self.slots)
        out = {}
        for o, aid in enumerate(self.slots):
            if aid is not None:
                out[self.start + (o - self.start) % k] = aid
        return out

    def render(self) -> str:
        return " ".join("f" if a is None else f"#{a}" for a in self.slots)


@dataclass
class ReconstructedStream:
    slots: list[ArrivalEvent | None] = field(default_factory=list)
    rejected: int = 0

    def __len__(self) -> int:
        return len(self.slots)

    def __iter__(self) -> Iterator[ArrivalEvent | None]:
        return iter(self.slots)

    def __getitem__(self, i):
        return self.slots[i]

    @property
    def missing_positions(self) -> list[int]:
        return [i for i, s in enumerate(self.slots) if s is None]

    @property
    def delivered(self) -> list[ArrivalEvent]:
        return [s for s in self.slots if s is not None]

    def payloads(self) -> list[bytes | None]:
        return [None if s is None else s.payload for s in self.slots]

    def ground_truth(self) -> list[int | None]:
        """Ground-truth index per slot (``None`` for Missing), for scoring."""
        return [None if s is None else s.ground_truth_index for s in self.slots]


class StreamReconstructor:
    """Incremental election engine for one key.

    Feed arrivals with :meth:`ingest`, then call :meth:`drain` once the
    stream is over (timeout or end of simulation).
    """

    def __init__(
        self,
        key: PortKey,
        buffer_size: int | None = None,
        trace: Callable[[str], None] | None = None,
    ):
        if buffer_size is None:
            buffer_size = default_buffer_size(key.length)
        if buffer_size < 1:
            raise ValueError(f"buffer_size must be >= 1, got {buffer_size}")
        self.key = key
        self.k = key.length
        self.buffer_size = buffer_size
        self.trace = trace
        self.list_history: deque[CandidateList] = deque(maxlen=buffer_size)
        self.lists_created = 0
        # arrival id -> port offset, kept in arrival order
        self.unelected_pool: dict[int, int] = {}
        # reserved position -> arrival id
        self.hidden: dict[int, int] = {}
        self.packets: list[ArrivalEvent] = []
        self.last_offset: int | None = None
        self.elected: list[int | None] = []
        self.drained = False

    @property
    def next_position(self) -> int:
        return len(self.elected)

    def ingest(self, event: ArrivalEvent) -> list[Slot]:
        """Accept one arrival; return the slots finalized as a result."""
        if self.drained:
            raise RuntimeError("stream already drained")
        offset = offset_of_port(self.key, event.dest_port)
        aid = len(self.packets)
        self.packets.append(event)
        if self._is_late(offset):
            self.hidden[self.next_position - 1] = aid
            self._emit(f"hidden #{aid} port-offset={offset} parked at {self.next_position - 1}")
        else:
            self.unelected_pool[aid] = offset
        self.last_offset = offset
        self._build_list()
        finalized = []
        while self.lists_created >= self.next_position + 1:
            finalized.append(self.elect())
        return finalized

    def _is_late(self, offset: int) -> bool:
        n = self.next_position
        if n == 0 or self.elected[n - 1] is not None or (n - 1) % self.k != offset:
            return False
        if n - 1 in self.hidden:
            return False
        # only a packet overtaken by its immediate successor counts as late
        if self.last_offset != (offset + 1) % self.k:
            return False
        # same-offset packets keep their arrival order
        return offset not in self.unelected_pool.values()

    def _build_list(self) -> CandidateList:
        slots: list[int | None] = [None] * self.k
        for aid, offset in self.unelected_pool.items():
            if slots[offset] is None:
                slots[offset] = aid
        lst = CandidateList(self.next_position, tuple(slots))
        self.list_history.append(lst)
        self.lists_created += 1
        return lst

    def elect(self, position: int | None = None) -> Slot:
        n = self.next_position
        if position is not None and position != n:
            raise NothingToElect(f"position {position} requested but next position is {n}")
        tallies: dict[int, int] = {}
        first_seen: dict[int, int] = {}
        covering = 0
        k, slot = self.k, n % self.k
        # hot loop: CandidateList.covers/at inlined
        for li, lst in enumerate(self.list_history):
            if not lst.start <= n < lst.start + k:
                continue
            covering += 1
            aid = lst.slots[slot]
            if aid is None or aid not in self.unelected_pool:
                continue
            tallies[aid] = tallies.get(aid, 0) + 1
            first_seen.setdefault(aid, li)
        if covering == 0:
            raise NothingToElect(f"no retained candidate list covers position {n}")
        winner = None
        if tallies:
            winner = min(tallies, key=lambda a: (-tallies[a], first_seen[a], a))
            del self.unelected_pool[winner]
        self.elected.append(winner)
        if self.trace is not None:
            shown = ", ".join(f"#{a}:{c}" for a, c in sorted(tallies.items()))
            result = "Missing" if winner is None else f"#{winner}"
            self._emit(f"elect pos={n} lists={covering} tallies=[{shown}] -> {result}")
        return n, None if winner is None else self.packets[winner]

    def drain(self) -> list[Slot]:
        """Finish all pending elections and place hidden candidates."""
        finalized = []
        while self.unelected_pool:
            if not any(lst.covers(self.next_position) for lst in self.list_history):
                self._build_list()
            finalized.append(self.elect())
        for position, aid in sorted(self.hidden.items()):
            self.elected[position] = aid
            finalized.append((position, self.packets[aid]))
            self._emit(f"hidden #{aid} -> pos={position}")
        self.hidden.clear()
        finalized.extend(self._trim_tail())
        self.drained = True
        return finalized

    def _trim_tail(self) -> list[Slot]:
        # the receiver cannot see past the last window holding a packet
        last = max((i for i, a in enumerate(self.elected) if a is not None), default=-1)
        end = 0 if last < 0 else (last // self.k + 1) * self.k
        del self.elected[end:]
        padded = []
        while len(self.elected) < end:
            padded.append((len(self.elected), None))
            self.elected.append(None)
        return padded

    def stream(self) -> ReconstructedStream:
        return ReconstructedStream([None if a is None else self.packets[a] for a in self.elected])

    def _emit(self, line: str) -> None:
        if self.trace is not None:
            self.trace(line)


def reconstruct(
    key: PortKey,
    arrivals: Iterable[ArrivalEvent],
    buffer_size: int | None = None,
    trace: Callable[[str], None] | None = None,
) -> ReconstructedStream:
    """Run the full ingest/drain cycle; datagrams outside the key are counted and skipped."""
    engine = StreamReconstructor(key, buffer_size, trace)
    rejected = 0
    for event in arrivals:
        try:
            engine.ingest(event)
        except PortOutsideKey:
            rejected += 1
    engine.drain()
    out = engine.stream()
    out.rejected = rejected
    return out
