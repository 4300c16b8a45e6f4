"""dKUDP over real UDP sockets.

The sender pushes payload ``i`` from one fixed source port to
``peer:port_for_index(key, i)``. The receiver binds every port of the key,
merges what arrives into a single arrival sequence, and feeds it to the
reconstruction engine until the line has been idle for ``idle_timeout``.

Arrival order across sockets comes from kernel receive timestamps where the
platform provides them (``SO_TIMESTAMPNS`` on Linux) and from a userspace
clock otherwise. Datagrams are held back until a full pass over all sockets
proves nothing older can still be queued, so the merge is a true time order
rather than the order in which sockets happened to be polled.

In test mode each datagram starts with a 4-byte big-endian sequence index so
the receiver can score itself. Production mode sends the application bytes
untouched.
"""

from __future__ import annotations

import heapq
import selectors
import socket
import struct
import sys
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from kudp.channel import ArrivalEvent, ArrivalSequence
from kudp.keying import EmptyStream, PortKey, port_for_index, schedule_stream
from kudp.sim import RunMetrics, score
from kudp.sra import ReconstructedStream, StreamReconstructor

DEFAULT_MTU = 1200
DEFAULT_IDLE_TIMEOUT = 2.0
INDEX_PREFIX = struct.Struct(">I")

# Linux values; the socket module does not export them.
_SO_TIMESTAMPNS = getattr(socket, "SO_TIMESTAMPNS", 35)
_TIMESPEC = struct.Struct("qq")


class SocketFailure(OSError):
    """A bind, send or receive call failed."""


class PortBindFailure(SocketFailure):
    def __init__(self, port: int, cause: OSError):
        super().__init__(f"cannot bind port {port}: {cause.strerror or cause}")
        self.port = port


class OversizedPayload(ValueError):
    """A frame does not fit the configured datagram budget."""


class NoDataReceived(RuntimeError):
    """The idle timeout expired before any datagram arrived."""


class FrameError(ValueError):
    """A test-mode datagram is too short to carry its index prefix."""


@dataclass(frozen=True)
class TransferConfig:
    peer: str
    key: PortKey
    inter_packet_gap: float = 0.0
    idle_timeout: float = DEFAULT_IDLE_TIMEOUT
    test_mode: bool = False
    mtu: int = DEFAULT_MTU
    listen_host: str = "0.0.0.0"
    source_port: int = 0
    # receiver-side hint for self-scoring; trailing losses are invisible without it
    expected_count: int | None = None

    def __post_init__(self):
        if self.idle_timeout <= 0:
            raise ValueError(f"idle_timeout must be > 0, got {self.idle_timeout}")
        if self.inter_packet_gap < 0:
            raise ValueError(f"inter_packet_gap must be >= 0, got {self.inter_packet_gap}")
        if self.mtu < 1:
            raise ValueError(f"mtu must be >= 1, got {self.mtu}")
        if self.expected_count is not None and self.expected_count < 1:
            raise ValueError(f"expected_count must be >= 1, got {self.expected_count}")


def encode_frame(payload: bytes, index: int | None = None) -> bytes:
    """Wire bytes for one datagram; ``index`` is given only in test mode."""
    if index is None:
        return bytes(payload)
    return INDEX_PREFIX.pack(index) + payload


def decode_frame(data: bytes, test_mode: bool) -> tuple[int | None, bytes]:
    if not test_mode:
        return None, data
    if len(data) < INDEX_PREFIX.size:
        raise FrameError(f"test-mode frame of {len(data)} bytes has no index prefix")
    (index,) = INDEX_PREFIX.unpack_from(data)
    return index, data[INDEX_PREFIX.size :]


@dataclass(frozen=True)
class HazardShim:
    """Deterministic local impairment applied by the sender.

    ``delay_indices`` holds a datagram back until its successor has gone out,
    which produces exactly one adjacent swap per entry.
    """

    drop_indices: frozenset[int] = frozenset()
    drop_offsets: frozenset[int] = frozenset()
    delay_indices: frozenset[int] = frozenset()

    def drops(self, index: int, offset: int) -> bool:
        return index in self.drop_indices or offset in self.drop_offsets

    def delays(self, index: int) -> bool:
        return index in self.delay_indices


@dataclass(frozen=True)
class SendReport:
    count: int
    duration: float
    dropped_by_shim: int = 0


def _wire_plan(key: PortKey, frames: Sequence[bytes], shim: HazardShim | None) -> tuple[list[tuple[int, bytes]], int]:
    plan: list[tuple[int, bytes]] = []
    held: tuple[int, bytes] | None = None
    dropped = 0
    for i, frame in enumerate(frames):
        port = port_for_index(key, i)
        if shim is not None and shim.drops(i, i % key.length):
            dropped += 1
            continue
        if shim is not None and shim.delays(i) and held is None:
            held = (port, frame)
            continue
        plan.append((port, frame))
        if held is not None:
            plan.append(held)
            held = None
    if held is not None:
        plan.append(held)
    return plan, dropped


def send_stream(config: TransferConfig, payloads: Sequence[bytes], shim: HazardShim | None = None) -> SendReport:
    packets = schedule_stream(config.key, payloads)  # raises EmptyStream
    frames = [encode_frame(p.payload, p.seq_index if config.test_mode else None) for p in packets]
    for i, frame in enumerate(frames):
        if len(frame) > config.mtu:
            raise OversizedPayload(f"payload {i} needs {len(frame)} bytes, budget is {config.mtu}")
    plan, dropped = _wire_plan(config.key, frames, shim)

    try:
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    except OSError as exc:
        raise SocketFailure(f"cannot create socket: {exc}") from exc
    with sock:
        try:
            sock.bind(("", config.source_port))
        except OSError as exc:
            raise SocketFailure(f"cannot bind source port {config.source_port}: {exc}") from exc
        start = time.perf_counter()
        for n, (port, frame) in enumerate(plan):
            if n and config.inter_packet_gap:
                time.sleep(config.inter_packet_gap)
            try:
                sock.sendto(frame, (config.peer, port))
            except OSError as exc:
                raise SocketFailure(f"send to {config.peer}:{port} failed: {exc}") from exc
        duration = time.perf_counter() - start
    return SendReport(len(plan), duration, dropped)


@dataclass
class ReceiveResult:
    arrivals: ArrivalSequence
    stream: ReconstructedStream
    metrics: RunMetrics | None = None
    timestamp_ties: int = 0
    malformed: int = 0


@dataclass(order=True)
class _Held:
    stamp: int
    seq: int
    port: int = field(compare=False)
    data: bytes = field(compare=False)


class Receiver:
    """Binds all key ports; use as a context manager, then call :meth:`run`."""

    def __init__(self, config: TransferConfig, trace: Callable[[str], None] | None = None):
        self.config = config
        self.trace = trace
        self.sockets: dict[int, socket.socket] = {}
        self.kernel_stamps = sys.platform.startswith("linux")
        self._selector: selectors.BaseSelector | None = None

    def __enter__(self) -> "Receiver":
        self.open()
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def open(self) -> None:
        self._selector = selectors.DefaultSelector()
        try:
            for port in self.config.key.ports:
                sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
                try:
                    sock.bind((self.config.listen_host, port))
                except OSError as exc:
                    sock.close()
                    raise PortBindFailure(port, exc) from exc
                sock.setblocking(False)
                if self.kernel_stamps:
                    try:
                        sock.setsockopt(socket.SOL_SOCKET, _SO_TIMESTAMPNS, 1)
                    except OSError:
                        self.kernel_stamps = False
                self.sockets[port] = sock
                self._selector.register(sock, selectors.EVENT_READ, port)
        except BaseException:
            self.close()
            raise

    def close(self) -> None:
        if self._selector is not None:
            self._selector.close()
            self._selector = None
        for sock in self.sockets.values():
            sock.close()
        self.sockets.clear()

    def _read(self, sock: socket.socket) -> tuple[bytes, int] | None:
        try:
            if self.kernel_stamps:
                data, ancdata, _, _ = sock.recvmsg(65535, socket.CMSG_SPACE(_TIMESPEC.size))
                for level, kind, raw in ancdata:
                    if level == socket.SOL_SOCKET and kind == _SO_TIMESTAMPNS:
                        sec, nsec = _TIMESPEC.unpack(raw[: _TIMESPEC.size])
                        return data, sec * 1_000_000_000 + nsec
                return data, time.time_ns()
            data = sock.recv(65535)
            return data, time.time_ns()
        except BlockingIOError:
            return None
        except OSError as exc:
            raise SocketFailure(f"receive failed: {exc}") from exc

    def _sweep(self, held: list[_Held], counter: list[int]) -> int:
        """Read every queued datagram on every socket; returns the pass start time."""
        started = time.time_ns()
        for port, sock in self.sockets.items():
            while (got := self._read(sock)) is not None:
                data, stamp = got
                heapq.heappush(held, _Held(stamp, counter[0], port, data))
                counter[0] += 1
        return started

    def run(self) -> ReceiveResult:
        if self._selector is None:
            raise RuntimeError("receiver is not open")
        cfg = self.config
        engine = StreamReconstructor(cfg.key, trace=self.trace)
        arrivals = ArrivalSequence()
        held: list[_Held] = []
        counter = [0]
        ties = malformed = 0
        last_stamp: int | None = None

        def release(before: int | None) -> None:
            nonlocal ties, malformed, last_stamp
            while held and (before is None or held[0].stamp < before):
                item = heapq.heappop(held)
                if item.stamp == last_stamp:
                    ties += 1
                    self._emit(f"tie at {item.stamp} ns on port {item.port}, kept receive order")
                last_stamp = item.stamp
                try:
                    index, payload = decode_frame(item.data, cfg.test_mode)
                except FrameError as exc:
                    malformed += 1
                    self._emit(f"discarded datagram on port {item.port}: {exc}")
                    continue
                event = ArrivalEvent(item.port, payload, index, item.stamp / 1e9)
                arrivals.append(event)
                engine.ingest(event)

        while True:
            if not self._selector.select(cfg.idle_timeout):
                # idle: anything still queued is older than now
                self._sweep(held, counter)
                release(None)
                break
            release(self._sweep(held, counter))

        if not arrivals:
            raise NoDataReceived(f"no datagram on key {cfg.key} within {cfg.idle_timeout} s")
        engine.drain()
        stream = engine.stream()
        metrics = self._self_score(arrivals, stream) if cfg.test_mode else None
        return ReceiveResult(arrivals, stream, metrics, ties, malformed)

    def _self_score(self, arrivals: ArrivalSequence, stream: ReconstructedStream) -> RunMetrics:
        seen = [i for i in arrivals.ground_truth() if i is not None]
        n = self.config.expected_count or max(seen) + 1
        initial = schedule_stream(self.config.key, [b""] * n)
        return score(initial, arrivals.dropped(n), stream)

    def _emit(self, line: str) -> None:
        if self.trace is not None:
            self.trace(line)


def receive_stream(config: TransferConfig, trace: Callable[[str], None] | None = None) -> ReceiveResult:
    with Receiver(config, trace) as rx:
        return rx.run()


def payloads_from_files(paths: Iterable[str]) -> list[bytes]:
    out = []
    for path in paths:
        with open(path, "rb") as fh:
            out.append(fh.read())
    if not out:
        raise EmptyStream("no input files given")
    return out
