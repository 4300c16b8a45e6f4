"""Port keys and the round-robin mapping between stream positions and ports.

A key is a run of ``k`` consecutive destination ports starting at
``base_port``. Packet ``i`` of a stream goes to ``base_port + i % k``; a
key of length 1 is ordinary single-port UDP.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

MAX_PORT = 65535


class KeySpecError(ValueError):
    """A key description (``"BASE:K"`` or constructor arguments) is invalid."""


class PortOutsideKey(ValueError):
    """A datagram arrived on a port that does not belong to the key."""

    def __init__(self, port: int, key: "PortKey"):
        super().__init__(f"port {port} is outside key {key}")
        self.port = port
        self.key = key


class EmptyStream(ValueError):
    """A stream was requested with zero payloads."""


@dataclass(frozen=True)
class PortKey:
    base_port: int
    length: int

    def __post_init__(self):
        if not isinstance(self.base_port, int) or not 1 <= self.base_port <= MAX_PORT:
            raise KeySpecError(f"base port must be in 1..{MAX_PORT}, got {self.base_port!r}")
        if not isinstance(self.length, int) or self.length < 1:
            raise KeySpecError(f"key length must be >= 1, got {self.length!r}")
        if self.base_port + self.length - 1 > MAX_PORT:
            raise KeySpecError(
                f"key length {self.length} runs past port {MAX_PORT} from base {self.base_port}"
            )

    @property
    def k(self) -> int:
        return self.length

    @property
    def ports(self) -> list[int]:
        return list(range(self.base_port, self.base_port + self.length))

    @property
    def last_port(self) -> int:
        return self.base_port + self.length - 1

    def __contains__(self, port: object) -> bool:
        return isinstance(port, int) and self.base_port <= port <= self.last_port

    def __str__(self) -> str:
        return f"{self.base_port}:{self.length}"

    @classmethod
    def parse(cls, text: str) -> "PortKey":
        """Parse ``"BASE:K"``, e.g. ``"59000:5"``."""
        base_text, sep, k_text = text.strip().partition(":")
        if not sep:
            raise KeySpecError(f"key {text!r} must look like BASE:K")
        try:
            base = int(base_text)
        except ValueError:
            raise KeySpecError(f"base port {base_text!r} is not an integer") from None
        try:
            k = int(k_text)
        except ValueError:
            raise KeySpecError(f"key length {k_text!r} is not an integer") from None
        return cls(base, k)

    def port_for_index(self, seq_index: int) -> int:
        return port_for_index(self, seq_index)

    def offset_of_port(self, port: int) -> int:
        return offset_of_port(self, port)


@dataclass(frozen=True)
class StreamPacket:
    seq_index: int
    payload: bytes
    dest_port: int


def port_for_index(key: PortKey, seq_index: int) -> int:
    if seq_index < 0:
        raise ValueError(f"seq_index must be nonnegative, got {seq_index}")
    return key.base_port + seq_index % key.length


def offset_of_port(key: PortKey, port: int) -> int:
    """Position of ``port`` within the key's cycle (0..k-1)."""
    if port not in key:
        raise PortOutsideKey(port, key)
    return port - key.base_port


def schedule_stream(key: PortKey, payloads: Sequence[bytes]) -> list[StreamPacket]:
    if len(payloads) == 0:
        raise EmptyStream("cannot schedule a stream with no payloads")
    return [
        StreamPacket(i, bytes(payload), port_for_index(key, i))
        for i, payload in enumerate(payloads)
    ]
