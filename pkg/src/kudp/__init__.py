"""Keyed UDP: loss detection and reordering from destination-port sequences.

A sender spreads a stream over ``k`` consecutive destination ports in
round-robin order; the receiver uses the port of each datagram to rebuild
the original order and to mark the positions of lost packets.
"""

from kudp.channel import (
    ArrivalEvent,
    ArrivalSequence,
    HazardConfig,
    apply_hazard,
    apply_loss,
    apply_swap,
)
from kudp.keying import (
    EmptyStream,
    KeySpecError,
    PortKey,
    PortOutsideKey,
    StreamPacket,
    offset_of_port,
    port_for_index,
    schedule_stream,
)
from kudp.sim import (
    AggregateMetrics,
    JointHazardUnsupported,
    RunConfig,
    RunMetrics,
    reproduce_tables,
    run_simulation,
    score,
)
from kudp.sra import (
    CandidateList,
    NothingToElect,
    ReconstructedStream,
    StreamReconstructor,
    default_buffer_size,
    reconstruct,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateMetrics",
    "ArrivalEvent",
    "ArrivalSequence",
    "CandidateList",
    "EmptyStream",
    "HazardConfig",
    "JointHazardUnsupported",
    "KeySpecError",
    "NothingToElect",
    "PortKey",
    "PortOutsideKey",
    "ReconstructedStream",
    "RunConfig",
    "RunMetrics",
    "StreamPacket",
    "StreamReconstructor",
    "apply_hazard",
    "apply_loss",
    "apply_swap",
    "default_buffer_size",
    "offset_of_port",
    "port_for_index",
    "reconstruct",
    "reproduce_tables",
    "run_simulation",
    "schedule_stream",
    "score",
]
