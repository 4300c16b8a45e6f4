"""Monte-Carlo harness: generate, impair, reconstruct, score, average.

Scoring is strict. A ground-truth position counts as a success only if the
reconstructed stream holds exactly that packet there, or if the packet was
dropped and the slot is marked Missing. Everything else is an error,
including Missing marks on delivered packets and dropped packets past the
end of the reconstructed stream.

Run ``r`` of a simulation uses seed ``master_seed + r``, so any single cell
of a table can be re-run on its own.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np

from kudp.channel import ArrivalSequence, HazardConfig, make_rng, swap_marks, swap_order
from kudp.keying import PortKey, StreamPacket, schedule_stream
from kudp.sra import ReconstructedStream, default_buffer_size, reconstruct

KEY_LENGTHS = (5, 10, 15, 20, 50, 100, 200)
SWAP_COLUMNS = (10, 35, 50, 60, 70)
LOSS_COLUMNS = (10, 15, 20, 25)
DEFAULT_SEED = 7
DEFAULT_RUNS = 100
TABLE_BASE_PORT = 59000

# Reference data: published SRA efficiencies in percent, keyed by
# key length, then hazard percentage. Used only for the delta column.
REFERENCE_SWAP_EFFICIENCY = {
    5: {10: 96.95, 35: 81.85, 50: 76.90, 60: 75.50, 70: 75.10},
    10: {10: 100.00, 35: 99.12, 50: 95.92, 60: 92.37, 70: 90.07},
    15: {10: 100.00, 35: 99.83, 50: 98.76, 60: 97.61, 70: 94.24},
    20: {10: 100.00, 35: 99.92, 50: 99.63, 60: 99.06, 70: 97.53},
    50: {10: 100.00, 35: 100.00, 50: 100.00, 60: 99.99, 70: 99.97},
    100: {10: 100.00, 35: 100.00, 50: 100.00, 60: 100.00, 70: 99.99},
    200: {10: 100.00, 35: 100.00, 50: 100.00, 60: 100.00, 70: 100.00},
}
REFERENCE_LOSS_EFFICIENCY = {
    5: {10: 99.75, 15: 99.10, 20: 97.50, 25: 95.40},
    10: {10: 99.98, 15: 99.50, 20: 97.82, 25: 96.00},
    15: {10: 99.97, 15: 99.90, 20: 99.25, 25: 96.30},
    20: {10: 100.00, 15: 99.98, 20: 99.25, 25: 97.15},
    50: {10: 100.00, 15: 100.00, 20: 99.70, 25: 97.57},
    100: {10: 100.00, 15: 100.00, 20: 99.93, 25: 98.38},
    200: {10: 100.00, 15: 100.00, 20: 100.00, 25: 99.10},
}

CSV_FIELDS = (
    "key_length",
    "hazard_type",
    "hazard_pct",
    "buffer_size",
    "runs",
    "mean_efficiency",
    "paper_value",
    "delta",
)


class JointHazardUnsupported(ValueError):
    """Loss and swap were both requested; only one hazard per run is simulated."""


@dataclass(frozen=True)
class RunConfig:
    key: PortKey
    hazard: HazardConfig = field(default_factory=HazardConfig)
    stream_length: int | None = None
    buffer_size: int | None = None
    runs: int = DEFAULT_RUNS

    def __post_init__(self):
        if self.stream_length is not None and self.stream_length < 1:
            raise ValueError(f"stream_length must be >= 1, got {self.stream_length}")
        if self.buffer_size is not None and self.buffer_size < 1:
            raise ValueError(f"buffer_size must be >= 1, got {self.buffer_size}")
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")

    @property
    def n(self) -> int:
        return 4 * self.key.length if self.stream_length is None else self.stream_length

    @property
    def b(self) -> int:
        return default_buffer_size(self.key.length) if self.buffer_size is None else self.buffer_size


@dataclass(frozen=True)
class RunMetrics:
    total: int
    correctly_placed: int
    losses_identified: int
    observed_ratio: float = 0.0

    @property
    def errors(self) -> int:
        return self.total - self.correctly_placed - self.losses_identified

    @property
    def efficiency(self) -> float:
        return (self.correctly_placed + self.losses_identified) / self.total


@dataclass
class AggregateMetrics:
    config: RunConfig
    runs: list[RunMetrics]

    @property
    def mean_efficiency(self) -> float:
        return float(np.mean([r.efficiency for r in self.runs]))

    @property
    def observed_ratio_mean(self) -> float:
        return float(np.mean([r.observed_ratio for r in self.runs]))


def score(initial: Sequence[StreamPacket], drop_set: Iterable[int], output: ReconstructedStream) -> RunMetrics:
    dropped = set(drop_set)
    slots = output.slots
    correct = identified = 0
    for packet in initial:
        i = packet.seq_index
        slot = slots[i] if i < len(slots) else False
        if i in dropped:
            identified += slot is None
        elif slot:
            correct += slot.ground_truth_index == i
    return RunMetrics(len(initial), correct, identified)


def synthetic_payloads(n: int) -> list[bytes]:
    return [i.to_bytes(4, "big") for i in range(n)]


def impair(stream: Sequence[StreamPacket], hazard: HazardConfig, seed: int) -> tuple[ArrivalSequence, set[int], float]:
    """One draw per packet; returns arrivals, drop set and the observed hazard ratio."""
    if hazard.is_joint:
        raise JointHazardUnsupported("loss and swap cannot both be nonzero in a simulation run")
    rng = make_rng(seed)
    n = len(stream)
    if hazard.loss_ratio > 0:
        keep = rng.random(n) >= hazard.loss_ratio
        arrivals = ArrivalSequence.from_packets([p for p, k in zip(stream, keep) if k])
        dropped = {p.seq_index for p, k in zip(stream, keep) if not k}
        return arrivals, dropped, len(dropped) / n
    if hazard.swap_ratio > 0:
        marks = swap_marks(n, hazard.swap_ratio, rng)
        arrivals = ArrivalSequence.from_packets([stream[i] for i in swap_order(marks)])
        return arrivals, set(), float(marks.mean())
    return ArrivalSequence.from_packets(stream), set(), 0.0


def run_once(config: RunConfig, run_index: int, trace: Callable[[str], None] | None = None) -> RunMetrics:
    stream = schedule_stream(config.key, synthetic_payloads(config.n))
    arrivals, dropped, observed = impair(stream, config.hazard, config.hazard.seed + run_index)
    output = reconstruct(config.key, arrivals, config.b, trace)
    m = score(stream, dropped, output)
    return RunMetrics(m.total, m.correctly_placed, m.losses_identified, observed)


def run_simulation(config: RunConfig, trace: Callable[[str], None] | None = None) -> AggregateMetrics:
    if config.hazard.is_joint:
        raise JointHazardUnsupported("loss and swap cannot both be nonzero in a simulation run")
    return AggregateMetrics(config, [run_once(config, r, trace) for r in range(config.runs)])


def reference_value(key_length: int, hazard_type: str, hazard_pct: float) -> float | None:
    """Published efficiency (as a fraction) for a table cell, if there is one."""
    table = {"swap": REFERENCE_SWAP_EFFICIENCY, "loss": REFERENCE_LOSS_EFFICIENCY}.get(hazard_type, {})
    pct = round(hazard_pct, 2)
    if key_length not in table or pct != int(pct):
        return None
    value = table[key_length].get(int(pct))
    return None if value is None else value / 100.0


@dataclass(frozen=True)
class TableRow:
    key_length: int
    hazard_type: str
    hazard_pct: float
    buffer_size: int
    runs: int
    mean_efficiency: float
    reference_value: float | None

    @property
    def delta(self) -> float | None:
        return None if self.reference_value is None else self.mean_efficiency - self.reference_value

    def as_csv(self) -> dict[str, str]:
        return {
            "key_length": str(self.key_length),
            "hazard_type": self.hazard_type,
            "hazard_pct": f"{self.hazard_pct:.2f}",
            "buffer_size": str(self.buffer_size),
            "runs": str(self.runs),
            "mean_efficiency": f"{self.mean_efficiency:.4f}",
            "paper_value": "" if self.reference_value is None else f"{self.reference_value:.4f}",
            "delta": "" if self.delta is None else f"{self.delta:.4f}",
        }


def table_row(agg: AggregateMetrics) -> TableRow:
    cfg = agg.config
    kind = cfg.hazard.kind
    pct = round(cfg.hazard.ratio * 100, 2)
    return TableRow(
        cfg.key.length,
        kind,
        pct,
        cfg.b,
        cfg.runs,
        agg.mean_efficiency,
        reference_value(cfg.key.length, kind, pct),
    )


def _cell(args: tuple[int, str, int, int, int]) -> TableRow:
    k, kind, pct, runs, seed = args
    if kind == "swap":
        hazard = HazardConfig.from_percent(swap_pct=pct, seed=seed)
    else:
        hazard = HazardConfig.from_percent(loss_pct=pct, seed=seed)
    config = RunConfig(PortKey(TABLE_BASE_PORT, k), hazard, runs=runs)
    return table_row(run_simulation(config))


def table_cells(
    seed: int = DEFAULT_SEED,
    runs: int = DEFAULT_RUNS,
    key_lengths: Sequence[int] = KEY_LENGTHS,
) -> list[tuple[int, str, int, int, int]]:
    cells = [(k, "swap", pct, runs, seed) for k in key_lengths for pct in SWAP_COLUMNS]
    cells += [(k, "loss", pct, runs, seed) for k in key_lengths for pct in LOSS_COLUMNS]
    return cells


def reproduce_tables(
    seed: int = DEFAULT_SEED,
    runs: int = DEFAULT_RUNS,
    key_lengths: Sequence[int] = KEY_LENGTHS,
    workers: int | None = 1,
) -> list[TableRow]:
    """Sweep both published tables; row order is fixed by (table, k, hazard)."""
    cells = table_cells(seed, runs, key_lengths)
    if workers == 1:
        return [_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_cell, cells))


def write_csv(rows: Iterable[TableRow], out: TextIO) -> None:
    writer = csv.DictWriter(out, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.as_csv())


def csv_text(rows: Iterable[TableRow]) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()
