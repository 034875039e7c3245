"""Deterministic link model and byte-exact transfer ledger.

Time is virtual: seconds = latency + 8 * bytes / bandwidth. Nothing here
touches sockets or wall clocks, so reruns of an experiment produce
identical ledgers. Every byte that crosses the simulated star topology
appears in exactly one record, sized from the serialized payload.
"""

import csv
import io
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from .errors import ConfigError

LEDGER_SCHEMA = "fednca.ledger.v1"

DIRECTION_UP = "up"
DIRECTION_DOWN = "down"


@dataclass(frozen=True)
class LinkProfile:
    """Per-client asymmetric link: bits/second each way plus fixed latency."""

    bandwidth_up: float = 1_000_000.0
    bandwidth_down: float = 4_000_000.0
    latency: float = 0.05

    def __post_init__(self):
        if self.bandwidth_up <= 0 or self.bandwidth_down <= 0:
            raise ConfigError("bandwidth must be positive")
        if self.latency < 0:
            raise ConfigError("latency must be >= 0")


@dataclass(frozen=True)
class RoundMessage:
    """One model update crossing the link; size comes from serialization."""

    round_number: int
    direction: str
    client_id: int
    tag: int
    num_bytes: int


@dataclass(frozen=True)
class TransferRecord:
    round_number: int
    direction: str
    client_id: int
    tag: int
    num_bytes: int
    seconds: float


@dataclass
class TransferLedger:
    """Ordered sink for transfer records plus per-round compute times."""

    records: List[TransferRecord] = field(default_factory=list)
    compute_seconds: Dict[Tuple[int, int], float] = field(default_factory=dict)

    def log_compute(self, round_number: int, client_id: int, seconds: float):
        self.compute_seconds[(round_number, client_id)] = seconds

    def round_records(self, round_number: int) -> List[TransferRecord]:
        return [r for r in self.records if r.round_number == round_number]

    def total_bytes(self, direction: str = None) -> int:
        return sum(
            r.num_bytes
            for r in self.records
            if direction is None or r.direction == direction
        )

    def to_csv(self, stream) -> None:
        stream.write(f"# schema={LEDGER_SCHEMA}\n")
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["round", "direction", "client_id", "tag", "bytes", "seconds"])
        for r in self.records:
            writer.writerow(
                [r.round_number, r.direction, r.client_id, r.tag, r.num_bytes, repr(r.seconds)]
            )

    def csv_text(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()


def transfer(msg: RoundMessage, link: LinkProfile, ledger: TransferLedger) -> TransferRecord:
    """Account one message: latency plus serialization time on the link."""
    bandwidth = link.bandwidth_up if msg.direction == DIRECTION_UP else link.bandwidth_down
    seconds = link.latency + 8.0 * msg.num_bytes / bandwidth
    record = TransferRecord(
        msg.round_number, msg.direction, msg.client_id, msg.tag, msg.num_bytes, seconds
    )
    ledger.records.append(record)
    return record


def round_cost(ledger: TransferLedger, round_number: int) -> Tuple[float, float, float]:
    """(upstream MiB, downstream MiB, synchronous wall seconds) of a round.

    Wall time is the slowest client's download + compute + upload under the
    synchronous barrier.
    """
    records = ledger.round_records(round_number)
    up = sum(r.num_bytes for r in records if r.direction == DIRECTION_UP)
    down = sum(r.num_bytes for r in records if r.direction == DIRECTION_DOWN)

    per_client: Dict[int, float] = {}
    for r in records:
        per_client[r.client_id] = per_client.get(r.client_id, 0.0) + r.seconds
    for (rnd, client), secs in ledger.compute_seconds.items():
        if rnd == round_number:
            per_client[client] = per_client.get(client, 0.0) + secs
    wall = max(per_client.values(), default=0.0)
    return up / 2**20, down / 2**20, wall
