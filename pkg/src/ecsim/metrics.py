"""Run counters, amplification ratios and the CSV report."""

import csv
import io
import os
from dataclasses import dataclass, field, fields, replace
from typing import Iterable, Optional

from .backend import IoEffects

CSV_COLUMNS = (
    "backend", "k", "m", "r", "workload", "pattern", "block_bytes",
    "client_read_bytes", "client_write_bytes", "storage_read_bytes",
    "storage_write_bytes", "private_net_bytes", "public_net_bytes",
    "read_amp", "write_amp", "rel_net_traffic", "pg_conflicts",
)


@dataclass(frozen=True)
class Counters:
    client_read_bytes: int = 0
    client_write_bytes: int = 0
    storage_read_bytes: int = 0
    storage_write_bytes: int = 0
    private_net_bytes: int = 0
    public_net_bytes: int = 0
    request_count: int = 0
    pg_conflict_count: int = 0
    metadata_request_count: int = 0

    def __add__(self, other: "Counters") -> "Counters":
        return Counters(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


ZERO = Counters()


def accumulate(c: Counters, e: IoEffects) -> Counters:
    if e.metadata:
        return replace(c, metadata_request_count=c.metadata_request_count + 1)
    return Counters(
        c.client_read_bytes + e.client_read_bytes,
        c.client_write_bytes + e.client_write_bytes,
        c.storage_read_bytes + e.storage_read_bytes,
        c.storage_write_bytes + e.storage_write_bytes,
        c.private_net_bytes + e.private_net_bytes,
        c.public_net_bytes + e.public_net_bytes,
        c.request_count + 1,
        c.pg_conflict_count + int(e.pg_conflict),
        c.metadata_request_count,
    )


class Tally:
    """Mutable accumulator for long runs; ``counters`` snapshots it."""

    def __init__(self):
        self._v = dict.fromkeys((f.name for f in fields(Counters)), 0)

    def add(self, e: IoEffects):
        v = self._v
        if e.metadata:
            v["metadata_request_count"] += 1
            return
        v["client_read_bytes"] += e.client_read_bytes
        v["client_write_bytes"] += e.client_write_bytes
        v["storage_read_bytes"] += e.storage_read_bytes
        v["storage_write_bytes"] += e.storage_write_bytes
        v["private_net_bytes"] += e.private_net_bytes
        v["public_net_bytes"] += e.public_net_bytes
        v["request_count"] += 1
        v["pg_conflict_count"] += int(e.pg_conflict)

    @property
    def counters(self) -> Counters:
        return Counters(**self._v)


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den else None


# Write-only workloads still induce reads (read-modify-write), so each ratio
# falls back to the other client direction when its own is empty.
def read_amp(c: Counters) -> Optional[float]:
    return _ratio(c.storage_read_bytes, c.client_read_bytes or c.client_write_bytes)


def write_amp(c: Counters) -> Optional[float]:
    return _ratio(c.storage_write_bytes, c.client_write_bytes or c.client_read_bytes)


def rel_net_traffic(c: Counters) -> Optional[float]:
    return _ratio(c.private_net_bytes, c.client_read_bytes + c.client_write_bytes)


@dataclass(frozen=True)
class ReportRow:
    backend: str
    k: Optional[int]
    m: Optional[int]
    r: Optional[int]
    workload: str
    pattern: str
    block_bytes: int
    counters: Counters

    @property
    def read_amp(self):
        return read_amp(self.counters)

    @property
    def write_amp(self):
        return write_amp(self.counters)

    @property
    def rel_net_traffic(self):
        return rel_net_traffic(self.counters)

    def csv_values(self) -> list:
        c = self.counters
        return [
            self.backend, _cell(self.k), _cell(self.m), _cell(self.r), self.workload,
            self.pattern, self.block_bytes, c.client_read_bytes, c.client_write_bytes,
            c.storage_read_bytes, c.storage_write_bytes, c.private_net_bytes,
            c.public_net_bytes, _cell(self.read_amp), _cell(self.write_amp),
            _cell(self.rel_net_traffic), c.pg_conflict_count,
        ]


@dataclass
class AmplificationReport:
    rows: list = field(default_factory=list)

    @property
    def total(self) -> Counters:
        out = ZERO
        for row in self.rows:
            out = out + row.counters
        return out

    @property
    def read_amp(self):
        return read_amp(self.total)

    @property
    def write_amp(self):
        return write_amp(self.total)

    @property
    def rel_net_traffic(self):
        return rel_net_traffic(self.total)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def render_csv(report: AmplificationReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in report.rows:
        w.writerow(row.csv_values())
    return buf.getvalue()


def export_csv(report: AmplificationReport, destination) -> None:
    """Write the report; file paths are replaced atomically."""
    text = render_csv(report)
    if hasattr(destination, "write"):
        destination.write(text)
        return
    path = os.fspath(destination)
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def read_csv(path) -> list:
    """Load a report CSV back as a list of dicts keyed by column."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        return list(reader)


def collect(effects: Iterable[IoEffects]) -> Counters:
    t = Tally()
    for e in effects:
        t.add(e)
    return t.counters
