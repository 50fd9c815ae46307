"""Synthetic request streams, SPEC SFS-style presets and block-trace replay."""

import bisect
import io
import os
import random
from dataclasses import dataclass, replace
from itertools import accumulate
from typing import Iterator, Optional, Sequence, Union

from .backend import IoRequest
from .errors import ConfigError, TraceParseError

KiB = 1024
MiB = 1024 * KiB
GiB = 1024 * MiB
TiB = 1024 * GiB

PATTERNS = ("sequential", "random")

# a fixed size, or a histogram of (size, weight) pairs
BlockSize = Union[int, tuple]


@dataclass(frozen=True)
class WorkloadSpec:
    """One request stream, or a weighted mix of streams via ``components``.

    ``random_fraction`` overrides ``pattern`` with a per-request coin flip;
    ``metadata_fraction`` marks requests that go to the metadata pool. With
    ``components`` set, each request first picks a component by weight and
    the top-level mix fields describe the dominant component only.
    """

    pattern: str = "sequential"
    op_mix: float = 0.0
    block_bytes: BlockSize = 4 * KiB
    total_bytes: int = 64 * MiB
    file_bytes: int = TiB
    seed: int = 0
    prefill: bool = False
    random_fraction: Optional[float] = None
    metadata_fraction: float = 0.0
    name: str = ""
    components: tuple = ()

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise ConfigError(f"pattern must be one of {PATTERNS}, got {self.pattern!r}")
        for attr in ("op_mix", "metadata_fraction", "random_fraction"):
            v = getattr(self, attr)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ConfigError(f"{attr} must lie in [0, 1], got {v}")
        sizes = block_sizes(self.block_bytes)
        if any(b < 1 for b in sizes):
            raise ConfigError("block_bytes must be >= 1")
        if max(sizes) > self.file_bytes:
            raise ConfigError("block_bytes exceeds file_bytes")
        if self.total_bytes < min(sizes):
            raise ConfigError("total_bytes must be >= block_bytes")
        if self.components and any(w < 0 for w, _ in self.components):
            raise ConfigError("component weights must be >= 0")

    @property
    def rand_fraction(self) -> float:
        if self.random_fraction is not None:
            return self.random_fraction
        return 1.0 if self.pattern == "random" else 0.0

    @property
    def label(self) -> str:
        return self.name or f"{self.pattern}-{'read' if self.op_mix >= 0.5 else 'write'}"

    @property
    def nominal_block(self) -> int:
        """Block size reported in tables: the heaviest histogram entry."""
        if isinstance(self.block_bytes, int):
            return self.block_bytes
        return max(self.block_bytes, key=lambda sw: (sw[1], -sw[0]))[0]


def block_sizes(block: BlockSize) -> list:
    if isinstance(block, int):
        return [block]
    return [s for s, _ in block]


class _Stream:
    def __init__(self, spec: WorkloadSpec):
        self.spec = spec
        self.cursor = 0
        if isinstance(spec.block_bytes, int):
            self.sizes, self.cdf = [spec.block_bytes], [1.0]
        else:
            self.sizes = [s for s, _ in spec.block_bytes]
            weights = [w for _, w in spec.block_bytes]
            total = sum(weights)
            if total <= 0:
                raise ConfigError("block size histogram has no weight")
            self.cdf = [c / total for c in accumulate(weights)]

    def next(self, rng: random.Random) -> IoRequest:
        s = self.spec
        size = self.sizes[0] if len(self.sizes) == 1 else self.sizes[
            min(bisect.bisect_right(self.cdf, rng.random()), len(self.sizes) - 1)]
        op = "read" if rng.random() < s.op_mix else "write"
        if rng.random() < s.rand_fraction:
            slots = s.file_bytes // size
            offset = min(int(rng.random() * slots), slots - 1) * size
        else:
            if self.cursor + size > s.file_bytes:
                self.cursor = 0
            offset = self.cursor
            self.cursor += size
        meta = s.metadata_fraction > 0 and rng.random() < s.metadata_fraction
        return IoRequest(op, offset, size, metadata=meta)


def generate(spec: WorkloadSpec) -> Iterator[IoRequest]:
    """Yield requests until ``total_bytes`` have been issued.

    Uses only ``random.Random(seed).random()``, whose output sequence is
    stable across Python versions.
    """
    rng = random.Random(spec.seed)
    if spec.components:
        weights = [w for w, _ in spec.components]
        total = sum(weights)
        cdf = [c / total for c in accumulate(weights)]
        streams = [_Stream(replace(c, file_bytes=spec.file_bytes)) for _, c in spec.components]
    else:
        cdf, streams = [1.0], [_Stream(spec)]
    issued = 0
    while issued < spec.total_bytes:
        if len(streams) == 1:
            stream = streams[0]
        else:
            stream = streams[min(bisect.bisect_right(cdf, rng.random()), len(streams) - 1)]
        req = stream.next(rng)
        issued += req.length
        yield req


# (share, read fraction, random fraction, metadata fraction) per process class
_TABLE = {
    "db": (8 * KiB, [("table", 83.3, 0.80, 0.99, 0.0), ("log", 16.7, 1.00, 0.20, 0.0)]),
    "vdi": (4 * KiB, [("vdi", 100.0, 0.263, 0.848, 0.01)]),
    "eda": (64 * KiB, [("frontend", 66.0, 0.375, 0.575, 0.60),
                       ("backend", 33.0, 0.50, 0.0, 0.0)]),
    "vda": (512 * KiB, [("data-stream", 90.0, 0.0, 0.0, 0.0),
                        ("companion", 10.0, 0.989, 0.945, 0.09)]),
}

PRESETS = tuple(_TABLE)


def preset(name: str, total_bytes: int = 256 * MiB, seed: int = 0,
           file_bytes: int = TiB, prefill: bool = True) -> WorkloadSpec:
    """Application mix by name: db, vdi, eda or vda."""
    try:
        block, rows = _TABLE[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown workload preset {name!r}; choose from {', '.join(PRESETS)}") from None
    comps = tuple(
        (share, WorkloadSpec(
            pattern="random" if rnd >= 0.5 else "sequential", op_mix=read,
            block_bytes=block, total_bytes=block, file_bytes=file_bytes,
            random_fraction=rnd, metadata_fraction=meta, name=f"{name}/{proc}"))
        for proc, share, read, rnd, meta in rows
    )
    head = comps[0][1]
    return replace(head, total_bytes=total_bytes, seed=seed, prefill=prefill,
                   name=name.lower(), components=comps if len(comps) > 1 else ())


@dataclass(frozen=True)
class TraceRecord:
    timestamp: float
    op: str
    offset: int
    length: int

    def request(self) -> IoRequest:
        return IoRequest(self.op, self.offset, self.length)


_OPS = {"r": "read", "read": "read", "w": "write", "write": "write"}


def parse_trace(source, file_bytes: Optional[int] = None) -> list:
    """Parse ``timestamp,op,offset,length`` lines.

    ``source`` is a path or an open text stream. Blank lines, ``#`` comments
    and a leading header row are skipped.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="") as fh:
            return parse_trace(fh, file_bytes)
    out = []
    for lineno, raw in enumerate(source, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if lineno == 1 and parts[0].lower() == "timestamp":
            continue
        if len(parts) != 4:
            raise TraceParseError(lineno, f"expected 4 fields, got {len(parts)}")
        ts, op, off, length = parts
        op_name = _OPS.get(op.lower())
        if op_name is None:
            raise TraceParseError(lineno, f"bad op token {op!r}")
        try:
            t = float(ts)
            offset, n = int(off), int(length)
        except ValueError as exc:
            raise TraceParseError(lineno, str(exc)) from None
        if t < 0 or offset < 0 or n < 1:
            raise TraceParseError(lineno, "timestamp and offset must be >= 0, length >= 1")
        if file_bytes is not None and offset + n > file_bytes:
            raise TraceParseError(lineno, f"request ends past file size {file_bytes}")
        out.append(TraceRecord(t, op_name, offset, n))
    return out


def parse_trace_text(text: str, file_bytes: Optional[int] = None) -> list:
    return parse_trace(io.StringIO(text), file_bytes)


def replay(records: Sequence[TraceRecord]) -> Iterator[IoRequest]:
    for rec in records:
        yield rec.request()
