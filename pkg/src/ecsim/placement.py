"""Deterministic object -> PG -> OSD mapping.

A stand-in for libRADOS/CRUSH: objects hash into placement groups, and each
PG gets a seeded, node-spread ordered list of OSDs. Entry 0 is the primary,
and shard j of every object in the PG lives on entry j.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import ceil

from .errors import CapacityError, ConfigError

MASK64 = (1 << 64) - 1
OBJECT_BYTES = 4 * 1024 * 1024

# data pool PG counts from the measured cluster setup
PG_COUNT_REPLICATED = 512
PG_COUNT_ERASURE = 256
PG_COUNT_META = 128


def splitmix64(x: int) -> int:
    """splitmix64 finalizer: stable 64-bit non-cryptographic mixing."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


@lru_cache(maxsize=1024)
def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & MASK64
    return h


def hash64(*parts) -> int:
    h = 0
    for p in parts:
        if isinstance(p, str):
            p = fnv1a64(p.encode())
        h = splitmix64(h ^ (p & MASK64))
    return h


@dataclass(frozen=True)
class ClusterMap:
    node_count: int = 4
    osds_per_node: int = 6
    pg_count_data: int = PG_COUNT_ERASURE
    pg_count_meta: int = PG_COUNT_META
    placement_seed: int = 0

    def __post_init__(self):
        for name in ("node_count", "osds_per_node", "pg_count_data", "pg_count_meta"):
            if getattr(self, name) < 1:
                raise ConfigError(f"cluster.{name} must be >= 1")

    @property
    def total_osds(self) -> int:
        return self.node_count * self.osds_per_node

    def node_of(self, osd: int) -> int:
        return osd // self.osds_per_node

    def osds_on_node(self, node: int) -> range:
        return range(node * self.osds_per_node, (node + 1) * self.osds_per_node)


@dataclass(frozen=True, order=True)
class ObjectId:
    pool: str
    index: int


def object_of(file_offset: int, object_bytes: int = OBJECT_BYTES, pool: str = "data"):
    """Return (ObjectId, offset within the object) for a file byte offset."""
    if object_bytes <= 0:
        raise ConfigError("object_bytes must be positive")
    index, intra = divmod(file_offset, object_bytes)
    return ObjectId(pool, index), intra


GOLDEN64 = 0x9E3779B97F4A7C15


def pg_of(obj: ObjectId, pg_count: int, seed: int = 0) -> int:
    """Fibonacci hashing of the object index, offset per (pool, seed).

    Consecutive objects land on well-separated PGs and fill them almost
    evenly, which a fully mixed hash cannot do at a few dozen objects per PG.
    """
    if pg_count < 1:
        raise ConfigError("pg_count must be >= 1")
    h = (obj.index * GOLDEN64 + hash64(obj.pool, seed)) & MASK64
    return (h * pg_count) >> 64


def osds_of(pg: int, cmap: ClusterMap, width: int) -> tuple:
    """Ordered, distinct OSDs for a PG; no node gets more than
    ceil(width / node_count) of them."""
    if width > cmap.total_osds:
        raise CapacityError(f"placement width {width} exceeds {cmap.total_osds} OSDs")
    if width < 1:
        raise CapacityError("placement width must be >= 1")
    return _osds_of(pg, cmap, width)


@lru_cache(maxsize=65536)
def _osds_of(pg: int, cmap: ClusterMap, width: int) -> tuple:
    seed = cmap.placement_seed
    nodes = sorted(range(cmap.node_count), key=lambda n: hash64(seed, pg, "node", n))
    per_node = [
        sorted(cmap.osds_on_node(n), key=lambda o: hash64(seed, pg, "osd", o))
        for n in nodes
    ]
    out = []
    depth = 0
    while len(out) < width:
        for osds in per_node:
            if depth < len(osds):
                out.append(osds[depth])
                if len(out) == width:
                    break
        depth += 1
    return tuple(out)


def spread_bound(width: int, cmap: ClusterMap) -> int:
    return ceil(width / cmap.node_count)
