"""PG backend: replication and erasure-coding data paths with byte accounting.

Every request produces an :class:`IoEffects` record: bytes read and written
per OSD, inter-OSD (private network) bytes and client (public network) bytes.
Payloads are only materialised when ``BackendConfig.verify_payload`` is set;
otherwise the backend is pure bookkeeping and handles 1TiB address spaces.

Cost model
----------
* The acting primary is the first healthy OSD of the PG's list. A chunk or
  replica moved between the primary and any other OSD costs its size on the
  private network; primary-resident data moves for free (``locality="osd"``).
  ``locality="node"`` also waives OSDs on the primary's node, and
  ``locality="none"`` charges every storage access, the primary's included.
* Replicated writes are widened to ``min_io_bytes`` units. Each replica reads
  the untouched remainder of partially covered units before writing.
* Erasure-coded objects are padded to whole stripes and fully written with
  zero data and coding chunks on first write (object initialization).
* A partial-stripe update reads every data chunk the write does not fully
  cover, then writes the touched data chunks and all m coding chunks.
* Reads always assemble whole stripes from k chunks: the k data chunks when
  all are healthy, else the first k surviving chunks in index order.
"""

from collections import Counter
from dataclasses import dataclass, field
from math import ceil
from typing import Optional, Union

from . import rs_codec
from .errors import ConfigError, DataLossError, EcsimError
from .placement import OBJECT_BYTES, ClusterMap, ObjectId, object_of, osds_of, pg_of
from .rs_codec import CodeParams

MIN_IO_BYTES = 4096
HEARTBEAT_INTERVAL_S = 6.0
# 280KB/s (KB = 1000 bytes) among 24 OSDs: 280_000 * 6 / (24 * 23)
HEARTBEAT_MSG_BYTES = 280_000 * HEARTBEAT_INTERVAL_S / (24 * 23)

LOCALITIES = ("osd", "node", "none")


@dataclass(frozen=True)
class Replication:
    r: int = 3

    def __post_init__(self):
        if self.r < 1:
            raise ConfigError("replication r must be >= 1")

    @property
    def width(self) -> int:
        return self.r

    @property
    def label(self) -> str:
        return f"rep{self.r}"


@dataclass(frozen=True)
class Erasure:
    params: CodeParams

    @property
    def width(self) -> int:
        return self.params.n

    @property
    def label(self) -> str:
        return f"rs{self.params.k}{self.params.m}"


@dataclass(frozen=True)
class BackendConfig:
    mode: Union[Replication, Erasure]
    object_bytes: int = OBJECT_BYTES
    min_io_bytes: int = MIN_IO_BYTES
    locality: str = "osd"
    verify_payload: bool = False
    # keep the last stripe each primary assembled so consecutive reads reuse it
    stripe_cache: bool = False
    pool: str = "data"
    name: Optional[str] = None

    def __post_init__(self):
        if self.object_bytes < 1:
            raise ConfigError("object_bytes must be >= 1")
        if self.min_io_bytes < 1:
            raise ConfigError("min_io_bytes must be >= 1")
        if self.locality not in LOCALITIES:
            raise ConfigError(f"locality must be one of {LOCALITIES}, got {self.locality!r}")
        if self.erasure and self.params.chunk_bytes % self.min_io_bytes:
            raise ConfigError(
                f"min_io_bytes {self.min_io_bytes} must divide chunk_bytes {self.params.chunk_bytes}"
            )

    @property
    def erasure(self) -> bool:
        return isinstance(self.mode, Erasure)

    @property
    def params(self) -> CodeParams:
        return self.mode.params

    @property
    def width(self) -> int:
        return self.mode.width

    @property
    def label(self) -> str:
        return self.name or self.mode.label

    @property
    def stripes_per_object(self) -> int:
        return ceil(self.object_bytes / self.params.stripe_width_bytes)


@dataclass(frozen=True)
class IoRequest:
    op: str  # "read" | "write"
    file_offset: int
    length: int
    metadata: bool = False
    payload: Optional[bytes] = None

    def __post_init__(self):
        if self.op not in ("read", "write"):
            raise ValueError(f"op must be 'read' or 'write', got {self.op!r}")
        if self.length < 1:
            raise ValueError("request length must be >= 1")
        if self.file_offset < 0:
            raise ValueError("file_offset must be >= 0")
        if self.payload is not None and len(self.payload) != self.length:
            raise ValueError("payload length does not match request length")


@dataclass
class IoEffects:
    storage_reads: Counter = field(default_factory=Counter)
    storage_writes: Counter = field(default_factory=Counter)
    private_net_bytes: int = 0
    public_net_bytes: int = 0
    client_read_bytes: int = 0
    client_write_bytes: int = 0
    pg_conflict: bool = False
    metadata: bool = False
    data: Optional[bytes] = None

    @property
    def storage_read_bytes(self) -> int:
        return sum(self.storage_reads.values())

    @property
    def storage_write_bytes(self) -> int:
        return sum(self.storage_writes.values())

    def __iadd__(self, other: "IoEffects"):
        self.storage_reads.update(other.storage_reads)
        self.storage_writes.update(other.storage_writes)
        self.private_net_bytes += other.private_net_bytes
        self.public_net_bytes += other.public_net_bytes
        self.client_read_bytes += other.client_read_bytes
        self.client_write_bytes += other.client_write_bytes
        self.pg_conflict = self.pg_conflict or other.pg_conflict
        return self

    def __add__(self, other: "IoEffects") -> "IoEffects":
        out = IoEffects(Counter(self.storage_reads), Counter(self.storage_writes),
                        self.private_net_bytes, self.public_net_bytes,
                        self.client_read_bytes, self.client_write_bytes,
                        self.pg_conflict)
        out += other
        return out


@dataclass
class ObjectState:
    id: ObjectId
    pg: int
    osds: tuple
    initialized: bool = False
    stripes: int = 0
    # shard (erasure) or replica (replication) payloads, None when lost;
    # only kept with verify_payload
    shards: Optional[list] = None


class Backend:
    """One simulation run: config, cluster map and the mutable object store."""

    def __init__(self, cfg: BackendConfig, cmap: ClusterMap):
        if cfg.width > cmap.total_osds:
            raise ConfigError(
                f"{cfg.label} needs {cfg.width} OSDs, cluster has {cmap.total_osds}"
            )
        self.cfg = cfg
        self.cmap = cmap
        self.objects: dict = {}
        self.failed: set = set()
        self.prefilled_bytes = 0
        self._last_stripe: dict = {}

    # -- placement -------------------------------------------------------

    def placement(self, obj: ObjectId):
        pg = pg_of(obj, self.cmap.pg_count_data, self.cmap.placement_seed)
        return pg, osds_of(pg, self.cmap, self.cfg.width)

    def pgs_of(self, req: IoRequest) -> set:
        return {self.placement(obj)[0] for obj, _, _, _ in self._pieces(req)}

    def _pieces(self, req: IoRequest):
        pos, end = req.file_offset, req.file_offset + req.length
        while pos < end:
            obj, intra = object_of(pos, self.cfg.object_bytes, self.cfg.pool)
            n = min(end - pos, self.cfg.object_bytes - intra)
            yield obj, intra, intra + n, pos - req.file_offset
            pos += n

    def _state(self, obj: ObjectId) -> ObjectState:
        st = self.objects.get(obj)
        if st is None:
            pg, osds = self.placement(obj)
            st = ObjectState(obj, pg, osds)
            self.objects[obj] = st
            if obj.index * self.cfg.object_bytes < self.prefilled_bytes:
                self._materialise(st)
        return st

    def _materialise(self, st: ObjectState):
        """Mark an object as existing with all-zero content, at no cost."""
        st.initialized = True
        if self.cfg.erasure:
            st.stripes = self.cfg.stripes_per_object
            size = st.stripes * self.cfg.params.chunk_bytes
        else:
            size = self.cfg.object_bytes
        if self.cfg.verify_payload:
            st.shards = [None if o in self.failed else bytearray(size) for o in st.osds]

    def prefill(self, file_bytes: int):
        """Treat [0, file_bytes) as already written with zeros.

        Stands in for sequentially writing the whole file before measuring;
        the prefill traffic itself is not accounted.
        """
        self.prefilled_bytes = max(self.prefilled_bytes, file_bytes)

    def _primary(self, st: ObjectState) -> int:
        for osd in st.osds:
            if osd not in self.failed:
                return osd
        raise DataLossError(f"all OSDs of PG {st.pg} have failed")

    def _local(self, osd: int, primary: int) -> bool:
        loc = self.cfg.locality
        if loc == "osd":
            return osd == primary
        if loc == "node":
            return self.cmap.node_of(osd) == self.cmap.node_of(primary)
        return False

    def _charge_read(self, e: IoEffects, osd: int, n: int, primary: int):
        e.storage_reads[osd] += n
        if not self._local(osd, primary):
            e.private_net_bytes += n

    def _charge_write(self, e: IoEffects, osd: int, n: int, primary: int):
        e.storage_writes[osd] += n
        if not self._local(osd, primary):
            e.private_net_bytes += n

    def _available(self, st: ObjectState) -> list:
        return [j for j, osd in enumerate(st.osds) if osd not in self.failed]

    # -- dispatch --------------------------------------------------------

    def submit(self, req: IoRequest) -> IoEffects:
        if req.metadata:
            # metadata goes to the replicated metadata pool, outside this model
            return IoEffects(metadata=True)
        if self.cfg.erasure:
            return self.ec_write(req) if req.op == "write" else self.ec_read(req)
        return self.repl_write(req) if req.op == "write" else self.repl_read(req)

    def submit_batch(self, reqs) -> list:
        """Serve a queue-depth window; flag requests whose PG is already busy
        with an earlier request of the same window."""
        busy = set()
        out = []
        for req in reqs:
            e = self.submit(req)
            if not req.metadata:
                pgs = self.pgs_of(req)
                e.pg_conflict = not busy.isdisjoint(pgs)
                busy |= pgs
            out.append(e)
        return out

    def fail_osd(self, osd: int):
        if not 0 <= osd < self.cmap.total_osds:
            raise ConfigError(f"no OSD {osd} in a {self.cmap.total_osds}-OSD cluster")
        self.failed.add(osd)
        self._last_stripe.clear()
        if self.cfg.verify_payload:
            for st in self.objects.values():
                if st.shards is not None and osd in st.osds:
                    st.shards[st.osds.index(osd)] = None

    # -- replication -----------------------------------------------------

    def _check_mode(self, erasure: bool):
        if self.cfg.erasure != erasure:
            raise EcsimError(f"{self.cfg.label} backend cannot serve this operation")

    def repl_write(self, req: IoRequest) -> IoEffects:
        self._check_mode(False)
        e = IoEffects(public_net_bytes=req.length, client_write_bytes=req.length)
        unit = self.cfg.min_io_bytes
        for obj, lo, hi, boff in self._pieces(req):
            st = self._state(obj)
            if not st.initialized:
                self._materialise(st)
            primary = self._primary(st)
            start = lo // unit * unit
            end = min(-(-hi // unit) * unit, self.cfg.object_bytes)
            extent = end - start
            remainder = extent - (hi - lo)
            for j in self._available(st):
                osd = st.osds[j]
                # read-modify of the untouched part of the edge units, local to each replica
                if remainder:
                    e.storage_reads[osd] += remainder
                self._charge_write(e, osd, extent, primary)
                if self.cfg.verify_payload and st.shards[j] is not None:
                    st.shards[j][lo:hi] = _payload(req, boff, hi - lo)
        return e

    def repl_read(self, req: IoRequest) -> IoEffects:
        self._check_mode(False)
        e = IoEffects(public_net_bytes=req.length, client_read_bytes=req.length)
        unit = self.cfg.min_io_bytes
        out = bytearray() if self.cfg.verify_payload else None
        for obj, lo, hi, _ in self._pieces(req):
            st = self._state(obj)
            if not st.initialized:
                if out is not None:
                    out += bytes(hi - lo)
                continue
            primary = self._primary(st)
            start = lo // unit * unit
            end = min(-(-hi // unit) * unit, self.cfg.object_bytes)
            self._charge_read(e, primary, end - start, primary)
            if out is not None:
                out += st.shards[st.osds.index(primary)][lo:hi]
        e.data = bytes(out) if out is not None else None
        return e

    # -- erasure coding --------------------------------------------------

    def initialize_object(self, obj: ObjectId) -> IoEffects:
        """Create an object by writing every stripe's data and coding chunks
        (all zero). A no-op in replication mode."""
        e = IoEffects()
        if not self.cfg.erasure:
            return e
        st = self._state(obj)
        if st.initialized:
            raise EcsimError(f"object {obj} is already initialized")
        primary = self._primary(st)
        stripes = self.cfg.stripes_per_object
        shard_bytes = stripes * self.cfg.params.chunk_bytes
        for j in self._available(st):
            self._charge_write(e, st.osds[j], shard_bytes, primary)
        # zero data encodes to zero coding chunks, so no arithmetic is needed
        self._materialise(st)
        return e

    def _stripe_sources(self, st: ObjectState, need: list, avail: list) -> list:
        k = self.cfg.params.k
        if len(avail) < k:
            raise DataLossError(
                f"object {st.id}: {len(st.osds) - len(avail)} of {len(st.osds)} shards lost, "
                f"more than m={self.cfg.params.m}"
            )
        aset = set(avail)
        if all(j in aset for j in need):
            return need
        return avail[:k]

    def _stripe_data(self, st: ObjectState, s: int, sources: list) -> list:
        """Data chunk payloads of stripe ``s`` rebuilt from ``sources``."""
        p = self.cfg.params
        c = p.chunk_bytes
        if all(j < p.k for j in sources):
            # chunks outside ``sources`` are about to be overwritten whole
            return [bytes(st.shards[j][s * c:(s + 1) * c]) if j in sources else bytes(c)
                    for j in range(p.k)]
        pairs = [(j, bytes(st.shards[j][s * c:(s + 1) * c])) for j in sources]
        return [ch.payload for ch in rs_codec.decode(p, pairs)]

    def ec_write(self, req: IoRequest) -> IoEffects:
        self._check_mode(True)
        p = self.cfg.params
        c, w, k = p.chunk_bytes, p.stripe_width_bytes, p.k
        e = IoEffects(public_net_bytes=req.length, client_write_bytes=req.length)
        for obj, lo, hi, boff in self._pieces(req):
            st = self._state(obj)
            if not st.initialized:
                e += self.initialize_object(obj)
            primary = self._primary(st)
            avail = self._available(st)
            aset = set(avail)
            for s in range(lo // w, (hi - 1) // w + 1):
                self._last_stripe.pop(st.pg, None)
                base = s * w
                covered, touched = [], []
                for j in range(k):
                    a = base + j * c
                    if a < hi and lo < a + c:
                        touched.append(j)
                        if lo <= a and a + c <= hi:
                            covered.append(j)
                need = [j for j in range(k) if j not in covered]
                sources = self._stripe_sources(st, need, avail) if need else []
                for j in sources:
                    self._charge_read(e, st.osds[j], c, primary)
                targets = [j for j in touched + list(range(k, p.n)) if j in aset]
                for j in targets:
                    self._charge_write(e, st.osds[j], c, primary)
                if self.cfg.verify_payload:
                    if need:
                        data = self._stripe_data(st, s, sources)
                    else:
                        data = [bytes(c)] * k
                    stripe = bytearray(b"".join(data))
                    a, b = max(lo, base), min(hi, base + w)
                    stripe[a - base:b - base] = _payload(req, boff + a - lo, b - a)
                    data = [bytes(stripe[j * c:(j + 1) * c]) for j in range(k)]
                    chunks = data + [ch.payload for ch in rs_codec.encode(p, data)]
                    for j in targets:
                        st.shards[j][s * c:(s + 1) * c] = chunks[j]
        return e

    def ec_read(self, req: IoRequest, failed: Optional[set] = None) -> IoEffects:
        self._check_mode(True)
        p = self.cfg.params
        c, w, k = p.chunk_bytes, p.stripe_width_bytes, p.k
        e = IoEffects(public_net_bytes=req.length, client_read_bytes=req.length)
        out = bytearray() if self.cfg.verify_payload else None
        extra = set(failed or ()) - self.failed
        for obj, lo, hi, _ in self._pieces(req):
            st = self._state(obj)
            if not st.initialized:
                if out is not None:
                    out += bytes(hi - lo)
                continue
            down = self.failed | extra
            live = [osd for osd in st.osds if osd not in down]
            if not live:
                raise DataLossError(f"all OSDs of PG {st.pg} have failed")
            primary = live[0]
            avail = [j for j, osd in enumerate(st.osds) if osd not in down]
            for s in range(lo // w, (hi - 1) // w + 1):
                sources = self._stripe_sources(st, list(range(k)), avail)
                cached = self.cfg.stripe_cache and not extra and self._last_stripe.get(st.pg) == (obj, s)
                if not cached:
                    for j in sources:
                        self._charge_read(e, st.osds[j], c, primary)
                    if self.cfg.stripe_cache and not extra:
                        self._last_stripe[st.pg] = (obj, s)
                if out is not None:
                    stripe = b"".join(self._stripe_data(st, s, sources))
                    base = s * w
                    a, b = max(lo, base), min(hi, base + w)
                    out += stripe[a - base:b - base]
        e.data = bytes(out) if out is not None else None
        return e

    def ec_degraded_read(self, req: IoRequest, failed: set) -> IoEffects:
        """Read as if the OSDs in ``failed`` (plus any already failed) were down."""
        return self.ec_read(req, failed=failed)

    # -- repair ----------------------------------------------------------

    def _objects_on(self, osd: int):
        yield from [st for st in self.objects.values() if osd in st.osds]
        # prefilled objects nobody has touched yet still hold shards
        for i in range(ceil(self.prefilled_bytes / self.cfg.object_bytes)):
            obj = ObjectId(self.cfg.pool, i)
            if obj not in self.objects and osd in self.placement(obj)[1]:
                yield self._state(obj)

    def repair_osd(self, osd: int) -> IoEffects:
        """Rebuild every shard the failed ``osd`` held onto its replacement.

        The replacement takes over the OSD id, so placement is unchanged. For
        each lost chunk it pulls k surviving chunks of the stripe over the
        private network and decodes; in replication mode it copies one
        surviving replica.
        """
        e = IoEffects()
        if osd not in self.failed:
            return e
        others = self.failed - {osd}
        rebuilt = []
        for st in list(self._objects_on(osd)):
            if not st.initialized:
                continue
            j = st.osds.index(osd)
            avail = [i for i, o in enumerate(st.osds) if o not in self.failed]
            if self.cfg.erasure:
                p = self.cfg.params
                if len(avail) < p.k:
                    raise DataLossError(
                        f"object {st.id}: cannot repair shard {j}, only {len(avail)} "
                        f"of {p.n} shards survive"
                    )
                sources = avail[:p.k]
                shard_bytes = st.stripes * p.chunk_bytes
                for i in sources:
                    e.storage_reads[st.osds[i]] += shard_bytes
                    e.private_net_bytes += shard_bytes
                e.storage_writes[osd] += shard_bytes
                if self.cfg.verify_payload:
                    shard = bytearray()
                    for s in range(st.stripes):
                        data = self._stripe_data(st, s, sources)
                        if j < p.k:
                            shard += data[j]
                        else:
                            shard += rs_codec.encode(p, data)[j - p.k].payload
                    rebuilt.append((st, j, shard))
            else:
                if not avail:
                    raise DataLossError(f"object {st.id}: no surviving replica")
                src = st.osds[avail[0]]
                e.storage_reads[src] += self.cfg.object_bytes
                e.private_net_bytes += self.cfg.object_bytes
                e.storage_writes[osd] += self.cfg.object_bytes
                if self.cfg.verify_payload:
                    rebuilt.append((st, j, bytearray(st.shards[avail[0]])))
        for st, j, shard in rebuilt:
            st.shards[j] = shard
        self.failed = others
        self._last_stripe.clear()
        return e


def _payload(req: IoRequest, offset: int, n: int) -> bytes:
    if req.payload is None:
        return bytes(n)
    return req.payload[offset:offset + n]


def heartbeat_traffic(cmap: ClusterMap, duration_s: float,
                      msg_bytes: float = HEARTBEAT_MSG_BYTES,
                      interval_s: float = HEARTBEAT_INTERVAL_S) -> int:
    """Private-network bytes of all-to-all OSD heartbeats over ``duration_s``."""
    if duration_s < 0:
        raise ValueError("duration must be >= 0")
    n = cmap.total_osds
    return round(n * (n - 1) * msg_bytes * duration_s / interval_s)
