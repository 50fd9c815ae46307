"""Experiment configs, the backend x workload grid runner and report comparison.

Config files are INI-style::

    [cluster]
    node_count = 4
    osds_per_node = 6

    [run]
    seed = 42
    output_dir = out

    [backend.rep3]
    mode = replication
    r = 3

    [backend.rs63]
    mode = erasure
    k = 6
    m = 3

    [workload.rand4k]
    pattern = random
    block_bytes = 4K
    total_bytes = 64M

    [workload.db]
    preset = db

    [failure]
    osd = 3
    after_requests = 1000

Sizes accept K/M/G/T suffixes (powers of 1024). Any key can be overridden
with ``section.key=value`` strings (the CLI's ``--set``).
"""

import configparser
import json
import os
import re
from dataclasses import asdict, dataclass, field, replace
from itertools import islice
from pathlib import Path
from typing import Optional

from . import gf256
from .backend import (
    HEARTBEAT_INTERVAL_S, HEARTBEAT_MSG_BYTES, Backend, BackendConfig, Erasure,
    Replication, heartbeat_traffic,
)
from .errors import ConfigError, EcsimError
from .metrics import AmplificationReport, Counters, ReportRow, Tally, export_csv, read_csv
from .placement import PG_COUNT_ERASURE, PG_COUNT_REPLICATED, ClusterMap
from .rs_codec import CodeParams
from .workload import WorkloadSpec, generate, parse_trace, preset, replay

_SIZE_RE = re.compile(r"^\s*(\d+)\s*([KMGT]?)(i?B)?\s*$", re.IGNORECASE)
_SUFFIX = {"": 1, "K": 1 << 10, "M": 1 << 20, "G": 1 << 30, "T": 1 << 40}


def parse_size(text: str, key: str = "size") -> int:
    m = _SIZE_RE.match(str(text))
    if not m:
        raise ConfigError(f"{key}: cannot parse size {text!r}")
    return int(m.group(1)) * _SUFFIX[m.group(2).upper()]


def parse_block(text: str, key: str):
    """``4K`` or a histogram ``4K:0.6,8K:0.4``."""
    if ":" not in text:
        return parse_size(text, key)
    hist = []
    for part in text.split(","):
        size, _, weight = part.partition(":")
        try:
            hist.append((parse_size(size, key), float(weight)))
        except ValueError:
            raise ConfigError(f"{key}: bad histogram entry {part!r}") from None
    return tuple(hist)


def _bool(text: str, key: str) -> bool:
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def _int(text: str, key: str) -> int:
    try:
        return int(str(text).strip())
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None


def _float(text: str, key: str) -> float:
    try:
        return float(str(text).strip())
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None


@dataclass(frozen=True)
class FailureScenario:
    osd: int
    after_requests: int = 0
    repair: bool = True
    # requests served degraded between the failure and the repair
    repair_after_requests: int = 0


@dataclass(frozen=True)
class BackendEntry:
    config: BackendConfig
    pg_count: int


@dataclass(frozen=True)
class WorkloadEntry:
    name: str
    spec: Optional[WorkloadSpec] = None
    trace: Optional[str] = None


@dataclass(frozen=True)
class ExperimentConfig:
    cluster: ClusterMap
    backends: tuple
    workloads: tuple
    output_dir: str = "out"
    seed: int = 0
    queue_depth: int = 256
    failure_scenario: Optional[FailureScenario] = None
    heartbeat_msg_bytes: float = HEARTBEAT_MSG_BYTES
    # 0 derives the duration from the request count at ``heartbeat_iops``
    heartbeat_iops: float = 0.0

    def __post_init__(self):
        if not self.backends:
            raise ConfigError("backends: at least one [backend.*] section is required")
        if not self.workloads:
            raise ConfigError("workloads: at least one [workload.*] section is required")
        if self.queue_depth < 1:
            raise ConfigError("run.queue_depth must be >= 1")


_CLUSTER_KEYS = {"node_count", "osds_per_node", "pg_count_data", "pg_count_meta", "placement_seed"}
_BACKEND_KEYS = {"mode", "r", "k", "m", "chunk_bytes", "object_bytes", "min_io_bytes",
                 "locality", "verify_payload", "stripe_cache", "pg_count"}
_WORKLOAD_KEYS = {"preset", "trace", "pattern", "op_mix", "block_bytes", "total_bytes",
                  "file_bytes", "seed", "prefill", "random_fraction", "metadata_fraction"}
_RUN_KEYS = {"seed", "output_dir", "queue_depth", "heartbeat_msg_bytes", "heartbeat_iops"}
_FAILURE_KEYS = {"osd", "after_requests", "repair", "repair_after_requests"}


def _check_keys(section: str, got, allowed):
    extra = set(got) - allowed
    if extra:
        raise ConfigError(f"{section}.{sorted(extra)[0]}: unknown key")


def apply_overrides(parser: configparser.ConfigParser, overrides) -> None:
    for item in overrides or ():
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().rpartition(".")
        if not sep or not dot or not section:
            raise ConfigError(f"override {item!r}: expected section.key=value")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, name, value.strip())


def load_config(path=None, overrides=(), text: Optional[str] = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if text is not None:
        parser.read_string(text)
    elif path is not None:
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    apply_overrides(parser, overrides)
    base = Path(path).parent if path is not None else Path(".")
    return build_config(parser, base)


def build_config(parser: configparser.ConfigParser, base: Path = Path(".")) -> ExperimentConfig:
    run = dict(parser["run"]) if parser.has_section("run") else {}
    _check_keys("run", run, _RUN_KEYS)
    seed = _int(run.get("seed", "0"), "run.seed")

    cl = dict(parser["cluster"]) if parser.has_section("cluster") else {}
    _check_keys("cluster", cl, _CLUSTER_KEYS)
    cluster = ClusterMap(**{k: _int(v, f"cluster.{k}") for k, v in cl.items()})

    backends, workloads = [], []
    for section in parser.sections():
        kind, _, name = section.partition(".")
        if kind == "backend":
            backends.append(_backend(name, dict(parser[section])))
        elif kind == "workload":
            workloads.append(_workload(name, dict(parser[section]), seed, base))
        elif kind not in ("run", "cluster", "failure"):
            raise ConfigError(f"{section}: unknown section")

    failure = None
    if parser.has_section("failure"):
        f = dict(parser["failure"])
        _check_keys("failure", f, _FAILURE_KEYS)
        if "osd" not in f:
            raise ConfigError("failure.osd: required")
        failure = FailureScenario(
            osd=_int(f["osd"], "failure.osd"),
            after_requests=_int(f.get("after_requests", "0"), "failure.after_requests"),
            repair=_bool(f.get("repair", "true"), "failure.repair"),
            repair_after_requests=_int(f.get("repair_after_requests", "0"),
                                       "failure.repair_after_requests"),
        )
        if not 0 <= failure.osd < cluster.total_osds:
            raise ConfigError(f"failure.osd: no OSD {failure.osd} in a {cluster.total_osds}-OSD cluster")

    for entry in backends:
        if entry.config.width > cluster.total_osds:
            raise ConfigError(
                f"backend.{entry.config.label}: needs {entry.config.width} OSDs, "
                f"cluster has {cluster.total_osds}"
            )
    return ExperimentConfig(
        cluster=cluster,
        backends=tuple(backends),
        workloads=tuple(workloads),
        output_dir=run.get("output_dir", "out").strip(),
        seed=seed,
        queue_depth=_int(run.get("queue_depth", "256"), "run.queue_depth"),
        failure_scenario=failure,
        heartbeat_msg_bytes=_float(run.get("heartbeat_msg_bytes", HEARTBEAT_MSG_BYTES),
                                   "run.heartbeat_msg_bytes"),
        heartbeat_iops=_float(run.get("heartbeat_iops", "0"), "run.heartbeat_iops"),
    )


def _backend(name: str, s: dict) -> BackendEntry:
    key = f"backend.{name}"
    _check_keys(key, s, _BACKEND_KEYS)
    mode = s.get("mode", "").strip().lower()
    if mode in ("replication", "replicated"):
        m = Replication(_int(s.get("r", "3"), f"{key}.r"))
        default_pgs = PG_COUNT_REPLICATED
    elif mode in ("erasure", "ec"):
        if "k" not in s or "m" not in s:
            raise ConfigError(f"{key}.k: erasure backends need k and m")
        try:
            params = CodeParams(_int(s["k"], f"{key}.k"), _int(s["m"], f"{key}.m"),
                                parse_size(s.get("chunk_bytes", "4K"), f"{key}.chunk_bytes"))
        except EcsimError as exc:
            raise ConfigError(f"{key}.k: {exc}") from None
        m = Erasure(params)
        default_pgs = PG_COUNT_ERASURE
    else:
        raise ConfigError(f"{key}.mode: expected replication or erasure, got {mode!r}")
    kwargs = {}
    if "object_bytes" in s:
        kwargs["object_bytes"] = parse_size(s["object_bytes"], f"{key}.object_bytes")
    if "min_io_bytes" in s:
        kwargs["min_io_bytes"] = parse_size(s["min_io_bytes"], f"{key}.min_io_bytes")
    if "locality" in s:
        kwargs["locality"] = s["locality"].strip()
    for flag in ("verify_payload", "stripe_cache"):
        if flag in s:
            kwargs[flag] = _bool(s[flag], f"{key}.{flag}")
    try:
        cfg = BackendConfig(m, name=name, **kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{key}: {exc}") from None
    return BackendEntry(cfg, _int(s.get("pg_count", str(default_pgs)), f"{key}.pg_count"))


def _workload(name: str, s: dict, seed: int, base: Path) -> WorkloadEntry:
    key = f"workload.{name}"
    _check_keys(key, s, _WORKLOAD_KEYS)
    if "trace" in s:
        trace = Path(s["trace"])
        return WorkloadEntry(name, trace=str(trace if trace.is_absolute() else base / trace))
    wseed = _int(s.get("seed", str(seed)), f"{key}.seed")
    try:
        if "preset" in s:
            spec = preset(s["preset"].strip(), seed=wseed)
            upd = {}
            if "total_bytes" in s:
                upd["total_bytes"] = parse_size(s["total_bytes"], f"{key}.total_bytes")
            if "file_bytes" in s:
                upd["file_bytes"] = parse_size(s["file_bytes"], f"{key}.file_bytes")
            if "prefill" in s:
                upd["prefill"] = _bool(s["prefill"], f"{key}.prefill")
            spec = replace(spec, name=name, **upd)
        else:
            kw = dict(name=name, seed=wseed)
            if "pattern" in s:
                kw["pattern"] = s["pattern"].strip().lower()
            for f in ("op_mix", "metadata_fraction", "random_fraction"):
                if f in s:
                    kw[f] = _float(s[f], f"{key}.{f}")
            if "block_bytes" in s:
                kw["block_bytes"] = parse_block(s["block_bytes"], f"{key}.block_bytes")
            for f in ("total_bytes", "file_bytes"):
                if f in s:
                    kw[f] = parse_size(s[f], f"{key}.{f}")
            if "prefill" in s:
                kw["prefill"] = _bool(s["prefill"], f"{key}.prefill")
            spec = WorkloadSpec(**kw)
    except ConfigError as exc:
        if str(exc).startswith(key):
            raise
        raise ConfigError(f"{key}: {exc}") from None
    return WorkloadEntry(name, spec=spec)


# -- running -------------------------------------------------------------


@dataclass
class RepairSummary:
    backend: str
    workload: str
    osd: int
    k: Optional[int]
    lost_bytes: int
    repair_read_bytes: int
    repair_write_bytes: int
    repair_net_bytes: int
    chunk_bytes: Optional[int] = None
    m: Optional[int] = None


# Widely quoted per-server rebuild traffic, compared against the model in the
# summary: (k, m, chunk bytes) -> bytes
QUOTED_REPAIR_BYTES = {(10, 4, 256 << 20): 2 * 10**9}


@dataclass
class CellResult:
    backend: BackendEntry
    workload: WorkloadEntry
    rows: list
    heartbeat_bytes: int = 0
    repair: Optional[RepairSummary] = None


@dataclass
class RunResult:
    config: ExperimentConfig
    cells: list = field(default_factory=list)

    @property
    def report(self) -> AmplificationReport:
        return AmplificationReport([r for c in self.cells for r in c.rows])

    def reports(self) -> list:
        return [AmplificationReport(list(c.rows)) for c in self.cells]


def _requests(entry: WorkloadEntry):
    if entry.trace is not None:
        return replay(parse_trace(entry.trace))
    return generate(entry.spec)


def _pattern(entry: WorkloadEntry) -> str:
    if entry.trace is not None:
        return "trace"
    spec = entry.spec
    if spec.components or spec.random_fraction not in (None, 0.0, 1.0):
        return "mixed"
    return "random" if spec.rand_fraction == 1.0 else "sequential"


def run_cell(cfg: ExperimentConfig, bentry: BackendEntry, wentry: WorkloadEntry) -> CellResult:
    cmap = replace(cfg.cluster, pg_count_data=bentry.pg_count)
    backend = Backend(bentry.config, cmap)
    if wentry.spec is not None and wentry.spec.prefill:
        backend.prefill(wentry.spec.file_bytes)

    tallies = {}
    fail = cfg.failure_scenario
    events = []
    if fail is not None:
        events.append((fail.after_requests, "fail"))
        if fail.repair:
            events.append((fail.after_requests + fail.repair_after_requests, "repair"))
    repair_eff = None

    def fire(event):
        nonlocal repair_eff
        if event == "fail":
            backend.fail_osd(fail.osd)
        else:
            repair_eff = backend.repair_osd(fail.osd)

    stream = iter(_requests(wentry))
    served = 0
    while True:
        while events and events[0][0] <= served:
            fire(events.pop(0)[1])
        # batches are cut at failure/repair points so events hit exact request counts
        limit = min(cfg.queue_depth, events[0][0] - served) if events else cfg.queue_depth
        batch = list(islice(stream, limit))
        if not batch:
            break
        for req, e in zip(batch, backend.submit_batch(batch)):
            tallies.setdefault(req.length, Tally()).add(e)
        served += len(batch)
    for _, event in events:
        fire(event)

    bc = bentry.config
    k = bc.params.k if bc.erasure else None
    m = bc.params.m if bc.erasure else None
    r = None if bc.erasure else bc.mode.r
    rows = [
        ReportRow(bc.label, k, m, r, wentry.name, _pattern(wentry), size, t.counters)
        for size, t in sorted(tallies.items())
    ]
    n_requests = sum(row.counters.request_count for row in rows)
    duration = n_requests / cfg.heartbeat_iops if cfg.heartbeat_iops > 0 else 0.0
    hb = heartbeat_traffic(cmap, duration, cfg.heartbeat_msg_bytes)

    repair = None
    if repair_eff is not None:
        lost = repair_eff.storage_write_bytes
        repair = RepairSummary(bc.label, wentry.name, fail.osd, k, lost,
                               repair_eff.storage_read_bytes, lost, repair_eff.private_net_bytes,
                               bc.params.chunk_bytes if bc.erasure else None, m)
    return CellResult(bentry, wentry, rows, hb, repair)


def run(cfg: ExperimentConfig, write: bool = True) -> RunResult:
    """Run every (backend, workload) cell; optionally write CSVs, summary and manifest."""
    result = RunResult(cfg)
    for w in cfg.workloads:
        for b in cfg.backends:
            result.cells.append(run_cell(cfg, b, w))
    if write:
        write_outputs(result)
    return result


def manifest(cfg: ExperimentConfig) -> dict:
    def backend(b: BackendEntry):
        d = asdict(b.config)
        d["mode"] = {"kind": "erasure" if b.config.erasure else "replication", **d["mode"]}
        d["pg_count"] = b.pg_count
        return d

    def workload(w: WorkloadEntry):
        if w.trace is not None:
            return {"name": w.name, "trace": w.trace}
        return {"name": w.name, **asdict(w.spec)}

    return {
        "cluster": asdict(cfg.cluster),
        "backends": [backend(b) for b in cfg.backends],
        "workloads": [workload(w) for w in cfg.workloads],
        "seed": cfg.seed,
        "queue_depth": cfg.queue_depth,
        "failure_scenario": asdict(cfg.failure_scenario) if cfg.failure_scenario else None,
        "calibration": {
            "gf_polynomial": hex(gf256.POLYNOMIAL),
            "gf_generator": gf256.GENERATOR,
            "heartbeat_msg_bytes": cfg.heartbeat_msg_bytes,
            "heartbeat_interval_s": HEARTBEAT_INTERVAL_S,
            "heartbeat_iops": cfg.heartbeat_iops,
        },
    }


def _write_text(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_outputs(result: RunResult):
    out = Path(result.config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for cell in result.cells:
        name = f"{cell.backend.config.label}__{cell.workload.name}.csv"
        export_csv(AmplificationReport(cell.rows), out / name)
    export_csv(result.report, out / "report.csv")
    repairs = [c.repair for c in result.cells if c.repair is not None]
    if repairs:
        lines = ["backend,workload,osd,k,lost_bytes,repair_read_bytes,repair_write_bytes,repair_net_bytes"]
        for rp in repairs:
            lines.append(",".join(str("" if v is None else v) for v in (
                rp.backend, rp.workload, rp.osd, rp.k, rp.lost_bytes, rp.repair_read_bytes,
                rp.repair_write_bytes, rp.repair_net_bytes)))
        _write_text(out / "repair.csv", "\n".join(lines) + "\n")
    _write_text(out / "manifest.json", json.dumps(manifest(result.config), indent=2, sort_keys=True) + "\n")
    _write_text(out / "summary.txt", summary(result))


def _fmt(v) -> str:
    return "-" if v is None else f"{v:.3f}"


def summary(result: RunResult) -> str:
    lines = []
    for cell in result.cells:
        rep = AmplificationReport(cell.rows)
        lines.append(
            f"{cell.backend.config.label:>10} {cell.workload.name:<16} "
            f"read_amp={_fmt(rep.read_amp)} write_amp={_fmt(rep.write_amp)} "
            f"rel_net={_fmt(rep.rel_net_traffic)} pg_conflicts={rep.total.pg_conflict_count}"
        )
        if cell.heartbeat_bytes:
            lines.append(f"{'':>10} heartbeat private bytes={cell.heartbeat_bytes}")
        rp = cell.repair
        if rp is not None:
            note = ""
            if rp.k:
                note = (f" (= {rp.k} x lost bytes; a k-1 source estimate would give "
                        f"{(rp.k - 1) * rp.lost_bytes})")
            lines.append(f"{'':>10} repair osd {rp.osd}: lost={rp.lost_bytes} "
                         f"read={rp.repair_read_bytes}{note} net={rp.repair_net_bytes}")
            quoted = QUOTED_REPAIR_BYTES.get((rp.k, rp.m, rp.chunk_bytes))
            if quoted is not None:
                lines.append(
                    f"{'':>10} discrepancy: RS({rp.k},{rp.m}) with {rp.chunk_bytes >> 20}MB chunks is "
                    f"often quoted at {quoted / 1e9:g}GB of rebuild traffic per lost chunk; "
                    f"this model pulls k chunks per lost chunk: {rp.repair_read_bytes} bytes "
                    f"({rp.repair_read_bytes / 2**30:g} GiB)")
    by_workload = {}
    for cell in result.cells:
        by_workload.setdefault(cell.workload.name, []).append(AmplificationReport(cell.rows))
    for reps in by_workload.values():
        if len(reps) > 1:
            lines.append("")
            lines.append(render_comparison(compare(reps)))
    return "\n".join(lines) + "\n"


# -- comparison ----------------------------------------------------------

METRICS = ("read_amp", "write_amp", "rel_net_traffic")


@dataclass(frozen=True)
class ComparisonRow:
    workload: str
    block_bytes: int
    backend: str
    baseline: str
    ratios: dict


def _key(row: ReportRow):
    return (row.workload, row.block_bytes)


def compare(reports) -> list:
    """Ratios of each report's metrics to a baseline report, per (workload,
    block size). The baseline is the first replicated report, else the first."""
    reports = list(reports)
    if len(reports) < 2:
        raise ConfigError("compare: need at least two reports")
    keysets = [{_key(r) for r in rep.rows} for rep in reports]
    if any(ks != keysets[0] for ks in keysets[1:]):
        raise ConfigError("compare: reports cover different workloads or block sizes")
    base_i = next((i for i, rep in enumerate(reports) if rep.rows and rep.rows[0].r is not None), 0)
    base = {_key(r): r for r in reports[base_i].rows}
    out = []
    for i, rep in enumerate(reports):
        if i == base_i:
            continue
        for row in rep.rows:
            b = base[_key(row)]
            ratios = {}
            for metric in METRICS:
                num, den = getattr(row, metric), getattr(b, metric)
                ratios[metric] = None if num is None or not den else num / den
            out.append(ComparisonRow(row.workload, row.block_bytes, row.backend, b.backend, ratios))
    return out


def render_comparison(rows) -> str:
    lines = [f"{'workload':<16} {'block':>8} {'backend':>10} / {'baseline':<10} "
             + " ".join(f"{m:>16}" for m in METRICS)]
    for c in rows:
        lines.append(f"{c.workload:<16} {c.block_bytes:>8} {c.backend:>10} / {c.baseline:<10} "
                     + " ".join(f"{_fmt(c.ratios[m]):>16}" for m in METRICS))
    return "\n".join(lines)


def reports_from_csv(paths) -> list:
    """One report per (file, backend) pair, in file order."""
    reports = []
    for path in paths:
        groups = {}
        for d in read_csv(path):
            c = Counters(
                client_read_bytes=int(d["client_read_bytes"]),
                client_write_bytes=int(d["client_write_bytes"]),
                storage_read_bytes=int(d["storage_read_bytes"]),
                storage_write_bytes=int(d["storage_write_bytes"]),
                private_net_bytes=int(d["private_net_bytes"]),
                public_net_bytes=int(d["public_net_bytes"]),
                pg_conflict_count=int(d["pg_conflicts"]),
            )
            opt = lambda v: int(v) if v else None  # noqa: E731
            row = ReportRow(d["backend"], opt(d["k"]), opt(d["m"]), opt(d["r"]), d["workload"],
                            d["pattern"], int(d["block_bytes"]), c)
            groups.setdefault(d["backend"], []).append(row)
        reports.extend(AmplificationReport(rows) for rows in groups.values())
    return reports
