import io
from itertools import islice

import pytest
from hypothesis import given, settings, strategies as st

from ecsim.errors import ConfigError, TraceParseError
from ecsim.workload import (
    KiB, MiB, TraceRecord, WorkloadSpec, generate, parse_trace, parse_trace_text, preset, replay,
)


def test_sequential_offsets():
    reqs = list(generate(WorkloadSpec(block_bytes=4 * KiB, total_bytes=16 * KiB)))
    assert [r.file_offset for r in reqs] == [0, 4 * KiB, 8 * KiB, 12 * KiB]
    assert all(r.length == 4 * KiB for r in reqs)


def test_sequential_wraps_at_file_end():
    reqs = list(generate(WorkloadSpec(block_bytes=3, file_bytes=10, total_bytes=12)))
    assert [r.file_offset for r in reqs] == [0, 3, 6, 0]


def test_random_is_deterministic_and_seeded():
    spec = WorkloadSpec(pattern="random", op_mix=0.5, seed=7, total_bytes=4 * MiB)
    a, b = list(generate(spec)), list(generate(spec))
    assert a == b
    assert a != list(generate(WorkloadSpec(pattern="random", op_mix=0.5, seed=8, total_bytes=4 * MiB)))


def test_random_offsets_block_aligned():
    spec = WorkloadSpec(pattern="random", block_bytes=64 * KiB, total_bytes=64 * MiB)
    assert all(r.file_offset % (64 * KiB) == 0 for r in generate(spec))


def test_op_mix_binomial_bound():
    spec = WorkloadSpec(pattern="random", op_mix=0.8, block_bytes=1, total_bytes=100_000, seed=1)
    reqs = list(generate(spec))
    assert len(reqs) == 100_000
    frac = sum(r.op == "read" for r in reqs) / len(reqs)
    assert 0.79 <= frac <= 0.81


@settings(max_examples=200)
@given(
    st.sampled_from(["sequential", "random"]),
    st.integers(1, 5000),
    st.integers(1, 4),
    st.integers(0, 2**31),
    st.floats(0, 1),
)
def test_never_crosses_file_end(pattern, file_bytes, blocks_per_file, seed, rnd):
    block = max(1, file_bytes // blocks_per_file - seed % 3)
    spec = WorkloadSpec(pattern=pattern, block_bytes=block, file_bytes=file_bytes,
                        total_bytes=block * 50, seed=seed, random_fraction=rnd)
    for r in generate(spec):
        assert 0 <= r.file_offset and r.file_offset + r.length <= file_bytes


def test_histogram_blocks():
    spec = WorkloadSpec(pattern="random", block_bytes=((4 * KiB, 0.6), (8 * KiB, 0.4)),
                        total_bytes=600 * MiB, seed=2)
    reqs = list(generate(spec))
    assert {r.length for r in reqs} == {4 * KiB, 8 * KiB}
    frac4 = sum(r.length == 4 * KiB for r in reqs) / len(reqs)
    assert abs(frac4 - 0.6) < 0.01
    assert spec.nominal_block == 4 * KiB


@pytest.mark.parametrize("kw", [
    dict(op_mix=1.5), dict(pattern="zigzag"), dict(block_bytes=0),
    dict(block_bytes=8, total_bytes=4), dict(block_bytes=16, file_bytes=8),
    dict(metadata_fraction=-0.1),
])
def test_spec_validation(kw):
    with pytest.raises(ConfigError):
        WorkloadSpec(**kw)


# -- presets --------------------------------------------------------------

def test_preset_headline_values():
    db = preset("db")
    assert (db.op_mix, db.rand_fraction, db.block_bytes) == (0.8, 0.99, 8 * KiB)
    vda = preset("vda")
    assert (vda.op_mix, vda.rand_fraction, vda.block_bytes) == (0.0, 0.0, 512 * KiB)
    assert vda.components[0][0] == 90.0
    vdi = preset("vdi")
    assert (vdi.op_mix, vdi.rand_fraction, vdi.block_bytes) == (0.263, 0.848, 4 * KiB)
    assert preset("eda").block_bytes == 64 * KiB
    with pytest.raises(ConfigError):
        preset("hpc")


def classify(reqs):
    """Split a single stream into sequential and random requests: a sequential
    request always starts at the running cursor, a random one almost never does."""
    cursor, seq = 0, 0
    for r in reqs:
        if r.file_offset == cursor:
            seq += 1
            cursor += r.length
    return 1 - seq / len(reqs)


N = 100_000

# (preset, component, read, random, metadata) as characterized per process class
TABLE_ROWS = [
    ("db", 0, 0.80, 0.99, 0.0), ("db", 1, 1.00, 0.20, 0.0),
    ("vdi", None, 0.263, 0.848, 0.01),
    ("eda", 0, 0.375, 0.575, 0.60), ("eda", 1, 0.50, 0.0, 0.0),
    ("vda", 0, 0.0, 0.0, 0.0), ("vda", 1, 0.989, 0.945, 0.09),
]


@pytest.mark.parametrize("name, idx, read, rnd, meta", TABLE_ROWS)
def test_preset_component_fractions(name, idx, read, rnd, meta):
    spec = preset(name, seed=11)
    comp = spec if idx is None else spec.components[idx][1]
    block = comp.block_bytes
    stream = list(islice(generate(WorkloadSpec(
        pattern=comp.pattern, op_mix=comp.op_mix, block_bytes=block, total_bytes=N * block,
        random_fraction=comp.random_fraction, metadata_fraction=comp.metadata_fraction, seed=11)), N))
    assert len(stream) == N
    assert abs(sum(r.op == "read" for r in stream) / N - read) <= 0.01
    assert abs(classify(stream) - rnd) <= 0.01
    assert abs(sum(r.metadata for r in stream) / N - meta) <= 0.01


@pytest.mark.parametrize("name", ["db", "eda", "vda"])
def test_preset_mixture_read_fraction(name):
    spec = preset(name, seed=5, total_bytes=N * 512 * KiB)
    rows = [r for r in TABLE_ROWS if r[0] == name]
    shares = [w for w, _ in spec.components]
    expected = sum(s * r[2] for s, r in zip(shares, rows)) / sum(shares)
    reqs = list(islice(generate(spec), N))
    assert len(reqs) == N
    assert abs(sum(r.op == "read" for r in reqs) / N - expected) <= 0.01


# -- traces ---------------------------------------------------------------

def test_trace_empty(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("")
    assert parse_trace(p) == []


def test_trace_single_write():
    assert parse_trace_text("0.001,W,4096,4096\n") == [TraceRecord(0.001, "write", 4096, 4096)]


def test_trace_header_comments_and_ops():
    text = "timestamp,op,offset,length\n# note\n\n0,read,0,512\n1.5,r,512,512\n"
    recs = parse_trace(io.StringIO(text))
    assert [r.op for r in recs] == ["read", "read"]
    assert [r.request().file_offset for r in recs] == [0, 512]
    assert [q.length for q in replay(recs)] == [512, 512]


@pytest.mark.parametrize("bad", ["0,X,0,10", "0,W,-4,10", "0,W,0", "0,W,abc,10", "0,W,0,0"])
def test_trace_error_cites_line(bad):
    with pytest.raises(TraceParseError) as exc:
        parse_trace_text(f"0,W,0,4096\n0.1,R,0,4096\n{bad}\n")
    assert exc.value.line == 3
    assert "line 3" in str(exc.value)


def test_trace_past_file_end():
    with pytest.raises(TraceParseError):
        parse_trace_text("0,W,4096,4096\n", file_bytes=6000)
