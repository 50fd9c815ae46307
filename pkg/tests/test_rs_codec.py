import random
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from ecsim.errors import CapacityError, InsufficientDataError, ShapeError, SingularMatrixError
from ecsim.rs_codec import (
    Chunk, ChunkKind, CodeParams, GfMatrix, Stripe, build_extended_vandermonde, concatenate,
    decode, derive_generator, encode, generator_matrix, invert_matrix,
)

import oracles


def rand_data(rng, k, size):
    return [rng.randbytes(size) for _ in range(k)]


def full_stripe(p, data):
    return [Chunk.of(i, d, p.k) for i, d in enumerate(data)] + encode(p, data)


def xor_all(chunks):
    out = bytearray(len(chunks[0]))
    for c in chunks:
        for i, b in enumerate(c):
            out[i] ^= b
    return bytes(out)


def test_code_params():
    p = CodeParams(6, 3)
    assert p.chunk_bytes == 4096
    assert p.stripe_width_bytes == 24 * 1024
    assert CodeParams(4, 2).stripe_width_bytes == 16 * 1024
    with pytest.raises(ShapeError):
        CodeParams(0, 2)
    with pytest.raises(ShapeError):
        CodeParams(2, 0)
    with pytest.raises(CapacityError):
        CodeParams(200, 56)


def test_vandermonde_examples():
    assert build_extended_vandermonde(1, 1).to_rows() == [[1], [1]]
    v = build_extended_vandermonde(3, 2)
    assert (v.rows, v.cols) == (5, 3)
    assert [1, 2, 4] in v.to_rows()
    assert v.row(0) == [1, 0, 0] and v.row(4) == [0, 0, 1]
    for row in v.to_rows()[1:-1]:
        a = row[1]
        assert row == [1, a, oracles.mul(a, a)]


def test_vandermonde_capacity():
    with pytest.raises(CapacityError):
        build_extended_vandermonde(200, 56)


def all_minors_invertible(mat, k):
    rows = mat.to_rows()
    return all(oracles.rank([rows[i] for i in idx]) == k for idx in combinations(range(len(rows)), k))


def test_vandermonde_rs63_all_84_minors_invertible():
    v = build_extended_vandermonde(6, 3)
    assert len(list(combinations(range(9), 6))) == 84
    assert all_minors_invertible(v, 6)


@pytest.mark.parametrize("m", [1, 2, 5])
def test_generator_k1_is_all_ones(m):
    assert generator_matrix(1, m).to_rows() == [[1]] * (m + 1)


@pytest.mark.parametrize("k, m", [(2, 1), (3, 2), (4, 2), (6, 3), (10, 4), (5, 4)])
def test_generator_form(k, m):
    g = generator_matrix(k, m)
    rows = g.to_rows()
    assert rows[:k] == [[int(i == j) for j in range(k)] for i in range(k)]
    assert rows[k] == [1] * k


@pytest.mark.parametrize("k, m", [(4, 2), (6, 3), (3, 3), (2, 7)])
def test_generator_minors_invertible(k, m):
    assert all_minors_invertible(generator_matrix(k, m), k)


def test_derive_generator_rejects_singular_top():
    bad = GfMatrix.from_rows([[1, 1], [1, 1], [1, 2]])
    with pytest.raises(SingularMatrixError):
        derive_generator(bad, 2)


def test_encode_zero_and_xor_row():
    p = CodeParams(6, 3, 128)
    zeros = [bytes(128)] * 6
    assert all(c.payload == bytes(128) for c in encode(p, zeros))
    data = rand_data(random.Random(1), 6, 128)
    coding = encode(p, data)
    assert coding[0].payload == xor_all(data)
    assert [c.index for c in coding] == [6, 7, 8]
    assert all(c.kind is ChunkKind.CODING for c in coding)


def test_encode_rs42_seed42_byte0():
    p = CodeParams(4, 2)
    rng = random.Random(42)
    data = rand_data(rng, 4, 4096)
    coding = encode(p, data)
    g = generator_matrix(4, 2).to_rows()
    assert coding[1].payload[0] == oracles.matvec(g[4:], [d[0] for d in data])[1] == 52
    for off in (0, 1, 2048, 4095):
        expect = oracles.matvec(g[4:], [d[off] for d in data])
        assert [c.payload[off] for c in coding] == expect


def test_encode_shape_errors():
    p = CodeParams(4, 2, 16)
    with pytest.raises(ShapeError):
        encode(p, [bytes(16)] * 3)
    with pytest.raises(ShapeError):
        encode(p, [bytes(16)] * 3 + [bytes(15)])


def test_decode_all_data_is_passthrough():
    p = CodeParams(4, 2, 32)
    data = rand_data(random.Random(2), 4, 32)
    chunks = full_stripe(p, data)
    shuffled = [(c.index, c) for c in reversed(chunks[:4])]
    assert [c.payload for c in decode(p, shuffled)] == data


def test_decode_rs63_erasing_0_3_7():
    p = CodeParams(6, 3, 4096)
    data = rand_data(random.Random(3), 6, 4096)
    rest = [(c.index, c) for c in full_stripe(p, data) if c.index not in (0, 3, 7)]
    assert len(rest) == 6
    assert [c.payload for c in decode(p, rest)] == data


def test_decode_errors():
    p = CodeParams(4, 2, 8)
    data = rand_data(random.Random(4), 4, 8)
    chunks = full_stripe(p, data)
    with pytest.raises(InsufficientDataError):
        decode(p, [(c.index, c) for c in chunks[:3]])
    with pytest.raises(ShapeError):
        decode(p, [(0, chunks[0]), (0, chunks[0]), (1, chunks[1]), (4, chunks[4])])


def test_decode_uses_first_k_supplied():
    p = CodeParams(4, 2, 8)
    data = rand_data(random.Random(5), 4, 8)
    chunks = full_stripe(p, data)
    # a garbage 5th chunk is never looked at
    supplied = [(i, chunks[i]) for i in (5, 1, 4, 2)] + [(3, b"\xff" * 8)]
    assert [c.payload for c in decode(p, supplied)] == data


def test_concatenate_examples():
    one = CodeParams(1, 2, 16)
    assert concatenate(one, [b"a" * 16]) == b"a" * 16
    p = CodeParams(6, 3)
    data = [bytes([i]) * 4096 for i in range(6)]
    out = concatenate(p, [Chunk.of(i, d, 6) for i, d in enumerate(data)])
    assert len(out) == 24 * 1024
    assert [out[i * 4096] for i in range(6)] == [0, 1, 2, 3, 4, 5]
    with pytest.raises(InsufficientDataError):
        concatenate(p, data[:5])


def test_concatenate_equals_decode_of_data_rows():
    p = CodeParams(6, 3, 64)
    data = rand_data(random.Random(6), 6, 64)
    chunks = full_stripe(p, data)
    via_decode = b"".join(c.payload for c in decode(p, [(c.index, c) for c in chunks]))
    assert concatenate(p, chunks[:6]) == via_decode == b"".join(data)


def test_invert_matrix():
    ident = GfMatrix.identity(4)
    assert invert_matrix(ident) == ident
    m = GfMatrix.from_rows([[1, 1], [1, 2]])
    assert m @ invert_matrix(m) == GfMatrix.identity(2)
    with pytest.raises(SingularMatrixError) as exc:
        invert_matrix(GfMatrix.from_rows([[1, 1], [1, 1]]))
    assert exc.value.column == 1
    with pytest.raises(ShapeError):
        invert_matrix(GfMatrix.from_rows([[1, 2, 3]]))


def test_gf_matrix_shape_check():
    with pytest.raises(ShapeError):
        GfMatrix(2, 2, (1, 2, 3))


def test_stripe_check():
    p = CodeParams(4, 2, 16)
    s = Stripe.from_data(p, rand_data(random.Random(7), 4, 16))
    assert s.check()
    chunks = list(s.chunks)
    chunks[1] = Chunk.of(1, b"\x00" * 16, 4)
    assert not Stripe(p, tuple(chunks)).check()
    assert not Stripe(p, tuple(s.chunks[:-1])).check()


@pytest.mark.parametrize("k, m", [(4, 2), (6, 3), (10, 4)])
def test_round_trip_every_erasure_set(k, m):
    p = CodeParams(k, m, 64)
    rng = random.Random(k * 100 + m)
    data = rand_data(rng, k, 64)
    chunks = full_stripe(p, data)
    for lost in range(m + 1):
        for erased in combinations(range(k + m), lost):
            rest = [(c.index, c) for c in chunks if c.index not in erased]
            rng.shuffle(rest)
            assert [c.payload for c in decode(p, rest)] == data, erased


@settings(max_examples=50, deadline=None)
@given(st.binary(min_size=4 * 16, max_size=4 * 16), st.binary(min_size=4 * 16, max_size=4 * 16))
def test_linearity(a, b):
    p = CodeParams(4, 2, 16)
    split = lambda x: [x[i * 16:(i + 1) * 16] for i in range(4)]  # noqa: E731
    ab = bytes(x ^ y for x, y in zip(a, b))
    ea, eb, eab = encode(p, split(a)), encode(p, split(b)), encode(p, split(ab))
    for ca, cb, cab in zip(ea, eb, eab):
        assert bytes(x ^ y for x, y in zip(ca.payload, cb.payload)) == cab.payload


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(1, 4), st.data())
def test_first_coding_chunk_is_xor(k, m, data):
    p = CodeParams(k, m, 8)
    payload = [data.draw(st.binary(min_size=8, max_size=8)) for _ in range(k)]
    assert encode(p, payload)[0].payload == xor_all(payload)
