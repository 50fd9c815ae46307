"""Systematic Reed-Solomon RS(k, m) over GF(2^8).

The generator matrix G is (k+m) x k. Its top k rows are the identity, so data
chunks are stored verbatim and a healthy stripe is rebuilt by concatenation.
The bottom m rows produce the coding chunks; the first of them is all ones,
which makes coding chunk 0 the XOR of the data chunks.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, InsufficientDataError, ShapeError, SingularMatrixError
from .gf256 import MUL_TABLE, gf_div, gf_inv, gf_mul, gf_pow

DEFAULT_CHUNK_BYTES = 4096


@dataclass(frozen=True)
class CodeParams:
    k: int
    m: int
    chunk_bytes: int = DEFAULT_CHUNK_BYTES

    def __post_init__(self):
        if self.k < 1 or self.m < 1:
            raise ShapeError(f"RS({self.k},{self.m}): k and m must be >= 1")
        if self.chunk_bytes < 1:
            raise ShapeError("chunk_bytes must be >= 1")
        if self.k + self.m > 255:
            raise CapacityError(f"k + m = {self.k + self.m} exceeds 255")

    @property
    def n(self) -> int:
        return self.k + self.m

    @property
    def stripe_width_bytes(self) -> int:
        return self.k * self.chunk_bytes

    def __str__(self):
        return f"RS({self.k},{self.m})"


@dataclass(frozen=True)
class GfMatrix:
    rows: int
    cols: int
    elements: tuple

    def __post_init__(self):
        if len(self.elements) != self.rows * self.cols:
            raise ShapeError(
                f"{self.rows}x{self.cols} matrix needs {self.rows * self.cols} "
                f"elements, got {len(self.elements)}"
            )

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "GfMatrix":
        rows = [list(r) for r in rows]
        ncols = len(rows[0]) if rows else 0
        if any(len(r) != ncols for r in rows):
            raise ShapeError("ragged rows")
        return cls(len(rows), ncols, tuple(v for r in rows for v in r))

    @classmethod
    def identity(cls, n: int) -> "GfMatrix":
        return cls.from_rows([[int(i == j) for j in range(n)] for i in range(n)])

    def __getitem__(self, ij):
        i, j = ij
        return self.elements[i * self.cols + j]

    def row(self, i: int) -> list:
        return list(self.elements[i * self.cols:(i + 1) * self.cols])

    def to_rows(self) -> list:
        return [self.row(i) for i in range(self.rows)]

    def select_rows(self, indices: Iterable[int]) -> "GfMatrix":
        return GfMatrix.from_rows([self.row(i) for i in indices])

    def __matmul__(self, other: "GfMatrix") -> "GfMatrix":
        if self.cols != other.rows:
            raise ShapeError(f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        out = []
        for i in range(self.rows):
            r = []
            for j in range(other.cols):
                acc = 0
                for t in range(self.cols):
                    acc ^= gf_mul(self[i, t], other[t, j])
                r.append(acc)
            out.append(r)
        return GfMatrix.from_rows(out)

    def to_array(self) -> np.ndarray:
        return np.array(self.elements, dtype=np.uint8).reshape(self.rows, self.cols)


class ChunkKind(str, Enum):
    DATA = "data"
    CODING = "coding"


@dataclass(frozen=True)
class Chunk:
    index: int
    kind: ChunkKind
    payload: bytes

    @classmethod
    def of(cls, index: int, payload: bytes, k: int) -> "Chunk":
        kind = ChunkKind.DATA if index < k else ChunkKind.CODING
        return cls(index, kind, bytes(payload))


@dataclass(frozen=True)
class Stripe:
    params: CodeParams
    chunks: tuple

    @classmethod
    def from_data(cls, params: CodeParams, data: Sequence[bytes]) -> "Stripe":
        data_chunks = [Chunk.of(i, d, params.k) for i, d in enumerate(data)]
        return cls(params, tuple(data_chunks) + tuple(encode(params, data_chunks)))

    def check(self) -> bool:
        """True when the layout is well formed and coding chunks match the data."""
        p = self.params
        if sorted(c.index for c in self.chunks) != list(range(p.n)):
            return False
        by_index = sorted(self.chunks, key=lambda c: c.index)
        if any((c.kind is ChunkKind.DATA) != (c.index < p.k) for c in by_index):
            return False
        return [c.payload for c in encode(p, by_index[:p.k])] == [
            c.payload for c in by_index[p.k:]
        ]


def build_extended_vandermonde(k: int, m: int) -> GfMatrix:
    """(k+m) x k extended Vandermonde matrix.

    Row 0 is the point 0 ([1, 0, ..., 0]), rows 1..k+m-2 are the geometric
    sequences of the points 1, 2, ..., and the last row is the point at
    infinity ([0, ..., 0, 1]).
    """
    if k < 1 or m < 1:
        raise ShapeError("k and m must be >= 1")
    if k + m > 255:
        raise CapacityError(f"k + m = {k + m} exceeds 255 evaluation points")
    rows = [[1] + [0] * (k - 1)]
    for a in range(1, k + m - 1):
        rows.append([gf_pow(a, j) for j in range(k)])
    rows.append([0] * (k - 1) + [1])
    return GfMatrix.from_rows(rows)


def derive_generator(ext: GfMatrix, k: int) -> GfMatrix:
    """Column-reduce ``ext`` until its top k x k block is the identity, then
    scale each column of the coding rows so the first coding row is all ones.
    """
    if ext.cols != k or ext.rows <= k:
        raise ShapeError(f"expected a (k+m) x {k} matrix, got {ext.rows}x{ext.cols}")
    g = ext.to_rows()
    n = len(g)

    for i in range(k):
        pivot = next((j for j in range(i, k) if g[i][j]), None)
        if pivot is None:
            raise SingularMatrixError(i)
        if pivot != i:
            for r in g:
                r[i], r[pivot] = r[pivot], r[i]
        scale = gf_inv(g[i][i])
        if scale != 1:
            for r in g:
                r[i] = gf_mul(r[i], scale)
        for j in range(k):
            f = g[i][j]
            if j == i or f == 0:
                continue
            for r in g:
                r[j] ^= gf_mul(f, r[i])

    # scaling a column within the coding rows only is the same as rescaling
    # one data symbol; every k x k minor stays nonzero
    for j in range(k):
        e = g[k][j]
        if e == 0:
            raise SingularMatrixError(j)
        if e != 1:
            for r in range(k, n):
                g[r][j] = gf_div(g[r][j], e)
    return GfMatrix.from_rows(g)


@lru_cache(maxsize=None)
def generator_matrix(k: int, m: int) -> GfMatrix:
    return derive_generator(build_extended_vandermonde(k, m), k)


@lru_cache(maxsize=4096)
def _recovery_matrix(k: int, m: int, indices: tuple) -> GfMatrix:
    return invert_matrix(generator_matrix(k, m).select_rows(indices))


def invert_matrix(mat: GfMatrix) -> GfMatrix:
    """Gauss-Jordan inversion over GF(2^8)."""
    if mat.rows != mat.cols:
        raise ShapeError(f"cannot invert a {mat.rows}x{mat.cols} matrix")
    n = mat.rows
    a = mat.to_rows()
    inv = GfMatrix.identity(n).to_rows()
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col]), None)
        if pivot is None:
            raise SingularMatrixError(col)
        a[col], a[pivot] = a[pivot], a[col]
        inv[col], inv[pivot] = inv[pivot], inv[col]
        s = gf_inv(a[col][col])
        a[col] = [gf_mul(s, v) for v in a[col]]
        inv[col] = [gf_mul(s, v) for v in inv[col]]
        for r in range(n):
            f = a[r][col]
            if r == col or f == 0:
                continue
            a[r] = [x ^ gf_mul(f, y) for x, y in zip(a[r], a[col])]
            inv[r] = [x ^ gf_mul(f, y) for x, y in zip(inv[r], inv[col])]
    return GfMatrix.from_rows(inv)


def _as_arrays(chunks: Sequence, count: int, size: int) -> list:
    if len(chunks) != count:
        raise ShapeError(f"expected {count} chunks, got {len(chunks)}")
    out = []
    for c in chunks:
        payload = c.payload if isinstance(c, Chunk) else c
        if len(payload) != size:
            raise ShapeError(f"chunk payload is {len(payload)} bytes, expected {size}")
        out.append(np.frombuffer(bytes(payload), dtype=np.uint8))
    return out


def matrix_apply(mat: GfMatrix, vectors: Sequence[np.ndarray]) -> list:
    """Multiply ``mat`` by a column of byte vectors, one product per byte offset."""
    out = []
    for i in range(mat.rows):
        acc = np.zeros_like(vectors[0])
        for j, v in enumerate(vectors):
            c = mat[i, j]
            if c == 1:
                acc ^= v
            elif c:
                acc ^= MUL_TABLE[c][v]
        out.append(acc)
    return out


def encode(params: CodeParams, data: Sequence) -> list:
    """Return the m coding chunks for k data chunks (Chunk or bytes-like)."""
    vectors = _as_arrays(data, params.k, params.chunk_bytes)
    g = generator_matrix(params.k, params.m)
    coding = g.select_rows(range(params.k, params.n))
    return [
        Chunk(params.k + i, ChunkKind.CODING, v.tobytes())
        for i, v in enumerate(matrix_apply(coding, vectors))
    ]


def decode(params: CodeParams, available: Sequence) -> list:
    """Recover the k data chunks from (index, chunk) pairs.

    Only the first k pairs are used, whatever their indices, just as a primary
    decodes the first k chunks that arrive.
    """
    if len(available) < params.k:
        raise InsufficientDataError(
            f"{params}: need {params.k} chunks, got {len(available)}"
        )
    picked = list(available[:params.k])
    indices = [i for i, _ in picked]
    if len(set(indices)) != len(indices):
        raise ShapeError(f"duplicate chunk indices {indices}")
    if any(not 0 <= i < params.n for i in indices):
        raise ShapeError(f"chunk index out of range in {indices}")
    vectors = _as_arrays([c for _, c in picked], params.k, params.chunk_bytes)

    if set(indices) == set(range(params.k)):
        order = sorted(range(params.k), key=indices.__getitem__)
        return [Chunk(i, ChunkKind.DATA, vectors[p].tobytes()) for i, p in enumerate(order)]

    recover = _recovery_matrix(params.k, params.m, tuple(indices))
    return [
        Chunk(i, ChunkKind.DATA, v.tobytes())
        for i, v in enumerate(matrix_apply(recover, vectors))
    ]


def concatenate(params: CodeParams, data: Sequence) -> bytes:
    """Assemble the stripe payload from its k data chunks, chunk 0 first."""
    if len(data) != params.k:
        raise InsufficientDataError(
            f"{params}: concatenation needs all {params.k} data chunks, got {len(data)}; decode instead"
        )
    if all(isinstance(c, Chunk) for c in data):
        data = sorted(data, key=lambda c: c.index)
        if [c.index for c in data] != list(range(params.k)):
            raise InsufficientDataError("concatenation needs data chunks 0..k-1; decode instead")
    payloads = [c.payload if isinstance(c, Chunk) else bytes(c) for c in data]
    if any(len(p) != params.chunk_bytes for p in payloads):
        raise ShapeError("chunk payload size mismatch")
    return b"".join(payloads)
