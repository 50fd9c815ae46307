"""Exhaustive field and codec checks, run by ``ecsim selftest``."""

import random
from itertools import combinations

from . import gf256
from .rs_codec import CodeParams, Chunk, decode, encode, generator_matrix

CODES = ((4, 2), (6, 3), (10, 4))


def check_gf_mul() -> bool:
    return all(
        gf256.gf_mul(a, b) == gf256.peasant_mul(a, b)
        for a in range(256) for b in range(256)
    )


def check_gf_inv() -> bool:
    return all(gf256.peasant_mul(a, gf256.gf_inv(a)) == 1 for a in range(1, 256))


def check_generator_form(codes=CODES) -> bool:
    for k, m in codes:
        rows = generator_matrix(k, m).to_rows()
        if rows[:k] != [[int(i == j) for j in range(k)] for i in range(k)]:
            return False
        if rows[k] != [1] * k:
            return False
    return True


def check_round_trip(codes=CODES, chunk_bytes: int = 64, seed: int = 0) -> bool:
    """Every erasure pattern of size <= m, random payloads."""
    rng = random.Random(seed)
    for k, m in codes:
        p = CodeParams(k, m, chunk_bytes)
        data = [bytes(rng.getrandbits(8) for _ in range(chunk_bytes)) for _ in range(k)]
        chunks = [Chunk.of(i, d, k) for i, d in enumerate(data)] + encode(p, data)
        for lost in range(m + 1):
            for erased in combinations(range(k + m), lost):
                survivors = [(c.index, c) for c in chunks if c.index not in erased]
                if [c.payload for c in decode(p, survivors)] != data:
                    return False
    return True


CHECKS = (
    ("gf_mul matches shift-and-reduce on all 65536 pairs", check_gf_mul),
    ("gf_inv verified for all 255 nonzero elements", check_gf_inv),
    ("generator has identity top block and all-ones first coding row", check_generator_form),
    ("RS(4,2)/(6,3)/(10,4) recover from every erasure set of size <= m", check_round_trip),
)


def run_all(out=print) -> bool:
    ok = True
    for name, fn in CHECKS:
        passed = fn()
        ok &= passed
        out(f"{'PASS' if passed else 'FAIL'}  {name}")
    return ok
