"""Erasure-coded vs replicated flash-cluster simulator.

GF(2^8) Reed-Solomon codec, deterministic object placement, a byte-exact PG
backend model, workload generators and an experiment driver.
"""

from .backend import Backend, BackendConfig, Erasure, IoEffects, IoRequest, Replication, heartbeat_traffic
from .metrics import Counters, accumulate, read_amp, rel_net_traffic, write_amp
from .placement import ClusterMap, ObjectId, object_of, osds_of, pg_of
from .rs_codec import CodeParams, concatenate, decode, encode, generator_matrix
from .workload import WorkloadSpec, generate, parse_trace, preset

__version__ = "0.1.0"

__all__ = [
    "Backend", "BackendConfig", "Erasure", "IoEffects", "IoRequest", "Replication", "heartbeat_traffic",
    "Counters", "accumulate", "read_amp", "rel_net_traffic", "write_amp",
    "ClusterMap", "ObjectId", "object_of", "osds_of", "pg_of",
    "CodeParams", "concatenate", "decode", "encode", "generator_matrix",
    "WorkloadSpec", "generate", "parse_trace", "preset",
]
