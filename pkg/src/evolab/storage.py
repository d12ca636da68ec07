"""Binary columnar persistence for ensembles and particle measures.

Layout (all little-endian):

    magic     8 bytes   b"EVLBCOL1"
    kind      1 byte    b"E" (ensemble) or b"M" (measure)
    d         u32       state dimension
    n         u64       row count
    s, t      f64, f64  start/end time (measures: t = time_tag, s = t - burn_in)
    burn_in   f64       0 for ensembles
    shard     u64       shard size used by the reductions
    lineage   3 x u64   master_seed, shard_index, counter
    digest    64 bytes  ascii hex sha256 of the operator spec
    x         d x f64   common starting point (zeros for measures)
    data      d columns of n f64 each (column-major), then for ensembles a
              weights column (n f64) and an alive column (n u8)
"""

import struct

import numpy as np

from .engine import Ensemble, SeedLineage
from .measures import EmpiricalMeasure

MAGIC = b"EVLBCOL1"
_HEADER = struct.Struct("<cIQdddQQQQ")


def _pack_header(kind, d, n, s, t, burn_in, shard, lineage, digest, x):
    head = MAGIC + _HEADER.pack(
        kind,
        d,
        n,
        s,
        t,
        burn_in,
        shard,
        lineage.master_seed & ((1 << 64) - 1),
        lineage.shard_index & ((1 << 64) - 1),
        lineage.counter & ((1 << 64) - 1),
    )
    digest = (digest or "").encode("ascii")[:64].ljust(64, b"0")
    return head + digest + np.asarray(x, dtype="<f8").tobytes()


def _unpack_header(buf):
    if buf[: len(MAGIC)] != MAGIC:
        raise ValueError("not an evolab columnar file (bad magic bytes)")
    off = len(MAGIC)
    kind, d, n, s, t, burn_in, shard, seed, shard_idx, counter = _HEADER.unpack_from(buf, off)
    off += _HEADER.size
    digest = buf[off : off + 64].decode("ascii")
    off += 64
    x = np.frombuffer(buf, dtype="<f8", count=d, offset=off).copy()
    off += 8 * d
    lineage = SeedLineage(seed, shard_idx, counter)
    return kind, d, n, s, t, burn_in, shard, lineage, digest, x, off


def dump_ensemble(ensemble, path):
    if ensemble.start_point.ndim != 1:
        raise ValueError("only common-start ensembles are dumpable")
    head = _pack_header(
        b"E",
        ensemble.dimension,
        ensemble.n,
        ensemble.start_time,
        ensemble.end_time,
        0.0,
        ensemble.shard_size,
        ensemble.lineage,
        ensemble.spec_digest,
        ensemble.start_point,
    )
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(np.asarray(ensemble.states, dtype="<f8").tobytes(order="F"))
        fh.write(np.asarray(ensemble.weights, dtype="<f8").tobytes())
        fh.write(np.asarray(ensemble.alive, dtype="u1").tobytes())


def load_ensemble(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    kind, d, n, s, t, _burn, shard, lineage, digest, x, off = _unpack_header(buf)
    if kind != b"E":
        raise ValueError("file holds a measure, not an ensemble")
    states = np.frombuffer(buf, dtype="<f8", count=n * d, offset=off).reshape((n, d), order="F").copy()
    off += 8 * n * d
    weights = np.frombuffer(buf, dtype="<f8", count=n, offset=off).copy()
    off += 8 * n
    alive = np.frombuffer(buf, dtype="u1", count=n, offset=off).astype(bool)
    return Ensemble(
        start_time=s,
        start_point=x,
        end_time=t,
        states=states,
        weights=weights,
        alive=alive,
        shard_size=shard,
        lineage=lineage,
        spec_digest=digest,
    )


def dump_measure(measure, path, spec_digest=""):
    head = _pack_header(
        b"M",
        measure.dimension,
        measure.n,
        measure.time_tag - measure.burn_in,
        measure.time_tag,
        measure.burn_in,
        measure.shard_size,
        measure.lineage,
        spec_digest,
        np.zeros(measure.dimension),
    )
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(np.asarray(measure.particles, dtype="<f8").tobytes(order="F"))


def load_measure(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    kind, d, n, s, t, burn_in, shard, lineage, digest, x, off = _unpack_header(buf)
    if kind != b"M":
        raise ValueError("file holds an ensemble, not a measure")
    particles = np.frombuffer(buf, dtype="<f8", count=n * d, offset=off).reshape((n, d), order="F").copy()
    return EmpiricalMeasure(
        time_tag=t,
        particles=particles,
        burn_in=burn_in,
        lineage=lineage,
        start_point=x,
        coupling_bias_bound=0.0,
        shard_size=shard,
    )
