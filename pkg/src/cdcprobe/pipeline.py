"""The client-to-server data path: chunk, compress, length-preserving
encrypt; plus everything the attacker can observe — compressed-length
logs, TCP segment traces, and the deduplication side channel.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .chunkers import CAUSE_EOD, CAUSE_MAX, ChunkRecord, chunk_stream, make_state
from .compressors import CompressionModel, get_model
from .params import ChunkerParams

_SEGMENT = 1 << 22


def encrypt_stub(key: int, archive_id: str, index: int, data: bytes) -> bytes:
    """Keyed byte-wise stream mask.  Length-preserving placeholder for
    the real cipher; NOT secure, and nothing downstream ever reads the
    ciphertext bytes, only their count."""
    if not data:
        return b""
    aid = int.from_bytes(hashlib.sha256(archive_id.encode()).digest()[:4], "big")
    rng = np.random.default_rng([key & 0xFFFFFFFF, aid, index])
    mask = rng.integers(0, 256, len(data), dtype=np.uint8)
    return (np.frombuffer(data, dtype=np.uint8) ^ mask).tobytes()


def decrypt_stub(key: int, archive_id: str, index: int, data: bytes) -> bytes:
    return encrypt_stub(key, archive_id, index, data)


@dataclass
class ObservationRecord:
    archive_id: str
    index: int
    clen: int
    ulen: int | None = None


@dataclass
class ObservationLog:
    """What the storage server sees: compressed chunk lengths in order,
    never content.  Uncompressed lengths appear only when the simulated
    deployment exposes plaintext-length metadata."""

    scheme: str
    profile: str
    compressor: str
    records: list[ObservationRecord] = field(default_factory=list)

    def lengths(self, archive_id: str | None = None) -> list[int]:
        return [r.clen for r in self.records
                if archive_id is None or r.archive_id == archive_id]

    def serialize(self) -> str:
        first = self.records[0].archive_id if self.records else "-"
        lines = [f"{first},{self.scheme},{self.profile},{self.compressor}"]
        for r in self.records:
            if r.ulen is None:
                lines.append(f"{r.archive_id},{r.index},{r.clen}")
            else:
                lines.append(f"{r.archive_id},{r.index},{r.clen},{r.ulen}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "ObservationLog":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty observation log")
        head = lines[0].split(",")
        if len(head) != 4:
            raise ValueError("malformed observation-log header")
        log = cls(scheme=head[1], profile=head[2], compressor=head[3])
        for ln in lines[1:]:
            parts = ln.split(",")
            if len(parts) not in (3, 4):
                raise ValueError(f"malformed observation line: {ln!r}")
            ulen = int(parts[3]) if len(parts) == 4 else None
            log.records.append(ObservationRecord(parts[0], int(parts[1]), int(parts[2]), ulen))
        return log


def observe_archive(params: ChunkerParams, model: CompressionModel | str, stream,
                    archive_id: str = "archive", *, key: int = 0,
                    include_ulen: bool = False,
                    records: list[ChunkRecord] | None = None) -> ObservationLog:
    """Run the chunk -> compress -> encrypt pipeline and log what the
    server observes: one compressed length per chunk, in order."""
    if isinstance(model, str):
        model = get_model(model)
    if records is None:
        records = chunk_stream(params, stream)
    log = ObservationLog(scheme=params.scheme, profile=params.profile,
                         compressor=model.name)
    for i, rec in enumerate(records):
        chunk = bytes(stream[rec.start:rec.end])
        blob = model.compress(chunk)
        ct = encrypt_stub(key, archive_id, i, blob)
        assert len(ct) == len(blob)
        log.records.append(ObservationRecord(
            archive_id, i, len(ct), rec.length if include_ulen else None))
    return log


# ---------------------------------------------------------------------------
# Fine-grained traffic analysis


@dataclass
class SegmentTrace:
    """TCP payload sizes on the wire: each request is a run of full
    maximum-segment-size segments plus a sub-MSS remainder when the
    request size is not an exact multiple."""

    mss: int
    sizes: list[int] = field(default_factory=list)

    def serialize(self) -> str:
        return "\n".join([f"mss={self.mss}"] + [str(s) for s in self.sizes]) + "\n"

    @classmethod
    def parse(cls, text: str) -> "SegmentTrace":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("mss="):
            raise ValueError("segment trace must start with an mss= header")
        return cls(mss=int(lines[0][4:]), sizes=[int(ln) for ln in lines[1:]])


def segment_requests(request_sizes: list[int], mss: int) -> SegmentTrace:
    """Split each request into full-MSS segments plus the remainder."""
    trace = SegmentTrace(mss=mss)
    for r in request_sizes:
        if r <= 0:
            raise ValueError("request sizes must be positive")
        trace.sizes.extend([mss] * (r // mss))
        if r % mss:
            trace.sizes.append(r % mss)
    return trace


def recover_request_sizes(trace: SegmentTrace) -> list[tuple[int, bool]]:
    """Group the trace at each sub-MSS segment.

    Returns (size, exact) per recovered request; a trailing run of full
    segments with no terminator is inexact (the true split into
    multiple-of-MSS requests is unobservable).
    """
    out = []
    acc = 0
    for s in trace.sizes:
        if s > trace.mss or s <= 0:
            raise ValueError("segment size outside (0, mss]")
        acc += s
        if s < trace.mss:
            out.append((acc, True))
            acc = 0
    if acc:
        out.append((acc, False))
    return out


# ---------------------------------------------------------------------------
# Deduplicating store and the boundary oracle built on it


def chunk_digest(chunk: bytes) -> bytes:
    return hashlib.blake2b(chunk, digest_size=16).digest()


@dataclass
class DedupStore:
    """Content-addressed store; an archive operation accepts only the
    chunks whose digests are new and reports how many bytes that cost."""

    overhead: int = 0  # per-chunk metadata cost, charged on every store
    digests: set[bytes] = field(default_factory=set)
    total_bytes: int = 0

    def store(self, chunk: bytes) -> int:
        """Store one chunk; returns the bytes newly accepted."""
        return self.store_digest(chunk_digest(chunk), len(chunk))

    def store_digest(self, digest: bytes, length: int) -> int:
        grew = self.overhead
        if digest not in self.digests:
            self.digests.add(digest)
            grew += length
        self.total_bytes += grew
        return grew


def dedup_archive(store: DedupStore, chunks: list[bytes]) -> int:
    """Archive a chunk list; returns the new bytes accepted."""
    return sum(store.store(c) for c in chunks)


def dedup_boundary_oracle(store: DedupStore, params: ChunkerParams,
                          prefix_builder, known_chunk: bytes,
                          max_probes: int | None = None) -> int | None:
    """Recover where the chunker first breaks the query stream, using
    only storage-growth measurements.

    `known_chunk` must already sit in `store` as exactly one chunk (in
    particular, shorter than the minimum chunk size so that it cannot
    split internally).  Probe k archives query[:k] || known_chunk into
    the store; a chunk ends exactly at the query end iff the known
    chunk deduplicates away, i.e. the probe accepts at most k new
    bytes.  Returns the smallest such k, or None within max_probes.

    `prefix_builder(k)` returns the first k query bytes; prefixes must
    be consistent (prefix_builder(k) == prefix_builder(k+1)[:k]), which
    lets the probe's chunking be carried incrementally instead of being
    recomputed from scratch — the decision still uses only the probe's
    measured storage growth.
    """
    if max_probes is None:
        max_probes = params.max_chunk
    state = make_state(params)
    xlen = len(known_chunk)
    for k in range(1, max_probes + 1):
        query = bytes(prefix_builder(k))
        if len(query) != k:
            raise ValueError("prefix_builder returned the wrong length")
        boundary_here = state.push(query[k - 1]) is not None
        # No boundary fell inside query[:k-1] (earlier probes returned
        # otherwise), so the probe stores either [query||X] as one chunk
        # or [query][X] when the chunker breaks at the query end.
        if boundary_here:
            new = dedup_archive(store, [query, known_chunk])
        else:
            new = dedup_archive(store, [query + known_chunk])
        if new <= k + store.overhead * 2:
            # the known chunk deduplicated away: a chunk ended there
            return k
    return None
