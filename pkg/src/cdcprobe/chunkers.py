"""The three content-defined chunkers, each as a streaming state machine
emitting chunk records with boundary causes.

Byte streams may be `bytes` or any object supporting len() and slicing
(e.g. mmap, or data.BlockSeededBytes for synthetic multi-gigabyte
inputs).  The Borg and Restic chunkers vectorize their window hashes
with numpy and keep memory bounded by a segment size, so gigabyte-scale
streams are fine; Tarsnap's running hash is inherently sequential and
runs as a tight per-byte loop.

Boundary causes:
  clash        the rolling/running hash condition fired
  max-size     the chunk hit the maximal chunk size without a clash
  end-of-data  trailing partial chunk

A chunk of exactly the maximal size whose hash condition also fires is
classified as a clash; max-size means the test failed there.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import gf2
from .params import (BuzhashParams, ChunkerParams, RabinParams, TarsnapParams,
                     params_fingerprint)

CAUSE_CLASH = "clash"
CAUSE_MAX = "max-size"
CAUSE_EOD = "end-of-data"

_SEGMENT = 1 << 22  # batch size for the vectorized paths


@dataclass(frozen=True)
class ChunkRecord:
    start: int
    end: int            # exclusive
    cause: str
    k: int | None = None  # Tarsnap: matched earlier position within the chunk

    @property
    def length(self) -> int:
        return self.end - self.start


def chunk_lengths(records: list[ChunkRecord]) -> list[int]:
    return [r.end - r.start for r in records]


def serialize_records(records: list[ChunkRecord], params: ChunkerParams) -> str:
    head = f"scheme={params.scheme},profile={params.profile},params={params_fingerprint(params)}"
    lines = [head]
    for r in records:
        if r.k is not None:
            lines.append(f"{r.start},{r.end},{r.cause},{r.k}")
        else:
            lines.append(f"{r.start},{r.end},{r.cause}")
    return "\n".join(lines) + "\n"


def parse_records(text: str) -> tuple[dict[str, str], list[ChunkRecord]]:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or "=" not in lines[0]:
        raise ValueError("missing chunk-record header")
    meta = dict(kv.split("=", 1) for kv in lines[0].split(","))
    records = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) not in (3, 4):
            raise ValueError(f"malformed record line: {ln!r}")
        k = int(parts[3]) if len(parts) == 4 else None
        records.append(ChunkRecord(int(parts[0]), int(parts[1]), parts[2], k))
    return meta, records


# ---------------------------------------------------------------------------
# Tarsnap: windowless running hash matched against recent previous values


class TarsnapChunker:
    """Streaming Tarsnap chunker.

    Within a chunk, maintains y_J = sum alpha^i x[b_i] mod p over the
    bytes since the chunk start (1-indexed) and fires a clash at J when
    y_J equals some earlier y_K with J - K - 1 < floor(sqrt(4J - mu)).
    Hash state and the match set reset at every boundary.
    """

    def __init__(self, params: TarsnapParams):
        self.params = params
        self.records: list[ChunkRecord] = []
        self._pos = 0       # absolute bytes consumed
        self._start = 0     # absolute chunk start
        self._j = 0         # 1-indexed position within the chunk
        self._y = 0
        self._apow = 1
        self._seen: dict[int, int] = {}

    def feed(self, data) -> None:
        p = self.params.p
        alpha = self.params.alpha
        xmap = self.params.x
        mu = self.params.mu
        max_chunk = self.params.max_chunk
        isqrt = math.isqrt
        j, y, apow, seen = self._j, self._y, self._apow, self._seen
        for b in bytes(data):
            j += 1
            apow = apow * alpha % p
            y = (y + apow * xmap[b]) % p
            cause = None
            k = None
            fj = 4 * j
            if fj > mu:
                kk = seen.get(y, -1)
                if kk >= j - isqrt(fj - mu):
                    cause = CAUSE_CLASH
                    k = kk
            if cause is None and j == max_chunk:
                cause = CAUSE_MAX
            if cause is None:
                seen[y] = j
            else:
                end = self._start + j
                self.records.append(ChunkRecord(self._start, end, cause, k))
                self._start = end
                j = 0
                y = 0
                apow = 1
                seen = {}
        self._pos += len(data)
        self._j, self._y, self._apow, self._seen = j, y, apow, seen

    def finish(self) -> list[ChunkRecord]:
        if self._start < self._pos:
            self.records.append(ChunkRecord(self._start, self._pos, CAUSE_EOD))
            self._start = self._pos
        return self.records


def tarsnap_chunk(params: TarsnapParams, stream) -> list[ChunkRecord]:
    c = TarsnapChunker(params)
    for base in range(0, len(stream), _SEGMENT):
        c.feed(stream[base:base + _SEGMENT])
    return c.finish()


def tarsnap_clash_sum(params: TarsnapParams, clash_string) -> int:
    """sum x[s_i] alpha^i mod p over a clash string; zero at true clashes."""
    p = params.p
    total = 0
    apow = 1
    for b in bytes(clash_string):
        total = (total + apow * params.x[b]) % p
        apow = apow * params.alpha % p
    return total


# ---------------------------------------------------------------------------
# Shared boundary selection for the windowed (Borg/Restic) chunkers


class _BoundaryWalker:
    """Turns a monotone stream of clash-candidate positions into records.

    A candidate position J closes the chunk [start, J+1) when
    J+1 - start >= min_chunk; max_chunk forces a boundary when no
    candidate arrives in time.  Candidates at exactly the max-size
    position count as clashes.
    """

    def __init__(self, min_chunk: int, max_chunk: int):
        self.min_chunk = min_chunk
        self.max_chunk = max_chunk
        self.records: list[ChunkRecord] = []
        self.start = 0
        self._pending = np.empty(0, dtype=np.int64)

    def push(self, candidates: np.ndarray, upto: int) -> None:
        """Consume candidates; all positions < upto are now decided."""
        if len(candidates):
            self._pending = np.concatenate([self._pending, candidates])
        pend = self._pending
        start = self.start
        rec = self.records
        while True:
            lo = start + self.min_chunk - 1
            hi = start + self.max_chunk - 1
            i = np.searchsorted(pend, lo)
            pend = pend[i:]
            if len(pend) and pend[0] <= hi:
                j = int(pend[0])
                rec.append(ChunkRecord(start, j + 1, CAUSE_CLASH))
                start = j + 1
            elif upto - 1 >= hi:
                rec.append(ChunkRecord(start, start + self.max_chunk, CAUSE_MAX))
                start += self.max_chunk
            else:
                break
        self._pending = pend
        self.start = start

    def finish(self, total: int) -> list[ChunkRecord]:
        self.push(np.empty(0, dtype=np.int64), total)
        if self.start < total:
            self.records.append(ChunkRecord(self.start, total, CAUSE_EOD))
            self.start = total
        return self.records


# ---------------------------------------------------------------------------
# Borg: 32-bit buzhash over a 4095-byte window


def buzhash(window, table, width: int = 32) -> int:
    """Direct buzhash of a window: XOR of cyclically left-shifted table
    entries, most-aged byte shifted most."""
    w = bytes(window)
    n = len(w)
    if n == 0:
        raise ValueError("window must be nonempty")
    h = 0
    for t, b in enumerate(w):
        h ^= gf2.ring_rotl(table[b], (n - 1 - t) % width, width)
    return h


class BuzhashChunker:
    """Streaming Borg chunker with a vectorized hash pipeline.

    The window hash is linear, so H_J = rotl(G_J ^ G_(J-N), J mod W)
    where G is the running XOR of rotr(table[b_i], i mod W); that turns
    the whole hash stream into a handful of vectorized passes.  The
    window slides across chunk boundaries; clash tests are suppressed
    until the window is full and min_chunk bytes accumulate.
    """

    def __init__(self, params: BuzhashParams):
        if params.width != 32:
            raise ValueError("vectorized buzhash pipeline is 32-bit")
        self.params = params
        self._table = np.asarray(params.table, dtype=np.uint32)
        self._walker = _BoundaryWalker(params.min_chunk, params.max_chunk)
        self._pos = 0
        n = params.window
        self._gtail = np.zeros(n, dtype=np.uint32)  # G at the last N positions
        self._gcarry = np.uint32(0)

    def feed(self, data) -> None:
        data = bytes(data)
        if not data:
            return
        n = self.params.window
        base = self._pos
        arr = np.frombuffer(data, dtype=np.uint8)
        tv = self._table[arr]
        r = (np.arange(base, base + len(arr), dtype=np.uint64) & np.uint64(31)).astype(np.uint32)
        v = (tv >> r) | (tv << ((np.uint32(32) - r) & np.uint32(31)))
        g = np.bitwise_xor.accumulate(v)
        g ^= self._gcarry
        # G_(J-N) for J in [base, base+len): positions base-N .. base+len-N-1
        gall = np.concatenate([self._gtail, g])
        gprev = gall[:len(arr)]
        jmod = r  # J mod 32 equals i mod 32 here
        h = g ^ gprev
        h = (h << jmod) | (h >> ((np.uint32(32) - jmod) & np.uint32(31)))
        cand = np.nonzero((h & np.uint32(self.params.mask)) == 0)[0] + base
        first_full = n - 1
        if base < first_full:
            cand = cand[cand >= first_full]
        self._pos = base + len(arr)
        self._gcarry = g[-1]
        self._gtail = gall[len(gall) - n:].copy()
        self._walker.push(cand.astype(np.int64), self._pos)

    @property
    def records(self) -> list[ChunkRecord]:
        return self._walker.records

    def finish(self) -> list[ChunkRecord]:
        return self._walker.finish(self._pos)


def borg_chunk(params: BuzhashParams, stream) -> list[ChunkRecord]:
    c = BuzhashChunker(params)
    for base in range(0, len(stream), _SEGMENT):
        c.feed(stream[base:base + _SEGMENT])
    return c.finish()


# ---------------------------------------------------------------------------
# Restic: Rabin fingerprint of the last 64 bytes, reduced mod P


def rabin_window_hash(window, params: RabinParams) -> int:
    """Window polynomial (big-endian bits, first byte highest) mod P."""
    a = int.from_bytes(bytes(window), "big")
    return gf2.poly_mod(a, params.poly)


def _rabin_pair_tables(params: RabinParams) -> tuple[list[np.ndarray], np.ndarray | None]:
    """Per-offset multiplier tables for the window hash.

    The hash is linear: H = XOR over window offsets t (from the newest
    byte) of (byte(X) * X^(8t)) mod P.  Adjacent offsets are fused into
    65536-entry tables indexed by byte pairs, halving the gather count.
    """
    red = gf2.ModReducer(params.poly)
    single = [np.array([red.reduce(u << (8 * t)) for u in range(256)], dtype=np.uint64)
              for t in range(params.window)]
    pairs = []
    for t in range(0, params.window - 1, 2):
        # index = (older byte << 8) | newer byte, offsets t+1 and t
        pairs.append((single[t + 1][:, None] ^ single[t][None, :]).ravel())
    leftover = single[-1] if params.window % 2 else None
    return pairs, leftover


class RabinChunker:
    """Streaming Restic chunker; window hashes are XORs of precomputed
    per-offset multiplier tables, gathered vectorized per position."""

    def __init__(self, params: RabinParams):
        if params.degree <= 8:
            raise ValueError("modulus degree must exceed 8")
        self.params = params
        self._pairs, self._leftover = _rabin_pair_tables(params)
        self._walker = _BoundaryWalker(params.min_chunk, params.max_chunk)
        self._pos = 0
        self._tail = b""  # last window-1 bytes

    def feed(self, data) -> None:
        data = bytes(data)
        if not data:
            return
        w = self.params.window
        base = self._pos
        work = self._tail + data
        self._pos = base + len(data)
        self._tail = work[max(0, len(work) - (w - 1)):]
        if len(work) < w:
            self._walker.push(np.empty(0, dtype=np.int64), self._pos)
            return
        arr = np.frombuffer(work, dtype=np.uint8)
        m = len(work) - w + 1  # number of full windows
        pair_idx = (arr[:-1].astype(np.uint16) << np.uint16(8)) | arr[1:]
        h = np.zeros(m, dtype=np.uint64)
        # window [J-w+1 .. J]; offset t counts back from the newest byte
        for i, tab in enumerate(self._pairs):
            t = 2 * i
            lo = w - 2 - t  # work index of the older byte of the pair
            h ^= tab[pair_idx[lo:lo + m]]
        if self._leftover is not None:
            h ^= self._leftover[arr[0:m]]
        ends_rel = np.nonzero((h & np.uint64(self.params.mask)) == 0)[0]
        ends_abs = ends_rel + (base - (len(work) - len(data))) + (w - 1)
        ends_abs = ends_abs[ends_abs >= base]
        if base < w - 1:
            ends_abs = ends_abs[ends_abs >= w - 1]
        self._walker.push(ends_abs.astype(np.int64), self._pos)

    @property
    def records(self) -> list[ChunkRecord]:
        return self._walker.records

    def finish(self) -> list[ChunkRecord]:
        return self._walker.finish(self._pos)


def restic_chunk(params: RabinParams, stream) -> list[ChunkRecord]:
    c = RabinChunker(params)
    for base in range(0, len(stream), _SEGMENT):
        c.feed(stream[base:base + _SEGMENT])
    return c.finish()


# ---------------------------------------------------------------------------
# Per-byte emulation states, used by the crafting attack, the dedup
# boundary oracle, and as slow reference implementations in tests.


class TarsnapState:
    """Byte-at-a-time Tarsnap emulation with clash lookahead."""

    def __init__(self, params: TarsnapParams):
        self.params = params
        self.j = 0
        self.y = 0
        self.apow = 1
        self.seen: dict[int, int] = {}

    def _probe(self, b: int) -> tuple[int, int, bool]:
        p = self.params.p
        apow = self.apow * self.params.alpha % p
        y = (self.y + apow * self.params.x[b]) % p
        j = self.j + 1
        fj = 4 * j
        clash = False
        if fj > self.params.mu:
            k = self.seen.get(y, -1)
            clash = k >= j - math.isqrt(fj - self.params.mu)
        return y, apow, clash

    def would_clash(self, b: int) -> bool:
        return self._probe(b)[2]

    def push(self, b: int) -> str | None:
        """Consume one byte; returns the boundary cause fired, if any."""
        y, apow, clash = self._probe(b)
        self.j += 1
        self.y, self.apow = y, apow
        if clash:
            self._reset()
            return CAUSE_CLASH
        if self.j == self.params.max_chunk:
            self._reset()
            return CAUSE_MAX
        self.seen[y] = self.j
        return None

    def _reset(self) -> None:
        self.j = 0
        self.y = 0
        self.apow = 1
        self.seen = {}

    def copy(self) -> "TarsnapState":
        c = TarsnapState(self.params)
        c.j, c.y, c.apow = self.j, self.y, self.apow
        c.seen = dict(self.seen)
        return c


class BuzhashState:
    """Byte-at-a-time Borg emulation (window slides across boundaries)."""

    def __init__(self, params: BuzhashParams):
        self.params = params
        self.h = 0
        self.window: deque[int] = deque(maxlen=params.window)
        self.filled = 0        # bytes consumed overall
        self.since = 0         # bytes since the last boundary
        self._outrot = params.window % params.width

    def _next_hash(self, b: int) -> int:
        p = self.params
        h = gf2.ring_rotl(self.h, 1, p.width) ^ p.table[b]
        if len(self.window) == p.window:
            h ^= gf2.ring_rotl(p.table[self.window[0]], self._outrot, p.width)
        return h

    def _clashes(self, h: int) -> bool:
        p = self.params
        return (self.filled + 1 >= p.window
                and self.since + 1 >= p.min_chunk
                and h & p.mask == 0)

    def would_clash(self, b: int) -> bool:
        return self._clashes(self._next_hash(b))

    def push(self, b: int) -> str | None:
        h = self._next_hash(b)
        clash = self._clashes(h)
        self.h = h
        self.window.append(b)   # maxlen evicts the aged byte
        self.filled += 1
        self.since += 1
        if clash:
            self.since = 0
            return CAUSE_CLASH
        if self.since == self.params.max_chunk:
            self.since = 0
            return CAUSE_MAX
        return None

    def copy(self) -> "BuzhashState":
        c = BuzhashState(self.params)
        c.h = self.h
        c.window = deque(self.window, maxlen=self.params.window)
        c.filled = self.filled
        c.since = self.since
        return c


class RabinState:
    """Byte-at-a-time Restic emulation (window slides across boundaries)."""

    def __init__(self, params: RabinParams):
        self.params = params
        d = params.degree
        red = gf2.ModReducer(params.poly)
        self._shift = [red.reduce(u << d) for u in range(256)]
        self._out = [red.reduce(u << (8 * params.window)) for u in range(256)]
        self._mask_d = (1 << d) - 1
        self.h = 0
        self.window: deque[int] = deque(maxlen=params.window)
        self.since = 0

    def _next_hash(self, b: int) -> int:
        h8 = self.h << 8
        h = (h8 & self._mask_d) ^ self._shift[h8 >> self.params.degree] ^ b
        if len(self.window) == self.params.window:
            h ^= self._out[self.window[0]]
        return h

    def _clashes(self, h: int) -> bool:
        return (len(self.window) + 1 >= self.params.window
                and self.since + 1 >= self.params.min_chunk
                and h & self.params.mask == 0)

    def would_clash(self, b: int) -> bool:
        return self._clashes(self._next_hash(b))

    def push(self, b: int) -> str | None:
        h = self._next_hash(b)
        clash = self._clashes(h)
        self.h = h
        self.window.append(b)   # maxlen evicts the aged byte
        self.since += 1
        if clash:
            self.since = 0
            return CAUSE_CLASH
        if self.since == self.params.max_chunk:
            self.since = 0
            return CAUSE_MAX
        return None

    def copy(self) -> "RabinState":
        c = RabinState.__new__(RabinState)
        c.params = self.params
        c._shift = self._shift
        c._out = self._out
        c._mask_d = self._mask_d
        c.h = self.h
        c.window = deque(self.window, maxlen=self.params.window)
        c.since = self.since
        return c


def _state_chunk(state, stream) -> list[ChunkRecord]:
    records = []
    start = 0
    total = len(stream)
    for pos in range(total):
        cause = state.push(stream[pos])
        if cause is not None:
            records.append(ChunkRecord(start, pos + 1, cause))
            start = pos + 1
    if start < total:
        records.append(ChunkRecord(start, total, CAUSE_EOD))
    return records


def borg_chunk_reference(params: BuzhashParams, stream) -> list[ChunkRecord]:
    """Slow per-byte Borg chunker, for cross-checking the fast path."""
    return _state_chunk(BuzhashState(params), bytes(stream))


def restic_chunk_reference(params: RabinParams, stream) -> list[ChunkRecord]:
    """Slow per-byte Restic chunker, for cross-checking the fast path."""
    return _state_chunk(RabinState(params), bytes(stream))


def make_state(params: ChunkerParams):
    if isinstance(params, TarsnapParams):
        return TarsnapState(params)
    if isinstance(params, BuzhashParams):
        return BuzhashState(params)
    if isinstance(params, RabinParams):
        return RabinState(params)
    raise TypeError(f"unknown params type {type(params)!r}")


def chunk_stream(params: ChunkerParams, stream) -> list[ChunkRecord]:
    """Chunk a whole stream with whichever scheme the params select."""
    if isinstance(params, TarsnapParams):
        return tarsnap_chunk(params, stream)
    if isinstance(params, BuzhashParams):
        return borg_chunk(params, stream)
    if isinstance(params, RabinParams):
        return restic_chunk(params, stream)
    raise TypeError(f"unknown params type {type(params)!r}")
