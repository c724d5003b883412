"""Compression models for the pipeline: identity and a fully specified
toy run-length scheme whose compressed lengths are bit-exact across
implementations.

toy-rle format: a run of byte b repeated L times with 4 <= L <= 255
encodes as the 3-byte token (0xFF, L, b); a literal 0xFF encodes as
(0xFF, 0x01, 0xFF); all other literals pass through; runs longer than
255 split greedily.
"""

from __future__ import annotations

import numpy as np

ESC = 0xFF


def compress_toy_rle(data: bytes) -> bytes:
    out = bytearray()
    n = len(data)
    i = 0
    while i < n:
        b = data[i]
        j = i + 1
        while j < n and j - i < 255 and data[j] == b:
            j += 1
        run = j - i
        if run >= 4:
            out += bytes((ESC, run, b))
        elif b == ESC:
            out += bytes((ESC, 0x01, ESC)) * run
        else:
            out += bytes((b,)) * run
        i = j
    return bytes(out)


def decompress_toy_rle(data: bytes) -> bytes:
    out = bytearray()
    i = 0
    n = len(data)
    while i < n:
        b = data[i]
        if b == ESC:
            if i + 2 >= n:
                raise ValueError("truncated toy-rle token")
            out += bytes((data[i + 2],)) * data[i + 1]
            i += 3
        else:
            out.append(b)
            i += 1
    return bytes(out)


def _rle_runs(data: bytes) -> tuple[np.ndarray, np.ndarray]:
    """(values, lengths) of maximal runs, vectorized."""
    arr = np.frombuffer(data, dtype=np.uint8)
    change = np.nonzero(np.diff(arr))[0] + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change, [len(arr)]])
    return arr[starts], ends - starts


def toy_rle_length(data: bytes) -> int:
    """len(compress_toy_rle(data)) without materializing the output."""
    if not data:
        return 0
    vals, lens = _rle_runs(data)
    full = lens // 255            # greedy 255-length tokens
    rem = lens % 255
    tok = full * 3
    enc_rem = np.where(rem >= 4, 3,
                       np.where(vals == ESC, rem * 3, rem))
    return int(np.sum(tok + enc_rem))


class CompressionModel:
    """A named deterministic compressor with a pure length function."""

    def __init__(self, name, compress, decompress, length=None):
        self.name = name
        self.compress = compress
        self.decompress = decompress
        self.length = length or (lambda data: len(compress(data)))

    def __repr__(self):
        return f"CompressionModel({self.name!r})"


IDENTITY = CompressionModel("identity", lambda d: bytes(d), lambda d: bytes(d), len)
TOY_RLE = CompressionModel("toy-rle", compress_toy_rle, decompress_toy_rle, toy_rle_length)

MODELS = {m.name: m for m in (IDENTITY, TOY_RLE)}


def get_model(name: str) -> CompressionModel:
    try:
        return MODELS[name]
    except KeyError:
        raise KeyError(f"unknown compressor {name!r}; choose from {sorted(MODELS)}") from None


def enumerate_prefix_lengths(known, start: int, observed_clen: int,
                             model: CompressionModel, lmin: int, lmax: int) -> list[int]:
    """All L in [lmin, lmax] with |compress(known[start:start+L])| equal
    to the observed compressed length, ascending.

    An empty result signals an observation inconsistent with the
    hypothesis (wrong plaintext or wrong start), not a fault.  toy-rle
    lengths are nondecreasing in L, so one incremental scan suffices.
    """
    if lmax < lmin:
        return []
    if model.name == "identity":
        return [observed_clen] if lmin <= observed_clen <= lmax else []
    window = bytes(known[start:start + lmax])
    if len(window) < lmin:
        raise ValueError("known plaintext does not cover the hypothesis range")
    lmax = min(lmax, len(window))
    if model.name == "toy-rle":
        return _enumerate_toy_rle(window, observed_clen, lmin, lmax)
    # generic fallback: one compression per candidate length
    return [ell for ell in range(lmin, lmax + 1)
            if model.length(window[:ell]) == observed_clen]


def _enumerate_toy_rle(window: bytes, observed: int, lmin: int, lmax: int) -> list[int]:
    """Incremental scan of compressed prefix lengths.

    State per prefix: output length so far with the trailing run
    excluded, plus the trailing run (value, length).  Appending a byte
    either extends the run or flushes it.  Prefix lengths are not
    monotone (three escaped 0xFF literals collapse into one token when a
    fourth arrives), so the scan never exits early.
    """
    def run_cost(val: int, length: int) -> int:
        full, rem = divmod(length, 255)
        cost = full * 3
        if rem >= 4:
            cost += 3
        elif val == ESC:
            cost += rem * 3
        else:
            cost += rem
        return cost

    out = []
    done = 0          # output bytes for everything before the open run
    run_val = -1
    run_len = 0
    for i, b in enumerate(window):
        if b == run_val:
            run_len += 1
        else:
            done += run_cost(run_val, run_len) if run_len else 0
            run_val = b
            run_len = 1
        ell = i + 1
        if ell < lmin:
            continue
        if done > observed:
            break  # `done` is monotone; no later prefix can match
        if done + run_cost(run_val, run_len) == observed:
            out.append(ell)
    return out
