"""Deterministic synthetic byte streams.

BlockSeededBytes gives random-access slicing into a seeded random
stream without materializing it, so multi-gigabyte chunking runs stay
memory-bounded.  All generation is numpy PCG64 keyed by (seed, block).
"""

from __future__ import annotations

import numpy as np

_BLOCK = 1 << 22


def random_bytes(length: int, seed: int) -> bytes:
    """Seeded uniform random bytes."""
    return np.random.default_rng(seed).integers(0, 256, length, dtype=np.uint8).tobytes()


def gen_two_valued_plaintext(byte_a: int, byte_b: int, length: int, seed: int) -> bytes:
    """I.i.d. uniform choice between two distinct byte values."""
    if byte_a == byte_b:
        raise ValueError("byte values must differ")
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, 2, length, dtype=np.uint8)
    lut = np.array([byte_a, byte_b], dtype=np.uint8)
    return lut[picks].tobytes()


def small_alphabet_plaintext(alphabet: bytes, length: int, seed: int) -> bytes:
    """I.i.d. uniform choice over a small alphabet."""
    rng = np.random.default_rng(seed)
    lut = np.frombuffer(alphabet, dtype=np.uint8)
    return lut[rng.integers(0, len(lut), length, dtype=np.uint8)].tobytes()


class BlockSeededBytes:
    """Seekable deterministic random byte stream.

    Block k holds the bytes [k*blocksize, (k+1)*blocksize) generated
    from PCG64 seeded with (seed, k); slices regenerate just the blocks
    they touch.
    """

    def __init__(self, length: int, seed: int, blocksize: int = _BLOCK):
        self.length = length
        self.seed = seed
        self.blocksize = blocksize

    def __len__(self) -> int:
        return self.length

    def _block(self, k: int) -> np.ndarray:
        n = min(self.blocksize, self.length - k * self.blocksize)
        rng = np.random.default_rng([self.seed, k])
        return rng.integers(0, 256, n, dtype=np.uint8)

    def __getitem__(self, key) -> bytes:
        if isinstance(key, int):
            if key < 0:
                key += self.length
            if not 0 <= key < self.length:
                raise IndexError("index out of range")
            return self._block(key // self.blocksize)[key % self.blocksize]
        start, stop, step = key.indices(self.length)
        if step != 1:
            raise ValueError("only contiguous slices are supported")
        if stop <= start:
            return b""
        parts = []
        k0, k1 = start // self.blocksize, (stop - 1) // self.blocksize
        for k in range(k0, k1 + 1):
            blk = self._block(k)
            lo = max(start - k * self.blocksize, 0)
            hi = min(stop - k * self.blocksize, len(blk))
            parts.append(blk[lo:hi])
        return np.concatenate(parts).tobytes()
