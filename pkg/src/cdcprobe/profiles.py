"""Scale profiles: coherent parameter sets for the three chunkers.

`full` mirrors the deployed systems; `desk` shrinks every scale-bearing
constant so the complete attack loops run on one machine; `micro` is a
further reduction used by the brute-force attack round-trips, whose
loop is quadratic in the prime size.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ScaleProfile:
    name: str
    prime_bits: int         # Tarsnap primes drawn from the largest <= 2^prime_bits
    rabin_degree: int       # degree of the Restic modulus polynomial
    tarsnap_mu: int         # Tarsnap mean-chunk-size constant
    tarsnap_max: int        # Tarsnap maximal chunk size
    buzhash_width: int      # Borg hash width in bits
    window: int             # Borg window length in bytes
    rabin_window: int       # Restic window length in bytes
    mask_bits: int          # low zero bits required for a Borg/Restic clash
    min_chunk: int          # Borg/Restic minimum chunk size
    max_chunk: int          # Borg/Restic maximum chunk size


FULL = ScaleProfile(
    name="full",
    prime_bits=24,
    rabin_degree=53,
    tarsnap_mu=1 << 16,
    tarsnap_max=((1 << 8) - 1) << 10,  # 261120
    buzhash_width=32,
    window=4095,
    rabin_window=64,
    mask_bits=21,
    min_chunk=1 << 19,
    max_chunk=1 << 23,
)

DESK = ScaleProfile(
    name="desk",
    prime_bits=16,
    rabin_degree=33,
    tarsnap_mu=1 << 10,
    tarsnap_max=((1 << 8) - 1) << 4,  # 4080
    buzhash_width=32,
    window=4095,
    rabin_window=64,
    mask_bits=12,
    min_chunk=1 << 13,
    max_chunk=1 << 17,
)

MICRO = ScaleProfile(
    name="micro",
    prime_bits=10,
    rabin_degree=17,
    tarsnap_mu=1 << 7,
    tarsnap_max=((1 << 8) - 1) << 1,  # 510
    buzhash_width=32,
    window=255,
    rabin_window=16,
    mask_bits=8,
    min_chunk=1 << 9,
    max_chunk=1 << 11,
)

PROFILES = {p.name: p for p in (FULL, DESK, MICRO)}


def get_profile(name: str) -> ScaleProfile:
    try:
        return PROFILES[name]
    except KeyError:
        raise KeyError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None
