"""Secret chunking parameters for the three schemes: generation from a
seed, validation, and the key=value file format shared by the CLI.

Param files carry a version tag and the profile name so that attack
runs refuse fixtures generated at a different scale.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field

from . import gf2
from .profiles import ScaleProfile, get_profile

PARAMS_MAGIC = "cdcprobe-params-v1"

N_PRIMES = 17  # size of the canonical Tarsnap prime list


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    # deterministic Miller-Rabin, exact for n < 3.3e24
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def canonical_primes(prime_bits: int, count: int = N_PRIMES) -> list[int]:
    """The `count` largest primes <= 2^prime_bits, descending."""
    primes = []
    n = (1 << prime_bits) - 1
    while len(primes) < count and n > 2:
        if _is_prime(n):
            primes.append(n)
        n -= 1
    return primes


def _factorize(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        while n % d == 0:
            if not out or out[-1] != d:
                out.append(d)
            n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def multiplicative_order(a: int, p: int) -> int:
    """Order of a in (Z/pZ)* for prime p."""
    order = p - 1
    for q in _factorize(p - 1):
        while order % q == 0 and pow(a, order // q, p) == 1:
            order //= q
    return order


@dataclass(frozen=True)
class TarsnapParams:
    p: int                      # prime modulus
    alpha: int                  # residue of high multiplicative order
    x: tuple[int, ...]          # byte -> residue coefficient map (256 entries)
    mu: int                     # mean-chunk-size constant
    max_chunk: int
    profile: str = "full"

    scheme = "tarsnap"

    def validate(self) -> None:
        prof = get_profile(self.profile)
        if self.p not in canonical_primes(prof.prime_bits):
            raise ValueError("p is not in the profile's canonical prime list")
        if not 1 < self.alpha < self.p:
            raise ValueError("alpha out of range")
        if multiplicative_order(self.alpha, self.p) <= self.max_chunk:
            raise ValueError("alpha has insufficient multiplicative order")
        if len(self.x) != 256 or any(not 0 <= v < self.p for v in self.x):
            raise ValueError("coefficient map must be 256 residues mod p")

    @property
    def min_clash_pos(self) -> int:
        """Smallest 1-indexed position where a clash can fire.

        The window bound d - 1 < floor(sqrt(4J - mu)) is vacuous until
        4J > mu, so chunks are never shorter than ceil((mu + 1) / 4)
        except at end of data.
        """
        return (self.mu + 4) // 4


@dataclass(frozen=True)
class BuzhashParams:
    table: tuple[int, ...]      # byte -> W-bit word (256 entries)
    width: int = 32
    window: int = 4095
    mask_bits: int = 21
    min_chunk: int = 1 << 19
    max_chunk: int = 1 << 23
    profile: str = "full"

    scheme = "borg"

    def validate(self) -> None:
        if len(self.table) != 256:
            raise ValueError("table must have 256 entries")
        limit = 1 << self.width
        if any(not 0 <= v < limit for v in self.table):
            raise ValueError(f"table entries must be {self.width}-bit words")
        if not 0 < self.mask_bits <= self.width:
            raise ValueError("mask_bits out of range")
        if not 0 < self.min_chunk < self.max_chunk:
            raise ValueError("need 0 < min_chunk < max_chunk")

    @property
    def mask(self) -> int:
        return (1 << self.mask_bits) - 1


@dataclass(frozen=True)
class RabinParams:
    poly: int                   # irreducible modulus polynomial
    degree: int = 53
    window: int = 64            # window length in bytes
    mask_bits: int = 21
    min_chunk: int = 1 << 19
    max_chunk: int = 1 << 23
    profile: str = "full"

    scheme = "restic"

    def validate(self) -> None:
        if gf2.degree(self.poly) != self.degree:
            raise ValueError("poly degree does not match the declared degree")
        if not gf2.is_irreducible(self.poly):
            raise ValueError("poly is not irreducible")
        if self.degree <= self.mask_bits:
            raise ValueError("polynomial degree must exceed mask_bits")
        if not 0 < self.min_chunk < self.max_chunk:
            raise ValueError("need 0 < min_chunk < max_chunk")

    @property
    def mask(self) -> int:
        return (1 << self.mask_bits) - 1


ChunkerParams = TarsnapParams | BuzhashParams | RabinParams


def tarsnap_keygen(seed: int, profile: ScaleProfile | str = "full") -> TarsnapParams:
    """Derive Tarsnap parameters from a seed.

    p is uniform over the canonical prime list, alpha is rejection
    sampled until its multiplicative order exceeds the maximal chunk
    size, and the coefficient map is uniform mod p.
    """
    prof = get_profile(profile) if isinstance(profile, str) else profile
    rng = random.Random(("tarsnap", seed, prof.name).__repr__())
    p = rng.choice(canonical_primes(prof.prime_bits))
    while True:
        alpha = rng.randrange(2, p)
        if multiplicative_order(alpha, p) > prof.tarsnap_max:
            break
    x = tuple(rng.randrange(p) for _ in range(256))
    return TarsnapParams(p=p, alpha=alpha, x=x, mu=prof.tarsnap_mu,
                         max_chunk=prof.tarsnap_max, profile=prof.name)


def borg_keygen(seed: int, profile: ScaleProfile | str = "full") -> BuzhashParams:
    """Derive a Borg buzhash table from a seed."""
    prof = get_profile(profile) if isinstance(profile, str) else profile
    rng = random.Random(("borg", seed, prof.name).__repr__())
    table = tuple(rng.getrandbits(prof.buzhash_width) for _ in range(256))
    return BuzhashParams(table=table, width=prof.buzhash_width, window=prof.window,
                         mask_bits=prof.mask_bits, min_chunk=prof.min_chunk,
                         max_chunk=prof.max_chunk, profile=prof.name)


def restic_keygen(seed: int, profile: ScaleProfile | str = "full") -> RabinParams:
    """Derive a Restic modulus polynomial from a seed."""
    prof = get_profile(profile) if isinstance(profile, str) else profile
    rng = random.Random(("restic", seed, prof.name).__repr__())
    poly = gf2.random_irreducible(prof.rabin_degree, rng.getrandbits(64))
    return RabinParams(poly=poly, degree=prof.rabin_degree, window=prof.rabin_window,
                       mask_bits=prof.mask_bits, min_chunk=prof.min_chunk,
                       max_chunk=prof.max_chunk, profile=prof.name)


def keygen(scheme: str, seed: int, profile: ScaleProfile | str = "full") -> ChunkerParams:
    try:
        fn = {"tarsnap": tarsnap_keygen, "borg": borg_keygen, "restic": restic_keygen}[scheme]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}") from None
    return fn(seed, profile)


def keyspace_bits(scheme: str, profile: ScaleProfile | str = "full") -> float:
    """log2 of the parameter-space size (reported, never enumerated)."""
    prof = get_profile(profile) if isinstance(profile, str) else profile
    if scheme == "tarsnap":
        pbar = float(1 << prof.prime_bits)
        return math.log2(N_PRIMES) + math.log2(pbar) + 256 * math.log2(pbar)
    if scheme == "borg":
        return 256.0 * prof.buzhash_width
    if scheme == "restic":
        # ~2^d / d irreducibles of degree d
        return prof.rabin_degree - math.log2(prof.rabin_degree)
    raise ValueError(f"unknown scheme {scheme!r}")


# ---------------------------------------------------------------------------
# Serialization


def serialize_params(params: ChunkerParams) -> str:
    lines = [PARAMS_MAGIC, f"scheme={params.scheme}", f"profile={params.profile}"]
    if isinstance(params, TarsnapParams):
        lines += [
            f"p={params.p}",
            f"alpha={params.alpha}",
            f"mu={params.mu}",
            f"max_chunk={params.max_chunk}",
            "x=" + ",".join(gf2.to_hex(v) for v in params.x),
        ]
    elif isinstance(params, BuzhashParams):
        lines += [
            f"width={params.width}",
            f"window={params.window}",
            f"mask_bits={params.mask_bits}",
            f"min_chunk={params.min_chunk}",
            f"max_chunk={params.max_chunk}",
            "table=" + ",".join(gf2.to_hex(v) for v in params.table),
        ]
    elif isinstance(params, RabinParams):
        lines += [
            f"degree={params.degree}",
            f"window={params.window}",
            f"mask_bits={params.mask_bits}",
            f"min_chunk={params.min_chunk}",
            f"max_chunk={params.max_chunk}",
            f"poly={gf2.to_hex(params.poly)}",
        ]
    else:
        raise TypeError(f"unknown params type {type(params)!r}")
    return "\n".join(lines) + "\n"


def parse_params(text: str) -> ChunkerParams:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != PARAMS_MAGIC:
        raise ValueError(f"not a {PARAMS_MAGIC} file")
    kv = {}
    for ln in lines[1:]:
        key, _, val = ln.partition("=")
        if not _:
            raise ValueError(f"malformed params line: {ln!r}")
        kv[key] = val
    scheme = kv.get("scheme")
    profile = kv.get("profile", "full")
    try:
        if scheme == "tarsnap":
            return TarsnapParams(
                p=int(kv["p"]), alpha=int(kv["alpha"]),
                x=tuple(gf2.from_hex(h) for h in kv["x"].split(",")),
                mu=int(kv["mu"]), max_chunk=int(kv["max_chunk"]), profile=profile)
        if scheme == "borg":
            return BuzhashParams(
                table=tuple(gf2.from_hex(h) for h in kv["table"].split(",")),
                width=int(kv["width"]), window=int(kv["window"]),
                mask_bits=int(kv["mask_bits"]), min_chunk=int(kv["min_chunk"]),
                max_chunk=int(kv["max_chunk"]), profile=profile)
        if scheme == "restic":
            return RabinParams(
                poly=gf2.from_hex(kv["poly"]), degree=int(kv["degree"]),
                window=int(kv["window"]), mask_bits=int(kv["mask_bits"]),
                min_chunk=int(kv["min_chunk"]), max_chunk=int(kv["max_chunk"]),
                profile=profile)
    except KeyError as exc:
        raise ValueError(f"params file missing field {exc}") from None
    raise ValueError(f"unknown scheme {scheme!r}")


def params_fingerprint(params: ChunkerParams) -> str:
    """Short digest of the canonical serialization, for file headers."""
    return hashlib.sha256(serialize_params(params).encode()).hexdigest()[:12]
