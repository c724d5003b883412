"""Clash extraction from observation logs, and the clash consistency
check shared by every attack.

The attacker sees only compressed chunk lengths.  Walking a log against
the known plaintext turns each length into candidate uncompressed end
offsets (singletons without compression); chunks that can only be
max-size or end-of-data are classified away, and the rest become clash
sites carrying their surviving (start, ends) hypotheses.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import gf2
from .chunkers import (CAUSE_CLASH, CAUSE_MAX, TarsnapState, buzhash,
                       rabin_window_hash)
from .compressors import CompressionModel, enumerate_prefix_lengths, get_model
from .params import BuzhashParams, ChunkerParams, RabinParams, TarsnapParams
from .pipeline import ObservationLog

MAX_FORKS = 4096


class ClashExtractionError(ValueError):
    """No consistent interpretation: wrong plaintext or wrong params."""


@dataclass(frozen=True)
class ClashSite:
    """One observed chunk interpreted as a clash, for one surviving
    start hypothesis; `ends` are the candidate end offsets."""

    archive_id: str
    chunk_index: int
    start: int
    ends: tuple[int, ...]
    observed_clen: int
    scheme: str

    def __post_init__(self):
        if not self.ends:
            raise ValueError("clash site needs at least one candidate end")


def _length_bounds(params: ChunkerParams) -> tuple[int, int]:
    if isinstance(params, TarsnapParams):
        return params.min_clash_pos, params.max_chunk
    return params.min_chunk, params.max_chunk


def extract_clashes(log: ObservationLog, known, model: CompressionModel | str,
                    params: ChunkerParams, archive_id: str | None = None) -> list[ClashSite]:
    """Interpret an observation log against known plaintext.

    Tracks the set of surviving chunk-start offsets (forks arise only
    under compression), classifies each record as clash / max-size /
    tail per start, prunes inconsistent forks, and returns the clash
    sites.  Raises ClashExtractionError when no interpretation survives.
    """
    if isinstance(model, str):
        model = get_model(model)
    records = [r for r in log.records
               if archive_id is None or r.archive_id == archive_id]
    if not records:
        return []
    lmin, lmax = _length_bounds(params)
    total = len(known)
    starts = [0]
    sites: list[ClashSite] = []
    for i, rec in enumerate(records):
        last = i == len(records) - 1
        next_starts: set[int] = set()
        clash_ends: dict[int, list[int]] = {}
        for s in starts:
            if last:
                # the tail must consume the rest of the plaintext
                ulen = total - s
                if ulen <= 0 or ulen > lmax:
                    continue
                if model.length(bytes(known[s:total])) != rec.clen:
                    continue
                if ulen == lmax:
                    # full-length tail: indistinguishable from max-size
                    clash_ends.setdefault(s, [])
                next_starts.add(total)
                continue
            hi = min(lmax, total - s)
            for ell in enumerate_prefix_lengths(known, s, rec.clen, model, lmin, hi):
                end = s + ell
                next_starts.add(end)
                if ell < lmax:
                    clash_ends.setdefault(s, []).append(end)
        for s, ends in sorted(clash_ends.items()):
            if ends:
                sites.append(ClashSite(rec.archive_id, i, s, tuple(sorted(ends)),
                                       rec.clen, params.scheme))
        if not next_starts:
            raise ClashExtractionError(
                f"no consistent interpretation at record {i} of {rec.archive_id!r}")
        if len(next_starts) > MAX_FORKS:
            raise ClashExtractionError(
                f"fork explosion at record {i}: {len(next_starts)} start hypotheses")
        starts = sorted(next_starts)
    return sites


# ---------------------------------------------------------------------------
# Induced boundaries under candidate parameters


def _borg_next_boundary(params: BuzhashParams, known, start: int) -> int:
    """First boundary of the chunk starting at `start` (end offset)."""
    n = params.window
    total = len(known)
    lo_pos = start + params.min_chunk - 1          # first testable position
    hi_pos = min(start + params.max_chunk - 1, total - 1)
    if lo_pos > hi_pos:
        return min(start + params.max_chunk, total)
    buf_lo = max(0, lo_pos - (n - 1))
    buf = np.frombuffer(bytes(known[buf_lo:hi_pos + 1]), dtype=np.uint8)
    table = np.asarray(params.table, dtype=np.uint32)
    tv = table[buf]
    r = (np.arange(len(buf), dtype=np.uint64) & np.uint64(31)).astype(np.uint32)
    v = (tv >> r) | (tv << ((np.uint32(32) - r) & np.uint32(31)))
    g = np.bitwise_xor.accumulate(v)
    gprev = np.concatenate([np.zeros(n, dtype=np.uint32), g])[:len(buf)]
    h = g ^ gprev
    h = (h << r) | (h >> ((np.uint32(32) - r) & np.uint32(31)))
    pos = np.arange(buf_lo, hi_pos + 1)
    ok = (h & np.uint32(params.mask)) == 0
    ok &= pos >= lo_pos
    ok &= pos >= n - 1
    idx = np.nonzero(ok)[0]
    if len(idx):
        return int(pos[idx[0]]) + 1
    return min(start + params.max_chunk, total)


@lru_cache(maxsize=8)
def _restic_single_tables(params: RabinParams) -> list[np.ndarray]:
    red = gf2.ModReducer(params.poly)
    return [np.array([red.reduce(u << (8 * t)) for u in range(256)], dtype=np.uint64)
            for t in range(params.window)]


def _restic_next_boundary(params: RabinParams, known, start: int) -> int:
    w = params.window
    total = len(known)
    lo_pos = start + params.min_chunk - 1
    hi_pos = min(start + params.max_chunk - 1, total - 1)
    if lo_pos > hi_pos:
        return min(start + params.max_chunk, total)
    buf_lo = max(0, lo_pos - (w - 1))
    buf = bytes(known[buf_lo:hi_pos + 1])
    arr = np.frombuffer(buf, dtype=np.uint8)
    m = len(buf) - w + 1
    if m <= 0:
        return min(start + params.max_chunk, total)
    singles = _restic_single_tables(params)
    h = np.zeros(m, dtype=np.uint64)
    for t in range(w):
        h ^= singles[t][arr[w - 1 - t:w - 1 - t + m]]
    ends = np.nonzero((h & np.uint64(params.mask)) == 0)[0] + buf_lo + (w - 1)
    ends = ends[(ends >= lo_pos) & (ends >= w - 1)]
    if len(ends):
        return int(ends[0]) + 1
    return min(start + params.max_chunk, total)


def _tarsnap_next_boundary(params: TarsnapParams, known, start: int) -> int:
    state = TarsnapState(params)
    total = len(known)
    hi = min(start + params.max_chunk, total)
    chunk = bytes(known[start:hi])
    for off, b in enumerate(chunk):
        if state.push(b) is not None:
            return start + off + 1
    return hi


def induced_boundary(params: ChunkerParams, known, start: int) -> int:
    """End offset of the chunk starting at `start` under `params`
    (window context slides in from before `start` where applicable)."""
    if isinstance(params, TarsnapParams):
        return _tarsnap_next_boundary(params, known, start)
    if isinstance(params, BuzhashParams):
        return _borg_next_boundary(params, known, start)
    if isinstance(params, RabinParams):
        return _restic_next_boundary(params, known, start)
    raise TypeError(f"unknown params type {type(params)!r}")


def _site_passes(cand: ChunkerParams, site: ClashSite, known,
                 model: CompressionModel) -> bool:
    end = induced_boundary(cand, known, site.start)
    if end not in site.ends:
        return False
    return model.length(bytes(known[site.start:end])) == site.observed_clen


def clash_consistency_check(cand: ChunkerParams, sites: list[ClashSite], known,
                            model: CompressionModel | str) -> bool:
    """Accept a candidate parameter set iff every observed clash is
    reproduced: the chunk induced from the site's start ends on one of
    the site's candidate ends and compresses to the logged length.

    Sites sharing (archive_id, chunk_index) are alternative start
    hypotheses for the same observed chunk; the candidate passes such a
    group when any member passes.  Checking several clashes amplifies:
    acceptance of wrong parameters decays geometrically.
    """
    if isinstance(model, str):
        model = get_model(model)
    groups: dict[tuple[str, int], list[ClashSite]] = {}
    for site in sites:
        groups.setdefault((site.archive_id, site.chunk_index), []).append(site)
    for group in groups.values():
        if not any(_site_passes(cand, site, known, model) for site in group):
            return False
    return True


def group_sites(sites: list[ClashSite]) -> list[list[ClashSite]]:
    """Group alternative start hypotheses of the same observed chunk,
    in observation order."""
    groups: dict[tuple[str, int], list[ClashSite]] = {}
    for site in sites:
        groups.setdefault((site.archive_id, site.chunk_index), []).append(site)
    return [groups[k] for k in sorted(groups, key=lambda k: (k[0], k[1]))]
