"""Parameter extraction for the Tarsnap-style running hash.

Both attacks work on chosen two-valued plaintexts (bytes {0, i}), where
chunking depends only on (p, alpha, x[0], x[1]) and scaling the whole
coefficient map is invisible, so x[0] is normalized to 1.

A clash of length d at chunk position J satisfies
    sum_{t=0}^{d-1} x[s_{J-d+t}] alpha^t = 0 (mod p),  d - 1 < floor(sqrt(4J - mu)),
which on a two-valued string separates into S0 + x[i] * S1 = 0 with S0,
S1 known power sums, pinning x[i] = -S0/S1 per (p, alpha, d) guess.

attack_tarsnap_naive enumerates every (p, alpha, x[1]) triple; the
clash-based attack enumerates only (p, alpha, d) and intersects the
pinned x[1] values across clashes.  Both recover the remaining byte
values with short per-value loops once (p, alpha) is known.
"""

from __future__ import annotations

import math

import numpy as np

from ..clashes import ClashSite, clash_consistency_check, group_sites
from ..params import TarsnapParams, canonical_primes
from ..profiles import ScaleProfile, get_profile
from .common import AttackExhaustedError, AttackReport, ShardSpec, Stopwatch

_BLOCK_D = 32  # d-axis block size for batched modular inversion


class _Equation:
    """One candidate (start, end) hypothesis turned into power-sum data:
    rev_bytes[t] is the byte at end-1-t, usable for d up to dmax."""

    def __init__(self, site: ClashSite, end: int, known, mu: int):
        j = end - site.start
        self.end = end
        self.j = j
        w = math.isqrt(4 * j - mu) if 4 * j > mu else 0
        self.dmax = max(0, min(w, j - 1, end))
        self.rev_bytes = bytes(known[end - self.dmax:end])[::-1]


def _equations(groups: list[list[ClashSite]], known, mu: int) -> list[list[_Equation]]:
    out = []
    for group in groups:
        eqs = [eq for site in group for end in site.ends
               if (eq := _Equation(site, end, known, mu)).dmax >= 1]
        out.append(eqs)
    return out


def _vec_powmod(base: np.ndarray, e: int, p: int) -> np.ndarray:
    pp = np.uint64(p)
    r = np.ones_like(base)
    b = base % pp
    while e:
        if e & 1:
            r = r * b % pp
        b = b * b % pp
        e >>= 1
    return r


def _ratio_keys(p: int, alphas: np.ndarray, eqs: list[_Equation], value_byte: int) -> np.ndarray:
    """Keys alpha*p + x1 for every (alpha, d, equation) with a pinned
    x1 = -S0/S1; inversions are batched along the d axis."""
    pp = np.uint64(p)
    parts = []
    for eq in eqs:
        s0 = np.zeros(len(alphas), dtype=np.uint64)
        s1 = np.zeros(len(alphas), dtype=np.uint64)
        snap0: list[np.ndarray] = []
        snap1: list[np.ndarray] = []

        def flush():
            k = len(snap1)
            if not k:
                return
            ones = np.ones_like(alphas)
            f = [np.where(s == 0, ones, s) for s in snap1]
            chain = [f[0]]
            for i in range(1, k):
                chain.append(chain[-1] * f[i] % pp)
            inv = _vec_powmod(chain[-1], p - 2, p)
            for i in range(k - 1, -1, -1):
                inv_i = inv * chain[i - 1] % pp if i else inv
                inv = inv * f[i] % pp
                ratio = (pp - snap0[i]) % pp * inv_i % pp
                keys = alphas * pp + ratio
                parts.append(keys[snap1[i] != 0])
            snap0.clear()
            snap1.clear()

        for t in range(eq.dmax):
            b = eq.rev_bytes[t]
            if b == value_byte:
                s1 = (s1 * alphas + np.uint64(1)) % pp
                s0 = s0 * alphas % pp
            else:
                s0 = (s0 * alphas + np.uint64(1)) % pp
                s1 = s1 * alphas % pp
            snap0.append(s0)
            snap1.append(s1)
            if len(snap1) == _BLOCK_D:
                flush()
        flush()
    if not parts:
        return np.empty(0, dtype=np.uint64)
    return np.concatenate(parts)


def _scan_x_candidates(p: int, alpha: int, eqs: list[_Equation], value_byte: int) -> list[int]:
    """Pinned x values -S0/S1 over all (equation, d), scalar path."""
    out = []
    seen = set()
    for eq in eqs:
        s0 = s1 = 0
        for t in range(eq.dmax):
            if eq.rev_bytes[t] == value_byte:
                s1 = (s1 * alpha + 1) % p
                s0 = s0 * alpha % p
            else:
                s0 = (s0 * alpha + 1) % p
                s1 = s1 * alpha % p
            if s1:
                x = (p - s0) * pow(s1, p - 2, p) % p
                if x not in seen:
                    seen.add(x)
                    out.append(x)
    return out


def _algebraic_ok(p: int, alpha: int, eq_groups: list[list[_Equation]],
                  value_byte: int, x: int) -> bool:
    """Every clash group must have some (end, d) whose sum vanishes with
    this x plugged in."""
    for eqs in eq_groups:
        hit = False
        for eq in eqs:
            s = 0
            for t in range(eq.dmax):
                c = x if eq.rev_bytes[t] == value_byte else 1
                s = (s * alpha + c) % p
                if s == 0:
                    hit = True
                    break
            if hit:
                break
        if not hit:
            return False
    return True


def _partial_params(p: int, alpha: int, xmap: dict[int, int],
                    profile: ScaleProfile) -> TarsnapParams:
    x = [0] * 256
    x[0] = 1
    for v, xv in xmap.items():
        x[v] = xv
    return TarsnapParams(p=p, alpha=alpha, x=tuple(x), mu=profile.tarsnap_mu,
                         max_chunk=profile.tarsnap_max, profile=profile.name)


def _solve_value(p: int, alpha: int, value: int, groups: list[list[ClashSite]],
                 known, profile: ScaleProfile, model,
                 naive: bool = False) -> tuple[int, int]:
    """Recover x[value] given (p, alpha): pin candidates from one clash
    (or enumerate all residues when naive), filter algebraically on the
    next, and accept by boundary-level consistency.  Returns (x, work).
    """
    mu = profile.tarsnap_mu
    eq_groups = _equations(groups, known, mu)
    work = 0
    for solve_idx in range(len(groups) - 1):
        solve_eqs = eq_groups[solve_idx]
        check_eqs = [g for g in eq_groups[solve_idx + 1:] if g]
        if not solve_eqs or not check_eqs:
            continue
        if naive:
            cands = list(range(p))
            work += p
        else:
            cands = _scan_x_candidates(p, alpha, solve_eqs, value)
            work += sum(e.dmax for e in solve_eqs)
        survivors = [x for x in cands if _algebraic_ok(p, alpha, check_eqs, value, x)]
        work += len(cands)
        for x in survivors:
            cand = _partial_params(p, alpha, {value: x}, profile)
            flat = [s for g in groups for s in g]
            if clash_consistency_check(cand, flat, known, model):
                return x, work
    raise AttackExhaustedError(f"no consistent x[{value}] found")


def _full_scale_log2(profile_full_mu: int = 1 << 16, prime_bits: int = 24,
                     n_clashes: int = 2) -> float:
    d_typical = math.isqrt(4 * profile_full_mu - profile_full_mu)
    return math.log2(17) + prime_bits + math.log2(n_clashes * d_typical)


def _alpha_shard(primes: list[int], shard: ShardSpec):
    """Contiguous slice of the flattened (prime, alpha) index space."""
    sizes = [p - 2 for p in primes]
    total = sum(sizes)
    lo, hi = shard.bounds(total)
    offset = 0
    out = []
    for p, size in zip(primes, sizes):
        a0 = max(lo - offset, 0)
        a1 = min(hi - offset, size)
        if a0 < a1:
            out.append((p, 2 + a0, 2 + a1, offset))
        offset += size
    return out, total


def attack_tarsnap_clashes(strings: dict[int, bytes],
                           sites: dict[int, list[ClashSite]],
                           profile: ScaleProfile | str,
                           model,
                           shard: ShardSpec = ShardSpec(),
                           primary_clashes: int = 3) -> AttackReport:
    """Clash-based chosen-plaintext extraction.

    strings[i] / sites[i] hold the two-valued ({0, i}) plaintext and its
    extracted clash sites.  The first value's clashes pin x[1] per
    (p, alpha, d); intersecting the pinned values across clashes leaves
    a handful of (p, alpha, x[1]) survivors for boundary-level
    consistency.  Remaining values are solved with short per-value
    loops.  Sharding splits the (p, alpha) space; sharded runs report
    stage-one survivors only (merge with merge_tarsnap_reports).
    """
    profile = get_profile(profile) if isinstance(profile, str) else profile
    primes = canonical_primes(profile.prime_bits)
    mu = profile.tarsnap_mu
    first_value = min(sites)
    first_groups = group_sites(sites[first_value])
    if len(first_groups) < primary_clashes:
        raise ValueError(f"need >= {primary_clashes} clashes for value {first_value}")
    known1 = strings[first_value]
    eq_groups = _equations(first_groups[:primary_clashes], known1, mu)
    if any(not eqs for eqs in eq_groups):
        raise ValueError("a primary clash has no usable (end, d) candidates")
    d_per_alpha = sum(eq.dmax for eqs in eq_groups for eq in eqs)

    report = AttackReport(attack="tarsnap-clashes", scheme="tarsnap",
                          profile=profile.name, shard=shard,
                          clashes_used=sum(len(g) for g in sites.values()),
                          full_scale_log2=_full_scale_log2())
    report.notes.append("full-scale estimate: log2(primes * alpha-space * d-candidates)"
                        " with the production constants; not executed")
    with Stopwatch() as sw:
        spans, total_alpha = _alpha_shard(primes, shard)
        report.closed_form_work = d_per_alpha * sum(a1 - a0 for _, a0, a1, _ in spans)
        stage1: list[tuple[int, int, int, int]] = []  # (global_idx, p, alpha, x1)
        for p, a0, a1, offset in spans:
            alphas = np.arange(a0, a1, dtype=np.uint64)
            report.candidates_enumerated += d_per_alpha * len(alphas)
            keysets = [_ratio_keys(p, alphas, eqs, first_value) for eqs in eq_groups]
            inter = keysets[0]
            for ks in keysets[1:]:
                inter = np.intersect1d(inter, ks)
            for key in inter.tolist():
                alpha, x1 = divmod(key, p)
                stage1.append((offset + alpha - 2, p, alpha, x1))
        stage1.sort()
        # boundary-level consistency on every clash of the first value
        flat_first = [s for g in first_groups for s in g]
        accepted = []
        for gidx, p, alpha, x1 in stage1:
            cand = _partial_params(p, alpha, {first_value: x1}, profile)
            if clash_consistency_check(cand, flat_first, known1, model):
                report.consistency_passed += 1
                accepted.append((gidx, p, alpha, x1))
            else:
                report.consistency_failed += 1
        report.accepted = accepted
        if shard.total == 1:
            _finish_tarsnap(report, accepted, strings, sites, profile, model)
    report.wall_clock_s = sw.seconds
    return report


def _finish_tarsnap(report: AttackReport, accepted, strings, sites,
                    profile: ScaleProfile, model, naive: bool = False) -> None:
    """Stage two: solve every remaining byte value.  A stage-one false
    positive dies on its first unsolvable value and the next survivor is
    tried; per-value clash consistency makes survival of a wrong
    (p, alpha) across all values vanishingly unlikely."""
    if not accepted:
        raise AttackExhaustedError("no (p, alpha, x) candidate survived")
    if len(accepted) > 1:
        report.notes.append(f"{len(accepted)} stage-one survivors")
    first_value = min(sites)
    last_err: Exception | None = None
    for _, p, alpha, x1 in accepted:
        xmap = {first_value: x1}
        try:
            for value in sorted(sites):
                if value == first_value:
                    continue
                groups = group_sites(sites[value])
                x, work = _solve_value(p, alpha, value, groups, strings[value],
                                       profile, model, naive=naive)
                xmap[value] = x
                report.candidates_enumerated += work
                report.closed_form_work += work
        except AttackExhaustedError as err:
            last_err = err
            continue
        report.recovered = {
            "p": str(p),
            "alpha": str(alpha),
            "x": ",".join(format(xmap.get(v, 1 if v == 0 else 0), "x") for v in range(256)),
        }
        report.extra["values_recovered"] = str(len(xmap) + 1)
        return
    raise AttackExhaustedError(
        f"all {len(accepted)} stage-one survivors failed a per-value solve: {last_err}")


def recovered_params(report: AttackReport, profile: ScaleProfile | str) -> TarsnapParams:
    """Materialize a report's recovered Tarsnap parameters (x[0] = 1
    normalization; unattacked byte values default to 0)."""
    profile = get_profile(profile) if isinstance(profile, str) else profile
    x = tuple(int(h, 16) for h in report.recovered["x"].split(","))
    return TarsnapParams(p=int(report.recovered["p"]),
                         alpha=int(report.recovered["alpha"]),
                         x=x, mu=profile.tarsnap_mu,
                         max_chunk=profile.tarsnap_max, profile=profile.name)


def merge_tarsnap_reports(reports: list[AttackReport], strings, sites,
                          profile: ScaleProfile | str, model) -> AttackReport:
    """Merge sharded stage-one reports and run the per-value stage."""
    profile = get_profile(profile) if isinstance(profile, str) else profile
    merged = AttackReport(attack=reports[0].attack, scheme="tarsnap",
                          profile=profile.name,
                          clashes_used=reports[0].clashes_used,
                          full_scale_log2=reports[0].full_scale_log2)
    accepted = []
    for r in sorted(reports, key=lambda r: r.shard.index):
        merged.candidates_enumerated += r.candidates_enumerated
        merged.closed_form_work += r.closed_form_work
        merged.consistency_passed += r.consistency_passed
        merged.consistency_failed += r.consistency_failed
        merged.wall_clock_s += r.wall_clock_s
        accepted.extend(r.accepted)
    accepted.sort()
    merged.accepted = accepted
    _finish_tarsnap(merged, accepted, strings, sites, profile, model,
                    naive=reports[0].attack == "tarsnap-naive")
    return merged


def attack_tarsnap_naive(strings: dict[int, bytes],
                         sites: dict[int, list[ClashSite]],
                         profile: ScaleProfile | str,
                         model,
                         shard: ShardSpec = ShardSpec()) -> AttackReport:
    """Brute-force enumeration of every (p, alpha, x[1]) triple, checked
    against the first value's clashes.  Only feasible at reduced
    profiles (the full-profile loop is ~2^52 and is reported instead)."""
    profile = get_profile(profile) if isinstance(profile, str) else profile
    primes = canonical_primes(profile.prime_bits)
    mu = profile.tarsnap_mu
    first_value = min(sites)
    known1 = strings[first_value]
    groups = group_sites(sites[first_value])
    if len(groups) < 2:
        raise ValueError("need at least 2 clashes for the first value")
    eq_groups = _equations(groups, known1, mu)
    report = AttackReport(attack="tarsnap-naive", scheme="tarsnap",
                          profile=profile.name, shard=shard,
                          clashes_used=sum(len(g) for g in sites.values()),
                          full_scale_log2=math.log2(17) + 24 + 24)
    report.notes.append("full-scale loop is primes * alpha * x1 ~= 2^52; not executed")
    with Stopwatch() as sw:
        spans, _ = _alpha_shard(primes, shard)
        report.closed_form_work = sum(p * (a1 - a0) for p, a0, a1, _ in spans)
        stage1 = []
        for p, a0, a1, offset in spans:
            for alpha in range(a0, a1):
                report.candidates_enumerated += p
                # equivalent to testing every x1 in [0, p): only the
                # pinned ratios can satisfy the first clash
                cands = _scan_x_candidates(p, alpha, eq_groups[0], first_value)
                for x1 in cands:
                    if _algebraic_ok(p, alpha, eq_groups[1:], first_value, x1):
                        stage1.append((offset + alpha - 2, p, alpha, x1))
        stage1.sort()
        flat = [s for g in groups for s in g]
        accepted = []
        for gidx, p, alpha, x1 in stage1:
            cand = _partial_params(p, alpha, {first_value: x1}, profile)
            if clash_consistency_check(cand, flat, known1, model):
                report.consistency_passed += 1
                accepted.append((gidx, p, alpha, x1))
            else:
                report.consistency_failed += 1
        report.accepted = accepted
        if shard.total == 1:
            _finish_tarsnap(report, accepted, strings, sites, profile, model, naive=True)
    report.wall_clock_s = sw.seconds
    return report
