"""Harvesting g disjoint K_{s+1} copies in a perturbed graph whose host has minimum degree g.

Regimes:
  small-g            g < ln(n)^2: take the copies from the random edges alone.
  high-degree-peel   vertices of host degree > delta*n/2 are covered first, each by
                     itself plus a K_s in its host neighbourhood.
  greedy-large-g     repeatedly cover a vertex of maximum remaining host degree.
  main-WF            split into thirds A/B/D, thin to G' (ceil(g/5) B-neighbours per
                     A-vertex), keep candidates K = e + S (e in G', S in D) whose other
                     pairs are random edges, then drop every candidate meeting an
                     earlier one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import harvest_split
from .errors import ParameterError, RejectedInput, SizeLimitError
from .graph import Graph, bits, clique_masks, mask_of, overlay
from .perturbation import PerturbationPlan, derive_seed, random_edges

REGIMES = ("small-g", "high-degree-peel", "greedy-large-g", "main-WF")
W_CAP = 10_000_000
SPLIT_RETRIES = 100


@dataclass
class HarvestInstance:
    host: Graph
    g: int
    s: int
    p: float
    plan: PerturbationPlan
    regime: str = "auto"  # auto, small-g, greedy-large-g or main-WF
    delta: float = 0.1


@dataclass
class HarvestResult:
    ok: bool
    copies: list[tuple[int, ...]]
    regime: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "regime": self.regime, "copies": [list(c) for c in self.copies],
                "diagnostics": self.diagnostics}


@dataclass
class CandidateBook:
    W: list[tuple[int, ...]]
    gprime_edges: list[tuple[int, int]]
    cherries: int
    cherries_A: int
    f1_pairs: int


def find_clique(rows, within: int, k: int) -> tuple[int, ...] | None:
    """First K_k (lowest vertices first) inside the vertex mask ``within``."""
    if k == 0:
        return ()

    def rec(cand: int, chosen: list[int]):
        if len(chosen) == k:
            return tuple(chosen)
        need = k - len(chosen)
        while cand.bit_count() >= need:
            low = cand & -cand
            v = low.bit_length() - 1
            cand ^= low
            chosen.append(v)
            res = rec(cand & rows[v], chosen)
            chosen.pop()
            if res is not None:
                return res
        return None

    return rec(within, [])


def verify_copies(combined: Graph, copies, k: int) -> bool:
    seen = 0
    for c in copies:
        m = mask_of(c)
        if len(c) != k or m.bit_count() != k or m & seen or not combined.is_clique(c):
            return False
        seen |= m
    return True


def thin_gprime(host: Graph, a_set, b_mask: int, d0: int) -> list[int]:
    """G' rows: each A-vertex keeps its d0 smallest-id B-neighbours."""
    rows = [0] * host.n
    for u in sorted(a_set):
        kept = list(bits(host.rows[u] & b_mask))[:d0]
        for v in kept:
            rows[u] |= 1 << v
            rows[v] |= 1 << u
    return rows


def intersection_profile(members: list[int], size: int) -> dict[int, int]:
    """Number of unordered member pairs sharing exactly i vertices, i = 1..size-1."""
    from itertools import combinations

    # P_k = sum over pairs of C(|I|, k) = sum over k-sets T of C(N_T, 2)
    p = {}
    for k in range(1, size):
        cnt: dict[tuple, int] = {}
        for m in members:
            for t in combinations(list(bits(m)), k):
                cnt[t] = cnt.get(t, 0) + 1
        p[k] = sum(c * (c - 1) // 2 for c in cnt.values())
    exact: dict[int, int] = {}
    for i in range(size - 1, 0, -1):
        exact[i] = p[i] - sum(math.comb(j, i) * exact[j] for j in range(i + 1, size))
    return exact


def candidate_book(host: Graph, A, B, D, s: int, g: int) -> CandidateBook:
    a_set = sorted(A)
    b_mask, d_mask = mask_of(B), mask_of(D)
    if mask_of(A) & (b_mask | d_mask) or b_mask & d_mask:
        raise ParameterError("A, B and D must be disjoint")
    d0 = math.ceil(g / 5)
    rows = thin_gprime(host, a_set, b_mask, d0)
    edges = [(u, v) for u in a_set for v in bits(rows[u])]
    d_list = list(bits(d_mask))
    size = len(edges) * math.comb(len(d_list), s - 1)
    if size > W_CAP:
        raise SizeLimitError(f"|W| = {size} exceeds the cap {W_CAP}; use a smaller n")
    from itertools import combinations

    W = [tuple(sorted((u, v) + rest)) for u, v in edges for rest in combinations(d_list, s - 1)]
    degs = [r.bit_count() for r in rows]
    cherries = sum(d * (d - 1) for d in degs)
    cherries_a = sum(degs[u] * (degs[u] - 1) for u in a_set)
    f1 = intersection_profile([mask_of(k) for k in W], s + 1).get(1, 0) if len(W) <= 200_000 else -1
    return CandidateBook(W, edges, cherries, cherries_a, f1)


def _cover_vertex(x: int, host: Graph, combined: Graph, avail: int, s: int):
    clique = find_clique(combined.rows, host.rows[x] & avail, s)
    if clique is None:
        return None
    return tuple(sorted((x,) + clique))


def _random_split(avail: list[int], host: Graph, d0: int, seed: int):
    a, b, _ = harvest_split(len(avail))
    for attempt in range(SPLIT_RETRIES):
        rng = np.random.default_rng(derive_seed(seed, attempt))
        perm = [avail[i] for i in rng.permutation(len(avail)).tolist()]
        A, B, D = sorted(perm[:a]), sorted(perm[a:a + b]), sorted(perm[a + b:])
        b_mask = mask_of(B)
        if all((host.rows[u] & b_mask).bit_count() >= d0 for u in A):
            return A, B, D, attempt + 1
    return None, None, None, SPLIT_RETRIES


def harvest(inst: HarvestInstance) -> HarvestResult:
    host, g, s, p = inst.host, inst.g, inst.s, inst.p
    n = host.n
    if s < 2 or g < 0:
        raise ParameterError("need s >= 2 and g >= 0")
    if g > n:
        raise ParameterError("g exceeds n")
    if host.min_degree() < g:
        raise RejectedInput(f"minimum degree {host.min_degree()} is below g = {g}")
    if inst.regime not in ("auto",) + REGIMES:
        raise ParameterError(f"unknown regime {inst.regime!r}")
    rand = random_edges(n, p, inst.plan, 0)
    combined = overlay(host, rand)
    diag: dict = {"n": n, "g": g, "s": s, "p": p, "delta": inst.delta}
    log_sq = math.log(n) ** 2 if n > 1 else 0.0
    regime = inst.regime
    if regime == "auto" and g < log_sq:
        regime = "small-g"

    if regime == "small-g":
        copies = []
        avail = host.all_mask
        while len(copies) < g:
            c = find_clique(rand.rows, avail, s + 1)
            if c is None:
                break
            copies.append(c)
            avail &= ~mask_of(c)
        diag["from_random"] = len(copies)
        # top up from host plus random edges when the random graph alone falls short
        while len(copies) < g:
            c = find_clique(combined.rows, avail, s + 1)
            if c is None:
                break
            copies.append(c)
            avail &= ~mask_of(c)
        return _finish(copies, g, s, combined, "small-g", diag)

    # high-degree vertices first
    high = [x for x in range(n) if host.degree(x) > inst.delta * n / 2]
    diag["X"] = len(high)
    copies = []
    avail = host.all_mask
    for x in high[:min(len(high), g)]:
        if not avail >> x & 1:
            continue
        c = _cover_vertex(x, host, combined, avail & ~(1 << x), s)
        if c is None:
            diag["stuck_vertex"] = x
            return _finish(copies, g, s, combined, "high-degree-peel", diag)
        copies.append(c)
        avail &= ~mask_of(c)
    g1 = g - len(copies)
    diag["peeled"] = len(copies)
    if g1 <= 0:
        return _finish(copies, g, s, combined, "high-degree-peel", diag)
    if regime == "auto":
        regime = "greedy-large-g" if g1 >= n / (10 * s * math.log(n)) else "main-WF"

    if regime == "greedy-large-g":
        while len(copies) < g:
            order = sorted(bits(avail), key=lambda v: (-(host.rows[v] & avail).bit_count(), v))
            for x in order:
                c = _cover_vertex(x, host, combined, avail & ~(1 << x), s)
                if c is not None:
                    copies.append(c)
                    avail &= ~mask_of(c)
                    break
            else:
                break
        return _finish(copies, g, s, combined, "greedy-large-g", diag)

    # main regime
    d0 = math.ceil(g / 5)
    A, B, D, attempts = _random_split(list(bits(avail)), host, d0, derive_seed(inst.plan.seed, 0x5EED))
    diag["split_attempts"] = attempts
    if A is None:
        diag["failure"] = "no split gives every A-vertex enough B-neighbours"
        return _finish(copies, g, s, combined, "main-WF", diag)
    gp_rows = thin_gprime(host, A, mask_of(B), d0)
    d_mask = mask_of(D)
    e_gp = sum(gp_rows[u].bit_count() for u in A)
    diag["W"] = e_gp * math.comb(len(D), s - 1)
    diag["cherries"] = sum(r.bit_count() * (r.bit_count() - 1) for r in gp_rows)
    rrows = rand.rows
    members = []
    for u in A:
        for v in bits(gp_rows[u]):
            common = rrows[u] & rrows[v] & d_mask
            if s - 1 == 1:
                found = [1 << w for w in bits(common)]
            else:
                found = clique_masks(rand, s - 1, common)
            for c in found:
                members.append(c | (1 << u) | (1 << v))
                if len(members) > W_CAP:
                    raise SizeLimitError(f"|W~| exceeds the cap {W_CAP}")
    members.sort(key=lambda m: tuple(bits(m)))
    diag["W_tilde"] = len(members)
    profile = intersection_profile(members, s + 1) if len(members) <= 200_000 else {}
    diag["F_tilde"] = sum(profile.values()) if profile else None
    diag["F_tilde_1"] = profile.get(1) if profile else None
    union = 0
    survivors = []
    for m in members:
        if not m & union:
            survivors.append(m)
        union |= m
    diag["survivors"] = len(survivors)
    for m in survivors[:g1]:
        copies.append(tuple(bits(m)))
    return _finish(copies, g, s, combined, "main-WF", diag)


def _finish(copies, g, s, combined, regime, diag) -> HarvestResult:
    copies = sorted(copies)
    if not verify_copies(combined, copies, s + 1):
        raise AssertionError("harvested copies failed verification")
    diag["found"] = len(copies)
    return HarvestResult(len(copies) >= g, copies, regime, diag)
