"""Spread samplers: the mu_C matching sampler, Monte Carlo spread checks,
the sequential x-cover process, the K_2* packing of Q and the recursive
multipartite sampler."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .constructions import q_graph
from .errors import ParameterError, SizeLimitError
from .graph import Graph, bits, mask_of
from .perturbation import derive_seed

PROVIDER_CAP = 500_000


@dataclass
class SpreadSample:
    obj: list  # matching edges, or list of s-uniform matchings
    provenance: dict = field(default_factory=dict)


def _kuhn(adj: list[list[int]], n_right: int) -> list[int]:
    """Maximum matching by augmenting paths, left vertices and neighbours in ascending order.

    Returns ``match_left`` with -1 for unmatched left vertices.
    """
    match_right = [-1] * n_right

    def augment(u: int, seen: list[bool]) -> bool:
        for w in adj[u]:
            if not seen[w]:
                seen[w] = True
                if match_right[w] == -1 or augment(match_right[w], seen):
                    match_right[w] = u
                    return True
        return False

    for u in range(len(adj)):
        augment(u, [False] * n_right)
    match_left = [-1] * len(adj)
    for w, u in enumerate(match_right):
        if u >= 0:
            match_left[u] = w
    return match_left


def mu_c_sample(host: Graph, A, B, C: int, seed: int) -> SpreadSample | None:
    """One draw of J_C; a perfect matching of it (seeded augmenting-path order) or None."""
    A, B = sorted(A), sorted(B)
    if len(A) != len(B):
        raise ParameterError(f"class sizes differ: {len(A)} vs {len(B)}")
    if C < 1:
        raise ParameterError("C must be at least 1")
    b_index = {v: i for i, v in enumerate(B)}
    b_mask = mask_of(B)
    a_mask = mask_of(A)
    verts = A + B
    nbrs = []
    for v in verts:
        other = a_mask if v in b_index else b_mask
        nb = list(bits(host.rows[v] & other))
        if not nb:
            raise ParameterError(f"vertex {v} has no neighbour across the classes")
        nbrs.append(nb)
    rng = np.random.default_rng(seed)
    deg = np.array([len(nb) for nb in nbrs])
    picks = np.floor(rng.random((len(verts), C)) * deg[:, None]).astype(np.int64)
    a_index = {v: i for i, v in enumerate(A)}
    chosen = [set() for _ in A]
    for i, v in enumerate(verts):
        for k in picks[i].tolist():
            w = nbrs[i][k]
            if i < len(A):
                chosen[i].add(b_index[w])
            else:
                chosen[a_index[w]].add(b_index[v])
    # lowest-first augmenting paths in a seeded random relabelling of both classes,
    # so the chosen matching does not favour small vertex ids
    k = len(A)
    pa = rng.permutation(k).tolist()
    pb = rng.permutation(k).tolist()
    inv_b = [0] * k
    for i, j in enumerate(pb):
        inv_b[j] = i
    adj = [sorted(pb[b] for b in chosen[pa[i]]) for i in range(k)]
    mate = _kuhn(adj, k)
    if any(m < 0 for m in mate):
        return None
    pairs = sorted((A[pa[i]], B[inv_b[m]]) for i, m in enumerate(mate))
    return SpreadSample(pairs, {"seed": seed, "C": C})


def mu_c_conditional(host: Graph, A, B, C: int, seed: int, max_attempts: int = 1000):
    """Sample from mu_C: redraw J_C with derived seeds until it has a perfect matching.

    Returns ``(sample, attempts)``; the sample is None when every attempt failed.
    """
    for attempt in range(max_attempts):
        res = mu_c_sample(host, A, B, C, derive_seed(seed, attempt))
        if res is not None:
            res.provenance["attempts"] = attempt + 1
            return res, attempt + 1
    return None, max_attempts


def wilson(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    ph = successes / trials
    denom = 1 + z * z / trials
    centre = (ph + z * z / (2 * trials)) / denom
    half = z * math.sqrt(ph * (1 - ph) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class SpreadReport:
    samples: int
    draws: int
    max_single: float
    max_pair: float
    flags: list = field(default_factory=list)
    bound_single: float = 0.0
    bound_pair: float = 0.0
    pairs_checked: int = 0

    def to_dict(self) -> dict:
        return {"samples": self.samples, "draws": self.draws, "max_single": self.max_single,
                "max_pair": self.max_pair, "bound_single": self.bound_single,
                "bound_pair": self.bound_pair, "pairs_checked": self.pairs_checked,
                "flags": [list(f) for f in self.flags]}


def verify_spread(host: Graph, A, B, C: int, q: float, trials: int, seed: int = 0, pairs: int = 2000,
                  z: float = 4.0, pair_factor: float = 1.0, max_draws: int | None = None) -> SpreadReport:
    """Estimate mu(M contains S) for every edge and for random disjoint edge pairs.

    A set S is flagged when the lower Wilson bound at ``z`` exceeds
    ``q^|S|`` (times ``pair_factor`` for pairs).
    """
    A, B = sorted(A), sorted(B)
    a_pos = {v: i for i, v in enumerate(A)}
    samples = np.zeros((trials, len(A)), dtype=np.int64)
    got = 0
    draws = 0
    limit = max_draws if max_draws is not None else 100 * trials
    while got < trials:
        if draws >= limit:
            raise ParameterError(f"only {got} of {trials} samples after {draws} draws")
        res = mu_c_sample(host, A, B, C, derive_seed(seed, draws))
        draws += 1
        if res is None:
            continue
        for a, b in res.obj:
            samples[got, a_pos[a]] = b
        got += 1
    n_total = host.n
    counts = np.bincount((samples + np.arange(len(A)) * n_total).ravel(), minlength=len(A) * n_total)
    flags = []
    bound1 = q
    max_single = 0.0
    for a in A:
        for b in bits(host.rows[a] & mask_of(B)):
            c = int(counts[a_pos[a] * n_total + b])
            max_single = max(max_single, c / trials)
            lo, _ = wilson(c, trials, z)
            if lo > bound1:
                flags.append(("edge", a, b, c / trials))
    rng = np.random.default_rng(derive_seed(seed, 0xFA1125))
    edges = [(a, b) for a in A for b in bits(host.rows[a] & mask_of(B))]
    chosen = []
    tries = 0
    while len(chosen) < pairs and tries < 50 * pairs and len(edges) > 1:
        tries += 1
        i, j = rng.integers(len(edges), size=2).tolist()
        (a1, b1), (a2, b2) = edges[i], edges[j]
        if a1 != a2 and b1 != b2:
            chosen.append((a1, b1, a2, b2))
    bound2 = pair_factor * q * q
    max_pair = 0.0
    if chosen:
        arr = np.array(chosen)
        cols1 = np.array([a_pos[a] for a in arr[:, 0]])
        cols2 = np.array([a_pos[a] for a in arr[:, 2]])
        hits = ((samples[:, cols1] == arr[:, 1]) & (samples[:, cols2] == arr[:, 3])).sum(axis=0)
        for k, h in enumerate(hits.tolist()):
            max_pair = max(max_pair, h / trials)
            lo, _ = wilson(h, trials, z)
            if lo > bound2:
                flags.append(("pair",) + tuple(chosen[k]) + (h / trials,))
    return SpreadReport(trials, draws, max_single, max_pair, flags, bound1, bound2, len(chosen))


# -- the x-cover process -------------------------------------------------

def bmst_copies(g: Graph, x: int, m: int, s: int, t: int, forbidden: int = 0, cap: int = PROVIDER_CAP):
    """All copies of B_{m,s,t} through x (x in the t-class) avoiding ``forbidden``.

    A copy is ``(T, (S_1, ..., S_m))`` with sorted classes and S_1 < ... < S_m.
    """
    if t < 1:
        raise ParameterError("x must sit in a class of size t >= 1")
    rows = g.rows
    avail = g.all_mask & ~forbidden & ~(1 << x)
    out = []
    for rest in combinations(list(bits(avail)), t - 1):
        tee = (x,) + rest
        common = avail & ~mask_of(rest)
        for v in tee:
            common &= rows[v]

        def rec(pool: int, classes: list[tuple[int, ...]]):
            if len(classes) == m:
                out.append((tuple(sorted(tee)), tuple(classes)))
                if len(out) > cap:
                    raise SizeLimitError(f"more than {cap} candidate copies; use a smaller instance")
                return
            verts = list(bits(pool))
            if len(verts) < s * (m - len(classes)):
                return
            # the next class holds the smallest vertex it uses among those still allowed
            for cls in combinations(verts, s):
                if classes and cls < classes[-1]:
                    continue
                nxt = pool & ~mask_of(cls)
                for v in cls:
                    nxt &= rows[v]
                rec(nxt, classes + [cls])

        rec(common, [])
    return out


@dataclass
class XCoverResult:
    ok: bool
    copies: list
    counts: list[int]
    order: list[int]
    stuck: int | None = None

    def to_dict(self) -> dict:
        return {"ok": self.ok, "stuck": self.stuck, "order": self.order, "counts": self.counts,
                "copies": [{"T": list(T), "S": [list(c) for c in S]} for T, S in self.copies]}


def x_cover_process(g: Graph, X, m: int, s: int, t: int, seed: int, provider=None) -> XCoverResult:
    """Cover X by disjoint B_{m,s,t} copies, each through a vertex of X in its t-class."""
    if provider is None:
        def provider(x, forbidden):
            return bmst_copies(g, x, m, s, t, forbidden)
    rng = np.random.default_rng(seed)
    remaining = sorted(X)
    used = 0
    copies, counts, order = [], [], []
    while remaining:
        left = [x for x in remaining if not used >> x & 1]
        if not left:
            break
        x = left[int(rng.integers(len(left)))]
        cands = provider(x, used)
        counts.append(len(cands))
        order.append(x)
        if not cands:
            return XCoverResult(False, copies, counts, order, stuck=x)
        T, S = cands[int(rng.integers(len(cands)))]
        copies.append((T, S))
        used |= mask_of(T) | mask_of(v for c in S for v in c)
        remaining = [v for v in remaining if not used >> v & 1]
    return XCoverResult(True, copies, counts, order)


def verify_xcover(g: Graph, X, res: XCoverResult, m: int, s: int, t: int) -> list[str]:
    problems = []
    seen = 0
    xs = set(X)
    for T, S in res.copies:
        if len(T) != t or len(S) != m or any(len(c) != s for c in S):
            problems.append(f"copy {T, S} has the wrong shape")
        classes = [T] + list(S)
        m_all = mask_of(v for c in classes for v in c)
        if m_all & seen or m_all.bit_count() != t + m * s:
            problems.append(f"copy {T, S} overlaps")
        seen |= m_all
        if not xs & set(T):
            problems.append(f"copy {T, S} has no X-vertex in its t-class")
        for i, c1 in enumerate(classes):
            for c2 in classes[i + 1:]:
                if any(not g.has_edge(u, v) for u in c1 for v in c2):
                    problems.append(f"copy {T, S} misses a cross edge")
    if res.ok and any(not seen >> x & 1 for x in xs):
        problems.append("X is not covered")
    return problems


# -- the K_2* packing of Q -----------------------------------------------

@dataclass
class WeightedPacking:
    s: int
    t: int
    copies: list[tuple[int, int]]  # (sigma endpoint, tau endpoint)
    w_sigma: Fraction
    w_tau: Fraction
    L: frozenset[int]
    M: frozenset[int]
    N: frozenset[int]

    def weights(self) -> dict[int, Fraction]:
        w = {v: Fraction(0) for v in range(self.s + self.t)}
        for sig, tau in self.copies:
            w[sig] += self.w_sigma
            w[tau] += self.w_tau
        return w

    @property
    def residue(self) -> Fraction:
        return (self.s + self.t) - sum(self.weights().values(), Fraction(0))

    def to_dict(self) -> dict:
        return {"s": self.s, "t": self.t, "w_sigma": str(self.w_sigma), "w_tau": str(self.w_tau),
                "copies": [list(c) for c in self.copies], "residue": str(self.residue),
                "weights": {str(v): str(w) for v, w in sorted(self.weights().items())}}


def k2star_packing(s: int, t: int) -> WeightedPacking:
    """Residue-zero K_2* packing of Q(s, t) with every tau endpoint in M."""
    if not 1 <= t < s:
        raise ParameterError("k2star_packing needs 1 <= t < s; for s = t use a perfect matching")
    _, ls, ms, ns = q_graph(s, t)
    L, M, N = sorted(ls), sorted(ms), sorted(ns)
    copies = []
    for j in range(t):
        # t copies of (s+t) K_2*, sigma at n_j and tau at m_j
        copies.extend([(N[j], M[j])] * (t * (s + t)))
    for ell in L:
        for j in range(t):
            copies.extend([(ell, M[j])] * (s + t))
    return WeightedPacking(s, t, copies, Fraction(1, t * (s + t)), Fraction(1, s * (s + t)),
                           ls, ms, ns)


# -- the recursive multipartite sampler ----------------------------------

def _group_adjacent(host: Graph, c1, c2) -> bool:
    m2 = mask_of(c2)
    return all(host.rows[u] & m2 == m2 for u in c1)


def recursive_factor_sample(parts, host: Graph, C: int, seed: int, common_fraction: float = 0.25,
                            max_attempts: int = 200) -> tuple[SpreadSample | None, dict]:
    """Sample s-uniform matchings H_1..H_m by contracting matched part pairs.

    ``parts[i]`` is the list of s equal-size vertex sets of group i.  Returns
    ``(sample, diagnostics)``; the sample is None when some level has no
    perfect matching within ``max_attempts`` draws.
    """
    result = []
    diag = {"levels": []}
    for i, group in enumerate(parts):
        if not group:
            raise ParameterError("each group needs at least one part")
        size = len(group[0])
        if any(len(p) != size for p in group):
            raise ParameterError(f"group {i} has parts of different sizes")
        cells = [[(v,) for v in sorted(p)] for p in group]
        level = 0
        while len(cells) > 1:
            left, right = cells[-2], cells[-1]
            others = cells[:-2]
            k = len(left)
            rows = [0] * (2 * k)
            dense = 0
            for a, ca in enumerate(left):
                for b, cb in enumerate(right):
                    if not _group_adjacent(host, ca, cb):
                        continue
                    dense += 1
                    merged = ca + cb
                    ok = True
                    for part in others:
                        common = sum(1 for c in part if _group_adjacent(host, merged, c))
                        if common < common_fraction * len(part):
                            ok = False
                            break
                    if ok:
                        rows[a] |= 1 << (k + b)
                        rows[k + b] |= 1 << a
            density = dense / (k * k)
            diag["levels"].append({"group": i, "level": level, "density": density})
            if density < 0.2:
                warnings.warn(f"group {i} level {level}: cross density {density:.3f} is below 0.2")
            aux = Graph(2 * k, rows)
            if any(r == 0 for r in rows):
                diag["failure"] = {"group": i, "level": level, "reason": "isolated cell"}
                return None, diag
            sample, attempts = mu_c_conditional(aux, range(k), range(k, 2 * k), C,
                                                derive_seed(seed, i * 1000 + level), max_attempts)
            if sample is None:
                diag["failure"] = {"group": i, "level": level, "reason": "no perfect matching"}
                return None, diag
            merged_cells = [tuple(sorted(left[a] + right[b - k])) for a, b in sample.obj]
            cells = others + [sorted(merged_cells)]
            level += 1
        result.append(sorted(cells[0]))
    return SpreadSample(result, {"seed": seed, "C": C}), diag
