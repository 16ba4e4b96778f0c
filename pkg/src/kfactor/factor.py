"""Exact clique-factor search at desk scale.

The core solver is an exact-cover backtracking search over clique bitmasks
with fewest-options-first branching.  Universal vertices (adjacent to every
other vertex) are factored out first: a K_r-factor exists iff the remaining
vertices split into at most n/r cliques of size at most r, the universal
vertices topping every part up to r.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .errors import ParameterError, SizeLimitError
from .graph import Graph, bits, clique_masks, lowest, mask_of

FOUND = "found"
ABSENT = "absent"
BUDGET = "budget"

DEFAULT_BUDGET = 10_000_000
COUNT_CAP = 16
EXACT_CLIQUE_LIMIT = 5_000
MEMO_LIMIT = 200_000
QUICK_NODES = 100


class _OutOfBudget(Exception):
    pass


@dataclass
class FactorResult:
    status: str
    parts: list[tuple[int, ...]] = field(default_factory=list)
    nodes: int = 0
    reason: str = ""

    @property
    def found(self) -> bool:
        return self.status == FOUND

    def to_dict(self) -> dict:
        return {"status": self.status, "reason": self.reason, "nodes": self.nodes,
                "parts": [list(p) for p in self.parts]}


def verify_factor(g: Graph, parts, r: int | None = None) -> bool:
    """Independent check: disjoint, spanning, every part a clique (of order r)."""
    seen = 0
    for part in parts:
        m = mask_of(part)
        if m & seen or len(set(part)) != len(part):
            return False
        if r is not None and len(part) != r:
            return False
        if not g.is_clique(part):
            return False
        seen |= m
    return seen == g.all_mask


class _CoverSearch:
    """Cover ``target`` by cliques of ``g`` with a deficit budget.

    Choosing a part of size ``a`` spends ``r - a`` of the budget; the budget
    starts at the number of universal vertices.
    """

    def __init__(self, g: Graph, r: int, target: int, budget0: int, node_budget: int):
        self.g = g
        self.r = r
        self.rows = g.rows
        self.node_budget = node_budget
        self.nodes = 0
        self.memo: set[tuple[int, int]] = set()
        self.lcm = math.lcm(*range(1, r + 1))
        min_size = max(1, r - budget0)
        self.cands = []
        for a in range(r, min_size - 1, -1):
            self.cands.extend(clique_masks(g, a, target))
        self.target = target
        self.budget0 = budget0

    def run(self):
        chosen: list[int] = []
        ok = self._search(self.target, self.budget0, self.cands, chosen)
        return ok, chosen

    def _greedy_independent(self, uncovered: int) -> int:
        # min-degree greedy independent set inside the uncovered vertices
        rows = self.rows
        order = sorted(bits(uncovered), key=lambda v: ((rows[v] & uncovered).bit_count(), v))
        blocked = 0
        size = 0
        for v in order:
            if not blocked >> v & 1:
                size += 1
                blocked |= rows[v] | (1 << v)
        return size

    def _search(self, uncovered: int, deficit: int, cands: list[int], chosen: list[int]) -> bool:
        if not uncovered:
            return True
        key = (uncovered, deficit)
        if key in self.memo:
            return False
        r = self.r
        remaining = uncovered.bit_count()
        # every part holds at most one vertex of an independent set
        if r * self._greedy_independent(uncovered) - remaining > deficit:
            self._remember(key)
            return False

        count: dict[int, int] = {}
        largest: dict[int, int] = {}
        for c in cands:
            a = c.bit_count()
            for v in bits(c):
                count[v] = count.get(v, 0) + 1
                if largest.get(v, 0) < a:
                    largest[v] = a
        # each vertex whose parts have at most w vertices costs (r - w)/w deficit
        lcm = self.lcm
        need = 0
        best_v, best_n = -1, None
        for v in bits(uncovered):
            w = largest.get(v, 0)
            if w == 0:
                self._remember(key)
                return False
            need += lcm * (r - w) // w
            cv = count[v]
            if best_n is None or cv < best_n:
                best_v, best_n = v, cv
        if need > lcm * deficit:
            self._remember(key)
            return False

        vbit = 1 << best_v
        options = [c for c in cands if c & vbit]
        options.sort(key=lambda c: (-c.bit_count(), c))
        for c in options:
            self.nodes += 1
            if self.nodes > self.node_budget:
                raise _OutOfBudget
            new_def = deficit - (r - c.bit_count())
            min_size = max(1, r - new_def)
            rest = [k for k in cands if not k & c and k.bit_count() >= min_size]
            chosen.append(c)
            if self._search(uncovered & ~c, new_def, rest, chosen):
                return True
            chosen.pop()
        self._remember(key)
        return False

    def _remember(self, key):
        if len(self.memo) < MEMO_LIMIT:
            self.memo.add(key)


def _matching_factor(g: Graph) -> FactorResult:
    import networkx as nx

    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges())
    mate = nx.max_weight_matching(h, maxcardinality=True)
    if 2 * len(mate) != g.n:
        return FactorResult(ABSENT, reason="no perfect matching")
    parts = sorted(tuple(sorted(e)) for e in mate)
    return FactorResult(FOUND, parts=parts)


def _milp_cover(g: Graph, r: int, target: int, n_universal: int, node_limit: int):
    """Set-partition model over the cliques of g[target] solved with HiGHS.

    Returns ``(status, chosen masks)``.
    """
    import numpy as np
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import coo_matrix

    min_size = max(1, r - n_universal)
    cands = []
    for a in range(r, min_size - 1, -1):
        cands.extend(clique_masks(g, a, target))
    verts = list(bits(target))
    index = {v: i for i, v in enumerate(verts)}
    rows, cols = [], []
    for j, c in enumerate(cands):
        for v in bits(c):
            rows.append(index[v])
            cols.append(j)
    if not cands:
        return ABSENT, []
    cover = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(verts), len(cands))).tocsr()
    deficit = np.array([[r - c.bit_count() for c in cands]], dtype=float)
    # minimising the part count guides HiGHS far better than a zero objective
    res = milp(np.ones(len(cands)),
               constraints=[LinearConstraint(cover, 1, 1), LinearConstraint(deficit, 0, n_universal)],
               integrality=np.ones(len(cands)), bounds=Bounds(0, 1),
               options={"node_limit": int(node_limit), "presolve": True})
    if res.status == 0:
        return FOUND, [c for c, x in zip(cands, res.x) if x > 0.5]
    if res.status == 2:
        return ABSENT, []
    return BUDGET, []


def has_factor(g: Graph, r: int, budget: int = DEFAULT_BUDGET, method: str = "auto",
               quick_nodes: int = QUICK_NODES) -> FactorResult:
    """Decide whether ``g`` has a K_r-factor; three-valued (found/absent/budget).

    ``method`` is "search" (backtracking only), "milp" (integer program only)
    or "auto": a short backtracking run, then the integer program for
    instances the backtracking could not settle within ``quick_nodes``.
    """
    if r < 2:
        raise ParameterError("factor order r must be at least 2")
    if method not in ("auto", "search", "milp"):
        raise ParameterError(f"unknown method {method!r}")
    n = g.n
    if n % r:
        return FactorResult(ABSENT, reason="divisibility")
    if n == 0:
        return FactorResult(FOUND)
    if r == 2:
        return _matching_factor(g)
    full = g.all_mask
    universal = [v for v in range(n) if g.rows[v] | (1 << v) == full]
    target = full & ~mask_of(universal)
    nodes = 0
    chosen: list[int] = []
    status = BUDGET
    if method in ("auto", "search"):
        limit = budget if method == "search" else min(budget, quick_nodes)
        search = _CoverSearch(g, r, target, len(universal), limit)
        try:
            ok, chosen = search.run()
            status = FOUND if ok else ABSENT
        except _OutOfBudget:
            status = BUDGET
        nodes = search.nodes
    if status == BUDGET and method in ("auto", "milp"):
        status, chosen = _milp_cover(g, r, target, len(universal), budget)
    if status == BUDGET:
        return FactorResult(BUDGET, nodes=nodes, reason="node budget exhausted")
    if status == ABSENT:
        return FactorResult(ABSENT, nodes=nodes, reason="search exhausted")
    pool = iter(universal)
    parts = []
    for c in chosen:
        part = list(bits(c))
        part.extend(next(pool) for _ in range(r - len(part)))
        parts.append(tuple(sorted(part)))
    rest = list(pool)
    for i in range(0, len(rest), r):
        parts.append(tuple(rest[i:i + r]))
    parts.sort()
    return FactorResult(FOUND, parts=parts, nodes=nodes)


def count_factors(g: Graph, r: int) -> int:
    """Exact number of K_r-factors (n <= 16)."""
    if g.n > COUNT_CAP:
        raise SizeLimitError(f"count_factors is limited to n <= {COUNT_CAP}")
    if r < 1:
        raise ParameterError("r must be positive")
    if g.n % r:
        return 0
    rows = g.rows

    def rec(uncovered: int) -> int:
        if not uncovered:
            return 1
        v = lowest(uncovered)
        cand = rows[v] & uncovered
        total = 0
        for rest in itertools.combinations(list(bits(cand)), r - 1):
            m = mask_of(rest)
            if all((rows[u] | (1 << u)) & m == m for u in rest):
                total += rec(uncovered & ~m & ~(1 << v))
        return total

    return rec(g.all_mask)


@dataclass
class PackingResult:
    cliques: list[tuple[int, ...]]
    mode: str  # "exact", "exact-budget" or "greedy"
    nodes: int = 0

    @property
    def size(self) -> int:
        return len(self.cliques)


def max_disjoint_cliques(g: Graph, k: int, target: int | None = None,
                         budget: int = DEFAULT_BUDGET) -> PackingResult:
    """Largest family of pairwise disjoint K_k copies found (early stop at ``target``)."""
    if k < 2:
        raise ParameterError("clique order must be at least 2")
    masks = clique_masks(g, k)
    masks.sort(key=lambda m: tuple(bits(m)))
    if target is None:
        target = g.n // k
    if len(masks) > EXACT_CLIQUE_LIMIT:
        chosen = _greedy_packing(masks, target)
        return PackingResult([tuple(bits(m)) for m in chosen], "greedy")

    by_vertex: dict[int, list[int]] = {}
    usable = 0
    for m in masks:
        usable |= m
        for v in bits(m):
            by_vertex.setdefault(v, []).append(m)
    best: list[int] = []
    nodes = 0

    def rec(avail: int, chosen: list[int]):
        nonlocal best, nodes
        if len(chosen) > len(best):
            best = list(chosen)
        if len(best) >= target:
            return
        if len(chosen) + avail.bit_count() // k <= len(best):
            return
        if not avail:
            return
        nodes += 1
        if nodes > budget:
            raise _OutOfBudget
        v = lowest(avail)
        for m in by_vertex.get(v, ()):
            if m & avail == m:
                chosen.append(m)
                rec(avail & ~m, chosen)
                chosen.pop()
                if len(best) >= target:
                    return
        rec(avail & ~(1 << v), chosen)

    mode = "exact"
    try:
        rec(usable, [])
    except _OutOfBudget:
        mode = "exact-budget"
    return PackingResult([tuple(bits(m)) for m in best], mode, nodes)


def _greedy_packing(masks: list[int], target: int) -> list[int]:
    # repeatedly take the clique meeting the fewest other available cliques
    load: dict[int, int] = {}
    for m in masks:
        for v in bits(m):
            load[v] = load.get(v, 0) + 1
    used = 0
    chosen = []
    avail = list(masks)
    while avail and len(chosen) < target:
        m = min(avail, key=lambda c: (sum(load[v] for v in bits(c)), c))
        chosen.append(m)
        used |= m
        avail = [c for c in avail if not c & used]
    # one-for-two swaps: drop a chosen clique if two disjoint replacements fit
    improved = True
    while improved and len(chosen) < target:
        improved = False
        for i, m in enumerate(chosen):
            free = ~(used & ~m)
            fits = [c for c in masks if c & free == c]
            for a, b in itertools.combinations(fits, 2):
                if not a & b:
                    chosen[i:i + 1] = [a, b]
                    used = (used & ~m) | a | b
                    improved = True
                    break
            if improved:
                break
    return chosen


# -- family factors ------------------------------------------------------

def subgraph_embeddings(f: Graph, h: Graph):
    """Yield all injective maps V(f) -> V(h) carrying edges to edges (not induced)."""
    order = sorted(range(f.n), key=lambda v: (-f.degree(v), v))
    pos = {v: i for i, v in enumerate(order)}
    k = f.n
    back = [[pos[u] for u in bits(f.rows[order[i]]) if pos[u] < i] for i in range(k)]
    rows = h.rows
    full = h.all_mask
    images = [0] * k

    def rec(i, used):
        if i == k:
            yield {order[j]: images[j] for j in range(k)}
            return
        cand = full & ~used
        for j in back[i]:
            cand &= rows[images[j]]
        for v in bits(cand):
            images[i] = v
            yield from rec(i + 1, used | (1 << v))

    yield from rec(0, 0)


@dataclass
class FamilyFactorResult:
    status: str
    parts: list[tuple[int, dict[int, int]]] = field(default_factory=list)  # (member index, embedding)
    nodes: int = 0
    reason: str = ""

    @property
    def found(self) -> bool:
        return self.status == FOUND


def has_family_factor(g: Graph, family: list[Graph], budget: int = DEFAULT_BUDGET) -> FamilyFactorResult:
    """Spanning disjoint copies, each containing some family member as a subgraph."""
    if any(f.n > 10 for f in family):
        raise SizeLimitError("family members are limited to 10 vertices")
    if any(f.n == 0 for f in family):
        raise ParameterError("family members must be nonempty")
    copies: dict[int, tuple[int, dict[int, int]]] = {}
    for idx, f in enumerate(family):
        for emb in subgraph_embeddings(f, g):
            m = mask_of(emb.values())
            if m not in copies:
                copies[m] = (idx, emb)
    masks = sorted(copies, key=lambda m: (-m.bit_count(), m))
    nodes = 0

    def rec(uncovered: int, cands: list[int], chosen: list[int]) -> bool:
        nonlocal nodes
        if not uncovered:
            return True
        count: dict[int, int] = {}
        for c in cands:
            for v in bits(c):
                count[v] = count.get(v, 0) + 1
        best_v, best_n = -1, None
        for v in bits(uncovered):
            cv = count.get(v, 0)
            if cv == 0:
                return False
            if best_n is None or cv < best_n:
                best_v, best_n = v, cv
        vbit = 1 << best_v
        for c in [c for c in cands if c & vbit]:
            nodes += 1
            if nodes > budget:
                raise _OutOfBudget
            chosen.append(c)
            if rec(uncovered & ~c, [k for k in cands if not k & c], chosen):
                return True
            chosen.pop()
        return False

    chosen: list[int] = []
    try:
        ok = rec(g.all_mask, masks, chosen)
    except _OutOfBudget:
        return FamilyFactorResult(BUDGET, nodes=nodes, reason="node budget exhausted")
    if not ok:
        return FamilyFactorResult(ABSENT, nodes=nodes, reason="search exhausted")
    return FamilyFactorResult(FOUND, parts=[copies[c] for c in chosen], nodes=nodes)
