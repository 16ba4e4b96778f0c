"""Covers by K_2 and Q copies via lexicographic local search, and absorbers.

A mixed factor partitions the vertices into singletons, edges and copies of
Q = Q(s, t) (t = r - s), where Q has parts L (s - t vertices), M and N
(t vertices each), L-M complete and m_i n_i matched.  Its index is the pair
(k2 + t*q, q), which every local move strictly increases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ConstructionError, ParameterError, RejectedInput
from .graph import Graph, bits, clique_masks, mask_of
from .perturbation import derive_seed


@dataclass
class QCopy:
    L: tuple[int, ...]
    M: tuple[int, ...]
    N: tuple[int, ...]  # N[i] is matched to M[i]

    @property
    def vertices(self) -> tuple[int, ...]:
        return self.L + self.M + self.N

    def to_dict(self) -> dict:
        return {"L": list(self.L), "M": list(self.M), "N": list(self.N)}


@dataclass
class MixedFactor:
    singletons: set[int]
    edges: list[tuple[int, int]]
    qs: list[QCopy]
    t: int

    @property
    def index(self) -> tuple[int, int]:
        return (len(self.edges) + self.t * len(self.qs), len(self.qs))

    def to_dict(self) -> dict:
        return {"singletons": sorted(self.singletons), "edges": [list(e) for e in self.edges],
                "qs": [q.to_dict() for q in self.qs], "index": list(self.index)}


def verify_mixed_factor(g: Graph, f: MixedFactor, s: int, t: int) -> list[str]:
    """Problems with ``f`` as a spanning {K1, K2, Q}-factor of ``g``; empty when valid."""
    problems = []
    seen: list[int] = []
    seen.extend(f.singletons)
    for a, b in f.edges:
        seen.extend((a, b))
        if not g.has_edge(a, b):
            problems.append(f"edge {a}-{b} missing from host")
    for q in f.qs:
        if len(q.L) != s - t or len(q.M) != t or len(q.N) != t:
            problems.append(f"Q copy {q} has wrong part sizes")
        seen.extend(q.vertices)
        for m in q.M:
            for l in q.L:
                if not g.has_edge(l, m):
                    problems.append(f"L-M pair {l}-{m} missing")
        for m, nn in zip(q.M, q.N):
            if not g.has_edge(m, nn):
                problems.append(f"M-N pair {m}-{nn} missing")
    if len(seen) != len(set(seen)):
        problems.append("parts overlap")
    if set(seen) != set(range(g.n)):
        problems.append("parts do not span the vertex set")
    return problems


@dataclass
class CoverResult:
    kind: str  # "covered" or "sparse"
    factor: MixedFactor | None = None
    sparse_set: frozenset[int] | None = None
    leftover: int = 0
    C: int = 0
    moves: list[tuple[str, tuple[int, int]]] = field(default_factory=list)
    pair: tuple[int, int] | None = None
    absorber: "AbsorberFamily | None" = None
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "C": self.C, "leftover": self.leftover, "moves": len(self.moves),
               **self.info}
        if self.factor is not None:
            out["factor"] = self.factor.to_dict()
        if self.sparse_set is not None:
            out["sparse_set"] = sorted(self.sparse_set)
        if self.pair is not None:
            out["pair"] = list(self.pair)
        if self.absorber is not None:
            out["absorber"] = self.absorber.to_dict()
        return out


class _LocalSearch:
    def __init__(self, g: Graph, s: int, t: int):
        self.g = g
        self.s = s
        self.t = t
        self.f = MixedFactor(set(range(g.n)), [], [], t)
        self.moves: list[tuple[str, tuple[int, int]]] = []

    def singles_mask(self) -> int:
        return mask_of(self.f.singletons)

    # M1: two adjacent singletons become an edge
    def move_join(self) -> bool:
        rows = self.g.rows
        singles = self.singles_mask()
        for x in sorted(self.f.singletons):
            nb = rows[x] & singles
            if nb:
                y = (nb & -nb).bit_length() - 1
                self.f.singletons -= {x, y}
                self.f.edges.append((min(x, y), max(x, y)))
                return True
        return False

    # M3: a singleton adjacent to the L or N part of a Q breaks it into t+1 edges
    def move_break(self) -> bool:
        g = self.g
        for qi, q in enumerate(self.f.qs):
            ln_mask = mask_of(q.L) | mask_of(q.N)
            for x in sorted(self.f.singletons):
                hit = g.rows[x] & ln_mask
                if not hit:
                    continue
                u = (hit & -hit).bit_length() - 1
                if u in q.L:
                    new_edges = list(zip(q.M, q.N)) + [(x, u)]
                    freed = [l for l in q.L if l != u]
                else:
                    if not q.L:
                        continue  # with an empty L part the swap would not raise the index
                    j = q.N.index(u)
                    ell = q.L[0]
                    new_edges = [(x, u), (q.M[j], ell)]
                    new_edges += [(q.M[i], q.N[i]) for i in range(self.t) if i != j]
                    freed = list(q.L[1:])
                del self.f.qs[qi]
                self.f.singletons.discard(x)
                self.f.singletons.update(freed)
                self.f.edges.extend((min(a, b), max(a, b)) for a, b in new_edges)
                return True
        return False

    # M2: s-t singletons and t edges spanning a K_{s-t,t} in the auxiliary graph merge into a Q
    def move_merge(self) -> bool:
        need = self.s - self.t
        edges = self.f.edges
        if len(edges) < self.t or len(self.f.singletons) < need:
            return False
        rows = self.g.rows
        singles = self.singles_mask()
        oriented = []
        for i, (a, b) in enumerate(edges):
            oriented.append((i, a, b))
            oriented.append((i, b, a))
        found = self._dfs_merge(oriented, 0, [], singles, need, rows)
        if found is None:
            return False
        picks, common = found
        ls = tuple(sorted(bits(common))[:need])
        used = {i for i, _, _ in picks}
        q = QCopy(ls, tuple(v for _, v, _ in picks), tuple(w for _, _, w in picks))
        self.f.edges = [e for i, e in enumerate(edges) if i not in used]
        self.f.singletons -= set(ls)
        self.f.qs.append(q)
        return True

    def _dfs_merge(self, oriented, start, picks, common, need, rows):
        if len(picks) == self.t:
            return list(picks), common
        used = {i for i, _, _ in picks}
        for pos in range(start, len(oriented)):
            i, v, w = oriented[pos]
            if i in used or (picks and i < picks[-1][0]):
                continue
            nxt = common & rows[v]
            if nxt.bit_count() < need:
                continue
            picks.append((i, v, w))
            res = self._dfs_merge(oriented, pos + 1, picks, nxt, need, rows)
            picks.pop()
            if res is not None:
                return res
        return None

    def d_family(self, x: int, y: int) -> list[int]:
        rows = self.g.rows
        both = rows[x] & rows[y]
        return [i for i, q in enumerate(self.f.qs) if mask_of(q.M) & both == mask_of(q.M)]

    def z_set(self, x: int, y: int) -> int:
        z = 0
        for i in self.d_family(x, y):
            q = self.f.qs[i]
            z |= mask_of(q.L) | mask_of(q.N)
        return z

    # M4: an edge x1y1 inside Z lets x, y take the places of x1, y1 in their Q copies
    def move_substitute(self) -> bool:
        rows = self.g.rows
        singles = sorted(self.f.singletons)
        for ai, x in enumerate(singles):
            for y in singles[ai + 1:]:
                z = self.z_set(x, y)
                for x1 in bits(z):
                    hit = rows[x1] & z
                    if not hit:
                        continue
                    y1 = (hit & -hit).bit_length() - 1
                    self._replace(x1, x)
                    self._replace(y1, y)
                    self.f.singletons -= {x, y}
                    self.f.edges.append((min(x1, y1), max(x1, y1)))
                    return True
        return False

    def _replace(self, old: int, new: int):
        for qi, q in enumerate(self.f.qs):
            if old in q.L or old in q.N:
                self.f.qs[qi] = QCopy(tuple(new if v == old else v for v in q.L), q.M,
                                      tuple(new if v == old else v for v in q.N))
                return
        raise AssertionError(f"vertex {old} not found in an L or N part")

    def run(self, max_moves: int):
        order = (("M1", self.move_join), ("M3", self.move_break), ("M2", self.move_merge),
                 ("M4", self.move_substitute))
        while len(self.moves) < max_moves:
            before = self.f.index
            for name, move in order:
                if move():
                    after = self.f.index
                    if not after > before:
                        raise AssertionError(f"move {name} did not raise the index: {before} -> {after}")
                    self.moves.append((name, after))
                    break
            else:
                return


def default_leftover_constant(s: int, t: int) -> int:
    return 2 * (s + t) ** 2


def cover_or_sparse(g: Graph, r: int, s: int, delta: float, C: int | None = None,
                    check_degree: bool = True) -> CoverResult:
    """Local search on the index; Covered if at most C singletons remain, else Sparse(Z)."""
    t = r - s
    if not 1 <= t <= s:
        raise ParameterError(f"need 1 <= r - s <= s, got r={r}, s={s}")
    n = g.n
    if check_degree and g.min_degree() < (1 - Fraction(s, r) - Fraction(delta).limit_denominator(10 ** 9)) * n:
        raise RejectedInput(f"minimum degree {g.min_degree()} is below (1 - s/r - delta) n")
    if C is None:
        C = default_leftover_constant(s, t)
    search = _LocalSearch(g, s, t)
    search.run(max_moves=n * (n + 1) + 1)
    f = search.f
    f.edges.sort()
    leftover = len(f.singletons)
    if leftover <= C:
        return CoverResult("covered", factor=f, leftover=leftover, C=C, moves=search.moves)
    deg = g.degrees()
    x, y = sorted(f.singletons, key=lambda v: (-deg[v], v))[:2]
    z = search.z_set(x, y)
    return CoverResult("sparse", factor=f, sparse_set=frozenset(bits(z)), leftover=leftover, C=C,
                       moves=search.moves, pair=(x, y),
                       info={"D_size": len(search.d_family(x, y))})


# -- absorbers ------------------------------------------------------------

@dataclass
class AbsorberFamily:
    cliques: list[tuple[int, ...]]
    delta: float
    g: int
    info: dict = field(default_factory=dict)

    @property
    def covered(self) -> int:
        return mask_of(v for c in self.cliques for v in c)

    def to_dict(self) -> dict:
        return {"cliques": [list(c) for c in self.cliques], "delta": self.delta, "g": self.g, **self.info}


@dataclass
class AbsorberVerdict:
    ok: bool
    size_ok: bool
    neighbour_ok: bool
    structure_ok: bool
    covered: int
    worst_slack: float
    worst_vertex: int | None


def absorber_threshold(n: int, delta: float, g: int) -> float:
    return delta * delta * n / (24 * g * g)


def is_absorber(host: Graph, fam: AbsorberFamily) -> AbsorberVerdict:
    """Exact check: disjoint K_g copies, at most delta*n covered, enough cliques near every vertex."""
    n = host.n
    seen = 0
    structure_ok = True
    masks = []
    for c in fam.cliques:
        m = mask_of(c)
        if len(c) != fam.g or m & seen or not host.is_clique(c):
            structure_ok = False
        seen |= m
        masks.append(m)
    covered = seen.bit_count()
    size_ok = covered <= fam.delta * n
    need = absorber_threshold(n, fam.delta, fam.g)
    worst = math.inf
    worst_v = None
    for x in range(n):
        nb = host.rows[x]
        cnt = sum(1 for m in masks if m & nb)
        if cnt - need < worst:
            worst, worst_v = cnt - need, x
    if n == 0:
        worst = 0.0
    neighbour_ok = worst >= 0
    return AbsorberVerdict(structure_ok and size_ok and neighbour_ok, size_ok, neighbour_ok,
                           structure_ok, covered, float(worst), worst_v)


def labelled_clique_counts(host: Graph, g: int, cliques: list[int] | None = None) -> list[int]:
    """Per vertex, the number of labelled K_g copies through it ((g-1)! per clique)."""
    if cliques is None:
        cliques = clique_masks(host, g)
    counts = [0] * host.n
    for c in cliques:
        for v in bits(c):
            counts[v] += 1
    f = math.factorial(g - 1)
    return [c * f for c in counts]


def build_absorber(host: Graph, delta: float, g_order: int, seed: int = 0,
                   max_retries: int = 50) -> AbsorberFamily:
    """Randomised absorber construction with per-vertex clique families and pair deletion."""
    n = host.n
    g = g_order
    if g < 1 or not 0 < delta <= 1:
        raise ParameterError("need g_order >= 1 and 0 < delta <= 1")
    cliques = sorted(clique_masks(host, g), key=lambda m: tuple(bits(m)))
    counts = labelled_clique_counts(host, g, cliques)
    need = delta * n ** (g - 1)
    if n <= 100:
        checked = list(range(n))
    else:
        checked = sorted(np.random.default_rng(derive_seed(seed, 0xABC)).choice(n, 50, replace=False).tolist())
    short = [v for v in checked if counts[v] < need]
    if short:
        raise RejectedInput(f"vertex {short[0]} lies in {counts[short[0]]} labelled K_{g} copies, "
                            f"fewer than delta*n^(g-1) = {need:.1f}")
    through: dict[int, list[int]] = {v: [] for v in range(n)}
    for c in cliques:
        for v in bits(c):
            through[v].append(c)
    family_size = math.ceil(need / math.factorial(g - 1))
    failures = {"size": 0, "neighbour": 0}
    for attempt in range(max_retries):
        rng = np.random.default_rng(derive_seed(seed, attempt))
        pool = set()
        for v in range(n):
            options = through[v]
            k = min(family_size, len(options))
            for i in sorted(rng.choice(len(options), size=k, replace=False).tolist()):
                pool.add(options[i])
        family = sorted(pool, key=lambda m: tuple(bits(m)))
        prob = min(1.0, delta * n / (2 * g * len(family)))
        keep = rng.random(len(family)) < prob
        sampled = [m for m, k in zip(family, keep) if k]
        # a member is deleted when it meets an earlier sampled member
        survivors = []
        for i, m in enumerate(sampled):
            if not any(m & sampled[j] for j in range(i)):
                survivors.append(m)
        fam = AbsorberFamily([tuple(bits(m)) for m in survivors], delta, g,
                             {"attempts": attempt + 1, "sampled": len(sampled), "family": len(family),
                              "probability": prob})
        verdict = is_absorber(host, fam)
        if verdict.ok:
            return fam
        failures["size" if not verdict.size_ok else "neighbour"] += 1
    raise ConstructionError(f"build_absorber: {max_retries} retries exhausted", diagnostics=failures)


def compose_cover(g: Graph, r: int, s: int, delta: float, seed: int = 0, C: int | None = None,
                  max_retries: int = 50) -> CoverResult:
    """Absorber first, then the local-search cover of the remainder."""
    t = r - s
    if not 1 <= t <= s:
        raise ParameterError(f"need 1 <= r - s <= s, got r={r}, s={s}")
    n = g.n
    frac_delta = Fraction(delta).limit_denominator(10 ** 9)
    if g.min_degree() < (1 - Fraction(s, r) - frac_delta) * n:
        raise RejectedInput(f"minimum degree {g.min_degree()} is below (1 - s/r - delta) n")
    g_order = 2 if 2 * s > r else 3
    half = delta / 2
    if g_order == 3:
        # a vertex with a sparse neighbourhood is itself a sparse witness
        for v in range(n):
            nb = g.rows[v]
            if g.edges_within(nb) <= delta * n * n:
                return CoverResult("sparse", sparse_set=frozenset(bits(nb)),
                                   info={"witness_vertex": v, "edges_inside": g.edges_within(nb)})
    absorber = build_absorber(g, half, g_order, seed=seed, max_retries=max_retries)
    used = absorber.covered
    rest = [v for v in range(n) if not used >> v & 1]
    sub, labels = g.induced(rest)
    n_sub = sub.n
    # degree loss from removing at most delta*n/2 vertices is absorbed by a larger slack
    need_delta = max(Fraction(half), 1 - Fraction(s, r) - Fraction(sub.min_degree(), n_sub))
    res = cover_or_sparse(sub, r, s, float(need_delta), C=C, check_degree=False)
    relabel = labels.__getitem__
    info = {"absorber_order": g_order, "remainder_delta": float(need_delta)}
    if res.kind == "sparse":
        z = frozenset(relabel(v) for v in res.sparse_set)
        info["edges_inside"] = g.edges_within(mask_of(z))
        return CoverResult("sparse", sparse_set=z, leftover=res.leftover, C=res.C, moves=res.moves,
                           pair=tuple(relabel(v) for v in res.pair), absorber=absorber, info=info)
    f = res.factor
    mapped = MixedFactor({relabel(v) for v in f.singletons},
                         sorted((relabel(a), relabel(b)) for a, b in f.edges),
                         [QCopy(tuple(map(relabel, q.L)), tuple(map(relabel, q.M)), tuple(map(relabel, q.N)))
                          for q in f.qs], t)
    if g_order == 2:
        mapped.edges = sorted(mapped.edges + [tuple(c) for c in absorber.cliques])
    return CoverResult("covered", factor=mapped, leftover=res.leftover, C=res.C, moves=res.moves,
                       absorber=absorber, info=info)


def verify_composed(g: Graph, res: CoverResult, r: int, s: int) -> list[str]:
    """Validity of a composed cover: the mixed factor plus absorber cliques partition V."""
    t = r - s
    problems = []
    if res.kind != "covered":
        return ["not a covered result"]
    f = res.factor
    if res.absorber is not None and res.absorber.g == 3:
        extra = [c for c in res.absorber.cliques]
        # the triangles of the absorber sit outside the mixed factor
        covered_f = set(f.singletons) | {v for e in f.edges for v in e} | {v for q in f.qs for v in q.vertices}
        tri = {v for c in extra for v in c}
        if covered_f & tri or covered_f | tri != set(range(g.n)):
            problems.append("factor and absorber triangles do not partition V")
        for c in extra:
            if not g.is_clique(c):
                problems.append(f"absorber triangle {c} is not a clique")
        sub_vertices = sorted(covered_f)
        sub, labels = g.induced(sub_vertices)
        back = {v: i for i, v in enumerate(labels)}
        local = MixedFactor({back[v] for v in f.singletons}, [(back[a], back[b]) for a, b in f.edges],
                            [QCopy(tuple(back[v] for v in q.L), tuple(back[v] for v in q.M),
                                   tuple(back[v] for v in q.N)) for q in f.qs], t)
        problems += verify_mixed_factor(sub, local, s, t)
    else:
        problems += verify_mixed_factor(g, f, s, t)
        if res.absorber is not None:
            edge_set = set(f.edges)
            if any(tuple(c) not in edge_set for c in res.absorber.cliques):
                problems.append("absorber edges are not part of the cover")
    if res.absorber is not None and not is_absorber(g, res.absorber).ok:
        problems.append("absorber invariants fail")
    if f.singletons and len(f.singletons) > res.C:
        problems.append("leftover exceeds C")
    return problems
