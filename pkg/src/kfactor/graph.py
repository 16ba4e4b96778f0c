"""Simple undirected graphs on ``0..n-1`` stored as rows of Python-int bitsets.

Vertex sets are passed around internally as int bitmasks; public helpers
accept any iterable of vertex ids and return sorted tuples or frozensets.
"""

from __future__ import annotations

import io
import itertools
import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DimensionError, InputFormatError, ParameterError, SizeLimitError

MAX_VERTICES = 20_000
MAX_PATTERN_VERTICES = 6


def bits(mask: int) -> Iterator[int]:
    """Yield the positions of the set bits of ``mask`` in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(vertices: Iterable[int]) -> int:
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


def popcount(mask: int) -> int:
    return mask.bit_count()


def lowest(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


class Graph:
    """Immutable simple graph with bitset adjacency rows.

    ``rows[v]`` has bit ``u`` set iff ``uv`` is an edge.  The constructor
    trusts its input; use :meth:`from_edges` for validated construction.
    """

    __slots__ = ("n", "rows", "_m")

    def __init__(self, n: int, rows: Sequence[int]):
        if n > MAX_VERTICES:
            raise SizeLimitError(f"n={n} exceeds the hard cap of {MAX_VERTICES} vertices")
        self.n = n
        self.rows = tuple(rows)
        self._m = None

    # -- construction -------------------------------------------------
    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        if n < 0:
            raise ParameterError("vertex count must be non-negative")
        if n > MAX_VERTICES:
            raise SizeLimitError(f"n={n} exceeds the hard cap of {MAX_VERTICES} vertices")
        rows = [0] * n
        for i, (u, v) in enumerate(edges):
            if not (0 <= u < v < n):
                raise InputFormatError(f"edge ({u}, {v}) must satisfy 0 <= u < v < {n}", line=i + 2)
            if rows[u] >> v & 1:
                raise InputFormatError(f"duplicate edge ({u}, {v})", line=i + 2)
            rows[u] |= 1 << v
            rows[v] |= 1 << u
        return cls(n, rows)

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, [0] * n)

    @classmethod
    def complete(cls, n: int) -> "Graph":
        full = (1 << n) - 1
        return cls(n, [full ^ (1 << v) for v in range(n)])

    @classmethod
    def from_adjacency(cls, adj) -> "Graph":
        a = np.asarray(adj, dtype=bool)
        n = a.shape[0]
        if a.shape != (n, n) or a.diagonal().any() or (a != a.T).any():
            raise ParameterError("adjacency matrix must be square, symmetric, zero-diagonal")
        rows = []
        for v in range(n):
            packed = np.packbits(a[v], bitorder="little").tobytes()
            rows.append(int.from_bytes(packed, "little"))
        return cls(n, rows)

    # -- basic queries ------------------------------------------------
    @property
    def m(self) -> int:
        if self._m is None:
            self._m = sum(r.bit_count() for r in self.rows) // 2
        return self._m

    @property
    def all_mask(self) -> int:
        return (1 << self.n) - 1

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.rows[u] >> v & 1)

    def neighbors(self, v: int) -> int:
        return self.rows[v]

    def neighbor_list(self, v: int) -> list[int]:
        return list(bits(self.rows[v]))

    def degree(self, v: int) -> int:
        return self.rows[v].bit_count()

    def degrees(self) -> list[int]:
        return [r.bit_count() for r in self.rows]

    def min_degree(self) -> int:
        return min(self.degrees()) if self.n else 0

    def max_degree(self) -> int:
        return max(self.degrees()) if self.n else 0

    def edges(self) -> Iterator[tuple[int, int]]:
        for u, row in enumerate(self.rows):
            for v in bits(row >> (u + 1)):
                yield u, u + 1 + v

    def edges_within(self, mask: int) -> int:
        """Number of edges with both endpoints in ``mask``."""
        return sum((self.rows[v] & mask).bit_count() for v in bits(mask)) // 2

    def edges_between(self, mask1: int, mask2: int) -> int:
        if mask1 & mask2:
            raise ParameterError("edges_between needs disjoint sets")
        return sum((self.rows[v] & mask2).bit_count() for v in bits(mask1))

    def common_neighbors(self, mask: int) -> int:
        out = self.all_mask
        for v in bits(mask):
            out &= self.rows[v]
        return out

    def is_clique(self, vertices: Iterable[int]) -> bool:
        vs = list(vertices)
        m = mask_of(vs)
        return all((self.rows[v] | (1 << v)) & m == m for v in vs)

    def is_independent(self, mask: int) -> bool:
        return all(not (self.rows[v] & mask) for v in bits(mask))

    def induced(self, vertices: Iterable[int]) -> tuple["Graph", list[int]]:
        """Induced subgraph relabelled to ``0..k-1``; also returns the old labels."""
        vs = sorted(set(vertices))
        index = {v: i for i, v in enumerate(vs)}
        rows = []
        for v in vs:
            r = 0
            for u in bits(self.rows[v]):
                j = index.get(u)
                if j is not None:
                    r |= 1 << j
            rows.append(r)
        return Graph(len(vs), rows), vs

    def complement(self) -> "Graph":
        full = self.all_mask
        return Graph(self.n, [(full ^ r) & ~(1 << v) for v, r in enumerate(self.rows)])

    def with_edges(self, extra: Iterable[tuple[int, int]]) -> "Graph":
        rows = list(self.rows)
        for u, v in extra:
            rows[u] |= 1 << v
            rows[v] |= 1 << u
        return Graph(self.n, rows)

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=bool)
        nbytes = (self.n + 7) // 8
        for v, r in enumerate(self.rows):
            raw = np.frombuffer(r.to_bytes(nbytes, "little"), dtype=np.uint8)
            a[v] = np.unpackbits(raw, bitorder="little")[: self.n].astype(bool)
        return a

    def __eq__(self, other):
        return isinstance(other, Graph) and self.n == other.n and self.rows == other.rows

    def __hash__(self):
        return hash((self.n, self.rows))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


def overlay(g1: Graph, g2: Graph) -> Graph:
    """Edge-set union of two graphs on the same vertex set."""
    if g1.n != g2.n:
        raise DimensionError(f"cannot overlay graphs on {g1.n} and {g2.n} vertices")
    return Graph(g1.n, [a | b for a, b in zip(g1.rows, g2.rows)])


# -- edge-list files -----------------------------------------------------

def format_el(g: Graph) -> str:
    buf = io.StringIO()
    buf.write(f"{g.n} {g.m}\n")
    for u, v in g.edges():
        buf.write(f"{u} {v}\n")
    return buf.getvalue()


def _parse_int_pair(line: str, lineno: int) -> tuple[int, int]:
    parts = line.split(" ")
    if len(parts) != 2 or not all(p.isdigit() and p.isascii() for p in parts):
        raise InputFormatError(f"expected two base-10 integers separated by one space, got {line!r}", line=lineno)
    return int(parts[0]), int(parts[1])


def parse_el(text: str) -> Graph:
    if not text.isascii():
        raise InputFormatError("edge list must be ASCII")
    if not text.endswith("\n"):
        raise InputFormatError("edge list must be newline-terminated")
    lines = text[:-1].split("\n")
    n, m = _parse_int_pair(lines[0], 1)
    body = lines[1:]
    if len(body) != m:
        raise InputFormatError(f"header announces {m} edges but {len(body)} edge lines follow")
    edges = [_parse_int_pair(line, i + 2) for i, line in enumerate(body)]
    return Graph.from_edges(n, edges)


def write_el(g: Graph, path) -> None:
    Path(path).write_text(format_el(g), encoding="ascii", newline="\n")


def read_el(path) -> Graph:
    with open(path, "r", encoding="ascii", newline="\n") as fh:
        return parse_el(fh.read())


def format_sets(sets: dict[str, Iterable[int]]) -> str:
    out = []
    for name, vs in sets.items():
        members = " ".join(str(v) for v in sorted(vs))
        out.append(f"{name}: {members}".rstrip() + "\n")
    return "".join(out)


def parse_sets(text: str) -> dict[str, frozenset[int]]:
    sets = {}
    for i, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        name, sep, rest = line.partition(":")
        if not sep or not name.strip():
            raise InputFormatError(f"expected 'NAME: v1 v2 ...', got {line!r}", line=i)
        try:
            sets[name.strip()] = frozenset(int(tok) for tok in rest.split())
        except ValueError:
            raise InputFormatError(f"non-integer vertex in {line!r}", line=i) from None
    return sets


def write_sets(sets: dict[str, Iterable[int]], path) -> None:
    Path(path).write_text(format_sets(sets), encoding="ascii", newline="\n")


def read_sets(path) -> dict[str, frozenset[int]]:
    return parse_sets(Path(path).read_text(encoding="ascii"))


# -- cliques -------------------------------------------------------------

def degeneracy_order(g: Graph, within: int | None = None) -> list[int]:
    """Repeatedly remove a minimum-degree vertex (ties broken by id)."""
    alive = g.all_mask if within is None else within
    deg = {v: (g.rows[v] & alive).bit_count() for v in bits(alive)}
    order = []
    while deg:
        v = min(deg, key=lambda x: (deg[x], x))
        order.append(v)
        del deg[v]
        alive &= ~(1 << v)
        for u in bits(g.rows[v] & alive):
            deg[u] -= 1
    return order


def clique_masks(g: Graph, k: int, within: int | None = None) -> list[int]:
    """All k-cliques of ``g[within]`` as bitmasks (unordered)."""
    alive = g.all_mask if within is None else within
    if k <= 0:
        return []
    if k == 1:
        return [1 << v for v in bits(alive)]
    out = []
    rows = g.rows

    def extend(mask, cand, need):
        if need == 0:
            out.append(mask)
            return
        while cand.bit_count() >= need:
            low = cand & -cand
            v = low.bit_length() - 1
            cand ^= low
            extend(mask | low, cand & rows[v], need - 1)

    later = alive
    for v in degeneracy_order(g, alive):
        later &= ~(1 << v)
        cand = rows[v] & later
        if cand.bit_count() >= k - 1:
            extend(1 << v, cand, k - 1)
    return out


def enumerate_cliques(g: Graph, k: int) -> Iterator[tuple[int, ...]]:
    """Every k-clique exactly once, as sorted vertex tuples in lexicographic order."""
    if not 1 <= k:
        raise ParameterError("clique order must be positive")
    found = [tuple(bits(m)) for m in clique_masks(g, k)]
    found.sort()
    yield from found


def count_cliques(g: Graph, k: int, within: int | None = None) -> int:
    return len(clique_masks(g, k, within))


# -- induced embeddings -------------------------------------------------

def _pattern_order(f: Graph) -> list[int]:
    # connectivity-first order keeps candidate masks small early
    remaining = set(range(f.n))
    order = []
    while remaining:
        placed = mask_of(order)
        v = max(remaining, key=lambda x: ((f.rows[x] & placed).bit_count(), f.degree(x), -x))
        order.append(v)
        remaining.remove(v)
    return order


def count_embeddings(f: Graph, h: Graph, cap: int = MAX_PATTERN_VERTICES) -> int:
    """Number of injective maps V(f) -> V(h) with xy in E(f) iff their images are adjacent."""
    if f.n > cap:
        raise SizeLimitError(f"pattern has {f.n} vertices; the cap is {cap}")
    if f.n > h.n:
        return 0
    if f.n == 0:
        return 1
    order = _pattern_order(f)
    k = len(order)
    # for each position, which earlier positions are adjacent in f
    adj_before = [[f.has_edge(order[i], order[j]) for j in range(i)] for i in range(k)]
    rows = h.rows
    full = h.all_mask

    def rec(i, images, used):
        cand = full & ~used
        for j, img in enumerate(images):
            if adj_before[i][j]:
                cand &= rows[img]
            else:
                cand &= ~rows[img]
        if i == k - 1:
            return cand.bit_count()
        total = 0
        for v in bits(cand):
            total += rec(i + 1, images + [v], used | (1 << v))
        return total

    return rec(0, [], 0)


def automorphism_count(f: Graph) -> int:
    return count_embeddings(f, f)


def graph_classes(k: int) -> list[Graph]:
    """One representative per isomorphism class of graphs on k vertices (k <= 5)."""
    if k > 5:
        raise SizeLimitError("isomorphism class listing is limited to 5 vertices")
    pairs = list(itertools.combinations(range(k), 2))
    reps: list[Graph] = []
    seen = set()
    perms = list(itertools.permutations(range(k)))
    for bitsel in range(1 << len(pairs)):
        es = [pairs[i] for i in range(len(pairs)) if bitsel >> i & 1]
        canon = min(
            tuple(sorted(tuple(sorted((p[a], p[b]))) for a, b in es)) for p in perms
        )
        if canon in seen:
            continue
        seen.add(canon)
        reps.append(Graph.from_edges(k, list(canon)))
    reps.sort(key=lambda g: (g.m, sorted(g.degrees())))
    return reps


# -- even trails ---------------------------------------------------------

def even_trail(g: Graph, u: int, v: int, max_len: int = 8) -> list[int] | None:
    """Shortest even-length walk from u to v of length at most ``max_len``, or None.

    Breadth-first search over (vertex, parity) states; the result is a vertex
    sequence with consecutive vertices adjacent (vertices may repeat).
    """
    if not (0 <= u < g.n and 0 <= v < g.n):
        raise ParameterError("trail endpoints out of range")
    start = (u, 0)
    goal = (v, 0)
    prev = {start: None}
    dist = {start: 0}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        if state == goal:
            break
        d = dist[state]
        if d == max_len:
            continue
        x, par = state
        for y in bits(g.rows[x]):
            nxt = (y, par ^ 1)
            if nxt not in dist:
                dist[nxt] = d + 1
                prev[nxt] = state
                queue.append(nxt)
    if goal not in dist:
        return None
    walk = []
    state = goal
    while state is not None:
        walk.append(state[0])
        state = prev[state]
    return walk[::-1]


def triangle_repair_trail(g: Graph, u: int, v: int) -> list[int] | None:
    """Shortest u-v path, made even by appending a triangle through v when odd."""
    path = shortest_path(g, u, v)
    if path is None:
        return None
    if (len(path) - 1) % 2 == 0:
        return path
    nv = g.rows[v]
    for a in bits(nv):
        common = nv & g.rows[a]
        if common:
            b = lowest(common)
            return path + [a, b, v]
    return None


def shortest_path(g: Graph, u: int, v: int) -> list[int] | None:
    prev = {u: None}
    queue = deque([u])
    while queue:
        x = queue.popleft()
        if x == v:
            break
        for y in bits(g.rows[x]):
            if y not in prev:
                prev[y] = x
                queue.append(y)
    if v not in prev:
        return None
    out = []
    x = v
    while x is not None:
        out.append(x)
        x = prev[x]
    return out[::-1]


def is_valid_trail(g: Graph, walk: Sequence[int]) -> bool:
    return len(walk) >= 1 and all(g.has_edge(a, b) for a, b in zip(walk, walk[1:]))


def is_connected(g: Graph) -> bool:
    if g.n == 0:
        return True
    seen = 1
    frontier = 1
    while frontier:
        nxt = 0
        for v in bits(frontier):
            nxt |= g.rows[v]
        frontier = nxt & ~seen
        seen |= frontier
    return seen == g.all_mask


# -- regular pairs -------------------------------------------------------

@dataclass(frozen=True)
class RegularityVerdict:
    regular: bool
    mode: str  # "exhaustive" or "sampled"
    worst_deviation: float
    witness: tuple[tuple[int, ...], tuple[int, ...]] | None
    pairs_checked: int


def check_regular_pair(g: Graph, v1: Iterable[int], v2: Iterable[int], eps: float, d: float,
                       samples: int = 10_000, seed: int = 0,
                       exhaustive_limit: int = 16) -> RegularityVerdict:
    """Test whether (v1, v2) is (eps, d)-regular.

    Exhaustive when both sides have at most ``exhaustive_limit`` vertices: for
    every admissible X1, the extreme densities over X2 of each size are attained
    by the top/bottom vertices ranked by degree into X1.  Otherwise random
    sub-pairs of size ceil(eps*|Vi|) are sampled.
    """
    a = sorted(set(v1))
    b = sorted(set(v2))
    if not a or not b:
        raise ParameterError("both sides of a pair must be nonempty")
    if set(a) & set(b):
        raise ParameterError("the two sides of a pair must be disjoint")
    adj = g.adjacency_matrix()[np.ix_(a, b)].astype(np.int64)
    n1, n2 = len(a), len(b)
    k1 = max(1, math.ceil(eps * n1 - 1e-12))
    k2 = max(1, math.ceil(eps * n2 - 1e-12))

    if n1 <= exhaustive_limit and n2 <= exhaustive_limit:
        subsets = np.arange(1 << n1, dtype=np.int64)
        member = ((subsets[:, None] >> np.arange(n1)) & 1).astype(np.int64)
        sizes = member.sum(axis=1)
        keep = sizes >= k1
        member, sizes, subsets = member[keep], sizes[keep], subsets[keep]
        deg = member @ adj  # (num X1, n2): neighbours of each y inside X1
        order = np.sort(deg, axis=1)
        low = np.cumsum(order, axis=1)
        high = np.cumsum(order[:, ::-1], axis=1)
        sz2 = np.arange(1, n2 + 1)
        denom = sizes[:, None] * sz2[None, :]
        dev_hi = np.abs(high / denom - d)
        dev_lo = np.abs(low / denom - d)
        dev_hi[:, : k2 - 1] = -1
        dev_lo[:, : k2 - 1] = -1
        dev = np.maximum(dev_hi, dev_lo)
        flat = int(np.argmax(dev))
        i, j = divmod(flat, n2)
        worst = float(dev[i, j])
        x1 = tuple(a[t] for t in range(n1) if subsets[i] >> t & 1)
        use_high = dev_hi[i, j] >= dev_lo[i, j]
        ranked = np.argsort(deg[i], kind="stable")
        if use_high:
            ranked = ranked[::-1]
        x2 = tuple(sorted(b[t] for t in ranked[: j + 1]))
        checked = int(len(subsets)) * (n2 - k2 + 1)
        return RegularityVerdict(worst < eps, "exhaustive", worst, (x1, x2), checked)

    rng = np.random.default_rng(seed)
    worst = -1.0
    witness = None
    for _ in range(samples):
        s1 = rng.choice(n1, size=k1, replace=False)
        s2 = rng.choice(n2, size=k2, replace=False)
        dens = adj[np.ix_(s1, s2)].mean()
        dev = abs(dens - d)
        if dev > worst:
            worst = float(dev)
            witness = (tuple(sorted(a[t] for t in s1)), tuple(sorted(b[t] for t in s2)))
    return RegularityVerdict(worst < eps, "sampled", worst, witness, samples)
