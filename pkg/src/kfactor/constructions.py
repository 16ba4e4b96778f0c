"""Host graph generators: extremal hosts, lower-bound hosts and small gadgets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bounds import phi
from .errors import ConstructionError, ParameterError
from .graph import Graph, bits, clique_masks, count_embeddings, graph_classes, mask_of
from .perturbation import derive_seed, uniforms_for_pairs

FAMILIES = ("f-gamma", "multipartite-s2", "pseudorandom-lower", "hs-tight", "q-graph", "b-mst",
            "bipartite-random")


def round_half_up(x) -> int:
    """Round a real (or Fraction) to the nearest integer, halves going up."""
    return math.floor(Fraction(x) + Fraction(1, 2))


def as_fraction(x) -> Fraction:
    # decimal literals such as 0.1 are meant exactly, not as their binary float
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass
class HostSpec:
    family: str
    params: dict
    graph: Graph
    sets: dict[str, frozenset[int]] = field(default_factory=dict)
    info: dict = field(default_factory=dict)


def _complete_except_inside(n: int, inside: int, inner_rows) -> Graph:
    """Every pair is an edge except pairs inside ``inside``, which follow ``inner_rows``."""
    full = (1 << n) - 1
    rows = []
    for v in range(n):
        if inside >> v & 1:
            rows.append(((full & ~inside) | inner_rows[v]) & ~(1 << v))
        else:
            rows.append(full & ~(1 << v))
    return Graph(n, rows)


def f_gamma(n: int, r: int, s: int, gamma) -> tuple[Graph, frozenset[int]]:
    """Independent set A of size round((s/r - gamma) n) on vertices 0..|A|-1, all other pairs edges."""
    g = as_fraction(gamma)
    if n < 1 or r < 1 or s < 0:
        raise ParameterError("need n >= 1, r >= 1, s >= 0")
    if not 0 <= g < Fraction(1, r):
        raise ParameterError(f"gamma={gamma} must satisfy 0 <= gamma < 1/r")
    size = round_half_up((Fraction(s, r) - g) * n)
    if not 0 <= size <= n:
        raise ParameterError(f"|A|={size} is outside 0..{n}")
    a_mask = (1 << size) - 1
    graph = _complete_except_inside(n, a_mask, [0] * n)
    return graph, frozenset(range(size))


def multipartite_s2(n: int, r: int) -> Graph:
    """Complete multipartite: floor(r/2) classes of 2n/r, plus one of n/r when r is odd."""
    if r < 3:
        raise ParameterError("multipartite_s2 needs r >= 3")
    if n % r:
        raise ParameterError(f"n={n} is not divisible by r={r}")
    sizes = [2 * n // r] * (r // 2) + ([n // r] if r % 2 else [])
    return complete_multipartite(sizes)


def complete_multipartite(sizes) -> Graph:
    n = sum(sizes)
    full = (1 << n) - 1
    rows = []
    start = 0
    for size in sizes:
        cls = ((1 << size) - 1) << start
        rows.extend([full & ~cls] * size)
        start += size
    return Graph(n, rows)


def hs_tight(n: int, r: int) -> tuple[Graph, frozenset[int]]:
    """Independent set of size n/r + 1 (vertices 0..n/r), every other pair an edge."""
    if r < 1 or n % r:
        raise ParameterError(f"n={n} is not divisible by r={r}")
    size = n // r + 1
    if size > n:
        raise ParameterError("n/r + 1 exceeds n")
    graph = _complete_except_inside(n, (1 << size) - 1, [0] * n)
    return graph, frozenset(range(size))


def q_graph(s: int, t: int) -> tuple[Graph, frozenset[int], frozenset[int], frozenset[int]]:
    """L = 0..s-t-1, M = next t, N = last t; L-M complete, m_i n_i matched."""
    if not 1 <= t <= s:
        raise ParameterError("q_graph needs 1 <= t <= s")
    ls = list(range(s - t))
    ms = list(range(s - t, s))
    ns = list(range(s, s + t))
    edges = [(l, m) for l in ls for m in ms] + list(zip(ms, ns))
    g = Graph.from_edges(s + t, sorted(edges))
    return g, frozenset(ls), frozenset(ms), frozenset(ns)


def b_mst(m: int, s: int, t: int) -> Graph:
    """Complete (m+1)-partite graph with m classes of size s and one of size t."""
    if m < 1 or not 0 <= t <= s:
        raise ParameterError("b_mst needs m >= 1 and t <= s")
    return complete_multipartite([s] * m + [t])


def bipartite_random(a: int, b: int, p: float, seed: int) -> Graph:
    """Classes 0..a-1 and a..a+b-1; cross pair uv present iff its coupled uniform is below p."""
    if a < 1 or b < 1:
        raise ParameterError("both classes must be nonempty")
    if not 0 <= p <= 1:
        raise ParameterError(f"p={p} is not a probability")
    n = a + b
    rows = [0] * n
    if p > 0:
        us = np.repeat(np.arange(a), b)
        vs = np.tile(np.arange(a, n), a)
        hit = uniforms_for_pairs(seed, 0, us, vs) < p
        for u, v in zip(us[hit].tolist(), vs[hit].tolist()):
            rows[u] |= 1 << v
            rows[v] |= 1 << u
    return Graph(n, rows)


# -- the lower-bound host -------------------------------------------------

def lower_bound_k(n: int, s: int) -> int:
    return round_half_up(n ** (1 - float(phi(s))))


def g4_bounds(h: Graph, k: int, s: int) -> list[tuple[Graph, int, float]]:
    """(F, induced count in h, normalised count / (N^v (k/N)^e)) for every F on s+1 vertices."""
    big_n = h.n
    out = []
    for f in graph_classes(s + 1):
        cnt = count_embeddings(f, h)
        scale = big_n ** f.n * (k / big_n) ** f.m
        out.append((f, cnt, cnt / scale))
    return out


def g4_constant(s: int) -> float:
    """Slack times the expectation constant: E|Emb(F)| <= 3^e(F) N^v (k/N)^e for the sample."""
    return 4.0 * 3 ** math.comb(s + 1, 2)


def _repair_min_degree(h: Graph, a: int, k: int, rng: np.random.Generator) -> tuple[Graph, int]:
    """Add random cross edges until every vertex has degree >= k (stays bipartite)."""
    rows = list(h.rows)
    n = h.n
    left = (1 << a) - 1
    right = ((1 << n) - 1) & ~left
    added = 0
    for v in range(n):
        other = right if v < a else left
        while rows[v].bit_count() < k:
            free = list(bits(other & ~rows[v]))
            if not free:
                break
            u = free[int(rng.integers(len(free)))]
            rows[v] |= 1 << u
            rows[u] |= 1 << v
            added += 1
    return Graph(n, rows), added


def pseudorandom_lower(n: int, r: int, s: int, seed: int, max_retries: int = 20,
                       repair: bool = True):
    """Lower-bound host: A = 0..|A|-1 with |A| = sn/r + k, G[A] a sparse random bipartite graph.

    Returns ``(graph, A, L_used, info)``.  The bipartite sample has edge
    probability 3k/|A|; low-degree vertices are topped up to degree k with
    random cross edges when ``repair`` is set, then the embedding-count
    condition is checked for every graph on s+1 vertices.
    """
    if not 3 <= s < r:
        raise ParameterError("pseudorandom_lower needs 3 <= s < r")
    if n % r:
        raise ParameterError(f"n={n} is not divisible by r={r}")
    k = lower_bound_k(n, s)
    if k < 2:
        raise ParameterError(f"n={n} is too small: k={k} < 2")
    size = s * n // r + k
    if size > n:
        raise ParameterError(f"|A|={size} exceeds n={n}")
    a, b = (size + 1) // 2, size // 2
    p = 3 * k / size
    limit = g4_constant(s)
    failures = {"G2": 0, "G4": 0}
    for attempt in range(max_retries):
        sub_seed = derive_seed(seed, attempt)
        h = bipartite_random(a, b, p, sub_seed)
        added = 0
        if repair:
            h, added = _repair_min_degree(h, a, k, np.random.default_rng(sub_seed))
        if h.min_degree() < k:
            failures["G2"] += 1
            continue
        table = g4_bounds(h, k, s)
        l_used = max(ratio for _, _, ratio in table)
        if l_used > limit:
            failures["G4"] += 1
            continue
        a_mask = (1 << size) - 1
        graph = _complete_except_inside(n, a_mask, list(h.rows) + [0] * (n - size))
        info = {"k": k, "A_size": size, "bipartite_p": p, "attempts": attempt + 1,
                "repair_edges": added, "L_limit": limit, "L_used": l_used}
        return graph, frozenset(range(size)), l_used, info
    worst = max(failures, key=failures.get)
    raise ConstructionError(
        f"pseudorandom_lower: {max_retries} retries exhausted; condition {worst} failed most often",
        diagnostics=failures)


def check_lower_bound_host(graph: Graph, a_set, n: int, r: int, s: int) -> dict:
    """Exact recheck of the four lower-bound host properties on a realised graph."""
    k = lower_bound_k(n, s)
    a_mask = mask_of(a_set)
    h, _ = graph.induced(a_set)
    outside_complete = all(
        graph.rows[v] | (1 << v) == graph.all_mask for v in range(graph.n) if not a_mask >> v & 1)
    table = g4_bounds(h, k, s)
    return {
        "G1_delta": graph.min_degree(),
        "G1_ok": graph.min_degree() >= (1 - Fraction(s, r)) * n,
        "G2_ok": h.min_degree() >= k,
        "G3_ok": not clique_masks(h, s + 1),
        "G4_L": max(ratio for _, _, ratio in table),
        "G4_ok": max(ratio for _, _, ratio in table) <= g4_constant(s),
        "outside_complete": outside_complete,
    }


def build_host(family: str, n: int = 0, r: int = 0, s: int = 0, t: int = 0, m: int = 0,
               gamma=0.0, seed: int = 0, max_retries: int = 20, a: int = 0, b: int = 0,
               p: float = 0.0) -> HostSpec:
    """Dispatch by family name; records realised set sizes alongside the graph."""
    if family == "f-gamma":
        g, a_set = f_gamma(n, r, s, gamma)
        return HostSpec(family, dict(n=n, r=r, s=s, gamma=gamma), g, {"A": a_set},
                        {"A_size": len(a_set)})
    if family == "multipartite-s2":
        return HostSpec(family, dict(n=n, r=r), multipartite_s2(n, r))
    if family == "pseudorandom-lower":
        g, a_set, l_used, info = pseudorandom_lower(n, r, s, seed, max_retries)
        return HostSpec(family, dict(n=n, r=r, s=s, seed=seed), g, {"A": a_set}, info)
    if family == "hs-tight":
        g, a_set = hs_tight(n, r)
        return HostSpec(family, dict(n=n, r=r), g, {"A": a_set}, {"A_size": len(a_set)})
    if family == "q-graph":
        g, ls, ms, ns = q_graph(s, t)
        return HostSpec(family, dict(s=s, t=t), g, {"L": ls, "M": ms, "N": ns})
    if family == "b-mst":
        return HostSpec(family, dict(m=m, s=s, t=t), b_mst(m, s, t))
    if family == "bipartite-random":
        g = bipartite_random(a, b, p, seed)
        return HostSpec(family, dict(a=a, b=b, p=p, seed=seed), g,
                        {"A": frozenset(range(a)), "B": frozenset(range(a, a + b))})
    raise ParameterError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
