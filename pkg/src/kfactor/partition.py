"""Extremal / non-extremal classification by sparse-set search and U/W shifting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .constructions import as_fraction, round_half_up
from .errors import ParameterError, RejectedInput
from .graph import Graph, bits, mask_of
from .perturbation import derive_seed

EXHAUSTIVE_LIMIT = 1_000_000
RESTARTS = 50


class VerificationError(AssertionError):
    """A refined partition failed its own verification (desk-scale constants too tight)."""

    def __init__(self, message: str, report: "CaseAVerdict"):
        super().__init__(message)
        self.report = report


@dataclass
class SparseSet:
    vertices: frozenset[int]
    edges: int
    exact: bool


@dataclass
class CaseAVerdict:
    ok: bool
    slack: dict[str, float]
    witness: dict[str, int | None] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "slack": self.slack, "witness": self.witness}


@dataclass
class Classification:
    verdict: str  # "CaseA" or "CaseB"
    alpha: float
    beta: float
    gamma: float
    A1: frozenset[int] | None = None
    A2: frozenset[int] | None = None
    witness: frozenset[int] | None = None
    witness_edges: int | None = None
    exact: bool = True
    caveat: str = ""
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"verdict": self.verdict, "alpha": self.alpha, "beta": self.beta, "gamma": self.gamma,
               "exact": self.exact, "caveat": self.caveat, **self.info}
        if self.A1 is not None:
            out["A1"] = sorted(self.A1)
            out["A2"] = sorted(self.A2)
        if self.witness is not None:
            out["witness"] = sorted(self.witness)
            out["witness_edges"] = self.witness_edges
        return out


def _exhaustive_min(adj: np.ndarray, n: int, k: int) -> tuple[tuple[int, ...], int]:
    best, best_e = None, None
    combos = combinations(range(n), k)
    chunk = 20000
    while True:
        block = np.array([c for _, c in zip(range(chunk), combos)], dtype=np.int64)
        if len(block) == 0:
            break
        # internal edges of every set in the block
        sub = adj[block[:, :, None], block[:, None, :]]
        e = sub.sum(axis=(1, 2)) // 2
        i = int(np.argmin(e))
        if best_e is None or e[i] < best_e:
            best, best_e = tuple(block[i].tolist()), int(e[i])
    return best, best_e


def _local_search(adj: np.ndarray, n: int, k: int, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    inside = np.zeros(n, dtype=bool)
    inside[rng.choice(n, size=k, replace=False)] = True
    a = adj.astype(np.int64)
    while True:
        deg_in = a[:, inside].sum(axis=1)  # neighbours inside the set, for every vertex
        members = np.flatnonzero(inside)
        others = np.flatnonzero(~inside)
        if len(others) == 0 or len(members) == 0:
            break
        # swapping u out and v in changes e(X) by deg_in[v] - deg_in[u] - adj[u, v]
        gain = deg_in[others][None, :] - deg_in[members][:, None] - a[np.ix_(members, others)]
        i, j = np.unravel_index(int(np.argmin(gain)), gain.shape)
        if gain[i, j] >= 0:
            break
        inside[members[i]] = False
        inside[others[j]] = True
    members = np.flatnonzero(inside)
    return members, int(a[np.ix_(members, members)].sum() // 2)


def find_sparse_set(g: Graph, k: int, budget: int = EXHAUSTIVE_LIMIT, restarts: int = RESTARTS,
                    seed: int = 0) -> SparseSet:
    """A k-set with few internal edges: exact when C(n, k) <= budget, otherwise swap descent."""
    n = g.n
    if not 0 <= k <= n:
        raise ParameterError(f"k={k} outside 0..{n}")
    if k == 0:
        return SparseSet(frozenset(), 0, True)
    adj = g.adjacency_matrix().astype(np.int8)
    if math.comb(n, k) <= budget:
        best, e = _exhaustive_min(adj, n, k)
        return SparseSet(frozenset(best), e, True)
    best_set, best_e = None, None
    for i in range(restarts):
        members, e = _local_search(adj, n, k, np.random.default_rng(derive_seed(seed, i)))
        if best_e is None or e < best_e:
            best_set, best_e = members, e
    return SparseSet(frozenset(best_set.tolist()), best_e, False)


def verify_case_a(g: Graph, A1, A2, alpha: float, beta: float, gamma: float) -> CaseAVerdict:
    """Exact check of the three Case A conditions and the size window, with worst slacks."""
    n = g.n
    m1, m2 = mask_of(A1), mask_of(A2)
    if m1 & m2 or m1 | m2 != g.all_mask:
        raise ParameterError("A1 and A2 must partition the vertex set")
    slack: dict[str, float] = {}
    witness: dict[str, int | None] = {}
    worst, wv = math.inf, None
    for x in bits(m1):
        miss = (m2 & ~g.rows[x]).bit_count()
        if 4 * beta * n - miss < worst:
            worst, wv = 4 * beta * n - miss, x
    slack["i"], witness["i"] = (worst if wv is not None else math.inf), wv
    worst, wv = math.inf, None
    for x in bits(m2):
        have = (g.rows[x] & m1).bit_count()
        if have - beta * n < worst:
            worst, wv = have - beta * n, x
    slack["ii"], witness["ii"] = (worst if wv is not None else math.inf), wv
    missing = sum((m2 & ~g.rows[x]).bit_count() for x in bits(m1))
    slack["iii"] = gamma * n * n - missing
    slack["size"] = gamma * n - abs(m1.bit_count() - (1 - alpha) * n)
    ok = all(v >= 0 for v in slack.values())
    return CaseAVerdict(ok, slack, witness)


def _check_parameters(alpha, beta, gamma):
    if not 8 * gamma < beta < (1 - alpha) / 5:
        raise ParameterError(f"need 8*gamma < beta < (1-alpha)/5, got alpha={alpha}, beta={beta}, gamma={gamma}")


def refine_partition(g: Graph, X, alpha: float, beta: float, gamma: float) -> Classification:
    """Shift the high co-degree vertices U out of X, then the poorly attached W into it."""
    _check_parameters(alpha, beta, gamma)
    n = g.n
    x_mask = mask_of(X)
    if x_mask.bit_count() != round_half_up((1 - as_fraction(alpha)) * n):
        raise ParameterError("|X| must equal round((1 - alpha) n)")
    e_x = g.edges_within(x_mask)
    if e_x >= gamma * gamma * n * n:
        raise RejectedInput(f"e(X) = {e_x} is not below gamma^2 n^2 = {gamma * gamma * n * n:.2f}")
    y_mask = g.all_mask & ~x_mask
    info = {"e_X": e_x}
    direct = verify_case_a(g, bits(x_mask), bits(y_mask), alpha, beta, gamma)
    if direct.ok:
        info.update(U=0, W=0, shortcut=True)
        return Classification("CaseA", alpha, beta, gamma, frozenset(bits(x_mask)), frozenset(bits(y_mask)),
                              info={**info, "slack": direct.slack})
    U = [x for x in bits(x_mask) if (y_mask & ~g.rows[x]).bit_count() > 2 * beta * n]
    info["U"] = len(U)
    if len(U) >= gamma * n / 8:
        return Classification("CaseB", alpha, beta, gamma, witness=frozenset(bits(x_mask)), witness_edges=e_x,
                              exact=False, caveat=f"refinement aborted: |U| = {len(U)} >= gamma n / 8",
                              info=info)
    x1 = x_mask & ~mask_of(U)
    y1 = y_mask | mask_of(U)
    W = [y for y in bits(y1) if (g.rows[y] & x1).bit_count() < beta * n]
    info["W"] = len(W)
    x2 = x1 | mask_of(W)
    y2 = y1 & ~mask_of(W)
    verdict = verify_case_a(g, bits(x2), bits(y2), alpha, beta, gamma)
    if not verdict.ok:
        raise VerificationError(f"refined partition fails verification: {verdict.slack}", verdict)
    return Classification("CaseA", alpha, beta, gamma, frozenset(bits(x2)), frozenset(bits(y2)),
                          info={**info, "slack": verdict.slack, "shortcut": False})


def classify(g: Graph, alpha: float, beta: float, gamma: float, budget: int = EXHAUSTIVE_LIMIT,
             seed: int = 0, restarts: int = RESTARTS) -> Classification:
    n = g.n
    k = round_half_up((1 - as_fraction(alpha)) * n)
    found = find_sparse_set(g, k, budget, restarts, seed)
    if found.edges < gamma * gamma * n * n:
        res = refine_partition(g, found.vertices, alpha, beta, gamma)
        res.info["k"] = k
        return res
    caveat = "" if found.exact else "heuristic search: a sparser set may exist"
    return Classification("CaseB", alpha, beta, gamma, witness=found.vertices, witness_edges=found.edges,
                          exact=found.exact, caveat=caveat, info={"k": k})
