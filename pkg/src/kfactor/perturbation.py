"""Seeded binomial perturbation with per-edge coupled uniforms.

Every unordered pair ``u < v`` gets a uniform ``U`` that is a pure function of
``(seed, round, u, v)``:

    h = mix64(seed)
    h = mix64(h ^ round)
    h = mix64(h ^ ((u << 32) | v))
    U = (h >> 11) * 2**-53

where ``mix64`` is the SplitMix64 finalizer (all arithmetic mod 2**64)::

    z += 0x9E3779B97F4A7C15
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z ^= z >> 31

The random graph of a round at probability ``p`` is ``{uv : U_uv < p}``, so
for a fixed seed and round the edge set only grows with ``p``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .graph import Graph, overlay

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MUL1 = 0xBF58476D1CE4E5B9
MUL2 = 0x94D049BB133111EB
TWO_M53 = 2.0 ** -53


def mix64(z: int) -> int:
    z = (z + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * MUL1) & MASK64
    z = ((z ^ (z >> 27)) * MUL2) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Seed of the ``index``-th trial under ``master_seed``."""
    return mix64(mix64(master_seed & MASK64) ^ mix64(index & MASK64))


def _round_state(seed: int, rnd: int) -> int:
    return mix64(mix64(seed & MASK64) ^ (rnd & MASK64))


def derive_uniform(seed: int, rnd: int, u: int, v: int) -> float:
    if not 0 <= u < v:
        raise ParameterError(f"derive_uniform needs 0 <= u < v, got u={u}, v={v}")
    h = mix64(_round_state(seed, rnd) ^ ((u << 32) | v))
    return (h >> 11) * TWO_M53


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = z + np.uint64(GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MUL1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MUL2)
    return z ^ (z >> np.uint64(31))


def uniforms_for_pairs(seed: int, rnd: int, us, vs) -> np.ndarray:
    """Vectorised ``derive_uniform`` over arrays of pairs (``us < vs`` assumed)."""
    us = np.asarray(us, dtype=np.uint64)
    vs = np.asarray(vs, dtype=np.uint64)
    with np.errstate(over="ignore"):
        key = (us << np.uint64(32)) | vs
        h = _mix64_np(np.uint64(_round_state(seed, rnd)) ^ key)
    return (h >> np.uint64(11)).astype(np.float64) * TWO_M53


def uniform_row(seed: int, rnd: int, u: int, n: int) -> np.ndarray:
    """Uniforms of the pairs ``(u, v)`` for ``v = u+1 .. n-1``."""
    vs = np.arange(u + 1, n, dtype=np.uint64)
    return uniforms_for_pairs(seed, rnd, np.full(len(vs), u, dtype=np.uint64), vs)


@dataclass(frozen=True)
class PerturbationPlan:
    seed: int
    rounds: int = 1

    def __post_init__(self):
        if self.rounds < 1:
            raise ParameterError("a plan needs at least one round")

    def uniform(self, rnd: int, u: int, v: int) -> float:
        if u > v:
            u, v = v, u
        return derive_uniform(self.seed, rnd, u, v)


def random_edges(n: int, p: float, plan: PerturbationPlan, rnd: int = 0) -> Graph:
    """The round's random graph ``{uv : U_uv < p}`` on ``n`` vertices."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"p={p} is not a probability")
    if not 0 <= rnd < plan.rounds:
        raise ParameterError(f"round {rnd} outside 0..{plan.rounds - 1}")
    rows = [0] * n
    if p <= 0.0 or n < 2:
        return Graph(n, rows)
    for u in range(n - 1):
        hit = np.flatnonzero(uniform_row(plan.seed, rnd, u, n) < p)
        for off in hit.tolist():
            v = u + 1 + off
            rows[u] |= 1 << v
            rows[v] |= 1 << u
    return Graph(n, rows)


def perturb(g: Graph, p: float, plan: PerturbationPlan, rnd: int = 0) -> Graph:
    """``g`` overlaid with the round's random graph at probability ``p``."""
    return overlay(g, random_edges(g.n, p, plan, rnd))


def non_edge_uniforms(g: Graph, plan: PerturbationPlan, rnd: int = 0):
    """Arrays ``(us, vs, U)`` over the non-edges of ``g``, sorted by ``U``.

    Adding the first ``j`` of these pairs to ``g`` reproduces ``perturb`` at any
    ``p`` in ``(U[j-1], U[j]]``.
    """
    us_all, vs_all = [], []
    for u in range(g.n - 1):
        row = g.rows[u] >> (u + 1)
        missing = [i for i in range(g.n - u - 1) if not row >> i & 1]
        us_all.extend([u] * len(missing))
        vs_all.extend(u + 1 + i for i in missing)
    us = np.asarray(us_all, dtype=np.int64)
    vs = np.asarray(vs_all, dtype=np.int64)
    if len(us) == 0:
        return us, vs, np.zeros(0)
    uni = uniforms_for_pairs(plan.seed, rnd, us, vs)
    order = np.argsort(uni, kind="stable")
    return us[order], vs[order], uni[order]
