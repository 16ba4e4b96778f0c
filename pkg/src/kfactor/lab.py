"""Experiment driver: trials, per-seed crossings, exponent fits and resumable sweeps."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .bounds import p_s
from .constructions import FAMILIES, build_host
from .errors import ConstructionError, ParameterError
from .factor import ABSENT, BUDGET, DEFAULT_BUDGET, FOUND, has_factor
from .graph import Graph
from .perturbation import PerturbationPlan, derive_seed, non_edge_uniforms, perturb

log = logging.getLogger(__name__)

SUCCESS = "success"
FAILURE = "failure"
UNDECIDED = "undecided"
CSV_COLUMNS = ["family", "n", "p", "trials", "successes", "budget_exhausted", "phat", "wilson_lo", "wilson_hi"]
DEFAULT_TOL = 0.02
UNUSABLE_FRACTION = 0.2
RECIPES = ("jump-r4s3", "s2-logn", "hs-boundary")


def fmt(x: float) -> str:
    return f"{x:.12g}"


def wilson(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    ph = successes / trials
    denom = 1 + z * z / trials
    centre = (ph + z * z / (2 * trials)) / denom
    half = z * math.sqrt(ph * (1 - ph) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def _host_seed(seed: int) -> int:
    return derive_seed(seed, 0)


def _plan(seed: int) -> PerturbationPlan:
    return PerturbationPlan(derive_seed(seed, 1))


def _factor_order(family: str, params: dict) -> int:
    if "r" not in params:
        raise ParameterError(f"family {family!r} needs an r parameter for factor trials")
    return int(params["r"])


@dataclass
class TrialOutcome:
    status: str
    reason: str = ""


def trial(family: str, n: int, p: float, seed: int, budget: int = DEFAULT_BUDGET, **params) -> TrialOutcome:
    """Build the host, perturb it at p with the trial's plan and decide a K_r-factor."""
    r = _factor_order(family, params)
    try:
        host = build_host(family, n=n, seed=_host_seed(seed), **params).graph
    except ConstructionError as exc:
        return TrialOutcome(UNDECIDED, f"construction failed: {exc}")
    res = has_factor(perturb(host, p, _plan(seed)), r, budget)
    return TrialOutcome({FOUND: SUCCESS, ABSENT: FAILURE, BUDGET: UNDECIDED}[res.status], res.reason)


# -- crossings -------------------------------------------------------------

@dataclass
class SeedCrossing:
    seed: int
    p_star: float | None
    p_lo: float | None
    status: str  # "ok", "discarded" or "undecided"
    reason: str = ""
    evaluations: int = 0


@dataclass
class CrossingEstimate:
    family: str
    n: int
    seeds: list[SeedCrossing] = field(default_factory=list)

    @property
    def values(self) -> list[float]:
        return [s.p_star for s in self.seeds if s.status == "ok"]

    def quartiles(self) -> tuple[float, float, float]:
        v = self.values
        if not v:
            return math.nan, math.nan, math.nan
        q1, med, q3 = np.percentile(v, [25, 50, 75]).tolist()
        return q1, med, q3

    @property
    def median(self) -> float:
        return self.quartiles()[1]

    def to_dict(self) -> dict:
        q1, med, q3 = self.quartiles()
        return {"family": self.family, "n": self.n, "median": med, "q1": q1, "q3": q3,
                "ok": len(self.values),
                "discarded": sum(s.status == "discarded" for s in self.seeds),
                "undecided": sum(s.status == "undecided" for s in self.seeds),
                "seeds": [{"seed": s.seed, "p_star": s.p_star, "p_lo": s.p_lo, "status": s.status,
                           "reason": s.reason, "evaluations": s.evaluations} for s in self.seeds]}


class _Monotone:
    """Outcomes by prefix length; asserts that failures all precede successes."""

    def __init__(self):
        self.max_fail = -1
        self.min_succ = math.inf

    def record(self, j: int, ok: bool):
        if ok:
            self.min_succ = min(self.min_succ, j)
        else:
            self.max_fail = max(self.max_fail, j)
        assert self.max_fail < self.min_succ, (
            f"non-monotone outcome: failure at {self.max_fail} edges, success at {self.min_succ}")


def seed_crossing(host: Graph, r: int, plan: PerturbationPlan, tol: float = DEFAULT_TOL,
                  budget: int = DEFAULT_BUDGET, seed: int = 0) -> SeedCrossing:
    """Smallest coupled p at which host + G(n, p) has a K_r-factor, to relative tolerance tol.

    The candidate values of p are the sorted non-edge uniforms; the search
    gallops over prefix lengths and then bisects.
    """
    us, vs, uni = non_edge_uniforms(host, plan)
    total = len(uni)
    rows_base = list(host.rows)
    mono = _Monotone()
    evals = 0

    def p_of(j: int) -> float:
        return 0.0 if j == 0 else float(uni[j - 1])

    def test(j: int):
        nonlocal evals
        rows = list(rows_base)
        for u, v in zip(us[:j].tolist(), vs[:j].tolist()):
            rows[u] |= 1 << v
            rows[v] |= 1 << u
        evals += 1
        res = has_factor(Graph(host.n, rows), r, budget)
        if res.status == BUDGET:
            return None
        ok = res.status == FOUND
        mono.record(j, ok)
        return ok

    at0 = test(0)
    if at0 is None:
        return SeedCrossing(seed, None, None, "undecided", "budget at p=0", evals)
    if at0:
        return SeedCrossing(seed, None, None, "discarded", "factor present at p=0", evals)
    at1 = test(total)
    if at1 is None:
        return SeedCrossing(seed, None, None, "undecided", "budget at p=1", evals)
    if not at1:
        return SeedCrossing(seed, None, None, "discarded", "no factor at p=1", evals)
    lo, hi = 0, total
    step = 16
    while step < hi:
        ok = test(step)
        if ok is None:
            return SeedCrossing(seed, None, None, "undecided", f"budget at {step} edges", evals)
        if ok:
            hi = step
            break
        lo = step
        step *= 2
    while hi - lo > 1 and (p_of(hi) - p_of(lo)) > tol * p_of(hi):
        mid = (lo + hi) // 2
        ok = test(mid)
        if ok is None:
            return SeedCrossing(seed, None, None, "undecided", f"budget at {mid} edges", evals)
        if ok:
            hi = mid
        else:
            lo = mid
    return SeedCrossing(seed, p_of(hi), p_of(lo), "ok", "", evals)


def _crossing_job(args):
    family, n, params, seed, tol, budget = args
    r = _factor_order(family, params)
    try:
        host = build_host(family, n=n, seed=_host_seed(seed), **params).graph
    except ConstructionError as exc:
        return SeedCrossing(seed, None, None, "undecided", f"construction failed: {exc}")
    return seed_crossing(host, r, _plan(seed), tol, budget, seed)


def crossing(family: str, n: int, seeds: int, tol: float = DEFAULT_TOL, budget: int = DEFAULT_BUDGET,
             master_seed: int = 0, workers: int = 1, **params) -> CrossingEstimate:
    if seeds < 1:
        raise ParameterError("need at least one seed")
    if not 0 < tol < 1:
        raise ParameterError("tol must lie in (0, 1)")
    jobs = [(family, n, params, derive_seed(master_seed, i), tol, budget) for i in range(seeds)]
    results = _run_jobs(_crossing_job, jobs, workers)
    return CrossingEstimate(family, n, results)


def _run_jobs(fn, jobs, workers: int):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


@dataclass
class ExponentFit:
    slope: float
    stderr: float
    intercept: float
    points: int


def fit_exponent(points) -> ExponentFit:
    """Least-squares slope of ln p* against ln n."""
    from scipy.stats import linregress

    pts = [(float(n), float(p)) for n, p in points]
    if len(pts) < 3 or len({n for n, _ in pts}) < 3:
        raise ParameterError("need at least three points with distinct n")
    if any(n <= 0 or p <= 0 for n, p in pts):
        raise ParameterError("n and p* must be positive")
    x = np.log([n for n, _ in pts])
    y = np.log([p for _, p in pts])
    res = linregress(x, y)
    stderr = float(res.stderr) if len(pts) > 2 else math.nan
    return ExponentFit(float(res.slope), stderr, float(res.intercept), len(pts))


# -- sweeps ----------------------------------------------------------------

@dataclass
class SweepRecord:
    family: str
    n: int
    p: str
    trials: int
    successes: int
    budget_exhausted: int

    @property
    def decided(self) -> int:
        return self.trials - self.budget_exhausted

    @property
    def phat(self) -> float:
        return self.successes / self.decided if self.decided else math.nan

    @property
    def unusable(self) -> bool:
        return self.budget_exhausted > UNUSABLE_FRACTION * self.trials

    def row(self) -> list[str]:
        lo, hi = wilson(self.successes, self.decided)
        phat = "nan" if not self.decided else fmt(self.phat)
        return [self.family, str(self.n), self.p, str(self.trials), str(self.successes),
                str(self.budget_exhausted), phat, fmt(lo), fmt(hi)]


@dataclass
class SweepConfig:
    families: list[dict]
    n: list[int]
    trials: int
    master_seed: int = 0
    budget: int = DEFAULT_BUDGET
    p: list[float] | None = None
    p_grid: dict | None = None
    workers: int = 1

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        known = {"families", "n", "trials", "master_seed", "budget", "p", "p_grid", "workers", "description"}
        extra = set(d) - known
        if extra:
            raise ParameterError(f"unknown config fields: {', '.join(sorted(extra))}")
        for key in ("families", "n", "trials"):
            if key not in d:
                raise ParameterError(f"config is missing {key!r}")
        cfg = cls(d["families"], [int(x) for x in d["n"]], int(d["trials"]), int(d.get("master_seed", 0)),
                  int(d.get("budget", DEFAULT_BUDGET)), d.get("p"), d.get("p_grid"), int(d.get("workers", 1)))
        cfg.validate()
        return cfg

    def validate(self):
        if self.trials < 1:
            raise ParameterError("trials must be at least 1")
        if (self.p is None) == (self.p_grid is None):
            raise ParameterError("give exactly one of 'p' and 'p_grid'")
        labels = set()
        for fam in self.families:
            if fam.get("family") not in FAMILIES:
                raise ParameterError(f"unknown family {fam.get('family')!r}")
            label = fam.get("label", fam["family"])
            if label in labels:
                raise ParameterError(f"duplicate family label {label!r}")
            labels.add(label)
            _factor_order(fam["family"], fam.get("params", {}))
        for p in self.p or []:
            if not 0 <= p <= 1:
                raise ParameterError(f"p={p} is not a probability")

    def grid(self, n: int) -> list[float]:
        if self.p is not None:
            return sorted(float(x) for x in self.p)
        s = int(self.p_grid["s"])
        return sorted(min(1.0, float(f) * p_s(n, s)) for f in self.p_grid["factors"])


def _sweep_job(args):
    family, params, n, ps, seed, budget, r = args
    try:
        host = build_host(family, n=n, seed=_host_seed(seed), **params).graph
    except ConstructionError:
        return [UNDECIDED] * len(ps)
    plan = _plan(seed)
    out = []
    for p in ps:
        res = has_factor(perturb(host, p, plan), r, budget)
        out.append({FOUND: SUCCESS, ABSENT: FAILURE, BUDGET: UNDECIDED}[res.status])
    return out


def _check_step(outcomes: list[str], where: str):
    seen_success = False
    for o in outcomes:
        if o == SUCCESS:
            seen_success = True
        elif o == FAILURE and seen_success:
            raise AssertionError(f"non-monotone outcomes {outcomes} for {where}")


def _read_existing(path: str) -> dict[tuple[str, int, str], list[str]]:
    if not os.path.exists(path):
        return {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return {}
        if header != CSV_COLUMNS:
            raise ParameterError(f"{path} has an unexpected header; refusing to resume")
        return {(row[0], int(row[1]), row[2]): row for row in reader if row}


def sweep(config: SweepConfig | dict, out_path: str, workers: int | None = None) -> list[SweepRecord]:
    """Run the grid, skipping cells already in ``out_path``; rewrite the CSV sorted."""
    cfg = config if isinstance(config, SweepConfig) else SweepConfig.from_dict(config)
    workers = cfg.workers if workers is None else workers
    existing = _read_existing(out_path)
    try:
        with open(out_path, "a"):
            pass
    except OSError as exc:
        raise ParameterError(f"cannot write {out_path}: {exc}") from exc
    jobs, keys = [], []
    for fam in cfg.families:
        family, params = fam["family"], dict(fam.get("params", {}))
        label = fam.get("label", family)
        r = _factor_order(family, params)
        for n in cfg.n:
            ps = [p for p in cfg.grid(n) if (label, n, fmt(p)) not in existing]
            if not ps:
                continue
            base = derive_seed(cfg.master_seed, n)
            for t in range(cfg.trials):
                jobs.append((family, params, n, ps, derive_seed(base, t), cfg.budget, r))
                keys.append((label, n, ps))
    outcomes = _run_jobs(_sweep_job, jobs, workers)
    cells: dict[tuple[str, int, str], list[int]] = {}
    for (label, n, ps), outs in zip(keys, outcomes):
        _check_step(outs, f"{label} n={n}")
        for p, o in zip(ps, outs):
            c = cells.setdefault((label, n, fmt(p)), [0, 0, 0])
            c[0] += 1
            c[1] += o == SUCCESS
            c[2] += o == UNDECIDED
    rows = dict(existing)
    for (label, n, p), (trials, succ, und) in cells.items():
        rows[(label, n, p)] = SweepRecord(label, n, p, trials, succ, und).row()
    ordered = sorted(rows.values(), key=lambda row: (row[0], int(row[1]), float(row[2])))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(ordered)
    with open(out_path, "w", newline="") as fh:
        fh.write(buf.getvalue())
    records = [SweepRecord(row[0], int(row[1]), row[2], int(row[3]), int(row[4]), int(row[5])) for row in ordered]
    for rec in records:
        if rec.unusable:
            log.warning("cell %s n=%d p=%s is unusable: %d of %d trials undecided",
                        rec.family, rec.n, rec.p, rec.budget_exhausted, rec.trials)
    return records


def read_sweep(path: str) -> list[SweepRecord]:
    rows = _read_existing(path)
    return [SweepRecord(r[0], int(r[1]), r[2], int(r[3]), int(r[4]), int(r[5])) for r in rows.values()]


def half_crossings(records: list[SweepRecord]) -> dict[str, list[tuple[int, float]]]:
    """Per family and n, the p at which phat first reaches 1/2 (log-linear interpolation)."""
    by: dict[tuple[str, int], list[SweepRecord]] = {}
    for rec in records:
        if rec.decided:
            by.setdefault((rec.family, rec.n), []).append(rec)
    out: dict[str, list[tuple[int, float]]] = {}
    for (fam, n), recs in sorted(by.items()):
        recs.sort(key=lambda r: float(r.p))
        prev = None
        for rec in recs:
            p = float(rec.p)
            if rec.phat >= 0.5:
                if prev is None or float(prev.p) <= 0 or p <= 0:
                    val = p
                else:
                    p0, f0 = float(prev.p), prev.phat
                    w = (0.5 - f0) / (rec.phat - f0)
                    val = math.exp(math.log(p0) + w * (math.log(p) - math.log(p0)))
                if val > 0:
                    out.setdefault(fam, []).append((n, val))
                break
            prev = rec
    return out


def load_recipe(name: str) -> dict:
    if name not in RECIPES:
        raise ParameterError(f"unknown recipe {name!r}; expected one of {', '.join(RECIPES)}")
    text = resources.files("kfactor").joinpath("recipes").joinpath(f"{name}.json").read_text()
    return json.loads(text)


def summarize(values: list[float]) -> dict:
    if not values:
        return {"count": 0}
    return {"count": len(values), "median": statistics.median(values), "min": min(values), "max": max(values)}
