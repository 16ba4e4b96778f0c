"""Command-line interface; every command prints JSON (or writes CSV) deterministically."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from fractions import Fraction

from . import bounds
from .constructions import FAMILIES, build_host
from .errors import KFactorError, ParameterError
from .extremal import compose_cover, cover_or_sparse
from .factor import ABSENT, BUDGET, DEFAULT_BUDGET, FOUND, count_factors, has_factor
from .graph import read_el, read_sets, write_el, write_sets
from .harvest import HarvestInstance, harvest
from .lab import (CSV_COLUMNS, DEFAULT_TOL, RECIPES, SweepConfig, crossing, fit_exponent, half_crossings,
                  load_recipe, read_sweep, sweep)
from .partition import classify
from .perturbation import PerturbationPlan, perturb
from .spread import k2star_packing, verify_spread, verify_xcover, x_cover_process

EXIT_ERROR = 3


def _default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True, indent=2, default=_default) + "\n")


def cmd_construct(a) -> int:
    spec = build_host(a.family, n=a.n, r=a.r, s=a.s, t=a.t, m=a.m, gamma=a.gamma, seed=a.seed,
                      max_retries=a.max_retries, a=a.a, b=a.b, p=a.p)
    write_el(spec.graph, a.output)
    if spec.sets:
        write_sets(spec.sets, a.output + ".sets")
    emit({"family": spec.family, "params": spec.params, "n": spec.graph.n, "m": spec.graph.m,
          "min_degree": spec.graph.min_degree(), "sets": {k: len(v) for k, v in spec.sets.items()},
          "info": spec.info})
    return 0


def cmd_bounds(a) -> int:
    if a.which == "phi":
        f = bounds.phi(a.s)
        emit({"s": a.s, "phi": str(f), "value": float(f)})
    elif a.which == "ps":
        emit({"n": a.n, "s": a.s, "p_s": bounds.p_s(a.n, a.s)})
    elif a.mode == "ks":
        emit(bounds.expected_ks_count(a.n, a.p, a.s).to_dict())
    elif a.mode == "harvest":
        emit(bounds.harvest_moments(a.n, a.g, a.s, a.C, a.delta).to_dict())
    else:
        emit({"n": a.n, "nu": a.nu, "s": a.s, "C": a.C, "exponent": bounds.divb_bound(a.n, a.nu, a.s, a.C)})
    return 0


def cmd_perturb(a) -> int:
    g = read_el(a.input)
    plan = PerturbationPlan(a.seed, a.round + 1)
    out = perturb(g, a.p, plan, a.round)
    write_el(out, a.output)
    emit({"n": out.n, "m_before": g.m, "m_after": out.m, "p": a.p, "seed": a.seed, "round": a.round})
    return 0


def cmd_factor(a) -> int:
    g = read_el(a.input)
    res = has_factor(g, a.r, a.budget, a.method)
    out = res.to_dict()
    if a.count:
        out["count"] = count_factors(g, a.r)
    emit(out)
    return {FOUND: 0, ABSENT: 1, BUDGET: 2}[res.status]


def cmd_cover(a) -> int:
    g = read_el(a.input)
    if a.compose:
        res = compose_cover(g, a.r, a.s, a.delta, seed=a.seed, C=a.C)
    else:
        res = cover_or_sparse(g, a.r, a.s, a.delta, C=a.C)
    emit(res.to_dict())
    return 0


def cmd_harvest(a) -> int:
    g = read_el(a.input)
    regime = {"greedy": "greedy-large-g"}.get(a.regime, a.regime)
    res = harvest(HarvestInstance(g, a.g, a.s, a.p, PerturbationPlan(a.seed), regime, a.delta))
    emit(res.to_dict())
    return 0 if res.ok else 1


def cmd_spread(a) -> int:
    from .constructions import complete_multipartite

    host = complete_multipartite([a.n, a.n])
    q = 4 * a.C / a.n
    rep = verify_spread(host, range(a.n), range(a.n, 2 * a.n), a.C, q, a.trials, seed=a.seed,
                        pairs=a.pairs, pair_factor=a.pair_factor)
    emit({"n": a.n, "C": a.C, "q": q, **rep.to_dict()})
    return 0 if not rep.flags else 1


def cmd_pack(a) -> int:
    emit(k2star_packing(a.s, a.t).to_dict())
    return 0


def cmd_xcover(a) -> int:
    g = read_el(a.input)
    sets = read_sets(a.sets)
    if a.set not in sets:
        raise ParameterError(f"set {a.set!r} not found in {a.sets}")
    xs = sorted(sets[a.set])
    if a.count is not None:
        xs = xs[:a.count]
    res = x_cover_process(g, xs, a.m, a.s, a.t, a.seed)
    out = res.to_dict()
    out["problems"] = verify_xcover(g, xs, res, a.m, a.s, a.t)
    out["X"] = xs
    emit(out)
    return 0 if res.ok else 1


def cmd_classify(a) -> int:
    g = read_el(a.input)
    emit(classify(g, a.alpha, a.beta, a.gamma, a.budget, seed=a.seed).to_dict())
    return 0


def cmd_sweep(a) -> int:
    if (a.config is None) == (a.recipe is None):
        raise ParameterError("give exactly one of --config and --recipe")
    if a.config:
        with open(a.config) as fh:
            cfg = json.load(fh)
    else:
        cfg = load_recipe(a.recipe)
    cfg = {k: v for k, v in cfg.items() if k != "description"}
    records = sweep(SweepConfig.from_dict(cfg), a.output, workers=a.workers)
    emit({"rows": len(records), "output": a.output,
          "unusable": [[r.family, r.n, r.p] for r in records if r.unusable]})
    return 0


def cmd_crossing(a) -> int:
    params = {"r": a.r}
    if a.family in ("f-gamma", "pseudorandom-lower"):
        params["s"] = a.s
    if a.family == "f-gamma":
        params["gamma"] = a.gamma
    est = crossing(a.family, a.n, a.seeds, a.tol, a.budget, a.seed, a.workers, **params)
    if a.output:
        with open(a.output, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["family", "n", "seed", "p_star", "p_lo", "status"])
            for s in est.seeds:
                w.writerow([a.family, a.n, s.seed, "" if s.p_star is None else repr(s.p_star),
                            "" if s.p_lo is None else repr(s.p_lo), s.status])
    emit(est.to_dict())
    return 0


def cmd_fit(a) -> int:
    with open(a.input, newline="") as fh:
        header = next(csv.reader(fh), [])
    groups: dict[str, list[tuple[int, float]]] = {}
    if header == CSV_COLUMNS:
        groups = half_crossings(read_sweep(a.input))
    elif "p_star" in header:
        with open(a.input, newline="") as fh:
            for row in csv.DictReader(fh):
                if row["p_star"]:
                    groups.setdefault(row.get("family", ""), []).append((int(row["n"]), float(row["p_star"])))
    else:
        raise ParameterError(f"{a.input} is neither a sweep CSV nor a crossing CSV")
    out = {}
    for fam, pts in sorted(groups.items()):
        try:
            fit = fit_exponent(pts)
            out[fam] = {"slope": fit.slope, "stderr": fit.stderr, "intercept": fit.intercept, "points": fit.points}
        except ParameterError as exc:
            out[fam] = {"error": str(exc), "points": len(pts)}
    emit(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kfactor", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build a host graph and write it as an edge list")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--r", type=int, default=0)
    p.add_argument("--s", type=int, default=0)
    p.add_argument("--t", type=int, default=0)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--a", type=int, default=0, help="first class size (bipartite-random)")
    p.add_argument("--b", type=int, default=0, help="second class size (bipartite-random)")
    p.add_argument("--p", type=float, default=0.0, help="edge probability (bipartite-random)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-retries", type=int, default=20)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("bounds", help="threshold formulas and moment bounds")
    bsub = p.add_subparsers(dest="which", required=True)
    q = bsub.add_parser("phi")
    q.add_argument("--s", type=int, required=True)
    q = bsub.add_parser("ps")
    q.add_argument("--n", type=float, required=True)
    q.add_argument("--s", type=int, required=True)
    q = bsub.add_parser("janson")
    q.add_argument("--mode", choices=("ks", "harvest", "divb"), required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--s", type=int, required=True)
    q.add_argument("--p", type=float, default=0.0, help="edge probability (ks)")
    q.add_argument("--g", type=int, default=1, help="target count (harvest)")
    q.add_argument("--C", type=float, default=1.0, help="multiple of p_s (harvest, divb)")
    q.add_argument("--delta", type=float, default=None, help="degree fraction (harvest)")
    q.add_argument("--nu", type=float, default=0.0, help="density fraction (divb)")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("perturb", help="overlay the coupled random graph G(n, p)")
    p.add_argument("--input", required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--round", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("factor", help="decide a K_r-factor (exit 0 found, 1 none, 2 budget)")
    p.add_argument("--input", required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--method", choices=("auto", "search", "milp"), default="auto")
    p.add_argument("--count", action="store_true", help="also count all factors (n <= 16)")
    p.set_defaults(func=cmd_factor)

    p = sub.add_parser("cover", help="K_2/Q cover or sparse set by local search")
    p.add_argument("--input", required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--C", type=int, default=None, help="leftover constant (default 2(s+t)^2)")
    p.add_argument("--compose", action="store_true", help="build an absorber first")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_cover)

    p = sub.add_parser("harvest", help="g disjoint K_{s+1} copies in the perturbed graph")
    p.add_argument("--input", required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--g", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--regime", choices=("auto", "main-WF", "greedy", "small-g"), default="auto")
    p.add_argument("--delta", type=float, default=0.1, help="high-degree peel fraction")
    p.set_defaults(func=cmd_harvest)

    p = sub.add_parser("spread-test", help="Monte Carlo spread check of mu_C on K_{n,n}")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--C", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--pairs", type=int, default=2000)
    p.add_argument("--pair-factor", type=float, default=1.5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_spread)

    p = sub.add_parser("pack", help="residue-zero K_2* packing of Q(s, t)")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("xcover", help="sequential random cover of X by B_{m,s,t} copies")
    p.add_argument("--input", required=True)
    p.add_argument("--sets", required=True)
    p.add_argument("--set", default="A", help="name of the set holding X")
    p.add_argument("--count", type=int, default=None, help="use only the first COUNT vertices of the set")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_xcover)

    p = sub.add_parser("classify", help="extremal / non-extremal classification")
    p.add_argument("--input", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--budget", type=int, default=1_000_000, help="largest C(n, k) searched exhaustively")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sweep", help="success-rate grid written as CSV (resumable)")
    p.add_argument("--config")
    p.add_argument("--recipe", choices=RECIPES)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("crossing", help="per-seed crossing points by gallop and bisection")
    p.add_argument("--family", required=True, choices=("f-gamma", "multipartite-s2", "pseudorandom-lower", "hs-tight"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--s", type=int, default=0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--seeds", type=int, required=True)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output", help="also write per-seed crossings as CSV")
    p.set_defaults(func=cmd_crossing)

    p = sub.add_parser("fit", help="exponent fit from a sweep or crossing CSV")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_fit)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except KFactorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
