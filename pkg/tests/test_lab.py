import csv
import json
import math

import numpy as np
import pytest

from kfactor.constructions import build_host
from kfactor.errors import ParameterError
from kfactor.factor import has_factor
from kfactor.lab import (CSV_COLUMNS, FAILURE, SUCCESS, SweepConfig, crossing, fit_exponent, half_crossings,
                         load_recipe, read_sweep, seed_crossing, sweep, trial, wilson)
from kfactor.perturbation import PerturbationPlan, derive_seed, perturb


def test_trial_examples():
    assert trial("hs-tight", 12, 0.0, seed=1, r=3).status == FAILURE
    assert trial("hs-tight", 12, 1.0, seed=1, r=3).status == SUCCESS
    wins = sum(trial("f-gamma", 24, 0.5, seed=i, r=4, s=2, gamma=0.1).status == SUCCESS for i in range(100))
    assert wins >= 99


def test_crossing_brackets_hs_tight():
    est = crossing("hs-tight", 12, 30, master_seed=3, r=3)
    host = build_host("hs-tight", n=12, r=3).graph
    assert len(est.values) == 30
    for sc in est.seeds:
        assert 0 < sc.p_star <= 1
        assert sc.p_lo < sc.p_star
        assert (sc.p_star - sc.p_lo) <= 0.02 * sc.p_star or sc.evaluations > 0
        plan = PerturbationPlan(derive_seed(sc.seed, 1))
        assert has_factor(perturb(host, np.nextafter(sc.p_star, 1.0), plan), 3).found
        assert not has_factor(perturb(host, sc.p_lo, plan), 3).found


def test_seed_crossing_discards_hosts_with_a_factor():
    host = build_host("f-gamma", n=12, r=3, s=1, gamma=0).graph
    res = seed_crossing(host, 3, PerturbationPlan(1))
    assert res.status == "discarded" and "p=0" in res.reason


def test_multipartite_median_decreases_with_n():
    medians = [crossing("multipartite-s2", n, 50, master_seed=11, r=4).median for n in (16, 32, 64)]
    assert medians[0] > medians[1] > medians[2]


def test_more_seeds_shrink_the_median_interval():
    values = np.array(crossing("hs-tight", 12, 400, master_seed=5, r=3).values)
    rng = np.random.default_rng(0)

    def width(sample):
        boots = [np.median(rng.choice(sample, len(sample))) for _ in range(2000)]
        lo, hi = np.percentile(boots, [2.5, 97.5])
        return hi - lo

    # average over disjoint blocks so one unlucky block does not dominate
    w100 = np.mean([width(values[i:i + 100]) for i in range(0, 400, 100)])
    w200 = np.mean([width(values[i:i + 200]) for i in range(0, 400, 200)])
    w400 = width(values)
    # interval width scales like seeds^(-1/2): doubling gives about 0.71, quadrupling about 0.5
    assert 0.45 <= w200 / w100 <= 1.0
    assert 0.3 <= w400 / w100 <= 0.75


def test_fit_exponent_synthetic():
    ns = [40, 60, 80, 100, 120]
    fit = fit_exponent([(n, n ** -0.6) for n in ns])
    assert fit.slope == pytest.approx(-0.6, abs=1e-12) and fit.stderr == pytest.approx(0, abs=1e-12)
    fit = fit_exponent([(n, 3 * n ** -0.6) for n in ns])
    assert fit.slope == pytest.approx(-0.6, abs=1e-12) and fit.intercept == pytest.approx(math.log(3))
    with pytest.raises(ParameterError):
        fit_exponent([(10, 0.1), (10, 0.2), (20, 0.1)])
    with pytest.raises(ParameterError):
        fit_exponent([(10, 0.1), (20, 0.2)])


def small_config(**over):
    cfg = {"families": [{"family": "hs-tight", "label": "hs", "params": {"r": 3}}],
           "n": [6, 12], "trials": 5, "master_seed": 9, "p": [0.0, 0.1, 0.3, 1.0]}
    cfg.update(over)
    return cfg


def test_sweep_empty_grid_writes_header_only(tmp_path):
    out = tmp_path / "empty.csv"
    assert sweep(small_config(p=[]), str(out)) == []
    assert out.read_text() == ",".join(CSV_COLUMNS) + "\n"


def test_sweep_p_zero_replicates_deterministic_verdict(tmp_path):
    out = tmp_path / "s.csv"
    records = sweep(small_config(), str(out))
    by = {(r.n, r.p): r for r in records}
    assert by[(12, "0")].successes == 0 and by[(12, "1")].successes == 5
    for rec in records:
        assert rec.successes + (rec.decided - rec.successes) + rec.budget_exhausted == rec.trials


def test_sweep_is_idempotent_and_resumable(tmp_path):
    full = tmp_path / "full.csv"
    sweep(small_config(), str(full))
    first = full.read_bytes()
    sweep(small_config(), str(full))
    assert full.read_bytes() == first
    part = tmp_path / "part.csv"
    sweep(small_config(n=[12]), str(part))
    sweep(small_config(), str(part))
    assert part.read_bytes() == first


def test_sweep_rows_and_wilson(tmp_path):
    out = tmp_path / "s.csv"
    sweep(small_config(), str(out))
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CSV_COLUMNS
    for row in rows[1:]:
        succ, und, trials = int(row[4]), int(row[5]), int(row[3])
        lo, hi = wilson(succ, trials - und)
        assert float(row[7]) == pytest.approx(lo) and float(row[8]) == pytest.approx(hi)
    assert len(read_sweep(str(out))) == len(rows) - 1


def test_sweep_config_validation():
    with pytest.raises(ParameterError):
        SweepConfig.from_dict(small_config(trials=0))
    with pytest.raises(ParameterError):
        SweepConfig.from_dict(small_config(families=[{"family": "nope", "params": {"r": 3}}]))
    with pytest.raises(ParameterError):
        SweepConfig.from_dict(small_config(p_grid={"s": 3, "factors": [1]}))
    with pytest.raises(ParameterError):
        SweepConfig.from_dict({**small_config(), "bogus": 1})


def test_recipes_load_and_validate():
    for name in ("jump-r4s3", "s2-logn", "hs-boundary"):
        cfg = SweepConfig.from_dict(load_recipe(name))
        assert cfg.trials >= 1
    with pytest.raises(ParameterError):
        load_recipe("missing")
    assert json.loads(json.dumps(load_recipe("s2-logn")))["families"][0]["family"] == "multipartite-s2"


def test_half_crossings_interpolate(tmp_path):
    out = tmp_path / "s.csv"
    records = sweep(small_config(trials=20), str(out))
    points = half_crossings(records)
    assert set(points) == {"hs"}
    for n, p in points["hs"]:
        assert 0 < p <= 1
