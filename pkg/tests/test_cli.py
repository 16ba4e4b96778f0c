import json

import pytest

from kfactor.cli import main
from kfactor.graph import read_el

from cli_cases import run_script


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_construct_writes_graph_and_sets(tmp_path, capsys):
    out = tmp_path / "g.el"
    code, cap = run(capsys, "construct", "--family", "hs-tight", "--n", "6", "--r", "3", "-o", str(out))
    assert code == 0
    assert read_el(out).m == 15 - 3
    assert (tmp_path / "g.el.sets").read_text() == "A: 0 1 2\n"
    assert json.loads(cap.out)["min_degree"] == 3


def test_factor_exit_codes(tmp_path, capsys):
    hs = tmp_path / "hs.el"
    run(capsys, "construct", "--family", "hs-tight", "--n", "12", "--r", "3", "-o", str(hs))
    code, cap = run(capsys, "factor", "--input", str(hs), "--r", "3")
    assert code == 1 and json.loads(cap.out)["status"] == "absent"
    k = tmp_path / "k.el"
    run(capsys, "perturb", "--input", str(hs), "--p", "1", "--seed", "0", "-o", str(k))
    code, cap = run(capsys, "factor", "--input", str(k), "--r", "3", "--count")
    assert code == 0 and json.loads(cap.out)["count"] == 15400
    big = tmp_path / "big.el"
    run(capsys, "construct", "--family", "bipartite-random", "--a", "15", "--b", "15", "--p", "0.9", "--seed", "1",
        "-o", str(big))
    run(capsys, "perturb", "--input", str(big), "--p", "0.45", "--seed", "0", "-o", str(big))
    code, _ = run(capsys, "factor", "--input", str(big), "--r", "3", "--budget", "3", "--method", "search")
    assert code == 2


def test_errors_exit_with_code_three(tmp_path, capsys):
    bad = tmp_path / "bad.el"
    bad.write_text("3 2\n0 1\n0 1\n")
    code, cap = run(capsys, "factor", "--input", str(bad), "--r", "3")
    assert code == 3 and "line 3" in cap.err
    code, cap = run(capsys, "factor", "--input", str(tmp_path / "missing.el"), "--r", "3")
    assert code == 3


def test_bounds_and_pack_print_exact_fractions(capsys):
    code, cap = run(capsys, "bounds", "phi", "--s", "3")
    assert code == 0 and json.loads(cap.out)["phi"] == "3/5"
    code, cap = run(capsys, "pack", "--s", "2", "--t", "1")
    out = json.loads(cap.out)
    assert out["w_sigma"] == "1/3" and out["w_tau"] == "1/6" and out["residue"] == "0"


def test_sweep_requires_a_config_source(tmp_path, capsys):
    with pytest.raises(SystemExit):
        main(["sweep", "-o", str(tmp_path / "x.csv"), "--bogus"])


def test_every_command_is_deterministic(tmp_path):
    one, two = tmp_path / "one", tmp_path / "two"
    one.mkdir()
    two.mkdir()
    res1, files1 = run_script(str(one))
    res2, files2 = run_script(str(two))
    for (name, code, out, err), (_, code2, out2, _) in zip(res1, res2):
        assert code in (0, 1), (name, err)
        assert (code, out) == (code2, out2), name
    assert files1 == files2
