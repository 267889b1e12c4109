import csv
import io
import json

import pytest

from csbp.cli import FORMULAS, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_help(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--help"])
    assert e.value.code == 0
    for cmd in ("simulate", "eval", "verify"):
        with pytest.raises(SystemExit) as e:
            main([cmd, "--help"])
        assert e.value.code == 0


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_simulate_cb_schema(capsys):
    code, out, _ = run(capsys, "simulate", "--process", "cb", "--alpha", "1.5", "--x0", "1",
                       "--paths", "5", "--dt", "1e-2")
    assert code == 0
    rows = _rows(out)
    assert list(rows[0]) == ["path_id", "t", "value", "absorbed"]
    by = {}
    for r in rows:
        by.setdefault(int(r["path_id"]), []).append(r)
    assert sorted(by) == list(range(5))
    for rs in by.values():
        assert rs[-1]["absorbed"] == "1" and float(rs[-1]["value"]) == 0.0
        assert all(r["absorbed"] == "0" for r in rs[:-1])
        ts = [float(r["t"]) for r in rs]
        assert ts == sorted(ts)


@pytest.mark.parametrize("process", ["stable", "cb", "cbi", "dual-conditioned"])
def test_simulate_deterministic(tmp_path, capsys, process):
    args = ["simulate", "--process", process, "--paths", "3", "--dt", "1e-2", "--horizon", "0.5",
            "--seed", "4"]
    assert main(args + ["--out", str(tmp_path / "a.csv")]) == 0
    assert main(args + ["--out", str(tmp_path / "b.csv")]) == 0
    a = (tmp_path / "a.csv").read_text()
    assert a == (tmp_path / "b.csv").read_text()
    assert len(_rows(a)) > 3


def test_simulate_bad_alpha(capsys):
    code, out, err = run(capsys, "simulate", "--alpha", "2.5")
    assert code != 0 and out == ""
    assert err.count("\n") == 1 and "alpha" in err


def test_simulate_nonpositive(capsys):
    assert run(capsys, "simulate", "--dt", "0")[0] != 0
    assert run(capsys, "simulate", "--paths", "0")[0] != 0


@pytest.mark.parametrize("argv, value", [
    (["--formula", "u_t", "--alpha", "2", "--c-plus", "0.5", "--t", "2", "--lambda", "1"], 0.5),
    (["--formula", "qs_limit", "--alpha", "2", "--lambda", "1"], 0.5),
    (["--formula", "scale_W", "--q", "0", "--x", "-1"], 0.0),
])
def test_eval_examples(capsys, argv, value):
    code, out, _ = run(capsys, "eval", *argv)
    assert code == 0
    assert float(_rows(out)[0]["value"]) == pytest.approx(value, abs=1e-9)


def test_eval_grid_json(capsys):
    code, out, _ = run(capsys, "eval", "--formula", "psi", "--alpha", "1.5,2", "--lambda",
                       "1,2,4", "--format", "json")
    assert code == 0
    rows = json.loads(out)["rows"]
    assert len(rows) == 6
    for r in rows:
        assert r["value"] == pytest.approx(r["c_plus"] * r["lambda"] ** r["alpha"])


def test_eval_unknown_formula(capsys):
    code, out, err = run(capsys, "eval", "--formula", "zeta")
    assert code != 0 and "u_t" in err and "qs_limit" in err


def test_eval_missing_and_extra(capsys):
    assert run(capsys, "eval", "--formula", "u_t", "--t", "1")[0] != 0
    assert run(capsys, "eval", "--formula", "qs_limit", "--lambda", "1", "--t", "1")[0] != 0


def test_formulas_have_args():
    assert {"u_t", "qs_limit", "scale_W", "thm2_exit"} <= set(FORMULAS)


def test_verify_list(capsys):
    code, out, _ = run(capsys, "verify", "--list")
    assert code == 0 and "extinction_frechet" in out and "lambert_consistency" in out


def test_verify_inline(capsys):
    code, out, err = run(capsys, "verify", "--identity", "cb_laplace", "--param", "x=0",
                         "--paths", "50")
    assert code == 0
    assert json.loads(out)["passed"] is True
    assert "PASS cb_laplace" in err


def test_verify_impossible_tolerance(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"version": 1, "checks": [
        {"identity": "extinction_frechet", "params": {"ks_max": 0}, "n_paths": 200}]}))
    code, out, _ = run(capsys, "verify", "--config", str(cfg), "--format", "csv", "--quiet")
    assert code == 1
    assert out.splitlines()[1].split(",")[7] == "0"


def test_verify_config_parse_error(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"version": 1,\n "checks": [}\n')
    code, _, err = run(capsys, "verify", "--config", str(cfg))
    assert code == 2 and "line 2" in err


def test_verify_needs_input(capsys):
    assert run(capsys, "verify")[0] == 2
