import json
import math

import numpy as np
import pytest

from csbp.verify import (REGISTRY, ConfigError, Report, bundled_config, load_config, parse_config,
                         run_identity, run_suite)

NAMES = {"extinction_frechet", "cb_laplace", "exit_thm2_i", "exit_thm2_ii", "infimum_cor1",
         "infimum_prop3", "selfsim_index_shift", "entrance_law_thm3", "reversal_thm1_marginal",
         "cbi_laplace_lemma6", "qs_lemma5", "qs_cbi_lemma6", "expfunc_thm7", "sup_prop4_shape",
         "lambert_consistency"}


def test_registry_complete():
    assert set(REGISTRY) >= NAMES
    for ident in REGISTRY.values():
        assert ident.dt > 0 and ident.description
        assert ident.budget(ident.dt / 2) <= ident.budget(ident.dt) + 1e-15


def test_unknown_identity():
    with pytest.raises(ConfigError, match="available"):
        run_identity("nope")


@pytest.mark.parametrize("params", [{"alpha": 2.5}, {"beta": 1}, {"alpha": 1.5, "c_plus": -1}])
def test_invalid_params(params):
    with pytest.raises(ConfigError):
        run_identity("cb_laplace", params, 100)


def test_cb_laplace_from_zero_exact():
    chk = run_identity("cb_laplace", {"x": 0.0, "t": 3.0, "lam": 2.0}, 100)
    assert chk.estimate.mean == 1.0 and chk.estimate.stderr == 0.0 and chk.passed


def test_run_identity_deterministic():
    a = run_identity("cb_laplace", {"alpha": 1.5}, 2000, seed=5)
    b = run_identity("cb_laplace", {"alpha": 1.5}, 2000, seed=5)
    assert a.to_dict() == b.to_dict() or (
        {**a.to_dict(), "runtime_s": 0} == {**b.to_dict(), "runtime_s": 0})
    c = run_identity("cb_laplace", {"alpha": 1.5}, 2000, seed=6)
    assert c.estimate.mean != a.estimate.mean


def test_exit_ii_brownian_example():
    chk = run_identity("exit_thm2_ii", {"alpha": 2.0, "c_plus": 0.5, "x": 1.0, "a": 2.0, "q": 0.0},
                       20_000, seed=3)
    assert chk.closed_form == pytest.approx(0.5, abs=1e-12)
    assert abs(chk.estimate.mean - 0.5) <= 4 * chk.estimate.stderr + chk.bias_budget
    assert chk.passed
    assert chk.diagnostics["closed_form_branch_sum"] == pytest.approx(1.0, abs=1e-12)


def test_empty_suite():
    r = run_suite({"version": 1, "master_seed": 3, "checks": []})
    assert r.passed and r.checks == []
    assert json.loads(r.to_json())["n_checks"] == 0


@pytest.mark.parametrize("cfg, msg", [
    ({"version": 2, "checks": []}, "version"),
    ({"version": 1, "checks": [], "extra": 1}, "unknown top-level"),
    ({"version": 1, "checks": [{"identity": "cb_laplace", "colour": 1}]}, "unknown key"),
    ({"version": 1, "checks": [{"identity": "nope"}]}, "unknown identity"),
    ({"version": 1, "checks": [{"identity": "cb_laplace", "params": {"zz": 1}}]}, "unknown parameter"),
    ({"version": 1, "checks": [{"identity": "cb_laplace", "n_paths": 1}]}, "n_paths"),
    ({"version": 1, "checks": [{"identity": "cb_laplace", "dt": -1}]}, "dt"),
    ([], "object"),
])
def test_config_errors(cfg, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(cfg)


def test_config_error_aborts_before_simulation():
    cfg = {"version": 1, "checks": [{"identity": "cb_laplace", "n_paths": 10**9},
                                    {"identity": "cb_laplace", "params": {"alpha": 3}}]}
    with pytest.raises(ConfigError):
        run_suite(cfg)


def test_config_line_numbers(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text('{\n  "version": 1,\n  "checks": [\n    {"identity": "cb_laplace",}\n  ]\n}\n')
    with pytest.raises(ConfigError, match="line 4"):
        load_config(f)


def test_bundled_config_parses():
    cfg = load_config(bundled_config())
    assert len(cfg.checks) > 0
    assert {c.identity for c in cfg.checks} == NAMES


SMALL = {"version": 1, "master_seed": 11, "checks": [
    {"identity": "cb_laplace", "params": {"alpha": 1.5, "t": 0.25}, "n_paths": 2000},
    {"identity": "exit_thm2_i", "params": {"alpha": 1.5}, "n_paths": 2000},
    {"identity": "cb_laplace", "params": {"x": 0.0}, "n_paths": 50},
]}


def test_report_deterministic_and_formats(tmp_path):
    a = run_suite(SMALL)
    b = run_suite(SMALL)
    assert a.to_json() == b.to_json()
    d = json.loads(a.to_json())
    assert d["schema_version"] == 1 and d["n_checks"] == 3
    assert "runtime_s" not in d["checks"][0]
    lines = a.to_csv().splitlines()
    assert lines[0] == "name,closed_form,estimate,stderr,z,ks,p,pass,runtime_s"
    assert len(lines) == 4
    a.write(tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text() == a.to_csv()
    a.write(tmp_path / "r.json")
    assert (tmp_path / "r.json").read_text() == a.to_json()


def test_zero_tolerance_fails():
    cfg = {"version": 1, "checks": [
        {"identity": "extinction_frechet", "params": {"ks_max": 0.0}, "n_paths": 200,
         "bias_budget": 0.0}]}
    r = run_suite(cfg)
    assert not r.passed


def test_dt_halving_sanity():
    # mean |z| must not grow by more than 1 when dt is halved
    runs = [("cb_laplace", {"alpha": 1.5, "t": 0.5}), ("cb_laplace", {"alpha": 2.0, "t": 0.5}),
            ("exit_thm2_i", {"alpha": 1.5}), ("exit_thm2_ii", {"alpha": 2.0, "c_plus": 0.5})]
    dz = []
    for name, p in runs:
        dt = REGISTRY[name].dt * 2
        z1 = run_identity(name, p, 4000, dt=dt, seed=8).z
        z2 = run_identity(name, p, 4000, dt=dt / 2, seed=8).z
        dz.append(abs(z2) - abs(z1))
    assert np.mean(dz) <= 1.0


def test_check_dict_json_safe():
    chk = run_identity("exit_thm2_i", {"alpha": 1.5, "q": 0.5}, 1000, seed=2)
    s = json.dumps(chk.to_dict(), allow_nan=False)
    assert json.loads(s)["name"] == "exit_thm2_i"


def test_entrance_law_matches_corrected_form_not_literal():
    chk = run_identity("entrance_law_thm3", {"level": 1.0}, 20_000, seed=5)
    est, se = chk.estimate.mean, chk.estimate.stderr
    assert abs(est - chk.closed_form) <= 4 * se + 0.005
    assert abs(est - chk.diagnostics["literal_form_value"]) > 10 * se
    assert chk.diagnostics["normalization"] == pytest.approx(1.0, abs=1e-8)
