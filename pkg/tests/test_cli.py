import json
import math

import pytest

from germlin.cli import main, render_summary

SQRT2 = math.sqrt(2)
SQRT3 = math.sqrt(3)


def write(path, data):
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def toroidal_spec_json(a=SQRT2, b=SQRT3):
    def c(x):
        return {"re": repr(float(x.real)), "im": repr(float(x.imag))}

    return {"n": 2, "a": 0, "b": 0, "q": 1,
            "R1": [[repr(a)]], "R2": [[repr(b)]],
            "R3": [[c(1j)]], "P0": [[c(1j)]], "P1": [[c(0j)]]}


def decks_json():
    def c(re, im="0"):
        return {"re": re, "im": im}

    return {"lambda": [[c("3/5", "4/5")]], "mu": [[c("1/2")]]}


def resonant_decks_json():
    # mu_2 = lambda * mu_1^2 exactly
    def c(re, im="0"):
        return {"re": re, "im": im}

    return {"lambda": [[c("3/5", "4/5")]],
            "mu": [[c("1/2"), c("3/20", "1/5")]]}


def hopf_spec_json(alpha=(("0.3", "0"), ("0.53", "0"))):
    return {"alpha": [{"re": a, "im": b} for a, b in alpha],
            "jordan_overdiag": []}


def run_cli(tmp_path, config, name="cfg.json", out="report.json"):
    cfg = write(tmp_path / name, config)
    out_path = tmp_path / out
    code = main(["--config", cfg, "--out", str(out_path)])
    report = json.loads(out_path.read_text(encoding="utf-8"))
    return code, report


def test_unknown_command_is_input_error(tmp_path):
    cfg = write(tmp_path / "cfg.json", {"command": "nope"})
    assert main(["--config", cfg]) == 2


def test_missing_input_file_is_input_error(tmp_path):
    cfg = write(tmp_path / "cfg.json",
                {"command": "dioph-scan", "inputs": {"decks": "absent.json"}})
    assert main(["--config", cfg]) == 2


def test_toroidal_validate_pass(tmp_path):
    spec = write(tmp_path / "spec.json", toroidal_spec_json())
    code, report = run_cli(tmp_path, {
        "command": "toroidal-validate", "inputs": {"spec": "spec.json"},
        "params": {"height_bound": 25, "epsilon": "0.25"}})
    assert code == 0
    assert report["payload"]["irrationality"]["passed"]


def test_toroidal_validate_witness_fails(tmp_path):
    write(tmp_path / "spec.json", toroidal_spec_json(0.5, 1 / 3))
    code, report = run_cli(tmp_path, {
        "command": "toroidal-validate", "inputs": {"spec": "spec.json"},
        "params": {"height_bound": 6}})
    assert code == 1
    assert report["payload"]["irrationality"]["witness"] == [6]


def test_dioph_scan_clean_and_resonant(tmp_path):
    write(tmp_path / "decks.json", decks_json())
    code, report = run_cli(tmp_path, {
        "command": "dioph-scan", "inputs": {"decks": "decks.json"},
        "params": {"N": 10}})
    assert code == 0
    assert report["payload"]["min_divisor"] >= 0.25 - 1e-12

    write(tmp_path / "bad.json", resonant_decks_json())
    code2, report2 = run_cli(tmp_path, {
        "command": "dioph-scan", "inputs": {"decks": "bad.json"},
        "params": {"N": 6}}, name="cfg2.json", out="rep2.json")
    assert code2 == 1
    assert report2["payload"]["resonances"]


def test_linearize_full_pipeline(tmp_path):
    code, report = run_cli(tmp_path, {
        "command": "linearize", "seed": 3,
        "params": {"n_v": 4, "lin_mode": "full", "scale": "1/32"}})
    assert code == 0
    payload = report["payload"]
    assert payload["commutation_residual"] == 0.0
    assert payload["recovered_ground_truth"] is True
    assert all(r == 0.0 for r in payload["result"]["residual_per_degree"])


def test_certify_pipeline(tmp_path):
    code, report = run_cli(tmp_path, {
        "command": "certify", "seed": 5,
        "params": {"n_v": 4, "scale": "1/64"}})
    assert code == 0
    assert report["payload"]["domination"]["passed"]


def test_hopf_classify_and_vanishing(tmp_path):
    write(tmp_path / "spec.json", hopf_spec_json())
    write(tmp_path / "bundle.json", {"beta": {"re": "0.2", "im": "0"}})
    code, report = run_cli(tmp_path, {
        "command": "hopf-classify",
        "inputs": {"spec": "spec.json", "bundle": "bundle.json"},
        "params": {"exp_bound": 8}})
    assert code == 0
    assert report["payload"]["kind"] == "generic"
    assert report["payload"]["vanishing"]["criterion_holds"]


def test_hopf_precheck_failure_witness(tmp_path):
    write(tmp_path / "spec.json", hopf_spec_json())
    # beta alpha_1 = alpha_2 exactly
    write(tmp_path / "bundle.json", {"beta": {"re": "53/30", "im": "0"}})
    code, report = run_cli(tmp_path, {
        "command": "hopf-precheck",
        "inputs": {"spec": "spec.json", "bundle": "bundle.json"},
        "params": {"n_v": 3, "exp_bound": 8}})
    assert code == 1
    failing = [it for it in report["payload"]["items"] if it["verdict"] == "fail"]
    assert failing and all(it["witness"] for it in failing)


def test_hopf_cover_with_chains(tmp_path):
    write(tmp_path / "spec.json",
          hopf_spec_json((("0.5", "0"), ("5/9", "0"))))
    write(tmp_path / "bundle.json", {"beta": {"re": "0.5", "im": "0.1"}})
    code, report = run_cli(tmp_path, {
        "command": "hopf-cover",
        "inputs": {"spec": "spec.json", "bundle": "bundle.json"},
        "params": {"delta": "18/100", "r1": ["1", "1"], "mc_points": 300}})
    assert code == 0
    mc = report["payload"]["monte_carlo"]
    assert mc["uncovered"] == 0 and mc["triple_overlaps"] == 0
    assert all(chain for chain in report["payload"]["chains"].values())


def test_shilov_command(tmp_path):
    write(tmp_path / "spec.json", hopf_spec_json((("0.5", "0"), ("5/9", "0"))))
    code, report = run_cli(tmp_path, {
        "command": "shilov", "inputs": {"spec": "spec.json"},
        "params": {"delta": "18/100", "r1": ["1", "1"], "band": 1, "coord": 0}})
    assert code == 0
    piece = report["payload"]["piece"]
    want = max(1.0 / piece["annulus"][0], 1.0 / piece["disc_radius"])
    assert report["payload"]["constant"] == pytest.approx(want)


def test_exact_mode_payload_determinism(tmp_path):
    config = {"command": "linearize", "seed": 11,
              "params": {"n_v": 4, "lin_mode": "full", "scale": "1/32"}}
    _, rep1 = run_cli(tmp_path, config, name="c1.json", out="r1.json")
    _, rep2 = run_cli(tmp_path, config, name="c2.json", out="r2.json")
    assert json.dumps(rep1["payload"], sort_keys=True) == \
        json.dumps(rep2["payload"], sort_keys=True)


def test_render_summary_contains_witness(tmp_path):
    write(tmp_path / "bad.json", resonant_decks_json())
    cfg = write(tmp_path / "cfg.json", {
        "command": "dioph-scan", "inputs": {"decks": "bad.json"},
        "params": {"N": 6}})
    out = tmp_path / "rep.json"
    code = main(["--config", cfg, "--out", str(out)])
    assert code == 1
    report = json.loads(out.read_text(encoding="utf-8"))
    text = render_summary(report)
    assert "resonances" in text
    assert report["payload"]["resonances"][0]["P"] == [1]


def test_dioph_scan_float_mode(tmp_path):
    write(tmp_path / "decks.json", decks_json())
    code, report = run_cli(tmp_path, {
        "command": "dioph-scan", "mode": "float",
        "inputs": {"decks": "decks.json"}, "params": {"N": 8}})
    assert code == 0
    assert report["config"]["mode"] == "float"


def test_threads_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("GERMLIN_THREADS", "7")
    write(tmp_path / "decks.json", decks_json())
    code, report = run_cli(tmp_path, {
        "command": "dioph-scan", "threads": 2,
        "inputs": {"decks": "decks.json"}, "params": {"N": 6}})
    assert code == 0
    assert report["config"]["threads"] == 7


def test_hopf_classify_relation_fails(tmp_path):
    write(tmp_path / "spec.json",
          hopf_spec_json((("1/4", "0"), ("1/2", "0"))))
    code, report = run_cli(tmp_path, {
        "command": "hopf-classify", "inputs": {"spec": "spec.json"},
        "params": {"exp_bound": 4}})
    assert code == 1
    assert report["payload"]["witness"] is not None


def test_hopf_cover_bad_delta_is_input_error(tmp_path):
    write(tmp_path / "spec.json", hopf_spec_json((("0.5", "0"), ("5/9", "0"))))
    cfg = write(tmp_path / "cfg.json", {
        "command": "hopf-cover", "inputs": {"spec": "spec.json"},
        "params": {"delta": "1/50", "r1": ["1", "1"], "mc_points": 10}})
    assert main(["--config", cfg]) == 2


def test_linearize_linear_deck_fixture(tmp_path):
    code, report = run_cli(tmp_path, {
        "command": "linearize", "seed": 1,
        "params": {"n_v": 4, "lin_mode": "full", "scale": "0"}})
    assert code == 0
    assert all(r == 0.0 for r in report["payload"]["result"]["residual_per_degree"])
    assert report["payload"]["result"]["phi_v"][0]["records"] == []


def test_cli_seed_override(tmp_path):
    cfg = write(tmp_path / "cfg.json", {
        "command": "linearize", "seed": 1,
        "params": {"n_v": 3, "lin_mode": "full", "scale": "1/32"}})
    out = tmp_path / "rep.json"
    code = main(["--config", cfg, "--out", str(out), "--seed", "9"])
    assert code == 0
    assert json.loads(out.read_text())["config"]["seed"] == 9
