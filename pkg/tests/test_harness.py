import json

import jsonschema
import numpy as np
import pytest

from schedround import Instance, cmd_solve
from schedround.certificate import default_certificate_text
from schedround.cli import main
from schedround.harness import (REPORT_SCHEMA, ExperimentConfig, InstanceSpec, cmd_experiment, cmd_verify_certificate,
                                gen_instance, report_to_csv, report_to_json)


def test_generator_is_deterministic():
    spec = InstanceSpec(7, 3, density=0.5)
    assert gen_instance(spec, 11) == gen_instance(spec, 11)
    assert gen_instance(spec, 11) != gen_instance(spec, 12)


def test_full_density_has_no_ineligible_pairs():
    inst = gen_instance(InstanceSpec(9, 3, density=1.0), 2)
    assert all(v is not None for row in inst.p for v in row)


def test_generated_instance_is_valid():
    inst = gen_instance(InstanceSpec(10, 3, density=0.4), 5)
    again = Instance.from_lists(inst.p, [list(r) for r in inst.w])
    assert again == inst
    assert inst.weights_machine_independent
    sizes = [float(v) for row in inst.p for v in row if v is not None]
    assert min(sizes) >= 1 and max(sizes) <= 64


@pytest.mark.parametrize("spec", [InstanceSpec(0, 2), InstanceSpec(15, 2), InstanceSpec(5, 2, density=0),
                                  InstanceSpec(5, 2, kind="bogus")])
def test_bad_specs(spec):
    with pytest.raises(ValueError):
        gen_instance(spec, 0)


def test_single_machine_ratio_one():
    inst = gen_instance(InstanceSpec(6, 1), 3)
    out = cmd_solve(inst, 0)
    assert out["assignment"] == [0] * 6
    assert out["ratio"] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_ratio_at_least_one(seed):
    inst = gen_instance(InstanceSpec(7, 3, density=0.7), seed)
    a = cmd_solve(inst, seed)
    assert a["ratio"] >= 1 - 1e-9
    assert cmd_solve(inst, seed) == a


def _config(**kw):
    base = dict(seed=4, trials=1, spec=InstanceSpec(6, 2, density=0.8), structure_trials=1, edge_trials=20)
    base.update(kw)
    return ExperimentConfig(**base)


def test_single_trial_experiment_embeds_solve():
    rep = cmd_experiment(_config(), timestamp="T")
    assert rep["monte_carlo"]["cost_mean"] == pytest.approx(rep["solve"]["cost"], rel=1e-12)
    jsonschema.validate(rep, REPORT_SCHEMA)


def test_reports_are_reproducible(tmp_path):
    cfg = _config(trials=20)
    a = report_to_json(cmd_experiment(cfg, timestamp="T"))
    b = report_to_json(cmd_experiment(cfg, timestamp="T"))
    assert a == b
    rep = json.loads(a)
    jsonschema.validate(rep, REPORT_SCHEMA)
    assert rep["passed"]
    assert rep["monte_carlo"]["ratio"] <= 1.5 + rep["monte_carlo"]["ratio_halfwidth"]
    csv_text = report_to_csv(rep)
    assert csv_text.startswith("key,value\n") and "monte_carlo.ratio," in csv_text


def test_experiment_config_validation():
    with pytest.raises(ValueError):
        cmd_experiment(_config(trials=0))
    with pytest.raises(ValueError):
        cmd_experiment(_config(instance_path="x.json"))


def test_verify_bundled(capsys):
    assert cmd_verify_certificate() == 0
    out = capsys.readouterr().out
    assert "mean alpha = 1.3574263" in out and "verdict: PASS" in out


def test_verify_corrupted(tmp_path, capsys):
    rows = json.loads(default_certificate_text())
    rows[2]["alpha"] = 1.2
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(rows))
    assert cmd_verify_certificate(str(path)) == 1
    out = capsys.readouterr().out
    assert "interval  3: FAIL" in out and "case" in out


def test_verify_unreadable(tmp_path):
    assert cmd_verify_certificate(str(tmp_path / "missing.json")) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cmd_verify_certificate(str(bad)) == 2
    bad.write_text("[]")
    assert cmd_verify_certificate(str(bad)) == 2


def test_cli_subcommands(tmp_path, capsys):
    inst_path = tmp_path / "inst.json"
    assert main(["gen", "--n", "6", "--m", "2", "--seed", "3", "--out", str(inst_path)]) == 0
    inst = Instance.from_json(inst_path.read_text())
    assert inst.job_count == 6
    assert main(["solve", str(inst_path), "--seed", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["ratio"] >= 1 - 1e-9
    out = tmp_path / "rep.csv"
    rc = main(["experiment", "--instance", str(inst_path), "--trials", "10", "--seed", "2",
               "--edge-trials", "20", "--structure-trials", "2", "--format", "csv", "--out", str(out)])
    assert rc == 0 and out.read_text().startswith("key,value")
    assert main(["verify-cert"]) == 0


def test_cli_search_params(tmp_path):
    out = tmp_path / "row.json"
    assert main(["search-params", "8", "--half-width", "0.01", "--step", "0.01", "--rounds", "1",
                 "--out", str(out)]) == 0
    row = json.loads(out.read_text())[0]
    assert row["o"] == 8 and row["alpha"] <= 1.340912 + 1e-6
