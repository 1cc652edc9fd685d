# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
import json
import os

from click.testing import CliRunner

import cydistill.cli as cyd_cli
import cydistill.lib.cyd_io as cyd_io
from cydistill import main as cyd

STAGES = ["sample", "train_teacher", "build_dataset", "symreg",
          "fit_formula", "moduli_scan", "bench_volume", "bench_yukawa",
          "validate_stats", "report"]


def facade(config):
    return cyd_cli.facade(config, None, None, False, True)


def test_pipeline_runs_then_resumes(tiny_config):
    config, conf = tiny_config
    out = conf["output_dir"]
    result = CliRunner().invoke(cyd.cli, ["pipeline", "-c", config,
                                          "--silent"])

    assert result.exit_code == 0

    for name in ("points.tsv", "teacher.json", "teacher.sigma.tsv",
                 "dataset.tsv", "ensemble.jsonl", "fit.jsonl",
                 "trajectory.jsonl", "modulation.jsonl", "volume.jsonl",
                 "yukawa.jsonl", "stats.jsonl", "report.txt"):
        assert os.path.isfile(os.path.join(out, name)), name

    for stage in STAGES:
        assert os.path.isfile(os.path.join(out, f"{stage}.manifest.json"))

    ran = facade(config).pipeline()

    assert [stage for stage, _ in ran] == STAGES
    assert not any(done for _, done in ran)

    os.remove(os.path.join(out, "dataset.tsv"))
    ran = dict(facade(config).pipeline())

    # The rebuilt dataset is byte-identical so nothing downstream reruns.
    assert ran.pop("build_dataset")
    assert not any(ran.values())


def test_pipeline_force_reruns_everything(tiny_config):
    config, _ = tiny_config
    facade(config).pipeline()
    ran = facade(config).pipeline(force=True)

    assert all(done for _, done in ran)


def test_report_carries_provenance(tiny_config):
    config, conf = tiny_config
    runner = CliRunner()
    runner.invoke(cyd.cli, ["pipeline", "-c", config, "--silent"])

    with open(os.path.join(conf["output_dir"],
                           "report.manifest.json")) as f:
        manifest = json.load(f)

    with open(os.path.join(conf["output_dir"], "report.txt")) as f:
        text = f.read()

    assert "Provenance" in text
    assert f"config_hash: {manifest['config_hash']}" in text
    assert "Yukawa coupling" in text

    result = runner.invoke(cyd.cli, ["report", "-c", config, "--silent"])

    assert result.exit_code == 0


def test_changed_config_invalidates_the_manifests(tiny_config, tmpdir):
    config, conf = tiny_config
    facade(config).pipeline()
    conf["symreg"]["population"] = 14
    changed = tmpdir.join("changed.json")
    changed.write(json.dumps(conf))
    ran = dict(facade(str(changed)).pipeline())

    assert ran["symreg"]
    assert ran["sample"]


def test_error_budget_has_a_row_per_degree(tiny_config, tmpdir):
    _, conf = tiny_config
    conf = dict(conf, psi_grid=[0.0, 0.2], degree_scan=[1, 2])
    config = tmpdir.join("degrees.json")
    config.write(json.dumps(conf))
    facade(str(config)).moduli_scan()
    records, meta = cyd_io.read_records(
        os.path.join(conf["output_dir"], "error_budget.jsonl"))

    assert [(r["scan"], r["psi"], r["k"]) for r in records] == [
        ("psi", 0.0, 2), ("psi", 0.2, 2), ("degree", 0.0, 1),
        ("degree", 0.0, 2)]
    assert meta["config_hash"]
