# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
import json
import os

import numpy as np
import pytest

import cydistill.lib.cyd_common as cyd_common
import cydistill.lib.cyd_donaldson as cyd_donaldson
import cydistill.lib.cyd_io as cyd_io
import cydistill.lib.cyd_physics as cyd_physics
import cydistill.lib.cyd_report as cyd_report
from cydistill.lib.cyd_common import CYDValidationError


def test_points_survive_the_text_format(tmpdir, fermat_sample):
    path = str(tmpdir.join("points.tsv"))
    cyd_io.write_points(path, fermat_sample, {"seed": 0})
    sample, meta = cyd_io.read_points(path)

    assert np.array_equal(sample.z, fermat_sample.z)
    assert np.array_equal(sample.affine, fermat_sample.affine)
    assert np.array_equal(sample.weight, fermat_sample.weight)
    assert meta["n"] == 2000
    assert meta["kind"] == "points"


def test_dataset_file_carries_provenance(tmpdir, planted_table):
    path = str(tmpdir.join("dataset.tsv"))
    cyd_io.write_dataset(path, planted_table, cyd_io.provenance("abc", 7))
    ds, meta = cyd_io.read_dataset(path)

    assert np.array_equal(ds.y, planted_table.y)
    assert meta["config_hash"] == "abc"
    assert meta["seed"] == 7
    assert meta["upstream"] == {}

    with open(path) as f:
        assert f.readline().startswith("# config_hash: ")


def test_wrong_kind_is_rejected(tmpdir, planted_table):
    path = str(tmpdir.join("dataset.tsv"))
    cyd_io.write_dataset(path, planted_table, {})

    with pytest.raises(CYDValidationError, match="not a point file"):
        cyd_io.read_points(path)

    with pytest.raises(CYDValidationError, match="not found"):
        cyd_io.read_dataset(str(tmpdir.join("missing.tsv")))


def test_teacher_file_and_sidecar(tmpdir):
    model = cyd_donaldson.TeacherModel.fs_equivalent(2, 0.2)
    model.sigma_history = [0.3, 0.2]
    model.sigma = 0.2
    path = str(tmpdir.join("teacher.json"))
    cyd_io.write_teacher(path, model, {"seed": 1})
    again, data = cyd_io.read_teacher(path)

    assert np.array_equal(again.h, model.h)
    assert again.k == 2
    assert again.psi == 0.2
    assert data["seed"] == 1
    assert os.path.isfile(str(tmpdir.join("teacher.sigma.tsv")))

    _, header, rows = cyd_io.read_columns(cyd_io.sidecar_path(path))

    assert header == ["iteration", "sigma"]
    assert rows[:, 1].tolist() == [0.3, 0.2]


def test_teacher_sidecar_carries_provenance(tmpdir):
    model = cyd_donaldson.TeacherModel.fs_equivalent(2, 0.0)
    model.sigma_history = [0.1]
    path = str(tmpdir.join("teacher_k2.json"))
    cyd_io.write_teacher(path, model, cyd_io.provenance("beef", 4))
    meta, _, _ = cyd_io.read_columns(cyd_io.sidecar_path(path))

    assert meta == {"config_hash": "beef", "seed": 4, "upstream": {},
                    "teacher": "teacher_k2.json"}


def test_records_are_plain_json(tmpdir):
    path = str(tmpdir.join("out.jsonl"))
    cyd_io.write_records(path, [{"x": np.float64(1.5), "n": np.int64(3),
                                 "bad": np.nan, "ok": np.bool_(True),
                                 "v": np.arange(2)}], {"seed": 0})
    records, meta = cyd_io.read_records(path)

    assert meta == {"seed": 0}
    assert records == [{"x": 1.5, "n": 3, "bad": None, "ok": True,
                        "v": [0, 1]}]

    with open(path) as f:
        assert json.loads(f.readline()) == {"meta": {"seed": 0}}


def test_provenance_hashes_inputs(tmpdir):
    path = tmpdir.join("a.tsv")
    path.write("x")
    meta = cyd_io.provenance("h", 0, [str(path)])

    assert meta["upstream"] == {"a.tsv": cyd_common.file_sha256(str(path))}


def test_report_ends_with_provenance():
    records = [cyd_physics.yukawa_fermat_check(0.0).to_dict()]
    meta = cyd_io.provenance("cafe", 3)
    meta["upstream"] = {"yukawa.jsonl": "beef"}
    text = cyd_report.render({"yukawa.jsonl": (records, {})}, meta)

    assert text.index("Yukawa coupling") < text.index("Provenance")
    assert "config_hash: cafe" in text
    assert "yukawa.jsonl: beef" in text
