# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""
On-disk formats.

Columnar files start with ``# key: <json>`` metadata lines, then a tab
separated header and rows of ``repr`` floats so values round-trip exactly.
Records are JSON lines whose first line is ``{"meta": {...}}``.
"""
import json
import os

import numpy as np

import cydistill.lib.cyd_common as cyd_common
import cydistill.lib.cyd_dataset as cyd_dataset
import cydistill.lib.cyd_donaldson as cyd_donaldson
import cydistill.lib.cyd_geometry as cyd_geometry
from cydistill.lib.cyd_common import CYDValidationError
from cydistill.lib.cyd_json import CYDJson

FORMAT_VERSION = 1
POINT_COLUMNS = tuple(f"{part}_z{i}" for i in range(5)
                      for part in ("re", "im")) + \
    ("affine", "dependent", "weight")
DATASET_COLUMNS = ("p2", "p3", "sigma3", "y", "weight")


def provenance(conf_hash, seed, upstream=()):
    """Metadata every output carries: config hash, seed, input hashes."""
    return {
        "config_hash": conf_hash,
        "seed"       : seed,
        "upstream"   : {os.path.basename(p): cyd_common.file_sha256(p)
                        for p in sorted(upstream)}
    }


def _fmt(value):
    if value is None:
        return "nan"

    if isinstance(value, (int, np.integer)):
        return str(int(value))

    return repr(float(value))


def write_columns(path, columns, rows, meta):
    with cyd_common.open_atomic(path, "w") as out:
        for key in sorted(meta):
            out.write(f"# {key}: {json.dumps(meta[key], sort_keys=True)}\n")

        out.write("\t".join(columns) + "\n")

        for row in rows:
            out.write("\t".join(_fmt(v) for v in row) + "\n")


def read_columns(path):
    """Return (meta, header, rows as a float array)."""
    meta, header, rows = {}, None, []

    try:
        with open(path, "r") as f:
            for line in f:
                line = line.rstrip("\n")

                if line.startswith("# "):
                    key, value = line[2:].split(": ", 1)
                    meta[key] = json.loads(value)
                elif header is None:
                    header = line.split("\t")
                elif line:
                    rows.append([float(v) for v in line.split("\t")])
    except FileNotFoundError:
        raise CYDValidationError(f"{path} not found")
    except ValueError as err:
        raise CYDValidationError(f"{path} is malformed: {err}")

    if header is None:
        raise CYDValidationError(f"{path} has no header row")

    return meta, header, np.array(rows, dtype=float).reshape(-1, len(header))


def write_points(path, sample, meta):
    coords = np.empty((len(sample), 10))
    coords[:, 0::2] = sample.z.real
    coords[:, 1::2] = sample.z.imag
    rows = [[*coords[i],
             int(sample.affine[i]), int(sample.dependent[i]),
             sample.weight[i]] for i in range(len(sample))]
    meta = dict(meta, format=FORMAT_VERSION, kind="points", psi=sample.psi,
                n=len(sample), sample_seed=sample.seed)
    write_columns(path, POINT_COLUMNS, rows, meta)


def read_points(path):
    meta, header, data = read_columns(path)

    if tuple(header) != POINT_COLUMNS:
        raise CYDValidationError(f"{path} is not a point file")

    z = data[:, 0:10:2] + 1j * data[:, 1:10:2]

    return cyd_geometry.QuinticSample(
        meta["psi"], z, data[:, 10].astype(int), data[:, 11].astype(int),
        data[:, 12], meta.get("sample_seed")), meta


def write_dataset(path, ds, meta):
    rows = np.column_stack([ds.p2, ds.p3, ds.sigma3, ds.y, ds.weight])
    meta = dict(meta, format=FORMAT_VERSION, kind="dataset", psi=ds.psi,
                teacher_k=ds.teacher_k, teacher_hash=ds.teacher_hash,
                split_seed=ds.split_seed, dropped=ds.dropped)
    write_columns(path, DATASET_COLUMNS, rows, meta)


def read_dataset(path):
    meta, header, data = read_columns(path)

    if tuple(header) != DATASET_COLUMNS:
        raise CYDValidationError(f"{path} is not a dataset file")

    return cyd_dataset.Dataset(
        *data.T, psi=meta["psi"], teacher_k=meta["teacher_k"],
        split_seed=meta.get("split_seed"),
        teacher_hash=meta.get("teacher_hash", ""),
        dropped=meta.get("dropped", 0)), meta


def sidecar_path(path):
    root, _ = os.path.splitext(path)

    return f"{root}.sigma.tsv"


def write_teacher(path, model, meta):
    """Teacher JSON plus the sigma-history sidecar next to it."""
    data = dict(meta, format=FORMAT_VERSION, kind="teacher", k=model.k,
                psi=model.psi, exponents=model.basis.exponents.tolist(),
                h_real=model.h.real.tolist(), h_imag=model.h.imag.tolist(),
                sigma=model.sigma, sigma_history=model.sigma_history,
                loss_history=model.loss_history,
                grad_norm_history=model.grad_norm_history,
                training_seed=model.seed)
    CYDJson.json_write(data, path)
    history = [[i, s] for i, s in enumerate(model.sigma_history)]
    write_columns(sidecar_path(path), ("iteration", "sigma"), history,
                  dict(meta, teacher=os.path.basename(path)))


def read_teacher(path):
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise CYDValidationError(f"{path} not found")

    if data.get("kind") != "teacher":
        raise CYDValidationError(f"{path} is not a teacher file")

    basis = cyd_donaldson.MonomialBasis(
        data["k"], np.array(data["exponents"], dtype=int))
    model = cyd_donaldson.TeacherModel(
        basis, np.array(data["h_real"]) + 1j * np.array(data["h_imag"]),
        data["psi"], data["sigma"], data["sigma_history"],
        data["loss_history"], data["grad_norm_history"],
        data.get("training_seed"))

    return model, data


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}

    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]

    if isinstance(value, np.bool_):
        return bool(value)

    if isinstance(value, np.integer):
        return int(value)

    if isinstance(value, (float, np.floating)):
        return float(value) if np.isfinite(value) else None

    return value


def write_records(path, records, meta):
    with cyd_common.open_atomic(path, "w") as out:
        out.write(json.dumps({"meta": _plain(meta)}, sort_keys=True) + "\n")

        for record in records:
            out.write(json.dumps(_plain(record), sort_keys=True) + "\n")


def read_records(path):
    try:
        with open(path, "r") as f:
            lines = [json.loads(line) for line in f if line.strip()]
    except FileNotFoundError:
        raise CYDValidationError(f"{path} not found")

    if not lines or "meta" not in lines[0]:
        raise CYDValidationError(f"{path} has no metadata line")

    return lines[1:], lines[0]["meta"]


def write_table(path, header, rows, meta):
    """Plot-ready TSV."""
    write_columns(path, header, rows, meta)
