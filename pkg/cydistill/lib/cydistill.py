# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""The stage facade the cli drives."""
import json
import os

import cydistill.lib.cyd_check as cyd_check
import cydistill.lib.cyd_common as cyd_common
import cydistill.lib.cyd_dataset as cyd_dataset
import cydistill.lib.cyd_donaldson as cyd_donaldson
import cydistill.lib.cyd_formula as cyd_formula
import cydistill.lib.cyd_geometry as cyd_geometry
import cydistill.lib.cyd_io as cyd_io
import cydistill.lib.cyd_moduli as cyd_moduli
import cydistill.lib.cyd_physics as cyd_physics
import cydistill.lib.cyd_report as cyd_report
import cydistill.lib.cyd_stats as cyd_stats
import cydistill.lib.cyd_symreg as cyd_symreg
from cydistill.lib.cyd_common import CYDValidationError
from cydistill.lib.cyd_json import CYDJson

POINTS = "points.tsv"
TEACHER = "teacher.json"
CURVATURE = "curvature.jsonl"
DATASET = "dataset.tsv"
ENSEMBLE = "ensemble.jsonl"
FIT = "fit.jsonl"
TRAJECTORY = "trajectory.jsonl"
TRAJECTORY_TABLE = "trajectory.tsv"
LINEAR_FIT = "linear_fit.jsonl"
MODULATION = "modulation.jsonl"
ERROR_BUDGET = "error_budget.jsonl"
VOLUME = "volume.jsonl"
YUKAWA = "yukawa.jsonl"
STATS = "stats.jsonl"
REPORT = "report.txt"
YUKAWA_PSIS = (0.0, 0.1, 0.2, 0.5)


def teacher_file(psi):
    return os.path.join("teachers", f"teacher_psi_{cyd_common.psi_key(psi)}"
                                    ".json")


class CYDistill(object):
    """
    Runs pipeline stages inside ``conf.output_dir``.

    Every stage writes ``<stage>.manifest.json`` with the config hash and
    the sha256 of its inputs and outputs. With ``force`` off a stage whose
    manifest still matches is skipped.
    """

    def __init__(self, conf, callback=None, silent=False,
                 exit_on_error=False):
        self.conf = conf
        self.out = conf.output_dir
        self.callback = cyd_common.callback if not callback else callback
        self.silent = silent
        self.exit_on_error = exit_on_error
        self.psi = cyd_geometry.check_psi(conf.psi)
        self.psi_key = cyd_common.psi_key(self.psi)

    def _path(self, name):
        return os.path.join(self.out, name)

    def _seed(self, *keys):
        return cyd_common.derive_seed(self.conf.seed, *keys)

    def _meta(self, inputs=(), **extra):
        meta = cyd_io.provenance(self.conf.hash, self.conf.seed,
                                 [self._path(i) for i in inputs])
        meta.update(extra)

        return meta

    def _log(self, message, level="VERBOSE"):
        cyd_common.logit({
            "level"  : level,
            "message": message
        }, _callback=self.callback, silent=self.silent)

    def _manifest(self, stage):
        return self._path(f"{stage}.manifest.json")

    def _hashes(self, names):
        missing = [n for n in names if not os.path.isfile(self._path(n))]

        if missing:
            raise CYDValidationError(
                f"missing input(s) {', '.join(missing)} in {self.out};"
                " run the upstream stage first")

        return {n: cyd_common.file_sha256(self._path(n)) for n in names}

    def _fresh(self, stage, upstream):
        try:
            with open(self._manifest(stage), "r") as f:
                manifest = json.load(f)
        except (FileNotFoundError, json.JSONDecodeError):
            return False

        if manifest.get("config_hash") != self.conf.hash or \
                manifest.get("upstream") != upstream:
            return False

        for name, sha in manifest.get("outputs", {}).items():
            path = self._path(name)

            if not os.path.isfile(path) or \
                    cyd_common.file_sha256(path) != sha:
                return False

        return True

    def _stage(self, stage, inputs, func, force):
        """Run func() unless its manifest is fresh; func returns outputs."""
        cyd_check.CYDCheck(self.conf, stages=(stage,), silent=self.silent,
                           callback=self.callback)
        upstream = self._hashes(inputs)

        if not force and self._fresh(stage, upstream):
            self._log(f"{stage}: up to date, skipping")
            return False

        self._log(f"{stage}: running", level="INFO")
        outputs = func()
        CYDJson.json_write({
            "stage"      : stage,
            "config_hash": self.conf.hash,
            "seed"       : self.conf.seed,
            "upstream"   : upstream,
            "outputs"    : self._hashes(outputs)
        }, self._manifest(stage))

        return True

    def sample(self, force=True):
        def run():
            seed = self._seed("points", self.psi_key)
            sample = cyd_geometry.sample_quintic(
                self.psi, self.conf.n_points, seed, n_jobs=self.conf.n_jobs)
            cyd_io.write_points(self._path(POINTS), sample, self._meta())
            self._log(f"Wrote {len(sample)} points at psi={self.psi} to"
                      f" {self._path(POINTS)}", level="INFO")

            return [POINTS]

        return self._stage("sample", (), run, force)

    def train_teacher(self, force=True):
        def run():
            cfg = self.conf.training_for(self._seed("teacher", self.psi_key))
            model = cyd_donaldson.train_balanced_metric(
                self.psi, self.conf.k, cfg, heavy=self.conf.heavy,
                callback=self.callback, silent=self.silent)
            cyd_io.write_teacher(self._path(TEACHER), model, self._meta())
            outputs = [TEACHER,
                       os.path.basename(cyd_io.sidecar_path(TEACHER))]
            self._log(f"Teacher k={model.k}: sigma"
                      f" {model.sigma_history[0]:.4f} -> {model.sigma:.4f}",
                      level="INFO")

            if self.conf.degree_scan:
                rows = cyd_donaldson.degree_scan(
                    self.psi, self.conf.degree_scan, cfg,
                    heavy=self.conf.heavy, callback=self.callback,
                    silent=self.silent)
                cyd_io.write_records(
                    self._path(CURVATURE),
                    [{k: v for k, v in row.items() if k != "model"}
                     for row in rows], self._meta(psi=self.psi))
                outputs.append(CURVATURE)

            return outputs

        return self._stage("train_teacher", (), run, force)

    def build_dataset(self, force=True):
        inputs = (POINTS, TEACHER)

        def run():
            sample, _ = cyd_io.read_points(self._path(POINTS))
            teacher, _ = cyd_io.read_teacher(self._path(TEACHER))
            ds = cyd_dataset.build_dataset(
                teacher, sample,
                cyd_common.file_sha256(self._path(TEACHER)))
            cyd_io.write_dataset(self._path(DATASET), ds, self._meta(inputs))

            if ds.dropped:
                self._log(f"Dropped {ds.dropped} points with singular"
                          " charts", level="WARNING")

            return [DATASET]

        return self._stage("build_dataset", inputs, run, force)

    def symreg(self, force=True):
        inputs = (DATASET,)

        def run():
            ds, _ = cyd_io.read_dataset(self._path(DATASET))
            report = cyd_symreg.ensemble_run(
                ds, self.conf.seeds, self.conf.symreg,
                self.conf.split_fraction, self.conf.n_jobs,
                callback=self.callback, silent=self.silent)
            summary = {
                "frequencies": report.frequencies,
                "best_r2"    : report.best_r2,
                "median_r2"  : report.median_r2,
                "worst_r2"   : report.worst_r2,
                "mean_r2"    : report.mean_r2,
                "std_r2"     : report.std_r2,
                "n_above_999": report.n_above_999
            }
            records = [dict(r.to_dict(), infix=cyd_symreg.render_infix(
                r.tree)) for r in report.results]
            cyd_io.write_records(self._path(ENSEMBLE), records,
                                 self._meta(inputs, summary=summary))

            return [ENSEMBLE]

        return self._stage("symreg", inputs, run, force)

    def fit_formula(self, force=True):
        inputs = (DATASET,)

        def run():
            ds, _ = cyd_io.read_dataset(self._path(DATASET))
            train, test = cyd_dataset.split(ds, self.conf.split_fraction,
                                            self._seed("split"))
            records = [dict(r.to_dict(), kind="model")
                       for r in cyd_formula.compare_models(train, test)]
            records += [dict(q, kind="quoted")
                        for q in cyd_formula.QUOTED_MODELS]
            coeffs = cyd_formula.fit_five_term(ds)
            coeffs.ci = cyd_moduli.bootstrap_ci(
                ds, self.conf.bootstrap_resamples,
                seed=self._seed("bootstrap", self.psi_key),
                silent=self.silent)
            records.append(dict(coeffs.to_dict(), kind="coefficients"))
            cyd_io.write_records(self._path(FIT), records,
                                 self._meta(inputs))
            self._log("Five-term fit: " + ", ".join(
                f"c{i}={c:+.6g}" for i, c in enumerate(coeffs.c)) +
                f" (R^2={coeffs.r2:.6f})", level="INFO")

            return [FIT]

        return self._stage("fit_formula", inputs, run, force)

    def moduli_scan(self, force=True):
        def run():
            conf = self.conf
            traj = cyd_moduli.scan_moduli(
                conf.psi_grid, conf.k, conf.n_points, conf.seed,
                conf.training, conf.bootstrap_resamples, conf.n_jobs,
                conf.heavy, callback=self.callback, silent=self.silent)
            outputs = []

            for psi, teacher in zip(traj.psi_grid, traj.teachers):
                name = teacher_file(psi)
                cyd_io.write_teacher(self._path(name), teacher,
                                     self._meta(psi=psi))
                outputs += [name, cyd_io.sidecar_path(name)]

            cyd_io.write_records(self._path(TRAJECTORY), traj.to_records(),
                                 self._meta(failures=traj.failures))
            cyd_io.write_table(
                self._path(TRAJECTORY_TABLE),
                ("psi", "c0", "c1", "c2", "c3", "c4", "ci0", "ci1", "ci2",
                 "ci3", "ci4", "teacher_sigma", "r2"),
                [[psi, *c.c, *traj.half_widths_at(j), s, r]
                 for j, (psi, c, s, r) in enumerate(zip(
                     traj.psi_grid, traj.coeffs, traj.teacher_sigma,
                     traj.r2))], self._meta())
            outputs += [TRAJECTORY, TRAJECTORY_TABLE]

            if len(traj) >= 3:
                cyd_io.write_records(
                    self._path(LINEAR_FIT),
                    cyd_moduli.linear_fit_trajectory(traj).to_records(),
                    self._meta())
                cyd_io.write_records(
                    self._path(MODULATION),
                    [{"coefficient": name, "label": label} for name, label
                     in cyd_moduli.classify_modulation(traj).items()],
                    self._meta())
                outputs += [LINEAR_FIT, MODULATION]

            budgets = []

            for psi, teacher, coeffs in zip(traj.psi_grid, traj.teachers,
                                            traj.coeffs):
                points = cyd_geometry.sample_quintic(
                    psi, conf.validation_points,
                    self._seed("budget", cyd_common.psi_key(psi)))
                budgets.append(dict(cyd_moduli.error_budget(
                    teacher, coeffs, points).to_dict(), scan="psi"))

            if conf.degree_scan:
                budgets += [dict(b.to_dict(), scan="degree") for b in
                            cyd_moduli.degree_budgets(
                                self.psi, conf.degree_scan, conf.n_points,
                                conf.seed, conf.validation_points,
                                conf.training, conf.heavy,
                                callback=self.callback, silent=self.silent)]

            cyd_io.write_records(self._path(ERROR_BUDGET), budgets,
                                 self._meta())

            return outputs + [ERROR_BUDGET]

        return self._stage("moduli_scan", (), run, force)

    def bench_volume(self, force=True):
        def run():
            records, _ = cyd_io.read_records(self._path(TRAJECTORY))
            traj = cyd_moduli.CoefficientTrajectory.from_records(records)
            reports = []

            for psi, coeffs in zip(traj.psi_grid, traj.coeffs):
                teacher, _ = cyd_io.read_teacher(
                    self._path(teacher_file(psi)))
                points = cyd_geometry.sample_quintic(
                    psi, self.conf.n_points,
                    self._seed("volume", cyd_common.psi_key(psi)),
                    n_jobs=self.conf.n_jobs)
                by_source = [cyd_physics.volume_integral(
                    source, points, self.conf.volume_batches,
                    self.conf.volume_calibration)
                    for source in (cyd_physics.fs_source(),
                                   cyd_physics.teacher_source(teacher),
                                   cyd_physics.formula_source(coeffs))]
                rel = cyd_physics.relative_difference(by_source[2],
                                                      by_source[1])
                reports += [dict(r.to_dict(), relative_to_teacher=rel
                                 if r.source == "five-term" else None)
                            for r in by_source]

            cyd_io.write_records(self._path(VOLUME), reports,
                                 self._meta(self._volume_inputs()))

            return [VOLUME]

        return self._stage("bench_volume", self._volume_inputs(), run, force)

    def _volume_inputs(self):
        if not os.path.isfile(self._path(TRAJECTORY)):
            return (TRAJECTORY,)

        records, _ = cyd_io.read_records(self._path(TRAJECTORY))

        return (TRAJECTORY,) + tuple(teacher_file(r["psi"])
                                     for r in records)

    def bench_yukawa(self, force=True):
        def run():
            reports = [cyd_physics.yukawa_fermat_check(
                psi, seed=self.conf.seed).to_dict() for psi in YUKAWA_PSIS]
            cyd_io.write_records(self._path(YUKAWA), reports, self._meta())

            return [YUKAWA]

        return self._stage("bench_yukawa", (), run, force)

    def validate_stats(self, force=True):
        inputs = (DATASET, ENSEMBLE, TEACHER)

        def run():
            conf = self.conf
            ds, _ = cyd_io.read_dataset(self._path(DATASET))
            teacher, _ = cyd_io.read_teacher(self._path(TEACHER))
            records = [
                dict(cyd_stats.permutation_test(
                    ds, feature, conf.permutations,
                    self._seed("permutation", feature), conf.n_jobs,
                    silent=self.silent).to_dict(), kind="permutation")
                for feature in cyd_stats.FEATURES]
            holdout = cyd_dataset.build_dataset(
                teacher, cyd_geometry.sample_quintic(
                    self.psi, conf.validation_points,
                    self._seed("holdout", self.psi_key)))
            members, _ = cyd_io.read_records(self._path(ENSEMBLE))
            ensemble = cyd_symreg.EnsembleReport(
                [cyd_symreg.SeedResult(
                    m["seed"], m["tree"], m["complexity"], m["loss"],
                    m["r2"], m["rmse"], tuple(m["motifs"]))
                 for m in members], {}, *[float("nan")] * 5, 0)

            if len(members) >= 3:
                loso = cyd_stats.loso_cv(ensemble, holdout)
                records += [dict(r, kind="loso") for r in loso.to_records()]

            coeffs = cyd_formula.fit_five_term(ds)
            pred = cyd_formula.eval_five_term(coeffs, holdout.p2,
                                              holdout.sigma3)
            records.append(dict(cyd_stats.residual_diagnostics(
                pred, holdout.y, holdout.weight).to_dict(),
                kind="residuals"))
            cyd_io.write_records(self._path(STATS), records,
                                 self._meta(inputs))

            return [STATS]

        return self._stage("validate_stats", inputs, run, force)

    def report(self, force=True):
        inputs = tuple(name for name in (
            CURVATURE, FIT, ENSEMBLE, TRAJECTORY, LINEAR_FIT, MODULATION,
            ERROR_BUDGET, VOLUME, YUKAWA, STATS)
            if os.path.isfile(self._path(name)))

        def run():
            text = cyd_report.render(
                {name: cyd_io.read_records(self._path(name))
                 for name in inputs}, self._meta(inputs))

            with cyd_common.open_atomic(self._path(REPORT), "w") as out:
                out.write(text)

            return [REPORT]

        return self._stage("report", inputs, run, force)

    def pipeline(self, force=False):
        """Every stage in order; returns (stage, ran) pairs."""
        cyd_check.CYDCheck(self.conf, silent=self.silent,
                           callback=self.callback)
        stages = (self.sample, self.train_teacher, self.build_dataset,
                  self.symreg, self.fit_formula, self.moduli_scan,
                  self.bench_volume, self.bench_yukawa, self.validate_stats,
                  self.report)

        return [(stage.__name__, stage(force=force)) for stage in stages]
