# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""Check a run configuration before any stage starts."""
import cydistill.lib.cyd_common as cyd_common
import cydistill.lib.cyd_donaldson as cyd_donaldson
import cydistill.lib.cyd_geometry as cyd_geometry
import cydistill.lib.cyd_moduli as cyd_moduli
import cydistill.lib.cyd_physics as cyd_physics
import cydistill.lib.cyd_stats as cyd_stats
from cydistill.lib.cyd_common import CYDValidationError

STAGES = ("sample", "train_teacher", "build_dataset", "symreg",
          "fit_formula", "moduli_scan", "bench_volume", "bench_yukawa",
          "validate_stats", "report")


class CYDCheck(object):
    """
    Runs every precondition the requested stages rely on and raises one
    CYDValidationError listing all violations.
    """

    def __init__(self, conf, stages=STAGES, silent=False, callback=None):
        self.conf = conf
        self.stages = set(stages)
        self.silent = silent
        self.callback = callback
        self.errors = []

        self.__check_common__()
        self.__check_stages__()

        if self.errors:
            raise CYDValidationError("invalid configuration:\n  " +
                                     "\n  ".join(self.errors))

    def _try(self, func, *args, **kwargs):
        try:
            func(*args, **kwargs)
        except CYDValidationError as err:
            self.errors.append(str(err))

    def __check_common__(self):
        conf = self.conf
        self._try(cyd_geometry.check_psi, conf.psi)

        if conf.n_points < 1:
            self.errors.append("n_points must be >= 1")

        if conf.n_jobs == 0:
            self.errors.append("n_jobs must not be 0")

        if not 0 < conf.split_fraction < 1:
            self.errors.append("split_fraction must be in (0, 1)")

    def __check_stages__(self):
        conf = self.conf
        wants = self.stages.intersection

        if wants({"train_teacher", "moduli_scan"}):
            self.errors.extend(conf.training.validate())
            self._try(cyd_donaldson.check_degree, conf.k, conf.heavy,
                      callback=self.callback, silent=True)

            for k in conf.degree_scan:
                self._try(cyd_donaldson.check_degree, k, conf.heavy,
                          callback=self.callback, silent=True)

        if wants({"symreg", "validate_stats"}):
            self.errors.extend(conf.symreg.validate())

            if len(set(conf.seeds)) < 3:
                self.errors.append("seeds needs at least three distinct"
                                   " values")

        if wants({"fit_formula", "moduli_scan"}) and \
                conf.bootstrap_resamples < cyd_moduli.MIN_BOOTSTRAP:
            self.errors.append(
                f"bootstrap_resamples must be >="
                f" {cyd_moduli.MIN_BOOTSTRAP}")

        if wants({"moduli_scan", "bench_volume"}):
            self._try(cyd_moduli.check_grid, conf.psi_grid)

            if len(conf.psi_grid) < 3:
                self.errors.append("psi_grid needs at least three values")

        if wants({"bench_volume"}):
            if conf.n_points < cyd_physics.MIN_VOLUME_POINTS:
                self.errors.append(
                    f"n_points must be >= {cyd_physics.MIN_VOLUME_POINTS}"
                    " for the volume benchmark")

            if conf.volume_batches < 2:
                self.errors.append("volume_batches must be >= 2")

            if not conf.volume_calibration > 0:
                self.errors.append("volume_calibration must be > 0")

        if wants({"validate_stats"}):
            if conf.permutations < cyd_stats.MIN_PERMUTATIONS:
                self.errors.append(
                    f"permutations must be >= {cyd_stats.MIN_PERMUTATIONS}")

            if conf.validation_points < cyd_stats.MIN_RESIDUALS:
                self.errors.append(
                    f"validation_points must be >="
                    f" {cyd_stats.MIN_RESIDUALS}")

        if self.errors:
            cyd_common.logit({
                "level"  : "DEBUG",
                "message": f"{len(self.errors)} configuration problem(s)"
            }, _callback=self.callback, silent=self.silent)
