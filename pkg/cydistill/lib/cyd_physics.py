# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""Volume integral and Fermat-point Yukawa benchmarks."""
import dataclasses

import numpy as np

import cydistill.lib.cyd_common as cyd_common
import cydistill.lib.cyd_donaldson as cyd_donaldson
import cydistill.lib.cyd_formula as cyd_formula
import cydistill.lib.cyd_geometry as cyd_geometry
from cydistill.lib.cyd_common import CYDValidationError

# Monte Carlo estimates scale the mean density ratio by this constant, so
# that the FS metric integrates to 10 and its normalized volume is 5/3.
VOLUME_CALIBRATION = 10.0
VOLUME_NORMALIZATION = 6.0
VOLUME_REFERENCE = 5.0 / 3.0
VOLUME_BATCHES = 10
MIN_VOLUME_POINTS = 1000

# Display only.
VOLUME_REFERENCE_RAW = (9.4547, 0.0156)
VOLUME_REFERENCE_NORMALIZED = 1.5758
YUKAWA_FERMAT = 5.0
YUKAWA_REFERENCE_VALUES = {0.0: 5.0, 0.1: 4.999998, 0.2: 4.999936,
                           0.5: 4.993719}
UNSPECIFIED = "method unspecified"


@dataclasses.dataclass(frozen=True)
class VolumeSource:
    """``ratio(frame, p2, sigma3)`` returns det g / det g_FS per point."""
    name: str
    ratio: object


@dataclasses.dataclass
class VolumeReport:
    source: str
    psi: float
    raw: float
    mc_error: float
    n_points: int
    batches: int
    calibration: float = VOLUME_CALIBRATION
    reference: float = VOLUME_REFERENCE

    @property
    def normalized(self):
        return self.raw / VOLUME_NORMALIZATION

    @property
    def normalized_error(self):
        return self.mc_error / VOLUME_NORMALIZATION

    @property
    def agreement_pct(self):
        return 100 * (1 - abs(self.normalized - self.reference) /
                      self.reference)

    def to_dict(self):
        return dict(dataclasses.asdict(self), normalized=self.normalized,
                    normalized_error=self.normalized_error,
                    agreement_pct=self.agreement_pct)


@dataclasses.dataclass
class YukawaReport:
    psi: float
    kappa: float = None
    reference: float = None
    status: str = "exact"

    @property
    def error_pct(self):
        if self.kappa is None or not self.reference:
            return None

        return 100 * abs(self.kappa - self.reference) / self.reference

    def to_dict(self):
        return dict(dataclasses.asdict(self), error_pct=self.error_pct)


def fs_source():
    return VolumeSource("fubini-study",
                        lambda frame, p2, sigma3: np.ones(len(frame)))


def teacher_source(model):
    def ratio(frame, p2, sigma3):
        sections = cyd_donaldson.section_frame(model.basis, frame)

        return np.exp(cyd_donaldson.log_det_metric(
            model.h, sections, frame, model.k) - np.log(frame.fs_det))

    return VolumeSource(f"teacher-k{model.k}", ratio)


def formula_source(coeffs):
    def ratio(frame, p2, sigma3):
        return np.exp(cyd_formula.eval_five_term(coeffs, p2, sigma3))

    return VolumeSource("five-term", ratio)


def volume_integral(source, points, batches=VOLUME_BATCHES,
                    calibration=VOLUME_CALIBRATION):
    """
    Monte Carlo volume from FS-distributed points.

    raw = calibration * mean(det g / det g_FS); the error is the batch-means
    standard error over ``batches`` contiguous batches, which keeps the sum
    order fixed.
    """
    if len(points) < MIN_VOLUME_POINTS:
        raise CYDValidationError(
            f"volume needs at least {MIN_VOLUME_POINTS} points, got"
            f" {len(points)}")

    if int(batches) < 2 or len(points) < int(batches):
        raise CYDValidationError(f"cannot form {batches} batches from"
                                 f" {len(points)} points")

    if not calibration > 0:
        raise CYDValidationError("volume calibration must be positive")

    frame = cyd_geometry.chart_frame(points, points.psi)
    p2, _, sigma3 = cyd_geometry.feature_arrays(points.z)
    ratio = np.asarray(source.ratio(frame, p2, sigma3), dtype=float)
    means = np.array([np.mean(b) for b in
                      np.array_split(ratio, int(batches))])
    raw = calibration * float(np.mean(ratio))
    error = calibration * float(np.std(means, ddof=1)) / np.sqrt(len(means))

    return VolumeReport(source.name, float(points.psi), raw, error,
                        len(points), int(batches), float(calibration))


def relative_difference(report, baseline):
    return abs(report.raw - baseline.raw) / baseline.raw


def _degree(psi, seed):
    """Homogeneous degree of Q, read off Q(2z) = 2^d Q(z)."""
    rng = np.random.default_rng(cyd_common.derive_seed(seed, "yukawa"))

    while True:
        z = rng.normal(size=(1, cyd_geometry.N_COORDS)) + \
            1j * rng.normal(size=(1, cyd_geometry.N_COORDS))
        value = cyd_geometry.quintic_eval(z, psi)[0]

        if value != 0:
            break

    return float(np.log2(abs(cyd_geometry.quintic_eval(2 * z, psi)[0] /
                             value)))


def yukawa_fermat_check(psi, seed=0):
    """
    Topological kappa_111 = deg(X) times the P^4 hyperplane number at the
    Fermat point. Other psi carry only the literature value.
    """
    psi = cyd_geometry.check_psi(psi)

    if psi != 0:
        return YukawaReport(psi, None, YUKAWA_REFERENCE_VALUES.get(psi),
                            UNSPECIFIED)

    hyperplane = 1.0

    return YukawaReport(psi, _degree(psi, seed) * hyperplane, YUKAWA_FERMAT)


def volume_table(reports):
    rows = [[r.source, r.psi, r.raw, r.mc_error, r.normalized,
             r.agreement_pct] for r in reports]

    return cyd_common.draw_table(
        ["source", "psi", "raw", "mc error", "normalized", "agreement %"],
        rows, precision=4)


def yukawa_table(reports):
    rows = [[r.psi, "-" if r.kappa is None else f"{r.kappa:.6f}",
             "-" if r.reference is None else r.reference, r.status]
            for r in reports]

    return cyd_common.draw_table(["psi", "kappa", "reference", "status"],
                                 rows, dtype=["f", "t", "t", "t"],
                                 precision=2)
