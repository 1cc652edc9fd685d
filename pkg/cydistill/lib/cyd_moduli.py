# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""Cross-moduli scan: coefficient trajectories c_i(psi) and their analysis."""
import dataclasses
import logging

import joblib
import numpy as np

import cydistill.lib.cyd_common as cyd_common
import cydistill.lib.cyd_dataset as cyd_dataset
import cydistill.lib.cyd_donaldson as cyd_donaldson
import cydistill.lib.cyd_formula as cyd_formula
import cydistill.lib.cyd_geometry as cyd_geometry
from cydistill.lib.cyd_common import CYDNumericalError, CYDValidationError

PSI_MAX = 0.8
MIN_BOOTSTRAP = 100
NEGLIGIBLE = 1e-3
LABELS = ("negligible", "sign-reversal", "monotonic", "weak",
          "non-monotonic")
WEAK_SPREAD = 3.0
COEFFICIENT_NAMES = ("c0", "c1", "c2", "c3", "c4")
_LOG = logging.getLogger("cyd_moduli")

# Display-only reference values, percentages where sigma is involved.
REFERENCE_TRAJECTORY = (
    {"psi": 0.0, "c": (0.0, 0.0022, -0.0011, 0.124, 0.050),
     "ci": (0.0, 0.0002, 0.0001, 0.001, 0.001), "sigma": 0.81,
     "r2": 0.9994},
    {"psi": 0.2, "c": (0.0, -0.0039, -0.0055, -0.040, 0.375),
     "ci": (0.0, 0.0004, 0.0006, 0.002, 0.008), "sigma": 9.25, "r2": 0.998},
    {"psi": 0.4, "c": (0.0, -0.0038, -0.0076, -0.048, 0.519),
     "ci": (0.0, 0.0004, 0.0008, 0.002, 0.009), "sigma": 9.27, "r2": 0.997},
    {"psi": 0.6, "c": (0.0, -0.0027, -0.0095, -0.055, 0.598),
     "ci": (0.0, 0.0005, 0.0009, 0.003, 0.011), "sigma": 9.19, "r2": 0.996},
    {"psi": 0.8, "c": (0.0, -0.0006, -0.0126, -0.075, 0.741),
     "ci": (0.0, 0.0008, 0.0012, 0.004, 0.015), "sigma": 9.43, "r2": 0.994},
)
REFERENCE_ERROR_DECOMPOSITION = (
    {"psi": 0.0, "teacher": 0.6, "distillation": 0.2, "extrapolation": 0.0,
     "total": 0.8},
    {"psi": 0.4, "teacher": 5.0, "distillation": 0.5, "extrapolation": 0.0,
     "total": 5.5},
    {"psi": 0.8, "teacher": 9.4, "distillation": 0.5, "extrapolation": 0.0,
     "total": 10.0},
)
REFERENCE_ERROR_BUDGET = (
    {"k": 6, "teacher": 7.45, "student": 8.0, "distillation": 0.6},
    {"k": 8, "teacher": 6.63, "student": 7.0, "distillation": 0.4},
    {"k": 10, "teacher": 0.61, "student": 0.81, "distillation": 0.20},
)
REFERENCE_CURVATURE = (
    {"k": 6, "basis_size": 205, "sigma": 7.45},
    {"k": 8, "basis_size": 460, "sigma": 6.63},
    {"k": 10, "basis_size": 875, "sigma": 0.61},
)
# sigma at psi=0.8 when a psi=0 teacher is reused without retraining.
ZERO_SHOT_SIGMA_PCT = 30.0


@dataclasses.dataclass
class CoefficientTrajectory:
    psi_grid: list
    coeffs: list
    teacher_sigma: list
    r2: list
    failures: dict = dataclasses.field(default_factory=dict)
    teachers: list = dataclasses.field(default_factory=list, repr=False,
                                       compare=False)

    def __post_init__(self):
        grid = np.asarray(self.psi_grid, dtype=float)

        if grid.size and (np.any(np.diff(grid) <= 0) or grid[0] < 0 or
                          grid[-1] > PSI_MAX):
            raise CYDValidationError(
                f"psi grid must be strictly increasing within [0, {PSI_MAX}]")

    def __len__(self):
        return len(self.psi_grid)

    def column(self, i):
        return np.array([c.c[i] for c in self.coeffs])

    def half_widths(self, i):
        return np.array([0.0 if c.ci is None else
                         (c.ci[i][1] - c.ci[i][0]) / 2 for c in self.coeffs])

    def half_widths_at(self, j):
        ci = self.coeffs[j].ci

        return [0.0] * 5 if ci is None else [(hi - lo) / 2 for lo, hi in ci]

    def sorted(self):
        order = np.argsort(self.psi_grid)

        return CoefficientTrajectory(
            [self.psi_grid[j] for j in order],
            [self.coeffs[j] for j in order],
            [self.teacher_sigma[j] for j in order],
            [self.r2[j] for j in order], dict(self.failures),
            [self.teachers[j] for j in order] if self.teachers else [])

    def to_records(self):
        return [dict(c.to_dict(), psi=float(psi), teacher_sigma=sigma)
                for psi, c, sigma in zip(self.psi_grid, self.coeffs,
                                         self.teacher_sigma)]

    @classmethod
    def from_records(cls, records, failures=None):
        records = sorted(records, key=lambda r: r["psi"])

        return cls([r["psi"] for r in records],
                   [cyd_formula.FiveTermCoefficients.from_dict(r)
                    for r in records],
                   [r.get("teacher_sigma") for r in records],
                   [r.get("r2") for r in records], dict(failures or {}))


@dataclasses.dataclass
class LinearTrajectoryFit:
    intercept: np.ndarray
    slope: np.ndarray
    r2: list

    def to_records(self):
        return [{"coefficient": name, "intercept": float(a),
                 "slope": float(b), "r2": r2}
                for name, a, b, r2 in zip(COEFFICIENT_NAMES, self.intercept,
                                          self.slope, self.r2)]


@dataclasses.dataclass
class ErrorBudget:
    psi: float
    k: int
    teacher_sigma: float
    student_sigma: float
    distillation: float
    extrapolation: float = 0.0

    @property
    def total(self):
        return self.teacher_sigma + self.distillation + self.extrapolation

    def to_dict(self):
        return dict(dataclasses.asdict(self), total=self.total)


def reference_trajectory():
    coeffs = []

    for row in REFERENCE_TRAJECTORY:
        c = np.array(row["c"])
        hw = np.array(row["ci"])
        coeffs.append(cyd_formula.FiveTermCoefficients(
            c, row["psi"], row["r2"], None,
            np.column_stack([c - hw, c + hw])))

    return CoefficientTrajectory(
        [row["psi"] for row in REFERENCE_TRAJECTORY], coeffs,
        [row["sigma"] / 100 for row in REFERENCE_TRAJECTORY],
        [row["r2"] for row in REFERENCE_TRAJECTORY])


def check_grid(psis):
    grid = sorted(float(p) for p in psis)

    if not grid:
        raise CYDValidationError("psi grid is empty")

    for psi in grid:
        if not 0 <= psi <= PSI_MAX:
            raise CYDValidationError(f"psi={psi} outside [0, {PSI_MAX}]")

    if len(set(cyd_common.psi_key(p) for p in grid)) != len(grid):
        raise CYDValidationError("psi grid has duplicate values")

    return grid


def psi_seeds(seed, psi):
    key = cyd_common.psi_key(psi)

    return {stage: cyd_common.derive_seed(seed, stage, key)
            for stage in ("teacher", "points", "bootstrap")}


def bootstrap_ci(ds, B=1000, level=0.95, seed=0, silent=True):
    """
    Percentile intervals for c0..c4 from B row resamples with replacement.

    Resample b draws from default_rng([seed, b]); rows keep their weights.
    Returns an array of shape (5, 2).
    """
    if int(B) < MIN_BOOTSTRAP:
        raise CYDValidationError(
            f"bootstrap needs at least {MIN_BOOTSTRAP} resamples, got {B}")

    if not 0 < level < 1:
        raise CYDValidationError(f"level must be in (0, 1), got {level}")

    x = cyd_formula.five_term_basis(ds.p2, ds.sigma3)
    n = len(ds)
    draws = []

    for b in cyd_common.progress(range(int(B)), desc="bootstrap",
                                 silent=silent):
        idx = np.random.default_rng([int(seed), b]).integers(0, n, n)

        try:
            draws.append(cyd_formula.weighted_lstsq(
                x[idx], ds.y[idx], ds.weight[idx],
                cyd_formula.FIVE_TERM_NAMES))
        except CYDNumericalError as err:
            _LOG.debug("bootstrap resample %d skipped: %s", b, err)

    if len(draws) < MIN_BOOTSTRAP:
        raise CYDNumericalError(
            f"only {len(draws)} of {B} bootstrap resamples were solvable")

    tail = (1 - level) / 2 * 100

    return np.percentile(np.array(draws), [tail, 100 - tail], axis=0).T


def fit_at_psi(psi, k, n_points, seed, training_cfg=None, bootstrap=0,
               heavy=False, n_jobs=1, callback=None, silent=True):
    """Independent teacher, sample, dataset and five-term fit at one psi."""
    seeds = psi_seeds(seed, psi)
    cfg = dataclasses.replace(training_cfg or cyd_donaldson.TrainingConfig(),
                              seed=seeds["teacher"])
    teacher = cyd_donaldson.train_balanced_metric(
        psi, k, cfg, heavy=heavy, callback=callback, silent=silent)
    sample = cyd_geometry.sample_quintic(psi, n_points, seeds["points"],
                                         n_jobs=n_jobs)
    ds = cyd_dataset.build_dataset(teacher, sample)
    coeffs = cyd_formula.fit_five_term(ds)

    if bootstrap:
        coeffs.ci = bootstrap_ci(ds, bootstrap, seed=seeds["bootstrap"])

    return teacher, ds, coeffs


def _scan_job(psi, k, n_points, seed, training_cfg, bootstrap, heavy):
    try:
        teacher, _, coeffs = fit_at_psi(psi, k, n_points, seed, training_cfg,
                                        bootstrap, heavy)
    except CYDNumericalError as err:
        return psi, None, None, str(err)

    return psi, teacher, coeffs, None


def scan_moduli(psis, k, n_points, seed, training_cfg=None, bootstrap=0,
                n_jobs=1, heavy=False, callback=None, silent=False):
    """
    Fit the five-term scaffold at every psi with its own teacher.

    A numerical failure at one psi is recorded in ``failures`` and the
    scan continues; results are merged in psi order.
    """
    grid = check_grid(psis)
    cyd_donaldson.check_degree(k, heavy, callback=callback, silent=True)

    if n_jobs == 1:
        jobs = [_scan_job(psi, k, n_points, seed, training_cfg, bootstrap,
                          heavy)
                for psi in cyd_common.progress(grid, desc="moduli scan",
                                               silent=silent)]
    else:
        jobs = joblib.Parallel(n_jobs=n_jobs)(
            joblib.delayed(_scan_job)(psi, k, n_points, seed, training_cfg,
                                      bootstrap, heavy) for psi in grid)

    done = [job for job in jobs if job[3] is None]
    failures = {cyd_common.psi_key(psi): msg for psi, _, _, msg in jobs
                if msg is not None}

    for key, msg in failures.items():
        cyd_common.logit({
            "level"  : "WARNING",
            "message": f"psi={key} skipped: {msg}"
        }, _callback=callback, silent=silent)

    if not done:
        raise CYDNumericalError("every psi in the scan failed")

    return CoefficientTrajectory(
        [psi for psi, *_ in done], [c for _, _, c, _ in done],
        [t.sigma for _, t, _, _ in done], [c.r2 for _, _, c, _ in done],
        failures, [t for _, t, _, _ in done])


def trajectory_from_datasets(datasets, teacher_sigma=None, bootstrap=0,
                             seed=0):
    """Trajectory from prebuilt per-psi datasets, e.g. planted ones."""
    datasets = sorted(datasets, key=lambda d: d.psi)
    coeffs = []

    for ds in datasets:
        c = cyd_formula.fit_five_term(ds)

        if bootstrap:
            c.ci = bootstrap_ci(ds, bootstrap,
                                seed=psi_seeds(seed, ds.psi)["bootstrap"])
        coeffs.append(c)

    sigma = list(teacher_sigma) if teacher_sigma is not None else \
        [None] * len(datasets)

    return CoefficientTrajectory([d.psi for d in datasets], coeffs, sigma,
                                 [c.r2 for c in coeffs])


def linear_fit_trajectory(traj):
    """Ordinary least squares c_i(psi) = A_i + B_i psi per coefficient."""
    if len(traj) < 3:
        raise CYDValidationError("a linear trajectory fit needs at least"
                                 " three psi values")

    psi = np.asarray(traj.psi_grid, dtype=float)
    x = np.column_stack([np.ones_like(psi), psi])
    intercept, slope, r2 = [], [], []

    for i in range(5):
        col = traj.column(i)
        (a, b), *_ = np.linalg.lstsq(x, col, rcond=None)
        intercept.append(a)
        slope.append(b)
        r2.append(None if np.ptp(col) == 0 else
                  cyd_formula.r_squared(x @ (a, b), col))

    return LinearTrajectoryFit(np.array(intercept), np.array(slope), r2)


def _label(values, half_width):
    if np.max(np.abs(values)) < NEGLIGIBLE:
        return "negligible"

    lo, hi = int(np.argmin(values)), int(np.argmax(values))

    if values[lo] < 0 < values[hi] and -values[lo] > half_width[lo] and \
            values[hi] > half_width[hi]:
        return "sign-reversal"

    steps = np.diff(values)
    noise = np.maximum(half_width[:-1], half_width[1:])

    if (np.all(steps > 0) or np.all(steps < 0)) and \
            np.all(np.abs(steps) > noise):
        return "monotonic"

    if np.ptp(values) < WEAK_SPREAD * np.median(2 * half_width):
        return "weak"

    # Moves by more than its intervals allow, but not in one direction.
    return "non-monotonic"


def classify_modulation(traj):
    """
    Label every coefficient by how it moves over the grid, first match
    wins: negligible, sign-reversal, monotonic, weak. A swing that none
    of these explain is non-monotonic.
    """
    if len(traj) < 3:
        raise CYDValidationError("classification needs at least three psi"
                                 " values")

    traj = traj.sorted()

    return {name: _label(traj.column(i), traj.half_widths(i))
            for i, name in enumerate(COEFFICIENT_NAMES)}


def student_log_eta(coeffs, frame, p2, sigma3):
    """log eta with det g_alg replaced by det g_FS exp(y_hat)."""
    return np.log(frame.fs_det) + \
        cyd_formula.eval_five_term(coeffs, p2, sigma3) - np.log(frame.omega)


def error_budget(teacher, coeffs, points):
    """Teacher sigma, symbolic-student sigma and their difference."""
    frame = cyd_geometry.chart_frame(points, teacher.psi)

    if len(frame) < 100:
        raise CYDValidationError("an error budget needs at least 100 points")

    sections = cyd_donaldson.section_frame(teacher.basis, frame)
    teacher_sigma = cyd_donaldson.sigma_from_log_eta(
        cyd_donaldson.log_eta(teacher, frame, sections), frame.weight)
    p2, _, sigma3 = cyd_geometry.feature_arrays(points.z)
    student_sigma = cyd_donaldson.sigma_from_log_eta(
        student_log_eta(coeffs, frame, p2, sigma3), frame.weight)

    return ErrorBudget(float(teacher.psi), teacher.k, teacher_sigma,
                       student_sigma, student_sigma - teacher_sigma)


def degree_budgets(psi, ks, n_points, seed, validation_points,
                   training_cfg=None, heavy=False, callback=None,
                   silent=True):
    """
    Error budget at one psi for each teacher degree in ``ks``.

    Every degree is scored on the same validation sample, drawn from the
    "budget" seed for psi, so rows differ only by k.
    """
    points = cyd_geometry.sample_quintic(
        psi, validation_points,
        cyd_common.derive_seed(seed, "budget", cyd_common.psi_key(psi)))
    budgets = []

    for k in sorted(set(int(k) for k in ks)):
        teacher, _, coeffs = fit_at_psi(psi, k, n_points, seed, training_cfg,
                                        heavy=heavy, callback=callback,
                                        silent=silent)
        budgets.append(error_budget(teacher, coeffs, points))

    return budgets


def trajectory_table(traj):
    rows = [[psi] + [float(x) for x in c.c] +
            [np.nan if s is None else 100 * s, np.nan if r is None else r]
            for psi, c, s, r in zip(traj.psi_grid, traj.coeffs,
                                    traj.teacher_sigma, traj.r2)]

    return cyd_common.draw_table(
        ["psi", "c0", "c1", "c2", "c3", "c4", "sigma %", "R^2"], rows,
        precision=5)
