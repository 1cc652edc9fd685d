# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""
The five-term scaffold

    y = c0 + c1/p2^2 + c2 sigma3/p2^3 + c3 p2 + c4 sigma3

and the weighted least-squares machinery shared with its baselines.
"""
import dataclasses

import numpy as np
import scipy.linalg

from cydistill.lib.cyd_common import CYDNumericalError, CYDValidationError

FIVE_TERM_NAMES = ("1", "1/p2^2", "sigma3/p2^3", "p2", "sigma3")
P2_ONLY_NAMES = ("1", "1/p2^2", "p2")
RANK_TOL = 1e-10
MIN_ROWS = 10

# Accuracy of externally trained models, shown next to our own fits.
QUOTED_MODELS = (
    {"model_id": "neural-network", "n_params": 15000, "r2": 0.997,
     "rmse": 0.008},
    {"model_id": "h-matrix-k10", "n_params": 875, "r2": 0.9994,
     "rmse": 0.0065},
)


@dataclasses.dataclass
class FiveTermCoefficients:
    c: np.ndarray
    psi: float = 0.0
    r2: float = None
    rmse: float = None
    ci: np.ndarray = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(5)

        if not np.all(np.isfinite(self.c)):
            raise CYDNumericalError("five-term coefficients must be finite")

    c0 = property(lambda self: float(self.c[0]))
    c1 = property(lambda self: float(self.c[1]))
    c2 = property(lambda self: float(self.c[2]))
    c3 = property(lambda self: float(self.c[3]))
    c4 = property(lambda self: float(self.c[4]))

    def to_dict(self):
        return {
            "psi" : self.psi,
            "c"   : [float(x) for x in self.c],
            "r2"  : self.r2,
            "rmse": self.rmse,
            "ci"  : None if self.ci is None else
            [[float(lo), float(hi)] for lo, hi in self.ci]
        }

    @classmethod
    def from_dict(cls, data):
        ci = data.get("ci")

        return cls(np.array(data["c"], dtype=float), data.get("psi", 0.0),
                   data.get("r2"), data.get("rmse"),
                   None if ci is None else np.array(ci, dtype=float))


TABLE_COEFFICIENTS = FiveTermCoefficients([0.0, 0.0022, -0.0011, 0.1245,
                                           0.050])


@dataclasses.dataclass
class FitReport:
    model_id: str
    n_params: int
    r2: float
    rmse: float
    residual_mean: float
    residual_std: float
    residual_max: float
    names: tuple = ()
    coefficients: tuple = ()

    def to_dict(self):
        return dataclasses.asdict(self)


def _coeff_array(c):
    if isinstance(c, FiveTermCoefficients):
        return c.c

    return np.asarray(c, dtype=float)


def eval_five_term(c, p2, sigma3):
    c = _coeff_array(c)
    p2 = np.asarray(p2, dtype=float)
    sigma3 = np.asarray(sigma3, dtype=float)

    return c[0] + c[1] / p2 ** 2 + c[2] * sigma3 / p2 ** 3 + c[3] * p2 + \
        c[4] * sigma3


def five_term_basis(p2, sigma3):
    p2 = np.asarray(p2, dtype=float)
    sigma3 = np.asarray(sigma3, dtype=float)

    return np.column_stack([np.ones_like(p2), 1 / p2 ** 2,
                            sigma3 / p2 ** 3, p2, sigma3])


def p2_only_basis(p2, sigma3=None):
    p2 = np.asarray(p2, dtype=float)

    return np.column_stack([np.ones_like(p2), 1 / p2 ** 2, p2])


def polynomial_terms(degree):
    """(a, b) exponents of p2^a sigma3^b with a + b <= degree."""
    if int(degree) < 1:
        raise CYDValidationError(f"polynomial degree must be >= 1, got"
                                 f" {degree}")

    return [(total - b, b) for total in range(int(degree) + 1)
            for b in range(total + 1)]


def polynomial_basis(p2, sigma3, degree):
    p2 = np.asarray(p2, dtype=float)
    sigma3 = np.asarray(sigma3, dtype=float)

    return np.column_stack([p2 ** a * sigma3 ** b
                            for a, b in polynomial_terms(degree)])


def polynomial_names(degree):
    return tuple(f"p2^{a}*sigma3^{b}" for a, b in polynomial_terms(degree))


def weighted_lstsq(x, y, w, names=None):
    """
    Weighted least squares by QR on the sqrt(w)-scaled, column-normalized
    design matrix. A pivot below RANK_TOL is reported with the columns it
    is collinear with.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    names = names or tuple(f"x{j}" for j in range(x.shape[1]))

    if x.shape[0] < x.shape[1]:
        raise CYDValidationError(
            f"{x.shape[0]} rows cannot determine {x.shape[1]} coefficients")

    sw = np.sqrt(w)
    a = x * sw[:, None]
    scale = np.linalg.norm(a, axis=0)
    zero = np.flatnonzero(scale == 0)

    if zero.size:
        raise CYDNumericalError(
            "design matrix is rank deficient: column(s) "
            f"{', '.join(names[j] for j in zero)} vanish on the data")

    q, r = np.linalg.qr(a / scale)
    pivots = np.abs(np.diag(r))

    for j in np.flatnonzero(pivots < RANK_TOL):
        partners = [names[i] for i in range(j)
                    if abs(r[i, j]) > RANK_TOL] or ["an earlier column"]
        raise CYDNumericalError(
            f"design matrix is rank deficient: column {names[j]} is"
            f" collinear with {', '.join(partners)}")

    coef = scipy.linalg.solve_triangular(r, q.T @ (y * sw))

    return coef / scale


def normal_equations_solve(x, y, w):
    """Independent solver for cross-checking the QR path."""
    x = np.asarray(x, dtype=float)
    xtw = x.T * np.asarray(w, dtype=float)

    return scipy.linalg.solve(xtw @ x, xtw @ np.asarray(y, dtype=float),
                              assume_a="pos")


def r_squared(pred, truth, weights=None):
    """Weighted R^2, or None when the truth has no variance."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)

    if pred.shape != truth.shape or truth.size < 2:
        raise CYDValidationError("r_squared needs two equal-length arrays"
                                 " with at least two entries")

    w = np.ones_like(truth) if weights is None else \
        np.asarray(weights, dtype=float)
    mean = np.sum(w * truth) / np.sum(w)
    ss_tot = np.sum(w * (truth - mean) ** 2)

    if ss_tot == 0 or np.ptp(truth) == 0:
        return None

    return float(1 - np.sum(w * (truth - pred) ** 2) / ss_tot)


def weighted_rmse(pred, truth, weights=None):
    resid = np.asarray(truth, dtype=float) - np.asarray(pred, dtype=float)
    w = np.ones_like(resid) if weights is None else \
        np.asarray(weights, dtype=float)

    return float(np.sqrt(np.sum(w * resid ** 2) / np.sum(w)))


def _check_rows(ds, n_params):
    if len(ds) < max(MIN_ROWS, n_params):
        raise CYDValidationError(
            f"fitting needs at least {max(MIN_ROWS, n_params)} rows, got"
            f" {len(ds)}")


def _fit(model_id, basis, names, ds, holdout):
    _check_rows(ds, len(names))
    coef = weighted_lstsq(basis(ds.p2, ds.sigma3), ds.y, ds.weight, names)
    target = ds if holdout is None else holdout
    pred = basis(target.p2, target.sigma3) @ coef
    resid = target.y - pred

    return coef, FitReport(
        model_id, len(names), r_squared(pred, target.y, target.weight),
        weighted_rmse(pred, target.y, target.weight),
        float(np.average(resid, weights=target.weight)),
        float(np.sqrt(np.average((resid - np.average(
            resid, weights=target.weight)) ** 2, weights=target.weight))),
        float(np.max(np.abs(resid))), tuple(names),
        tuple(float(c) for c in coef))


def fit_five_term_report(ds, holdout=None):
    return _fit("five-term", five_term_basis, FIVE_TERM_NAMES, ds, holdout)


def fit_five_term(ds, holdout=None):
    """Fit c0..c4; R^2 and RMSE are measured on holdout when given."""
    coef, report = fit_five_term_report(ds, holdout)

    return FiveTermCoefficients(coef, ds.psi, report.r2, report.rmse)


def fit_p2_only(ds, holdout=None):
    return _fit("p2-only", p2_only_basis, P2_ONLY_NAMES, ds, holdout)[1]


def fit_polynomial_baseline(ds, degree=3, holdout=None):
    names = polynomial_names(degree)

    def basis(p2, sigma3):
        return polynomial_basis(p2, sigma3, degree)

    return _fit(f"polynomial-deg{int(degree)}", basis, names, ds,
                holdout)[1]


def fit_constant_baseline(ds, holdout=None):
    def basis(p2, sigma3):
        return np.ones((len(np.atleast_1d(p2)), 1))

    return _fit("constant", basis, ("1",), ds, holdout)[1]


def compare_models(train, test=None, degree=3):
    """Accuracy against parameter count, simplest model first."""
    return [
        fit_constant_baseline(train, test),
        fit_p2_only(train, test),
        fit_five_term_report(train, test)[1],
        fit_polynomial_baseline(train, degree, test),
    ]
