# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""Permutation tests, leave-one-seed-out validation and residual checks."""
import dataclasses

import joblib
import numpy as np
import scipy.stats

import cydistill.lib.cyd_common as cyd_common
import cydistill.lib.cyd_formula as cyd_formula
import cydistill.lib.cyd_symreg as cyd_symreg
from cydistill.lib.cyd_common import CYDValidationError

FEATURES = ("p2", "sigma3")
MIN_PERMUTATIONS = 100
MIN_RESIDUALS = 100
QQ_POINTS = 100
FITTED_BINS = 10

# Quoted for reports, never computed here.
REFERENCE_STATS = {
    "loso_nrmse_pct": (5.49, 0.28),
    "loso_worst_nrmse_pct": 5.89,
    "ensemble_r2": (0.9970, 0.0003),
    "null_mean_r2": {"p2": -16.5, "sigma3": -6.9},
    "shapiro_wilk_w": 0.986,
    "anderson_darling_a2": 34.68,
}


@dataclasses.dataclass
class PermutationResult:
    feature: str
    baseline_r2: float
    null_r2: np.ndarray
    p_value: float

    @property
    def permutations(self):
        return len(self.null_r2)

    @property
    def null_mean(self):
        return float(np.mean(self.null_r2))

    def significant(self, alpha=0.001):
        return self.p_value < alpha

    def to_dict(self):
        return {"feature": self.feature, "baseline_r2": self.baseline_r2,
                "null_mean_r2": self.null_mean,
                "null_std_r2": float(np.std(self.null_r2)),
                "p_value": self.p_value, "permutations": self.permutations}


@dataclasses.dataclass
class LosoResult:
    seeds: list
    nrmse: np.ndarray
    r2: np.ndarray

    @property
    def mean_nrmse(self):
        return float(np.mean(self.nrmse))

    @property
    def std_nrmse(self):
        return float(np.std(self.nrmse))

    @property
    def worst_nrmse(self):
        return float(np.max(self.nrmse))

    def to_records(self):
        return [{"left_out_seed": s, "nrmse": float(n), "r2": float(r)}
                for s, n, r in zip(self.seeds, self.nrmse, self.r2)]


@dataclasses.dataclass
class ResidualDiagnostics:
    n: int
    mean: float
    std: float
    skewness: float
    excess_kurtosis: float
    q025: float
    q975: float
    qq_theoretical: np.ndarray
    qq_empirical: np.ndarray
    fitted_bins: list

    def to_dict(self):
        data = dataclasses.asdict(self)
        data["qq_theoretical"] = [float(x) for x in self.qq_theoretical]
        data["qq_empirical"] = [float(x) for x in self.qq_empirical]

        return data


def _shuffled_r2(p2, sigma3, y, w, feature, seed, indices):
    out = []

    for b in indices:
        perm = np.random.default_rng([int(seed), int(b)]).permutation(len(y))

        if feature == "p2":
            x = cyd_formula.five_term_basis(p2[perm], sigma3)
        else:
            x = cyd_formula.five_term_basis(p2, sigma3[perm])

        coef = cyd_formula.weighted_lstsq(x, y, w,
                                          cyd_formula.FIVE_TERM_NAMES)
        out.append(cyd_formula.r_squared(x @ coef, y, w))

    return out


def permutation_test(ds, feature, B=1000, seed=0, n_jobs=1, silent=True):
    """
    Significance of one feature for the five-term fit.

    Permutation b shuffles the raw feature with default_rng([seed, b]) and
    rebuilds every basis column that depends on it before refitting.
    p = (1 + #{null R^2 >= baseline}) / (B + 1).
    """
    if feature not in FEATURES:
        raise CYDValidationError(f"feature must be one of {FEATURES},"
                                 f" got {feature!r}")

    if int(B) < MIN_PERMUTATIONS:
        raise CYDValidationError(
            f"permutation test needs at least {MIN_PERMUTATIONS} shuffles,"
            f" got {B}")

    baseline = cyd_formula.fit_five_term(ds).r2

    if baseline is None:
        raise CYDValidationError("permutation test needs a target with"
                                 " nonzero variance")

    indices = np.arange(int(B))

    if n_jobs == 1:
        null = []

        for chunk in cyd_common.progress(
                np.array_split(indices, min(int(B), 20)),
                desc=f"permute {feature}", silent=silent):
            null.extend(_shuffled_r2(ds.p2, ds.sigma3, ds.y, ds.weight,
                                     feature, seed, chunk))
    else:
        chunks = joblib.Parallel(n_jobs=n_jobs)(
            joblib.delayed(_shuffled_r2)(ds.p2, ds.sigma3, ds.y, ds.weight,
                                         feature, seed, chunk)
            for chunk in np.array_split(indices, 4 * abs(int(n_jobs))))
        null = [r for chunk in chunks for r in chunk]

    null = np.array(null, dtype=float)
    p_value = (1 + int(np.sum(null >= baseline))) / (len(null) + 1)

    return PermutationResult(feature, baseline, null, p_value)


def loso_cv(ensemble, holdout):
    """
    Leave each seed out in turn and score the mean prediction of the rest.

    NRMSE is the RMSE divided by the range of the holdout target.
    """
    results = ensemble.results

    if len(results) < 3:
        raise CYDValidationError("LOSO needs at least three seeds")

    span = float(np.ptp(holdout.y))

    if span == 0:
        raise CYDValidationError("LOSO needs a holdout target with nonzero"
                                 " range")

    preds = np.array([cyd_symreg.predict(r.tree, holdout.p2, holdout.sigma3)
                      for r in results])
    nrmse, r2 = [], []

    for i in range(len(results)):
        pred = np.mean(np.delete(preds, i, axis=0), axis=0)
        nrmse.append(cyd_formula.weighted_rmse(pred, holdout.y,
                                               holdout.weight) / span)
        score = cyd_formula.r_squared(pred, holdout.y, holdout.weight)
        r2.append(np.nan if score is None else score)

    return LosoResult([r.seed for r in results], np.array(nrmse),
                      np.array(r2))


def weighted_quantiles(x, q, w):
    order = np.argsort(x)
    x, w = x[order], w[order]
    cdf = (np.cumsum(w) - 0.5 * w) / np.sum(w)

    return np.interp(q, cdf, x)


def _fitted_bins(pred, resid, w):
    edges = np.unique(np.quantile(pred, np.linspace(0, 1, FITTED_BINS + 1)))
    which = np.clip(np.searchsorted(edges, pred, side="right") - 1, 0,
                    max(len(edges) - 2, 0))
    bins = []

    for j in range(max(len(edges) - 1, 1)):
        mask = which == j

        if not np.any(mask):
            continue

        mean = float(np.average(resid[mask], weights=w[mask]))
        bins.append({
            "fitted": float(np.average(pred[mask], weights=w[mask])),
            "mean"  : mean,
            "std"   : float(np.sqrt(np.average((resid[mask] - mean) ** 2,
                                               weights=w[mask]))),
            "count" : int(np.sum(mask))
        })

    return bins


def residual_diagnostics(pred, truth, weights=None):
    """Weighted moments, central 95% interval, Q-Q pairs, fitted bins."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)

    if pred.shape != truth.shape or truth.size < MIN_RESIDUALS:
        raise CYDValidationError(
            f"diagnostics need at least {MIN_RESIDUALS} paired values")

    w = np.ones_like(truth) if weights is None else \
        np.asarray(weights, dtype=float)
    resid = truth - pred
    total = np.sum(w)
    mean = float(np.sum(w * resid) / total)
    centred = resid - mean
    var = float(np.sum(w * centred ** 2) / total)
    std = float(np.sqrt(var))

    if std > 0:
        skew = float(np.sum(w * centred ** 3) / total / std ** 3)
        kurt = float(np.sum(w * centred ** 4) / total / var ** 2 - 3)
    else:
        skew = kurt = 0.0

    m = min(resid.size, QQ_POINTS)
    probs = (np.arange(1, m + 1) - 0.5) / m
    q025, q975 = weighted_quantiles(resid, [0.025, 0.975], w)

    return ResidualDiagnostics(
        int(resid.size), mean, std, skew, kurt, float(q025), float(q975),
        mean + std * scipy.stats.norm.ppf(probs),
        weighted_quantiles(resid, probs, w), _fitted_bins(pred, resid, w))
