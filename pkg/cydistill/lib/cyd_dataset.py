# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""Regression rows (p2, sigma3) -> y = log(det g_alg / det g_FS)."""
import dataclasses
import logging

import numpy as np

import cydistill.lib.cyd_donaldson as cyd_donaldson
import cydistill.lib.cyd_geometry as cyd_geometry
from cydistill.lib.cyd_common import CYDNumericalError, CYDValidationError

MAX_DROP_FRACTION = 1e-3
_LOG = logging.getLogger("cyd_dataset")


@dataclasses.dataclass(frozen=True)
class RegressionRow:
    p2: float
    sigma3: float
    y: float
    weight: float


@dataclasses.dataclass
class Dataset:
    p2: np.ndarray
    p3: np.ndarray
    sigma3: np.ndarray
    y: np.ndarray
    weight: np.ndarray
    psi: float = 0.0
    teacher_k: int = 0
    split_seed: int = None
    teacher_hash: str = ""
    dropped: int = 0

    def __post_init__(self):
        if len(self.y) == 0:
            raise CYDValidationError("a dataset needs at least one row")

        if not np.all(np.isfinite(self.y)):
            raise CYDNumericalError("dataset targets must be finite")

    def __len__(self):
        return len(self.y)

    def rows(self):
        return [RegressionRow(float(a), float(b), float(c), float(d))
                for a, b, c, d in zip(self.p2, self.sigma3, self.y,
                                      self.weight)]

    def take(self, idx, split_seed=None):
        idx = np.asarray(idx, dtype=int)

        return dataclasses.replace(
            self, p2=self.p2[idx], p3=self.p3[idx], sigma3=self.sigma3[idx],
            y=self.y[idx], weight=self.weight[idx],
            split_seed=self.split_seed if split_seed is None else split_seed)

    def with_target(self, y):
        return dataclasses.replace(self, y=np.asarray(y, dtype=float))

    @classmethod
    def from_features(cls, p2, sigma3, y, weight=None, psi=0.0,
                      teacher_k=0):
        """Planted datasets; p3 follows from the Newton identity."""
        p2 = np.asarray(p2, dtype=float)
        sigma3 = np.asarray(sigma3, dtype=float)
        weight = np.ones_like(p2) if weight is None else \
            np.asarray(weight, dtype=float)

        return cls(p2, (6 * sigma3 - 1 + 3 * p2) / 2, sigma3,
                   np.asarray(y, dtype=float), weight, float(psi),
                   int(teacher_k))


def build_dataset(teacher, sample, teacher_hash=""):
    """
    Pair each sampled point's features with the teacher's log-ratio.

    Points whose stored chart has gone singular are dropped; more than
    0.1% of them is treated as a numerical failure.
    """
    if abs(float(teacher.psi) - float(sample.psi)) > 1e-12:
        raise CYDValidationError(
            f"teacher psi={teacher.psi} differs from sample psi={sample.psi}")

    frame = cyd_geometry.chart_frame(sample, sample.psi, strict=False)
    dropped = int(np.count_nonzero(~frame.valid))

    if dropped > MAX_DROP_FRACTION * len(sample):
        raise CYDNumericalError(
            f"{dropped} of {len(sample)} points hit a singular chart")

    if dropped:
        _LOG.debug("dropping %d points with singular charts", dropped)

    keep = np.flatnonzero(frame.valid)
    frame = frame.take(keep)
    sections = cyd_donaldson.section_frame(teacher.basis, frame)
    y = cyd_donaldson.log_det_metric(teacher.h, sections, frame,
                                     teacher.k) - np.log(frame.fs_det)
    p2, p3, sigma3 = cyd_geometry.feature_arrays(sample.z[keep])

    return Dataset(p2, p3, sigma3, y, sample.weight[keep], float(sample.psi),
                   teacher.k, teacher_hash=teacher_hash, dropped=dropped)


def split(ds, train_fraction, seed):
    """Deterministic disjoint split; rows keep their original order."""
    if not 0 < train_fraction < 1:
        raise CYDValidationError(
            f"train_fraction must be in (0, 1), got {train_fraction}")

    if len(ds) < 2:
        raise CYDValidationError("cannot split fewer than two rows")

    perm = np.random.default_rng(int(seed)).permutation(len(ds))
    n_train = min(max(int(round(train_fraction * len(ds))), 1), len(ds) - 1)

    return (ds.take(np.sort(perm[:n_train]), split_seed=int(seed)),
            ds.take(np.sort(perm[n_train:]), split_seed=int(seed)))
