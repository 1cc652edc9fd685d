# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""
Dwork quintic family Q = sum(z_i^5) - 5 psi prod(z_i) in P^4.

Points are produced by intersecting random lines with the hypersurface,
which distributes them according to the Fubini-Study volume of X. Each point
carries a chart (affine index a, dependent index b) and a weight
|Omega|^2 / det g_FS that converts FS averages into Omega averages.
"""
import dataclasses
import logging
import math

import joblib
import numpy as np

from cydistill.lib.cyd_common import (ChartError, CYDNumericalError,
                                      CYDValidationError)

N_COORDS = 5
QUINTIC_DEGREE = 5
PSI_LIMIT = 1.0
POLY_TOL = 1e-10
CHART_TOL = 1e-8
MAX_LINE_RETRIES = 100

_BINOMIAL = (1, 5, 10, 10, 5, 1)
_LOG = logging.getLogger("cyd_geometry")


def check_psi(psi):
    """Return psi as a float or raise for values outside [0, 1)."""
    try:
        psi = float(psi)
    except (TypeError, ValueError):
        raise CYDValidationError(f"psi must be a real number, got {psi!r}")

    if not math.isfinite(psi) or psi < 0 or psi >= PSI_LIMIT:
        raise CYDValidationError(
            f"psi={psi} is outside [0, 1); the conifold at psi=1 is not"
            " supported")

    return psi


@dataclasses.dataclass(frozen=True)
class FeatureVector:
    p2: float
    p3: float
    sigma3: float


@dataclasses.dataclass(frozen=True)
class QuinticPoint:
    z: np.ndarray
    chart_affine: int
    chart_dependent: int
    weight: float


@dataclasses.dataclass
class QuinticSample:
    """A batch of points stored column-wise."""
    psi: float
    z: np.ndarray
    affine: np.ndarray
    dependent: np.ndarray
    weight: np.ndarray
    seed: int = None

    def __len__(self):
        return self.z.shape[0]

    def __getitem__(self, i):
        return QuinticPoint(self.z[i].copy(), int(self.affine[i]),
                            int(self.dependent[i]), float(self.weight[i]))

    def points(self):
        return [self[i] for i in range(len(self))]

    def take(self, idx):
        idx = np.asarray(idx)

        return QuinticSample(self.psi, self.z[idx], self.affine[idx],
                             self.dependent[idx], self.weight[idx],
                             self.seed)

    @classmethod
    def from_points(cls, points, psi):
        return cls(psi,
                   np.array([p.z for p in points], dtype=complex),
                   np.array([p.chart_affine for p in points], dtype=int),
                   np.array([p.chart_dependent for p in points], dtype=int),
                   np.array([p.weight for p in points], dtype=float))


@dataclasses.dataclass
class ChartFrame:
    """Per-point chart quantities shared by every metric evaluation."""
    psi: float
    w: np.ndarray
    affine: np.ndarray
    dependent: np.ndarray
    grad: np.ndarray
    jac: np.ndarray
    fs_det: np.ndarray
    omega: np.ndarray
    weight: np.ndarray
    valid: np.ndarray

    def __len__(self):
        return self.w.shape[0]

    def take(self, idx):
        return ChartFrame(self.psi, *(getattr(self, f.name)[idx]
                                      for f in dataclasses.fields(self)
                                      if f.name != "psi"))


def quintic_eval(z, psi):
    z = np.asarray(z, dtype=complex)

    return np.sum(z ** 5, axis=-1) - 5 * psi * np.prod(z, axis=-1)


def quintic_grad(z, psi):
    """Analytic gradient dQ/dz_i = 5 z_i^4 - 5 psi prod_{j != i} z_j."""
    z = np.asarray(z, dtype=complex)
    others = np.empty_like(z)

    for i in range(N_COORDS):
        others[..., i] = np.prod(np.delete(z, i, axis=-1), axis=-1)

    return 5 * z ** 4 - 5 * psi * others


def power_sums(r):
    """Features from squared moduli r_i = |z_i|^2 with sum(r) = 1."""
    r = np.asarray(r, dtype=float)
    p2 = np.sum(r ** 2, axis=-1)
    p3 = np.sum(r ** 3, axis=-1)

    return p2, p3, (1 - 3 * p2 + 2 * p3) / 6


def feature_arrays(z):
    r = np.abs(np.asarray(z, dtype=complex)) ** 2
    r = r / np.sum(r, axis=-1, keepdims=True)

    return power_sums(r)


def features(point):
    z = point.z if isinstance(point, QuinticPoint) else point
    p2, p3, sigma3 = feature_arrays(z)

    return FeatureVector(float(p2), float(p3), float(sigma3))


def newton_elementary(p2, p3):
    """Elementary symmetric e2, e3 of the |z_i|^2 from power sums."""
    return (1 - p2) / 2, (1 - 3 * p2 + 2 * p3) / 6


def choose_chart(z, psi):
    """a = argmax |z_i|, b = argmax_{i != a} |dQ/dz_i| (batched)."""
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    idx = np.arange(z.shape[0])
    affine = np.argmax(np.abs(z), axis=1)
    w = z / z[idx, affine][:, None]
    grad = np.abs(quintic_grad(w, psi))
    grad[idx, affine] = -1.0

    return affine, np.argmax(grad, axis=1)


def affine_coordinates(z, affine):
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    idx = np.arange(z.shape[0])
    w = z / z[idx, affine][:, None]
    w[idx, affine] = 1.0

    return w


def pullback_jacobian(grad, affine, dependent):
    """
    Jacobian (n, 3, 5) of the embedding of the hypersurface in the chart.

    Row alpha is d w / d x_alpha for the free coordinate x_alpha; the
    dependent coordinate follows the implicit function theorem and the
    affine coordinate is constant.
    """
    n = grad.shape[0]
    idx = np.arange(n)
    mask = np.ones((n, N_COORDS), dtype=bool)
    mask[idx, affine] = False
    mask[idx, dependent] = False
    free = np.nonzero(mask)[1].reshape(n, 3)
    rows = np.arange(3)[None, :]
    jac = np.zeros((n, 3, N_COORDS), dtype=complex)
    jac[idx[:, None], rows, free] = 1.0
    gb = grad[idx, dependent]
    jac[idx[:, None], rows, dependent[:, None]] = \
        -grad[idx[:, None], free] / gb[:, None]

    return jac


def fs_metric(w):
    """Ambient FS metric in affine coordinates, G_ij = d_i dbar_j log|w|^2."""
    s = np.sum(np.abs(w) ** 2, axis=1)[:, None, None]
    eye = np.eye(N_COORDS)[None, :, :]

    return eye / s - w.conj()[:, :, None] * w[:, None, :] / s ** 2


def pullback(jac, g):
    return jac @ g @ jac.conj().transpose(0, 2, 1)


def chart_frame(z, psi, affine=None, dependent=None, weight=None,
                strict=True):
    """
    Evaluate every chart quantity for a batch of points.

    Missing chart indices are chosen by choose_chart. With strict set a
    near-singular dependent coordinate raises ChartError, otherwise the
    point is flagged in ``valid``.
    """
    if isinstance(z, QuinticSample):
        sample = z
        z = sample.z
        affine = sample.affine if affine is None else affine
        dependent = sample.dependent if dependent is None else dependent
        weight = sample.weight if weight is None else weight

    z = np.atleast_2d(np.asarray(z, dtype=complex))
    n = z.shape[0]
    idx = np.arange(n)
    chosen_a, chosen_b = choose_chart(z, psi)
    affine = chosen_a if affine is None else \
        np.broadcast_to(np.asarray(affine, dtype=int), (n,)).copy()

    if dependent is None:
        if not np.array_equal(affine, chosen_a):
            _, chosen_b = _dependent_for(z, psi, affine)
        dependent = chosen_b
    else:
        dependent = np.broadcast_to(np.asarray(dependent, dtype=int),
                                    (n,)).copy()

    if np.any(affine == dependent):
        raise CYDValidationError("chart indices a and b must differ")

    w = affine_coordinates(z, affine)
    grad = quintic_grad(w, psi)
    gb = np.abs(grad[idx, dependent])
    valid = gb >= CHART_TOL

    if strict and not np.all(valid):
        bad = int(np.flatnonzero(~valid)[0])
        raise ChartError(f"near-singular chart at point {bad}: "
                         f"|dQ/dz_{dependent[bad]}| = {gb[bad]:.3e}")

    safe_grad = grad.copy()
    safe_grad[~valid, dependent[~valid]] = 1.0
    jac = pullback_jacobian(safe_grad, affine, dependent)
    dets = np.linalg.det(pullback(jac, fs_metric(w))).real
    omega = 1.0 / np.where(valid, gb, 1.0) ** 2

    if weight is None:
        weight = np.ones(n)

    return ChartFrame(psi, w, affine, dependent, grad, jac, dets, omega,
                      np.asarray(weight, dtype=float), valid)


def _dependent_for(z, psi, affine):
    idx = np.arange(z.shape[0])
    w = affine_coordinates(z, affine)
    grad = np.abs(quintic_grad(w, psi))
    grad[idx, affine] = -1.0

    return affine, np.argmax(grad, axis=1)


def _point_frame(point, psi, dependent=None):
    if isinstance(point, QuinticPoint):
        z = point.z[None, :]
        affine = point.chart_affine
        dependent = point.chart_dependent if dependent is None else \
            dependent
    else:
        z = np.asarray(point, dtype=complex)[None, :]
        affine = None

    return chart_frame(z, psi, affine=affine, dependent=dependent)


def fs_pullback_det(point, psi, dependent=None):
    """det of the FS metric pulled back to X in the point's chart."""
    return float(_point_frame(point, psi, dependent).fs_det[0])


def omega_density(point, psi, dependent=None):
    """|Omega|^2 in chart coordinates, 1/|dQ/dz_b|^2 by the residue."""
    return float(_point_frame(point, psi, dependent).omega[0])


def eta_chart_invariant(point, psi, dependent=None):
    """det g_FS / |Omega|^2, the chart-free combination entering eta."""
    frame = _point_frame(point, psi, dependent)

    return float(frame.fs_det[0] / frame.omega[0])


def _line_coefficients(p, q, psi):
    """Coefficients of Q(p + t q) in increasing powers of t, shape (m, 6)."""
    m = p.shape[0]
    coeffs = np.empty((m, 6), dtype=complex)

    for j in range(6):
        coeffs[:, j] = _BINOMIAL[j] * np.sum(p ** (5 - j) * q ** j, axis=1)

    prod = np.ones((m, 1), dtype=complex)

    for i in range(N_COORDS):
        grown = np.zeros((m, prod.shape[1] + 1), dtype=complex)
        grown[:, :-1] += prod * p[:, i:i + 1]
        grown[:, 1:] += prod * q[:, i:i + 1]
        prod = grown

    return coeffs - 5 * psi * prod


def _intersect(p, q, psi):
    """Intersect m lines with X; returns (m, 5, 5) points and an ok mask."""
    coeffs = _line_coefficients(p, q, psi)
    lead = coeffs[:, 5]
    ok = np.abs(lead) > 1e-14
    safe_lead = np.where(ok, lead, 1.0)
    companion = np.zeros((p.shape[0], 5, 5), dtype=complex)
    companion[:, 0, :] = -coeffs[:, 4::-1] / safe_lead[:, None]
    companion[:, np.arange(1, 5), np.arange(4)] = 1.0

    with np.errstate(all="ignore"):
        t = np.linalg.eigvals(companion)
        z = p[:, None, :] + t[:, :, None] * q[:, None, :]
        # One Newton step on t along the line.
        slope = np.sum(quintic_grad(z, psi) * q[:, None, :], axis=-1)
        t = t - quintic_eval(z, psi) / slope
        z = p[:, None, :] + t[:, :, None] * q[:, None, :]
        z = z / np.linalg.norm(z, axis=-1, keepdims=True)
        residual = np.abs(quintic_eval(z, psi))

    ok &= np.all(np.isfinite(z).all(axis=-1), axis=1)
    ok &= np.all(residual <= POLY_TOL, axis=1)

    if np.any(ok):
        flat = z[ok].reshape(-1, N_COORDS)
        affine, dependent = choose_chart(flat, psi)
        w = affine_coordinates(flat, affine)
        gb = np.abs(quintic_grad(w, psi)[np.arange(flat.shape[0]),
                                         dependent])
        chart_ok = np.all((gb >= CHART_TOL).reshape(-1, 5), axis=1)
        ok[np.flatnonzero(ok)[~chart_ok]] = False

    return z, ok


def _draw_line(rng):
    x = rng.standard_normal((2, N_COORDS, 2))

    return x[0, :, 0] + 1j * x[0, :, 1], x[1, :, 0] + 1j * x[1, :, 1]


def _sample_lines(psi, seed, lines):
    """Sample the given line indices, each from its own RNG stream."""
    rngs = {j: np.random.default_rng([int(seed), int(j)]) for j in lines}
    out = np.empty((len(lines), 5, N_COORDS), dtype=complex)
    pending = np.arange(len(lines))
    failures = np.zeros(len(lines), dtype=int)

    while pending.size:
        draws = [_draw_line(rngs[lines[i]]) for i in pending]
        p = np.array([d[0] for d in draws])
        q = np.array([d[1] for d in draws])
        z, ok = _intersect(p, q, psi)
        out[pending[ok]] = z[ok]
        bad = pending[~ok]
        failures[bad] += 1

        if np.any(failures[bad] >= MAX_LINE_RETRIES):
            line = lines[int(bad[np.argmax(failures[bad])])]
            raise CYDNumericalError(
                f"line {line} failed {MAX_LINE_RETRIES} consecutive root"
                f" solves at psi={psi}")

        if bad.size:
            _LOG.debug("resampling %d degenerate lines", bad.size)

        pending = bad

    return out


def sample_quintic(psi, n, seed, n_jobs=1):
    """
    Sample n points on X_psi.

    Line j draws from ``default_rng([seed, j])`` and contributes its five
    intersection points, so the result does not depend on n_jobs.
    """
    psi = check_psi(psi)

    if int(n) < 1:
        raise CYDValidationError(f"need at least one point, got n={n}")

    n = int(n)
    n_lines = -(-n // 5)
    lines = np.arange(n_lines)

    if n_jobs == 1 or n_lines < 2:
        blocks = [_sample_lines(psi, seed, lines)]
    else:
        chunks = np.array_split(lines, min(n_lines, 4 * abs(int(n_jobs))))
        blocks = joblib.Parallel(n_jobs=n_jobs)(
            joblib.delayed(_sample_lines)(psi, seed, chunk)
            for chunk in chunks if chunk.size)

    z = np.concatenate(blocks).reshape(-1, N_COORDS)[:n]
    affine, dependent = choose_chart(z, psi)
    frame = chart_frame(z, psi, affine=affine, dependent=dependent)
    weight = frame.omega / frame.fs_det
    weight = weight / np.mean(weight)

    return QuinticSample(psi, z, affine, dependent, weight, seed)
