# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""
Algebraic teacher metrics K = (1/k) log(s^dagger H s) on the quintic.

The H-matrix is trained by Adam on the Monge-Ampere residual with an
analytic gradient through log det of the pulled-back metric.
"""
import dataclasses
import functools
import itertools
import logging
import math

import numpy as np

import cydistill.lib.cyd_common as cyd_common
import cydistill.lib.cyd_geometry as cyd_geometry
from cydistill.lib.cyd_common import CYDNumericalError, CYDValidationError

HEAVY_DEGREE = 5
MAX_DEGREE = 12
PD_FLOOR = 1e-10
_LOG = logging.getLogger("cyd_donaldson")


def basis_size(k):
    if int(k) < 1:
        raise CYDValidationError(f"degree k must be >= 1, got {k}")

    k = int(k)

    return math.comb(k + 4, 4) - (math.comb(k - 1, 4) if k >= 5 else 0)


def monomial_exponents(k, reduced=True):
    """
    Exponent vectors of degree-k monomials in z_0..z_4.

    The reduced set drops monomials divisible by z_0^5, which the quintic
    relation expresses through the others.
    """
    rows = []

    for combo in itertools.combinations_with_replacement(range(5), k):
        exps = np.bincount(combo, minlength=5)

        if reduced and exps[0] >= 5:
            continue

        rows.append(exps)

    return np.array(rows, dtype=int).reshape(-1, 5)


def multinomial(exps):
    k = int(np.sum(exps))
    out = math.factorial(k)

    for e in exps:
        out //= math.factorial(int(e))

    return out


@dataclasses.dataclass(frozen=True)
class MonomialBasis:
    k: int
    exponents: np.ndarray

    @property
    def size(self):
        return self.exponents.shape[0]

    @classmethod
    def for_degree(cls, k):
        basis = cls(int(k), monomial_exponents(int(k)))
        assert basis.size == basis_size(k)

        return basis


@dataclasses.dataclass
class TrainingConfig:
    iterations: int = 15
    batches_per_iteration: int = 50
    batch_size: int = 1000
    lr0: float = 0.01
    lr_decay: float = 0.5
    decay_every: int = 5
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    validation_points: int = 2000
    tolerance: float = 0.0
    seed: int = 0

    def validate(self):
        errors = []

        for name in ("iterations", "batches_per_iteration", "batch_size",
                     "decay_every"):
            if int(getattr(self, name)) < 1:
                errors.append(f"training.{name} must be >= 1")

        if self.validation_points < 100:
            errors.append("training.validation_points must be >= 100")

        if not self.lr0 > 0:
            errors.append("training.lr0 must be > 0")

        if not 0 < self.lr_decay <= 1:
            errors.append("training.lr_decay must be in (0, 1]")

        for name in ("beta1", "beta2"):
            if not 0 <= getattr(self, name) < 1:
                errors.append(f"training.{name} must be in [0, 1)")

        if self.tolerance < 0:
            errors.append("training.tolerance must be >= 0")

        return errors


@dataclasses.dataclass
class TeacherModel:
    basis: MonomialBasis
    h: np.ndarray
    psi: float
    sigma: float = float("nan")
    sigma_history: list = dataclasses.field(default_factory=list)
    loss_history: list = dataclasses.field(default_factory=list)
    grad_norm_history: list = dataclasses.field(default_factory=list)
    seed: int = None

    @property
    def k(self):
        return self.basis.k

    @classmethod
    def fs_equivalent(cls, k, psi):
        basis = MonomialBasis.for_degree(k)

        return cls(basis, fs_equivalent_h(basis, psi), float(psi))


@dataclasses.dataclass
class SectionFrame:
    s: np.ndarray
    ds: np.ndarray


def check_degree(k, heavy=False, callback=None, silent=False):
    k = int(k)

    if k < 1 or k > MAX_DEGREE:
        raise CYDValidationError(f"degree k={k} outside [1, {MAX_DEGREE}]")

    if k > HEAVY_DEGREE and not heavy:
        raise CYDValidationError(
            f"k={k} needs heavy mode: the basis has {basis_size(k)} sections"
            f" and H has {basis_size(k) ** 2} real parameters. Rerun with"
            " --heavy (or \"heavy\": true) if you have the memory and time.")

    if k > HEAVY_DEGREE:
        cyd_common.logit({
            "level"  : "WARNING",
            "message": f"Heavy mode: k={k} with {basis_size(k)} sections,"
                       " expect long runtimes and large memory use."
        }, _callback=callback, silent=silent)

    return k


@functools.lru_cache(maxsize=None)
def _reduce_monomial(exps, psi):
    """Rewrite z^exps modulo Q as {reduced exponent tuple: coefficient}."""
    if exps[0] < 5:
        return {exps: 1.0}

    base = (exps[0] - 5,) + exps[1:]
    terms = [(tuple(b + 1 for b in base), 5.0 * psi)]

    for i in range(1, 5):
        e = list(base)
        e[i] += 5
        terms.append((tuple(e), -1.0))

    out = {}

    for e, coeff in terms:
        for red, c in _reduce_monomial(e, psi).items():
            out[red] = out.get(red, 0.0) + coeff * c

    return out


def fs_equivalent_h(basis, psi):
    """
    H for which s^dagger H s equals |z|^(2k) on X, reproducing g_FS.

    Below degree 5 this is the multinomial diagonal. Above it the eliminated
    monomials are expanded through the quintic relation, H = R^dagger D R.
    """
    if basis.k < 5:
        return np.diag([float(multinomial(e)) for e in basis.exponents]) \
            .astype(complex)

    index = {tuple(int(x) for x in e): i
             for i, e in enumerate(basis.exponents)}
    full = monomial_exponents(basis.k, reduced=False)
    red = np.zeros((full.shape[0], basis.size), dtype=complex)

    for row, e in enumerate(full):
        for r, c in _reduce_monomial(tuple(int(x) for x in e),
                                     float(psi)).items():
            red[row, index[r]] += c

    mult = np.array([float(multinomial(e)) for e in full])
    h = red.conj().T @ (mult[:, None] * red)

    return (h + h.conj().T) / 2


def section_frame(basis, frame):
    """Monomial sections and their analytic derivatives at chart points."""
    w = frame.w
    k = basis.k
    powers = w[:, :, None] ** np.arange(k + 1)[None, None, :]
    cols = np.arange(5)[None, :]
    exps = basis.exponents
    s = np.prod(powers[:, cols, exps], axis=2)
    ds = np.empty(s.shape + (5,), dtype=complex)

    for c in range(5):
        lowered = exps.copy()
        lowered[:, c] = np.maximum(lowered[:, c] - 1, 0)
        ds[:, :, c] = exps[None, :, c] * np.prod(powers[:, cols, lowered],
                                                  axis=2)

    return SectionFrame(s, ds)


def _metric_terms(h, sections, jac, k):
    s, ds = sections.s, sections.ds
    sh = s.conj() @ h
    norm = np.einsum("pb,pb->p", sh, s).real
    v = np.einsum("pb,pbi->pi", sh, ds)
    m = np.matmul(ds.conj().transpose(0, 2, 1), np.matmul(h, ds))
    nn = norm[:, None, None]
    g = (m.transpose(0, 2, 1) / nn
         - v[:, :, None] * v.conj()[:, None, :] / nn ** 2) / k

    return norm, v, m, cyd_geometry.pullback(jac, g)


def _log_det(p):
    sign, logdet = np.linalg.slogdet(p)

    if not np.all(np.isfinite(logdet)) or np.any(sign.real <= 0):
        raise CYDNumericalError("metric determinant is not positive and"
                                " finite; H is not a valid metric")

    return logdet


def log_det_metric(h, sections, frame, k):
    """log det of the pulled-back algebraic metric at every frame point."""
    return _log_det(_metric_terms(h, sections, frame.jac, k)[3])


def _frames(model, points):
    if isinstance(points, cyd_geometry.ChartFrame):
        frame = points
    else:
        if not isinstance(points, cyd_geometry.QuinticSample):
            points = cyd_geometry.QuinticSample.from_points(points,
                                                            model.psi)
        frame = cyd_geometry.chart_frame(points, model.psi)

    return frame, section_frame(model.basis, frame)


def algebraic_metric_det(point, model):
    frame = cyd_geometry.chart_frame(
        np.asarray(point.z)[None, :], model.psi,
        affine=point.chart_affine, dependent=point.chart_dependent)

    return float(np.exp(log_det_metric(model.h, section_frame(model.basis,
                                                              frame),
                                       frame, model.k))[0])


def log_ratio(model, points):
    """y = log(det g_alg / det g_FS) per point."""
    frame, sections = _frames(model, points)

    return log_det_metric(model.h, sections, frame, model.k) - \
        np.log(frame.fs_det)


def _reference_log(frame, reference):
    if reference == "fs":
        return np.log(frame.fs_det)
    elif reference == "omega":
        return np.log(frame.omega)

    raise CYDValidationError(f"unknown loss reference {reference!r}")


def weighted_variance(x, w):
    w = np.asarray(w, dtype=float)
    mean = np.sum(w * x) / np.sum(w)

    return float(np.sum(w * (x - mean) ** 2) / np.sum(w))


def ma_loss(points, model, reference="fs"):
    """
    Weighted variance of log(det g_alg / det g_ref) over the batch.

    ``reference="fs"`` compares against det g_FS, ``"omega"`` against
    |Omega|^2, which is the Monge-Ampere residual training minimizes.
    """
    frame, sections = _frames(model, points)

    if len(frame) == 0:
        raise CYDValidationError("ma_loss needs a nonempty batch")

    phi = log_det_metric(model.h, sections, frame, model.k) - \
        _reference_log(frame, reference)

    return weighted_variance(phi, frame.weight)


def _log_det_gradient(sections, jac, k, terms, coeff):
    """
    sum_p coeff_p * d log det P_p / dH as a Hermitian N x N matrix Gamma,
    so that the variation is tr(Gamma dH).
    """
    s, ds = sections.s, sections.ds
    norm, v, m, p = terms
    b = jac.conj().transpose(0, 2, 1) @ np.linalg.inv(p) @ jac
    dbt = np.matmul(ds, b.transpose(0, 2, 1))
    x = np.tensordot(dbt * (coeff / norm)[:, None, None], ds.conj(),
                     axes=([0, 2], [0, 2]))
    trace_bm = np.einsum("pji,pji->p", b, m)
    vbv = np.einsum("pj,pji,pi->p", v.conj(), b, v)
    u = np.einsum("pai,pi->pa", dbt, v.conj())
    t = np.einsum("pai,pi->pa", ds, np.einsum("pji,pi->pj", b, v).conj())
    c_ss = coeff * (-trace_bm / norm ** 2 + 2 * vbv / norm ** 3)
    c2 = coeff / norm ** 2
    x += (s * c_ss[:, None]).T @ s.conj()
    x -= (u * c2[:, None]).T @ s.conj()
    x -= (s * c2[:, None]).T @ t.conj()
    x /= k

    return (x + x.conj().T) / 2


def log_det_gradient(model, points):
    """Per-point gradients of log det g_alg, shape (n, N, N)."""
    frame, sections = _frames(model, points)
    terms = _metric_terms(model.h, sections, frame.jac, model.k)
    out = []

    for i in range(len(frame)):
        one = np.zeros(len(frame))
        one[i] = 1.0
        out.append(_log_det_gradient(sections, frame.jac, model.k, terms,
                                     one))

    return np.array(out)


def loss_and_gradient(h, sections, frame, k, reference="omega"):
    terms = _metric_terms(h, sections, frame.jac, k)
    phi = _log_det(terms[3]) - _reference_log(frame, reference)
    w = frame.weight
    mean = np.sum(w * phi) / np.sum(w)
    loss = float(np.sum(w * (phi - mean) ** 2) / np.sum(w))
    coeff = 2 * w * (phi - mean) / np.sum(w)

    return loss, _log_det_gradient(sections, frame.jac, k, terms, coeff)


def ma_loss_gradient(points, model, reference="fs"):
    frame, sections = _frames(model, points)

    return loss_and_gradient(model.h, sections, frame, model.k,
                             reference)[1]


def project_hermitian_pd(h):
    """Symmetrize and floor the spectrum at 1e-10 * trace / N."""
    h = (h + h.conj().T) / 2
    n = h.shape[0]
    trace = np.trace(h).real

    if not np.all(np.isfinite(h)) or trace <= 0:
        raise CYDNumericalError("H lost positive trace during training")

    floor = PD_FLOOR * trace / n
    vals, vecs = np.linalg.eigh(h)

    if vals.min() >= floor * (1 - 1e-6):
        return h

    h = (vecs * np.maximum(vals, floor)) @ vecs.conj().T

    return (h + h.conj().T) / 2


def compose_h(l_factor):
    h = l_factor.conj().T @ l_factor
    eps = PD_FLOOR * np.trace(h).real / h.shape[0]

    return h + eps * np.eye(h.shape[0])


class Adam(object):
    """Adam on a flat real parameter vector."""

    def __init__(self, size, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0
        self.m = np.zeros(size)
        self.v = np.zeros(size)

    def step(self, theta, grad, lr):
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad ** 2
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)

        return theta - lr * m_hat / (np.sqrt(v_hat) + self.epsilon)


def sigma_from_eta(eta, weights=None):
    """Weighted std of eta after normalizing its weighted mean to 1."""
    eta = np.asarray(eta, dtype=float)
    w = np.ones_like(eta) if weights is None else np.asarray(weights,
                                                             dtype=float)
    eta = eta / (np.sum(w * eta) / np.sum(w))

    return float(np.sqrt(np.sum(w * (eta - 1) ** 2) / np.sum(w)))


def log_eta(model, frame, sections=None):
    sections = section_frame(model.basis, frame) if sections is None \
        else sections

    return log_det_metric(model.h, sections, frame, model.k) - \
        np.log(frame.omega)


def sigma_from_log_eta(log_eta_values, weights):
    shifted = log_eta_values - np.max(log_eta_values)

    return sigma_from_eta(np.exp(shifted), weights)


def ricci_sigma(model, points):
    """Ricci-flatness indicator sigma(eta) as a fraction."""
    frame, sections = _frames(model, points)

    if len(frame) < 100:
        raise CYDValidationError(
            f"ricci_sigma needs at least 100 points, got {len(frame)}")

    return sigma_from_log_eta(log_eta(model, frame, sections),
                              frame.weight)


def _to_real(l_factor):
    return np.concatenate([l_factor.real.ravel(), l_factor.imag.ravel()])


def _from_real(theta, n):
    half = n * n

    return (theta[:half] + 1j * theta[half:]).reshape(n, n)


def train_balanced_metric(psi, k, cfg=None, heavy=False, callback=None,
                          silent=False):
    """
    Train a degree-k teacher at psi starting from the FS-equivalent H.

    Batch b of iteration i is sampled with seed derive_seed(cfg.seed,
    "batch", i, b); sigma is tracked on a fixed validation sample, with
    sigma_history[0] being the starting metric.
    """
    cfg = TrainingConfig() if cfg is None else cfg
    errors = cfg.validate()

    if errors:
        raise CYDValidationError("; ".join(errors))

    psi = cyd_geometry.check_psi(psi)
    k = check_degree(k, heavy, callback=callback, silent=silent)
    model = TeacherModel.fs_equivalent(k, psi)
    model.seed = cfg.seed
    n = model.basis.size
    l_factor = np.linalg.cholesky(model.h).conj().T
    validation = cyd_geometry.sample_quintic(
        psi, cfg.validation_points,
        cyd_common.derive_seed(cfg.seed, "validation"))
    vframe = cyd_geometry.chart_frame(validation, psi)
    vsections = section_frame(model.basis, vframe)
    sigma = sigma_from_log_eta(log_eta(model, vframe, vsections),
                               vframe.weight)
    model.sigma_history.append(sigma)
    adam = Adam(2 * n * n, cfg.beta1, cfg.beta2, cfg.epsilon)
    theta = _to_real(l_factor)

    cyd_common.logit({
        "level"  : "VERBOSE",
        "message": f"Training k={k} teacher at psi={psi}: N={n},"
                   f" starting sigma={sigma:.4f}"
    }, _callback=callback, silent=silent)

    iterations = cyd_common.progress(range(cfg.iterations),
                                     desc=f"k={k} psi={psi}",
                                     silent=silent)

    for it in iterations:
        lr = cfg.lr0 * cfg.lr_decay ** (it // cfg.decay_every)
        losses, norms = [], []

        for b in range(cfg.batches_per_iteration):
            batch = cyd_geometry.sample_quintic(
                psi, cfg.batch_size,
                cyd_common.derive_seed(cfg.seed, "batch", it, b))
            frame = cyd_geometry.chart_frame(batch, psi)
            sections = section_frame(model.basis, frame)
            l_factor = _from_real(theta, n)
            loss, gamma = loss_and_gradient(compose_h(l_factor), sections,
                                            frame, k, reference="omega")

            if not np.isfinite(loss) or not np.all(np.isfinite(gamma)):
                raise CYDNumericalError(
                    f"training diverged at iteration {it}, batch {b}:"
                    f" loss={loss}")

            grad = 2 * l_factor @ gamma
            theta = adam.step(theta, _to_real(grad), lr)
            losses.append(loss)
            norms.append(float(np.linalg.norm(grad)))

        h = project_hermitian_pd(compose_h(_from_real(theta, n)))

        try:
            np.linalg.cholesky(h)
        except np.linalg.LinAlgError:
            raise CYDNumericalError(
                f"H is not positive definite after iteration {it}")

        model.h = h
        sigma = sigma_from_log_eta(log_eta(model, vframe, vsections),
                                   vframe.weight)

        if not np.isfinite(sigma):
            raise CYDNumericalError(f"sigma is not finite after iteration"
                                    f" {it}")

        previous = model.sigma_history[-1]
        model.sigma_history.append(sigma)
        model.loss_history.append(float(np.mean(losses)))
        model.grad_norm_history.append(float(np.mean(norms)))
        _LOG.debug("iteration %d lr=%g loss=%.6g sigma=%.6g", it, lr,
                   model.loss_history[-1], sigma)

        if cfg.tolerance and abs(previous - sigma) <= cfg.tolerance * \
                previous:
            cyd_common.logit({
                "level"  : "VERBOSE",
                "message": f"sigma converged after {it + 1} iterations"
            }, _callback=callback, silent=silent)
            break

    model.sigma = model.sigma_history[-1]

    return model


def degree_scan(psi, ks, cfg=None, heavy=False, callback=None,
                silent=False):
    """Train one teacher per degree and report how sigma falls with k."""
    rows = []

    for k in sorted(set(int(k) for k in ks)):
        model = train_balanced_metric(psi, k, cfg, heavy=heavy,
                                      callback=callback, silent=silent)
        rows.append({
            "k"            : k,
            "basis_size"   : model.basis.size,
            "sigma_initial": model.sigma_history[0],
            "sigma_final"  : model.sigma,
            "model"        : model
        })

    return rows
