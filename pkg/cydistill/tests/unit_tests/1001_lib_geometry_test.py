# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
import numpy as np
import pytest

import cydistill.lib.cyd_geometry as cyd_geometry
from cydistill.lib.cyd_common import CYDValidationError


def test_newton_identities_on_random_tuples():
    rng = np.random.default_rng(0)
    r = rng.dirichlet(np.ones(5), size=100000)
    p2, p3, sigma3 = cyd_geometry.power_sums(r)
    e2, e3 = cyd_geometry.newton_elementary(p2, p3)

    brute_e2 = np.zeros(len(r))
    brute_e3 = np.zeros(len(r))

    for i in range(5):
        for j in range(i + 1, 5):
            brute_e2 += r[:, i] * r[:, j]

            for k in range(j + 1, 5):
                brute_e3 += r[:, i] * r[:, j] * r[:, k]

    assert np.max(np.abs(e2 - brute_e2)) < 1e-12
    assert np.max(np.abs(e3 - brute_e3)) < 1e-12
    assert np.max(np.abs(sigma3 - e3)) < 1e-12


@pytest.mark.parametrize("r,p2,sigma3", [
    ([1, 0, 0, 0, 0], 1.0, 0.0),
    ([0.2] * 5, 0.2, 0.08),
])
def test_feature_extremes(r, p2, sigma3):
    got = cyd_geometry.power_sums(np.array(r, dtype=float))

    assert got[0] == pytest.approx(p2, abs=1e-15)
    assert got[2] == pytest.approx(sigma3, abs=1e-15)


def test_features_ignore_scale_and_phase():
    z = np.array([1.0, 0.5j, -0.3, 0.2 + 0.1j, 0.7])
    base = cyd_geometry.features(z)
    moved = cyd_geometry.features((2.5 - 1.5j) * z)

    assert moved.p2 == pytest.approx(base.p2, abs=1e-14)
    assert moved.sigma3 == pytest.approx(base.sigma3, abs=1e-14)


@pytest.mark.parametrize("psi", [1.0, 1.2, -0.1, float("nan"), "x"])
def test_check_psi_rejects(psi):
    with pytest.raises(CYDValidationError):
        cyd_geometry.check_psi(psi)


def test_sampled_points_lie_on_the_variety(fermat_sample):
    z = fermat_sample.z

    assert len(fermat_sample) == 2000
    assert np.max(np.abs(cyd_geometry.quintic_eval(z, 0.0))) <= 1e-10
    assert np.allclose(np.linalg.norm(z, axis=1), 1.0)

    p2, _, sigma3 = cyd_geometry.feature_arrays(z)

    assert np.all((p2 >= 0.2 - 1e-12) & (p2 <= 1 + 1e-12))
    assert np.all((sigma3 >= -1e-12) & (sigma3 <= 0.08 + 1e-12))
    assert abs(np.mean(p2) - 0.27) < 0.02


def test_sample_is_deterministic_and_n_jobs_independent(n_jobs):
    a = cyd_geometry.sample_quintic(0.3, 103, 5)
    b = cyd_geometry.sample_quintic(0.3, 103, 5)
    c = cyd_geometry.sample_quintic(0.3, 103, 5, n_jobs=n_jobs)

    assert np.array_equal(a.z, b.z)
    assert np.array_equal(a.z, c.z)
    assert np.array_equal(a.weight, c.weight)
    assert len(a) == 103


def test_sample_rejects_bad_input():
    with pytest.raises(CYDValidationError):
        cyd_geometry.sample_quintic(1.2, 10, 0)

    with pytest.raises(CYDValidationError):
        cyd_geometry.sample_quintic(0.0, 0, 0)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    z = rng.normal(size=5) + 1j * rng.normal(size=5)
    psi = 0.4
    grad = cyd_geometry.quintic_grad(z, psi)
    h = 1e-6

    for i in range(5):
        dz = np.zeros(5, dtype=complex)
        dz[i] = h
        fd = (cyd_geometry.quintic_eval(z + dz, psi) -
              cyd_geometry.quintic_eval(z - dz, psi)) / (2 * h)

        assert abs(fd - grad[i]) < 1e-6 * max(1.0, abs(grad[i]))


def test_eta_combination_is_chart_independent(fermat_sample):
    point = fermat_sample[0]
    others = [b for b in range(5)
              if b not in (point.chart_affine, point.chart_dependent)]
    base = cyd_geometry.eta_chart_invariant(point, 0.0)

    for b in others:
        grad = cyd_geometry.quintic_grad(
            cyd_geometry.affine_coordinates(point.z, point.chart_affine)[0],
            0.0)

        if abs(grad[b]) < 1e-2:
            continue

        assert cyd_geometry.eta_chart_invariant(point, 0.0, dependent=b) == \
            pytest.approx(base, rel=1e-8)


def test_fs_measure_weights_are_normalized(fermat_sample):
    assert np.mean(fermat_sample.weight) == pytest.approx(1.0)
    assert np.all(fermat_sample.weight > 0)
