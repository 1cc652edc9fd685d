# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
import dataclasses

import numpy as np
import pytest

import cydistill.lib.cyd_donaldson as cyd_donaldson
import cydistill.lib.cyd_formula as cyd_formula
import cydistill.lib.cyd_geometry as cyd_geometry
import cydistill.lib.cyd_moduli as cyd_moduli
import cydistill.lib.cyd_physics as cyd_physics
from cydistill.lib.cyd_common import CYDValidationError

require_slow = pytest.mark.require_slow


def test_fs_volume_is_exactly_five_thirds(fermat_sample):
    report = cyd_physics.volume_integral(cyd_physics.fs_source(),
                                         fermat_sample)

    assert report.raw == 10.0
    assert report.mc_error == 0.0
    assert report.normalized == pytest.approx(5.0 / 3.0, abs=1e-12)
    assert report.agreement_pct == pytest.approx(100.0)


def test_fs_equivalent_teacher_matches_fs(fermat_sample):
    teacher = cyd_donaldson.TeacherModel.fs_equivalent(3, 0.0)
    fs = cyd_physics.volume_integral(cyd_physics.fs_source(), fermat_sample)
    alg = cyd_physics.volume_integral(cyd_physics.teacher_source(teacher),
                                      fermat_sample)

    assert alg.source == "teacher-k3"
    assert cyd_physics.relative_difference(alg, fs) < 1e-8


def test_zero_formula_matches_fs(fermat_sample):
    zero = cyd_formula.FiveTermCoefficients(np.zeros(5))
    report = cyd_physics.volume_integral(cyd_physics.formula_source(zero),
                                         fermat_sample)

    assert report.raw == pytest.approx(10.0, abs=1e-12)


def test_volume_is_invariant_under_a_global_phase(fermat_sample):
    source = cyd_physics.formula_source(cyd_formula.TABLE_COEFFICIENTS)
    rotated = dataclasses.replace(fermat_sample,
                                  z=np.exp(0.7j) * fermat_sample.z)
    base = cyd_physics.volume_integral(source, fermat_sample)
    moved = cyd_physics.volume_integral(source, rotated)

    assert moved.raw == pytest.approx(base.raw, rel=1e-12)
    assert base.mc_error > 0


def test_volume_rejects_small_samples():
    points = cyd_geometry.sample_quintic(0.0, 500, 0)

    with pytest.raises(CYDValidationError, match="1000"):
        cyd_physics.volume_integral(cyd_physics.fs_source(), points)


def test_volume_rejects_bad_batches(fermat_sample):
    with pytest.raises(CYDValidationError):
        cyd_physics.volume_integral(cyd_physics.fs_source(), fermat_sample,
                                    batches=1)


def test_report_dict_has_the_derived_fields(fermat_sample):
    data = cyd_physics.volume_integral(cyd_physics.fs_source(),
                                       fermat_sample).to_dict()

    assert data["normalized"] == pytest.approx(5.0 / 3.0)
    assert data["n_points"] == 2000
    assert "agreement_pct" in data


@require_slow
def test_mc_error_shrinks_with_more_points():
    source = cyd_physics.formula_source([0.0, 0.02, -0.05, 0.3, 1.0])
    small, large = [], []

    for seed in range(5):
        small.append(cyd_physics.volume_integral(
            source, cyd_geometry.sample_quintic(0.0, 2000, seed)).mc_error)
        large.append(cyd_physics.volume_integral(
            source, cyd_geometry.sample_quintic(0.0, 8000, seed)).mc_error)

    ratio = np.mean(large) / np.mean(small)

    assert 0.35 < ratio < 0.65


@require_slow
def test_trained_teacher_volume_is_close_to_five_thirds():
    cfg = cyd_donaldson.TrainingConfig(iterations=5,
                                       batches_per_iteration=10, seed=2)
    teacher = cyd_donaldson.train_balanced_metric(0.0, 3, cfg, silent=True)
    report = cyd_physics.volume_integral(
        cyd_physics.teacher_source(teacher),
        cyd_geometry.sample_quintic(0.0, 5000, 9))

    assert report.normalized == pytest.approx(5.0 / 3.0, rel=0.06)


@require_slow
@pytest.mark.parametrize("psi", [0.0, 0.4, 0.8])
def test_formula_volume_tracks_the_teacher(psi):
    cfg = cyd_donaldson.TrainingConfig(iterations=5,
                                       batches_per_iteration=10)
    teacher, _, coeffs = cyd_moduli.fit_at_psi(psi, 3, 4000, 6, cfg)
    points = cyd_geometry.sample_quintic(psi, 5000, 10)
    alg = cyd_physics.volume_integral(cyd_physics.teacher_source(teacher),
                                      points)
    formula = cyd_physics.volume_integral(
        cyd_physics.formula_source(coeffs), points)

    assert cyd_physics.relative_difference(formula, alg) <= 0.03


def test_yukawa_at_the_fermat_point():
    report = cyd_physics.yukawa_fermat_check(0.0)

    assert report.kappa == 5.0
    assert report.error_pct == 0.0
    assert report.status == "exact"
    assert cyd_physics.yukawa_fermat_check(0.0, seed=9).kappa == 5.0


def test_yukawa_away_from_the_fermat_point():
    report = cyd_physics.yukawa_fermat_check(0.5)

    assert report.kappa is None
    assert report.status == cyd_physics.UNSPECIFIED
    assert report.reference == cyd_physics.YUKAWA_REFERENCE_VALUES[0.5]
    assert report.error_pct is None


def test_yukawa_rejects_the_conifold():
    with pytest.raises(CYDValidationError):
        cyd_physics.yukawa_fermat_check(1.0)


def test_tables_render(fermat_sample):
    volume = cyd_physics.volume_table([cyd_physics.volume_integral(
        cyd_physics.fs_source(), fermat_sample)])
    yukawa = cyd_physics.yukawa_table([cyd_physics.yukawa_fermat_check(0.0),
                                       cyd_physics.yukawa_fermat_check(0.1)])

    assert "fubini-study" in volume
    assert "5.000000" in yukawa
    assert cyd_physics.UNSPECIFIED in yukawa
