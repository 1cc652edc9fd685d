# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
import mock
import numpy as np
import pytest

import cydistill.lib.cyd_dataset as cyd_dataset
import cydistill.lib.cyd_donaldson as cyd_donaldson
import cydistill.lib.cyd_formula as cyd_formula
import cydistill.lib.cyd_geometry as cyd_geometry
import cydistill.lib.cyd_moduli as cyd_moduli
from cydistill.lib.cyd_common import CYDNumericalError, CYDValidationError

require_slow = pytest.mark.require_slow

EXPECTED_LABELS = {"c0": "negligible", "c1": "sign-reversal",
                   "c2": "monotonic", "c3": "sign-reversal",
                   "c4": "monotonic"}


def reference_datasets(plant):
    return [plant(row["c"], n=500, seed=j, psi=row["psi"])
            for j, row in enumerate(cyd_moduli.REFERENCE_TRAJECTORY)]


def test_reference_trajectory_is_classified():
    assert cyd_moduli.classify_modulation(
        cyd_moduli.reference_trajectory()) == EXPECTED_LABELS


def test_planted_trajectory_is_recovered_and_classified(plant):
    traj = cyd_moduli.trajectory_from_datasets(reference_datasets(plant))

    for j, row in enumerate(cyd_moduli.REFERENCE_TRAJECTORY):
        assert traj.coeffs[j].c == pytest.approx(row["c"], abs=1e-6)

    assert cyd_moduli.classify_modulation(traj) == EXPECTED_LABELS


def trajectory_of(values, half_width=None):
    """c1 follows ``values`` over a five point grid, the rest stay at 0."""
    grid = [0.0, 0.2, 0.4, 0.6, 0.8]
    coeffs = []

    for psi, v in zip(grid, values):
        c = np.array([0.0, v, 0.0, 0.0, 0.0])
        ci = None if half_width is None else \
            np.column_stack([c - half_width, c + half_width])
        coeffs.append(cyd_formula.FiveTermCoefficients(c, psi, ci=ci))

    return cyd_moduli.CoefficientTrajectory(grid, coeffs, [None] * 5,
                                            [None] * 5)


@pytest.mark.parametrize("values,half_width,label", [
    ([0.0005, -0.0002, 0.0009, 0.0001, 0.0], 1e-4, "negligible"),
    ([0.1, -0.1, 0.05, 0.0, 0.02], 1e-3, "sign-reversal"),
    ([0.1, 0.2, 0.3, 0.4, 0.5], 1e-3, "monotonic"),
    ([0.5, 0.4, 0.3, 0.2, 0.1], 1e-3, "monotonic"),
    ([0.10, 0.11, 0.10, 0.12, 0.11], 1e-2, "weak"),
    ([0.1, 0.5, 0.2, 0.6, 0.3], 1e-3, "non-monotonic"),
    ([0.1, 0.5, 0.2, 0.6, 0.3], None, "non-monotonic"),
    # Ordered, but each step sits inside the intervals.
    ([0.10, 0.11, 0.12, 0.13, 0.14], 2e-2, "weak"),
])
def test_modulation_labels(values, half_width, label):
    labels = cyd_moduli.classify_modulation(trajectory_of(values,
                                                          half_width))

    assert labels["c1"] == label
    assert labels["c0"] == "negligible"
    assert label in cyd_moduli.LABELS


def test_dataset_order_does_not_matter(plant):
    datasets = reference_datasets(plant)
    forward = cyd_moduli.trajectory_from_datasets(datasets)
    shuffled = cyd_moduli.trajectory_from_datasets(datasets[::-1])

    assert shuffled.psi_grid == forward.psi_grid
    assert cyd_moduli.classify_modulation(shuffled) == \
        cyd_moduli.classify_modulation(forward)


def test_grid_must_increase_within_range():
    with pytest.raises(CYDValidationError):
        cyd_moduli.CoefficientTrajectory([0.2, 0.0], [], [], [])

    with pytest.raises(CYDValidationError):
        cyd_moduli.CoefficientTrajectory([0.0, 0.9], [], [], [])


@pytest.mark.parametrize("grid", [[], [0.0, 0.9], [0.2, 0.2, 0.4], [-0.1]])
def test_check_grid_rejects(grid):
    with pytest.raises(CYDValidationError):
        cyd_moduli.check_grid(grid)


def test_psi_seeds_differ_per_stage_and_psi():
    a = cyd_moduli.psi_seeds(0, 0.2)
    b = cyd_moduli.psi_seeds(0, 0.4)

    assert len(set(a.values())) == 3
    assert a != b
    assert a == cyd_moduli.psi_seeds(0, 0.2)


def test_linear_fit_is_exact_on_linear_trajectories(plant):
    grid = [0.0, 0.2, 0.4, 0.6, 0.8]
    base = np.array([0.1, 0.002, -0.001, 0.12, 0.05])
    slope = np.array([0.0, -0.004, -0.015, -0.2, 0.85])
    datasets = [plant(base + slope * psi, n=300, seed=j, psi=psi)
                for j, psi in enumerate(grid)]
    fit = cyd_moduli.linear_fit_trajectory(
        cyd_moduli.trajectory_from_datasets(datasets))

    assert fit.intercept == pytest.approx(base, abs=1e-6)
    assert fit.slope == pytest.approx(slope, abs=1e-6)
    assert all(r == pytest.approx(1.0) for r in fit.r2[1:])
    assert fit.slope[4] > 0


def test_reference_c4_trajectory_rises():
    fit = cyd_moduli.linear_fit_trajectory(cyd_moduli.reference_trajectory())
    record = fit.to_records()[4]

    assert record["coefficient"] == "c4"
    assert record["slope"] > 0.75
    assert record["r2"] > 0.9
    assert fit.r2[0] is None
    assert fit.slope[0] == 0.0


def test_short_trajectories_are_rejected(plant):
    traj = cyd_moduli.trajectory_from_datasets(
        reference_datasets(plant)[:2])

    with pytest.raises(CYDValidationError):
        cyd_moduli.linear_fit_trajectory(traj)

    with pytest.raises(CYDValidationError):
        cyd_moduli.classify_modulation(traj)


def test_bootstrap_is_tight_on_noiseless_data(planted_table):
    ci = cyd_moduli.bootstrap_ci(planted_table, 100, seed=1)

    assert ci.shape == (5, 2)
    assert np.max(ci[:, 1] - ci[:, 0]) <= 1e-8


def test_bootstrap_covers_and_repeats(plant):
    c = cyd_formula.TABLE_COEFFICIENTS.c
    ds = plant(c, noise=0.01, seed=8)
    ci = cyd_moduli.bootstrap_ci(ds, 200, seed=2)

    assert np.array_equal(ci, cyd_moduli.bootstrap_ci(ds, 200, seed=2))
    assert np.all(ci[:, 0] <= ci[:, 1])
    assert np.sum((ci[:, 0] <= c) & (c <= ci[:, 1])) >= 4


@require_slow
def test_bootstrap_coverage_over_repeated_trials(plant):
    c = cyd_formula.TABLE_COEFFICIENTS.c
    covered = np.zeros(5)
    trials = 100

    for trial in range(trials):
        ds = plant(c, n=1000, noise=0.01, seed=1000 + trial)
        ci = cyd_moduli.bootstrap_ci(ds, 200, seed=trial)
        covered += (ci[:, 0] <= c) & (c <= ci[:, 1])

    rate = covered / trials

    assert 0.90 <= np.mean(rate) <= 1.0
    assert np.all(rate >= 0.85)


def test_bootstrap_needs_enough_resamples(planted_table):
    with pytest.raises(CYDValidationError):
        cyd_moduli.bootstrap_ci(planted_table, 99)


def _fake_training(psi, k, cfg=None, heavy=False, callback=None,
                   silent=False):
    if psi == 0.2:
        raise CYDNumericalError("training diverged at iteration 0")

    model = cyd_donaldson.TeacherModel.fs_equivalent(k, psi)
    model.sigma = 0.1

    return model


@mock.patch('cydistill.lib.cyd_donaldson.train_balanced_metric',
            side_effect=_fake_training)
def test_scan_records_failures_and_continues(mock_train):
    traj = cyd_moduli.scan_moduli([0.4, 0.0, 0.2], 2, 200, 0, silent=True)

    assert traj.psi_grid == [0.0, 0.4]
    assert list(traj.failures) == ["0.200000"]
    assert traj.teacher_sigma == [0.1, 0.1]
    assert len(traj.teachers) == 2
    assert mock_train.call_count == 3

    seeds = {call[0][0]: call[0][2].seed for call in
             mock_train.call_args_list}

    assert seeds[0.0] == cyd_moduli.psi_seeds(0, 0.0)["teacher"]


@mock.patch('cydistill.lib.cyd_donaldson.train_balanced_metric',
            side_effect=CYDNumericalError("diverged"))
def test_scan_fails_when_every_psi_fails(mock_train):
    with pytest.raises(CYDNumericalError, match="every psi"):
        cyd_moduli.scan_moduli([0.0, 0.2], 2, 200, 0, silent=True)


def test_scan_checks_degree_before_training():
    with pytest.raises(CYDValidationError, match="--heavy"):
        cyd_moduli.scan_moduli([0.0], 8, 200, 0, silent=True)


def test_records_round_trip_keeps_intervals(plant):
    traj = cyd_moduli.trajectory_from_datasets(
        reference_datasets(plant)[:3], bootstrap=100)
    again = cyd_moduli.CoefficientTrajectory.from_records(traj.to_records())

    assert again.psi_grid == traj.psi_grid
    assert np.array_equal(again.coeffs[1].ci, traj.coeffs[1].ci)
    assert "c4" in cyd_moduli.trajectory_table(again)


def test_error_budget_of_the_fs_teacher_is_zero():
    teacher = cyd_donaldson.TeacherModel.fs_equivalent(2, 0.0)
    points = cyd_geometry.sample_quintic(0.0, 500, 3)
    budget = cyd_moduli.error_budget(
        teacher, cyd_formula.FiveTermCoefficients(np.zeros(5)), points)

    assert budget.teacher_sigma > 0
    assert budget.distillation == pytest.approx(0.0, abs=1e-6)
    assert budget.total == pytest.approx(budget.teacher_sigma, abs=1e-6)
    assert budget.to_dict()["k"] == 2


def tiny_training():
    return cyd_donaldson.TrainingConfig(
        iterations=2, batches_per_iteration=2, batch_size=200,
        validation_points=200)


def test_scan_is_deterministic_and_matches_a_standalone_fit():
    a = cyd_moduli.scan_moduli([0.0, 0.2], 2, 300, 5, tiny_training(),
                               silent=True)
    b = cyd_moduli.scan_moduli([0.0, 0.2], 2, 300, 5, tiny_training(),
                               silent=True)

    assert a.psi_grid == b.psi_grid == [0.0, 0.2]
    assert a.teacher_sigma == b.teacher_sigma

    for x, y in zip(a.coeffs, b.coeffs):
        assert np.array_equal(x.c, y.c)

    sample = cyd_geometry.sample_quintic(
        0.0, 300, cyd_moduli.psi_seeds(5, 0.0)["points"])
    alone = cyd_formula.fit_five_term(
        cyd_dataset.build_dataset(a.teachers[0], sample))

    assert a.coeffs[0].c == pytest.approx(alone.c, rel=1e-12, abs=1e-15)
    assert a.r2[0] == pytest.approx(alone.r2)


def test_scan_does_not_depend_on_n_jobs(n_jobs):
    serial = cyd_moduli.scan_moduli([0.0, 0.4], 2, 300, 1, tiny_training(),
                                    silent=True)
    parallel = cyd_moduli.scan_moduli([0.0, 0.4], 2, 300, 1,
                                      tiny_training(), n_jobs=n_jobs,
                                      silent=True)

    for x, y in zip(serial.coeffs, parallel.coeffs):
        assert x.c == pytest.approx(y.c, rel=1e-12, abs=1e-15)


def test_degree_budgets_give_one_row_per_degree():
    budgets = cyd_moduli.degree_budgets(0.0, [2, 1, 2], 300, 5, 200,
                                        tiny_training())

    assert [b.k for b in budgets] == [1, 2]
    assert all(b.psi == 0.0 for b in budgets)
    assert all(b.teacher_sigma > 0 for b in budgets)
    assert all(b.distillation == pytest.approx(
        b.student_sigma - b.teacher_sigma) for b in budgets)
