# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
import numpy as np
import pytest
from deap import gp

import cydistill.lib.cyd_dataset as cyd_dataset
import cydistill.lib.cyd_formula as cyd_formula
import cydistill.lib.cyd_geometry as cyd_geometry
import cydistill.lib.cyd_symreg as cyd_symreg
from cydistill.lib.cyd_common import CYDValidationError

require_slow = pytest.mark.require_slow

QUICK = cyd_symreg.SymregConfig(iterations=5, population=20,
                                constant_steps=2, refine_top=3)


def entry(loss, comp):
    return cyd_symreg.FrontEntry("p2", loss, comp)


def line_data(y_of, n=1000, seed=0):
    rng = np.random.default_rng(seed)
    p2 = rng.uniform(0.2, 1.0, n)
    sigma3 = rng.uniform(0.0, 0.08, n)

    return cyd_dataset.Dataset.from_features(p2, sigma3, y_of(p2, sigma3))


@pytest.mark.parametrize("prefix,expected", [
    ("p2", 0.2),
    ("div(sigma3, mul(mul(p2, p2), p2))", 10.0),
    ("log(p2)", -1.6094379124341003),
])
def test_evaluate(prefix, expected):
    f = cyd_geometry.FeatureVector(0.2, 0.0, 0.08)

    assert cyd_symreg.evaluate(cyd_symreg.parse_tree(prefix), f) == \
        pytest.approx(expected)


def test_protected_operators():
    assert cyd_symreg.div(np.array(1.0), np.array(0.0)) == 1e9
    assert cyd_symreg.div(np.array(-2.0), np.array(1e-12)) == -1e9
    assert cyd_symreg.log(np.array(-1.0)) == pytest.approx(np.log(1e-9))
    assert cyd_symreg.sqrt(np.array(-4.0)) == 0.0


def test_protected_evaluation_is_total_on_the_domain():
    p2 = np.linspace(0.2, 1.0, 50)
    sigma3 = np.linspace(0.0, 0.08, 50)
    tree = cyd_symreg.parse_tree(
        "div(log(sub(p2, p2)), sqrt(sub(sigma3, mul(p2, p2))))")

    assert np.all(np.isfinite(cyd_symreg.predict(tree, p2, sigma3)))


@pytest.mark.parametrize("prefix,size", [
    ("p2", 1),
    ("add(p2, sigma3)", 3),
    ("add(mul(2.0, p2), mul(3.0, sigma3))", 7),
])
def test_complexity_counts_nodes(prefix, size):
    assert cyd_symreg.complexity(cyd_symreg.parse_tree(prefix)) == size


def test_five_term_tree_matches_the_formula():
    tree = cyd_symreg.five_term_tree(cyd_formula.TABLE_COEFFICIENTS)
    p2 = np.array([0.25, 0.5])
    sigma3 = np.array([0.04, 0.01])

    assert cyd_symreg.complexity(tree) == 25
    assert cyd_symreg.predict(tree, p2, sigma3) == pytest.approx(
        cyd_formula.eval_five_term(cyd_formula.TABLE_COEFFICIENTS, p2,
                                   sigma3))
    assert cyd_symreg.to_prefix(cyd_symreg.parse_tree(
        cyd_symreg.to_prefix(tree))) == cyd_symreg.to_prefix(tree)


def test_motifs_of_the_five_term_scaffold():
    tree = cyd_symreg.five_term_tree([0.1, 0.0022, -0.0011, 0.1245, 0.05])

    assert cyd_symreg.detect_motifs(tree) == (
        "p2", "1/p2^n", "sigma3", "sigma3/p2^3", "constant")


@pytest.mark.parametrize("prefix,motifs", [
    ("p2", ("p2",)),
    ("mul(p2, p2)", ("p2", "p2^2")),
    ("div(1.5, mul(p2, p2))", ("p2", "1/p2^n")),
    ("add(sigma3, 0.5)", ("sigma3", "constant")),
    ("div(mul(2.0, sigma3), mul(p2, mul(p2, p2)))",
     ("p2", "1/p2^n", "sigma3", "sigma3/p2^3")),
])
def test_motifs(prefix, motifs):
    assert cyd_symreg.detect_motifs(cyd_symreg.parse_tree(prefix)) == motifs


def test_render_infix_reads_naturally():
    assert cyd_symreg.render_infix(
        cyd_symreg.parse_tree("add(p2, sigma3)")) == "p2 + sigma3"


def test_select_pareto_worked_example():
    front = cyd_symreg.ParetoFront([entry(0.50, 1), entry(0.10, 3),
                                    entry(0.01, 15)])
    scores = [round(cyd_symreg.score(e), 3) for e in front]

    assert scores == [0.360, 0.100, 0.157]
    assert cyd_symreg.select_pareto(front) == entry(0.10, 3)


def test_select_pareto_edge_cases():
    single = cyd_symreg.ParetoFront([entry(0.2, 4)])
    # 0.7 * 0.3 + 0.3 * 2 / 30 == 0.7 * 0.0 + 0.3 * 23 / 30
    tied = cyd_symreg.ParetoFront([entry(0.3, 2), entry(0.0, 23)])

    assert cyd_symreg.select_pareto(single) == entry(0.2, 4)
    assert cyd_symreg.select_pareto(tied) == entry(0.3, 2)

    with pytest.raises(CYDValidationError):
        cyd_symreg.select_pareto(cyd_symreg.ParetoFront([]))


def test_select_pareto_weighs_loss_against_the_target_variance():
    entries = [entry(1e-4, 1), entry(1e-6, 9)]
    unit = cyd_symreg.ParetoFront(entries)
    narrow = cyd_symreg.ParetoFront(entries, target_variance=1e-4)

    # 0.7 * 1e-4 + 0.3 / 30 < 0.7 * 1e-6 + 0.3 * 9 / 30
    assert cyd_symreg.select_pareto(unit) == entry(1e-4, 1)
    # 0.7 * 1 + 0.3 / 30 > 0.7 * 0.01 + 0.3 * 9 / 30
    assert cyd_symreg.select_pareto(narrow) == entry(1e-6, 9)
    assert cyd_symreg.score(entry(1e-6, 9), 1e-4) == pytest.approx(0.097)


def test_evolve_scales_the_front_by_the_target_variance():
    ds = line_data(lambda p2, s3: 0.1 * p2)
    front = cyd_symreg.evolve(ds, QUICK, silent=True)

    assert front.target_variance == pytest.approx(np.var(ds.y), rel=1e-9)


def test_refine_constants_fits_a_linear_law():
    ds = line_data(lambda p2, s3: 2 * p2 + 3 * s3)
    ind = cyd_symreg.parse_tree("add(mul(1.0, p2), mul(1.0, sigma3))")

    for _ in range(20):
        if not cyd_symreg.refine_constants(ind, ds, 10):
            break

    constants = [n.value for n in ind if isinstance(n, gp.Terminal) and
                 not isinstance(n.value, str)]

    assert constants == pytest.approx([2.0, 3.0], abs=1e-3)


def test_front_is_nondominated_sorted_and_deterministic():
    ds = line_data(lambda p2, s3: p2 + 1 / p2 ** 2)
    a = cyd_symreg.evolve(ds, QUICK, silent=True)
    b = cyd_symreg.evolve(ds, QUICK, silent=True)

    assert a.entries == b.entries

    comps = [e.complexity for e in a]
    losses = [e.loss for e in a]

    assert comps == sorted(comps)
    assert all(x > y for x, y in zip(losses, losses[1:]))
    assert max(comps) <= QUICK.max_complexity


def test_evolve_rejects_bad_config():
    ds = line_data(lambda p2, s3: p2)

    with pytest.raises(CYDValidationError, match="population"):
        cyd_symreg.evolve(ds, cyd_symreg.SymregConfig(population=0))


def test_ensemble_needs_two_seeds():
    ds = line_data(lambda p2, s3: p2)

    with pytest.raises(CYDValidationError):
        cyd_symreg.ensemble_run(ds, [0], QUICK, silent=True)


def test_ensemble_report_is_ordered(n_jobs):
    ds = line_data(lambda p2, s3: p2 + 0.5 * s3)
    serial = cyd_symreg.ensemble_run(ds, [0, 1, 2], QUICK, silent=True)
    parallel = cyd_symreg.ensemble_run(ds, [0, 1, 2], QUICK, n_jobs=n_jobs,
                                       silent=True)

    assert serial.seeds == [0, 1, 2]
    assert serial.best_r2 >= serial.median_r2 >= serial.worst_r2
    assert all(0 <= v <= 3 for v in serial.frequencies.values())
    assert [r.tree for r in serial.results] == \
        [r.tree for r in parallel.results]


@require_slow
@pytest.mark.parametrize("y_of,max_comp,max_loss", [
    (lambda p2, s3: p2, 3, 1e-10),
    (lambda p2, s3: 2 * p2 + 3 * s3, 9, 1e-8),
])
def test_planted_formulas_are_recovered(y_of, max_comp, max_loss):
    ds = line_data(y_of)
    hits = 0

    for seed in range(10):
        cfg = cyd_symreg.SymregConfig(seed=seed)
        front = cyd_symreg.evolve(ds, cfg, silent=True)
        hits += any(e.loss <= max_loss and e.complexity <= max_comp
                    for e in front)

    assert hits >= 9


@require_slow
def test_planted_five_term_motif_frequencies():
    # sigma3 / p2^3 carries a large share of the variance here.
    c = [0.05, 0.02, -0.2, 0.3, 1.0]
    five = line_data(lambda p2, s3: cyd_formula.eval_five_term(c, p2, s3))
    report = cyd_symreg.ensemble_run(five, range(10),
                                     cyd_symreg.SymregConfig(), silent=True)

    assert report.frequencies["p2"] == 10
    assert report.frequencies["sigma3"] >= 9


@require_slow
def test_unused_feature_is_never_a_motif():
    report = cyd_symreg.ensemble_run(line_data(lambda p2, s3: p2),
                                     range(10), cyd_symreg.SymregConfig(),
                                     silent=True)

    assert report.frequencies["p2"] == 10
    assert report.frequencies["sigma3"] == 0
