# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
import json

import numpy as np
import pytest

import cydistill.lib.cyd_dataset as cyd_dataset
import cydistill.lib.cyd_formula as cyd_formula
import cydistill.lib.cyd_geometry as cyd_geometry


def pytest_addoption(parser):
    parser.addoption("--slow", action="store_true",
                     help="Also run the long training and evolution"
                          " tests.")
    parser.addoption("--n-jobs", action="store", default=2, type=int,
                     help="Workers for the parallel determinism tests.")


def pytest_configure(config):
    config.addinivalue_line("markers",
                            "require_slow: needs --slow to run")


def pytest_runtest_setup(item):
    if 'require_slow' in item.keywords and not item.config.getvalue("slow"):
        pytest.skip("Need --slow option to run")


@pytest.fixture
def n_jobs(request):
    """Workers for the parallel determinism tests."""
    return request.config.getoption("--n-jobs")


@pytest.fixture(scope="session")
def fermat_sample():
    """2000 points on the Fermat quintic, seed 7."""
    return cyd_geometry.sample_quintic(0.0, 2000, 7)


def _planted(c, n=2000, seed=11, noise=0.0, psi=0.0):
    rng = np.random.default_rng(seed)
    p2 = rng.uniform(0.2, 1.0, n)
    sigma3 = rng.uniform(0.0, 0.08, n)
    y = cyd_formula.eval_five_term(c, p2, sigma3)

    if noise:
        y = y + rng.normal(0.0, noise, n)

    return cyd_dataset.Dataset.from_features(p2, sigma3, y, psi=psi)


@pytest.fixture
def plant():
    """Rows over the feature domain with y from the five-term law."""
    return _planted


@pytest.fixture
def planted_table():
    """Noiseless rows following the psi=0 reference coefficients."""
    return _planted(cyd_formula.TABLE_COEFFICIENTS.c)


@pytest.fixture
def tiny_config(tmpdir):
    """A run configuration small enough for the full pipeline in tests."""
    conf = {
        "k"                  : 2,
        "n_points"           : 1000,
        "validation_points"  : 200,
        "psi_grid"           : [0.0, 0.2, 0.4],
        "seeds"              : [0, 1, 2],
        "bootstrap_resamples": 100,
        "permutations"       : 100,
        "volume_batches"     : 5,
        "output_dir"         : str(tmpdir.join("out")),
        "training"           : {
            "iterations"           : 2,
            "batches_per_iteration": 2,
            "batch_size"           : 200,
            "validation_points"    : 200
        },
        "symreg"             : {
            "iterations"    : 3,
            "population"    : 12,
            "constant_steps": 2,
            "refine_top"    : 3
        }
    }
    path = tmpdir.join("config.json")
    path.write(json.dumps(conf))

    return str(path), conf
