# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""fit-formula module for the cli."""
import click

import cydistill.cli as cyd_cli


@click.command(name="fit-formula",
               help="Fit the five-term formula and its baselines.")
@cyd_cli.common_options
def cli(**kwargs):
    """Writes the model comparison and bootstrap intervals to fit.jsonl."""
    cyd_cli.run_stage("fit_formula", **kwargs)
