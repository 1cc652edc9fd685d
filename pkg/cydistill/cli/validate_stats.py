# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""validate-stats module for the cli."""
import click

import cydistill.cli as cyd_cli


@click.command(name="validate-stats",
               help="Permutation tests, LOSO and residual diagnostics.")
@cyd_cli.common_options
def cli(**kwargs):
    """Needs the dataset, ensemble and teacher files."""
    cyd_cli.run_stage("validate_stats", **kwargs)
