# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""bench-yukawa module for the cli."""
import click

import cydistill.cli as cyd_cli


@click.command(name="bench-yukawa",
               help="Check kappa_111 at the Fermat point.")
@cyd_cli.common_options
def cli(**kwargs):
    """Other psi values carry reference data only."""
    cyd_cli.run_stage("bench_yukawa", **kwargs)
