# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""bench-volume module for the cli."""
import click

import cydistill.cli as cyd_cli


@click.command(name="bench-volume",
               help="Monte Carlo volume for every metric source and psi.")
@cyd_cli.common_options
def cli(**kwargs):
    """Needs the moduli-scan outputs."""
    cyd_cli.run_stage("bench_volume", **kwargs)
