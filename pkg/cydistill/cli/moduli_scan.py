# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""moduli-scan module for the cli."""
import click

import cydistill.cli as cyd_cli


@click.command(name="moduli-scan",
               help="Fit coefficient trajectories across the psi grid.")
@cyd_cli.common_options
def cli(**kwargs):
    """Trains one teacher per psi and writes the trajectory files."""
    cyd_cli.run_stage("moduli_scan", **kwargs)
