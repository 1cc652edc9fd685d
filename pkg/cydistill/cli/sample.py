# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""sample module for the cli."""
import click

import cydistill.cli as cyd_cli


@click.command(name="sample", help="Sample points on the Dwork quintic"
                                   " at psi.")
@cyd_cli.common_options
def cli(**kwargs):
    """Writes points.tsv with its provenance header."""
    cyd_cli.run_stage("sample", **kwargs)
