# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""symreg module for the cli."""
import click

import cydistill.cli as cyd_cli


@click.command(name="symreg",
               help="Run the symbolic-regression ensemble over the seeds.")
@cyd_cli.common_options
def cli(**kwargs):
    """Writes one selected expression per seed to ensemble.jsonl."""
    cyd_cli.run_stage("symreg", **kwargs)
