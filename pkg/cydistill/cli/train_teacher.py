# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""train-teacher module for the cli."""
import click

import cydistill.cli as cyd_cli


@click.command(name="train-teacher",
               help="Train the balanced-metric teacher at psi.")
@cyd_cli.common_options
def cli(**kwargs):
    """Writes teacher.json and the sigma-history sidecar."""
    cyd_cli.run_stage("train_teacher", **kwargs)
