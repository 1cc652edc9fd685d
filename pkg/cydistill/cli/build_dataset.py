# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""build-dataset module for the cli."""
import click

import cydistill.cli as cyd_cli


@click.command(name="build-dataset",
               help="Pair sampled features with the teacher's log ratio.")
@cyd_cli.common_options
def cli(**kwargs):
    """Needs points.tsv and teacher.json."""
    cyd_cli.run_stage("build_dataset", **kwargs)
