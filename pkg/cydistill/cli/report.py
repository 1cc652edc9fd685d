# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""report module for the cli."""
import os

import click

import cydistill.cli as cyd_cli
import cydistill.lib.cyd_common as cyd_common


@click.command(name="report", help="Render every stage output into"
                                   " report.txt.")
@cyd_cli.common_options
def cli(**kwargs):
    """Prints the rendered tables as well."""
    cyd_cli.run_stage("report", **kwargs)
    out = kwargs["out"] or cyd_cli.facade(**kwargs).out

    with open(os.path.join(out, "report.txt"), "r") as f:
        cyd_common.logit({
            "level"  : "INFO",
            "message": f.read()
        }, silent=kwargs["silent"])
