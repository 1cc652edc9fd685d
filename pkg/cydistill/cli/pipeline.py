# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""pipeline module for the cli."""
import click

import cydistill.cli as cyd_cli
import cydistill.lib.cyd_common as cyd_common


@click.command(name="pipeline", help="Run every stage, resuming from the"
                                     " last completed one.")
@cyd_cli.common_options
@click.option("--force", "-f", is_flag=True, default=False,
              help="Rerun stages even when their manifests match.")
def cli(force, **kwargs):
    """Stages whose inputs and outputs still match are skipped."""
    ran = cyd_cli.run_stage("pipeline", force=force, **kwargs)

    cyd_common.logit({
        "level"  : "INFO",
        "message": cyd_common.draw_table(
            ["STAGE", "STATUS"],
            [[stage, "ran" if done else "skipped"] for stage, done in ran],
            dtype=["t", "t"])
    }, silent=kwargs["silent"])
