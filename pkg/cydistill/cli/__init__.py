# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""Options and error routing shared by every subcommand."""
import functools

import click

import cydistill.lib.cyd_common as cyd_common
import cydistill.lib.cydistill as cyd
from cydistill.lib.cyd_common import CYDNumericalError, CYDValidationError
from cydistill.lib.cyd_json import CYDJson


def common_options(func):
    @click.option("--config", "-c", "config", default="",
                  type=click.Path(dir_okay=False),
                  help="JSON run configuration; defaults apply when"
                       " omitted.")
    @click.option("--seed", "-s", type=int, default=None,
                  help="Override the root seed.")
    @click.option("--out", "-o", "out", default=None,
                  help="Override the output directory.")
    @click.option("--heavy", is_flag=True, default=False,
                  help="Allow teacher degrees above 5.")
    @click.option("--silent", is_flag=True, default=False,
                  help="Only report errors.")
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        return func(*args, **kwargs)

    return wrapper


def facade(config, seed, out, heavy, silent):
    conf = CYDJson(config, silent=silent).run_config(
        seed=seed, output_dir=out, heavy=True if heavy else None)

    return cyd.CYDistill(conf, silent=silent, exit_on_error=True)


def run_stage(stage, config, seed, out, heavy, silent, **kwargs):
    """Call one facade stage, turning library errors into exit codes."""
    try:
        return getattr(facade(config, seed, out, heavy, silent), stage)(
            **kwargs)
    except (CYDValidationError, CYDNumericalError) as err:
        cyd_common.raise_error(err, exit_on_error=True)
