# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""The main CLI for cydistill."""
import os
import re
import signal

import click

__version__ = "0.1.0"

# @formatter:off
# Sometimes SIGINT won't be installed.
signal.signal(signal.SIGINT, signal.default_int_handler)
# If a utility decides to cut off the pipe, we don't care (IE: head)
signal.signal(signal.SIGPIPE, signal.SIG_DFL)
# @formatter:on


def print_version(ctx, param, value):
    """Prints the version and then exits."""
    if not value or ctx.resilient_parsing:
        return
    click.echo(f"Version\t{__version__}")
    ctx.exit()


cmd_folder = os.path.abspath(os.path.join(os.path.dirname(__file__),
                                          'cli'))


class CYDistillCLI(click.MultiCommand):
    """
    Iterates in the 'cli' directory and will load any module's cli definition.
    """

    def list_commands(self, ctx):
        rv = []

        for filename in os.listdir(cmd_folder):
            if filename.endswith('.py') and \
                    not filename.startswith('__init__'):
                rv.append(re.sub(".py$", "", filename).replace("_", "-"))
        rv.sort()

        return rv

    def get_command(self, ctx, name):
        try:
            mod = __import__(f"cydistill.cli.{name.replace('-', '_')}",
                             None, None, ["cli"])

            return mod.cli
        except (ImportError, AttributeError):
            return


@click.command(cls=CYDistillCLI)
@click.option("--version", "-v", is_flag=True, callback=print_version,
              expose_value=False, is_eager=True,
              help="Display cydistill's version and exit.")
def cli():
    """Distill Calabi-Yau metrics into closed-form formulas."""


if __name__ == '__main__':
    cli(prog_name="cydistill")
