"""Command line interface.

    ftasep <experiment> --config <path> [--seed S] [--trials N] [--out DIR]
           [--workers W] [--figures/--no-figures]

Without --config a small built-in default configuration runs.  Exit codes:
0 success, 1 configuration error, 2 numerical-check failure.
"""

from __future__ import annotations

import sys

import click

from . import __version__
from .experiments import (
    EXPERIMENTS,
    CheckFailure,
    ConfigError,
    default_config,
    load_config,
    run,
)


@click.group()
@click.version_option(version=__version__, prog_name="ftasep")
def main():
    """Facilitated exclusion process: simulation and exact analysis."""


def _experiment_command(name: str):
    @click.command(name=name, help=f"Run the {name} experiment.")
    @click.option("--config", "config_path", type=click.Path(), default=None,
                  help="JSON experiment config (strict keys).")
    @click.option("--seed", type=int, default=None, help="Override the root seed.")
    @click.option("--trials", type=int, default=None, help="Override the trial count.")
    @click.option("--out", "out_dir", type=click.Path(), default=None,
                  help="Override the output directory.")
    @click.option("--workers", type=int, default=1, show_default=True,
                  help="Worker processes for trial-parallel experiments.")
    @click.option("--figures/--no-figures", default=None,
                  help="Render PNG figures next to the CSV output.")
    def command(config_path, seed, trials, out_dir, workers, figures):
        try:
            cfg = load_config(config_path) if config_path else default_config(name)
            if cfg.experiment != name:
                raise ConfigError(
                    f"config declares experiment {cfg.experiment!r}, "
                    f"but the {name!r} subcommand was invoked"
                )
            if seed is not None:
                cfg.seed = seed
            if trials is not None:
                cfg.trials = trials
            if out_dir is not None:
                cfg.output.dir = out_dir
            if figures is not None:
                cfg.output.figures = figures
            result = run(cfg, workers=workers)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(1)
        except CheckFailure as exc:
            click.echo(f"numerical check failed: {exc}", err=True)
            sys.exit(2)
        click.echo(f"{name}: wrote {', '.join(result.files)} to {result.out_dir}")

    return command


for _name in EXPERIMENTS:
    main.add_command(_experiment_command(_name))


if __name__ == "__main__":
    main()
