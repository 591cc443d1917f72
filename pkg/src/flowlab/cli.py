"""Command-line entry point: ``flowlab run | list-scenarios | dump-field``."""

from __future__ import annotations

import sys

import click
import numpy as np

from .config import SCENARIOS, load_config
from .errors import FlowlabError
from .fieldio import field_at_time, read_field


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Ricci-DeTurck perturbation experiments on flat tori."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="YAML experiment configuration.")
@click.option("--seed", type=int, default=None, help="Override the configured seed.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Output directory (default: output_dir from the config).")
def run(config_path, seed, out_dir):
    """Run one configured scenario; exit status 0 iff every pass criterion holds."""
    from .experiments import run_suite

    try:
        cfg = load_config(config_path)
        report = run_suite(cfg, seed=seed, out=out_dir)
    except FlowlabError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(2)
    for c in report.checks:
        bound = ", ".join(f"{k} {c[k]}" for k in ("max", "min", "equals") if k in c)
        click.echo(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']} = {c['value']:.6g}  ({bound})")
    click.echo(f"scenario {report.scenario}: {'passed' if report.passed else 'FAILED'}")
    sys.exit(0 if report.passed else 1)


@main.command("list-scenarios")
def list_scenarios():
    """Print the available scenario names."""
    for name in SCENARIOS:
        click.echo(name)


@main.command("dump-field")
@click.argument("trajectory", type=click.Path(exists=True, file_okay=False))
@click.argument("time", type=float)
def dump_field(trajectory, time):
    """Print the field stored at TIME in a TRAJECTORY dump directory."""
    try:
        path = field_at_time(trajectory, time)
        grid, values, valence, t = read_field(path)
    except FlowlabError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(path.read_text(), nl=False)
    click.echo(f"# sup |component| = {float(np.max(np.abs(values))):.17g}", err=True)


if __name__ == "__main__":
    main()
