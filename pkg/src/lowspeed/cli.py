"""Command line: ``lowspeed run | calibrate | verify-expected | show``."""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from .runner import ALIASES, SUITES, calibrate, run_scenario, verify_expected
from .scenario import Scenario, ScenarioError, bundled, bundled_dir, load_scenario

CHECK_CHOICES = ["all", *SUITES, *ALIASES]


def resolve_scenario(ref: str) -> Scenario:
    """A path to a scenario file, or the name of a bundled one."""
    p = Path(ref)
    if p.suffix == ".json" or p.exists():
        return load_scenario(p)
    if (bundled_dir() / f"{ref}.json").exists():
        return bundled(ref)
    raise ScenarioError(f"no scenario file or bundled scenario named {ref!r}")


def _warn_seed() -> None:
    if "LOWSPEED_SEED" in os.environ:
        click.echo("warning: LOWSPEED_SEED is ignored; the construction is deterministic",
                   err=True)


def _one(args):
    ref, checks, budget, schedule, emit = args
    sc = resolve_scenario(ref)
    return run_scenario(sc, checks, budget, schedule, emit)


def _write(res, out: Path, emit) -> list[Path]:
    d = out / res.scenario
    d.mkdir(parents=True, exist_ok=True)
    written = []
    if "trace" in emit:
        p = d / "trace.tsv"
        p.write_text("\n".join(res.trace) + "\n")
        written.append(p)
    if "report" in emit:
        p = d / "report.txt"
        p.write_text(res.report_text())
        written.append(p)
        p = d / "results.json"
        p.write_text(json.dumps(res.results, indent=1, sort_keys=True) + "\n")
        written.append(p)
    for name, text in res.dots.items():
        p = d / f"{name.replace('/', '_')}.dot"
        p.write_text(text)
        written.append(p)
    return written


@click.group()
def main():
    """Bounded-stage checks for the minimal low-for-speed construction."""


@main.command()
@click.argument("scenarios", nargs=-1, required=True)
@click.option("--budget", type=int, default=None, help="Stage budget (default: the scenario's).")
@click.option("--check", "checks", multiple=True, type=click.Choice(CHECK_CHOICES),
              default=("all",), show_default=True, help="Suites to run (repeatable).")
@click.option("--emit", multiple=True, type=click.Choice(["dot", "trace", "report"]),
              help="Artifacts to write under --out (repeatable).")
@click.option("--schedule", type=click.Choice(["paper", "compact"]), default=None,
              help="Override the scenario's expansionary schedule.")
@click.option("--parallel", is_flag=True, help="Run the scenarios in separate processes.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=Path("out"),
              show_default=True)
@click.option("-v", "--verbose", is_flag=True, help="Print every report, not just failures.")
def run(scenarios, budget, checks, emit, schedule, parallel, out, verbose):
    """Build, resolve, simulate and check SCENARIOS (files or bundled names)."""
    _warn_seed()
    jobs = [(ref, checks, budget, schedule, tuple(emit)) for ref in scenarios]
    try:
        if parallel and len(jobs) > 1:
            with ProcessPoolExecutor() as ex:
                results = list(ex.map(_one, jobs))
        else:
            results = [_one(j) for j in jobs]
    except ScenarioError as exc:
        raise click.ClickException(str(exc))
    failed = False
    for res in results:
        for r in res.all_reports():
            if verbose or not r.ok:
                click.echo(f"[{res.scenario}] {r.summary()}")
                for v in r.violations[:20]:
                    click.echo(f"    {v}")
        click.echo(f"[{res.scenario}] {'pass' if res.ok else 'FAIL'} "
                   f"({len(res.all_reports())} reports)")
        failed |= not res.ok
        if emit:
            for p in _write(res, out, emit):
                click.echo(f"  wrote {p}")
    sys.exit(1 if failed else 0)


@main.command("calibrate")
@click.argument("scenario")
@click.option("--write/--no-write", default=False,
              help="Store the expected block in the scenario file.")
def calibrate_cmd(scenario, write):
    """Measure outcomes and cost/delay constants and print the expected block."""
    _warn_seed()
    sc = resolve_scenario(scenario)
    block = calibrate(sc)
    click.echo(json.dumps(block, indent=1))
    if write:
        p = Path(scenario)
        if not p.exists():
            p = bundled_dir() / f"{scenario}.json"
        d = json.loads(p.read_text())
        d["expected"] = block
        p.write_text(json.dumps(d, indent=1) + "\n")
        click.echo(f"wrote expected block to {p}", err=True)


@main.command("verify-expected")
@click.argument("scenario")
@click.argument("results", type=click.Path(exists=True, dir_okay=False, path_type=Path))
def verify_expected_cmd(scenario, results):
    """Compare a results.json written by ``run --emit report`` with the pinned block."""
    sc = resolve_scenario(scenario)
    rep = verify_expected(sc, json.loads(results.read_text()))
    click.echo(rep.summary())
    for v in rep.violations:
        click.echo(f"    {v}")
    for n in rep.notes:
        click.echo(f"    note: {n}")
    sys.exit(0 if rep.ok else 1)


@main.command()
@click.argument("scenario")
def show(scenario):
    """Print the scenario as normalized JSON."""
    click.echo(resolve_scenario(scenario).dumps(), nl=False)


if __name__ == "__main__":
    main()
