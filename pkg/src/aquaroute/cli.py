"""Command line entry point: batch runs, synthetic data, replays, metric
export and the session service.

Exit codes: 0 success, 1 runtime failure, 2 bad usage or config.
"""
from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from .faults import write_leaks_csv
from .simulate import (ConfigError, ScenarioError, SyntheticEventsConfig,
                       export_metrics, load_config, load_report_summary,
                       load_report_windows, parse_config, run_scenario,
                       write_report)
from .topology import (TopologyError, read_topology, synthetic_city_topology,
                       write_topology)

EXIT_RUNTIME = 1
EXIT_CONFIG = 2

_OUT_ENV = "AQUAROUTE_OUT"


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _default_out(value: str | None) -> Path:
    return Path(value or os.environ.get(_OUT_ENV, "out"))


@click.group()
def main():
    """Predictive resilient Q-routing runs and tooling."""


def _run_one(config_path: str, out: Path, seed: int | None, variant: str | None):
    try:
        cfg = load_config(config_path)
    except FileNotFoundError as err:
        _fail(EXIT_CONFIG, f"config file not found: {err.filename or err}")
    except ConfigError as err:
        _fail(EXIT_CONFIG, f"bad config {config_path}: {err}")
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if variant is not None:
        overrides["variant"] = variant
    if overrides:
        try:
            cfg = parse_config({**cfg.model_dump(), **overrides})
        except ConfigError as err:
            _fail(EXIT_CONFIG, str(err))
    try:
        report = run_scenario(cfg)
    except FileNotFoundError as err:
        _fail(EXIT_CONFIG, f"missing input file: {err.filename or err}")
    except (ConfigError, ScenarioError, TopologyError, ValueError) as err:
        _fail(EXIT_CONFIG, str(err))
    write_report(report, out)
    from .simulate import result_to_dict
    export_metrics([result_to_dict(w) for w in report.windows], out)
    click.echo(f"{config_path}: {report.summary['windows']} windows -> {out}")


def _sweep_entry(args):
    config_path, out, seed, variant = args
    _run_one(config_path, Path(out), seed, variant)
    return config_path


@main.command()
@click.option("--config", "configs", multiple=True, required=True,
              help="Scenario config file (repeat with --sweep).")
@click.option("--out", default=None, help=f"Output directory (${_OUT_ENV} or ./out).")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--variant", default=None,
              type=click.Choice(["plain", "reward_shaping", "action_pruning"]),
              help="Override the algorithm variant.")
@click.option("--sweep", is_flag=True,
              help="Run multiple configs in parallel subprocesses.")
def run(configs, out, seed, variant, sweep):
    """Run one scenario (or a sweep) and write report + metric files."""
    out = _default_out(out)
    if len(configs) == 1 and not sweep:
        _run_one(configs[0], out, seed, variant)
        return
    jobs = [(c, str(out / Path(c).stem), seed, variant) for c in configs]
    if sweep:
        with ProcessPoolExecutor() as pool:
            for name in pool.map(_sweep_entry, jobs):
                click.echo(f"done: {name}")
    else:
        for job in jobs:
            _sweep_entry(job)


@main.command()
@click.option("--count", type=int, required=True, help="Number of leak events.")
@click.option("--nodes", type=int, default=None, help="Node count.")
@click.option("--topology", "topology_path", default=None,
              help="Topology document to take the node count from.")
@click.option("--seed", type=int, default=0)
@click.option("--out", default=None, help="Events CSV path (default leaks.csv).")
@click.option("--propensity-alpha", type=float, default=1.2)
@click.option("--topology-out", default=None,
              help="Also write a synthetic city topology document here.")
def generate(count, nodes, topology_path, seed, out, propensity_alpha,
             topology_out):
    """Generate a synthetic leak CSV (and optionally a topology)."""
    if count < 0:
        _fail(EXIT_CONFIG, "--count must be >= 0")
    if (nodes is None) == (topology_path is None):
        _fail(EXIT_CONFIG, "give exactly one of --nodes or --topology")
    if topology_path is not None:
        try:
            nodes = read_topology(topology_path).n_nodes
        except FileNotFoundError:
            _fail(EXIT_CONFIG, f"topology file not found: {topology_path}")
        except TopologyError as err:
            _fail(EXIT_CONFIG, str(err))
    if topology_out is not None:
        write_topology(synthetic_city_topology(nodes, seed=seed), topology_out)
        click.echo(f"wrote topology: {topology_out}")

    from .simulate import generate_synthetic_leaks
    cfg = SyntheticEventsConfig(count=count, propensity_alpha=propensity_alpha)
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(3)[0])
    events = generate_synthetic_leaks(nodes, cfg, rng)
    out_path = Path(out or "leaks.csv")
    write_leaks_csv(events, out_path)
    click.echo(f"wrote {len(events)} events: {out_path}")


@main.command()
@click.option("--report", "report_dir", default=None,
              help="Directory with a previous run's report files.")
@click.option("--events", "events_log", default=None,
              help="Session event log to replay as a scripted run.")
@click.option("--out", default=None, help="Directory for the replayed report.")
def replay(report_dir, events_log, out):
    """Re-run a recorded scenario from its stored config and seed, then
    check the replay reproduces the recorded windows byte for byte."""
    out = _default_out(out)
    if (report_dir is None) == (events_log is None):
        _fail(EXIT_CONFIG, "give exactly one of --report or --events")
    if events_log is not None:
        from .gateway import replay_event_log
        try:
            matched = replay_event_log(events_log, out)
        except FileNotFoundError as err:
            _fail(EXIT_CONFIG, str(err))
        except (ConfigError, ScenarioError, ValueError) as err:
            _fail(EXIT_RUNTIME, str(err))
        if not matched:
            _fail(EXIT_RUNTIME, "replay diverged from the recorded session")
        click.echo(f"replay matches: {out}")
        return
    try:
        summary = load_report_summary(report_dir)
    except FileNotFoundError as err:
        _fail(EXIT_CONFIG, str(err))
    try:
        cfg = parse_config(summary["metadata"]["config"])
    except (KeyError, ConfigError) as err:
        _fail(EXIT_CONFIG, f"report config invalid: {err}")
    try:
        report = run_scenario(cfg)
    except (ScenarioError, TopologyError, FileNotFoundError, ValueError) as err:
        _fail(EXIT_RUNTIME, str(err))
    write_report(report, out)
    original = (Path(report_dir) / "windows.ndjson").read_bytes()
    replayed = (Path(out) / "windows.ndjson").read_bytes()
    if original != replayed:
        _fail(EXIT_RUNTIME, "replay diverged from the recorded report")
    click.echo(f"replay matches: {out}")


@main.command()
@click.option("--report", "report_dir", required=True)
@click.option("--out", default=None, help="Directory for the CSV series.")
def metrics(report_dir, out):
    """Export qopt_delta.csv, path_cost.csv and label_counts.csv."""
    out = _default_out(out)
    try:
        windows = load_report_windows(report_dir)
    except FileNotFoundError as err:
        _fail(EXIT_CONFIG, str(err))
    except (ScenarioError, json.JSONDecodeError) as err:
        _fail(EXIT_CONFIG, f"corrupt report: {err}")
    for path in export_metrics(windows, out):
        click.echo(f"wrote {path}")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8470)
@click.option("--sessions-dir", default=None,
              help="Directory for per-session event logs.")
def serve(host, port, sessions_dir):
    """Start the operator session service (HTTP + event stream)."""
    import uvicorn

    from .gateway import create_app
    app = create_app(sessions_dir=sessions_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
