"""Command-line entry points: simulate, replay, decide, serve.

Machine output (CSV tables, JSON recommendations) goes to standard output
or files; human-readable progress goes to standard error so pipelines stay
clean.  Every command is a pure function of its flags, input files, and
seed.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import events as ev
from .scenarios import ParseError, config_for_scenario, load_scenario, parse_config
from .simulate import OCSummary, default_workers, run_replications
from .trial import OutcomeMismatch, engine_from_snapshot


def _fail(message: str, code: int = 2):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main():
    """Dual-agent dose-finding: simulation, replay, decisions, and serving."""


def _write_matrix_csv(path: Path, matrix, row_label: str, col_label: str) -> None:
    rows, cols = len(matrix), len(matrix[0])
    with open(path, "w") as fh:
        fh.write(f"{row_label}\\{col_label}," + ",".join(str(j) for j in range(1, cols + 1)) + "\n")
        for i, row in enumerate(matrix, start=1):
            fh.write(str(i) + "," + ",".join(f"{v:.6f}" for v in row) + "\n")


def write_report(out_dir: Path, oc: OCSummary) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "summary.csv", "w") as fh:
        fh.write("metric,value\n")
        fh.write(f"scenario,{oc.scenario}\n")
        fh.write(f"reps,{oc.reps}\n")
        for name, value in oc.summary_rows():
            fh.write(f"{name},{value:.6f}\n")
    _write_matrix_csv(out_dir / "selection.csv", oc.selection_freq.tolist(), "a", "b")
    # Allocation spans the full lattice; level 0 rows/columns are the
    # single-agent margins.
    alloc = oc.allocation_frac.tolist()
    with open(out_dir / "allocation.csv", "w") as fh:
        fh.write("a\\b," + ",".join(str(j) for j in range(len(alloc[0]))) + "\n")
        for i, row in enumerate(alloc):
            fh.write(str(i) + "," + ",".join(f"{v:.6f}" for v in row) + "\n")


@main.command()
@click.option("--scenario", "scenario_ref", required=True, help="Fixture name (sc1..sc7) or scenario file path.")
@click.option("--variant", type=click.Choice(["two-stage", "three-stage"]), default="two-stage", show_default=True)
@click.option("--reps", type=int, required=True, help="Number of simulated trials.")
@click.option("--seed", type=int, default=0, show_default=True, envvar="MCI3P3_SEED")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path), default=None,
              help="Optional trial-config JSON overriding the defaults.")
@click.option("--workers", type=int, default=None, envvar="MCI3P3_WORKERS",
              help="Parallel workers (default: all cores).")
def simulate(scenario_ref, variant, reps, seed, out_dir, config_path, workers):
    """Run replicated trials and write the operating-characteristic tables."""
    if reps < 1:
        _fail("--reps must be at least 1")
    if seed < 0:
        _fail("--seed must be nonnegative")
    try:
        scenario = load_scenario(scenario_ref)
    except (ParseError, json.JSONDecodeError) as exc:
        _fail(str(exc))
    doc = {}
    if config_path is not None:
        try:
            doc = json.loads(config_path.read_text())
        except json.JSONDecodeError as exc:
            _fail(f"config {config_path}: {exc}")
    doc["design_variant"] = variant
    try:
        config = config_for_scenario(scenario, doc)
    except ParseError as exc:
        _fail(str(exc))
    oc = run_replications(scenario, config, reps, seed, workers=workers or default_workers())
    write_report(out_dir, oc)
    click.echo(
        f"{scenario.name} variant={variant} reps={reps} seed={seed}: "
        f"PCS={oc.pcs:.3f} POS={oc.pos:.3f} PUS={oc.pus:.3f} "
        f"none={oc.no_selection_rate:.3f} PCA={oc.pca:.3f} POA={oc.poa:.3f} "
        f"PUA={oc.pua:.3f} early_stop={oc.early_stop_rate:.3f} mean_n={oc.mean_n:.1f}",
        err=True,
    )
    click.echo(str(out_dir / "summary.csv"))


@main.command()
@click.option("--log", "log_path", type=click.Path(path_type=Path), required=True)
def replay(log_path):
    """Re-execute a recorded trial and diff every derived decision event."""
    if not log_path.exists():
        _fail(f"no such log: {log_path}")
    try:
        recorded = ev.read_log(log_path)
    except ValueError as exc:
        _fail(str(exc))
    try:
        engine = ev.replay(recorded)
    except (OutcomeMismatch, ValueError) as exc:
        _fail(f"replay diverged while re-executing: {exc}", code=1)
    div = ev.first_divergence(recorded, engine.events)
    if div is not None:
        k, rec, rep = div
        click.echo(f"divergence at comparable event {k}:", err=True)
        click.echo(f"  recorded: {json.dumps(rec, sort_keys=True)}", err=True)
        click.echo(f"  replayed: {json.dumps(rep, sort_keys=True)}", err=True)
        sys.exit(1)
    mtdc = next(
        (e["mtdc"] for e in engine.events if e["event"] == "mtdc_selected"), None
    )
    click.echo(f"replay ok: {len(ev.comparable_stream(recorded))} events match; mtdc={mtdc}")


@main.command()
@click.option("--state", "state_path", type=click.Path(path_type=Path), required=True,
              help="Trial state snapshot (JSON) or event log (JSONL).")
def decide(state_path):
    """Print the next-assignment recommendation for a serialized trial state."""
    if not state_path.exists():
        _fail(f"no such state file: {state_path}")
    text = state_path.read_text()
    try:
        first = json.loads(text.splitlines()[0])
    except (json.JSONDecodeError, IndexError) as exc:
        _fail(f"unreadable state file: {exc}")
    try:
        if first.get("event") == "trial_created":
            engine = ev.replay(ev.read_log(state_path))
        else:
            engine = engine_from_snapshot(json.loads(text))
    except (KeyError, ValueError, OutcomeMismatch) as exc:
        _fail(f"invalid state: {exc}")
    click.echo(json.dumps(engine.describe_pending(), sort_keys=True, indent=1))


@main.command()
@click.option("--port", type=int, default=8035, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", type=click.Path(path_type=Path), required=True,
              help="Directory for per-trial event logs.")
def serve(port, host, data_dir):
    """Run the trial-conduct HTTP service."""
    import uvicorn

    from .service import build_app

    app = build_app(Path(data_dir))
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
