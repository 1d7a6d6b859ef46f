"""Command line entry points: simulate, reconstruct, detect, serve."""

from __future__ import annotations

import configparser
import datetime as dt
import os
from pathlib import Path

import click

from . import matching, pipeline, simulate, storage


def load_building_spec(path: str | Path) -> tuple[simulate.BuildingSpec,
                                                  list[simulate.AnomalyPlan]]:
    """Parse a declarative key-value spec file (INI syntax, see README)."""
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise click.ClickException(f"spec file not found: {path}")
    if "building" not in cp:
        raise click.ClickException("spec file needs a [building] section")
    b = cp["building"]
    spec = simulate.BuildingSpec(
        estate_id=b.get("estate_id", "estate-1"),
        elevator_count=b.getint("elevator_count", 1),
        floor_count=b.getint("floor_count", 8),
        residents_per_floor=b.getint("residents_per_floor", 4),
        embedding_dim=b.getint("embedding_dim", 128),
        noise_sigma=b.getfloat("noise_sigma", 0.05),
        day_count=b.getint("day_count", 15),
        start_date=dt.date.fromisoformat(b.get("start_date", "2021-03-01")),
        elevator_capacity=b.getint("elevator_capacity", 20),
        trips_per_day=b.getfloat("trips_per_day", 2.0),
    )
    plans = []
    for section in cp.sections():
        if not section.startswith("anomaly"):
            continue
        a = cp[section]
        start = dt.date.fromisoformat(a.get("start", spec.start_date.isoformat()))
        default_end = spec.start_date + dt.timedelta(days=spec.day_count - 1)
        end = dt.date.fromisoformat(a.get("end", default_end.isoformat()))
        days = frozenset(start + dt.timedelta(days=i)
                         for i in range((end - start).days + 1))
        plans.append(simulate.AnomalyPlan(
            kind=a.get("kind"),
            estate_id=a.get("estate_id", spec.estate_id),
            elevator_id=a.get("elevator"),
            floor=a.getint("floor"),
            magnitude=a.getfloat("magnitude", 2.0),
            active_days=days,
        ))
    return spec, plans


@click.group()
def main():
    """Elevator passenger-flow anomaly-capture toolkit."""


@main.command("simulate")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True),
              help="Building spec file (INI key-value format).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(),
              help="Output directory for trip log and ground-truth sidecar.")
def simulate_cmd(spec_path, seed, out_dir):
    """Generate a trip log plus its ground-truth sidecar."""
    spec, plans = load_building_spec(spec_path)
    population = simulate.generate_building(spec, seed)
    events, truth = simulate.simulate(spec, population, plans, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    storage.write_trip_log(events, out / "trip_log.jsonl")
    storage.write_sidecar(truth, out / "ground_truth.json")
    click.echo(f"wrote {len(events)} stop events to {out / 'trip_log.jsonl'}")


@main.command("reconstruct")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--stops-out", type=click.Path(), default=None,
              help="Optional per-stop summary file for the review service.")
@click.option("-t", "--threshold", type=float, default=matching.DEFAULT_MATCH_THRESHOLD,
              show_default=True, help="Embedding-distance match threshold.")
def reconstruct_cmd(log_path, out_path, stops_out, threshold):
    """Rebuild the per-floor flow ledger from a trip log."""
    events, rejects = storage.ingest(log_path)
    for lineno, msg in rejects:
        click.echo(f"rejected line {lineno}: {msg}", err=True)
    ledger, stops = matching.reconstruct(events, threshold, collect_stops=True)
    storage.write_ledger(ledger.aggregates, out_path)
    if stops_out:
        storage.write_stop_summaries(stops, stops_out)
    click.echo(f"wrote {len(ledger.aggregates)} ledger records to {out_path}")


@main.command("detect")
@click.option("--ledger", "ledger_path", required=True, type=click.Path(exists=True))
@click.option("--exclusions", "exclusions_path", type=click.Path(), default=None,
              help="Exclusions journal from the review store.")
@click.option("--end-date", required=True, help="Window end date (YYYY-MM-DD).")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--window-days", type=int, default=15, show_default=True)
@click.option("--contamination-r1", type=float, default=0.2, show_default=True)
@click.option("--contamination-r2", type=float, default=0.01, show_default=True)
@click.option("--tree-count", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def detect_cmd(ledger_path, exclusions_path, end_date, out_path, window_days,
               contamination_r1, contamination_r2, tree_count, seed):
    """Run the two-round detection over a flow ledger."""
    ledger = storage.read_ledger(ledger_path)
    exclusions = (storage.read_exclusions_journal(exclusions_path)
                  if exclusions_path else [])
    config = pipeline.RunConfig(
        end_date=dt.date.fromisoformat(end_date),
        window_days=window_days,
        contamination_r1=contamination_r1,
        contamination_r2=contamination_r2,
        tree_count=tree_count,
        seed=seed,
    )
    records = pipeline.run(ledger, config, exclusions)
    storage.write_records(records, out_path)
    click.echo(f"emitted {len(records)} anomaly records to {out_path}")


@main.command("serve")
@click.option("--data-dir", default=None, type=click.Path(),
              help="Directory with anomalies.jsonl, ledger.jsonl, journals. "
                   "Falls back to $LIFTFLOW_DATA_DIR.")
@click.option("--port", type=int, default=None,
              help="Listen port; falls back to $LIFTFLOW_PORT, then 8000.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui-dir", default=None, type=click.Path(),
              help="Static review-UI bundle to serve at /.")
def serve_cmd(data_dir, port, host, ui_dir):
    """Serve the review API (and optionally the review UI)."""
    import uvicorn

    from .service import create_app

    data_dir = data_dir or os.environ.get("LIFTFLOW_DATA_DIR")
    if not data_dir:
        raise click.ClickException("--data-dir or LIFTFLOW_DATA_DIR is required")
    port = port or int(os.environ.get("LIFTFLOW_PORT", "8000"))
    app = create_app(data_dir, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
