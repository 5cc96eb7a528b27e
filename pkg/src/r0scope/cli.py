"""Command-line entry points for the pipeline and the API server.

Flags can be overridden by environment variables prefixed R0SCOPE_
(e.g. R0SCOPE_SERVE_PORT=9000).
"""

from __future__ import annotations

import json
import re
import sys
from datetime import timedelta
from pathlib import Path

import click

from .extraction import (
    EndpointConfig,
    ExtractionError,
    endpoint_extractor,
    extract_papers,
    rule_extract,
)
from .gazetteer import Gazetteer
from .ingest import ColumnMapping, IngestError, PaperRecord, parse_pubmed_csv
from .scheduler import Scheduler, SchedulerConfig, SchedulerError, run_pipeline_once
from .store import Store

_DURATION_RE = re.compile(r"^(\d+)([smhd])$")
_DURATION_UNITS = {"s": "seconds", "m": "minutes", "h": "hours", "d": "days"}


def parse_duration(text: str) -> timedelta:
    m = _DURATION_RE.match(text.strip())
    if not m:
        raise click.BadParameter(f"bad duration {text!r}, expected e.g. 30m, 24h")
    return timedelta(**{_DURATION_UNITS[m.group(2)]: int(m.group(1))})


def _load_mapping(path: str | None) -> ColumnMapping:
    if not path:
        return ColumnMapping()
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return ColumnMapping(**data)


def _read_records(path: str) -> list[PaperRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(PaperRecord.from_dict(json.loads(line)))
    return records


@click.group()
def main():
    """Structured R0-estimate pipeline and analytics service."""


@main.command()
@click.option("--csv", "csv_path", required=True, type=click.Path(exists=True))
@click.option("--mapping", "mapping_path", type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), help="Output file (default stdout).")
def ingest(csv_path, mapping_path, out_path):
    """Parse a PubMed CSV export into newline-delimited paper records."""
    try:
        records, errors = parse_pubmed_csv(
            Path(csv_path).read_bytes(), _load_mapping(mapping_path)
        )
    except IngestError as exc:
        raise click.ClickException(str(exc))
    out = open(out_path, "w", encoding="utf-8") if out_path else sys.stdout
    try:
        for record in records:
            out.write(record.to_json_line() + "\n")
    finally:
        if out_path:
            out.close()
    for err in errors:
        click.echo(f"row {err.row}: {err.reason}", err=True)
    click.echo(f"{len(records)} records, {len(errors)} rows skipped", err=True)


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--endpoint", "endpoint_url", help="Inference endpoint base URL.")
@click.option("--rule-based", is_flag=True, help="Use the offline rule-based extractor.")
@click.option("--token", help="Bearer token for the endpoint.")
@click.option("--concurrency", default=4, show_default=True)
@click.option("--out", "out_path", type=click.Path(), help="Output file (default stdout).")
def extract(in_path, endpoint_url, rule_based, token, concurrency, out_path):
    """Run the extractor over paper records, one response per line."""
    if bool(endpoint_url) == rule_based:
        raise click.UsageError("choose exactly one of --endpoint or --rule-based")
    if rule_based:
        extractor = rule_extract
        concurrency = 1
    else:
        extractor = endpoint_extractor(
            EndpointConfig(base_url=endpoint_url, token=token, concurrency=concurrency)
        )
    records = _read_records(in_path)
    out = open(out_path, "w", encoding="utf-8") if out_path else sys.stdout
    failures = 0
    try:
        for paper, outcome in extract_papers(records, extractor, concurrency):
            if isinstance(outcome, ExtractionError):
                failures += 1
                click.echo(f"pmid {paper.pmid}: {outcome}", err=True)
                continue
            out.write(
                json.dumps(outcome.to_dict(pmid=paper.pmid), ensure_ascii=False, sort_keys=True)
                + "\n"
            )
    finally:
        if out_path:
            out.close()
    click.echo(f"{len(records)} papers, {failures} failures", err=True)


@main.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--store", "store_path", required=True, type=click.Path())
@click.option("--cors-origin", help="Allowed dashboard origin.")
def serve(port, host, store_path, cors_origin):
    """Serve the analytics API."""
    from .service import serve as run_server

    run_server(store_path, port=port, host=host, cors_origin=cors_origin)


def _scheduler_config(interval, source, extractor, store_path, drop_dir, endpoint_url, token, max_batch):
    endpoint = (
        EndpointConfig(base_url=endpoint_url, token=token) if endpoint_url else None
    )
    pubmed_client = None
    if source == "pubmed-client":
        from .pubmed import PubMedClient

        pubmed_client = PubMedClient()
    return SchedulerConfig(
        interval=parse_duration(interval),
        source=source,
        extractor=extractor,
        max_batch=max_batch,
        drop_dir=Path(drop_dir) if drop_dir else None,
        endpoint=endpoint,
        pubmed_client=pubmed_client,
    )


_PIPELINE_OPTIONS = [
    click.option("--store", "store_path", required=True, type=click.Path()),
    click.option(
        "--source",
        type=click.Choice(["csv-drop-directory", "pubmed-client"]),
        default="csv-drop-directory",
        show_default=True,
    ),
    click.option(
        "--extractor",
        type=click.Choice(["endpoint", "rule-based"]),
        default="rule-based",
        show_default=True,
    ),
    click.option("--drop-dir", type=click.Path()),
    click.option("--endpoint-url", help="Inference endpoint base URL."),
    click.option("--token", help="Bearer token for the endpoint."),
    click.option("--max-batch", default=1000, show_default=True),
    click.option("--gazetteer", "gazetteer_path", type=click.Path(exists=True)),
]


def _with_pipeline_options(fn):
    for option in reversed(_PIPELINE_OPTIONS):
        fn = option(fn)
    return fn


@main.command()
@click.option("--interval", default="24h", show_default=True, help="e.g. 30m, 24h.")
@_with_pipeline_options
def schedule(interval, store_path, source, extractor, drop_dir, endpoint_url, token, max_batch, gazetteer_path):
    """Run the pipeline periodically until interrupted."""
    config = _scheduler_config(
        interval, source, extractor, store_path, drop_dir, endpoint_url, token, max_batch
    )
    store = Store(store_path)
    gaz = Gazetteer.from_file(gazetteer_path) if gazetteer_path else None
    scheduler = Scheduler(config, store, gazetteer=gaz)
    click.echo(f"scheduling pipeline every {interval}; first run now", err=True)
    scheduler.tick()
    scheduler.start()
    try:
        import signal

        signal.pause()
    except (KeyboardInterrupt, AttributeError):
        pass
    finally:
        scheduler.stop()


@main.group()
def pipeline():
    """Manual pipeline runs."""


@pipeline.command(name="run-once")
@_with_pipeline_options
def pipeline_run_once(store_path, source, extractor, drop_dir, endpoint_url, token, max_batch, gazetteer_path):
    """Run one pipeline cycle and print the run report."""
    config = _scheduler_config(
        "24h", source, extractor, store_path, drop_dir, endpoint_url, token, max_batch
    )
    store = Store(store_path)
    gaz = Gazetteer.from_file(gazetteer_path) if gazetteer_path else None
    try:
        report = run_pipeline_once(config, store, gazetteer=gaz)
    except SchedulerError as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps(report.to_dict(), indent=2))


@main.command()
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--papers", "papers_path", required=True, type=click.Path())
@click.option("--summaries", "summaries_path", required=True, type=click.Path())
def dump(store_path, papers_path, summaries_path):
    """Dump the store as newline-delimited record files."""
    store = Store(store_path)
    with open(papers_path, "w", encoding="utf-8") as pf, open(
        summaries_path, "w", encoding="utf-8"
    ) as sf:
        store.dump(pf, sf)
    click.echo("dump complete", err=True)


@main.command()
@click.option("--store", "store_path", required=True, type=click.Path())
@click.option("--papers", "papers_path", required=True, type=click.Path(exists=True))
@click.option("--summaries", "summaries_path", required=True, type=click.Path(exists=True))
def load(store_path, papers_path, summaries_path):
    """Load newline-delimited record files into a store."""
    store = Store(store_path)
    with open(papers_path, encoding="utf-8") as pf, open(
        summaries_path, encoding="utf-8"
    ) as sf:
        report = store.load(pf, sf)
    click.echo(
        f"papers: {report.papers_new} new / {report.papers_existing} existing; "
        f"summaries: {report.summaries_new} new / {report.summaries_existing} existing",
        err=True,
    )


def entrypoint():
    main(auto_envvar_prefix="R0SCOPE")


if __name__ == "__main__":
    entrypoint()
