"""Periodic pipeline: acquire new papers, extract, normalize, upsert
atomically, advance the watermark. One run at a time; overlapping ticks are
skipped."""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Callable, Optional, Protocol

from .extraction import (
    EndpointConfig,
    ExtractionError,
    ExtractorResponse,
    endpoint_extractor,
    extract_papers,
    rule_extract,
)
from .gazetteer import Gazetteer
from .ingest import PaperRecord, dedup_against_store, parse_pubmed_csv
from .normalize import NormalizationError, normalize_summary
from .store import StorageError, Store

logger = logging.getLogger(__name__)

SOURCE_CSV_DROP = "csv-drop-directory"
SOURCE_PUBMED = "pubmed-client"
EXTRACTOR_ENDPOINT = "endpoint"
EXTRACTOR_RULE = "rule-based"


class SchedulerError(Exception):
    pass


class SourceUnavailable(SchedulerError):
    pass


class StoreUnavailable(SchedulerError):
    pass


class PaperSource(Protocol):
    def fetch_since(
        self, watermark: Optional[datetime], max_records: int
    ) -> list[PaperRecord]: ...


@dataclass(frozen=True)
class SchedulerConfig:
    interval: timedelta = timedelta(hours=24)
    source: str = SOURCE_CSV_DROP
    extractor: str = EXTRACTOR_RULE
    max_batch: int = 1000
    drop_dir: Optional[Path] = None
    endpoint: Optional[EndpointConfig] = None
    pubmed_client: Optional[PaperSource] = None

    def __post_init__(self):
        if self.interval < timedelta(minutes=1):
            raise ValueError("interval must be at least 1 minute")
        if self.max_batch < 1:
            raise ValueError("max_batch must be >= 1")
        if self.source not in (SOURCE_CSV_DROP, SOURCE_PUBMED):
            raise ValueError(f"unknown source {self.source!r}")
        if self.extractor not in (EXTRACTOR_ENDPOINT, EXTRACTOR_RULE):
            raise ValueError(f"unknown extractor {self.extractor!r}")
        if self.source == SOURCE_CSV_DROP and self.drop_dir is None:
            raise ValueError("csv-drop-directory source needs drop_dir")
        if self.extractor == EXTRACTOR_ENDPOINT and self.endpoint is None:
            raise ValueError("endpoint extractor needs endpoint config")


@dataclass(frozen=True)
class PipelineRunReport:
    started_at: datetime
    finished_at: datetime
    papers_seen: int = 0
    papers_new: int = 0
    summaries_new: int = 0
    unanswerable_count: int = 0
    error_count: int = 0

    def __post_init__(self):
        if self.papers_new > self.papers_seen:
            raise ValueError("papers_new cannot exceed papers_seen")
        if self.finished_at < self.started_at:
            raise ValueError("finished_at before started_at")

    def to_dict(self) -> dict:
        return {
            "started_at": self.started_at.isoformat(),
            "finished_at": self.finished_at.isoformat(),
            "papers_seen": self.papers_seen,
            "papers_new": self.papers_new,
            "summaries_new": self.summaries_new,
            "unanswerable_count": self.unanswerable_count,
            "error_count": self.error_count,
        }


def _scan_drop_dir(drop_dir: Path) -> tuple[list[PaperRecord], int]:
    """Parse every CSV in the drop directory; first occurrence of a pmid
    wins across files. Returns (records, row_error_count)."""
    if not drop_dir.is_dir():
        raise SourceUnavailable(f"drop directory {drop_dir} does not exist")
    records: list[PaperRecord] = []
    seen: set[str] = set()
    row_errors = 0
    for csv_path in sorted(drop_dir.glob("*.csv")):
        try:
            parsed, errors = parse_pubmed_csv(csv_path.read_bytes())
        except OSError as exc:
            raise SourceUnavailable(str(exc)) from exc
        row_errors += len(errors)
        for err in errors:
            logger.warning("%s row %d skipped: %s", csv_path.name, err.row, err.reason)
        for record in parsed:
            if record.pmid not in seen:
                seen.add(record.pmid)
                records.append(record)
    return records, row_errors


def _acquire(
    config: SchedulerConfig, store: Store
) -> tuple[list[PaperRecord], int]:
    if config.source == SOURCE_CSV_DROP:
        return _scan_drop_dir(config.drop_dir)
    try:
        records = config.pubmed_client.fetch_since(store.watermark, config.max_batch)
    except SourceUnavailable:
        raise
    except Exception as exc:  # client errors are source failures
        raise SourceUnavailable(str(exc)) from exc
    return records, 0


def _make_extractor(config: SchedulerConfig) -> Callable[[PaperRecord], ExtractorResponse]:
    if config.extractor == EXTRACTOR_ENDPOINT:
        return endpoint_extractor(config.endpoint)
    return rule_extract


def run_pipeline_once(
    config: SchedulerConfig,
    store: Store,
    gazetteer: Optional[Gazetteer] = None,
    extractor: Optional[Callable[[PaperRecord], ExtractorResponse]] = None,
) -> PipelineRunReport:
    """One full pipeline cycle. Per-paper failures increment error_count
    without aborting; papers whose extraction errored are left out of the
    batch so the next run retries them."""
    started_at = datetime.now(timezone.utc)
    gaz = gazetteer or Gazetteer.bundled()
    extract = extractor or _make_extractor(config)

    records, row_errors = _acquire(config, store)
    papers_seen = len(records)
    error_count = row_errors

    new_records = dedup_against_store(records, store.known_pmids())
    new_records = new_records[: config.max_batch]

    concurrency = 1
    if config.extractor == EXTRACTOR_ENDPOINT and config.endpoint is not None:
        concurrency = config.endpoint.concurrency

    batch_papers: list[PaperRecord] = []
    batch_summaries = []
    unanswerable_count = 0
    for paper, outcome in extract_papers(new_records, extract, concurrency):
        if isinstance(outcome, ExtractionError):
            logger.warning("pmid %s extraction failed: %s", paper.pmid, outcome)
            error_count += 1
            continue
        batch_papers.append(paper)
        if not outcome.is_answerable:
            unanswerable_count += 1
            continue
        for raw in outcome.summaries:
            try:
                batch_summaries.append(normalize_summary(raw, gaz))
            except NormalizationError as exc:
                logger.warning("summary dropped: %s", exc)
                error_count += 1

    try:
        report = store.upsert_batch(batch_papers, batch_summaries)
    except StorageError as exc:
        raise StoreUnavailable(str(exc)) from exc

    store.advance_watermark(started_at)
    return PipelineRunReport(
        started_at=started_at,
        finished_at=datetime.now(timezone.utc),
        papers_seen=papers_seen,
        papers_new=report.papers_new,
        summaries_new=report.summaries_new,
        unanswerable_count=unanswerable_count,
        error_count=error_count,
    )


class Scheduler:
    """Background loop running the pipeline every config.interval; at most
    one run at a time, overlapping ticks skip with a logged notice."""

    def __init__(
        self,
        config: SchedulerConfig,
        store: Store,
        gazetteer: Optional[Gazetteer] = None,
        extractor: Optional[Callable[[PaperRecord], ExtractorResponse]] = None,
    ):
        self.config = config
        self.store = store
        self.gazetteer = gazetteer
        self.extractor = extractor
        self.last_report: Optional[PipelineRunReport] = None
        self._run_lock = threading.Lock()
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    def tick(self) -> Optional[PipelineRunReport]:
        """Run the pipeline once; returns None when a run is in progress."""
        if not self._run_lock.acquire(blocking=False):
            logger.info("pipeline run already in progress, tick skipped")
            return None
        try:
            report = run_pipeline_once(
                self.config, self.store, self.gazetteer, self.extractor
            )
            self.last_report = report
            return report
        except SchedulerError as exc:
            logger.error("pipeline run failed: %s", exc)
            return None
        finally:
            self._run_lock.release()

    def _loop(self) -> None:
        while not self._stop.wait(self.config.interval.total_seconds()):
            self.tick()

    def start(self) -> None:
        if self._thread is not None:
            return
        self._stop.clear()
        self._thread = threading.Thread(target=self._loop, daemon=True, name="r0scope-scheduler")
        self._thread.start()

    def stop(self) -> None:
        if self._thread is None:
            return
        self._stop.set()
        self._thread.join(timeout=5)
        self._thread = None
