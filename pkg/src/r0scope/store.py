"""Persistence for papers and structured summaries: idempotent atomic
upserts over an embedded single-file transactional store, plus the query
primitives the analytics layer needs."""

from __future__ import annotations

import hashlib
import json
import sqlite3
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterable, Optional

from .gazetteer import ResolvedLocation
from .ingest import PaperRecord
from .normalize import ConfidenceInterval, StructuredSummary

_SCHEMA = """
CREATE TABLE IF NOT EXISTS papers (
    pmid TEXT PRIMARY KEY,
    title TEXT NOT NULL,
    abstract TEXT NOT NULL DEFAULT '',
    pub_date_raw TEXT NOT NULL DEFAULT '',
    pub_year INTEGER,
    fetched_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS summaries (
    pmid TEXT NOT NULL REFERENCES papers(pmid),
    content_hash TEXT NOT NULL,
    disease_raw TEXT NOT NULL,
    disease_key TEXT NOT NULL,
    location_raw TEXT NOT NULL,
    loc_name TEXT,
    loc_country TEXT,
    loc_iso2 TEXT,
    loc_lat REAL,
    loc_lon REAL,
    loc_continent TEXT,
    date_raw TEXT NOT NULL,
    year INTEGER,
    r0_min REAL NOT NULL,
    r0_max REAL NOT NULL,
    ci_level REAL,
    ci_low REAL,
    ci_high REAL,
    ci_raw TEXT,
    ci_level_defaulted INTEGER,
    method_raw TEXT NOT NULL,
    PRIMARY KEY (pmid, content_hash)
);
CREATE INDEX IF NOT EXISTS idx_summaries_disease ON summaries(disease_key);
CREATE TABLE IF NOT EXISTS meta (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
"""


class StoreError(Exception):
    pass


class IntegrityError(StoreError):
    """A summary references a pmid absent from both the batch and the store."""


class StorageError(StoreError):
    """Underlying I/O failure; the store state is unchanged."""


@dataclass(frozen=True)
class UpsertReport:
    papers_new: int = 0
    papers_existing: int = 0
    summaries_new: int = 0
    summaries_existing: int = 0


@dataclass(frozen=True)
class SummaryFilter:
    disease_key: Optional[str] = None
    country: Optional[str] = None
    r0_max_lo: Optional[float] = None
    r0_max_hi: Optional[float] = None
    pmids: Optional[frozenset[str]] = None


def _summary_to_row(s: StructuredSummary) -> tuple:
    loc = s.location
    ci = s.ci
    return (
        s.pmid,
        s.content_hash(),
        s.disease_raw,
        s.disease_key,
        s.location_raw,
        loc.canonical_name if loc else None,
        loc.country if loc else None,
        loc.iso2 if loc else None,
        loc.latitude if loc else None,
        loc.longitude if loc else None,
        loc.continent if loc else None,
        s.date_raw,
        s.year,
        s.r0_min,
        s.r0_max,
        ci.level if ci else None,
        ci.low if ci else None,
        ci.high if ci else None,
        ci.raw if ci else None,
        (1 if ci.level_defaulted else 0) if ci else None,
        s.method_raw,
    )


def _row_to_summary(row: sqlite3.Row) -> StructuredSummary:
    location = None
    if row["loc_name"] is not None:
        location = ResolvedLocation(
            canonical_name=row["loc_name"],
            country=row["loc_country"],
            iso2=row["loc_iso2"],
            latitude=row["loc_lat"],
            longitude=row["loc_lon"],
            continent=row["loc_continent"],
        )
    ci = None
    if row["ci_low"] is not None:
        ci = ConfidenceInterval(
            level=row["ci_level"],
            low=row["ci_low"],
            high=row["ci_high"],
            raw=row["ci_raw"],
            level_defaulted=bool(row["ci_level_defaulted"]),
        )
    return StructuredSummary(
        pmid=row["pmid"],
        disease_raw=row["disease_raw"],
        disease_key=row["disease_key"],
        location_raw=row["location_raw"],
        location=location,
        date_raw=row["date_raw"],
        year=row["year"],
        r0_min=row["r0_min"],
        r0_max=row["r0_max"],
        ci=ci,
        method_raw=row["method_raw"],
    )


def _row_to_paper(row: sqlite3.Row) -> PaperRecord:
    return PaperRecord(
        pmid=row["pmid"],
        title=row["title"],
        abstract=row["abstract"],
        pub_date_raw=row["pub_date_raw"],
        pub_year=row["pub_year"],
        fetched_at=datetime.fromisoformat(row["fetched_at"]),
    )


class Store:
    """Embedded store with snapshot-consistent readers and one writer.

    File-backed stores run in WAL mode with a connection per thread, so
    readers never observe a partially applied batch; ":memory:" stores share
    a single serialized connection (tests and throwaway pipelines).
    """

    def __init__(self, path: str | Path = ":memory:"):
        self.path = str(path)
        self._memory = self.path == ":memory:"
        self._write_lock = threading.Lock()
        self._local = threading.local()
        if self._memory:
            self._shared_conn = self._connect()
            self._conn_guard = threading.RLock()
        with self._writer() as conn:
            conn.executescript(_SCHEMA)

    def _connect(self) -> sqlite3.Connection:
        conn = sqlite3.connect(self.path, check_same_thread=False, timeout=30.0)
        conn.row_factory = sqlite3.Row
        # explicit transaction control; BEGIN IMMEDIATE marks write txns
        conn.isolation_level = None
        if not self._memory:
            conn.execute("PRAGMA journal_mode=WAL")
        conn.execute("PRAGMA foreign_keys=ON")
        return conn

    def _thread_conn(self) -> sqlite3.Connection:
        if self._memory:
            return self._shared_conn
        conn = getattr(self._local, "conn", None)
        if conn is None:
            conn = self._connect()
            self._local.conn = conn
        return conn

    class _Guard:
        def __init__(self, conn, lock):
            self.conn = conn
            self.lock = lock

        def __enter__(self):
            if self.lock:
                self.lock.acquire()
            return self.conn

        def __exit__(self, exc_type, exc, tb):
            if self.lock:
                self.lock.release()
            return False

    def _reader(self) -> "_Guard":
        return self._Guard(self._thread_conn(), self._conn_guard if self._memory else None)

    def _writer(self) -> "_Guard":
        # memory stores piggyback on the reader guard; the write lock keeps
        # the one-writer contract either way
        return self._Guard(self._thread_conn(), self._conn_guard if self._memory else None)

    def close(self) -> None:
        if self._memory:
            self._shared_conn.close()
        else:
            conn = getattr(self._local, "conn", None)
            if conn is not None:
                conn.close()
                self._local.conn = None

    # -- writes ---------------------------------------------------------

    def upsert_batch(
        self,
        papers: Iterable[PaperRecord],
        summaries: Iterable[StructuredSummary],
    ) -> UpsertReport:
        """Insert new papers and summaries atomically; identical re-runs are
        no-ops. Raises IntegrityError on dangling summary pmids."""
        papers = list(papers)
        summaries = list(summaries)
        with self._write_lock, self._writer() as conn:
            try:
                conn.execute("BEGIN IMMEDIATE")
                known = {
                    row["pmid"] for row in conn.execute("SELECT pmid FROM papers")
                }
                batch_pmids = {p.pmid for p in papers}
                for s in summaries:
                    if s.pmid not in known and s.pmid not in batch_pmids:
                        raise IntegrityError(
                            f"summary references unknown pmid {s.pmid}"
                        )

                papers_new = papers_existing = 0
                for p in papers:
                    if p.pmid in known:
                        papers_existing += 1
                        continue
                    conn.execute(
                        "INSERT INTO papers (pmid, title, abstract, pub_date_raw,"
                        " pub_year, fetched_at) VALUES (?, ?, ?, ?, ?, ?)",
                        (
                            p.pmid,
                            p.title,
                            p.abstract,
                            p.pub_date_raw,
                            p.pub_year,
                            p.fetched_at.isoformat(),
                        ),
                    )
                    known.add(p.pmid)
                    papers_new += 1

                summaries_new = summaries_existing = 0
                seen_keys = {
                    (row["pmid"], row["content_hash"])
                    for row in conn.execute("SELECT pmid, content_hash FROM summaries")
                }
                for s in summaries:
                    key = (s.pmid, s.content_hash())
                    if key in seen_keys:
                        summaries_existing += 1
                        continue
                    conn.execute(
                        "INSERT INTO summaries VALUES"
                        " (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
                        _summary_to_row(s),
                    )
                    seen_keys.add(key)
                    summaries_new += 1
                conn.commit()
            except IntegrityError:
                conn.rollback()
                raise
            except sqlite3.Error as exc:
                conn.rollback()
                raise StorageError(str(exc)) from exc
        return UpsertReport(
            papers_new=papers_new,
            papers_existing=papers_existing,
            summaries_new=summaries_new,
            summaries_existing=summaries_existing,
        )

    # -- reads ----------------------------------------------------------

    def query_summaries(self, flt: SummaryFilter = SummaryFilter()) -> list[StructuredSummary]:
        """Matching summaries in deterministic order (pmid, then hash);
        an empty filter returns everything."""
        clauses, params = [], []
        if flt.disease_key is not None:
            clauses.append("disease_key = ?")
            params.append(flt.disease_key)
        if flt.country is not None:
            clauses.append("loc_country = ?")
            params.append(flt.country)
        if flt.r0_max_lo is not None:
            clauses.append("r0_max >= ?")
            params.append(flt.r0_max_lo)
        if flt.r0_max_hi is not None:
            clauses.append("r0_max <= ?")
            params.append(flt.r0_max_hi)
        if flt.pmids is not None:
            if not flt.pmids:
                return []
            marks = ",".join("?" for _ in flt.pmids)
            clauses.append(f"pmid IN ({marks})")
            params.extend(sorted(flt.pmids))
        where = f" WHERE {' AND '.join(clauses)}" if clauses else ""
        sql = (
            "SELECT * FROM summaries"
            + where
            + " ORDER BY CAST(pmid AS INTEGER), content_hash"
        )
        with self._reader() as conn:
            return [_row_to_summary(r) for r in conn.execute(sql, params)]

    def list_papers(
        self, page: int, page_size: int, keyword: Optional[str] = None
    ) -> tuple[list[PaperRecord], int]:
        """Paged paper listing, newest publication year first; the keyword
        matches title, abstract, or pmid case-insensitively."""
        if page < 1:
            raise ValueError("page must be >= 1")
        if not 1 <= page_size <= 500:
            raise ValueError("page_size must be in [1, 500]")
        where, params = "", []
        if keyword:
            where = (
                " WHERE lower(title) LIKE ? OR lower(abstract) LIKE ? OR pmid LIKE ?"
            )
            needle = f"%{keyword.lower()}%"
            params = [needle, needle, needle]
        with self._reader() as conn:
            conn.execute("BEGIN")  # count and page from one snapshot
            try:
                total = conn.execute(
                    f"SELECT COUNT(*) AS n FROM papers{where}", params
                ).fetchone()["n"]
                rows = conn.execute(
                    f"SELECT * FROM papers{where}"
                    " ORDER BY pub_year DESC, CAST(pmid AS INTEGER)"
                    " LIMIT ? OFFSET ?",
                    [*params, page_size, (page - 1) * page_size],
                ).fetchall()
            finally:
                conn.execute("COMMIT")
        return [_row_to_paper(r) for r in rows], total

    def get_paper(self, pmid: str) -> Optional[PaperRecord]:
        with self._reader() as conn:
            row = conn.execute("SELECT * FROM papers WHERE pmid = ?", (pmid,)).fetchone()
        return _row_to_paper(row) if row else None

    def papers_by_pmid(self) -> dict[str, PaperRecord]:
        with self._reader() as conn:
            rows = conn.execute("SELECT * FROM papers").fetchall()
        return {r["pmid"]: _row_to_paper(r) for r in rows}

    def known_pmids(self) -> set[str]:
        with self._reader() as conn:
            return {r["pmid"] for r in conn.execute("SELECT pmid FROM papers")}

    def count_papers(self) -> int:
        with self._reader() as conn:
            return conn.execute("SELECT COUNT(*) AS n FROM papers").fetchone()["n"]

    # -- watermark ------------------------------------------------------

    @property
    def watermark(self) -> Optional[datetime]:
        with self._reader() as conn:
            row = conn.execute(
                "SELECT value FROM meta WHERE key = 'watermark'"
            ).fetchone()
        return datetime.fromisoformat(row["value"]) if row else None

    def advance_watermark(self, ts: datetime) -> None:
        """Monotonic: an earlier timestamp than the current mark is ignored."""
        if ts.tzinfo is None:
            ts = ts.replace(tzinfo=timezone.utc)
        current = self.watermark
        if current is not None and ts < current:
            return
        with self._write_lock, self._writer() as conn:
            conn.execute(
                "INSERT INTO meta (key, value) VALUES ('watermark', ?)"
                " ON CONFLICT(key) DO UPDATE SET value = excluded.value",
                (ts.isoformat(),),
            )
            conn.commit()

    # -- dump / load / hashing -------------------------------------------

    def dump(self, papers_out: IO[str], summaries_out: IO[str]) -> None:
        """Newline-delimited record dump in the pipeline interchange formats."""
        with self._reader() as conn:
            conn.execute("BEGIN")  # one snapshot across both tables
            try:
                paper_rows = conn.execute(
                    "SELECT * FROM papers ORDER BY CAST(pmid AS INTEGER)"
                ).fetchall()
                summary_rows = conn.execute(
                    "SELECT * FROM summaries ORDER BY CAST(pmid AS INTEGER), content_hash"
                ).fetchall()
            finally:
                conn.execute("COMMIT")
        for row in paper_rows:
            papers_out.write(_row_to_paper(row).to_json_line() + "\n")
        for row in summary_rows:
            summaries_out.write(_row_to_summary(row).to_json_line() + "\n")

    def load(self, papers_in: IO[str], summaries_in: IO[str]) -> UpsertReport:
        papers = [
            PaperRecord.from_dict(json.loads(line))
            for line in papers_in
            if line.strip()
        ]
        summaries = [
            StructuredSummary.from_dict(json.loads(line))
            for line in summaries_in
            if line.strip()
        ]
        return self.upsert_batch(papers, summaries)

    def content_state_hash(self) -> str:
        """Hash over all stored papers and summaries (the watermark is
        excluded: it advances on every pipeline run by design)."""
        h = hashlib.sha256()
        with self._reader() as conn:
            conn.execute("BEGIN")
            try:
                paper_rows = conn.execute(
                    "SELECT * FROM papers ORDER BY CAST(pmid AS INTEGER)"
                ).fetchall()
                summary_rows = conn.execute(
                    "SELECT * FROM summaries ORDER BY CAST(pmid AS INTEGER), content_hash"
                ).fetchall()
            finally:
                conn.execute("COMMIT")
        for row in paper_rows:
            h.update(_row_to_paper(row).to_json_line().encode("utf-8"))
        for row in summary_rows:
            h.update(_row_to_summary(row).to_json_line().encode("utf-8"))
        return h.hexdigest()
