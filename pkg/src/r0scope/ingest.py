"""Article acquisition: search query construction and PubMed CSV export parsing."""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Optional

SEARCH_QUERY = (
    "(basic reproduction number[TIAB] OR basic reproductive number[TIAB] "
    "OR basic reproduction ratio[TIAB] OR basic reproductive rate[TIAB] "
    "OR basic reproductive ratio[TIAB] OR basic reproduction rate[TIAB] "
    "OR R0[TIAB]) NOT (R0 resection OR cancer)"
)

_PMID_RE = re.compile(r"^\d+$")
_YEAR_RE = re.compile(r"(19|20)\d{2}")


class IngestError(Exception):
    pass


class MissingHeader(IngestError):
    """A mapped column is absent from the CSV header row."""

    def __init__(self, column: str, header: list[str]):
        super().__init__(f"column {column!r} not found in header {header!r}")
        self.column = column
        self.header = header


class EncodingError(IngestError):
    """Input bytes are not valid UTF-8."""


@dataclass(frozen=True)
class PaperRecord:
    """One retrieved publication, as exported by the source."""

    pmid: str
    title: str
    abstract: str = ""
    pub_date_raw: str = ""
    pub_year: Optional[int] = None
    fetched_at: datetime = field(
        default_factory=lambda: datetime.now(timezone.utc), compare=True
    )

    def __post_init__(self):
        if not _PMID_RE.match(self.pmid):
            raise ValueError(f"pmid must be digits only, got {self.pmid!r}")
        if not self.title.strip():
            raise ValueError("title must be non-empty")

    def to_dict(self) -> dict:
        return {
            "pmid": self.pmid,
            "title": self.title,
            "abstract": self.abstract,
            "pub_date_raw": self.pub_date_raw,
            "pub_year": self.pub_year,
            "fetched_at": self.fetched_at.isoformat(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PaperRecord":
        return cls(
            pmid=d["pmid"],
            title=d["title"],
            abstract=d.get("abstract", ""),
            pub_date_raw=d.get("pub_date_raw", ""),
            pub_year=d.get("pub_year"),
            fetched_at=datetime.fromisoformat(d["fetched_at"]),
        )

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True)


@dataclass(frozen=True)
class RowError:
    """A skipped CSV data row: 1-based record number (header is row 1) plus reason."""

    row: int
    reason: str


@dataclass(frozen=True)
class ColumnMapping:
    """Names of the header columns holding each record field."""

    pmid: str = "PMID"
    title: str = "Title"
    abstract: str = "Abstract"
    pub_year: str = "Publication Year"


def build_search_query(
    date_from: Optional[str] = None, date_to: Optional[str] = None
) -> str:
    """Return the title/abstract keyword query, optionally bounded to a
    publication-date window (dates as YYYY/MM/DD)."""
    if date_from is None and date_to is None:
        return SEARCH_QUERY
    lo = date_from or "1900/01/01"
    hi = date_to or "3000/12/31"
    return (
        f"{SEARCH_QUERY} AND "
        f'("{lo}"[Date - Publication] : "{hi}"[Date - Publication])'
    )


def _parse_year(value: str) -> Optional[int]:
    value = value.strip()
    if not value:
        return None
    m = _YEAR_RE.search(value)
    if not m:
        return None
    year = int(m.group(0))
    if 1900 <= year <= datetime.now(timezone.utc).year + 1:
        return year
    return None


def parse_pubmed_csv(
    data: bytes,
    mapping: ColumnMapping = ColumnMapping(),
    fetched_at: Optional[datetime] = None,
) -> tuple[list[PaperRecord], list[RowError]]:
    """Parse a UTF-8 CSV export into records plus per-row errors.

    Rows missing PMID or Title are skipped and reported; duplicate PMIDs keep
    the first occurrence. Row numbers count CSV records, header included.
    """
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise EncodingError(str(exc)) from exc
    # stray NULs (corrupt exports) would abort the csv reader mid-file
    text = text.replace("\x00", "")

    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise MissingHeader(mapping.pmid, [])

    index: dict[str, int] = {}
    for col in (mapping.pmid, mapping.title, mapping.abstract, mapping.pub_year):
        if col not in header:
            raise MissingHeader(col, header)
        index[col] = header.index(col)

    ts = fetched_at if fetched_at is not None else datetime.now(timezone.utc)
    records: list[PaperRecord] = []
    errors: list[RowError] = []
    seen: set[str] = set()
    for rownum, row in enumerate(reader, start=2):
        if not any(cell.strip() for cell in row):
            continue

        def cell(col: str) -> str:
            i = index[col]
            return row[i] if i < len(row) else ""

        pmid = cell(mapping.pmid).strip()
        title = cell(mapping.title).strip()
        if not pmid:
            errors.append(RowError(rownum, "missing pmid"))
            continue
        if not _PMID_RE.match(pmid):
            errors.append(RowError(rownum, f"invalid pmid {pmid!r}"))
            continue
        if not title:
            errors.append(RowError(rownum, "missing title"))
            continue
        if pmid in seen:
            errors.append(RowError(rownum, f"duplicate pmid {pmid}"))
            continue
        seen.add(pmid)
        records.append(
            PaperRecord(
                pmid=pmid,
                title=title,
                abstract=cell(mapping.abstract),
                pub_date_raw=cell(mapping.pub_year).strip(),
                pub_year=_parse_year(cell(mapping.pub_year)),
                fetched_at=ts,
            )
        )
    return records, errors


def dedup_against_store(
    records: Iterable[PaperRecord], known_pmids: set[str]
) -> list[PaperRecord]:
    """Drop records whose pmid the store already holds, preserving order."""
    return [r for r in records if r.pmid not in known_pmids]
