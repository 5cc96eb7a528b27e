"""Optional live PubMed E-utilities client (search + fetch) with a polite
rate limit. The CSV drop directory remains the default pipeline source; this
client exists for deployments that want direct periodic retrieval."""

from __future__ import annotations

import logging
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, Optional

import requests

from .ingest import PaperRecord, build_search_query

logger = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils"


class PubMedError(Exception):
    pass


@dataclass(frozen=True)
class PubMedConfig:
    base_url: str = DEFAULT_BASE_URL
    api_key: Optional[str] = None
    timeout: float = 30.0
    # NCBI allows 3 req/s anonymous, 10 req/s with an API key
    max_requests_per_second: float = 3.0
    page_size: int = 500


class RateLimiter:
    """Spaces calls at least 1/rate seconds apart."""

    def __init__(
        self,
        rate_per_second: float,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if rate_per_second <= 0:
            raise ValueError("rate must be positive")
        self.min_gap = 1.0 / rate_per_second
        self._clock = clock
        self._sleep = sleep
        self._last: Optional[float] = None

    def wait(self) -> None:
        now = self._clock()
        if self._last is not None:
            remaining = self.min_gap - (now - self._last)
            if remaining > 0:
                self._sleep(remaining)
                now = self._clock()
        self._last = now


class PubMedClient:
    def __init__(
        self,
        config: PubMedConfig = PubMedConfig(),
        session: Optional[requests.Session] = None,
        limiter: Optional[RateLimiter] = None,
    ):
        self.config = config
        self.session = session or requests.Session()
        rate = config.max_requests_per_second
        if config.api_key and rate == 3.0:
            rate = 10.0
        self.limiter = limiter or RateLimiter(rate)

    def _get(self, endpoint: str, params: dict) -> requests.Response:
        self.limiter.wait()
        if self.config.api_key:
            params = {**params, "api_key": self.config.api_key}
        try:
            resp = self.session.get(
                f"{self.config.base_url}/{endpoint}",
                params=params,
                timeout=self.config.timeout,
            )
        except requests.RequestException as exc:
            raise PubMedError(str(exc)) from exc
        if resp.status_code != 200:
            raise PubMedError(f"{endpoint} returned status {resp.status_code}")
        return resp

    def search(self, query: str, max_records: int = 10000) -> list[str]:
        """All matching PMIDs via esearch, paged."""
        pmids: list[str] = []
        retstart = 0
        while retstart < max_records:
            resp = self._get(
                "esearch.fcgi",
                {
                    "db": "pubmed",
                    "term": query,
                    "retmode": "json",
                    "retmax": min(self.config.page_size, max_records - retstart),
                    "retstart": retstart,
                },
            )
            body = resp.json()["esearchresult"]
            page = body.get("idlist", [])
            pmids.extend(page)
            total = int(body.get("count", 0))
            retstart += len(page)
            if not page or retstart >= total:
                break
        return pmids[:max_records]

    def fetch(self, pmids: list[str]) -> list[PaperRecord]:
        """Title/abstract metadata for the given PMIDs via efetch."""
        records: list[PaperRecord] = []
        fetched_at = datetime.now(timezone.utc)
        for start in range(0, len(pmids), self.config.page_size):
            chunk = pmids[start : start + self.config.page_size]
            resp = self._get(
                "efetch.fcgi",
                {"db": "pubmed", "id": ",".join(chunk), "retmode": "xml"},
            )
            records.extend(self._parse_efetch(resp.text, fetched_at))
        return records

    @staticmethod
    def _parse_efetch(xml_text: str, fetched_at: datetime) -> list[PaperRecord]:
        try:
            root = ET.fromstring(xml_text)
        except ET.ParseError as exc:
            raise PubMedError(f"bad efetch XML: {exc}") from exc
        records = []
        for article in root.iter("PubmedArticle"):
            pmid_el = article.find(".//PMID")
            title_el = article.find(".//ArticleTitle")
            if pmid_el is None or title_el is None:
                continue
            title = "".join(title_el.itertext()).strip()
            if not title:
                continue
            abstract = " ".join(
                "".join(el.itertext()).strip()
                for el in article.findall(".//Abstract/AbstractText")
            ).strip()
            year_el = article.find(".//Article/Journal/JournalIssue/PubDate/Year")
            year = None
            pub_date_raw = ""
            if year_el is not None and year_el.text:
                pub_date_raw = year_el.text.strip()
                try:
                    year = int(pub_date_raw)
                except ValueError:
                    year = None
            try:
                records.append(
                    PaperRecord(
                        pmid="".join(pmid_el.itertext()).strip(),
                        title=title,
                        abstract=abstract,
                        pub_date_raw=pub_date_raw,
                        pub_year=year,
                        fetched_at=fetched_at,
                    )
                )
            except ValueError as exc:
                logger.warning("skipping malformed article: %s", exc)
        return records

    def fetch_since(
        self, watermark: Optional[datetime], max_records: int
    ) -> list[PaperRecord]:
        """Scheduler source: search with a date window starting at the
        watermark (full-corpus search when no watermark exists)."""
        date_from = watermark.strftime("%Y/%m/%d") if watermark else None
        query = build_search_query(date_from=date_from)
        pmids = self.search(query, max_records=max_records)
        if not pmids:
            return []
        return self.fetch(pmids)
