"""Aggregation answers to the four research questions, the corpus stats
snapshot, and per-bar drilldown to source publications.

All operations are pure functions over a snapshot of stored summaries;
summaries without a resolved location are excluded from the geographic
views (studies-by-location, R0-range-by-location, map) but kept everywhere
else.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from statistics import fmean, median
from typing import Iterable, Mapping, Optional, Sequence

from .ingest import PaperRecord
from .normalize import StructuredSummary

PUBMED_URL_TEMPLATE = "https://pubmed.ncbi.nlm.nih.gov/{pmid}/"

MAX_MAP_DISEASES = 3


class AnalyticsError(Exception):
    """Base class; `code` is the machine-readable error name."""

    code = "AnalyticsError"


class InvalidRange(AnalyticsError):
    code = "InvalidRange"


class TooManyDiseases(AnalyticsError):
    code = "TooManyDiseases"


class EmptySelection(AnalyticsError):
    code = "EmptySelection"


@dataclass(frozen=True)
class DiseaseMaxR0Row:
    disease_key: str
    max_r0: float
    mean_r0: float
    median_r0: float
    study_count: int
    pmids: frozenset[str]

    def to_dict(self) -> dict:
        return {
            "disease": self.disease_key,
            "max_r0": self.max_r0,
            "mean_r0": self.mean_r0,
            "median_r0": self.median_r0,
            "study_count": self.study_count,
            "pmids": sorted(self.pmids, key=int),
        }


@dataclass(frozen=True)
class LocationStudyCountRow:
    country: str
    study_count: int
    pmids: frozenset[str]

    def to_dict(self) -> dict:
        return {
            "country": self.country,
            "study_count": self.study_count,
            "pmids": sorted(self.pmids, key=int),
        }


@dataclass(frozen=True)
class LocationR0RangeRow:
    country: str
    min_r0: float
    max_r0: float
    pmids: frozenset[str]

    def to_dict(self) -> dict:
        return {
            "country": self.country,
            "min_r0": self.min_r0,
            "max_r0": self.max_r0,
            "pmids": sorted(self.pmids, key=int),
        }


@dataclass(frozen=True)
class MapPoint:
    disease_key: str
    country: str
    latitude: float
    longitude: float
    study_count: int
    pmids: frozenset[str]

    def to_dict(self) -> dict:
        return {
            "disease": self.disease_key,
            "country": self.country,
            "latitude": self.latitude,
            "longitude": self.longitude,
            "study_count": self.study_count,
            "pmids": sorted(self.pmids, key=int),
        }


@dataclass(frozen=True)
class StatsSnapshot:
    total_papers: int
    total_summaries: int
    distinct_diseases: int
    distinct_locations: int

    def to_dict(self) -> dict:
        return {
            "total_papers": self.total_papers,
            "total_summaries": self.total_summaries,
            "distinct_diseases": self.distinct_diseases,
            "distinct_locations": self.distinct_locations,
        }


@dataclass(frozen=True)
class DrilldownEntry:
    pmid: str
    title: str
    pubmed_url: str

    def to_dict(self) -> dict:
        return {"pmid": self.pmid, "title": self.title, "pubmed_url": self.pubmed_url}


def rq1_max_r0(
    summaries: Iterable[StructuredSummary],
    r0_lo: Optional[float] = None,
    r0_hi: Optional[float] = None,
) -> list[DiseaseMaxR0Row]:
    """Per-disease max/mean/median of reported max-R0 values, keeping rows
    whose max lies in [r0_lo, r0_hi]; sorted by max descending."""
    if r0_lo is not None and r0_hi is not None and r0_lo > r0_hi:
        raise InvalidRange(f"r0_lo {r0_lo} > r0_hi {r0_hi}")
    groups: dict[str, list[StructuredSummary]] = defaultdict(list)
    for s in summaries:
        groups[s.disease_key].append(s)
    rows = []
    for disease_key, group in groups.items():
        values = [s.r0_max for s in group]
        max_r0 = max(values)
        if r0_lo is not None and max_r0 < r0_lo:
            continue
        if r0_hi is not None and max_r0 > r0_hi:
            continue
        rows.append(
            DiseaseMaxR0Row(
                disease_key=disease_key,
                max_r0=max_r0,
                mean_r0=fmean(values),
                median_r0=median(values),
                study_count=len({s.pmid for s in group}),
                pmids=frozenset(s.pmid for s in group),
            )
        )
    rows.sort(key=lambda r: (-r.max_r0, r.disease_key))
    return rows


def _located(
    summaries: Iterable[StructuredSummary], disease_key: str
) -> list[StructuredSummary]:
    return [
        s
        for s in summaries
        if s.disease_key == disease_key and s.location is not None
    ]


def rq2_studies_by_location(
    summaries: Iterable[StructuredSummary], disease_key: str
) -> list[LocationStudyCountRow]:
    """Per-country summary counts for one disease, most-studied first."""
    groups: dict[str, list[StructuredSummary]] = defaultdict(list)
    for s in _located(summaries, disease_key):
        groups[s.location.country].append(s)
    rows = [
        LocationStudyCountRow(
            country=country,
            study_count=len(group),
            pmids=frozenset(s.pmid for s in group),
        )
        for country, group in groups.items()
    ]
    rows.sort(key=lambda r: (-r.study_count, r.country))
    return rows


def rq3_r0_range_by_location(
    summaries: Iterable[StructuredSummary], disease_key: str
) -> list[LocationR0RangeRow]:
    """Per-country [min, max] R0 envelope for one disease."""
    groups: dict[str, list[StructuredSummary]] = defaultdict(list)
    for s in _located(summaries, disease_key):
        groups[s.location.country].append(s)
    rows = [
        LocationR0RangeRow(
            country=country,
            min_r0=min(s.r0_min for s in group),
            max_r0=max(s.r0_max for s in group),
            pmids=frozenset(s.pmid for s in group),
        )
        for country, group in groups.items()
    ]
    rows.sort(key=lambda r: r.country)
    return rows


def _group_coordinates(group: Sequence[StructuredSummary], country: str) -> tuple[float, float]:
    # prefer a country-level resolution; otherwise the alphabetically first
    # place name keeps the choice deterministic
    locs = sorted(
        (s.location for s in group),
        key=lambda loc: (loc.canonical_name != country, loc.canonical_name),
    )
    chosen = locs[0]
    return (chosen.latitude, chosen.longitude)


def rq4_map_points(
    summaries: Iterable[StructuredSummary], disease_keys: Sequence[str]
) -> list[MapPoint]:
    """World-map markers for up to three diseases: one point per
    disease-country pair, carrying coordinates and the study count."""
    distinct = sorted(set(disease_keys))
    if not distinct:
        raise EmptySelection("no diseases selected")
    if len(distinct) > MAX_MAP_DISEASES:
        raise TooManyDiseases(
            f"{len(distinct)} diseases selected, at most {MAX_MAP_DISEASES} allowed"
        )
    summaries = list(summaries)
    points = []
    for disease_key in distinct:
        groups: dict[str, list[StructuredSummary]] = defaultdict(list)
        for s in _located(summaries, disease_key):
            groups[s.location.country].append(s)
        for country in sorted(groups):
            group = groups[country]
            lat, lon = _group_coordinates(group, country)
            points.append(
                MapPoint(
                    disease_key=disease_key,
                    country=country,
                    latitude=lat,
                    longitude=lon,
                    study_count=len(group),
                    pmids=frozenset(s.pmid for s in group),
                )
            )
    return points


def stats_snapshot(
    total_papers: int, summaries: Iterable[StructuredSummary]
) -> StatsSnapshot:
    """Corpus totals; distinct locations count resolved countries."""
    summaries = list(summaries)
    return StatsSnapshot(
        total_papers=total_papers,
        total_summaries=len(summaries),
        distinct_diseases=len({s.disease_key for s in summaries}),
        distinct_locations=len(
            {s.location.country for s in summaries if s.location is not None}
        ),
    )


def pubmed_url(pmid: str) -> str:
    return PUBMED_URL_TEMPLATE.format(pmid=pmid)


def drilldown(
    summaries: Iterable[StructuredSummary],
    papers: Mapping[str, PaperRecord],
    disease_key: str,
    country: Optional[str] = None,
) -> list[DrilldownEntry]:
    """Distinct publications behind a chart bar (disease, optionally
    narrowed to a resolved country), newest publication year first."""
    selected: dict[str, None] = {}
    for s in summaries:
        if s.disease_key != disease_key:
            continue
        if country is not None and (s.location is None or s.location.country != country):
            continue
        selected[s.pmid] = None

    def sort_key(pmid: str):
        paper = papers.get(pmid)
        year = paper.pub_year if paper and paper.pub_year is not None else -1
        return (-year, int(pmid))

    entries = []
    for pmid in sorted(selected, key=sort_key):
        paper = papers.get(pmid)
        entries.append(
            DrilldownEntry(
                pmid=pmid,
                title=paper.title if paper else "",
                pubmed_url=pubmed_url(pmid),
            )
        )
    return entries
