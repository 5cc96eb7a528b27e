"""Shared test utilities: randomized dataset generation and structural
comparison between analytics rows and brute-force oracle rows."""

from __future__ import annotations

import random
from datetime import datetime, timezone

from r0scope.gazetteer import Gazetteer
from r0scope.ingest import PaperRecord
from r0scope.normalize import ConfidenceInterval, StructuredSummary

TS = datetime(2024, 1, 1, tzinfo=timezone.utc)

DECIMAL_TOL = 1e-9


def make_random_dataset(
    seed: int,
    max_summaries: int = 5000,
    min_diseases: int = 50,
    min_countries: int = 40,
    gazetteer: Gazetteer | None = None,
):
    """Random papers and summaries shaped like real pipeline output: several
    summaries per paper, some unresolved locations, occasional CIs."""
    rng = random.Random(seed)
    gaz = gazetteer or Gazetteer.bundled()
    locations = gaz.locations()
    rng.shuffle(locations)
    n_countries = rng.randint(min_countries, min(len(locations), 120))
    location_pool = locations[:n_countries]

    n_diseases = rng.randint(min_diseases, 80)
    diseases = [f"disease-{i}" for i in range(n_diseases)]

    n_summaries = rng.randint(1, max_summaries)
    n_papers = max(1, int(n_summaries * rng.uniform(0.5, 0.9)))

    papers = {}
    for i in range(1, n_papers + 1):
        pmid = str(i)
        year = rng.choice([None, *range(1995, 2025)])
        papers[pmid] = PaperRecord(
            pmid=pmid,
            title=f"Study {pmid}",
            abstract="",
            pub_date_raw=str(year) if year else "",
            pub_year=year,
            fetched_at=TS,
        )

    summaries = []
    for i in range(n_summaries):
        pmid = str(rng.randint(1, n_papers))
        lo = round(rng.uniform(0, 15), 4)
        hi = round(lo + rng.uniform(0, 10), 4) if rng.random() < 0.4 else lo
        ci = None
        if rng.random() < 0.3:
            a = round(rng.uniform(0, 10), 4)
            b = round(a + rng.uniform(0, 5), 4)
            ci = ConfidenceInterval(level=95.0, low=a, high=b, raw=f"95% CI: {a}-{b}")
        location = rng.choice(location_pool) if rng.random() < 0.85 else None
        summaries.append(
            StructuredSummary(
                pmid=pmid,
                disease_raw=rng.choice(diseases).upper(),
                disease_key=rng.choice(diseases),
                location_raw=location.canonical_name if location else "somewhere",
                location=location,
                date_raw="2020",
                year=2020,
                r0_min=lo,
                r0_max=hi,
                ci=ci,
                method_raw=f"method-{i % 7}",
            )
        )
    return papers, summaries


def assert_close(a: float, b: float):
    assert abs(a - b) <= DECIMAL_TOL, f"{a} != {b}"


def assert_rq1_equal(rows, expected):
    assert len(rows) == len(expected)
    for row, exp in zip(rows, expected):
        assert row.disease_key == exp["disease"]
        assert_close(row.max_r0, exp["max_r0"])
        assert_close(row.mean_r0, exp["mean_r0"])
        assert_close(row.median_r0, exp["median_r0"])
        assert row.study_count == exp["study_count"]
        assert set(row.pmids) == exp["pmids"]


def assert_rq2_equal(rows, expected):
    assert len(rows) == len(expected)
    for row, exp in zip(rows, expected):
        assert row.country == exp["country"]
        assert row.study_count == exp["study_count"]
        assert set(row.pmids) == exp["pmids"]


def assert_rq3_equal(rows, expected):
    assert len(rows) == len(expected)
    for row, exp in zip(rows, expected):
        assert row.country == exp["country"]
        assert_close(row.min_r0, exp["min_r0"])
        assert_close(row.max_r0, exp["max_r0"])
        assert set(row.pmids) == exp["pmids"]


def assert_rq4_equal(points, expected):
    assert len(points) == len(expected)
    for point, exp in zip(points, expected):
        assert point.disease_key == exp["disease"]
        assert point.country == exp["country"]
        assert_close(point.latitude, exp["latitude"])
        assert_close(point.longitude, exp["longitude"])
        assert point.study_count == exp["study_count"]
        assert set(point.pmids) == exp["pmids"]


def assert_stats_equal(snapshot, expected):
    assert snapshot.to_dict() == expected


def assert_drilldown_equal(entries, expected):
    assert [e.to_dict() for e in entries] == expected
