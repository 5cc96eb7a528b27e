"""Acceptance suite: one test per platform-level criterion, each printing a
PASS/FAIL line. Run with `pytest tests/test_acceptance.py -v -s`."""

import functools
import io
import json
import random
import string
import time
from datetime import datetime, timezone
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

import oracles
from helpers import (
    assert_drilldown_equal,
    assert_rq1_equal,
    assert_rq2_equal,
    assert_rq3_equal,
    assert_rq4_equal,
    assert_stats_equal,
    make_random_dataset,
)
from r0scope import analytics
from r0scope.extraction import RawSummary, parse_response
from r0scope.gazetteer import Gazetteer
from r0scope.ingest import build_search_query, parse_pubmed_csv
from r0scope.normalize import canonical_disease, normalize_summary, parse_ci, parse_r0, render_r0
from r0scope.scheduler import SchedulerConfig, run_pipeline_once
from r0scope.service import create_app
from r0scope.store import Store

FIXTURES = Path(__file__).parent / "fixtures"
GAZ = Gazetteer.bundled()
TS = datetime(2024, 1, 15, tzinfo=timezone.utc)


def criterion(name):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"FAIL: {name}")
                raise
            print(f"PASS: {name}")
            return result

        return wrapper

    return decorate


def run_golden_pipeline(store):
    """parse_response -> normalize -> upsert over the 30-abstract fixture."""
    records, errors = parse_pubmed_csv(
        (FIXTURES / "golden_papers.csv").read_bytes(), fetched_at=TS
    )
    assert errors == []
    responses = {}
    with open(FIXTURES / "golden_responses.jsonl", encoding="utf-8") as fh:
        for line in fh:
            entry = json.loads(line)
            responses[entry["pmid"]] = entry["text"]

    summaries = []
    unanswerable = 0
    for record in records:
        resp = parse_response(record.pmid, responses[record.pmid])
        if not resp.is_answerable:
            unanswerable += 1
            continue
        for raw in resp.summaries:
            summaries.append(normalize_summary(raw, GAZ))
    report = store.upsert_batch(records, summaries)
    return records, report, unanswerable


@criterion("golden pipeline: 30-abstract fixture reproduces the gold file byte-for-byte in < 5 s")
def test_golden_pipeline(tmp_path):
    started = time.monotonic()
    store = Store(tmp_path / "golden.db")
    records, report, unanswerable = run_golden_pipeline(store)
    assert len(records) == 30
    assert report.papers_new == 30
    assert unanswerable == 4
    assert report.summaries_new == 28

    papers_buf, summaries_buf = io.StringIO(), io.StringIO()
    store.dump(papers_buf, summaries_buf)
    gold = (FIXTURES / "golden_summaries.jsonl").read_text(encoding="utf-8")
    assert summaries_buf.getvalue() == gold

    # a second identical run stays byte-stable
    second = Store(tmp_path / "golden2.db")
    run_golden_pipeline(second)
    buf2 = io.StringIO()
    second.dump(io.StringIO(), buf2)
    assert buf2.getvalue() == gold
    second.close()
    store.close()

    elapsed = time.monotonic() - started
    assert elapsed < 5.0, f"golden pipeline took {elapsed:.2f}s"


@criterion("unanswerable filtering: 10 papers, 4 unanswerable -> summaries for exactly 6 papers")
def test_unanswerable_filtering(tmp_path):
    drop = tmp_path / "drop"
    drop.mkdir()
    (drop / "export.csv").write_bytes((FIXTURES / "ten_paper_drop.csv").read_bytes())
    store = Store(tmp_path / "ten.db")
    config = SchedulerConfig(source="csv-drop-directory", extractor="rule-based", drop_dir=drop)
    report = run_pipeline_once(config, store)
    assert report.papers_seen == 10
    assert report.unanswerable_count == 4
    papers_with_summaries = {s.pmid for s in store.query_summaries()}
    assert len(papers_with_summaries) == 6
    store.close()


def build_fig3_store(path):
    """Ebola studies across the six countries of the disease's location
    chart, two of them in Liberia."""
    from r0scope.ingest import PaperRecord

    layout = [
        ("11", "Liberia", "1.7", 2015),
        ("12", "Liberia", "1.8-2.2", 2016),
        ("13", "Guinea", "1.5", 2014),
        ("14", "Sierra Leone", "2.0", 2015),
        ("15", "Congo", "2.5", 2018),
        ("16", "Uganda", "1.3", 2012),
        ("17", "Zambia", "1.6", 2019),
    ]
    papers, summaries = [], []
    for pmid, country, r0, year in layout:
        papers.append(
            PaperRecord(
                pmid=pmid,
                title=f"Ebola transmission in {country}",
                pub_date_raw=str(year),
                pub_year=year,
                fetched_at=TS,
            )
        )
        raw = RawSummary(
            pmid=pmid,
            disease_name="Ebola",
            location=country,
            date=str(year),
            r0_value=r0,
            ci_values="unknown",
            method="unknown",
        )
        summaries.append(normalize_summary(raw, GAZ))
    store = Store(path)
    store.upsert_batch(papers, summaries)
    return store, layout


@criterion("Fig-3 reproduction: rq2(ebola) returns the six fixture countries; Liberia drilldown exact")
def test_fig3_reproduction(tmp_path):
    store, layout = build_fig3_store(tmp_path / "fig3.db")
    with TestClient(create_app(store)) as client:
        body = client.get("/api/rq2?disease=ebola").json()
        countries = {row["country"] for row in body["rows"]}
        assert countries == {"Congo", "Guinea", "Liberia", "Sierra Leone", "Uganda", "Zambia"}

        dd = client.get("/api/drilldown?disease=ebola&country=Liberia").json()
        expected_pmids = [pmid for pmid, country, _, _ in layout if country == "Liberia"]
        assert {row["pmid"] for row in dd["rows"]} == set(expected_pmids)
        for row in dd["rows"]:
            assert row["pubmed_url"] == f"https://pubmed.ncbi.nlm.nih.gov/{row['pmid']}/"
            assert row["title"] == "Ebola transmission in Liberia"
    store.close()


@criterion("oracle equivalence: 100 randomized stores match brute force on all operations in < 60 s")
def test_oracle_equivalence():
    started = time.monotonic()
    rng = random.Random(20240115)
    for seed in range(100):
        papers, summaries = make_random_dataset(seed)
        diseases = sorted({s.disease_key for s in summaries})

        assert_rq1_equal(analytics.rq1_max_r0(summaries), oracles.brute_rq1(summaries))
        lo = round(rng.uniform(0, 10), 3)
        hi = round(lo + rng.uniform(0, 15), 3)
        assert_rq1_equal(
            analytics.rq1_max_r0(summaries, lo, hi), oracles.brute_rq1(summaries, lo, hi)
        )

        probes = rng.sample(diseases, k=min(2, len(diseases)))
        for disease in probes:
            assert_rq2_equal(
                analytics.rq2_studies_by_location(summaries, disease),
                oracles.brute_rq2(summaries, disease),
            )
            assert_rq3_equal(
                analytics.rq3_r0_range_by_location(summaries, disease),
                oracles.brute_rq3(summaries, disease),
            )
            assert_drilldown_equal(
                analytics.drilldown(summaries, papers, disease),
                oracles.brute_drilldown(summaries, papers, disease),
            )
            rq2_rows = analytics.rq2_studies_by_location(summaries, disease)
            if rq2_rows:
                country = rng.choice(rq2_rows).country
                assert_drilldown_equal(
                    analytics.drilldown(summaries, papers, disease, country),
                    oracles.brute_drilldown(summaries, papers, disease, country),
                )

        selection = rng.sample(diseases, k=min(3, len(diseases)))
        assert_rq4_equal(
            analytics.rq4_map_points(summaries, selection),
            oracles.brute_rq4(summaries, selection),
        )
        assert_stats_equal(
            analytics.stats_snapshot(len(papers), summaries),
            oracles.brute_stats(len(papers), summaries),
        )
    elapsed = time.monotonic() - started
    assert elapsed < 60.0, f"oracle sweep took {elapsed:.1f}s"


def random_r0_text(rng):
    """A random single value or range in one of the accepted shapes,
    returning (text, lo, hi)."""
    a = round(rng.uniform(0, 50), rng.randint(0, 3))
    b = round(rng.uniform(0, 50), rng.randint(0, 3))
    lo, hi = min(a, b), max(a, b)
    shape = rng.randrange(6)
    if shape == 0:
        return str(a), a, a
    if shape == 1:
        return f"{a}-{b}", lo, hi
    if shape == 2:
        return f"{a} – {b}", lo, hi
    if shape == 3:
        return f"{a} to {b}", lo, hi
    if shape == 4:
        return f"between {a} and {b}", lo, hi
    text = f"estimated at {a} overall"
    return text, a, a


@criterion("parser properties: 10,000 R0 strings, 10,000 CI strings, 10,000 idempotence checks")
def test_parser_properties():
    rng = random.Random(42)
    for _ in range(10_000):
        text, lo, hi = random_r0_text(rng)
        got_lo, got_hi = parse_r0(text)
        assert got_lo <= got_hi
        assert got_lo == lo and got_hi == hi
        assert parse_r0(render_r0(got_lo, got_hi)) == (got_lo, got_hi)

    ci_shapes = [
        "{level}% CI: {a}-{b}",
        "({level}% CI {a}–{b})",
        "{a}-{b} ({level}% CI)",
        "{a}-{b}",
    ]
    for _ in range(10_000):
        a = round(rng.uniform(0, 30), 2)
        b = round(rng.uniform(0, 30), 2)
        level = rng.choice([80, 90, 95, 99])
        text = rng.choice(ci_shapes).format(level=level, a=a, b=b)
        ci = parse_ci(text)
        assert ci is not None
        assert ci.low <= ci.high
        assert ci.low == min(a, b) and ci.high == max(a, b)

    alphabet = string.printable + "éüß中文 "
    for _ in range(10_000):
        text = "".join(rng.choices(alphabet, k=rng.randint(0, 40)))
        once = canonical_disease(text)
        assert canonical_disease(once) == once


@criterion("scheduler idempotence: second run on the same drop reports zero new, state hash unchanged")
def test_scheduler_idempotence(tmp_path):
    drop = tmp_path / "drop"
    drop.mkdir()
    (drop / "export.csv").write_bytes((FIXTURES / "ten_paper_drop.csv").read_bytes())
    store = Store(tmp_path / "sched.db")
    config = SchedulerConfig(source="csv-drop-directory", extractor="rule-based", drop_dir=drop)
    run_pipeline_once(config, store)
    state = store.content_state_hash()
    report = run_pipeline_once(config, store)
    assert report.papers_new == 0
    assert report.summaries_new == 0
    assert store.content_state_hash() == state
    store.close()


@criterion("query-string fidelity: search query matches character-for-character")
def test_query_string_fidelity():
    expected = (
        "(basic reproduction number[TIAB] OR basic reproductive number[TIAB] "
        "OR basic reproduction ratio[TIAB] OR basic reproductive rate[TIAB] "
        "OR basic reproductive ratio[TIAB] OR basic reproduction rate[TIAB] "
        "OR R0[TIAB]) NOT (R0 resection OR cancer)"
    )
    assert build_search_query() == expected


@criterion("API contract: documented field sets on the golden fixture; rq4 overflow -> 400")
def test_api_contract(tmp_path):
    store = Store(tmp_path / "api.db")
    run_golden_pipeline(store)
    with TestClient(create_app(store)) as client:
        stats = client.get("/api/stats")
        assert stats.status_code == 200
        assert set(stats.json()) == {
            "total_papers",
            "total_summaries",
            "distinct_diseases",
            "distinct_locations",
        }
        assert stats.json()["total_papers"] == 30
        assert stats.json()["total_summaries"] == 28

        papers = client.get("/api/papers?page=1&size=10&q=ebola").json()
        assert set(papers) == {"rows", "total", "page", "size"}
        for row in papers["rows"]:
            assert set(row) == {"pmid", "title", "abstract", "pub_year", "pubmed_url"}

        rq1 = client.get("/api/rq1?r0_min=1&r0_max=20").json()
        assert set(rq1) == {"rows"}
        for row in rq1["rows"]:
            assert set(row) == {
                "disease",
                "max_r0",
                "mean_r0",
                "median_r0",
                "study_count",
                "pmids",
            }

        rq2 = client.get("/api/rq2?disease=ebola").json()
        assert set(rq2) == {"disease", "rows"}
        for row in rq2["rows"]:
            assert set(row) == {"country", "study_count", "pmids"}

        rq3 = client.get("/api/rq3?disease=ebola").json()
        assert set(rq3) == {"disease", "rows"}
        for row in rq3["rows"]:
            assert set(row) == {"country", "min_r0", "max_r0", "pmids"}

        rq4 = client.get("/api/rq4?diseases=ebola,covid-19").json()
        assert set(rq4) == {"diseases", "points"}
        for point in rq4["points"]:
            assert set(point) == {
                "disease",
                "country",
                "latitude",
                "longitude",
                "study_count",
                "pmids",
            }

        overflow = client.get("/api/rq4?diseases=a,b,c,d")
        assert overflow.status_code == 400
        assert overflow.json()["error"] == "TooManyDiseases"

        dd = client.get("/api/drilldown?disease=ebola&country=Liberia").json()
        assert set(dd) == {"disease", "country", "rows"}
        for row in dd["rows"]:
            assert set(row) == {"pmid", "title", "pubmed_url"}

        health = client.get("/api/health")
        assert health.json() == {"status": "ok"}
    store.close()
