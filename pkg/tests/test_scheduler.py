import threading
import time
from datetime import timedelta
from pathlib import Path

import pytest

from r0scope.extraction import ExtractorResponse, RawSummary, Unparseable
from r0scope.scheduler import (
    PipelineRunReport,
    Scheduler,
    SchedulerConfig,
    SourceUnavailable,
    run_pipeline_once,
)
from r0scope.store import Store

# rule extractor answers 6 of these (1,2,3,5,7,9); 4,6,8,10 have no R0 number
TEN_PAPER_CSV = (Path(__file__).parent / "fixtures" / "ten_paper_drop.csv").read_text(
    encoding="utf-8"
)


@pytest.fixture
def drop_dir(tmp_path):
    d = tmp_path / "drop"
    d.mkdir()
    (d / "export.csv").write_text(TEN_PAPER_CSV, encoding="utf-8")
    return d


@pytest.fixture
def store(tmp_path):
    s = Store(tmp_path / "pipeline.db")
    yield s
    s.close()


def config_for(drop_dir, **kw):
    return SchedulerConfig(
        interval=timedelta(hours=1),
        source="csv-drop-directory",
        extractor="rule-based",
        drop_dir=Path(drop_dir),
        **kw,
    )


class TestSchedulerConfig:
    def test_interval_floor(self, drop_dir):
        with pytest.raises(ValueError):
            SchedulerConfig(interval=timedelta(seconds=30), drop_dir=drop_dir)

    def test_max_batch_floor(self, drop_dir):
        with pytest.raises(ValueError):
            SchedulerConfig(max_batch=0, drop_dir=drop_dir)

    def test_source_needs_drop_dir(self):
        with pytest.raises(ValueError):
            SchedulerConfig(source="csv-drop-directory")

    def test_endpoint_extractor_needs_endpoint(self, drop_dir):
        with pytest.raises(ValueError):
            SchedulerConfig(extractor="endpoint", drop_dir=drop_dir)


class TestRunPipelineOnce:
    def test_empty_source_advances_watermark(self, tmp_path, store):
        empty = tmp_path / "empty"
        empty.mkdir()
        report = run_pipeline_once(config_for(empty), store)
        assert (report.papers_seen, report.papers_new, report.summaries_new) == (0, 0, 0)
        assert report.error_count == 0
        assert store.watermark is not None

    def test_ten_paper_fixture(self, drop_dir, store):
        report = run_pipeline_once(config_for(drop_dir), store)
        assert report.papers_seen == 10
        assert report.papers_new == 10
        assert report.unanswerable_count == 4
        assert report.summaries_new >= 6
        answered = {s.pmid for s in store.query_summaries()}
        assert answered == {"1", "2", "3", "5", "7", "9"}
        assert store.count_papers() == 10

    def test_second_run_is_noop(self, drop_dir, store):
        run_pipeline_once(config_for(drop_dir), store)
        state = store.content_state_hash()
        report = run_pipeline_once(config_for(drop_dir), store)
        assert report.papers_seen == 10
        assert (report.papers_new, report.summaries_new) == (0, 0)
        assert store.content_state_hash() == state

    def test_watermark_advances_each_run(self, drop_dir, store):
        run_pipeline_once(config_for(drop_dir), store)
        first = store.watermark
        run_pipeline_once(config_for(drop_dir), store)
        assert store.watermark >= first

    def test_missing_drop_dir_aborts_without_watermark(self, tmp_path, store):
        config = config_for(tmp_path / "nope")
        with pytest.raises(SourceUnavailable):
            run_pipeline_once(config, store)
        assert store.watermark is None

    def test_max_batch_caps_processing(self, drop_dir, store):
        report = run_pipeline_once(config_for(drop_dir, max_batch=4), store)
        assert report.papers_seen == 10
        assert report.papers_new == 4
        # a later run picks up the remainder
        report2 = run_pipeline_once(config_for(drop_dir, max_batch=1000), store)
        assert report2.papers_new == 6

    def test_extraction_error_counts_and_leaves_paper_for_retry(self, drop_dir, store):
        calls = {"n": 0}

        def flaky(paper):
            if paper.pmid == "1":
                calls["n"] += 1
                raise Unparseable("garbage", pmid=paper.pmid)
            return ExtractorResponse.unanswerable("unanswerable")

        report = run_pipeline_once(config_for(drop_dir), store, extractor=flaky)
        assert report.error_count == 1
        assert report.papers_new == 9
        assert "1" not in store.known_pmids()
        # retried on the next run
        run_pipeline_once(config_for(drop_dir), store, extractor=flaky)
        assert calls["n"] == 2

    def test_normalization_failure_drops_summary_keeps_paper(self, drop_dir, store):
        def bad_r0(paper):
            return ExtractorResponse.answerable(
                [
                    RawSummary(
                        pmid=paper.pmid,
                        disease_name="x",
                        location="x",
                        date="x",
                        r0_value="not reported",
                        ci_values="x",
                        method="x",
                    )
                ],
                "raw",
            )

        report = run_pipeline_once(config_for(drop_dir), store, extractor=bad_r0)
        assert report.papers_new == 10
        assert report.summaries_new == 0
        assert report.error_count == 10

    def test_row_errors_counted(self, tmp_path, store):
        d = tmp_path / "drop"
        d.mkdir()
        (d / "bad.csv").write_text(
            "PMID,Title,Abstract,Publication Year\n,missing pmid,a,2020\n5,Valid R0 of 2.0 study,R0 was 2.0,2020\n",
            encoding="utf-8",
        )
        report = run_pipeline_once(config_for(d), store)
        assert report.error_count == 1
        assert report.papers_seen == 1

    def test_pubmed_source_uses_client(self, store, drop_dir):
        class FakeClient:
            def __init__(self):
                self.calls = []

            def fetch_since(self, watermark, max_records):
                self.calls.append((watermark, max_records))
                return []

        client = FakeClient()
        config = SchedulerConfig(
            source="pubmed-client",
            extractor="rule-based",
            pubmed_client=client,
            max_batch=77,
        )
        report = run_pipeline_once(config, store)
        assert client.calls == [(None, 77)]
        assert report.papers_seen == 0

    def test_pubmed_client_failure_is_source_unavailable(self, store):
        class BrokenClient:
            def fetch_since(self, watermark, max_records):
                raise ConnectionError("down")

        config = SchedulerConfig(
            source="pubmed-client", extractor="rule-based", pubmed_client=BrokenClient()
        )
        with pytest.raises(SourceUnavailable):
            run_pipeline_once(config, store)

    def test_report_invariants(self, drop_dir, store):
        report = run_pipeline_once(config_for(drop_dir), store)
        assert report.papers_new <= report.papers_seen
        assert report.finished_at >= report.started_at


class TestScheduler:
    def test_tick_runs_pipeline(self, drop_dir, store):
        scheduler = Scheduler(config_for(drop_dir), store)
        report = scheduler.tick()
        assert isinstance(report, PipelineRunReport)
        assert scheduler.last_report is report

    def test_overlapping_tick_skips(self, drop_dir, store):
        scheduler = Scheduler(config_for(drop_dir), store)
        started = threading.Event()
        release = threading.Event()

        def slow_extractor(paper):
            started.set()
            release.wait(timeout=5)
            return ExtractorResponse.unanswerable("unanswerable")

        scheduler.extractor = slow_extractor
        t = threading.Thread(target=scheduler.tick)
        t.start()
        started.wait(timeout=5)
        assert scheduler.tick() is None  # overlapping tick skipped
        release.set()
        t.join(timeout=5)
        assert scheduler.last_report is not None

    def test_source_failure_does_not_kill_loop(self, tmp_path, store):
        scheduler = Scheduler(config_for(tmp_path / "missing"), store)
        assert scheduler.tick() is None

    def test_start_stop(self, drop_dir, store):
        scheduler = Scheduler(config_for(drop_dir), store)
        scheduler.start()
        assert scheduler._thread.is_alive()
        scheduler.stop()
        assert scheduler._thread is None

    def test_serving_continues_during_run(self, drop_dir, tmp_path):
        # readers on separate connections see consistent state mid-run
        path = tmp_path / "serve.db"
        store = Store(path)
        scheduler = Scheduler(config_for(drop_dir), store)
        gate = threading.Event()

        def slow_extractor(paper):
            gate.wait(timeout=0.05)
            return ExtractorResponse.unanswerable("unanswerable")

        scheduler.extractor = slow_extractor
        t = threading.Thread(target=scheduler.tick)
        t.start()
        reader = Store(path)
        counts = set()
        while t.is_alive():
            counts.add(reader.count_papers())
            time.sleep(0.005)
        t.join()
        counts.add(reader.count_papers())
        assert counts <= {0, 10}  # pre- or post-batch only
        reader.close()
        store.close()
