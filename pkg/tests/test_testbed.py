import statistics

import pytest

from sspolicy.domain import validate
from sspolicy.testbed import (
    _DEMAND_25_GENERATED, BenchmarkConfig, build_instances, demand_means,
    generate_25, instance_id, instance_seed, read_detail_csv, run_benchmark,
    write_detail_csv, write_summary_csv,
)


class TestDemandPatterns:
    def test_lcy1_8period(self):
        assert demand_means("LCY1", 8) == (15, 16, 15, 14, 11, 7, 6, 3)

    def test_sta_25period(self):
        assert demand_means("STA", 25) == (100,) * 25

    def test_lcy1_peak(self):
        assert demand_means("LCY1", 25)[12] == 190

    @pytest.mark.parametrize("pattern", ["LCY1", "LCY2", "SIN1", "SIN2", "STA"])
    def test_regeneration_identity(self, pattern):
        assert generate_25(pattern) == _DEMAND_25_GENERATED[pattern]

    def test_unknown_pattern(self):
        with pytest.raises(ValueError, match="unknown pattern"):
            demand_means("WAVE", 8)

    def test_unsupported_horizon(self):
        with pytest.raises(ValueError, match="horizon"):
            demand_means("STA", 12)

    def test_emp_trailing_zeros_have_zero_sd(self):
        config = BenchmarkConfig(horizon=25, patterns=("EMP2",),
                                 allow_export_only=True)
        inst = build_instances(config)[0]
        assert inst.demands[-1].mean == 0
        assert inst.demands[-1].std_dev == 0


class TestInstanceGrid:
    def test_default_grid_size(self):
        assert len(build_instances(BenchmarkConfig())) == 270

    def test_single_pattern_slice(self):
        cfg = BenchmarkConfig(patterns=("STA",))
        assert len(build_instances(cfg)) == 27

    def test_instances_validate(self):
        for inst in build_instances(BenchmarkConfig(patterns=("LCY1", "EMP3"))):
            validate(inst)

    def test_identifier_pure_function(self):
        a = instance_id("STA", 200, 5, 0.1, 8)
        assert a == "h8-STA-K200-b5-cv0.1"
        assert instance_seed(7, a) == instance_seed(7, a)
        assert instance_seed(7, a) != instance_seed(8, a)

    def test_config_validation(self):
        with pytest.raises(ValueError, match="horizon"):
            BenchmarkConfig(horizon=9)
        with pytest.raises(ValueError, match="pattern"):
            BenchmarkConfig(patterns=("XYZ",))
        with pytest.raises(ValueError, match="method"):
            BenchmarkConfig(methods=("greedy",))


@pytest.fixture(scope="module")
def small_report():
    cfg = BenchmarkConfig(patterns=("STA",), fixed_costs=(200.0,),
                          penalty_costs=(5.0, 10.0), cvs=(0.1, 0.3),
                          methods=("bs", "mp"), replications=2000)
    return cfg, run_benchmark(cfg)


class TestBenchmarkRun:

    def test_all_rows_present(self, small_report):
        cfg, report = small_report
        assert len(report.results) == 4 * 2
        assert all(r.status == "ok" for r in report.results)

    def test_gaps_small(self, small_report):
        _, report = small_report
        for method in ("bs", "mp"):
            gaps = report.ok_gaps(method)
            assert statistics.mean(gaps) < 1.5

    def test_summary_grouping(self, small_report):
        cfg, report = small_report
        rows = report.summary_rows()
        groupings = {(r[0], r[1], r[2]) for r in rows}
        assert ("pattern", "STA", "bs") in groupings
        assert ("b", "5", "mp") in groupings
        assert ("cv", "0.3", "bs") in groupings
        assert ("overall", "mean", "bs") in groupings

    def test_detail_round_trip(self, small_report, tmp_path):
        _, report = small_report
        path = tmp_path / "detail.csv"
        write_detail_csv(report, path)
        back = read_detail_csv(path)
        assert len(back) == len(report.results)
        by_key = {(r.instance_id, r.method): r for r in report.results}
        for row in back:
            orig = by_key[(row.instance_id, row.method)]
            assert row.gap_pct == pytest.approx(orig.gap_pct, abs=1e-9)

    def test_summary_csv_written_with_note(self, small_report, tmp_path):
        _, report = small_report
        path = tmp_path / "summary.csv"
        write_summary_csv(report, path)
        text = path.read_text()
        assert text.startswith("# note: h=1 c=0")
        assert "overall,mean,bs" in text

    def test_resume_equals_fresh(self, small_report, tmp_path):
        """Partial detail file: the rerun completes it without re-simulating
        done rows, and the final report matches a fresh run."""
        cfg, fresh = small_report
        path = tmp_path / "detail.csv"
        partial = type(fresh)(config=cfg, results=fresh.results[:3])
        write_detail_csv(partial, path)
        resumed = run_benchmark(cfg, detail_path=path)
        assert len(resumed.results) == len(fresh.results)
        fresh_map = {(r.instance_id, r.method): r.gap_pct for r in fresh.results}
        for r in resumed.results:
            assert r.gap_pct == pytest.approx(
                fresh_map[(r.instance_id, r.method)], abs=1e-9)

    def test_parallel_equals_serial(self):
        cfg = BenchmarkConfig(patterns=("RAND",), fixed_costs=(300.0,),
                              penalty_costs=(10.0,), cvs=(0.1, 0.2),
                              methods=("bs",), replications=1000)
        serial = run_benchmark(cfg, jobs=1)
        parallel = run_benchmark(cfg, jobs=2)
        s = {(r.instance_id, r.method): r.gap_pct for r in serial.results}
        p = {(r.instance_id, r.method): r.gap_pct for r in parallel.results}
        assert s == p

    def test_25_period_gated(self):
        cfg = BenchmarkConfig(horizon=25, patterns=("STA",))
        with pytest.raises(ValueError, match="external MIP solver"):
            run_benchmark(cfg)


def test_summary_is_exact_mean_of_detail(small_report):
    """Aggregates are plain means of the per-instance gaps; nothing is
    re-simulated during aggregation."""
    _, report = small_report
    rows = report.summary_rows()
    overall = next(r[3] for r in rows if r[0] == "overall" and r[2] == "bs")
    gaps = report.ok_gaps("bs")
    assert overall == sum(gaps) / len(gaps)
