"""
Integration tests for the command-line front end.
"""
import json
import logging

import pandas as pd
import pytest

from mtsp_cmsa.cli import (
    EXIT_INVALID_M,
    EXIT_OK,
    EXIT_USAGE,
    SUMMARY_COLUMNS,
    build_parser,
    m_from_percent,
    main,
    summarize,
)
from mtsp_cmsa.schemas.run_schemas import BenchSummaryRow, RunRecord
from mtsp_cmsa.storage.local_storage import LocalStorageService


def record(instance, m, best_value, time_to_best=1.0):
    return RunRecord(
        instance=instance,
        n=10,
        m=m,
        seed=0,
        time_limit_s=10.0,
        best_value=best_value,
        time_to_best_s=time_to_best,
        iterations=1,
        routes=[],
    )


@pytest.fixture
def instance_dir(tmp_path):
    """Two generated 10-city instances."""
    out = tmp_path / "instances"
    assert main(["generate", "--n", "10", "--count", "2", "--seed", "5", "--out", str(out)]) == EXIT_OK
    return out


class TestGenerate:
    """Tests for the generate command."""

    def test_files_named_by_size_and_index(self, instance_dir):
        assert sorted(p.name for p in instance_dir.iterdir()) == [
            "rand_n10_00.json",
            "rand_n10_01.json",
        ]

    def test_byte_identical_for_same_seed(self, tmp_path, instance_dir):
        again = tmp_path / "again"
        main(["generate", "--n", "10", "--count", "2", "--seed", "5", "--out", str(again)])
        for path in instance_dir.iterdir():
            assert LocalStorageService.compute_sha256(path) == LocalStorageService.compute_sha256(
                again / path.name
            )

    def test_logs_digest_per_file(self, tmp_path, caplog, monkeypatch):
        # keep caplog's handler on the root logger
        monkeypatch.setattr("mtsp_cmsa.cli.configure_logging", lambda settings: None)
        out = tmp_path / "logged"
        with caplog.at_level(logging.INFO, logger="mtsp_cmsa.cli"):
            main(["generate", "--n", "5", "--count", "1", "--seed", "2", "--out", str(out)])
        digest = LocalStorageService.compute_sha256(out / "rand_n5_00.json")
        assert f"sha256 {digest}" in caplog.text

    def test_documents_are_valid(self, instance_dir):
        data = json.loads((instance_dir / "rand_n10_00.json").read_text())
        assert data["depot"] == [0.0, 0.0]
        assert len(data["cities"]) == 10
        assert all(x * x + y * y <= 1.0 + 1e-12 for x, y in data["cities"])


class TestSolve:
    """Tests for the solve command."""

    def test_writes_run_record(self, tmp_path, instance_dir):
        out = tmp_path / "record.json"
        code = main([
            "solve", "--instance", str(instance_dir / "rand_n10_00.json"), "--m", "2",
            "--time-limit", "60", "--max-iterations", "2", "--seed", "1", "--out", str(out),
        ])
        assert code == EXIT_OK
        result = RunRecord.model_validate_json(out.read_text())
        assert result.m == 2
        assert result.n == 10
        assert result.trace is None
        assert sorted(c for route in result.routes for c in route) == list(range(1, 11))

    def test_stdout_with_trace(self, capsys, instance_dir):
        code = main([
            "solve", "--instance", str(instance_dir / "rand_n10_01.json"), "--m-percent", "25",
            "--time-limit", "60", "--max-iterations", "2", "--trace",
        ])
        assert code == EXIT_OK
        result = RunRecord.model_validate_json(capsys.readouterr().out)
        assert result.m == 3
        assert result.trace is not None
        assert len(result.trace) == result.iterations

    @pytest.mark.parametrize("m", ["0", "11"])
    def test_invalid_m(self, instance_dir, m):
        code = main(["solve", "--instance", str(instance_dir / "rand_n10_00.json"), "--m", m])
        assert code == EXIT_INVALID_M

    def test_parse_error(self, tmp_path):
        bad = tmp_path / "bad.tsp"
        bad.write_text("NAME: bad\nTYPE: TSP\nDIMENSION: 2\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n1 a b\nEOF\n")
        assert main(["solve", "--instance", str(bad), "--m", "1"]) == EXIT_USAGE

    def test_missing_instance_file(self, tmp_path):
        assert main(["solve", "--instance", str(tmp_path / "nope.tsp"), "--m", "1"]) == EXIT_USAGE

    def test_bad_params_file(self, tmp_path, instance_dir):
        params = tmp_path / "params.json"
        params.write_text('{"age_max": 0}')
        code = main([
            "solve", "--instance", str(instance_dir / "rand_n10_00.json"), "--m", "2",
            "--params-file", str(params),
        ])
        assert code == EXIT_USAGE

    def test_m_and_percent_are_exclusive(self):
        with pytest.raises(SystemExit) as exc_info:
            build_parser().parse_args(["solve", "--instance", "x", "--m", "2", "--m-percent", "5"])
        assert exc_info.value.code == EXIT_USAGE


class TestBench:
    """Tests for the bench command and its summary."""

    def test_records_and_summary(self, tmp_path, instance_dir):
        out = tmp_path / "bench"
        code = main([
            "bench", "--instances", str(instance_dir / "*.json"), "--m-list", "2,3",
            "--runs", "2", "--time-limit", "60", "--max-iterations", "2", "--out", str(out),
        ])
        assert code == EXIT_OK

        run_files = sorted(p.name for p in (out / "runs").iterdir())
        assert len(run_files) == 8
        assert "rand_n10_00_m2_r0.json" in run_files
        assert "rand_n10_01_m3_r1.json" in run_files

        summary = pd.read_csv(out / "summary.csv")
        assert list(summary.columns) == SUMMARY_COLUMNS
        assert len(summary) == 4
        assert (summary["runs"] == 2).all()
        assert (summary["num_best"] >= 1).all()

        runs = [RunRecord.model_validate_json(p.read_text()) for p in (out / "runs").iterdir()]
        for row in summary.itertuples():
            values = [r.best_value for r in runs if r.instance == row.instance and r.m == row.m]
            assert row.best == pytest.approx(min(values))
            assert row.mean == pytest.approx(sum(values) / len(values))

        rows = [BenchSummaryRow.model_validate(row) for row in json.loads((out / "summary.json").read_text())]
        assert len(rows) == 4
        assert all(row.num_best <= row.runs for row in rows)

    def test_seeds_follow_run_index(self, tmp_path, instance_dir):
        out = tmp_path / "bench"
        main([
            "bench", "--instances", str(instance_dir / "rand_n10_00.json"), "--m-list", "2",
            "--runs", "2", "--seed", "10", "--max-iterations", "1", "--time-limit", "30",
            "--out", str(out),
        ])
        seeds = [
            RunRecord.model_validate_json((out / "runs" / f"rand_n10_00_m2_r{k}.json").read_text()).seed
            for k in range(2)
        ]
        assert seeds == [10, 11]

    @pytest.mark.parametrize("m_list", ["0", "2,11"])
    def test_invalid_m_list(self, tmp_path, instance_dir, m_list):
        out = tmp_path / "bench"
        code = main([
            "bench", "--instances", str(instance_dir / "*.json"), "--m-list", m_list,
            "--max-iterations", "1", "--out", str(out),
        ])
        assert code == EXIT_INVALID_M
        assert not out.exists()

    def test_empty_glob(self, tmp_path):
        code = main(["bench", "--instances", str(tmp_path / "*.tsp"), "--m-list", "2", "--out", str(tmp_path)])
        assert code == EXIT_USAGE


class TestSummarize:
    """Tests for bench aggregation."""

    def test_aggregates_per_cell(self):
        records = [
            record("a", 2, 10.0, 1.0),
            record("a", 2, 10.0 + 1e-12, 3.0),
            record("a", 2, 12.0, 2.0),
            record("b", 2, 5.0),
        ]
        summary = summarize(records)
        first = summary.iloc[0]
        assert (first["instance"], first["m"], first["runs"]) == ("a", 2, 3)
        assert first["best"] == 10.0
        assert first["num_best"] == 2
        assert first["mean"] == pytest.approx(32.0 / 3)
        assert first["mean_time_to_best_s"] == pytest.approx(2.0)
        assert list(summary["instance"]) == ["a", "b"]

    def test_empty(self):
        assert list(summarize([]).columns) == SUMMARY_COLUMNS


@pytest.mark.parametrize(
    "n_cities,percent,expected", [(51, 5, 3), (51, 1, 1), (51, 10, 5), (51, 15, 8), (10, 25, 3)]
)
def test_m_from_percent(n_cities, percent, expected):
    assert m_from_percent(n_cities, percent) == expected
