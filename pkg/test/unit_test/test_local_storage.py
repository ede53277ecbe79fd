"""
Unit tests for local disk storage.
"""
import hashlib

import pandas as pd
import pytest

from mtsp_cmsa.exceptions import StorageError
from mtsp_cmsa.schemas.run_schemas import RunRecord
from mtsp_cmsa.storage.local_storage import SUMMARY_CSV, SUMMARY_JSON, LocalStorageService


def sample_record() -> RunRecord:
    return RunRecord(
        instance="toy.json",
        n=3,
        m=2,
        seed=0,
        time_limit_s=3.0,
        best_value=2.5,
        time_to_best_s=0.1,
        iterations=4,
        routes=[[1, 2], [3]],
    )


class TestDocuments:
    """Tests for JSON document storage."""

    def test_save_and_load_document(self, tmp_path):
        storage = LocalStorageService(tmp_path)
        path = storage.save_document(sample_record(), "nested/dir/record.json")
        assert path == tmp_path / "nested" / "dir" / "record.json"
        data = storage.load_json("nested/dir/record.json")
        assert RunRecord.model_validate(data) == sample_record()

    def test_absolute_paths_bypass_base(self, tmp_path):
        storage = LocalStorageService(tmp_path / "base")
        target = tmp_path / "elsewhere.txt"
        assert storage.save_text("x", target) == target
        assert target.read_text() == "x"

    def test_missing_file(self, tmp_path):
        with pytest.raises(StorageError) as exc_info:
            LocalStorageService(tmp_path).load_json("absent.json")
        assert exc_info.value.error_code == "STORAGE_ERROR"

    def test_invalid_json(self, tmp_path):
        (tmp_path / "bad.json").write_text("{")
        with pytest.raises(StorageError):
            LocalStorageService(tmp_path).load_json("bad.json")


class TestBenchSummary:
    """Tests for summary files."""

    def test_csv_and_json_written(self, tmp_path):
        storage = LocalStorageService(tmp_path)
        summary = pd.DataFrame(
            [{"instance": "a", "m": 2, "runs": 2, "mean": 1.5, "best": 1.0, "num_best": 1,
              "mean_time_to_best_s": 0.2}]
        )
        csv_path, json_path = storage.save_bench_summary(summary, "out")
        assert csv_path.name == SUMMARY_CSV
        assert json_path.name == SUMMARY_JSON
        loaded = storage.load_bench_summary("out")
        assert loaded.to_dict("records") == summary.to_dict("records")
        assert storage.load_json(json_path)[0]["best"] == 1.0

    def test_numeric_instance_names_stay_text(self, tmp_path):
        storage = LocalStorageService(tmp_path)
        summary = pd.DataFrame(
            [{"instance": "007", "m": 2, "runs": 1, "mean": 1.0, "best": 1.0, "num_best": 1,
              "mean_time_to_best_s": 0.1}]
        )
        storage.save_bench_summary(summary, "out")
        assert storage.load_bench_summary("out")["instance"].tolist() == ["007"]


class TestFiles:
    """Tests for hashing and globbing."""

    def test_sha256(self, tmp_path):
        path = tmp_path / "data.bin"
        path.write_bytes(b"abc" * 1000)
        expected = hashlib.sha256(b"abc" * 1000).hexdigest()
        assert LocalStorageService.compute_sha256(path, chunk_size=7) == expected

    def test_list_files_sorted(self, tmp_path):
        for name in ("b.json", "a.json", "c.txt"):
            (tmp_path / name).write_text("{}")
        storage = LocalStorageService(tmp_path)
        assert [p.name for p in storage.list_files("*.json")] == ["a.json", "b.json"]
        absolute = storage.list_files(str(tmp_path / "*.txt"))
        assert [p.name for p in absolute] == ["c.txt"]
