"""
Integration tests for the benchmark job queue.
"""
import pytest

from mtsp_cmsa.jobs.job_queue import BenchCell, BenchJobQueue, run_bench_cell
from mtsp_cmsa.services.instance_service import InstanceService
from mtsp_cmsa.storage.local_storage import LocalStorageService


@pytest.fixture
def instance_file(tmp_path):
    inst = InstanceService.generate_random(12, 21, name="bench12")
    return LocalStorageService(tmp_path).save_document(
        InstanceService.to_document(inst), "bench12.json"
    )


def make_cell(path, m, run_index):
    return BenchCell(
        instance_path=str(path),
        m=m,
        run_index=run_index,
        seed=100 + run_index,
        time_limit_s=60.0,
        max_iterations=2,
    )


class TestBenchJobQueue:
    """Tests for queued bench cells."""

    def test_run_cell(self, instance_file, fast_config):
        result = run_bench_cell(make_cell(instance_file, 3, 0), fast_config)
        assert result.instance == str(instance_file)
        assert result.m == 3
        assert result.seed == 100
        assert sorted(c for route in result.routes for c in route) == list(range(1, 13))

    def test_results_in_enqueue_order(self, instance_file, fast_config):
        queue = BenchJobQueue(fast_config)
        for m, run_index in [(2, 0), (4, 0), (2, 1)]:
            queue.enqueue(make_cell(instance_file, m, run_index))
        assert len(queue) == 3
        assert [c.m for c in queue.cells()] == [2, 4, 2]

        records = queue.run_all(workers=1)
        assert [(r.m, r.seed) for r in records] == [(2, 100), (4, 100), (2, 101)]
        assert len(queue) == 0

    def test_cells_copy(self, instance_file, fast_config):
        queue = BenchJobQueue(fast_config)
        queue.enqueue(make_cell(instance_file, 2, 0))
        queue.cells().clear()
        assert len(queue) == 1

    @pytest.mark.slow
    def test_process_pool_matches_serial(self, instance_file, fast_config):
        cells = [make_cell(instance_file, m, 0) for m in (2, 3)]
        serial = BenchJobQueue(fast_config)
        pooled = BenchJobQueue(fast_config)
        for cell in cells:
            serial.enqueue(cell)
            pooled.enqueue(cell)
        expected = serial.run_all(workers=1)
        actual = pooled.run_all(workers=2)
        assert [r.routes for r in actual] == [r.routes for r in expected]
