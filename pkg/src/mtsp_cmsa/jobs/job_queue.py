"""
Benchmark job queue.

Cells are (instance, m, run) triples, each a self-contained engine run.
Results come back in enqueue order whether cells run serially or on a
process pool.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional

from pydantic import BaseModel, Field

from mtsp_cmsa.config.app_config import AppConfig, get_app_config
from mtsp_cmsa.config.solver_params import SolverParams
from mtsp_cmsa.schemas.run_schemas import RunRecord
from mtsp_cmsa.services.engine_service import EngineService, evaluate
from mtsp_cmsa.services.instance_service import InstanceService
from mtsp_cmsa.exceptions import InvariantViolationError

logger = logging.getLogger(__name__)


class BenchCell(BaseModel):
    """One benchmark run."""
    instance_path: str = Field(..., description="Instance file")
    m: int = Field(..., ge=1)
    run_index: int = Field(..., ge=0)
    seed: int
    time_limit_s: Optional[float] = Field(None, description="Defaults to n seconds")
    max_iterations: Optional[int] = None
    params: Optional[SolverParams] = None


def run_bench_cell(cell: BenchCell, app_config: AppConfig) -> RunRecord:
    """
    Run one cell and revalidate its result.

    Args:
        cell: Benchmark cell
        app_config: Runtime configuration

    Returns:
        RunRecord of the run

    Raises:
        InvariantViolationError: If the reported value does not match the routes
    """
    inst = InstanceService(app_config.round_tsplib_distances).load(cell.instance_path)
    engine = EngineService(app_config)
    best, log = engine.run(
        inst,
        cell.m,
        params=cell.params,
        time_limit_s=cell.time_limit_s,
        seed=cell.seed,
        max_iterations=cell.max_iterations,
        workers=1,
    )
    z, _ = evaluate(best, inst.D)
    if abs(z - log.best_value) > 1e-9:
        raise InvariantViolationError(
            f"{cell.instance_path}: reported z={log.best_value} but routes give {z}"
        )
    return RunRecord.from_run_log(log, instance=cell.instance_path)


class BenchJobQueue:
    """
    In-memory queue of benchmark cells.
    """

    def __init__(self, app_config: Optional[AppConfig] = None):
        self.app_config = app_config or get_app_config()
        self._cells: List[BenchCell] = []

    def __len__(self) -> int:
        return len(self._cells)

    def cells(self) -> List[BenchCell]:
        """Queued cells in enqueue order."""
        return list(self._cells)

    def enqueue(self, cell: BenchCell) -> BenchCell:
        """
        Add a cell to the queue.

        Args:
            cell: Benchmark cell

        Returns:
            The enqueued cell
        """
        self._cells.append(cell)
        logger.debug(
            f"Enqueued cell {cell.instance_path} m={cell.m} run={cell.run_index} seed={cell.seed}"
        )
        return cell

    def run_all(self, workers: Optional[int] = None) -> List[RunRecord]:
        """
        Run every queued cell and empty the queue.

        Args:
            workers: Processes to use, defaults to BENCH_WORKERS

        Returns:
            RunRecords in enqueue order
        """
        workers = workers or self.app_config.bench_workers
        cells, self._cells = self._cells, []
        logger.info(f"Running {len(cells)} bench cells on {workers} worker(s)")

        if workers <= 1 or len(cells) <= 1:
            return [run_bench_cell(cell, self.app_config) for cell in cells]
        with ProcessPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(run_bench_cell, cells, [self.app_config] * len(cells)))
