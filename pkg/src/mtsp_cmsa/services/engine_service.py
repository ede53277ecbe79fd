"""
Solver loop: Construct, Merge, Solve, Improve, Learn and Adapt until the
time limit, the iteration cap or the trivial lower bound stops it.
"""

import logging
import math
import time
from concurrent.futures import Executor, ProcessPoolExecutor
from typing import List, Optional, Tuple

import numpy as np

from mtsp_cmsa.config.app_config import AppConfig, get_app_config
from mtsp_cmsa.config.solver_params import SolverParams
from mtsp_cmsa.exceptions import InvalidSalesmenCountError, ParamsError
from mtsp_cmsa.models.model_instance import Instance, tour_length
from mtsp_cmsa.models.model_qmatrix import QMatrix
from mtsp_cmsa.models.model_route import Route, Solution
from mtsp_cmsa.schemas.run_schemas import IterationRecord, RunLog
from mtsp_cmsa.services.construct_service import construct_solution, construct_worker
from mtsp_cmsa.services.improve_service import ImproveTrace, improve
from mtsp_cmsa.services.learn_service import (
    StagnationMonitor,
    convergence_proxy,
    cooccurrence,
    maybe_reset,
    update,
)
from mtsp_cmsa.services.pool_service import RoutePool
from mtsp_cmsa.services.subsolver_service import RestrictedProblem, SubsolverService

logger = logging.getLogger(__name__)

# Strict-improvement tolerance for the incumbent
INCUMBENT_TOLERANCE = 1e-9


def evaluate(sol: Solution, D: np.ndarray) -> Tuple[float, float]:
    """
    Recompute (z, total) of a solution from the distance matrix.

    Args:
        sol: Solution to check
        D: Distance matrix

    Returns:
        (longest route length, total length)

    Raises:
        InfeasibleSolutionError: If the routes do not partition the cities
    """
    sol.validate_partition(D.shape[0] - 1)
    lengths = [tour_length(r.seq, D) for r in sol.routes]
    return max(lengths, default=0.0), math.fsum(lengths)


class EngineService:
    """Runs the solver on one instance."""

    def __init__(self, app_config: Optional[AppConfig] = None):
        """
        Initialize engine.

        Args:
            app_config: Runtime configuration, defaults to config.yaml
        """
        self.app_config = app_config or get_app_config()
        self.subsolver = SubsolverService(self.app_config.subsolver_time_cap_seconds)

    def _construct_round(
        self,
        inst: Instance,
        Q: QMatrix,
        m: int,
        params: SolverParams,
        seeds: List[np.random.SeedSequence],
        executor: Optional[Executor],
    ) -> List[Solution]:
        """n_solutions constructions, returned in construction-index order."""
        if executor is None:
            return [
                construct_solution(inst, Q, m, params, np.random.default_rng(ss)) for ss in seeds
            ]
        snapshot = Q.snapshot().values
        k = len(seeds)
        return list(
            executor.map(construct_worker, [inst] * k, [snapshot] * k, [m] * k, [params] * k, seeds)
        )

    def _subsolver_cap(self, remaining: float) -> float:
        cfg = self.app_config
        return max(0.0, min(cfg.subsolver_time_cap_seconds, cfg.subsolver_budget_fraction * remaining))

    def _monitor(self, iteration_capped: bool) -> StagnationMonitor:
        cfg = self.app_config
        window = cfg.stagnation_window_iterations if iteration_capped else cfg.stagnation_window_seconds
        return StagnationMonitor(
            window=window,
            min_points=cfg.stagnation_min_iterations,
            threshold=cfg.stagnation_threshold,
        )

    def run(
        self,
        inst: Instance,
        m: int,
        params: Optional[SolverParams] = None,
        time_limit_s: Optional[float] = None,
        seed: int = 0,
        max_iterations: Optional[int] = None,
        trace: bool = False,
        workers: Optional[int] = None,
    ) -> Tuple[Solution, RunLog]:
        """
        Solve the min-max mTSP on an instance.

        Args:
            inst: Problem instance
            m: Number of salesmen
            params: Solver parameters, defaults to the tuned row for m/n
            time_limit_s: Wall-clock budget, defaults to n seconds
            seed: Master seed
            max_iterations: Optional iteration cap
            trace: Record (z, total) after every accepted Improve move
            workers: Construction processes, defaults to CONSTRUCT_WORKERS

        Returns:
            (best solution, run log)

        Raises:
            InvalidSalesmenCountError: If m is outside [1, n_cities]
            ParamsError: If the time limit or iteration cap is not positive
        """
        n = inst.n_cities
        if not 1 <= m <= n:
            raise InvalidSalesmenCountError(m, n)
        if time_limit_s is None:
            time_limit_s = float(n)
        if not time_limit_s > 0:
            raise ParamsError(f"time limit must be positive, got {time_limit_s}")
        if max_iterations is not None and max_iterations < 1:
            raise ParamsError(f"max_iterations must be at least 1, got {max_iterations}")
        if params is None:
            params = SolverParams.for_instance(n, m)
        workers = workers or self.app_config.construct_workers

        start = time.perf_counter()
        deadline = start + time_limit_s
        lower_bound = inst.star_lower_bound()
        iteration_capped = max_iterations is not None
        check_metric = not inst.rounded

        root = np.random.SeedSequence(seed)
        improve_seed, construct_root = root.spawn(2)
        rng = np.random.default_rng(improve_seed)

        Q = QMatrix(n)
        pool = RoutePool()
        monitor = self._monitor(iteration_capped)
        records: List[IterationRecord] = []
        improve_traces: Optional[List[List[List[float]]]] = [] if trace else None

        logger.info(
            f"Solving {inst.name} (n={n}, m={m}, seed={seed}) with limit {time_limit_s:.1f}s"
            + (f" and at most {max_iterations} iterations" if iteration_capped else "")
        )

        executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
        incumbent: Optional[Solution] = None
        time_to_best = 0.0
        try:
            iteration = 0
            while True:
                if time.perf_counter() >= deadline and incumbent is not None:
                    break
                if iteration_capped and iteration >= max_iterations:
                    break
                if incumbent is not None and incumbent.z <= lower_bound + INCUMBENT_TOLERANCE:
                    logger.info("Incumbent attains the lower bound 2*max D[0,c]")
                    break

                # Construct
                seeds = construct_root.spawn(params.n_solutions)
                constructed = self._construct_round(inst, Q, m, params, seeds, executor)
                if incumbent is None:
                    incumbent = min(constructed, key=lambda s: (s.z, s.total))
                    incumbent.validate_partition(n)
                    time_to_best = time.perf_counter() - start
                    logger.info(f"Initial incumbent z={incumbent.z:.5f}")
                    if incumbent.z <= lower_bound + INCUMBENT_TOLERANCE:
                        continue

                # Merge
                pool.merge((r for s in constructed for r in s.routes), incumbent.z)
                candidates = pool.routes()
                remaining = deadline - time.perf_counter()
                if remaining <= 0:
                    break

                # Solve
                prob = RestrictedProblem.from_routes(candidates, m, n, incumbent.z)
                result = self.subsolver.solve_restricted(prob, self._subsolver_cap(remaining))

                # Improve
                post_improve_z: Optional[float] = None
                if result.has_selection:
                    selected = Solution(
                        routes=[
                            Route(seq=list(candidates[k].seq), length=candidates[k].length)
                            for k in result.selection
                        ]
                    )
                    improve_trace = ImproveTrace() if trace else None
                    best = improve(
                        selected,
                        inst.D,
                        params.d_rate_improve,
                        rng,
                        trace=improve_trace,
                        check_metric=check_metric,
                    )
                    post_improve_z = best.z
                    if improve_traces is not None:
                        improve_traces.append([[z, total] for _, z, total in improve_trace.points])
                    if best.z < incumbent.z - INCUMBENT_TOLERANCE:
                        best.validate_partition(n)
                        incumbent = best
                        time_to_best = time.perf_counter() - start
                        logger.info(
                            f"Iteration {iteration}: new incumbent z={incumbent.z:.5f} "
                            f"at {time_to_best:.2f}s"
                        )
                else:
                    logger.debug(f"Iteration {iteration}: subsolver {result.status.value}, Improve skipped")
                    best = incumbent
                    if improve_traces is not None:
                        improve_traces.append([])

                # Learn
                update(Q, cooccurrence(candidates, n), cooccurrence(best.routes, n), params.l_rate)
                proxy = convergence_proxy(Q) if n >= 2 else 0.0
                now = float(iteration) if iteration_capped else None
                reset = maybe_reset(monitor, proxy, Q, pool, now=now)

                # Adapt
                if not reset:
                    pool.adapt(best.routes, params.age_max, incumbent.z)

                records.append(
                    IterationRecord(
                        iteration=iteration,
                        pool_size=len(candidates),
                        subsolver_status=result.status.value,
                        subsolver_objective=result.objective,
                        post_improve_z=post_improve_z,
                        incumbent_z=incumbent.z,
                        proxy=proxy,
                        reset=reset,
                        elapsed_s=time.perf_counter() - start,
                    )
                )
                logger.debug(
                    f"Iteration {iteration}: pool={len(candidates)} status={result.status.value} "
                    f"z={incumbent.z:.5f} proxy={proxy:.5f}"
                )
                iteration += 1
        finally:
            if executor is not None:
                executor.shutdown()

        log = RunLog(
            instance=inst.name,
            n=n,
            m=m,
            seed=seed,
            params=params,
            time_limit_s=time_limit_s,
            max_iterations=max_iterations,
            iterations=records,
            best_value=incumbent.z,
            time_to_best_s=time_to_best,
            routes=incumbent.sequences(),
            improve_traces=improve_traces,
        )
        logger.info(
            f"Finished {inst.name}: best z={log.best_value:.5f} after {len(records)} iterations, "
            f"found at {log.time_to_best_s:.2f}s"
        )
        return incumbent, log
