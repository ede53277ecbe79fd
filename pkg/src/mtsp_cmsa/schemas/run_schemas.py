from typing import List, Optional

from pydantic import BaseModel, Field

from mtsp_cmsa.config.solver_params import SolverParams


class IterationRecord(BaseModel):
    """One engine iteration."""
    iteration: int = Field(..., ge=0, description="Iteration index, starting at 0")
    pool_size: int = Field(..., ge=0, description="Pool size handed to the subsolver")
    subsolver_status: str = Field(..., description="OPTIMAL, INFEASIBLE or TIMED_OUT")
    subsolver_objective: Optional[float] = Field(
        None, description="Longest selected route, None without a selection"
    )
    post_improve_z: Optional[float] = Field(
        None, description="z after Improve, None when Improve was skipped"
    )
    incumbent_z: float = Field(..., description="Incumbent objective after this iteration")
    proxy: float = Field(..., description="Convergence proxy after the Learn update")
    reset: bool = Field(False, description="Whether learning was reset")
    elapsed_s: float = Field(..., ge=0, description="Seconds since the run started")


class RunLog(BaseModel):
    """Full log of one engine run."""
    instance: str = Field(..., description="Instance identifier")
    n: int = Field(..., description="Number of cities")
    m: int = Field(..., description="Number of salesmen")
    seed: int = Field(..., description="Master seed")
    params: SolverParams
    time_limit_s: float
    max_iterations: Optional[int] = None
    iterations: List[IterationRecord] = Field(default_factory=list)
    best_value: float = Field(..., description="Best z found")
    time_to_best_s: float = Field(..., ge=0, description="Seconds until the best z was found")
    routes: List[List[int]] = Field(default_factory=list, description="Best solution routes")
    improve_traces: Optional[List[List[List[float]]]] = Field(
        None, description="Per iteration, (z, total) after each accepted shift/swap, when traced"
    )

    def incumbent_values(self) -> List[float]:
        return [record.incumbent_z for record in self.iterations]


class RunRecord(BaseModel):
    """Serialized result of one solve."""
    instance: str = Field(..., description="Instance path or identifier")
    n: int
    m: int
    seed: int
    time_limit_s: float
    best_value: float
    time_to_best_s: float
    iterations: int = Field(..., ge=0, description="Completed iterations")
    routes: List[List[int]]
    trace: Optional[List[IterationRecord]] = None

    model_config = {
        "json_schema_extra": {
            "example": {
                "instance": "eil51.tsp",
                "n": 51,
                "m": 3,
                "seed": 0,
                "time_limit_s": 51.0,
                "best_value": 159.57151,
                "time_to_best_s": 12.4,
                "iterations": 812,
                "routes": [[1, 22, 8], [2, 16, 50], [3, 17]],
            }
        }
    }

    @classmethod
    def from_run_log(cls, log: RunLog, instance: str, trace: bool = False) -> "RunRecord":
        return cls(
            instance=instance,
            n=log.n,
            m=log.m,
            seed=log.seed,
            time_limit_s=log.time_limit_s,
            best_value=log.best_value,
            time_to_best_s=log.time_to_best_s,
            iterations=len(log.iterations),
            routes=log.routes,
            trace=list(log.iterations) if trace else None,
        )


class BenchSummaryRow(BaseModel):
    """Aggregate over the runs of one (instance, m) cell."""
    instance: str
    m: int
    runs: int
    mean: float
    best: float
    num_best: int
    mean_time_to_best_s: float
