"""
Tuned solver parameters and their defaults per m/n bucket.
"""
import json
from pathlib import Path
from typing import Dict, Union

from pydantic import BaseModel, Field, ValidationError

from mtsp_cmsa.exceptions import ParamsError


class SolverParams(BaseModel):
    """Parameters of one solver run."""
    n_solutions: int = Field(..., ge=1, description="Constructions per iteration")
    d_rate_construct: float = Field(
        ..., ge=0.0, le=1.0, description="Probability of the greedy choice in Construct"
    )
    d_rate_improve: float = Field(
        ..., ge=0.0, le=1.0, description="Probability of the greedy choice in Improve"
    )
    l_rate: float = Field(..., gt=0.0, lt=1.0, description="Q-value learning rate")
    age_max: int = Field(..., ge=1, description="Pool eviction age")
    epsilon: float = Field(default=1e-9, gt=0.0, description="Score stabilizer")

    model_config = {
        "frozen": True,
        "json_schema_extra": {
            "example": {
                "n_solutions": 17,
                "d_rate_construct": 0.83,
                "d_rate_improve": 0.97,
                "l_rate": 0.26,
                "age_max": 13,
                "epsilon": 1e-9,
            }
        },
    }

    @classmethod
    def for_instance(cls, n_cities: int, m: int) -> "SolverParams":
        """
        Pick the tuned parameter row for the m/n ratio.

        The nearest bucket among 1%, 5%, 10% and 15% wins; ties go to the
        smaller bucket.

        Args:
            n_cities: Number of non-depot cities
            m: Number of salesmen

        Returns:
            SolverParams for the bucket
        """
        ratio = m / max(n_cities, 1)
        bucket = min(TUNED_PARAMETERS, key=lambda b: (abs(b - ratio), b))
        return TUNED_PARAMETERS[bucket]

    @classmethod
    def from_json_file(
        cls, path: Union[str, Path], n_cities: int, m: int
    ) -> "SolverParams":
        """
        Load parameters from a JSON file.

        Keys missing from the file fall back to the bucket defaults.

        Args:
            path: Params file path
            n_cities: Number of non-depot cities (for the fallback row)
            m: Number of salesmen (for the fallback row)

        Returns:
            SolverParams instance

        Raises:
            ParamsError: If the file is unreadable or a value is out of range
        """
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ParamsError(f"Cannot read params file {path}: {e}")
        if not isinstance(data, dict):
            raise ParamsError(f"Params file {path} must hold a JSON object")

        unknown = set(data) - set(cls.model_fields)
        if unknown:
            raise ParamsError(f"Unknown parameters in {path}: {sorted(unknown)}")

        merged = cls.for_instance(n_cities, m).model_dump()
        merged.update(data)
        try:
            return cls(**merged)
        except ValidationError as e:
            raise ParamsError(f"Invalid parameters in {path}: {e}")


# Tuned rows keyed by m/n ratio
TUNED_PARAMETERS: Dict[float, SolverParams] = {
    0.01: SolverParams(
        n_solutions=19, d_rate_construct=0.87, d_rate_improve=0.96, l_rate=0.31, age_max=12
    ),
    0.05: SolverParams(
        n_solutions=17, d_rate_construct=0.83, d_rate_improve=0.97, l_rate=0.26, age_max=13
    ),
    0.10: SolverParams(
        n_solutions=13, d_rate_construct=0.66, d_rate_improve=0.98, l_rate=0.45, age_max=2
    ),
    0.15: SolverParams(
        n_solutions=17, d_rate_construct=0.86, d_rate_improve=0.93, l_rate=0.20, age_max=15
    ),
}
