from typing import Annotated, List, Optional, Tuple

from pydantic import BaseModel, Field, Strict, field_validator

Coordinate = Annotated[float, Strict(), Field(allow_inf_nan=False)]
Point = Tuple[Coordinate, Coordinate]


class InstanceDocument(BaseModel):
    """Native JSON instance format."""
    name: Optional[str] = Field(None, description="Optional instance identifier")
    depot: Point = Field(..., description="Depot coordinates [x, y]")
    cities: List[Point] = Field(..., description="City coordinates [[x, y], ...]")

    @field_validator("cities")
    @classmethod
    def validate_cities(cls, v: List[Point]) -> List[Point]:
        """Reject instances without cities."""
        if not v:
            raise ValueError("zero cities")
        return v

    model_config = {
        "json_schema_extra": {
            "example": {
                "depot": [0.0, 0.0],
                "cities": [[1.0, 0.0], [0.0, 1.0]],
            }
        }
    }
