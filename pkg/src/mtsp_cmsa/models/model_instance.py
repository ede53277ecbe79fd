"""
Problem instance: depot and city coordinates with precomputed geometry.
"""
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

TWO_PI = 2.0 * math.pi


class Instance(BaseModel):
    """
    Immutable single-depot instance.

    Node 0 is the depot, nodes 1..n_cities are cities. ``D`` holds exact
    Euclidean distances (or TSPLIB nearest-integer distances when built with
    ``round_distances=True``), ``theta`` the angle of each node around the
    depot in [0, 2*pi).
    """
    name: str = Field(default="instance", description="Instance identifier")
    coords: np.ndarray = Field(..., description="(n_cities+1) x 2 coordinates")
    D: np.ndarray = Field(..., description="Symmetric distance matrix")
    theta: np.ndarray = Field(..., description="Depot-relative angles, theta[0] unused")
    rounded: bool = Field(default=False, description="TSPLIB integer rounding applied")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @classmethod
    def from_coords(
        cls,
        coords: Sequence[Tuple[float, float]],
        name: str = "instance",
        round_distances: bool = False,
    ) -> "Instance":
        """
        Build an instance and its geometry from raw coordinates.

        Args:
            coords: (x, y) pairs, index 0 is the depot
            name: Instance identifier
            round_distances: Apply TSPLIB nint() rounding to distances

        Returns:
            Instance with read-only arrays
        """
        xy = np.asarray(coords, dtype=float).reshape(-1, 2)
        diff = xy[:, None, :] - xy[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        if round_distances:
            dist = np.floor(dist + 0.5)

        rel = xy - xy[0]
        theta = np.mod(np.arctan2(rel[:, 1], rel[:, 0]), TWO_PI)
        # mod of a tiny negative angle rounds up to exactly 2*pi
        theta[theta >= TWO_PI] = 0.0
        theta[0] = 0.0

        for arr in (xy, dist, theta):
            arr.setflags(write=False)
        return cls(name=name, coords=xy, D=dist, theta=theta, rounded=round_distances)

    @property
    def n_cities(self) -> int:
        return self.coords.shape[0] - 1

    @property
    def cities(self) -> range:
        return range(1, self.n_cities + 1)

    @property
    def depot(self) -> Tuple[float, float]:
        return float(self.coords[0, 0]), float(self.coords[0, 1])

    def city_coords(self) -> List[List[float]]:
        return self.coords[1:].tolist()

    def star_lower_bound(self) -> float:
        """Lower bound on z: the farthest city needs its own out-and-back trip."""
        return float(2.0 * self.D[0, 1:].max())

    def tour_length(self, seq: Sequence[int], D: Optional[np.ndarray] = None) -> float:
        """
        Length of the closed tour depot -> seq -> depot.

        Args:
            seq: Non-depot city indices in visiting order
            D: Distance matrix override (defaults to the instance matrix)

        Returns:
            Tour length, 0.0 for an empty sequence
        """
        return tour_length(seq, self.D if D is None else D)


def tour_length(seq: Sequence[int], D: np.ndarray) -> float:
    """Length of the closed tour 0 -> seq -> 0 under D."""
    if len(seq) == 0:
        return 0.0
    tour = np.concatenate(([0], np.asarray(seq, dtype=np.intp), [0]))
    return float(D[tour[:-1], tour[1:]].sum())


def angdist(a: float, b: float) -> float:
    """
    Angular distance between two angles.

    Args:
        a: Angle in radians
        b: Angle in radians

    Returns:
        Smallest rotation between a and b, in [0, pi]

    Examples:
        >>> round(angdist(0.1, 2 * math.pi - 0.1), 12)
        0.2
        >>> angdist(0.0, math.pi)
        3.141592653589793
    """
    diff = math.fmod(abs(a - b), TWO_PI)
    return min(diff, TWO_PI - diff)
