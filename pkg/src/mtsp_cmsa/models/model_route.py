"""
Routes and solutions.
"""
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from mtsp_cmsa.exceptions import InfeasibleSolutionError
from mtsp_cmsa.models.model_instance import tour_length

Signature = Tuple[int, ...]


def signature(seq: Iterable[int]) -> Signature:
    """
    Canonical signature of a route: its cities in ascending order.

    Args:
        seq: Non-depot city indices in any order

    Returns:
        Sorted, deduplicated city tuple

    Examples:
        >>> signature([3, 1, 2])
        (1, 2, 3)
    """
    return tuple(sorted(set(seq)))


@dataclass(slots=True)
class Route:
    """
    Closed tour from the depot through ``seq`` and back.

    The depot is implicit at both ends of ``seq``.
    """
    seq: List[int]
    length: float
    age: int = 0
    signature: Signature = field(init=False)

    def __post_init__(self):
        self.seq = list(self.seq)
        self.signature = signature(self.seq)

    @classmethod
    def from_seq(cls, seq: Sequence[int], D: np.ndarray, age: int = 0) -> "Route":
        return cls(seq=list(seq), length=tour_length(seq, D), age=age)

    def tour(self) -> List[int]:
        return [0, *self.seq, 0]

    def is_empty(self) -> bool:
        return not self.seq

    def __len__(self) -> int:
        return len(self.seq)


@dataclass(slots=True)
class Solution:
    """A set of m routes. z is the longest route length."""
    routes: List[Route]

    @property
    def m(self) -> int:
        return len(self.routes)

    @property
    def z(self) -> float:
        return max((r.length for r in self.routes), default=0.0)

    @property
    def total(self) -> float:
        return float(sum(r.length for r in self.routes))

    def sequences(self) -> List[List[int]]:
        return [list(r.seq) for r in self.routes]

    def validate_partition(self, n_cities: int) -> None:
        """
        Check that every city appears in exactly one route.

        Args:
            n_cities: Number of non-depot cities

        Raises:
            InfeasibleSolutionError: Listing missing and duplicated cities
        """
        counts = Counter(c for r in self.routes for c in r.seq)
        missing = [c for c in range(1, n_cities + 1) if counts[c] == 0]
        duplicated = [c for c, k in counts.items() if k > 1]
        foreign = [c for c in counts if not 1 <= c <= n_cities]
        if missing or duplicated or foreign:
            raise InfeasibleSolutionError(
                missing=missing,
                duplicated=duplicated + foreign,
            )

    @classmethod
    def from_sequences(cls, sequences: Iterable[Sequence[int]], D: np.ndarray) -> "Solution":
        return cls(routes=[Route.from_seq(seq, D) for seq in sequences])
