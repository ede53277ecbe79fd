"""
Pairwise q-values over non-depot cities.
"""
from typing import Optional

import numpy as np

INITIAL_Q = 0.5


class QMatrix:
    """
    Symmetric q-values in [0, 1].

    Stored as an (n_cities+1) x (n_cities+1) array so city indices address it
    directly; row and column 0 (the depot) and the diagonal are unused.
    """

    def __init__(self, n_cities: int, values: Optional[np.ndarray] = None):
        """
        Initialize q-values.

        Args:
            n_cities: Number of non-depot cities
            values: Optional initial matrix (copied)
        """
        self.n_cities = n_cities
        if values is None:
            self.values = np.full((n_cities + 1, n_cities + 1), INITIAL_Q)
        else:
            if values.shape != (n_cities + 1, n_cities + 1):
                raise ValueError(f"q-value matrix must be {n_cities + 1}x{n_cities + 1}")
            self.values = np.array(values, dtype=float)

    def reset(self) -> None:
        """Set every q-value back to 0.5."""
        self.values.fill(INITIAL_Q)

    def snapshot(self) -> "QMatrix":
        """Independent copy for concurrent readers."""
        return QMatrix(self.n_cities, self.values)

    def pair_values(self) -> np.ndarray:
        """q-values of all unordered city pairs i < j."""
        iu = np.triu_indices(self.n_cities, k=1)
        return self.values[1:, 1:][iu]

    def __getitem__(self, key):
        return self.values[key]
