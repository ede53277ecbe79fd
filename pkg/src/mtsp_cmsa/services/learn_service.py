"""
Learn phase: pairwise co-occurrence statistics, q-value updates and
stagnation-driven resets.
"""

import logging
import threading
import time
from collections import deque
from typing import Callable, Deque, Iterable, Optional, Tuple

import numpy as np

from mtsp_cmsa.exceptions import MtspError
from mtsp_cmsa.models.model_qmatrix import QMatrix
from mtsp_cmsa.models.model_route import Route
from mtsp_cmsa.services.pool_service import RoutePool

logger = logging.getLogger(__name__)


def cooccurrence(routes: Iterable[Route], n_cities: int) -> np.ndarray:
    """
    Number of routes containing both cities, for every city pair.

    Args:
        routes: Routes to count over
        n_cities: Number of non-depot cities

    Returns:
        Symmetric integer (n_cities+1) x (n_cities+1) array, zero diagonal
    """
    sigs = [r.signature for r in routes if not r.is_empty()]
    incidence = np.zeros((len(sigs), n_cities + 1), dtype=np.int64)
    for k, sig in enumerate(sigs):
        incidence[k, list(sig)] = 1
    counts = incidence.T @ incidence
    np.fill_diagonal(counts, 0)
    return counts


def update(Q: QMatrix, S_cand: np.ndarray, S_best: np.ndarray, l_rate: float) -> QMatrix:
    """
    Move q-values of pooled pairs toward 0 (in the best solution) or 1.

    Pairs that never share a pooled route are left untouched.

    Args:
        Q: q-values, updated in place
        S_cand: Pair counts over the pool
        S_best: Pair counts over the iteration's best solution
        l_rate: Learning rate in (0, 1)

    Returns:
        Q
    """
    if not 0.0 < l_rate < 1.0:
        raise MtspError(f"l_rate must lie in (0, 1), got {l_rate}", "INVALID_ARGUMENT")
    values = Q.values
    seen = S_cand > 0
    reinforce = seen & (S_best > 0)
    discourage = seen & ~(S_best > 0)
    values[reinforce] -= l_rate * values[reinforce]
    values[discourage] += l_rate * (1.0 - values[discourage])
    return Q


def convergence_proxy(Q: QMatrix) -> float:
    """
    Mean absolute deviation of the pair q-values from 0.5.

    Raises:
        MtspError: With fewer than two cities there is no pair
    """
    if Q.n_cities < 2:
        raise MtspError("convergence proxy needs at least two cities", "INVALID_ARGUMENT")
    return float(np.mean(np.abs(0.5 - Q.pair_values())))


class StagnationMonitor:
    """
    Sliding-window detector for a flat convergence proxy.

    Fires when the samples span at least a full window, number at least
    ``min_points``, and their spread (max - min) is below ``threshold``.
    One sample at or before the window start is kept as the anchor of the
    span. The history is cleared after firing. The clock is injectable:
    wall-clock seconds by default, the iteration index in iteration-capped
    runs.
    """

    def __init__(
        self,
        window: float = 10.0,
        min_points: int = 5,
        threshold: float = 1e-3,
        clock: Optional[Callable[[], float]] = None,
    ):
        """
        Initialize monitor.

        Args:
            window: Window length in clock units
            min_points: Samples required before the monitor may fire
            threshold: Spread below which the proxy counts as stagnant
            clock: Time source, defaults to time.monotonic
        """
        self.window = window
        self.min_points = min_points
        self.threshold = threshold
        self._clock = clock or time.monotonic
        self._history: Deque[Tuple[float, float]] = deque()
        self._lock = threading.Lock()

    def _clean_old_points(self, now: float) -> None:
        """Remove samples older than the window, keeping one anchor at or before its start."""
        cutoff = now - self.window
        while len(self._history) > 1 and self._history[1][0] <= cutoff:
            self._history.popleft()

    def record(self, proxy: float, now: Optional[float] = None) -> bool:
        """
        Add a proxy sample and check for stagnation.

        Args:
            proxy: Current proxy value
            now: Timestamp, defaults to the monitor's clock

        Returns:
            True if the proxy stagnated over the window
        """
        with self._lock:
            now = self._clock() if now is None else now
            self._history.append((now, proxy))
            self._clean_old_points(now)

            if len(self._history) < self.min_points:
                return False
            if now - self._history[0][0] < self.window:
                return False
            values = [p for _, p in self._history]
            if max(values) - min(values) < self.threshold:
                self._history.clear()
                return True
            return False

    def clear(self) -> None:
        with self._lock:
            self._history.clear()

    def __len__(self) -> int:
        return len(self._history)


def maybe_reset(
    monitor: StagnationMonitor,
    proxy: float,
    Q: QMatrix,
    pool: RoutePool,
    now: Optional[float] = None,
) -> bool:
    """
    Record the proxy and reset learning if it stagnated.

    On reset all q-values return to 0.5 and the pool is emptied.

    Args:
        monitor: Proxy history
        proxy: Current proxy value
        Q: q-values
        pool: Route pool
        now: Timestamp for the sample

    Returns:
        True if a reset happened
    """
    if not monitor.record(proxy, now):
        return False
    Q.reset()
    pool.clear()
    logger.info(f"Convergence proxy stagnated at {proxy:.6f}; q-values reset and pool cleared")
    return True
