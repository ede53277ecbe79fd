"""
Route pool (sub-instance) with signature deduplication, pruning and ageing.
"""

import logging
import math
from typing import Dict, Iterable, Iterator, List

from mtsp_cmsa.models.model_route import Route, Signature

logger = logging.getLogger(__name__)


class RoutePool:
    """
    Candidate routes keyed by canonical signature.

    At most one route per visited-city set is kept, the shortest one seen.
    Single writer: the engine serializes merge/adapt calls.
    """

    def __init__(self):
        self._entries: Dict[Signature, Route] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[Route]:
        return iter(self._entries.values())

    def __contains__(self, sig: Signature) -> bool:
        return sig in self._entries

    def get(self, sig: Signature) -> Route:
        return self._entries[sig]

    def routes(self) -> List[Route]:
        """Pooled routes in insertion order."""
        return list(self._entries.values())

    def clear(self) -> None:
        self._entries.clear()

    def _insert(self, route: Route) -> bool:
        """Insert with age 0 unless an equal-or-shorter route holds the signature."""
        if route.is_empty():
            return False
        existing = self._entries.get(route.signature)
        if existing is not None and existing.length <= route.length:
            return False
        self._entries[route.signature] = Route(seq=list(route.seq), length=route.length, age=0)
        return True

    def prune(self, incumbent_z: float) -> int:
        """
        Drop routes that cannot appear in a selection better than the incumbent.

        Args:
            incumbent_z: Current incumbent objective

        Returns:
            Number of routes removed
        """
        doomed = [sig for sig, r in self._entries.items() if r.length >= incumbent_z]
        for sig in doomed:
            del self._entries[sig]
        return len(doomed)

    def merge(self, new_routes: Iterable[Route], incumbent_z: float = math.inf) -> "RoutePool":
        """
        Add constructed routes, then prune by the incumbent.

        Args:
            new_routes: Routes from the Construct phase
            incumbent_z: Current incumbent objective

        Returns:
            self
        """
        inserted = sum(self._insert(route) for route in new_routes)
        pruned = self.prune(incumbent_z)
        logger.debug(f"Merge: {inserted} routes inserted, {pruned} pruned, pool size {len(self)}")
        return self

    def adapt(
        self,
        best_routes: Iterable[Route],
        age_max: int,
        incumbent_z: float = math.inf,
    ) -> "RoutePool":
        """
        Age-based update around the best solution of the iteration.

        Routes of the best solution are inserted (or reset) with age 0, every
        other route ages by one and routes reaching age_max are evicted.

        Args:
            best_routes: Routes of the iteration's best solution
            age_max: Eviction age
            incumbent_z: Current incumbent objective

        Returns:
            self
        """
        best = [r for r in best_routes if not r.is_empty()]
        best_sigs = {r.signature for r in best}

        for sig, route in self._entries.items():
            if sig not in best_sigs:
                route.age += 1
        for route in best:
            if not self._insert(route):
                self._entries[route.signature].age = 0

        expired = [sig for sig, r in self._entries.items() if r.age >= age_max]
        for sig in expired:
            del self._entries[sig]
        pruned = self.prune(incumbent_z)
        logger.debug(
            f"Adapt: {len(expired)} expired, {pruned} pruned, pool size {len(self)}"
        )
        return self
