"""
Exact solver for the restricted set-covering min-max selection.

Model: choose exactly m pooled routes covering every city at least once and
minimize the longest chosen route, which must stay below the incumbent.

Default method: binary search over candidate thresholds (route lengths), each
tested with a set-cover feasibility branch-and-bound over city bitmasks
(branching on the city with the fewest covering routes, memoized
infeasibility cuts, coverage bound). Among optimal selections the one with
the smallest total length wins, then the lexicographically smallest index
set.
"""

import itertools
import logging
import math
import time
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Set, Tuple

from mtsp_cmsa.exceptions import SubsolverError
from mtsp_cmsa.models.model_route import Route, Signature

logger = logging.getLogger(__name__)

BRUTE_FORCE_MAX_ROUTES = 20


class SubsolverStatus(str, Enum):
    """Outcome of a restricted solve."""
    OPTIMAL = "OPTIMAL"
    INFEASIBLE = "INFEASIBLE"
    TIMED_OUT = "TIMED_OUT"


@dataclass
class RestrictedProblem:
    """Pool snapshot for one Solve call."""
    routes: List[Tuple[Signature, float]]
    m: int
    n_cities: int
    upper_bound: float = math.inf

    @classmethod
    def from_routes(
        cls, routes: Sequence[Route], m: int, n_cities: int, upper_bound: float = math.inf
    ) -> "RestrictedProblem":
        return cls(
            routes=[(r.signature, r.length) for r in routes],
            m=m,
            n_cities=n_cities,
            upper_bound=upper_bound,
        )


@dataclass
class SubsolverResult:
    """Selection of route indices (ascending) with its objective."""
    status: SubsolverStatus
    selection: Optional[Tuple[int, ...]] = None
    objective: Optional[float] = None
    total: Optional[float] = None
    nodes: int = 0

    @property
    def has_selection(self) -> bool:
        return self.selection is not None


class _Timeout(Exception):
    pass


@dataclass
class _Search:
    """Shared data for one solve: bitmasks, lengths and a deadline."""
    masks: List[int]
    lengths: List[float]
    m: int
    full: int
    deadline: float
    nodes: int = 0

    def tick(self) -> None:
        self.nodes += 1
        if time.perf_counter() > self.deadline:
            raise _Timeout()

    def covering(self, candidates: Sequence[int]) -> Dict[int, List[int]]:
        by_city: Dict[int, List[int]] = {}
        for r in candidates:
            mask = self.masks[r]
            while mask:
                low = mask & -mask
                by_city.setdefault(low.bit_length() - 1, []).append(r)
                mask ^= low
        return by_city

    @staticmethod
    def pick_city(uncovered: int, by_city: Dict[int, List[int]]) -> int:
        """Uncovered city with the fewest covering routes, ties by smaller index."""
        best_city, best_count = -1, math.inf
        mask = uncovered
        while mask:
            low = mask & -mask
            city = low.bit_length() - 1
            count = len(by_city.get(city, ()))
            if count < best_count:
                best_city, best_count = city, count
            mask ^= low
        return best_city

    def coverage_bound_fails(self, uncovered: int, slots: int, candidates: Sequence[int]) -> bool:
        """True if the `slots` widest candidates cannot cover what is left."""
        gains = sorted(((self.masks[r] & uncovered).bit_count() for r in candidates), reverse=True)
        return sum(gains[:slots]) < uncovered.bit_count()

    def find_cover(self, candidates: Sequence[int]) -> Optional[List[int]]:
        """Any cover with at most m routes from candidates, or None."""
        by_city = self.covering(candidates)
        failed: Set[Tuple[int, int]] = set()

        def dfs(uncovered: int, slots: int) -> Optional[List[int]]:
            if uncovered == 0:
                return []
            if slots == 0 or (uncovered, slots) in failed:
                return None
            self.tick()
            if self.coverage_bound_fails(uncovered, slots, candidates):
                failed.add((uncovered, slots))
                return None
            city = self.pick_city(uncovered, by_city)
            options = sorted(
                by_city.get(city, ()),
                key=lambda r: (-(self.masks[r] & uncovered).bit_count(), self.lengths[r], r),
            )
            for r in options:
                rest = dfs(uncovered & ~self.masks[r], slots - 1)
                if rest is not None:
                    return [r, *rest]
            failed.add((uncovered, slots))
            return None

        return dfs(self.full, self.m)

    def pad(self, chosen: Sequence[int], candidates_sorted: Sequence[int]) -> List[int]:
        """Fill up to m routes with the shortest unused candidates."""
        selection = list(chosen)
        taken = set(chosen)
        for r in candidates_sorted:
            if len(selection) >= self.m:
                break
            if r not in taken:
                selection.append(r)
                taken.add(r)
        return sorted(selection)

    def key(self, selection: Sequence[int]) -> Tuple[float, Tuple[int, ...]]:
        return math.fsum(sorted(self.lengths[r] for r in selection)), tuple(sorted(selection))

    def min_total_cover(
        self, candidates_sorted: Sequence[int], incumbent: List[int]
    ) -> List[int]:
        """
        Exactly-m selection from candidates with minimum total length.

        Args:
            candidates_sorted: Candidates ordered by (length, index)
            incumbent: A feasible selection to start from

        Returns:
            Best selection found (optimal unless the deadline interrupts)
        """
        by_city = self.covering(candidates_sorted)
        best = [self.key(incumbent), list(incumbent)]
        seen: Set[frozenset] = set()
        failed: Set[Tuple[int, int]] = set()

        def lower_bound(chosen_total: float, chosen: Set[int], slots: int) -> float:
            extra, added = 0.0, 0
            for r in candidates_sorted:
                if added == slots:
                    break
                if r not in chosen:
                    extra += self.lengths[r]
                    added += 1
            return chosen_total + extra

        def dfs(uncovered: int, chosen: List[int], chosen_total: float) -> None:
            if uncovered == 0:
                selection = self.pad(chosen, candidates_sorted)
                candidate_key = self.key(selection)
                if candidate_key < best[0]:
                    best[0], best[1] = candidate_key, selection
                return
            slots = self.m - len(chosen)
            if slots == 0 or (uncovered, slots) in failed:
                return
            frozen = frozenset(chosen)
            if frozen in seen:
                return
            seen.add(frozen)
            self.tick()

            if self.coverage_bound_fails(uncovered, slots, candidates_sorted):
                failed.add((uncovered, slots))
                return
            chosen_set = set(chosen)
            bound = lower_bound(chosen_total, chosen_set, slots)
            if bound > best[0][0] * (1.0 + 1e-12) + 1e-12:
                return

            city = self.pick_city(uncovered, by_city)
            for r in by_city.get(city, ()):
                if r in chosen_set:
                    continue
                dfs(uncovered & ~self.masks[r], [*chosen, r], chosen_total + self.lengths[r])

        try:
            dfs(self.full, [], 0.0)
        finally:
            incumbent[:] = best[1]
        return best[1]


class SubsolverService:
    """Exact restricted-problem solver with a per-call time cap."""

    def __init__(self, default_time_cap: float = 2.0):
        """
        Initialize subsolver.

        Args:
            default_time_cap: Seconds allowed per call when none is given
        """
        self.default_time_cap = default_time_cap

    @staticmethod
    def _masks(prob: RestrictedProblem) -> List[int]:
        masks = []
        for k, (sig, _) in enumerate(prob.routes):
            mask = 0
            for city in sig:
                if not 1 <= city <= prob.n_cities:
                    raise SubsolverError(f"route {k} visits unknown city {city}")
                mask |= 1 << (city - 1)
            masks.append(mask)
        return masks

    @staticmethod
    def _validate(prob: RestrictedProblem) -> None:
        if prob.m < 1:
            raise SubsolverError(f"m must be at least 1, got {prob.m}")
        if prob.n_cities < 1:
            raise SubsolverError("restricted problem without cities")

    def solve_restricted(
        self, prob: RestrictedProblem, time_cap: Optional[float] = None
    ) -> SubsolverResult:
        """
        Select exactly m routes covering all cities with minimum longest length.

        Args:
            prob: Restricted problem
            time_cap: Seconds allowed; defaults to the service cap

        Returns:
            OPTIMAL with the selection, INFEASIBLE, or TIMED_OUT carrying the
            best selection found so far (possibly none)
        """
        self._validate(prob)
        cap = self.default_time_cap if time_cap is None else time_cap
        masks = self._masks(prob)
        lengths = [float(length) for _, length in prob.routes]
        full = (1 << prob.n_cities) - 1

        eligible = [r for r in range(len(lengths)) if lengths[r] < prob.upper_bound]
        eligible.sort(key=lambda r: (lengths[r], r))
        union = 0
        for r in eligible:
            union |= masks[r]
        if len(eligible) < prob.m or union != full:
            return SubsolverResult(status=SubsolverStatus.INFEASIBLE)

        search = _Search(
            masks=masks,
            lengths=lengths,
            m=prob.m,
            full=full,
            deadline=time.perf_counter() + cap,
        )
        best: Optional[List[int]] = None
        try:
            # thresholds are positions in eligible; all routes of equal length join together
            def candidates_upto(pos: int) -> List[int]:
                limit = lengths[eligible[pos]]
                end = pos
                while end + 1 < len(eligible) and lengths[eligible[end + 1]] == limit:
                    end += 1
                return eligible[: end + 1]

            lo, hi = prob.m - 1, len(eligible) - 1
            top = candidates_upto(hi)
            cover = search.find_cover(top)
            if cover is None:
                return SubsolverResult(status=SubsolverStatus.INFEASIBLE, nodes=search.nodes)
            best = search.pad(cover, top)

            while lo < hi:
                mid = (lo + hi) // 2
                cands = candidates_upto(mid)
                cover = search.find_cover(cands)
                if cover is None:
                    lo = mid + 1
                else:
                    best = search.pad(cover, cands)
                    hi = mid

            optimum_cands = candidates_upto(lo)
            best = search.pad(best, optimum_cands) if len(best) < prob.m else best
            best = search.min_total_cover(optimum_cands, best)
        except _Timeout:
            logger.warning(f"Subsolver hit its {cap:.3f}s time cap after {search.nodes} nodes")
            return self._result(SubsolverStatus.TIMED_OUT, best, lengths, search.nodes)

        return self._result(SubsolverStatus.OPTIMAL, best, lengths, search.nodes)

    @staticmethod
    def _result(
        status: SubsolverStatus,
        selection: Optional[List[int]],
        lengths: List[float],
        nodes: int,
    ) -> SubsolverResult:
        if selection is None:
            return SubsolverResult(status=status, nodes=nodes)
        chosen = tuple(sorted(selection))
        return SubsolverResult(
            status=status,
            selection=chosen,
            objective=max(lengths[r] for r in chosen),
            total=math.fsum(sorted(lengths[r] for r in chosen)),
            nodes=nodes,
        )

    def brute_force_reference(self, prob: RestrictedProblem) -> SubsolverResult:
        """
        Exhaustive optimum over all m-subsets, for testing.

        Args:
            prob: Restricted problem with at most 20 routes

        Returns:
            OPTIMAL or INFEASIBLE

        Raises:
            SubsolverError: If the pool is too large to enumerate
        """
        self._validate(prob)
        if len(prob.routes) > BRUTE_FORCE_MAX_ROUTES:
            raise SubsolverError(
                f"brute force limited to {BRUTE_FORCE_MAX_ROUTES} routes, got {len(prob.routes)}"
            )
        masks = self._masks(prob)
        lengths = [float(length) for _, length in prob.routes]
        full = (1 << prob.n_cities) - 1

        best_key = None
        for combo in itertools.combinations(range(len(lengths)), prob.m):
            if any(lengths[r] >= prob.upper_bound for r in combo):
                continue
            union = 0
            for r in combo:
                union |= masks[r]
            if union != full:
                continue
            key = (
                max(lengths[r] for r in combo),
                math.fsum(sorted(lengths[r] for r in combo)),
                combo,
            )
            if best_key is None or key < best_key:
                best_key = key

        if best_key is None:
            return SubsolverResult(status=SubsolverStatus.INFEASIBLE)
        return self._result(SubsolverStatus.OPTIMAL, list(best_key[2]), lengths, 0)

    @staticmethod
    def export_lp(prob: RestrictedProblem) -> str:
        """
        The restricted problem as a MILP in CPLEX LP format.

        Big-M is the longest pooled route length. One constraint per line.

        Args:
            prob: Restricted problem

        Returns:
            LP file content
        """
        lengths = [float(length) for _, length in prob.routes]
        big_m = max(lengths, default=0.0)
        lines = [
            "\\ restricted set-covering min-max route selection",
            "Minimize",
            " obj: z",
            "Subject To",
        ]
        for r, length in enumerate(lengths):
            # z >= l_r - M (1 - x_r)
            lines.append(f" len_{r}: z - {big_m!r} x_{r} >= {length - big_m!r}")
        if lengths:
            lines.append(
                " card: " + " + ".join(f"x_{r}" for r in range(len(lengths))) + f" = {prob.m}"
            )
        for city in range(1, prob.n_cities + 1):
            covering = [f"x_{r}" for r, (sig, _) in enumerate(prob.routes) if city in sig]
            if covering:
                lines.append(f" cover_{city}: " + " + ".join(covering) + " >= 1")
            else:
                lines.append(f" cover_{city}: 0 x_0 >= 1" if lengths else f" cover_{city}: 0 z >= 1")
        lines.append("Bounds")
        if math.isfinite(prob.upper_bound):
            lines.append(f" 0 <= z <= {float(prob.upper_bound)!r}")
        else:
            lines.append(" z >= 0")
        if lengths:
            lines.append("Binary")
            lines.extend(f" x_{r}" for r in range(len(lengths)))
        lines.append("End")
        return "\n".join(lines) + "\n"
