"""
Improve phase: duplicate removal and cross-route shift/swap passes.

Admissibility of an inter-route move: the longest route after the move must
not exceed the current z, and either the total length drops (gain > 0) or z
itself drops strictly. Every accepted move therefore decreases (z, total)
lexicographically and each pass terminates.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from mtsp_cmsa.exceptions import InvariantViolationError, SubsolverContractError
from mtsp_cmsa.models.model_instance import tour_length
from mtsp_cmsa.models.model_route import Route, Solution
from mtsp_cmsa.utilities.selection_utils import exp_weights, roulette_index

logger = logging.getLogger(__name__)

GAIN_EPS = 1e-10
CHECK_TOLERANCE = 1e-9

SHIFT = "shift"
SWAP = "swap"


@dataclass
class ImproveTrace:
    """(move kind, z, total) after every accepted inter-route move."""
    points: List[Tuple[str, float, float]] = field(default_factory=list)

    def record(self, kind: str, lengths: Sequence[float]) -> None:
        self.points.append((kind, max(lengths), float(sum(lengths))))


@dataclass
class _MoveTable:
    """Gains and resulting lengths of every move between two routes."""
    delta: np.ndarray
    new_first: np.ndarray
    new_second: np.ndarray


def remove_duplicates(
    sol: Solution,
    D: np.ndarray,
    d_rate_improve: float,
    rng: np.random.Generator,
    check_metric: bool = True,
) -> Solution:
    """
    Turn overlapping routes into a partition of the cities.

    Each duplicated occurrence u between a and b offers a removal gain
    D[a,u] + D[u,b] - D[a,b], scaled by its route's current length. With
    probability d_rate_improve the highest score is removed, otherwise one is
    drawn proportionally to the scores. Repeats until no city is duplicated.

    Args:
        sol: Routes covering every city at least once
        D: Distance matrix
        d_rate_improve: Probability of the greedy choice
        rng: Random stream
        check_metric: Assert non-negative removal gains (triangle inequality)

    Returns:
        Feasible solution

    Raises:
        SubsolverContractError: If some city is not covered at all
        InvariantViolationError: If a removal would lengthen a route
    """
    n_cities = D.shape[0] - 1
    seqs = [list(r.seq) for r in sol.routes]
    lengths = [r.length for r in sol.routes]

    counts = Counter(c for seq in seqs for c in seq)
    missing = [c for c in range(1, n_cities + 1) if counts[c] == 0]
    if missing:
        raise SubsolverContractError(missing)

    removals = 0
    while True:
        duplicated = {c for c, k in counts.items() if k > 1}
        if not duplicated:
            break

        candidates = []
        scores = []
        for r, seq in enumerate(seqs):
            for pos, u in enumerate(seq):
                if u not in duplicated:
                    continue
                a = seq[pos - 1] if pos > 0 else 0
                b = seq[pos + 1] if pos + 1 < len(seq) else 0
                gain = D[a, u] + D[u, b] - D[a, b]
                if check_metric and gain < -CHECK_TOLERANCE:
                    raise InvariantViolationError(
                        f"removing city {u} from route {r} would lengthen it by {-gain}"
                    )
                candidates.append((r, pos, u, gain))
                scores.append(max(gain, 0.0) * lengths[r])

        if rng.random() < d_rate_improve:
            pick = int(np.argmax(scores))
        else:
            pick = roulette_index(scores, rng)

        r, pos, u, gain = candidates[pick]
        del seqs[r][pos]
        lengths[r] -= gain
        counts[u] -= 1
        removals += 1

    if removals:
        logger.debug(f"Removed {removals} duplicated city visits")
    return Solution.from_sequences(seqs, D)


class _PassState:
    """Mutable tours and lengths plus cached move tables per route pair."""

    def __init__(self, sol: Solution, D: np.ndarray, kind: str):
        self.D = D
        self.kind = kind
        self.tours = [np.asarray(r.tour(), dtype=np.intp) for r in sol.routes]
        self.lengths = [r.length for r in sol.routes]
        self.tables: Dict[Tuple[int, int], Optional[_MoveTable]] = {}

    @property
    def m(self) -> int:
        return len(self.tours)

    def z(self) -> float:
        return max(self.lengths)

    def longest(self) -> int:
        return int(np.argmax(self.lengths))

    def pairs(self, restrict_to_longest: bool) -> List[Tuple[int, int]]:
        if self.kind == SHIFT:
            pairs = [(s, t) for s in range(self.m) for t in range(self.m) if s != t]
        else:
            pairs = [(s, t) for s in range(self.m) for t in range(s + 1, self.m)]
        if restrict_to_longest:
            lng = self.longest()
            pairs = [p for p in pairs if lng in p]
        return pairs

    def table(self, pair: Tuple[int, int]) -> Optional[_MoveTable]:
        if pair not in self.tables:
            self.tables[pair] = self.compute_table(pair)
        return self.tables[pair]

    def compute_table(self, pair: Tuple[int, int]) -> Optional[_MoveTable]:
        s, t = pair
        if self.kind == SHIFT:
            return shift_table(self.tours[s], self.tours[t], self.lengths[s], self.lengths[t], self.D)
        return swap_table(self.tours[s], self.tours[t], self.lengths[s], self.lengths[t], self.D)

    def invalidate(self, touched: Sequence[int]) -> None:
        for pair in [p for p in self.tables if p[0] in touched or p[1] in touched]:
            del self.tables[pair]

    def other_max(self, pair: Tuple[int, int]) -> float:
        return max(
            (length for k, length in enumerate(self.lengths) if k not in pair),
            default=0.0,
        )

    def apply(self, pair: Tuple[int, int], flat_index: int) -> None:
        s, t = pair
        table = self.tables[pair]
        i, j = np.unravel_index(flat_index, table.delta.shape)
        src, tgt = self.tours[s], self.tours[t]
        if self.kind == SHIFT:
            u = src[i + 1]
            self.tours[s] = np.delete(src, i + 1)
            self.tours[t] = np.insert(tgt, j + 1, u)
        else:
            src, tgt = src.copy(), tgt.copy()
            src[i + 1], tgt[j + 1] = tgt[j + 1], src[i + 1]
            self.tours[s], self.tours[t] = src, tgt
        for k in (s, t):
            self.lengths[k] = tour_length(self.tours[k][1:-1], self.D)
        self.invalidate(pair)

    def verify(self) -> None:
        """Compare cached tables and lengths with a full recomputation."""
        for k, tour in enumerate(self.tours):
            fresh = tour_length(tour[1:-1], self.D)
            if abs(fresh - self.lengths[k]) > CHECK_TOLERANCE:
                raise InvariantViolationError(
                    f"route {k} cached length {self.lengths[k]} != {fresh}"
                )
        for pair, table in self.tables.items():
            fresh = self.compute_table(pair)
            if (table is None) != (fresh is None):
                raise InvariantViolationError(f"stale move table for routes {pair}")
            if table is not None and not np.allclose(
                table.delta, fresh.delta, rtol=0.0, atol=CHECK_TOLERANCE
            ):
                raise InvariantViolationError(f"stale move table for routes {pair}")

    def to_solution(self) -> Solution:
        return Solution(
            routes=[
                Route(seq=tour[1:-1].tolist(), length=length)
                for tour, length in zip(self.tours, self.lengths)
            ]
        )


def shift_table(
    src: np.ndarray, tgt: np.ndarray, len_src: float, len_tgt: float, D: np.ndarray
) -> Optional[_MoveTable]:
    """
    Relocation moves from one route into another.

    Entry [i, j] moves the (i+1)-th tour node of src onto edge j of tgt.

    Args:
        src: Source tour with depots
        tgt: Target tour with depots
        len_src: Source length
        len_tgt: Target length
        D: Distance matrix

    Returns:
        Move table, None if src has no city
    """
    if len(src) <= 2:
        return None
    u, a, b = src[1:-1], src[:-2], src[2:]
    removal_gain = D[a, u] + D[u, b] - D[a, b]
    c, d = tgt[:-1], tgt[1:]
    insertion_cost = D[u[:, None], c[None, :]] + D[u[:, None], d[None, :]] - D[c, d][None, :]
    delta = removal_gain[:, None] - insertion_cost
    new_src = np.broadcast_to((len_src - removal_gain)[:, None], delta.shape)
    new_tgt = len_tgt + insertion_cost
    return _MoveTable(delta=delta, new_first=new_src, new_second=new_tgt)


def swap_table(
    src: np.ndarray, tgt: np.ndarray, len_src: float, len_tgt: float, D: np.ndarray
) -> Optional[_MoveTable]:
    """
    1-1 exchange moves between two routes.

    Entry [i, j] exchanges the (i+1)-th node of src with the (j+1)-th of tgt.

    Args:
        src: First tour with depots
        tgt: Second tour with depots
        len_src: First length
        len_tgt: Second length
        D: Distance matrix

    Returns:
        Move table, None if either route has no city
    """
    if len(src) <= 2 or len(tgt) <= 2:
        return None
    u, a, b = src[1:-1], src[:-2], src[2:]
    v, c, d = tgt[1:-1], tgt[:-2], tgt[2:]
    src_old = D[a, u] + D[u, b]
    src_new = D[a[:, None], v[None, :]] + D[v[None, :], b[:, None]]
    tgt_old = D[c, v] + D[v, d]
    tgt_new = D[c[None, :], u[:, None]] + D[u[:, None], d[None, :]]
    delta_src = src_old[:, None] - src_new
    delta_tgt = tgt_old[None, :] - tgt_new
    return _MoveTable(
        delta=delta_src + delta_tgt,
        new_first=len_src - delta_src,
        new_second=len_tgt - delta_tgt,
    )


def _admissible(table: _MoveTable, z: float, other_max: float) -> np.ndarray:
    new_max = np.maximum(np.maximum(table.new_first, table.new_second), other_max)
    return (new_max <= z) & ((table.delta > GAIN_EPS) | (new_max < z - GAIN_EPS))


def _run_pass(
    kind: str,
    sol: Solution,
    D: np.ndarray,
    d_rate_improve: float,
    rng: np.random.Generator,
    restrict_to_longest: bool,
    trace: Optional[ImproveTrace],
    check_incremental: bool,
) -> Solution:
    if sol.m < 2:
        return sol

    state = _PassState(sol, D, kind)
    moves = 0
    while True:
        z = state.z()
        pairs = state.pairs(restrict_to_longest)
        order = rng.permutation(len(pairs))

        found_pairs, found_index, found_delta = [], [], []
        for k in order:
            pair = pairs[k]
            table = state.table(pair)
            if table is None:
                continue
            ok = np.flatnonzero(_admissible(table, z, state.other_max(pair)))
            if ok.size:
                found_pairs.extend([pair] * ok.size)
                found_index.append(ok)
                found_delta.append(table.delta.ravel()[ok])

        if not found_index:
            break

        index = np.concatenate(found_index)
        delta = np.concatenate(found_delta)
        if rng.random() < d_rate_improve:
            pick = int(np.argmax(delta))
        else:
            pick = roulette_index(exp_weights(delta, z), rng)

        state.apply(found_pairs[pick], int(index[pick]))
        moves += 1
        if trace is not None:
            trace.record(kind, state.lengths)
        if check_incremental:
            state.verify()

    if moves:
        logger.debug(f"{kind} pass applied {moves} moves, z={state.z():.6f}")
        return state.to_solution()
    return sol


def shift_pass(
    sol: Solution,
    D: np.ndarray,
    d_rate_improve: float,
    rng: np.random.Generator,
    restrict_to_longest: bool = False,
    trace: Optional[ImproveTrace] = None,
    check_incremental: bool = False,
) -> Solution:
    """
    Relocate single cities across routes until no admissible move remains.

    With probability d_rate_improve the largest-gain admissible move is
    applied, otherwise one is drawn with probability proportional to
    exp(gain / z).

    Args:
        sol: Feasible solution
        D: Distance matrix
        d_rate_improve: Probability of the greedy choice
        rng: Random stream
        restrict_to_longest: Only consider moves touching the longest route
        trace: Optional recorder of accepted moves
        check_incremental: Verify cached move tables after every move

    Returns:
        Improved solution
    """
    return _run_pass(
        SHIFT, sol, D, d_rate_improve, rng, restrict_to_longest, trace, check_incremental
    )


def swap_pass(
    sol: Solution,
    D: np.ndarray,
    d_rate_improve: float,
    rng: np.random.Generator,
    restrict_to_longest: bool = False,
    trace: Optional[ImproveTrace] = None,
    check_incremental: bool = False,
) -> Solution:
    """
    Exchange pairs of cities across routes until no admissible swap remains.

    Args:
        sol: Feasible solution
        D: Distance matrix
        d_rate_improve: Probability of the greedy choice
        rng: Random stream
        restrict_to_longest: Only consider swaps touching the longest route
        trace: Optional recorder of accepted moves
        check_incremental: Verify cached move tables after every move

    Returns:
        Improved solution
    """
    return _run_pass(
        SWAP, sol, D, d_rate_improve, rng, restrict_to_longest, trace, check_incremental
    )


def improve(
    sol: Solution,
    D: np.ndarray,
    d_rate_improve: float,
    rng: np.random.Generator,
    trace: Optional[ImproveTrace] = None,
    check_metric: bool = True,
    check_incremental: bool = False,
) -> Solution:
    """
    Remove duplicates, then alternate shift and swap passes until a swap
    pass finds nothing to do right after a converged shift pass.

    Args:
        sol: Routes covering every city at least once
        D: Distance matrix
        d_rate_improve: Probability of the greedy choice
        rng: Random stream
        trace: Optional recorder of accepted moves
        check_metric: Assert non-negative removal gains
        check_incremental: Verify cached move tables after every move

    Returns:
        Feasible solution
    """
    sol = remove_duplicates(sol, D, d_rate_improve, rng, check_metric=check_metric)
    sol = shift_pass(sol, D, d_rate_improve, rng, trace=trace, check_incremental=check_incremental)
    while True:
        swapped = swap_pass(
            sol, D, d_rate_improve, rng, trace=trace, check_incremental=check_incremental
        )
        if swapped is sol:
            return sol
        sol = shift_pass(
            swapped, D, d_rate_improve, rng, trace=trace, check_incremental=check_incremental
        )
