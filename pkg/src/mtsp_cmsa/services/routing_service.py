"""
Route stage: greedy best insertion followed by 2-opt and Or-opt.

Tours are handled as integer arrays [0, c1, ..., ck, 0]; moves are evaluated
in bulk with numpy and one improving move is applied per scan. Picking a
uniformly random improving move is the same as taking the first improving
move of a random scan order.
"""

import logging
from functools import lru_cache
from typing import Iterable, List, Tuple

import numpy as np

from mtsp_cmsa.exceptions import ConstructionError
from mtsp_cmsa.models.model_route import Route

logger = logging.getLogger(__name__)

# Moves must gain more than this to count as improving
IMPROVEMENT_EPS = 1e-10


def build_route(cluster: Iterable[int], D: np.ndarray) -> Route:
    """
    Build a tour over a cluster by cheapest insertion.

    The tour starts as 0-u*-0 with u* the city farthest from the depot. Each
    step inserts the (city, edge) pair with minimum D[a,u] + D[u,b] - D[a,b];
    ties go to the smaller city index, then the earlier edge.

    Args:
        cluster: City indices, the depot may be included
        D: Distance matrix

    Returns:
        Route over exactly the cluster's cities

    Raises:
        ConstructionError: If the cluster holds no city
    """
    remaining = sorted({c for c in cluster if c != 0})
    if not remaining:
        raise ConstructionError("cannot route an empty cluster")

    depot_dist = D[0, remaining]
    first = remaining[int(np.argmax(depot_dist))]
    remaining.remove(first)
    tour = [0, first, 0]

    while remaining:
        t = np.asarray(tour)
        rem = np.asarray(remaining)
        left, right = t[:-1], t[1:]
        cost = D[np.ix_(rem, left)] + D[np.ix_(rem, right)] - D[left, right]
        # row-major argmin: smallest city index first, then earliest edge
        flat = int(np.argmin(cost))
        row, edge = divmod(flat, cost.shape[1])
        city = remaining.pop(row)
        tour.insert(edge + 1, city)

    seq = tour[1:-1]
    return Route.from_seq(seq, D)


@lru_cache(maxsize=512)
def _two_opt_pairs(tour_size: int) -> Tuple[np.ndarray, np.ndarray]:
    """Edge index pairs (i, j) with i + 2 <= j <= tour_size - 2."""
    i_idx, j_idx = [], []
    for i in range(tour_size - 3):
        for j in range(i + 2, tour_size - 1):
            i_idx.append(i)
            j_idx.append(j)
    i_arr = np.asarray(i_idx, dtype=np.intp)
    j_arr = np.asarray(j_idx, dtype=np.intp)
    i_arr.setflags(write=False)
    j_arr.setflags(write=False)
    return i_arr, j_arr


def two_opt_deltas(tour: np.ndarray, D: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Length change of every 2-opt move on a closed tour.

    Args:
        tour: Node array starting and ending at the depot
        D: Distance matrix

    Returns:
        (i, j, delta): the move reverses tour[i+1 .. j]
    """
    I, J = _two_opt_pairs(len(tour))
    if I.size == 0:
        return I, J, np.empty(0)
    a, b, c, d = tour[I], tour[I + 1], tour[J], tour[J + 1]
    delta = D[a, c] + D[b, d] - D[a, b] - D[c, d]
    return I, J, delta


def two_opt(route: Route, D: np.ndarray, rng: np.random.Generator) -> Route:
    """
    2-opt with first improvement over a random scan order.

    Args:
        route: Route to improve
        D: Distance matrix
        rng: Random stream

    Returns:
        Route with no improving 2-opt move left
    """
    tour = np.asarray(route.tour(), dtype=np.intp)
    changed = False
    while True:
        I, J, delta = two_opt_deltas(tour, D)
        improving = np.flatnonzero(delta < -IMPROVEMENT_EPS)
        if improving.size == 0:
            break
        k = improving[rng.integers(improving.size)]
        i, j = I[k], J[k]
        tour[i + 1:j + 1] = tour[i + 1:j + 1][::-1]
        changed = True

    if not changed:
        return route
    return Route.from_seq(tour[1:-1].tolist(), D, age=route.age)


def or_opt_moves(tour: np.ndarray, D: np.ndarray) -> List[Tuple[int, int, int, bool, float]]:
    """
    Every Or-opt move with its length change.

    A move removes the segment of ``length`` cities starting at tour position
    ``start`` and reinserts it after position ``edge`` of the remaining tour,
    optionally reversed.

    Args:
        tour: Node array starting and ending at the depot
        D: Distance matrix

    Returns:
        List of (start, length, edge, reversed, delta)
    """
    k = len(tour) - 2
    moves = []
    for length in (1, 2):
        if k <= length:
            continue
        for start in range(1, k - length + 2):
            end = start + length - 1
            prev, nxt = tour[start - 1], tour[end + 1]
            s0, s1 = tour[start], tour[end]
            gain = D[prev, s0] + D[s1, nxt] - D[prev, nxt]

            rest = np.concatenate((tour[:start], tour[end + 1:]))
            left, right = rest[:-1], rest[1:]
            base = D[left, right]
            forward = D[left, s0] + D[s1, right] - base - gain
            backward = D[left, s1] + D[s0, right] - base - gain

            origin = start - 1
            for edge in range(len(left)):
                if edge != origin:
                    moves.append((start, length, edge, False, float(forward[edge])))
                if length > 1 or edge != origin:
                    moves.append((start, length, edge, True, float(backward[edge])))
    return moves


def or_opt(route: Route, D: np.ndarray, rng: np.random.Generator) -> Route:
    """
    Or-opt over segments of length 1 and 2, both orientations.

    Args:
        route: Route to improve
        D: Distance matrix
        rng: Random stream

    Returns:
        Route with no improving Or-opt move left
    """
    tour = np.asarray(route.tour(), dtype=np.intp)
    changed = False
    while True:
        improving = [mv for mv in or_opt_moves(tour, D) if mv[4] < -IMPROVEMENT_EPS]
        if not improving:
            break
        start, length, edge, reverse, _ = improving[rng.integers(len(improving))]
        segment = tour[start:start + length]
        if reverse:
            segment = segment[::-1]
        rest = np.concatenate((tour[:start], tour[start + length:]))
        tour = np.concatenate((rest[:edge + 1], segment, rest[edge + 1:]))
        changed = True

    if not changed:
        return route
    return Route.from_seq(tour[1:-1].tolist(), D, age=route.age)


def improve_route(route: Route, D: np.ndarray, rng: np.random.Generator) -> Route:
    """2-opt then Or-opt, repeated until Or-opt finds nothing."""
    while True:
        route = two_opt(route, D, rng)
        improved = or_opt(route, D, rng)
        if improved is route:
            return route
        route = improved
