"""
Construct phase: q-value biased clustering followed by per-cluster routing.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from mtsp_cmsa.config.solver_params import SolverParams
from mtsp_cmsa.exceptions import ConstructionError, InvalidSalesmenCountError
from mtsp_cmsa.models.model_instance import Instance
from mtsp_cmsa.models.model_qmatrix import QMatrix
from mtsp_cmsa.models.model_route import Solution
from mtsp_cmsa.services.improve_service import ImproveTrace, shift_pass, swap_pass
from mtsp_cmsa.services.instance_service import angdist_matrix
from mtsp_cmsa.services.routing_service import build_route, improve_route
from mtsp_cmsa.utilities.selection_utils import reservoir_argmin, roulette_index

logger = logging.getLogger(__name__)


@dataclass
class Clustering:
    """
    m clusters, each a list starting with the depot followed by its cities.

    ``assignment_order`` records (city, cluster) for every assignment made
    after seeding, in order.
    """
    clusters: List[List[int]]
    centers: List[int]
    l_approx: List[float]
    assignment_order: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def m(self) -> int:
        return len(self.clusters)

    def assigned_cities(self) -> List[int]:
        return [c for cluster in self.clusters for c in cluster if c != 0]


def seed_centers(
    inst: Instance, Q: QMatrix, m: int, rng: np.random.Generator
) -> Clustering:
    """
    Choose m centers with k-means++ style seeding biased by q-values.

    The first center is drawn with probability proportional to D[0,i]^2; after
    each draw the weights become min(w_i, D[i,c]^2 * Q[i,c]^2).

    Args:
        inst: Problem instance
        Q: q-values
        m: Number of clusters
        rng: Random stream

    Returns:
        Partial clustering with clusters {0, c_j} and L_approx = 2*D[0,c_j]

    Raises:
        InvalidSalesmenCountError: If m is outside [1, n_cities]
    """
    n = inst.n_cities
    if not 1 <= m <= n:
        raise InvalidSalesmenCountError(m, n)

    D = inst.D
    weights = D[0, 1:] ** 2
    alive = np.ones(n, dtype=bool)
    clusters, centers, l_approx = [], [], []

    for _ in range(m):
        candidates = np.flatnonzero(alive)
        pick = candidates[roulette_index(weights[candidates], rng)]
        center = int(pick) + 1
        alive[pick] = False

        centers.append(center)
        clusters.append([0, center])
        l_approx.append(2.0 * float(D[0, center]))
        weights = np.minimum(weights, D[1:, center] ** 2 * Q[1:, center] ** 2)

    return Clustering(clusters=clusters, centers=centers, l_approx=l_approx)


def two_closest_points(u: int, cluster: Sequence[int], D: np.ndarray) -> Tuple[int, int]:
    """
    The two cluster members nearest to u (depot included), ties by smaller index.

    Args:
        u: City outside the cluster
        cluster: Member indices, at least two
        D: Distance matrix

    Returns:
        (a, b) ordered by distance to u

    Raises:
        ConstructionError: If the cluster has fewer than two members
    """
    if len(cluster) < 2:
        raise ConstructionError(f"cluster {list(cluster)} has fewer than two members")
    members = np.asarray(cluster, dtype=np.intp)
    order = np.lexsort((members, D[u, members]))
    return int(members[order[0]]), int(members[order[1]])


def assignment_scores(
    u: int,
    clustering: Clustering,
    D: np.ndarray,
    Q: QMatrix,
    epsilon: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Score of assigning u to each cluster.

    s_j = (d_uj + eps) * r_uj * q_mean_uj with the two-anchor insertion cost
    d_uj, the relative growth r_uj of the longest provisional route, and the
    mean q-value between u and the cluster's cities.

    Args:
        u: Unassigned city
        clustering: Current clustering
        D: Distance matrix
        Q: q-values
        epsilon: Score stabilizer

    Returns:
        (scores, insertion costs) per cluster
    """
    l_max = max(clustering.l_approx)
    denom = max(l_max, epsilon)
    scores = np.empty(clustering.m)
    costs = np.empty(clustering.m)
    for j, cluster in enumerate(clustering.clusters):
        a, b = two_closest_points(u, cluster, D)
        d_uj = D[u, a] + D[u, b] - D[a, b]
        q_mean = float(np.mean(Q[u, cluster[1:]]))
        r_uj = max(l_max, clustering.l_approx[j] + d_uj) / denom
        scores[j] = (d_uj + epsilon) * r_uj * q_mean
        costs[j] = d_uj
    return scores, costs


def assign_cities(
    partial: Clustering,
    inst: Instance,
    Q: QMatrix,
    d_rate_construct: float,
    rng: np.random.Generator,
    epsilon: float = 1e-9,
) -> Clustering:
    """
    Assign every remaining city to a cluster.

    Cities are drawn with probability proportional to 1/(delta_u + eps),
    delta_u being the angular distance to the nearest center. With
    probability d_rate_construct the lowest-score cluster is taken (random
    tie-break), otherwise a cluster is drawn with probability
    proportional to 1/s_j.

    Args:
        partial: Seeded clustering (modified in place)
        inst: Problem instance
        Q: q-values
        d_rate_construct: Probability of the greedy choice
        rng: Random stream
        epsilon: Score stabilizer

    Returns:
        The completed clustering
    """
    D = inst.D
    assigned = set(partial.assigned_cities())
    unassigned = np.asarray([c for c in inst.cities if c not in assigned], dtype=np.intp)
    if unassigned.size == 0:
        return partial

    center_theta = inst.theta[np.asarray(partial.centers, dtype=np.intp)]
    delta = angdist_matrix(inst.theta[unassigned], center_theta).min(axis=1)
    pick_weights = 1.0 / (delta + epsilon)
    open_mask = np.ones(unassigned.size, dtype=bool)

    for _ in range(unassigned.size):
        candidates = np.flatnonzero(open_mask)
        slot = candidates[roulette_index(pick_weights[candidates], rng)]
        open_mask[slot] = False
        u = int(unassigned[slot])

        scores, costs = assignment_scores(u, partial, D, Q, epsilon)
        if rng.random() < d_rate_construct:
            j = reservoir_argmin(scores, rng)
        else:
            with np.errstate(divide="ignore"):
                j = roulette_index(1.0 / scores, rng)

        partial.clusters[j].append(u)
        partial.l_approx[j] += float(costs[j])
        partial.assignment_order.append((u, j))

    return partial


def cluster_cities(
    inst: Instance,
    Q: QMatrix,
    m: int,
    d_rate_construct: float,
    rng: np.random.Generator,
    epsilon: float = 1e-9,
) -> Clustering:
    """Seeding followed by assignment."""
    partial = seed_centers(inst, Q, m, rng)
    return assign_cities(partial, inst, Q, d_rate_construct, rng, epsilon)


def construct_solution(
    inst: Instance,
    Q: QMatrix,
    m: int,
    params: SolverParams,
    rng: np.random.Generator,
    trace: Optional[ImproveTrace] = None,
) -> Solution:
    """
    Build one feasible solution.

    Pipeline: cluster, greedy insertion per cluster, 2-opt, Or-opt, then
    shift and swap passes restricted to moves touching the longest route.

    Args:
        inst: Problem instance
        Q: q-values (read only)
        m: Number of routes
        params: Solver parameters
        rng: Random stream
        trace: Optional recorder of accepted inter-route moves

    Returns:
        Feasible solution
    """
    clustering = cluster_cities(inst, Q, m, params.d_rate_construct, rng, params.epsilon)
    routes = [improve_route(build_route(cluster, inst.D), inst.D, rng) for cluster in clustering.clusters]
    solution = Solution(routes=routes)

    solution = shift_pass(
        solution, inst.D, params.d_rate_improve, rng, restrict_to_longest=True, trace=trace
    )
    solution = swap_pass(
        solution, inst.D, params.d_rate_improve, rng, restrict_to_longest=True, trace=trace
    )
    return solution


def construct_worker(
    inst: Instance,
    q_values: np.ndarray,
    m: int,
    params: SolverParams,
    seed_sequence: np.random.SeedSequence,
) -> Solution:
    """
    Process-pool entry point for one construction.

    Args:
        inst: Problem instance
        q_values: Snapshot of the q-value array
        m: Number of routes
        params: Solver parameters
        seed_sequence: Stream seed for this construction

    Returns:
        Feasible solution
    """
    Q = QMatrix(inst.n_cities, q_values)
    rng = np.random.default_rng(seed_sequence)
    return construct_solution(inst, Q, m, params, rng)
