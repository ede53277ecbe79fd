"""
Unit tests for duplicate removal and the shift/swap passes.
"""
import math

import numpy as np
import pytest

from mtsp_cmsa.exceptions import SubsolverContractError
from mtsp_cmsa.models.model_instance import Instance, tour_length
from mtsp_cmsa.models.model_route import Route, Solution
from mtsp_cmsa.services.improve_service import (
    ImproveTrace,
    improve,
    remove_duplicates,
    shift_pass,
    swap_pass,
)


def admissible_move(sol, D):
    """Exhaustive shift/swap scan on explicit sequences; returns a move or None."""
    seqs = sol.sequences()
    lengths = [tour_length(s, D) for s in seqs]
    z, total = max(lengths), math.fsum(lengths)

    def check(candidate):
        new_lengths = [tour_length(s, D) for s in candidate]
        new_max = max(new_lengths)
        gain = total - math.fsum(new_lengths)
        return new_max <= z and (gain > 1e-8 or new_max < z - 1e-8)

    for a in range(len(seqs)):
        for b in range(len(seqs)):
            if a == b:
                continue
            for i, u in enumerate(seqs[a]):
                for j in range(len(seqs[b]) + 1):
                    candidate = [list(s) for s in seqs]
                    del candidate[a][i]
                    candidate[b].insert(j, u)
                    if check(candidate):
                        return ("shift", a, b, i, j)
            if a < b:
                for i in range(len(seqs[a])):
                    for j in range(len(seqs[b])):
                        candidate = [list(s) for s in seqs]
                        candidate[a][i], candidate[b][j] = seqs[b][j], seqs[a][i]
                        if check(candidate):
                            return ("swap", a, b, i, j)
    return None


def random_partition(n_cities, m, rng):
    cities = [int(c) for c in rng.permutation(np.arange(1, n_cities + 1))]
    cuts = sorted(rng.choice(np.arange(1, n_cities), size=m - 1, replace=False))
    return [cities[i:j] for i, j in zip([0, *cuts], [*cuts, n_cities])]


class TestRemoveDuplicates:
    """Tests for the Remove step."""

    def test_scaled_greedy_removal(self, rng):
        """Gain 1 on a route of length 10 beats gain 1.5 on a route of length 5."""
        inst = Instance.from_coords([(0.0, 0.0), (0.5, 0.0), (1.25, 0.0), (1.25, 0.0)])
        sol = Solution(routes=[Route(seq=[1], length=10.0), Route(seq=[2, 1, 3], length=5.0)])
        result = remove_duplicates(sol, inst.D, 1.0, rng)
        assert result.routes[0].seq == []
        assert result.routes[1].seq == [2, 1, 3]
        result.validate_partition(3)

    def test_collinear_removal_keeps_length(self, rng):
        inst = Instance.from_coords([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)])
        sol = Solution.from_sequences([[1, 2], [1]], inst.D)
        result = remove_duplicates(sol, inst.D, 1.0, rng)
        result.validate_partition(2)
        assert result.routes[0].length == pytest.approx(4.0)

    def test_removal_gain_value(self, rng):
        """
        Removing (0,1) between the depot and (1,0) saves sqrt(2).

        Scores: sqrt(2) * (2 + sqrt(2)) on the first route against 2 * 2 on the second.
        """
        inst = Instance.from_coords([(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)])
        sol = Solution.from_sequences([[1, 2], [1]], inst.D)
        before = sol.routes[0].length
        result = remove_duplicates(sol, inst.D, 1.0, rng)
        assert result.routes[0].seq == [2]
        assert result.routes[1].seq == [1]
        assert before - result.routes[0].length == pytest.approx(math.sqrt(2))

    def test_missing_city(self, unit_cross, rng):
        sol = Solution.from_sequences([[1, 2], [3]], unit_cross.D)
        with pytest.raises(SubsolverContractError) as exc_info:
            remove_duplicates(sol, unit_cross.D, 1.0, rng)
        assert exc_info.value.missing == [4]


class TestShiftSwap:
    """Tests for the inter-route passes."""

    def test_stray_city_moves(self, rng):
        inst = Instance.from_coords(
            [(0.0, 0.0), (0.1, 1.0), (2.0, 0.0), (4.0, 0.0), (0.0, 1.0)]
        )
        sol = Solution.from_sequences([[1, 2, 3], [4]], inst.D)
        result = shift_pass(sol, inst.D, 1.0, rng)
        assert 1 in result.routes[1].seq
        assert result.z == pytest.approx(8.0)
        result.validate_partition(4)

    def test_single_route_unchanged(self, unit_cross, rng):
        sol = Solution.from_sequences([[1, 2, 3, 4]], unit_cross.D)
        assert shift_pass(sol, unit_cross.D, 1.0, rng) is sol
        assert swap_pass(sol, unit_cross.D, 1.0, rng) is sol

    def test_restrict_to_longest(self, rng):
        """The only improving shift is between the two short routes."""
        inst = Instance.from_coords(
            [(0.0, 0.0), (10.0, 0.0), (0.0, 3.0), (0.0, -3.0), (0.0, -3.1)]
        )
        sol = Solution.from_sequences([[1], [2, 3], [4]], inst.D)
        assert shift_pass(sol, inst.D, 1.0, rng, restrict_to_longest=True) is sol
        result = shift_pass(sol, inst.D, 1.0, rng)
        assert result.total == pytest.approx(sol.total - 6.0)
        assert result.z == pytest.approx(20.0)

    def test_mirrored_swap(self, rng):
        """Each city sits in the other's natural route; swapping shortens both."""
        inst = Instance.from_coords(
            [(0.0, 0.0), (3.0, 0.0), (-3.0, 0.1), (-3.0, 0.0), (3.0, 0.1)]
        )
        sol = Solution.from_sequences([[1, 2], [3, 4]], inst.D)
        result = swap_pass(sol, inst.D, 1.0, rng)
        assert result.z < sol.z
        assert result.total < sol.total
        assert sorted(map(sorted, result.sequences())) == [[1, 4], [2, 3]]

    def test_incremental_tables_match_recomputation(self, random_instance_factory):
        for seed in range(10):
            inst = random_instance_factory(12, seed)
            rng = np.random.default_rng(seed)
            sol = Solution.from_sequences(random_partition(12, 3, rng), inst.D)
            # check_incremental raises on any stale table or length
            improve(sol, inst.D, 0.5, rng, check_incremental=True)

    def test_trace_is_lexicographically_decreasing(self, random_instance_factory):
        for seed in range(20):
            inst = random_instance_factory(15, seed)
            rng = np.random.default_rng(seed)
            sol = Solution.from_sequences(random_partition(15, 3, rng), inst.D)
            trace = ImproveTrace()
            result = improve(sol, inst.D, 0.7, rng, trace=trace)

            previous = (sol.z, sol.total)
            for _, z, total in trace.points:
                assert z <= previous[0] + 1e-9
                assert z < previous[0] - 1e-11 or total < previous[1] - 1e-11
                previous = (z, total)
            assert result.z <= sol.z + 1e-9


class TestImprove:
    """Tests for the full Improve step."""

    def test_terminal_state_has_no_admissible_move(self, random_instance_factory):
        for seed in range(50):
            inst = random_instance_factory(8, seed)
            rng = np.random.default_rng(seed)
            sol = Solution.from_sequences(random_partition(8, 2, rng), inst.D)
            result = improve(sol, inst.D, 0.97, rng)
            result.validate_partition(8)
            assert admissible_move(result, inst.D) is None

    def test_overlapping_input_becomes_feasible(self, random_instance_factory, rng):
        inst = random_instance_factory(10, 6)
        sol = Solution.from_sequences([[1, 2, 3, 4, 5], [5, 6, 7], [8, 9, 10, 1]], inst.D)
        result = improve(sol, inst.D, 0.97, rng)
        result.validate_partition(10)
        assert result.m == 3

    def test_cached_lengths_match(self, random_instance_factory):
        for seed in range(30):
            inst = random_instance_factory(20, seed)
            rng = np.random.default_rng(seed)
            sol = Solution.from_sequences(random_partition(20, 4, rng), inst.D)
            result = improve(sol, inst.D, 0.9, rng)
            for route in result.routes:
                assert route.length == pytest.approx(tour_length(route.seq, inst.D), abs=1e-9)

    def test_locally_optimal_input_unchanged(self, line_instance, rng):
        sol = Solution.from_sequences([[1, 2, 3, 4]], line_instance.D)
        result = improve(sol, line_instance.D, 1.0, rng)
        assert result.sequences() == [[1, 2, 3, 4]]
