import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spp_cge.core import (Column, DimensionMismatch, DualSolution, EmptyColumn, FormatError,
                          NonPositiveCost, RowOutOfRange, SppInstance, UnknownColumnId,
                          exact_sum, format_instance, is_partition, make_selection,
                          normalize_costs, objective, parse_instance, read_instance,
                          reduced_cost, reduced_costs, validate_instance, write_instance)
from spp_cge.exact import brute_force

from support import FIVE, all_partitions, instances


def inst(m, pairs):
    return SppInstance.from_pairs(m, pairs, one_based=True)


class TestValidate:
    def test_ok(self):
        validate_instance(inst(2, [([1, 2], 0.5)]))

    def test_empty_column(self):
        with pytest.raises(EmptyColumn):
            validate_instance(inst(2, [([], 0.5)]))

    def test_zero_cost(self):
        with pytest.raises(NonPositiveCost):
            validate_instance(inst(2, [([1], 0.0)]))

    def test_row_out_of_range(self):
        with pytest.raises(RowOutOfRange):
            validate_instance(inst(2, [([3], 0.5)]))
        with pytest.raises(RowOutOfRange):
            validate_instance(inst(2, [([0], 0.5)]))


class TestPartition:
    three = inst(3, [([1, 2], 1.0), ([3], 1.0), ([2, 3], 1.0)])

    def test_true(self):
        assert is_partition(self.three, [0, 1])

    def test_overlap(self):
        assert not is_partition(self.three, [0, 2])

    def test_uncovered(self):
        assert not is_partition(self.three, [0])

    def test_unknown_id(self):
        with pytest.raises(UnknownColumnId):
            is_partition(self.three, [5])


class TestObjective:
    def test_sum(self):
        two = inst(2, [([1], 0.5), ([2], 0.4)])
        assert objective(two, [0, 1]) == 0.9

    def test_empty(self):
        assert objective(FIVE, []) == 0.0

    def test_ones(self):
        three = inst(3, [([1], 1.0), ([2], 1.0), ([3], 1.0)])
        assert objective(three, [0, 1, 2]) == 3.0

    def test_exact_sum_ignores_order(self):
        vals = [0.1, 0.2, 0.3, 0.7, 0.9, 0.6]
        assert exact_sum(vals) == exact_sum(reversed(vals)) == 2.8

    def test_unknown_id(self):
        with pytest.raises(UnknownColumnId):
            objective(FIVE, [9])


class TestReducedCost:
    col = Column(0, (0, 1), 0.5)

    def test_zero_duals(self):
        assert reduced_cost(self.col, np.zeros(3)) == 0.5

    def test_half_duals(self):
        assert reduced_cost(self.col, np.array([0.5, 0.5])) == -0.5

    def test_unit_cost(self):
        assert reduced_cost(Column(0, (0, 1), 1.0), np.zeros(2)) == 1.0

    def test_accepts_dual_solution(self):
        y = DualSolution(np.array([0.25, 0.25]), 0.5)
        assert reduced_cost(self.col, y) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            reduced_costs(FIVE, np.zeros(2))

    @given(st.lists(st.floats(-2, 2), min_size=3, max_size=3),
           st.lists(st.floats(-2, 2), min_size=3, max_size=3))
    def test_linear_in_duals(self, y, z):
        y, z = np.array(y), np.array(z)
        for col in FIVE.columns:
            lhs = reduced_cost(col, y + z)
            rhs = reduced_cost(col, y) + reduced_cost(col, z) - col.cost
            assert lhs == pytest.approx(rhs, abs=1e-9)

    @given(instances(), st.randoms(use_true_random=False))
    def test_vector_matches_scalar(self, instance, rnd):
        y = np.array([rnd.uniform(-1, 1) for _ in range(instance.num_elements)])
        vec = reduced_costs(instance, y)
        for col in instance.columns:
            assert vec[col.id] == pytest.approx(reduced_cost(col, y), abs=1e-12)


class TestNormalize:
    def test_divides_by_max(self):
        out, scale = normalize_costs(inst(1, [([1], 2.0), ([1], 4.0)]))
        assert scale == 4.0
        assert list(out.costs) == [0.5, 1.0]

    def test_unchanged(self):
        src = inst(1, [([1], 0.3), ([1], 1.0)])
        out, scale = normalize_costs(src)
        assert scale == 1.0 and out == src

    def test_single(self):
        out, scale = normalize_costs(inst(1, [([1], 5.0)]))
        assert (list(out.costs), scale) == ([1.0], 5.0)

    @settings(max_examples=40, deadline=None)
    @given(instances(max_n=12, costs=st.integers(1, 20).map(float)))
    def test_keeps_optimal_selections(self, instance):
        scaled, scale = normalize_costs(instance)
        parts = all_partitions(instance)
        if not parts:
            return
        best = min(objective(instance, p) for p in parts)
        best_s = min(objective(scaled, p) for p in parts)
        for p in parts:
            assert (abs(objective(instance, p) - best) <= 1e-9) == \
                   (abs(objective(scaled, p) - best_s) <= 1e-9)
        assert brute_force(scaled).objective * scale == pytest.approx(best)


class TestPartitionProperty:
    @settings(max_examples=60)
    @given(instances(), st.data())
    def test_matches_incidence_sums(self, instance, data):
        ids = data.draw(st.sets(st.integers(0, instance.num_columns - 1)))
        x = np.zeros(instance.num_columns)
        x[list(ids)] = 1
        sums = instance.incidence @ x
        assert is_partition(instance, ids) == bool(np.all(sums == 1))

    def test_selection_objective(self):
        sel = make_selection(FIVE, [0, 1])
        assert sel.chosen == frozenset({0, 1}) and sel.objective == 0.9


class TestTextFormat:
    def test_layout(self):
        assert format_instance(inst(3, [([1, 2], 0.5), ([3], 0.4)])) == "3 2\n0.5 2 1 2\n0.4 1 3\n"

    def test_comments_and_blanks(self):
        got = parse_instance("# header\n3 2\n\n0.5 2 1 2\n# c\n0.4 1 3\n")
        assert got == inst(3, [([1, 2], 0.5), ([3], 0.4)])

    @pytest.mark.parametrize("text", ["", "3\n", "2 1\n0.5 2 1\n", "2 2\n0.5 1 1\n", "x y\n"])
    def test_bad(self, text):
        with pytest.raises(FormatError):
            parse_instance(text)

    def test_invalid_content_is_rejected(self):
        with pytest.raises(NonPositiveCost):
            parse_instance("1 1\n-0.5 1 1\n")

    @settings(max_examples=60)
    @given(instances(max_m=8, costs=st.integers(1, 10 ** 9).map(lambda k: k / 10 ** 9)))
    def test_round_trip(self, instance):
        assert parse_instance(format_instance(instance)) == instance

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "five.txt"
        write_instance(FIVE, path)
        assert read_instance(path) == FIVE
