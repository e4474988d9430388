import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcop_hybrid.model import (
    ASYMMETRIC,
    SYMMETRIC,
    Assignment,
    Constraint,
    PreconditionError,
    ProblemInstance,
    argmin_all,
    best_response,
    check_assignment,
    coloring_instance,
    global_cost,
    local_cost,
    local_costs,
)
from dcop_hybrid.engine import Counters

from oracles import (
    all_assignments,
    brute_best_response,
    brute_global_cost,
    brute_minimum,
    brute_side_cost,
    random_instance,
    transpose,
)


def partial_values(rng, inst, p_none=0.3):
    return [None if rng.random() < p_none else rng.randrange(d) for d in inst.domains]


class TestValidation:
    def test_constraint_on_unknown_agent(self):
        m = [[0, 1], [1, 0]]
        with pytest.raises(ValueError, match="unknown agent"):
            ProblemInstance((2, 2), (Constraint(0, 2, m, m),), ASYMMETRIC)

    def test_unary_constraint_rejected(self):
        m = [[0, 1], [1, 0]]
        with pytest.raises(ValueError, match="not binary"):
            ProblemInstance((2, 2), (Constraint(1, 1, m, m),), ASYMMETRIC)

    def test_duplicate_pair_rejected_in_either_orientation(self):
        m = [[0, 1], [1, 0]]
        with pytest.raises(ValueError, match="duplicate"):
            ProblemInstance((2, 2), (Constraint(0, 1, m, m), Constraint(1, 0, m, m)), ASYMMETRIC)

    @pytest.mark.parametrize("bad", [-1, float("inf"), float("nan"), "3", True])
    def test_bad_costs_rejected(self, bad):
        with pytest.raises(ValueError):
            ProblemInstance((2, 2), (Constraint(0, 1, [[0, bad], [0, 0]], [[0, 0], [0, 0]]),))

    def test_shape_must_match_domains(self):
        with pytest.raises(ValueError, match="shape"):
            ProblemInstance((2, 3), (Constraint(0, 1, [[0, 1], [1, 0]], [[0, 0], [0, 0]]),))

    def test_symmetric_requires_zero_second_side(self):
        with pytest.raises(ValueError, match="non-zero cost_j"):
            ProblemInstance((2, 2), (Constraint(0, 1, [[1, 0], [0, 1]], [[1, 0], [0, 0]]),))

    def test_empty_domain_and_unknown_kind(self):
        with pytest.raises(ValueError):
            ProblemInstance((0,), ())
        with pytest.raises(ValueError, match="kind"):
            ProblemInstance((2,), (), "lopsided")

    def test_assignment_checks(self):
        inst = coloring_instance(3, [(0, 1)], 3)
        with pytest.raises(ValueError, match="covers"):
            check_assignment([0, 1], inst)
        with pytest.raises(ValueError, match="outside"):
            check_assignment([0, 1, 3], inst)
        with pytest.raises(PreconditionError):
            check_assignment([0, None, 1], inst, complete=True)
        assert check_assignment([0, None, 1], inst) == Assignment((0, None, 1))


class TestLocalCost:
    def test_no_assigned_neighbors_is_zero(self):
        inst = coloring_instance(3, [(0, 1), (0, 2)], 3)
        assert local_cost(0, 2, [None, None, None], inst) == 0

    def test_single_conflict(self):
        inst = coloring_instance(2, [(0, 1)], 2)
        assert local_cost(0, 1, [None, 1], inst) == 1
        assert local_cost(0, 0, [None, 1], inst) == 0

    def test_matches_resummation_on_random_asymmetric(self):
        rng = random.Random(7)
        for _ in range(30):
            inst = random_instance(rng, 5, kind=ASYMMETRIC, edge_prob=0.7)
            values = partial_values(rng, inst)
            for a in range(5):
                for x in range(inst.domains[a]):
                    assert local_cost(a, x, values, inst) == brute_side_cost(a, x, values, inst)
                assert local_costs(a, values, inst) == [
                    brute_side_cost(a, x, values, inst) for x in range(inst.domains[a])]

    def test_counts_one_evaluation_per_cell_read(self):
        inst = coloring_instance(3, [(0, 1), (0, 2)], 3)
        c = Counters()
        local_cost(0, 1, [None, 2, None], inst, c)
        assert c.evaluations == 1
        local_costs(0, [None, 2, 0], inst, c)
        assert c.evaluations == 1 + 2 * 3

    def test_out_of_domain_value(self):
        inst = coloring_instance(2, [(0, 1)], 2)
        with pytest.raises(ValueError):
            local_cost(0, 2, [None, 0], inst)


class TestGlobalCost:
    def test_no_constraints(self):
        inst = ProblemInstance((3, 3), ())
        assert global_cost([2, 1], inst) == 0

    def test_triangle_two_colors_minimum_is_one(self):
        inst = coloring_instance(3, [(0, 1), (1, 2), (0, 2)], 2)
        assert min(global_cost(v, inst) for v in all_assignments(inst)) == 1

    def test_incomplete_assignment_rejected(self):
        inst = coloring_instance(2, [(0, 1)], 2)
        with pytest.raises(PreconditionError):
            global_cost([0, None], inst)

    def test_asymmetric_counts_both_sides(self):
        inst = ProblemInstance((2, 2), (Constraint(0, 1, [[1, 2], [3, 4]], [[10, 20], [30, 40]]),),
                               ASYMMETRIC)
        assert global_cost([1, 0], inst) == 33

    def test_symmetric_counts_shared_cost_once(self):
        inst = coloring_instance(2, [(0, 1)], 2)
        assert global_cost([0, 0], inst) == 1

    def test_exhaustive_oracle_small_instances(self):
        rng = random.Random(11)
        for _ in range(40):
            inst = random_instance(rng, rng.randint(2, 6))
            for values in all_assignments(inst):
                assert global_cost(values, inst) == brute_global_cost(values, inst)


class TestBestResponse:
    def test_unassigned_neighbor_gives_value_zero(self):
        inst = coloring_instance(2, [(0, 1)], 3)
        assert best_response(0, [None, None], inst) == (0, 0)

    def test_lowest_free_color(self):
        inst = coloring_instance(2, [(0, 1)], 3)
        assert best_response(0, [None, 0], inst) == (1, 0)

    def test_exhaustive_scan(self):
        rng = random.Random(3)
        for _ in range(50):
            inst = random_instance(rng, 4, edge_prob=0.8)
            values = partial_values(rng, inst)
            for a in range(4):
                assert best_response(a, values, inst) == brute_best_response(a, values, inst)

    def test_argmin_all(self):
        assert argmin_all([3, 1, 2, 1]) == [1, 3]


@st.composite
def instances(draw, max_n=5):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(1, max_n))
    return random_instance(random.Random(seed), n)


def flip(c, kind):
    if kind == SYMMETRIC:
        return Constraint(c.j, c.i, transpose(c.cost_i), transpose(c.cost_j))
    return Constraint(c.j, c.i, transpose(c.cost_j), transpose(c.cost_i))


@settings(max_examples=60, deadline=None)
@given(instances(), st.randoms(use_true_random=False))
def test_reversed_constraint_orientation_is_equivalent(inst, rnd):
    flipped = ProblemInstance(
        inst.domains,
        tuple(flip(c, inst.kind) for c in reversed(inst.constraints)),
        inst.kind,
    )
    values = [rnd.randrange(d) for d in inst.domains]
    assert global_cost(values, flipped) == global_cost(values, inst)
    for a in range(inst.agent_count):
        assert local_costs(a, values, flipped) == local_costs(a, values, inst)


@settings(max_examples=60, deadline=None)
@given(instances())
def test_json_round_trip(inst):
    again = ProblemInstance.from_json(inst.to_json())
    assert again == inst
    assert json.loads(again.to_json()) == json.loads(inst.to_json())


@settings(max_examples=40, deadline=None)
@given(instances(max_n=4))
def test_sum_of_perceived_costs_bounds_global_cost(inst):
    # each constraint side is perceived by exactly one endpoint in the asymmetric case
    for values in all_assignments(inst):
        perceived = sum(local_cost(a, values[a], values, inst) for a in range(inst.agent_count))
        g = global_cost(values, inst)
        if inst.kind == ASYMMETRIC:
            assert perceived == g
        else:
            assert perceived == 2 * g


def test_minimum_oracle_agrees_on_coloring():
    inst = coloring_instance(4, [(0, 1), (1, 2), (2, 3), (3, 0)], 2)
    assert brute_minimum(inst) == 0


def test_malformed_document():
    with pytest.raises(ValueError, match="malformed"):
        ProblemInstance.from_dict({"domains": [2]})


def test_neighbors_and_density():
    inst = coloring_instance(4, [(2, 0), (0, 1)], 3)
    assert inst.neighbors == ((1, 2), (0,), (0,), ())
    assert inst.density == pytest.approx(2 / 6)
    assert inst.kind == SYMMETRIC
