import csv
import dataclasses
import random

import pytest

from dcop_hybrid.engine import (
    Agent,
    Bus,
    Counters,
    MsgKind,
    ProtocolError,
    StopPolicy,
    record_cpa_trace,
    run_activation_phase,
    run_synchronous_phase,
    write_cost_trace,
    write_cpa_trace,
)
from dcop_hybrid.metrics import detect_convergence
from dcop_hybrid.model import Assignment, PreconditionError, ProblemInstance, coloring_instance
from dcop_hybrid.problems import gen_delaunay_coloring
from dcop_hybrid.solvers import Solver, SolverParams

from oracles import brute_global_cost


def same_except_time(a, b):
    assert a.final_assignment == b.final_assignment
    assert a.trace == b.trace
    assert a.convergence_round == b.convergence_round
    assert a.cpa_trace == b.cpa_trace
    for f in ("messages", "evaluations", "rounds"):
        assert getattr(a.counters, f) == getattr(b.counters, f)


class TestActivationPhase:
    @pytest.mark.parametrize("init", ["zsla", "ssla"])
    def test_single_agent(self, init):
        inst = ProblemInstance((3,), ())
        assignment, counters = run_activation_phase(init, inst, 5)
        assert assignment == Assignment((0,))
        assert counters.messages == 0

    @pytest.mark.parametrize("init", ["zsla", "ssla"])
    def test_every_agent_assigned(self, init):
        inst = gen_delaunay_coloring(40, 3, 1)
        assignment, _ = run_activation_phase(init, inst, 9)
        assert assignment.is_complete

    def test_disconnected_components_are_all_reached(self):
        inst = coloring_instance(6, [(0, 1), (2, 3)], 3)
        for seed in range(10):
            assignment, _ = run_activation_phase("ssla", inst, seed)
            assert assignment.is_complete

    def test_zsla_sends_one_value_message_per_edge_end(self):
        inst = gen_delaunay_coloring(30, 3, 2)
        _, counters = run_activation_phase("zsla", inst, 0)
        assert counters.messages == 2 * inst.edge_count

    def test_ssla_message_count_at_least_inquiry_round_trip(self):
        inst = gen_delaunay_coloring(30, 3, 2)
        _, counters = run_activation_phase("ssla", inst, 0, hold_bound=0)
        # value announcement + inquiry + cost map, per edge end, no deferrals
        assert counters.messages == 3 * 2 * inst.edge_count

    def test_random_uses_no_messages(self):
        inst = gen_delaunay_coloring(30, 3, 2)
        _, counters = run_activation_phase("random", inst, 0)
        assert counters.messages == 0 and counters.evaluations == 0

    @pytest.mark.parametrize("init", ["random", "zsla", "ssla"])
    def test_deterministic(self, init):
        inst = gen_delaunay_coloring(50, 3, 4)
        a1, c1 = run_activation_phase(init, inst, 17)
        a2, c2 = run_activation_phase(init, inst, 17)
        assert a1 == a2
        assert (c1.messages, c1.evaluations) == (c2.messages, c2.evaluations)


class Frozen(Solver):
    name = "frozen"
    phases = 1

    def step(self, me, phase, inbox, bus):
        me.read_values(inbox)


class TestSynchronousPhase:
    def test_frozen_solver_stops_at_stall_bound(self):
        inst = gen_delaunay_coloring(20, 3, 0)
        start = Assignment(tuple([0] * 20))
        rec = run_synchronous_phase(Frozen(), inst, start)
        assert rec.rounds == 100
        assert set(rec.trace) == {rec.initial_cost}
        assert rec.I == 0
        assert rec.S == rec.initial_cost

    def test_dsa_with_zero_probability_is_frozen(self):
        inst = gen_delaunay_coloring(30, 3, 0)
        start, _ = run_activation_phase("random", inst, 3)
        rec = run_synchronous_phase("dsa", inst, start, params=SolverParams(p=0.0), trace_cpa=True)
        assert rec.final_assignment == start
        assert rec.I == 0 and rec.rounds == 100
        assert list(record_cpa_trace(rec)) == [(0, start.values)]

    def test_max_rounds_bounds_the_run(self):
        inst = gen_delaunay_coloring(20, 3, 0)
        start = Assignment(tuple([0] * 20))
        rec = run_synchronous_phase(Frozen(), inst, start, StopPolicy(stall_rounds=50, max_rounds=7))
        assert rec.rounds == 7 and len(rec.trace) == 8

    def test_incomplete_start_rejected(self):
        inst = coloring_instance(2, [(0, 1)], 2)
        with pytest.raises(PreconditionError):
            run_synchronous_phase("mgm", inst, Assignment((0, None)))

    @pytest.mark.parametrize("solver", ["dsa", "mgm", "mgm2", "acls", "aclsub", "mcsmgm"])
    def test_identical_seeds_give_identical_records(self, solver):
        inst = gen_delaunay_coloring(40, 3, 8)
        start, _ = run_activation_phase("random", inst, 8)
        a = run_synchronous_phase(solver, inst, start, seed=8, trace_cpa=True)
        b = run_synchronous_phase(solver, inst, start, seed=8, trace_cpa=True)
        same_except_time(a, b)

    @pytest.mark.parametrize("solver", ["dsa", "mgm", "mgm2", "acls", "aclsub", "mcsmgm"])
    def test_trace_matches_brute_force_cost(self, solver):
        inst = gen_delaunay_coloring(12, 3, 5)
        start, _ = run_activation_phase("random", inst, 5)
        rec = run_synchronous_phase(solver, inst, start, seed=5, trace_cpa=True)
        assert rec.trace[0] == brute_global_cost(start.values, inst)
        assert rec.S == brute_global_cost(rec.final_assignment.values, inst)
        assert rec.I == detect_convergence(rec.trace)
        for rnd, snap in rec.cpa_trace:
            assert rec.trace[rnd] == brute_global_cost(snap, inst)

    def test_distinct_assignments_bounded_by_rounds(self):
        inst = gen_delaunay_coloring(40, 3, 1)
        start, _ = run_activation_phase("random", inst, 1)
        rec = run_synchronous_phase("dsa", inst, start, seed=1, trace_cpa=True)
        snaps = [s for _, s in rec.cpa_trace]
        assert len(snaps) == len(set(snaps)) <= rec.rounds + 1

    def test_tracing_disabled_yields_nothing(self):
        inst = gen_delaunay_coloring(10, 3, 1)
        start, _ = run_activation_phase("random", inst, 1)
        rec = run_synchronous_phase("mgm", inst, start)
        assert list(record_cpa_trace(rec)) == []

    def test_trace_files(self, tmp_path):
        inst = gen_delaunay_coloring(10, 3, 1)
        start, _ = run_activation_phase("random", inst, 1)
        rec = run_synchronous_phase("mgm", inst, start, trace_cpa=True)
        write_cost_trace(tmp_path / "t.csv", rec)
        write_cpa_trace(tmp_path / "c.csv", rec)
        rows = list(csv.reader(open(tmp_path / "t.csv")))
        assert rows[0] == ["round", "global_cost"]
        assert [float(r[1]) for r in rows[1:]] == rec.trace
        rows = list(csv.reader(open(tmp_path / "c.csv")))
        assert len(rows) - 1 == len(rec.cpa_trace)


class Echo(Solver):
    """Phase 0 sends the round number; phase 1 records what arrived."""

    name = "echo"
    phases = 2

    def setup(self, me):
        me.heard = []
        me.round = 0

    def start(self, me, bus):
        pass

    def step(self, me, phase, inbox, bus):
        if phase == 0:
            me.round += 1
            assert not [m for m in inbox if m.kind is MsgKind.GAIN]
            bus.broadcast(me.index, MsgKind.GAIN, me.round)
        else:
            me.heard.append(sorted((m.sender, m.payload) for m in inbox))


def test_messages_arrive_exactly_one_exchange_later():
    inst = coloring_instance(3, [(0, 1), (1, 2)], 2)
    algo = Echo()
    captured = {}
    orig_setup = algo.setup

    def setup(me):
        orig_setup(me)
        captured[me.index] = me

    algo.setup = setup
    rec = run_synchronous_phase(algo, inst, Assignment((0, 0, 0)), StopPolicy(max_rounds=3))
    assert captured[1].heard == [[(0, r), (2, r)] for r in (1, 2, 3)]
    assert captured[0].heard == [[(1, r)] for r in (1, 2, 3)]
    # 4 directed edges, one message each per round
    assert rec.M == 3 * 4


def test_bus_rejects_non_neighbor():
    inst = coloring_instance(3, [(0, 1)], 2)
    bus = Bus(inst, Counters())
    with pytest.raises(ProtocolError):
        bus.send(0, 2, MsgKind.VALUE, 1)


def test_agent_only_reads_its_own_side():
    inst = coloring_instance(3, [(0, 1), (0, 2)], 2)
    c = Counters()
    me = Agent(0, inst, c, random.Random(0), 0)
    me.view = {1: 0, 2: 1}
    assert me.local_costs() == [1, 1]
    assert c.evaluations == 4
    assert me.cost_with(2, 1, 1) == 1
    assert c.evaluations == 5


def test_counters_merge():
    a = Counters(1, 2, 3, 0.5)
    b = Counters(10, 20, 30, 1.0)
    assert dataclasses.astuple(a.merge(b)) == (11, 22, 33, 1.5)


def test_stop_policy_validation():
    with pytest.raises(ValueError):
        StopPolicy(stall_rounds=0)
