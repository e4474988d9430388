"""Hand-driven protocol cycles for mechanics tests."""
from __future__ import annotations

import random

from dcop_hybrid.engine import Agent, Bus, Counters
from dcop_hybrid.model import ASYMMETRIC, Constraint, ProblemInstance
from dcop_hybrid.solvers import ACLSUB, SolverParams


def single_neighbor_ub(own_costs, neighbor_costs):
    """Agent 0 with domain len(own_costs) and one pendant neighbor of domain 1."""
    d = len(own_costs)
    con = Constraint(0, 1, [[c] for c in own_costs], [[c] for c in neighbor_costs])
    return ProblemInstance((d, 1), (con,), ASYMMETRIC)


def ub_trials(inst, p, trials, seed=0, start=0):
    """Drive ACLS-UB cycles by hand; yields (proposal, adopted) for agent 0."""
    algo = ACLSUB(SolverParams(p=p))
    counters = Counters()
    rng = random.Random(seed)
    agents = [Agent(a, inst, counters, rng, 0) for a in range(inst.agent_count)]
    bus = Bus(inst, counters)
    for _ in range(trials):
        agents[0].value = start
        for me in agents:
            me.view = {b: agents[b].value for b in me.neighbors}
        inbox = [[] for _ in agents]
        for phase in range(algo.phases):
            for me in agents:
                algo.step(me, phase, inbox[me.index], bus)
            inbox = bus.deliver()
        yield agents[0].proposal, agents[0].value != start
