"""Non-iterative initializers that produce a complete starting assignment.

``random`` draws every value independently. ``zsla`` and ``ssla`` run
inside the activation phase of :mod:`dcop_hybrid.engine`: the greedy
zero-step look-ahead only looks at already assigned neighbors, while the
single-step look-ahead also asks each neighbor how well it could still
respond to every candidate value.
"""
from __future__ import annotations

import numpy as np

from .engine import HOLD, Agent, Bus, MsgKind, run_activation_phase
from .model import Assignment, ProblemInstance, argmin_all


def random_init(inst: ProblemInstance, seed: int) -> Assignment:
    """Uniform i.i.d. values; no messages and no cost evaluations."""
    rng = np.random.default_rng(int(seed))
    return Assignment(tuple(int(rng.integers(d)) for d in inst.domains))


class RandomInit:
    name = "random"
    uses_activation = False

    def assign(self, inst: ProblemInstance, seed: int) -> Assignment:
        return random_init(inst, seed)


def zsla_step(me: Agent) -> int:
    # greedy w.r.t. the neighbors this agent has heard from
    costs = me.local_costs()
    return costs.index(min(costs))


class ZSLA:
    name = "zsla"
    uses_activation = True

    def step(self, me: Agent, agents, bus: Bus, may_hold: bool):
        return zsla_step(me)


def cost_map(responder: Agent, inquirer: int, candidates) -> list:
    """Responder's lowest achievable own-side cost for each candidate of ``inquirer``.

    Only the constraint with the inquirer and the responder's constraints
    with already assigned third parties are counted. An assigned responder
    answers for its fixed value.
    """
    side = responder.side[inquirer]
    others = {b: v for b, v in responder.view.items() if b != inquirer}
    if responder.value is not None:
        own = responder.value
        base = sum(responder.side[b][own][v] for b, v in others.items())
        responder.counters.evaluations += len(others) + len(candidates)
        return [side[own][d] + base for d in candidates]
    base = responder.local_costs(others)
    responder.counters.evaluations += len(candidates) * responder.domain
    return [min(side[x][d] + base[x] for x in range(responder.domain)) for d in candidates]


def ssla_totals(me: Agent, agents, bus: Bus) -> list:
    """Own local cost plus every neighbor's cost map, per candidate value."""
    candidates = tuple(range(me.domain))
    totals = me.local_costs()
    for b in me.neighbors:
        bus.send(me.index, b, MsgKind.INQUIRY, candidates)
        reply = bus.send(b, me.index, MsgKind.COST_MAP, cost_map(agents[b], me.index, candidates))
        totals = [t + c for t, c in zip(totals, reply.payload)]
    return totals


def ssla_step(me: Agent, agents, bus: Bus, may_hold: bool):
    """Assign the look-ahead argmin, or HOLD once when it is not unique.

    Holding only makes sense while some neighbor is still unassigned, since
    only a new assignment can break the tie.
    """
    totals = ssla_totals(me, agents, bus)
    best = argmin_all(totals)
    if len(best) > 1 and may_hold and len(me.view) < len(me.neighbors):
        return HOLD
    return best[0]


class SSLA:
    name = "ssla"
    uses_activation = True

    def step(self, me: Agent, agents, bus: Bus, may_hold: bool):
        return ssla_step(me, agents, bus, may_hold)


INITIALIZERS = {"random": RandomInit, "zsla": ZSLA, "ssla": SSLA}


def get_initializer(name: str):
    try:
        return INITIALIZERS[name]()
    except KeyError:
        raise ValueError(
            f"unknown initializer {name!r}; choose from {sorted(INITIALIZERS)}"
        ) from None


def initialize(name: str, inst: ProblemInstance, seed: int):
    """Complete starting assignment and the counters spent producing it."""
    return run_activation_phase(name, inst, seed)
