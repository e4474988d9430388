"""Iterative local-search solvers as per-agent synchronous protocols.

Each solver runs a fixed cycle of ``phases`` message exchanges inside
:func:`dcop_hybrid.engine.run_synchronous_phase`. One cycle is one solver
iteration. Agents announce their value once at start and afterwards only
when it changes; neighbors keep the last value they heard.

Gain competitions (MGM, MGM-2, MCS-MGM) compare ``(gain, -index)``
lexicographically, so between two neighbors exactly one can win and
adjacent agents never move in the same cycle.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

from .engine import Agent, Bus, MsgKind, ProtocolError


@dataclass(frozen=True)
class SolverParams:
    p: float = 0.5
    offer_prob: float = 0.5

    def __post_init__(self):
        for name in ("p", "offer_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


def _beats_all(me: Agent, gain, gains: dict, skip: int = -1) -> bool:
    mine = (gain, -me.index)
    return gain > 0 and all(mine > (g, -b) for b, g in gains.items() if b != skip)


def _gains(inbox) -> dict:
    return {m.sender: m.payload for m in inbox if m.kind is MsgKind.GAIN}


class Solver:
    name = ""
    phases = 1

    def __init__(self, params: SolverParams | None = None):
        self.params = params or SolverParams()

    def setup(self, me: Agent) -> None:
        pass

    def start(self, me: Agent, bus: Bus) -> None:
        bus.broadcast(me.index, MsgKind.VALUE, me.value)

    def step(self, me: Agent, phase: int, inbox, bus: Bus) -> None:
        raise NotImplementedError

    def _move(self, me: Agent, value: int, bus: Bus) -> None:
        if value != me.value:
            me.value = value
            bus.broadcast(me.index, MsgKind.VALUE, value)

    def __repr__(self):
        return f"{type(self).__name__}({asdict(self.params)})"


class DSA(Solver):
    """DSA variant C.

    Adopts the best response (lowest index among ties) with probability
    ``p`` when it strictly improves the local cost, or when it only ties but
    the agent is in conflict.
    """

    name = "dsa"
    phases = 1

    def step(self, me, phase, inbox, bus):
        me.read_values(inbox)
        costs = me.local_costs()
        cur = costs[me.value]
        best = min(costs)
        candidate = costs.index(best)
        if candidate == me.value or not (best < cur or cur > 0):
            return
        if me.rng.random() < self.params.p:
            self._move(me, candidate, bus)


class MGM(Solver):
    """Maximum Gain Message: value/gain exchange, only the neighborhood's best gain moves."""

    name = "mgm"
    phases = 2

    def step(self, me, phase, inbox, bus):
        if phase == 0:
            me.read_values(inbox)
            costs = me.local_costs()
            best = min(costs)
            me.gain = costs[me.value] - best
            me.best_value = costs.index(best)
            bus.broadcast(me.index, MsgKind.GAIN, me.gain)
        elif _beats_all(me, me.gain, _gains(inbox)):
            self._move(me, me.best_value, bus)


class MGM2(Solver):
    """MGM-2: MGM extended with coordinated two-agent moves.

    Phases per cycle: offer, reply, gain, commit, value. An offerer sends
    one random neighbor its own gain for every joint value pair, with the
    shared constraint left out. The receiver adds its gain and the shared
    constraint's change, and accepts the best pair if it gains anything. A
    committed pair moves only when both partners beat all their other
    neighbors; everybody else behaves as in MGM.
    """

    name = "mgm2"
    phases = 5

    def setup(self, me):
        me.partner = None

    def step(self, me, phase, inbox, bus):
        getattr(self, f"_phase{phase}")(me, inbox, bus)

    def _phase0(self, me, inbox, bus):
        me.read_values(inbox)
        costs = me.local_costs()
        best = min(costs)
        me.gain = costs[me.value] - best
        me.best_value = costs.index(best)
        me.partner = None
        me.pair_value = None
        me.offered_to = None
        q = self.params.offer_prob
        if q > 0 and me.neighbors and me.rng.random() < q:
            partner = me.neighbors[me.rng.randrange(len(me.neighbors))]
            rest = {b: v for b, v in me.view.items() if b != partner}
            partial = me.local_costs(rest)
            cur = partial[me.value]
            partner_domain = len(me.side[partner][0])
            current_pair = (me.value, me.view[partner])
            offer = {
                (va, vb): cur - partial[va]
                for va in range(me.domain)
                for vb in range(partner_domain)
                if (va, vb) != current_pair
            }
            me.offered_to = partner
            bus.send(me.index, partner, MsgKind.OFFER, offer)

    def _phase1(self, me, inbox, bus):
        offers = [m for m in inbox if m.kind is MsgKind.OFFER]
        if not offers:
            return
        if me.offered_to is not None:
            for m in offers:
                bus.send(me.index, m.sender, MsgKind.REJECT)
            return
        best = None
        for m in offers:
            s = m.sender
            side = me.side[s]
            s_domain = len(side[0])
            rest = {b: v for b, v in me.view.items() if b != s}
            partial = me.local_costs(rest)
            cur = partial[me.value]
            shared_now = me.cost_with(s, me.value, me.view[s])
            me.counters.evaluations += len(m.payload)
            for (va, vb), offer_gain in m.payload.items():
                if not (0 <= va < s_domain and 0 <= vb < me.domain):
                    raise ProtocolError(f"agent {s} offered unknown pair {(va, vb)}")
                joint = offer_gain + (cur - partial[vb]) + (shared_now - side[vb][va])
                if best is None or joint > best[0]:
                    best = (joint, s, va, vb)
        if best is not None and best[0] > 0:
            joint, s, va, vb = best
            me.partner = s
            me.pair_value = vb
            me.gain = joint
        for m in offers:
            if m.sender == me.partner:
                bus.send(me.index, m.sender, MsgKind.ACCEPT, (best[2], best[3], best[0]))
            else:
                bus.send(me.index, m.sender, MsgKind.REJECT)

    def _phase2(self, me, inbox, bus):
        for m in inbox:
            if m.sender != me.offered_to:
                raise ProtocolError(f"agent {me.index} got an unsolicited {m.kind.value}")
            if m.kind is MsgKind.ACCEPT:
                va, _vb, joint = m.payload
                me.partner = m.sender
                me.pair_value = va
                me.gain = joint
        bus.broadcast(me.index, MsgKind.GAIN, me.gain)

    def _phase3(self, me, inbox, bus):
        me.go = _beats_all(me, me.gain, _gains(inbox), skip=me.partner)
        if me.partner is not None:
            bus.send(me.index, me.partner, MsgKind.COMMIT, me.go)

    def _phase4(self, me, inbox, bus):
        if me.partner is None:
            if me.go:
                self._move(me, me.best_value, bus)
            return
        partner_go = any(m.payload for m in inbox
                         if m.kind is MsgKind.COMMIT and m.sender == me.partner)
        if me.go and partner_go:
            self._move(me, me.pair_value, bus)


class ACLS(Solver):
    """Asymmetric Coordinated Local Search.

    An agent proposes a random value from the set that lowers its own side
    cost; neighbors answer with the change on their side and the agent
    moves with probability ``p`` if the regional change is negative.
    """

    name = "acls"
    phases = 3

    def step(self, me, phase, inbox, bus):
        if phase == 0:
            me.read_values(inbox)
            costs = me.local_costs()
            cur = costs[me.value]
            improving = [d for d, c in enumerate(costs) if c < cur]
            me.proposal = None
            if improving:
                me.proposal = improving[me.rng.randrange(len(improving))]
                me.own_delta = costs[me.proposal] - cur
                bus.broadcast(me.index, MsgKind.PROPOSAL, me.proposal)
        elif phase == 1:
            for m in inbox:
                if m.kind is MsgKind.PROPOSAL:
                    s = m.sender
                    delta = (me.cost_with(s, me.value, m.payload)
                             - me.cost_with(s, me.value, me.view[s]))
                    bus.send(me.index, s, MsgKind.DELTA, delta)
        elif me.proposal is not None:
            total = me.own_delta + sum(m.payload for m in inbox if m.kind is MsgKind.DELTA)
            if total < 0 and me.rng.random() < self.params.p:
                self._move(me, me.proposal, bus)


class ACLSUB(ACLS):
    """ACLS with the proposal drawn uniformly from the whole domain.

    Neighbors report their side cost for both the proposed and the current
    value; the agent adds its own side and adopts the proposal with
    probability ``p`` only if the regional cost strictly drops.
    """

    name = "aclsub"
    phases = 3

    def step(self, me, phase, inbox, bus):
        if phase == 0:
            me.read_values(inbox)
            me.proposal = me.rng.randrange(me.domain)
            bus.broadcast(me.index, MsgKind.PROPOSAL, me.proposal)
        elif phase == 1:
            for m in inbox:
                if m.kind is MsgKind.PROPOSAL:
                    s = m.sender
                    at_proposal = me.cost_with(s, me.value, m.payload)
                    at_current = me.cost_with(s, me.value, me.view[s])
                    bus.send(me.index, s, MsgKind.DELTA, (at_proposal, at_current))
        else:
            proposed = current = 0
            for m in inbox:
                if m.kind is MsgKind.DELTA:
                    proposed += m.payload[0]
                    current += m.payload[1]
            costs = me.local_costs()
            proposed += costs[me.proposal]
            current += costs[me.value]
            if proposed < current and me.rng.random() < self.params.p:
                self._move(me, me.proposal, bus)


class MCSMGM(Solver):
    """MGM over combined constraint costs.

    Every cycle each agent tells each neighbor what it would pay on their
    shared constraint for every value the neighbor could take, so gains are
    computed on the sum of both sides.
    """

    name = "mcsmgm"
    phases = 3

    def step(self, me, phase, inbox, bus):
        if phase == 0:
            me.read_values(inbox)
            for b in me.neighbors:
                row = me.side[b][me.value]
                me.counters.evaluations += len(row)
                bus.send(me.index, b, MsgKind.COST_SHARE, row)
        elif phase == 1:
            combined = me.local_costs()
            for m in inbox:
                if m.kind is MsgKind.COST_SHARE:
                    combined = [c + s for c, s in zip(combined, m.payload)]
            best = min(combined)
            me.gain = combined[me.value] - best
            me.best_value = combined.index(best)
            bus.broadcast(me.index, MsgKind.GAIN, me.gain)
        elif _beats_all(me, me.gain, _gains(inbox)):
            self._move(me, me.best_value, bus)


SOLVERS = {cls.name: cls for cls in (DSA, MGM, MGM2, ACLS, ACLSUB, MCSMGM)}


def get_solver(name: str, params=None) -> Solver:
    if isinstance(params, dict):
        params = SolverParams(**params)
    try:
        return SOLVERS[name](params)
    except KeyError:
        raise ValueError(f"unknown solver {name!r}; choose from {sorted(SOLVERS)}") from None
