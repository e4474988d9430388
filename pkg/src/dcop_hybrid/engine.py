"""Deterministic simulated multi-agent execution.

Two execution modes are provided:

* the *activation phase*, an event-driven sequential run used by the
  non-iterative initializers: one random agent starts, and agents activate
  their neighbors once they have picked a value;
* the *synchronous phase*, a barrier-synchronised round model used by the
  iterative solvers. A solver cycle consists of ``solver.phases`` message
  exchanges; anything sent during one exchange is readable in the next.

Agents only learn about each other through :class:`Message` deliveries,
every delivery bumps ``Counters.messages`` and every cost-matrix cell an
agent reads bumps ``Counters.evaluations``.
"""
from __future__ import annotations

import csv
import enum
import random
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Iterator, NamedTuple, Optional

import numpy as np

from .metrics import detect_convergence
from .model import Assignment, PreconditionError, ProblemInstance, check_assignment, global_cost

HOLD = object()
# Maximum HOLD deferrals per agent during the activation phase.
DEFAULT_HOLD_BOUND = 2


class ProtocolError(RuntimeError):
    """An agent received a message that violates its solver's protocol."""


class MsgKind(str, enum.Enum):
    VALUE = "value"
    INQUIRY = "inquiry"
    COST_MAP = "cost_map"
    PROPOSAL = "proposal"
    DELTA = "delta"
    GAIN = "gain"
    OFFER = "offer"
    ACCEPT = "accept"
    REJECT = "reject"
    COMMIT = "commit"
    COST_SHARE = "cost_share"


class Message(NamedTuple):
    sender: int
    receiver: int
    kind: MsgKind
    payload: Any = None


@dataclass
class Counters:
    messages: int = 0
    evaluations: int = 0
    rounds: int = 0
    wall_clock: float = 0.0

    def merge(self, other: "Counters") -> "Counters":
        return Counters(
            self.messages + other.messages,
            self.evaluations + other.evaluations,
            self.rounds + other.rounds,
            self.wall_clock + other.wall_clock,
        )


@dataclass(frozen=True)
class StopPolicy:
    stall_rounds: int = 100
    max_rounds: int = 2000

    def __post_init__(self):
        if self.stall_rounds < 1 or self.max_rounds < 0:
            raise ValueError("stall_rounds must be >= 1 and max_rounds >= 0")


@dataclass
class RunRecord:
    final_assignment: Assignment
    trace: list
    counters: Counters
    convergence_round: int
    final_cost: float
    seed: int
    cpa_trace: Optional[list] = None
    init_counters: Counters = field(default_factory=Counters)

    @property
    def initial_cost(self):
        return self.trace[0]

    @property
    def rounds(self) -> int:
        return len(self.trace) - 1

    # Short metric aliases used throughout the result tables.
    @property
    def I(self) -> int:  # noqa: E743
        return self.convergence_round

    @property
    def S(self):
        return self.final_cost

    @property
    def M(self) -> int:
        return self.counters.messages

    @property
    def E(self) -> int:
        return self.counters.evaluations

    @property
    def T(self) -> float:
        return self.counters.wall_clock


def agent_rngs(seed: int, n: int, stream: int) -> list[random.Random]:
    """Independent per-agent RNG streams derived from a run seed."""
    states = np.random.SeedSequence([int(seed), stream]).generate_state(max(n, 1), np.uint64)
    return [random.Random(int(s)) for s in states[:n]]


def run_rng(seed: int, stream: int) -> random.Random:
    return agent_rngs(seed, 1, stream + 1000)[0]


class Agent:
    """Local state of one simulated agent.

    ``view`` maps neighbor index to the last value heard from that neighbor.
    Cost tables hold only this agent's side of its own constraints.
    Solvers attach their own per-agent fields.
    """

    def __init__(self, index: int, inst: ProblemInstance, counters: Counters,
                 rng: Optional[random.Random] = None, value: Optional[int] = None):
        self.index = index
        self.domain = inst.domains[index]
        self.neighbors = inst.neighbors[index]
        self.side = inst.side_costs[index]
        self.cols = inst.side_columns[index]
        self.counters = counters
        self.rng = rng
        self.value = value
        self.view: dict[int, int] = {}

    def local_costs(self, view: Optional[dict] = None) -> list:
        """Own-side cost of every domain value against ``view``."""
        view = self.view if view is None else view
        cols = self.cols
        vecs = [cols[b][v] for b, v in view.items()]
        self.counters.evaluations += len(vecs) * self.domain
        if not vecs:
            return [0] * self.domain
        return [sum(t) for t in zip(*vecs)]

    def cost_with(self, b: int, va: int, vb: int):
        """Own-side cost of the single constraint with ``b``."""
        self.counters.evaluations += 1
        return self.side[b][va][vb]

    def read_values(self, inbox) -> None:
        for msg in inbox:
            if msg.kind is MsgKind.VALUE:
                self.view[msg.sender] = msg.payload


class Bus:
    """Routes messages along constraint edges and counts deliveries.

    In ``immediate`` mode (activation phase) ``send`` hands the message back
    to the caller for instant delivery instead of queueing it for the next
    synchronous exchange.
    """

    def __init__(self, inst: ProblemInstance, counters: Counters, immediate: bool = False):
        self.n = inst.agent_count
        self.immediate = immediate
        self.neighbor_sets = [frozenset(nb) for nb in inst.neighbors]
        self.neighbors = inst.neighbors
        self.counters = counters
        self.pending: list[list[Message]] = [[] for _ in range(self.n)]

    def send(self, sender: int, receiver: int, kind: MsgKind, payload=None) -> Message:
        if receiver not in self.neighbor_sets[sender]:
            raise ProtocolError(f"agent {sender} cannot reach non-neighbor {receiver}")
        msg = Message(sender, receiver, kind, payload)
        if not self.immediate:
            self.pending[receiver].append(msg)
        self.counters.messages += 1
        return msg

    def broadcast(self, sender: int, kind: MsgKind, payload=None) -> None:
        pending = self.pending
        for b in self.neighbors[sender]:
            pending[b].append(Message(sender, b, kind, payload))
        self.counters.messages += len(self.neighbors[sender])

    def deliver(self) -> list[list[Message]]:
        out = self.pending
        self.pending = [[] for _ in range(self.n)]
        return out


def _resolve_initializer(initializer):
    if isinstance(initializer, str):
        from .initializers import get_initializer
        return get_initializer(initializer)
    return initializer


def _resolve_solver(solver, params):
    if isinstance(solver, str):
        from .solvers import get_solver
        return get_solver(solver, params)
    return solver


def run_activation_phase(initializer, inst: ProblemInstance, seed: int,
                         hold_bound: int = DEFAULT_HOLD_BOUND) -> tuple[Assignment, Counters]:
    """Run a non-iterative initializer by activation spreading.

    A FIFO queue starts with one uniformly random agent. Each dequeued agent
    runs the initializer's local step; on a HOLD it goes to the back of the
    queue, otherwise it announces its value to all neighbors, which
    activates the ones not yet queued. Disconnected components are started
    from a random unassigned agent once the queue drains.
    """
    init = _resolve_initializer(initializer)
    counters = Counters()
    start = time.perf_counter()
    if not getattr(init, "uses_activation", True):
        assignment = init.assign(inst, seed)
        counters.wall_clock = time.perf_counter() - start
        return assignment, counters

    n = inst.agent_count
    rng = run_rng(seed, 0)
    agent_streams = agent_rngs(seed, n, 1)
    agents = [Agent(a, inst, counters, agent_streams[a]) for a in range(n)]
    bus = Bus(inst, counters, immediate=True)
    activated = [False] * n
    deferrals = [0] * n
    unassigned = n
    queue: deque[int] = deque()

    while unassigned:
        if not queue:
            free = [a for a in range(n) if agents[a].value is None]
            root = free[rng.randrange(len(free))]
            activated[root] = True
            queue.append(root)
        a = queue.popleft()
        me = agents[a]
        if me.value is not None:
            continue
        may_hold = deferrals[a] < hold_bound
        value = init.step(me, agents, bus, may_hold)
        if value is HOLD:
            if not may_hold:
                raise ProtocolError(f"agent {a} held beyond the deferral bound")
            deferrals[a] += 1
            queue.append(a)
            continue
        me.value = value
        unassigned -= 1
        for b in me.neighbors:
            msg = bus.send(a, b, MsgKind.VALUE, value)
            agents[b].view[a] = msg.payload
            if not activated[b]:
                activated[b] = True
                queue.append(b)

    counters.wall_clock = time.perf_counter() - start
    return Assignment(tuple(ag.value for ag in agents)), counters


def run_synchronous_phase(solver, inst: ProblemInstance, start: Assignment,
                          stop: StopPolicy = StopPolicy(), seed: int = 0,
                          params=None, trace_cpa: bool = False) -> RunRecord:
    """Run an iterative solver from a complete start assignment.

    Each round is one full solver cycle; within it every phase visits the
    agents in ascending index and delivers its messages at the barrier. The
    run stops once the best cost has not strictly improved for
    ``stop.stall_rounds`` rounds or after ``stop.max_rounds`` rounds.
    ``trace[0]`` is the cost of ``start``.
    """
    start = check_assignment(start, inst)
    if not start.is_complete:
        raise PreconditionError("the synchronous phase needs a complete start assignment")
    algo = _resolve_solver(solver, params)
    n = inst.agent_count
    counters = Counters()
    t0 = time.perf_counter()
    streams = agent_rngs(seed, n, 2)
    agents = [Agent(a, inst, counters, streams[a], start[a]) for a in range(n)]
    bus = Bus(inst, counters)
    for me in agents:
        algo.setup(me)
    for me in agents:
        algo.start(me, bus)
    inboxes = bus.deliver()

    values = [me.value for me in agents]
    trace = [global_cost(values, inst)]
    stamps = [time.perf_counter() - t0]
    cpa_trace = None
    seen = None
    if trace_cpa:
        snap = tuple(values)
        cpa_trace = [(0, snap)]
        seen = {snap}
    best = trace[0]
    last_improvement = 0
    rnd = 0
    phases = algo.phases
    while rnd < stop.max_rounds and rnd - last_improvement < stop.stall_rounds:
        rnd += 1
        for phase in range(phases):
            for me in agents:
                algo.step(me, phase, inboxes[me.index], bus)
            inboxes = bus.deliver()
        values = [me.value for me in agents]
        cost = global_cost(values, inst)
        trace.append(cost)
        stamps.append(time.perf_counter() - t0)
        if cost < best:
            best = cost
            last_improvement = rnd
        if trace_cpa:
            snap = tuple(values)
            if snap not in seen:
                seen.add(snap)
                cpa_trace.append((rnd, snap))

    counters.rounds = rnd
    conv = detect_convergence(trace)
    counters.wall_clock = stamps[conv]
    final = Assignment(tuple(values))
    return RunRecord(final, trace, counters, conv, trace[-1], int(seed), cpa_trace)


def record_cpa_trace(record: RunRecord) -> Iterator[tuple[int, tuple]]:
    """Distinct complete assignments visited by a run, with their first round."""
    if record.cpa_trace is None:
        return iter(())
    return iter(record.cpa_trace)


def write_cost_trace(path, record: RunRecord) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["round", "global_cost"])
        for r, c in enumerate(record.trace):
            w.writerow([r, c])


def write_cpa_trace(path, record: RunRecord) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["round", "assignment"])
        for r, snap in record_cpa_trace(record):
            w.writerow([r, " ".join(map(str, snap))])
