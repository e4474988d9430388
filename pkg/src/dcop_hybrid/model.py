"""(A)DCOP data model: problem instances, assignments and exact cost semantics.

Every agent owns exactly one variable, so agent index and variable index are
the same thing. Values are dense 0-based indices into the agent's domain.
Each binary constraint stores one cost matrix per endpoint, indexed
``[value_i][value_j]``. Symmetric problems keep the shared cost in ``cost_i``
and an all-zero ``cost_j``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence

SYMMETRIC = "symmetric"
ASYMMETRIC = "asymmetric"
KINDS = (SYMMETRIC, ASYMMETRIC)

Matrix = tuple  # tuple[tuple[float, ...], ...]


class PreconditionError(ValueError):
    """Raised when an operation's precondition does not hold."""


def _freeze_matrix(rows, shape: tuple[int, int], name: str) -> Matrix:
    frozen = tuple(tuple(row) for row in rows)
    if len(frozen) != shape[0] or any(len(row) != shape[1] for row in frozen):
        raise ValueError(f"{name} must have shape {shape}")
    for row in frozen:
        for c in row:
            if isinstance(c, bool) or not isinstance(c, (int, float)):
                raise ValueError(f"{name} holds a non-numeric cost {c!r}")
            if not math.isfinite(c) or c < 0:
                raise ValueError(f"{name} holds an invalid cost {c!r}")
    return frozen


@dataclass(frozen=True)
class Constraint:
    """Binary constraint between agents ``i`` and ``j``.

    Both matrices are indexed ``[value of i][value of j]``; ``cost_i`` is the
    side of agent ``i`` and ``cost_j`` the side of agent ``j``.
    """

    i: int
    j: int
    cost_i: Matrix
    cost_j: Matrix

    @property
    def pair(self) -> tuple[int, int]:
        return (self.i, self.j) if self.i < self.j else (self.j, self.i)

    def total(self, vi: int, vj: int):
        return self.cost_i[vi][vj] + self.cost_j[vi][vj]


def is_zero_matrix(m: Matrix) -> bool:
    return all(c == 0 for row in m for c in row)


def unit_conflict_matrix(size: int) -> Matrix:
    """Graph-coloring cost: 1 when both ends take the same value."""
    return tuple(tuple(1 if a == b else 0 for b in range(size)) for a in range(size))


@dataclass(frozen=True)
class ProblemInstance:
    domains: tuple[int, ...]
    constraints: tuple[Constraint, ...]
    kind: str = SYMMETRIC

    def __post_init__(self):
        domains = tuple(int(d) for d in self.domains)
        if not domains:
            raise ValueError("a problem needs at least one agent")
        if any(d < 1 for d in domains):
            raise ValueError("every domain must hold at least one value")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        n = len(domains)
        seen = set()
        checked = []
        for c in self.constraints:
            i, j = int(c.i), int(c.j)
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"constraint ({i}, {j}) references an unknown agent")
            if i == j:
                raise ValueError(f"constraint ({i}, {j}) is not binary")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate constraint on pair {key}")
            seen.add(key)
            shape = (domains[i], domains[j])
            cost_i = _freeze_matrix(c.cost_i, shape, f"cost_i of ({i}, {j})")
            cost_j = _freeze_matrix(c.cost_j, shape, f"cost_j of ({i}, {j})")
            if self.kind == SYMMETRIC and not is_zero_matrix(cost_j):
                raise ValueError(f"symmetric constraint ({i}, {j}) has a non-zero cost_j")
            checked.append(Constraint(i, j, cost_i, cost_j))
        object.__setattr__(self, "domains", domains)
        object.__setattr__(self, "constraints", tuple(checked))

    @property
    def agent_count(self) -> int:
        return len(self.domains)

    @property
    def edge_count(self) -> int:
        return len(self.constraints)

    @property
    def density(self) -> float:
        n = self.agent_count
        return 0.0 if n < 2 else self.edge_count / (n * (n - 1) / 2)

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        """Sorted neighbor indices per agent."""
        adj: list[set] = [set() for _ in self.domains]
        for c in self.constraints:
            adj[c.i].add(c.j)
            adj[c.j].add(c.i)
        return tuple(tuple(sorted(s)) for s in adj)

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(c.pair for c in self.constraints)

    @cached_property
    def side_costs(self) -> tuple[dict, ...]:
        """``side_costs[a][b][va][vb]``: the cost agent ``a`` perceives on {a, b}.

        For symmetric problems both endpoints perceive the shared cost.
        """
        side: list[dict] = [{} for _ in self.domains]
        for c in self.constraints:
            side[c.i][c.j] = c.cost_i
            other = c.cost_i if self.kind == SYMMETRIC else c.cost_j
            side[c.j][c.i] = tuple(zip(*other))
        return tuple(side)

    @cached_property
    def side_columns(self) -> tuple[dict, ...]:
        """``side_columns[a][b][vb]``: tuple over ``va`` of ``a``'s side cost."""
        return tuple(
            {b: tuple(zip(*m)) for b, m in per_agent.items()} for per_agent in self.side_costs
        )

    @cached_property
    def _totals(self) -> tuple[tuple[int, int, Matrix], ...]:
        out = []
        for c in self.constraints:
            if self.kind == SYMMETRIC:
                out.append((c.i, c.j, c.cost_i))
            else:
                out.append(
                    (c.i, c.j, tuple(tuple(a + b for a, b in zip(r1, r2))
                                     for r1, r2 in zip(c.cost_i, c.cost_j)))
                )
        return tuple(out)

    def constraint_between(self, a: int, b: int) -> Optional[Constraint]:
        for c in self.constraints:
            if (c.i, c.j) in ((a, b), (b, a)):
                return c
        return None

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "domains": list(self.domains),
            "constraints": [
                {
                    "i": c.i,
                    "j": c.j,
                    "cost_i": [list(r) for r in c.cost_i],
                    "cost_j": [list(r) for r in c.cost_j],
                }
                for c in self.constraints
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ProblemInstance":
        try:
            constraints = tuple(
                Constraint(int(c["i"]), int(c["j"]), c["cost_i"], c["cost_j"])
                for c in doc["constraints"]
            )
            return cls(tuple(doc["domains"]), constraints, doc.get("kind", SYMMETRIC))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed problem document: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "ProblemInstance":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Assignment:
    """Per-agent value index, ``None`` for an unassigned agent."""

    values: tuple[Optional[int], ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))

    @classmethod
    def empty(cls, n: int) -> "Assignment":
        return cls((None,) * n)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, agent: int) -> Optional[int]:
        return self.values[agent]

    def __iter__(self):
        return iter(self.values)

    @property
    def is_complete(self) -> bool:
        return all(v is not None for v in self.values)

    def with_value(self, agent: int, value: Optional[int]) -> "Assignment":
        vals = list(self.values)
        vals[agent] = value
        return Assignment(tuple(vals))


def check_assignment(assignment: Assignment | Sequence, inst: ProblemInstance,
                     complete: bool = False) -> Assignment:
    if not isinstance(assignment, Assignment):
        assignment = Assignment(tuple(None if v is None else int(v) for v in assignment))
    if len(assignment) != inst.agent_count:
        raise ValueError(
            f"assignment covers {len(assignment)} agents, problem has {inst.agent_count}"
        )
    for a, v in enumerate(assignment.values):
        if v is not None and not 0 <= v < inst.domains[a]:
            raise ValueError(f"value {v} outside the domain of agent {a}")
    if complete and not assignment.is_complete:
        raise PreconditionError("assignment is incomplete")
    return assignment


def _check_agent_value(agent: int, value: int, inst: ProblemInstance):
    if not 0 <= agent < inst.agent_count:
        raise ValueError(f"unknown agent {agent}")
    if not 0 <= value < inst.domains[agent]:
        raise ValueError(f"value {value} outside the domain of agent {agent}")


def local_cost(agent: int, value: int, cpa: Assignment | Sequence, inst: ProblemInstance,
               counters=None):
    """Agent-side cost of ``agent`` taking ``value`` against the assigned part of ``cpa``.

    ``counters``, when given, has its ``evaluations`` field bumped once per
    matrix cell read.
    """
    _check_agent_value(agent, value, inst)
    side = inst.side_costs[agent]
    total = 0
    reads = 0
    for b in inst.neighbors[agent]:
        vb = cpa[b]
        if vb is not None:
            total += side[b][value][vb]
            reads += 1
    if counters is not None:
        counters.evaluations += reads
    return total


def local_costs(agent: int, cpa: Assignment | Sequence, inst: ProblemInstance,
                counters=None) -> list:
    """``local_cost`` for every value of ``agent``'s domain."""
    cols = inst.side_columns[agent]
    vecs = [cols[b][cpa[b]] for b in inst.neighbors[agent] if cpa[b] is not None]
    if counters is not None:
        counters.evaluations += len(vecs) * inst.domains[agent]
    if not vecs:
        return [0] * inst.domains[agent]
    return [sum(t) for t in zip(*vecs)]


def global_cost(assignment: Assignment | Sequence, inst: ProblemInstance, counters=None):
    """Sum of both sides of every constraint at the assigned value pair."""
    values = assignment.values if isinstance(assignment, Assignment) else assignment
    if len(values) != inst.agent_count or any(v is None for v in values):
        raise PreconditionError("global_cost needs a complete assignment")
    if counters is not None:
        per = 1 if inst.kind == SYMMETRIC else 2
        counters.evaluations += per * inst.edge_count
    return sum(m[values[i]][values[j]] for i, j, m in inst._totals)


def best_response(agent: int, cpa: Assignment | Sequence, inst: ProblemInstance,
                  counters=None) -> tuple[int, float]:
    """Lowest-cost value for ``agent`` given ``cpa``; ties go to the lowest index."""
    if not 0 <= agent < inst.agent_count:
        raise ValueError(f"unknown agent {agent}")
    costs = local_costs(agent, cpa, inst, counters)
    best = min(costs)
    return costs.index(best), best


def argmin_all(costs: Iterable) -> list[int]:
    costs = list(costs)
    best = min(costs)
    return [k for k, c in enumerate(costs) if c == best]


def coloring_instance(n: int, edges: Iterable[tuple[int, int]], colors: int) -> ProblemInstance:
    """Symmetric unit-conflict graph-coloring instance on ``edges``."""
    m = unit_conflict_matrix(colors)
    zero = tuple((0,) * colors for _ in range(colors))
    cons = tuple(Constraint(i, j, m, zero) for i, j in edges)
    return ProblemInstance((colors,) * n, cons, SYMMETRIC)
