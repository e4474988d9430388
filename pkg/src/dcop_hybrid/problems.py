"""Benchmark generators and graph utilities.

Families:

``delaunay_coloring``
    points uniform in the unit square, Delaunay edges, unit-conflict coloring.
``scale_free_asymmetric``
    preferential-attachment graph with independent per-side integer costs.
``random_density_coloring``
    exactly ``round(d * n(n-1)/2)`` uniformly sampled edges, unit-conflict coloring.
``bridge_demo``
    two 10-node clusters joined by the single bridge {0, 10}.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Iterable, Optional

import numpy as np
from scipy.spatial import Delaunay, QhullError

from .model import (
    ASYMMETRIC,
    Assignment,
    Constraint,
    ProblemInstance,
    coloring_instance,
)

FAMILIES = ("delaunay_coloring", "scale_free_asymmetric", "random_density_coloring", "bridge_demo")


@dataclass(frozen=True)
class GeneratorConfig:
    family: str = "delaunay_coloring"
    n: int = 200
    colors: int = 3
    density: float = 0.1
    attach_m: int = 2
    domain_size: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family: expected one of {FAMILIES}, got {self.family!r}")
        if self.n < 1:
            raise ValueError(f"n: must be >= 1, got {self.n}")
        if not 0.0 <= self.density <= 1.0:
            raise ValueError(f"density: must lie in [0, 1], got {self.density}")
        if self.family.endswith("coloring") and self.colors < 2:
            raise ValueError(f"colors: must be >= 2, got {self.colors}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed: must be a 64-bit unsigned integer, got {self.seed}")

    @classmethod
    def from_dict(cls, doc: dict) -> "GeneratorConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown generator fields: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return asdict(self)

    def with_seed(self, seed: int) -> "GeneratorConfig":
        return GeneratorConfig(**{**asdict(self), "seed": int(seed)})


def generate(config: GeneratorConfig) -> ProblemInstance:
    if config.family == "delaunay_coloring":
        return gen_delaunay_coloring(config.n, config.colors, config.seed)
    if config.family == "scale_free_asymmetric":
        return gen_scale_free_asymmetric(config.n, config.attach_m, config.domain_size, config.seed)
    if config.family == "random_density_coloring":
        return gen_random_density_coloring(config.n, config.density, config.colors, config.seed)
    return gen_bridge_demo()


def delaunay_edges(points: np.ndarray) -> list[tuple[int, int]]:
    """Sorted, de-duplicated edge list of the Delaunay triangulation."""
    tri = Delaunay(points)
    if len(tri.coplanar):
        raise QhullError("some points were not triangulated")
    edges = set()
    for a, b, c in tri.simplices:
        for u, v in ((a, b), (b, c), (a, c)):
            edges.add((int(min(u, v)), int(max(u, v))))
    return sorted(edges)


def gen_delaunay_coloring(n: int, colors: int, seed: int) -> ProblemInstance:
    if n < 3:
        raise ValueError("a Delaunay benchmark needs n >= 3")
    rng = np.random.default_rng(int(seed))
    points = rng.random((n, 2))
    while True:
        try:
            edges = delaunay_edges(points)
            break
        except QhullError:
            points = points + rng.normal(scale=1e-9, size=points.shape)
    return coloring_instance(n, edges, colors)


def gen_scale_free_asymmetric(n: int, attach_m: int, domain_size: int, seed: int,
                              max_cost: int = 100) -> ProblemInstance:
    """Barabasi-Albert graph grown from an ``attach_m + 1`` clique, random per-side costs."""
    if not n > attach_m >= 1:
        raise ValueError(f"need n > attach_m >= 1, got n={n}, attach_m={attach_m}")
    rng = np.random.default_rng(int(seed))
    core = attach_m + 1
    edges = [(i, j) for i in range(core) for j in range(i + 1, core)]
    # every node appears once per incident edge, so uniform draws are degree-proportional
    stubs = [v for e in edges for v in e]
    for new in range(core, n):
        targets: list[int] = []
        while len(targets) < attach_m:
            t = stubs[int(rng.integers(len(stubs)))]
            if t not in targets:
                targets.append(t)
        for t in targets:
            edges.append((t, new))
            stubs.extend((t, new))
    shape = (domain_size, domain_size)
    cons = []
    for i, j in edges:
        cost_i = rng.integers(0, max_cost + 1, size=shape).tolist()
        cost_j = rng.integers(0, max_cost + 1, size=shape).tolist()
        cons.append(Constraint(i, j, cost_i, cost_j))
    return ProblemInstance((domain_size,) * n, tuple(cons), ASYMMETRIC)


def gen_random_density_coloring(n: int, density: float, colors: int, seed: int) -> ProblemInstance:
    pairs = n * (n - 1) // 2
    count = round(density * pairs)
    if not 0 < density <= 1 or count < 1:
        raise ValueError(f"density {density} yields no edge for n={n}")
    rng = np.random.default_rng(int(seed))
    chosen = np.sort(rng.choice(pairs, size=count, replace=False))
    rows, cols = np.triu_indices(n, 1)
    edges = list(zip(rows[chosen].tolist(), cols[chosen].tolist()))
    return coloring_instance(n, edges, colors)


BRIDGE_DEMO_SIZE = 20
BRIDGE_HUBS = (0, 10)


def bridge_demo_edges() -> list[tuple[int, int]]:
    edges = set()
    for offset in (0, 10):
        hub = offset
        nodes = list(range(offset, offset + 10))
        for v in nodes[1:]:
            edges.add((hub, v))
        for a, b in zip(nodes, nodes[1:] + nodes[:1]):
            edges.add((min(a, b), max(a, b)))
    edges.add(BRIDGE_HUBS)
    return sorted(edges)


def gen_bridge_demo(colors: int = 3) -> ProblemInstance:
    """Two hub-and-cycle clusters of 10 nodes joined only by the edge {0, 10}."""
    return coloring_instance(BRIDGE_DEMO_SIZE, bridge_demo_edges(), colors)


def is_bridge_demo(inst: ProblemInstance) -> bool:
    return (inst.agent_count == BRIDGE_DEMO_SIZE
            and sorted(inst.edges) == bridge_demo_edges())


def make_unfortunate_assignment(inst: ProblemInstance, seed: int = 0) -> Assignment:
    """Both hubs share color 0, every other node avoids it.

    Non-hub nodes are colored greedily with {1, 2} so that they do not
    conflict among themselves; a node with both colors blocked gets a random
    one of the two.
    """
    if not is_bridge_demo(inst):
        raise ValueError("make_unfortunate_assignment needs the bridge_demo instance")
    rng = np.random.default_rng(int(seed))
    values: list[Optional[int]] = [None] * inst.agent_count
    for hub in BRIDGE_HUBS:
        values[hub] = 0
    for v in range(inst.agent_count):
        if values[v] is not None:
            continue
        taken = {values[b] for b in inst.neighbors[v]}
        free = [c for c in (1, 2) if c not in taken]
        values[v] = free[0] if free else int(rng.choice((1, 2)))
    return Assignment(tuple(values))


def _adjacency(n: int, edges: Iterable[tuple[int, int]]) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    return adj


def find_bridges(inst: ProblemInstance | None = None, *, n: int | None = None,
                 edges: Iterable[tuple[int, int]] | None = None) -> list[tuple[int, int]]:
    """All bridge edges, as sorted ``(low, high)`` pairs, via iterative low-link DFS."""
    if inst is not None:
        n, edges = inst.agent_count, inst.edges
    if n is None or edges is None:
        raise ValueError("pass an instance or both n and edges")
    edges = [(min(a, b), max(a, b)) for a, b in edges]
    adj = _adjacency(n, edges)
    disc = [-1] * n
    low = [0] * n
    clock = 0
    bridges = []
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = clock
        clock += 1
        # (node, parent, skipped-parent-edge flag, neighbor iterator)
        stack = [(root, -1, [False], iter(adj[root]))]
        while stack:
            v, parent, skipped, it = stack[-1]
            advanced = False
            for w in it:
                if w == parent and not skipped[0]:
                    # skip the tree edge once so parallel edges still count
                    skipped[0] = True
                    continue
                if disc[w] == -1:
                    disc[w] = low[w] = clock
                    clock += 1
                    stack.append((w, v, [False], iter(adj[w])))
                    advanced = True
                    break
                low[v] = min(low[v], disc[w])
            if advanced:
                continue
            stack.pop()
            if parent != -1:
                low[parent] = min(low[parent], low[v])
                if low[v] > disc[parent]:
                    bridges.append((min(parent, v), max(parent, v)))
    return sorted(bridges)
