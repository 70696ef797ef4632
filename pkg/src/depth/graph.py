"""
Depth graph over shape layers.

An edge i -> j means layer i is above layer j. Cycles are broken by deleting,
one cycle at a time, the cycle edge with the largest hull symmetric
difference V; Kahn's algorithm then linearizes the graph into ranks (rank 0
is the topmost layer).
"""

import heapq
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from ..geometry.energy import (
    HullCache, OrderingRelation, classify, depth_energy,
    hull_symmetric_difference, subset_shortcut
)
from ..layers.extraction import LayerSet
from ..errors import DepthCycleError

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]

# AUTO switches to adjacent pairs above this many layers
ALL_PAIRS_LIMIT = 64


class PairSelection(Enum):
    ALL = "all"
    ADJACENT = "adjacent"
    AUTO = "auto"


@dataclass
class RemovedEdge:
    source: int
    target: int
    energy: float
    v_value: int


@dataclass
class DepthGraph:
    """Directed depth graph with stored D values and a lazy V cache."""
    node_count: int
    edges: Dict[Edge, float] = field(default_factory=dict)
    v_cache: Dict[Edge, int] = field(default_factory=dict)
    removed: List[RemovedEdge] = field(default_factory=list)

    def add_edge(self, i: int, j: int, energy: float):
        if i == j:
            raise ValueError("self-edges are not allowed")
        if (i, j) in self.edges or (j, i) in self.edges:
            raise ValueError(f"pair ({i}, {j}) already has an edge")
        self.edges[(i, j)] = energy

    def successors(self, i: int) -> List[int]:
        return sorted(j for (a, j) in self.edges if a == i)

    def copy(self) -> "DepthGraph":
        return DepthGraph(self.node_count, dict(self.edges), dict(self.v_cache), list(self.removed))


@dataclass
class DepthOrdering:
    """rank[layer id] = depth rank, 0 = topmost."""
    rank: List[int]

    def order(self) -> List[int]:
        """Layer ids from top to bottom."""
        return sorted(range(len(self.rank)), key=lambda i: self.rank[i])


def select_pairs(layer_set: LayerSet, pairs: PairSelection) -> List[Edge]:
    n = len(layer_set)
    if pairs == PairSelection.AUTO:
        pairs = PairSelection.ALL if n <= ALL_PAIRS_LIMIT else PairSelection.ADJACENT
    if pairs == PairSelection.ALL:
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    return sorted(layer_set.adjacent_pairs())


def build_graph(layer_set: LayerSet, delta: float = 0.05,
                pairs: PairSelection = PairSelection.AUTO,
                cache: Optional[HullCache] = None) -> DepthGraph:
    """Pairwise ordering: subset shortcut first, thresholded D otherwise."""
    cache = cache or HullCache()
    graph = DepthGraph(node_count=len(layer_set))
    layers = layer_set.layers

    for i, j in select_pairs(layer_set, pairs):
        a, b = layers[i], layers[j]
        if subset_shortcut(a, b, cache) == OrderingRelation.ABOVE:
            graph.add_edge(i, j, depth_energy(a, b, cache))
            continue
        if subset_shortcut(b, a, cache) == OrderingRelation.ABOVE:
            graph.add_edge(j, i, depth_energy(b, a, cache))
            continue

        D = depth_energy(a, b, cache)
        relation = classify(D, delta)
        if relation == OrderingRelation.ABOVE:
            graph.add_edge(i, j, D)
        elif relation == OrderingRelation.BELOW:
            graph.add_edge(j, i, -D)

    logger.info("depth graph: %d nodes, %d edges", graph.node_count, len(graph.edges))
    return graph


def find_cycle(graph: DepthGraph) -> Optional[List[Edge]]:
    """One directed cycle as an edge list, found by DFS from the lowest node id."""
    adjacency: Dict[int, List[int]] = {i: [] for i in range(graph.node_count)}
    for (a, b) in sorted(graph.edges):
        adjacency[a].append(b)
    WHITE, GRAY, BLACK = 0, 1, 2
    color = [WHITE] * graph.node_count

    for root in range(graph.node_count):
        if color[root] != WHITE:
            continue
        path = [root]
        iters = [iter(adjacency[root])]
        color[root] = GRAY
        while path:
            node = path[-1]
            nxt = next(iters[-1], None)
            if nxt is None:
                color[node] = BLACK
                path.pop()
                iters.pop()
                continue
            if color[nxt] == GRAY:
                # back edge closes a cycle
                cycle_nodes = path[path.index(nxt):]
                return [(cycle_nodes[k], cycle_nodes[(k + 1) % len(cycle_nodes)])
                        for k in range(len(cycle_nodes))]
            if color[nxt] == WHITE:
                color[nxt] = GRAY
                path.append(nxt)
                iters.append(iter(adjacency[nxt]))
    return None


def break_cycles(graph: DepthGraph, layer_set: LayerSet,
                 cache: Optional[HullCache] = None) -> DepthGraph:
    """Remove the max-V edge of one cycle at a time until the graph is acyclic."""
    cache = cache or HullCache()
    result = graph.copy()
    layers = layer_set.layers

    while True:
        cycle = find_cycle(result)
        if cycle is None:
            break
        for edge in cycle:
            if edge not in result.v_cache:
                i, j = edge
                result.v_cache[edge] = hull_symmetric_difference(layers[i], layers[j], cache)
        # largest V wins; lowest (i, j) among equals
        victim = min(cycle, key=lambda e: (-result.v_cache[e], e))
        energy = result.edges.pop(victim)
        result.removed.append(RemovedEdge(victim[0], victim[1], energy, result.v_cache[victim]))
        logger.info("cycle %s broken at %d->%d (V=%d)",
                    "->".join(str(e[0]) for e in cycle), victim[0], victim[1],
                    result.v_cache[victim])

    return result


def topo_sort(graph: DepthGraph, layer_set: LayerSet) -> DepthOrdering:
    """Kahn's algorithm; among ready sources the smaller area goes on top."""
    n = graph.node_count
    areas = [layer.area for layer in layer_set.layers]
    in_degree = [0] * n
    successors: Dict[int, List[int]] = {i: [] for i in range(n)}
    for (i, j) in graph.edges:
        successors[i].append(j)
        in_degree[j] += 1

    ready = [(areas[i], i) for i in range(n) if in_degree[i] == 0]
    heapq.heapify(ready)
    rank = [-1] * n
    position = 0
    while ready:
        _, node = heapq.heappop(ready)
        rank[node] = position
        position += 1
        for m in successors[node]:
            in_degree[m] -= 1
            if in_degree[m] == 0:
                heapq.heappush(ready, (areas[m], m))

    if position != n:
        raise DepthCycleError("depth graph still has a cycle; break_cycles was skipped")
    return DepthOrdering(rank=rank)
