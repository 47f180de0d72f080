"""Topological graph of visited waypoints with predicted-time edges."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class TopoNode:
    obs: np.ndarray
    gps: np.ndarray
    visits: int = 1


@dataclass
class TopoGraph:
    nodes: dict[int, TopoNode] = field(default_factory=dict)
    adj: dict[int, dict[int, float]] = field(default_factory=dict)
    _next_id: int = 0

    def __len__(self) -> int:
        return len(self.nodes)

    def new_node(self, obs: np.ndarray, gps: np.ndarray) -> int:
        nid = self._next_id
        self._next_id += 1
        self.nodes[nid] = TopoNode(np.asarray(obs, dtype=np.float64),
                                   np.asarray(gps, dtype=np.float64))
        self.adj[nid] = {}
        return nid

    def add_edge(self, a: int, b: int, weight: float) -> None:
        if weight < 0:
            raise ValueError("edge weights must be nonnegative")
        if a == b:
            return
        old = self.adj[a].get(b, math.inf)
        w = min(old, float(weight))
        self.adj[a][b] = w
        self.adj[b][a] = w

    def edges(self):
        for a, nbrs in self.adj.items():
            for b, w in nbrs.items():
                if a < b:
                    yield a, b, w

    def increment_visits(self, nid: int) -> int:
        self.nodes[nid].visits += 1
        return self.nodes[nid].visits


def dijkstra(graph: TopoGraph, src: int):
    """Distances and predecessors from src over the undirected graph."""
    if src not in graph.nodes:
        raise KeyError(f"unknown node {src}")
    dist = {src: 0.0}
    prev: dict[int, int] = {}
    heap = [(0.0, src)]
    done: set[int] = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, w in graph.adj[u].items():
            nd = d + w
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    return dist, prev


def shortest_path_cost(graph: TopoGraph, a: int, b: int) -> float:
    """Ticks along the cheapest path, or math.inf when unreachable."""
    if a not in graph.nodes or b not in graph.nodes:
        raise KeyError("both endpoints must exist in the graph")
    if a == b:
        return 0.0
    dist, _ = dijkstra(graph, a)
    return dist.get(b, math.inf)


def shortest_path(graph: TopoGraph, a: int, b: int) -> list[int] | None:
    """Node sequence a..b along the cheapest path, or None when unreachable."""
    if a == b:
        return [a]
    dist, prev = dijkstra(graph, a)
    if b not in dist:
        return None
    path = [b]
    while path[-1] != a:
        path.append(prev[path[-1]])
    return path[::-1]


def graph_add_node(graph: TopoGraph, obs, gps, model,
                   edge_connect_threshold: float = 30.0,
                   close_threshold: float | None = None):
    """Insert an observed position, or fold it into a matching node.

    A close-predicate match increments that node's count and returns its id.
    A new node gets edges to every node whose symmetric predicted distance
    falls under the threshold. Returns (node_id, created, edges_added).
    """
    obs = np.asarray(obs, dtype=np.float64)
    gps = np.asarray(gps, dtype=np.float64)
    if not graph.nodes:
        return graph.new_node(obs, gps), True, []
    ids = list(graph.nodes)
    existing = np.stack([graph.nodes[i].obs for i in ids])
    tiled = np.tile(obs[None, :], (len(ids), 1))
    d_out = model.temporal_distances(tiled, existing)   # new -> existing
    eps = model.close_threshold if close_threshold is None else close_threshold
    matches = [k for k in range(len(ids)) if d_out[k] < eps]
    if matches:
        best = min(matches, key=lambda k: d_out[k])
        nid = ids[best]
        graph.increment_visits(nid)
        return nid, False, []
    d_in = model.temporal_distances(existing, tiled)    # existing -> new
    sym = 0.5 * (d_out + d_in)
    nid = graph.new_node(obs, gps)
    edges = []
    for k, other in enumerate(ids):
        if sym[k] < edge_connect_threshold:
            graph.add_edge(nid, other, float(sym[k]))
            edges.append((other, float(sym[k])))
    return nid, True, edges
