"""Zone graph construction and trail decomposition.

The denoiser operates on an undirected simple graph whose nodes are
zones and whose edges come from a k-nearest-neighbor rule over zone
centroids.  For the solver, the edge set is decomposed into
non-overlapping trails: pseudoedges pair up the odd-degree vertices of
each connected component, an Eulerian circuit is found on the augmented
multigraph, and the circuit is cut at the pseudoedges.  Every original
edge appears in exactly one trail.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np


@dataclass
class ZoneGraph:
    """Undirected simple graph over zones.

    nodes are zone ids in sorted order; edges are (i, j) index pairs
    with i < j, deduplicated.  centroids is an (n, 2) lon/lat array or
    None when the graph was built from an explicit edge list.
    """

    nodes: tuple[str, ...]
    edges: tuple[tuple[int, int], ...]
    centroids: np.ndarray | None = None
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {z: i for i, z in enumerate(self.nodes)}
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop on node {self.nodes[i]!r}")
            if not (0 <= i < len(self.nodes) and 0 <= j < len(self.nodes)):
                raise ValueError("edge endpoint outside node set")
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("duplicate edges")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=np.int64)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def adjacency(self) -> list[list[tuple[int, int]]]:
        """Per-node list of (neighbor index, edge id)."""
        adj: list[list[tuple[int, int]]] = [[] for _ in self.nodes]
        for eid, (i, j) in enumerate(self.edges):
            adj[i].append((j, eid))
            adj[j].append((i, eid))
        return adj

    @classmethod
    def from_edges(cls, pairs: Iterable[tuple[str, str]],
                   nodes: Iterable[str] = ()) -> "ZoneGraph":
        """Build a graph from zone-id pairs (plus optional extra nodes)."""
        pairs = [(str(a), str(b)) for a, b in pairs]
        ids = set(nodes)
        for a, b in pairs:
            ids.add(a)
            ids.add(b)
        order = tuple(sorted(ids))
        index = {z: i for i, z in enumerate(order)}
        edges = set()
        for a, b in pairs:
            if a == b:
                raise ValueError(f"self-loop on zone {a!r}")
            i, j = index[a], index[b]
            edges.add((min(i, j), max(i, j)))
        return cls(nodes=order, edges=tuple(sorted(edges)))


def zone_centroids(observations: Iterable[tuple[str, float, float]],
                   registry=None,
                   zone_ids: Iterable[str] = ()) -> tuple[dict[str, tuple[float, float]], Counter]:
    """Compute a centroid per zone from observed points.

    A zone's centroid is the mean lon/lat of all points observed in it.
    Zones with no observations fall back to the vertex average of their
    polygon (``registry``).  Zones with neither a point nor geometry are
    excluded and counted in the returned report under ``no-location``.

    ``zone_ids`` extends the zone universe beyond what was observed
    (e.g. every zone in the geometry file).
    """
    sums: dict[str, list[float]] = {}
    for zone, lon, lat in observations:
        acc = sums.setdefault(str(zone), [0.0, 0.0, 0])
        acc[0] += float(lon)
        acc[1] += float(lat)
        acc[2] += 1

    universe = set(sums)
    universe.update(str(z) for z in zone_ids)
    if registry is not None:
        universe.update(registry.zone_ids())

    report: Counter = Counter()
    centroids: dict[str, tuple[float, float]] = {}
    for zone in sorted(universe):
        if zone in sums:
            sx, sy, n = sums[zone]
            centroids[zone] = (sx / n, sy / n)
        elif registry is not None and registry.has_zone(zone):
            centroids[zone] = registry.vertex_centroid(zone)
            report["polygon-fallback"] += 1
        else:
            report["no-location"] += 1
    return centroids, report


def knn_graph(centroids: Mapping[str, tuple[float, float]], k: int = 4,
              metric: str = "degrees") -> ZoneGraph:
    """k-nearest-neighbor graph over zone centroids.

    An edge (r, s) exists iff s is among the k nearest centroids of r or
    vice versa (union symmetrization).  Distances are Euclidean on raw
    lon/lat degrees by default; ``metric="projected"`` rescales
    longitude by cos(mean latitude) first.  Distance ties break in
    zone-id order.
    """
    if len(centroids) < 2:
        raise ValueError("need at least 2 zones to build a graph")
    if k < 1:
        raise ValueError("k must be >= 1")
    ids = tuple(sorted(centroids))
    pts = np.array([centroids[z] for z in ids], dtype=float)
    if metric == "projected":
        pts = pts.copy()
        pts[:, 0] *= np.cos(np.deg2rad(pts[:, 1].mean()))
    elif metric != "degrees":
        raise ValueError(f"unknown metric {metric!r}")

    n = len(ids)
    kk = min(k, n - 1)
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d2, np.inf)

    edges = set()
    for i in range(n):
        # Stable sort: equal distances keep ascending zone-id order.
        order = np.argsort(d2[i], kind="stable")[:kk]
        for j in order:
            j = int(j)
            edges.add((min(i, j), max(i, j)))
    return ZoneGraph(nodes=ids, edges=tuple(sorted(edges)), centroids=pts)


@dataclass
class TrailDecomposition:
    """Trails covering every graph edge exactly once.

    Each trail is a walk given as a list of node indices (length =
    edge count + 1; a closed circuit repeats its start node at the
    end).  ``pseudoedge_counts`` has one entry per edge-bearing
    connected component.
    """

    trails: list[list[int]]
    pseudoedge_counts: list[int]

    @property
    def n_trail_positions(self) -> int:
        return sum(len(t) for t in self.trails)


def _euler_circuit(n_nodes: int, mult_edges: list[tuple[int, int]],
                   start: int) -> list[tuple[int, int]]:
    """Eulerian circuit on a connected multigraph with all degrees even.

    Returns the traversal as a list of (edge_id, head_vertex) pairs;
    the tail of each edge is the head of the previous one (the first
    tail is ``start``).
    """
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n_nodes)]
    for eid, (u, v) in enumerate(mult_edges):
        adj[u].append((v, eid))
        adj[v].append((u, eid))
    used = [False] * len(mult_edges)
    ptr = [0] * n_nodes

    stack: list[tuple[int, int]] = [(start, -1)]
    rev: list[tuple[int, int]] = []
    while stack:
        v, ein = stack[-1]
        moved = False
        while ptr[v] < len(adj[v]):
            nb, eid = adj[v][ptr[v]]
            ptr[v] += 1
            if not used[eid]:
                used[eid] = True
                stack.append((nb, eid))
                moved = True
                break
        if not moved:
            stack.pop()
            if ein >= 0:
                rev.append((ein, v))
    rev.reverse()
    return rev


def decompose_trails(graph: ZoneGraph) -> TrailDecomposition:
    """Decompose the graph's edges into non-overlapping trails.

    Per connected component with 2k odd-degree vertices (k >= 1), k
    pseudoedges pair the odd vertices in ascending zone-id order; the
    Eulerian circuit of the augmented multigraph is cut at the
    pseudoedges, yielding k trails.  A component with no odd vertices
    yields its circuit as a single trail.  Pseudoedges never appear in
    the output.
    """
    n = graph.n_nodes
    adj = graph.adjacency()

    # Connected components over nodes that carry at least one edge.
    comp = [-1] * n
    comps: list[list[int]] = []
    for s in range(n):
        if comp[s] >= 0 or not adj[s]:
            continue
        cid = len(comps)
        comps.append([])
        queue = [s]
        comp[s] = cid
        while queue:
            v = queue.pop()
            comps[cid].append(v)
            for nb, _ in adj[v]:
                if comp[nb] < 0:
                    comp[nb] = cid
                    queue.append(nb)

    trails: list[list[int]] = []
    pseudo_counts: list[int] = []
    deg = graph.degrees()
    for members in comps:
        members.sort()
        comp_set = set(members)
        comp_edges = [(i, j) for (i, j) in graph.edges if i in comp_set]
        n_real = len(comp_edges)

        odd = [v for v in members if deg[v] % 2 == 1]
        mult = list(comp_edges)
        for p in range(0, len(odd), 2):
            mult.append((odd[p], odd[p + 1]))
        n_pseudo = len(odd) // 2
        pseudo_counts.append(n_pseudo)

        circuit = _euler_circuit(n, mult, members[0])
        if n_pseudo == 0:
            walk = [members[0]] + [head for _, head in circuit]
            trails.append(walk)
            continue

        # Rotate so the circuit starts at a pseudoedge, then cut.
        first = next(i for i, (eid, _) in enumerate(circuit) if eid >= n_real)
        rotated = circuit[first:] + circuit[:first]
        segment: list[int] = []
        for eid, head in rotated:
            if eid >= n_real:
                if len(segment) > 1:
                    trails.append(segment)
                segment = [head]
            else:
                segment.append(head)
        if len(segment) > 1:
            trails.append(segment)

    return TrailDecomposition(trails=trails, pseudoedge_counts=pseudo_counts)


def dump_edges(graph: ZoneGraph) -> str:
    """Edge list as text, one ``zone_a,zone_b`` pair per line."""
    lines = [f"{graph.nodes[i]},{graph.nodes[j]}" for i, j in graph.edges]
    return "\n".join(lines) + ("\n" if lines else "")


def dump_trails(graph: ZoneGraph, decomposition: TrailDecomposition) -> str:
    """Trail dump as text: ``trail_index,zone,zone,...`` per line."""
    lines = []
    for t, walk in enumerate(decomposition.trails):
        lines.append(",".join([str(t)] + [graph.nodes[v] for v in walk]))
    return "\n".join(lines) + ("\n" if lines else "")
