"""Labeled undirected graphs and anchored k-hop neighborhoods.

The graph representation is immutable after construction so that samplers,
matchers and encoders can share instances across workers without copying.
"""

from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, field


class GraphError(ValueError):
    """Raised when a graph or neighborhood violates a structural invariant."""


EdgeLabels = dict[tuple[int, int], int]


def _edge_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class LabeledGraph:
    """Undirected graph with categorical node labels and optional edge labels.

    adjacency[u] is the sorted tuple of neighbors of u. Node labels are ids in
    [0, label_alphabet_size). Edge labels, when present, map the unordered
    pair (min(u,v), max(u,v)) to a categorical id.
    """

    node_count: int
    adjacency: tuple[tuple[int, ...], ...]
    node_labels: tuple[int, ...]
    label_alphabet_size: int
    edge_labels: EdgeLabels | None = None

    def __post_init__(self) -> None:
        if self.node_count < 0:
            raise GraphError("node_count must be nonnegative")
        if len(self.adjacency) != self.node_count:
            raise GraphError("adjacency length does not match node_count")
        if len(self.node_labels) != self.node_count:
            raise GraphError("node_labels length does not match node_count")
        for u, nbrs in enumerate(self.adjacency):
            if list(nbrs) != sorted(set(nbrs)):
                raise GraphError(f"adjacency[{u}] must be sorted and duplicate-free")
            for v in nbrs:
                if not 0 <= v < self.node_count:
                    raise GraphError(f"neighbor {v} of node {u} out of range")
                if v == u:
                    raise GraphError(f"self-loop at node {u}")
                if u not in self.adjacency[v]:
                    raise GraphError(f"edge {u}-{v} is not symmetric")
        for u, lab in enumerate(self.node_labels):
            if not 0 <= lab < self.label_alphabet_size:
                raise GraphError(
                    f"node {u} has label {lab} outside alphabet of size "
                    f"{self.label_alphabet_size}"
                )
        if self.edge_labels is not None:
            for (u, v) in self.edge_labels:
                if u >= v:
                    raise GraphError(f"edge label key ({u},{v}) is not ordered")
                if v not in self.adjacency[u]:
                    raise GraphError(f"edge label on missing edge {u}-{v}")

    @staticmethod
    def from_edges(
        node_count: int,
        edges: list[tuple[int, int]],
        node_labels: list[int] | None = None,
        label_alphabet_size: int | None = None,
        edge_labels: EdgeLabels | None = None,
    ) -> "LabeledGraph":
        """Build a graph from an edge list, deduplicating undirected edges."""
        nbrs: list[set[int]] = [set() for _ in range(node_count)]
        for u, v in edges:
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise GraphError(f"edge ({u},{v}) references a missing node")
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            nbrs[u].add(v)
            nbrs[v].add(u)
        labels = list(node_labels) if node_labels is not None else [0] * node_count
        alphabet = (
            label_alphabet_size
            if label_alphabet_size is not None
            else (max(labels) + 1 if labels else 1)
        )
        return LabeledGraph(
            node_count=node_count,
            adjacency=tuple(tuple(sorted(s)) for s in nbrs),
            node_labels=tuple(labels),
            label_alphabet_size=alphabet,
            edge_labels=dict(edge_labels) if edge_labels else None,
        )

    @property
    def edge_count(self) -> int:
        return sum(len(n) for n in self.adjacency) // 2

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.node_count) for v in self.adjacency[u] if u < v]

    def degree(self, u: int) -> int:
        return len(self.adjacency[u])

    def edge_label(self, u: int, v: int) -> int | None:
        if self.edge_labels is None:
            return None
        return self.edge_labels.get(_edge_key(u, v))

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adjacency[u]

    def is_connected(self) -> bool:
        if self.node_count == 0:
            return True
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in self.adjacency[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == self.node_count

    def bfs_distances(self, source: int, max_depth: int | None = None) -> dict[int, int]:
        """Hop distance from source to every reachable node (within max_depth)."""
        if not 0 <= source < self.node_count:
            raise GraphError(f"invalid node id {source}")
        dist = {source: 0}
        queue = deque([source])
        while queue:
            u = queue.popleft()
            if max_depth is not None and dist[u] >= max_depth:
                continue
            for v in self.adjacency[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    def induced_on(self, nodes: list[int]) -> "LabeledGraph":
        """Edge-induced subgraph on a node subset, renumbered by list position."""
        index = {old: new for new, old in enumerate(nodes)}
        edges = []
        edge_labels: EdgeLabels = {}
        for old_u in nodes:
            for old_v in self.adjacency[old_u]:
                if old_v in index and old_u < old_v:
                    nu, nv = index[old_u], index[old_v]
                    edges.append((nu, nv))
                    lab = self.edge_label(old_u, old_v)
                    if lab is not None:
                        edge_labels[_edge_key(nu, nv)] = lab
        return LabeledGraph.from_edges(
            node_count=len(nodes),
            edges=edges,
            node_labels=[self.node_labels[u] for u in nodes],
            label_alphabet_size=self.label_alphabet_size,
            edge_labels=edge_labels if self.edge_labels is not None else None,
        )

    def fingerprint(self) -> str:
        return hashlib.sha256(to_json(self).encode()).hexdigest()


@dataclass(frozen=True)
class AnchoredNeighborhood:
    """A connected subgraph with a distinguished anchor node and hop radius.

    Extraction renumbers nodes so the anchor is id 0. ``origin`` optionally
    records where the neighborhood came from as (source graph id, source node).
    """

    graph: LabeledGraph
    anchor: int
    radius: int
    origin: tuple[str, int] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not 0 <= self.anchor < self.graph.node_count:
            raise GraphError(f"anchor {self.anchor} is not a valid node id")
        if self.radius < 0:
            raise GraphError("radius must be nonnegative")
        dist = self.graph.bfs_distances(self.anchor)
        if len(dist) != self.graph.node_count:
            raise GraphError("neighborhood graph is not connected")
        if dist and max(dist.values()) > self.radius:
            raise GraphError("node beyond declared radius from anchor")

    @property
    def node_count(self) -> int:
        return self.graph.node_count


def k_hop_neighborhood(g: LabeledGraph, u: int, k: int) -> AnchoredNeighborhood:
    """Edge-induced subgraph on all nodes within k hops of u, anchored at u.

    Nodes are renumbered in BFS order from the anchor, ties broken by original
    id, so identical inputs always produce identical neighborhoods.
    """
    if not 0 <= u < g.node_count:
        raise GraphError(f"invalid node id {u}")
    if k < 0:
        raise GraphError("hop count must be nonnegative")
    dist = g.bfs_distances(u, max_depth=k)
    order = sorted(dist, key=lambda n: (dist[n], n))
    sub = g.induced_on(order)
    return AnchoredNeighborhood(graph=sub, anchor=0, radius=k)


def structural_features(g: LabeledGraph, u: int) -> tuple[int, float]:
    """(degree, clustering coefficient) of node u; clustering is 0 when deg < 2."""
    if not 0 <= u < g.node_count:
        raise GraphError(f"invalid node id {u}")
    nbrs = g.adjacency[u]
    deg = len(nbrs)
    if deg < 2:
        return deg, 0.0
    nbr_set = set(nbrs)
    links = sum(1 for a in nbrs for b in g.adjacency[a] if b in nbr_set) // 2
    return deg, 2.0 * links / (deg * (deg - 1))


def to_json(g: LabeledGraph) -> str:
    """Serialize to the JSON interchange format used by the CLI."""
    obj: dict = {
        "nodes": [{"id": i, "label": g.node_labels[i]} for i in range(g.node_count)],
        "edges": [],
    }
    for u, v in g.edges():
        edge: dict = {"u": u, "v": v}
        lab = g.edge_label(u, v)
        if lab is not None:
            edge["label"] = lab
        obj["edges"].append(edge)
    if g.label_alphabet_size != (max(g.node_labels, default=-1) + 1):
        obj["label_alphabet_size"] = g.label_alphabet_size
    return json.dumps(obj, sort_keys=True)


def from_json(text: str) -> LabeledGraph:
    """Parse the JSON interchange format; ids must be 0-based and contiguous."""
    obj = json.loads(text)
    nodes = obj["nodes"]
    ids = sorted(n["id"] for n in nodes)
    if ids != list(range(len(nodes))):
        raise GraphError("node ids must be 0-based and contiguous")
    labels = [0] * len(nodes)
    for n in nodes:
        labels[n["id"]] = int(n.get("label", 0))
    edges = []
    edge_labels: EdgeLabels = {}
    any_edge_label = False
    for e in obj["edges"]:
        u, v = int(e["u"]), int(e["v"])
        edges.append((u, v))
        if "label" in e:
            any_edge_label = True
            edge_labels[_edge_key(u, v)] = int(e["label"])
    return LabeledGraph.from_edges(
        node_count=len(nodes),
        edges=edges,
        node_labels=labels,
        label_alphabet_size=obj.get("label_alphabet_size"),
        edge_labels=edge_labels if any_edge_label else None,
    )


def load_graph(path) -> LabeledGraph:
    with open(path) as fh:
        return from_json(fh.read())


def save_graph(g: LabeledGraph, path) -> None:
    from .util import atomic_write_text

    atomic_write_text(path, to_json(g))
