"""Online matching: precomputed target-node embeddings, pairwise neighborhood
decisions, whole-query alignment matrices, and the neighbor-voting refinement.

The offline stage embeds every target node once; a query then costs one pass
over its own nodes plus |V_T| * |V_Q| coordinate comparisons, with no search.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .encoder import Checkpoint, encode_all
from .graphs import LabeledGraph
from .order import MarginConfig, predict_subgraph, violation, violation_matrix
from .util import atomic_write_text

INDEX_FORMAT_VERSION = 1


class IndexError_(ValueError):
    """Raised when a persisted index does not match the graph or checkpoint."""


@dataclass
class EmbeddingIndex:
    graph_fingerprint: str
    radius: int
    matrix: np.ndarray  # row u = embedding of node u's k-hop neighborhood
    checkpoint_fingerprint: str

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2:
            raise IndexError_("embedding matrix must be 2-D")

    @property
    def node_count(self) -> int:
        return self.matrix.shape[0]

    def embedding(self, u: int) -> np.ndarray:
        return self.matrix[u]


def build_index(
    g: LabeledGraph, checkpoint: Checkpoint, k: int | None = None, workers: int = 1
) -> EmbeddingIndex:
    """Embed every node of g over its k-hop neighborhood (k defaults to the
    radius the checkpoint was trained at)."""
    radius = checkpoint.radius if k is None else k
    embs = encode_all(g, radius, checkpoint.params, checkpoint.config, workers=workers)
    matrix = np.stack([embs[u] for u in range(g.node_count)]) if g.node_count else (
        np.zeros((0, checkpoint.config.output_dim))
    )
    return EmbeddingIndex(
        graph_fingerprint=g.fingerprint(),
        radius=radius,
        matrix=matrix,
        checkpoint_fingerprint=checkpoint.fingerprint(),
    )


def save_index(index: EmbeddingIndex, path) -> None:
    obj = {
        "format_version": INDEX_FORMAT_VERSION,
        "graph_fingerprint": index.graph_fingerprint,
        "radius": index.radius,
        "checkpoint_fingerprint": index.checkpoint_fingerprint,
        "embeddings": index.matrix.tolist(),
    }
    atomic_write_text(path, json.dumps(obj))


def load_index(path, checkpoint: Checkpoint | None = None) -> EmbeddingIndex:
    with open(path) as fh:
        obj = json.load(fh)
    if obj.get("format_version") != INDEX_FORMAT_VERSION:
        raise IndexError_(f"unsupported index format_version {obj.get('format_version')!r}")
    index = EmbeddingIndex(
        graph_fingerprint=obj["graph_fingerprint"],
        radius=int(obj["radius"]),
        matrix=np.asarray(obj["embeddings"], dtype=np.float64),
        checkpoint_fingerprint=obj["checkpoint_fingerprint"],
    )
    if checkpoint is not None and index.checkpoint_fingerprint != checkpoint.fingerprint():
        raise IndexError_("index was built with a different checkpoint")
    return index


def match_neighborhoods(
    q_emb: np.ndarray, u_emb: np.ndarray, cfg: MarginConfig
) -> tuple[bool, float]:
    """Pairwise neighborhood decision plus the raw violation score."""
    return predict_subgraph(q_emb, u_emb, cfg), violation(q_emb, u_emb)


def embed_query_nodes(
    query: LabeledGraph, checkpoint: Checkpoint, k: int, workers: int = 1
) -> np.ndarray:
    """Embedding of every query node's k-hop neighborhood within the query."""
    embs = encode_all(query, k, checkpoint.params, checkpoint.config, workers=workers)
    return np.stack([embs[q] for q in range(query.node_count)])


@dataclass
class AlignmentMatrix:
    """Violations E(z_q, z_u); rows are target nodes, columns query nodes."""

    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or np.any(self.values < 0):
            raise ValueError("alignment entries must form a nonnegative matrix")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def to_csv(self) -> str:
        n_t, n_q = self.values.shape
        header = "target_node," + ",".join(f"q{j}" for j in range(n_q))
        lines = [header]
        for i in range(n_t):
            lines.append(str(i) + "," + ",".join(f"{v:.8g}" for v in self.values[i]))
        return "\n".join(lines) + "\n"


def alignment(
    query: LabeledGraph,
    index: EmbeddingIndex,
    checkpoint: Checkpoint,
    query_embs: np.ndarray | None = None,
    workers: int = 1,
) -> AlignmentMatrix:
    """Fill all |V_T| x |V_Q| violation scores for a connected query."""
    if not query.is_connected():
        raise ValueError("query graph must be connected")
    if query_embs is None:
        query_embs = embed_query_nodes(query, checkpoint, index.radius, workers=workers)
    return AlignmentMatrix(values=violation_matrix(query_embs, index.matrix))


@dataclass(frozen=True)
class Decision:
    score: float  # mean of the thresholded indicator over all entries
    decision: bool
    mean_violation: float  # raw mean entry, the threshold-free score for AUROC


def decide(
    matrix: AlignmentMatrix,
    cfg: MarginConfig,
    cutoff: float = 0.5,
    vote_mask: np.ndarray | None = None,
) -> Decision:
    """Aggregate the alignment matrix into a single subgraph decision.

    The score is the mean of the indicator E < threshold (optionally and-ed
    with a voting mask); the decision compares it to a calibrated cutoff.
    """
    indicator = matrix.values < cfg.threshold
    if vote_mask is not None:
        indicator = indicator & vote_mask
    score = float(indicator.mean()) if indicator.size else 0.0
    return Decision(
        score=score,
        decision=score > cutoff,
        mean_violation=float(matrix.values.mean()) if matrix.values.size else 0.0,
    )


def _distance_shells(g: LabeledGraph, source: int, max_hops: int) -> list[list[int]]:
    dist = g.bfs_distances(source, max_depth=max_hops)
    shells: list[list[int]] = [[] for _ in range(max_hops + 1)]
    for node, d in dist.items():
        shells[d].append(node)
    for shell in shells:
        shell.sort()
    return shells


def vote(
    query: LabeledGraph,
    q: int,
    target: LabeledGraph,
    u: int,
    query_embs: np.ndarray,
    target_embs: np.ndarray,
    hops: int,
    cfg: MarginConfig,
) -> bool:
    """Neighbor-consistency vote for matching q onto u.

    Walks hop shells outward (hop 0 first, so a vote refines the plain
    pairwise decision): every query node at hop k must find some target node
    at hop k whose embedding dominates it within the threshold; the first
    query node with no such partner rejects the pair.
    """
    q_shells = _distance_shells(query, q, hops)
    u_shells = _distance_shells(target, u, hops)
    for k in range(hops + 1):
        if not q_shells[k]:
            break
        if not u_shells[k]:
            return False
        v = violation_matrix(query_embs[q_shells[k]], target_embs[u_shells[k]])
        if np.any(v.min(axis=0) >= cfg.threshold):
            return False
    return True


def calibrate_decision_cutoff(scores, labels) -> float:
    """Pick the mean-indicator cutoff maximizing balanced accuracy on labeled
    validation decisions; midpoint between the best separating pair."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    if labels.all() or (~labels).all():
        return 0.5
    candidates = np.unique(scores)
    mids = (candidates[:-1] + candidates[1:]) / 2.0 if len(candidates) > 1 else candidates
    best_cut, best_acc = 0.5, -1.0
    for c in mids:
        pred = scores > c
        tpr = float(pred[labels].mean())
        tnr = float((~pred[~labels]).mean())
        acc = 0.5 * (tpr + tnr)
        if acc > best_acc:
            best_acc, best_cut = acc, float(c)
    return best_cut


def vote_mask_for(
    matrix: AlignmentMatrix,
    query: LabeledGraph,
    target: LabeledGraph,
    query_embs: np.ndarray,
    index: EmbeddingIndex,
    cfg: MarginConfig,
    hops: int | None = None,
) -> np.ndarray:
    """Voting indicator for every alignment entry. Entries already above the
    threshold are skipped: voting with hop-0 included can only reject."""
    if hops is None:
        hops = index.radius
    passing = matrix.values < cfg.threshold
    mask = np.zeros_like(passing)
    for t_node, q_node in zip(*np.nonzero(passing)):
        mask[t_node, q_node] = vote(
            query, int(q_node), target, int(t_node),
            query_embs, index.matrix, hops, cfg,
        )
    return mask
