"""Metrics and the runtime/success-rate benchmark harness."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .exact import MatchBudget, MatchOutcome, is_subgraph
from .graphs import LabeledGraph
from .util import atomic_write_text


def auroc(scores, labels) -> float:
    """Probability that a random positive outranks a random negative, ties
    counting one half (Mann-Whitney U formulation)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be equal-length vectors")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auroc needs both classes present")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    ranks[order] = np.arange(1, len(scores) + 1)
    # average ranks within tied groups
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        if j > i:
            ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def confusion(decisions, labels) -> dict[str, int]:
    """2x2 counts keyed tp/fp/fn/tn."""
    decisions = np.asarray(decisions, dtype=bool)
    labels = np.asarray(labels, dtype=bool)
    if decisions.shape != labels.shape:
        raise ValueError("decisions and labels must have equal length")
    return {
        "tp": int((decisions & labels).sum()),
        "fp": int((decisions & ~labels).sum()),
        "fn": int((~decisions & labels).sum()),
        "tn": int((~decisions & ~labels).sum()),
    }


@dataclass(frozen=True)
class BenchInstance:
    instance_id: str
    query: LabeledGraph
    target: LabeledGraph
    oracle_label: bool | None = None


def _bfs_subgraph(
    g: LabeledGraph, max_nodes: int, rng: np.random.Generator, keep_prob: float = 0.7
) -> LabeledGraph:
    """Connected random-BFS subgraph of g, returned as a standalone graph."""
    from .sampling import SamplerConfig, random_bfs_sample

    starts = [u for u in range(g.node_count) if g.degree(u) > 0]
    u = starts[int(rng.integers(len(starts)))] if starts else 0
    cfg = SamplerConfig(
        strategy="random_bfs",
        edge_keep_probability=keep_prob,
        max_nodes=max(1, max_nodes),
    )
    return random_bfs_sample(g, u, cfg, rng).graph


def _perturbed_query(
    base: LabeledGraph, rng: np.random.Generator, extra_edges: int = 3
) -> LabeledGraph:
    """Densify a sampled subgraph with extra chords; the result usually stops
    being a subgraph of the source and fails fast in the exact matcher."""
    edges = base.edges()
    non_edges = [
        (a, b)
        for a in range(base.node_count)
        for b in range(a + 1, base.node_count)
        if not base.has_edge(a, b)
    ]
    take = min(extra_edges, len(non_edges))
    if take:
        idx = rng.choice(len(non_edges), size=take, replace=False)
        edges = edges + [non_edges[int(i)] for i in idx]
    return LabeledGraph.from_edges(
        base.node_count, edges, list(base.node_labels), base.label_alphabet_size
    )


def make_problem1_instances(
    targets: list[LabeledGraph],
    n_instances: int,
    rng: np.random.Generator,
    query_ratio: float = 0.5,
    oracle_budget: MatchBudget | None = None,
    require_labels: bool = True,
) -> list[BenchInstance]:
    """Whole-graph (query, target) decision instances, half positive.

    Positives are sampled subgraphs (true by construction). Negatives mix
    chord-densified subgraphs and cross-graph queries; when require_labels is
    set they are certified non-subgraphs by the exact matcher, resampling on
    accidental positives or oracle timeouts.
    """
    budget = oracle_budget or MatchBudget(max_states=2_000_000, wall_timeout=10.0)
    instances: list[BenchInstance] = []
    i = 0
    guard = 0
    while len(instances) < n_instances and guard < 50 * n_instances:
        guard += 1
        target = targets[int(rng.integers(len(targets)))]
        max_q = max(2, int(round(query_ratio * target.node_count)))
        want_positive = len(instances) % 2 == 0
        if want_positive:
            query = _bfs_subgraph(target, max_q, rng)
            if query.node_count < 2:
                continue
            instances.append(
                BenchInstance(f"i{i:04d}", query, target, oracle_label=True)
            )
            i += 1
            continue
        if rng.random() < 0.5 and len(targets) > 1:
            others = [t for t in targets if t is not target]
            query = _bfs_subgraph(others[int(rng.integers(len(others)))], max_q, rng)
        else:
            query = _perturbed_query(_bfs_subgraph(target, max_q, rng), rng)
        if query.node_count < 2 or not query.is_connected():
            continue
        if require_labels:
            outcome = is_subgraph(query, target, budget)
            if outcome is not MatchOutcome.FALSE:
                continue
            instances.append(
                BenchInstance(f"i{i:04d}", query, target, oracle_label=False)
            )
        else:
            instances.append(BenchInstance(f"i{i:04d}", query, target))
        i += 1
    return instances


@dataclass
class BenchResult:
    method: str
    instance_id: str
    n_query: int
    n_target: int
    time_s: float
    success: bool
    decision: bool | None
    label: bool | None = None
    score: float | None = None

    def __post_init__(self) -> None:
        if self.time_s < 0:
            raise ValueError("wall time must be nonnegative")


def bench_exact(
    instances: list[BenchInstance], timeout: float = 20.0, max_states: int = 500_000_000
) -> list[BenchResult]:
    """Run the backtracking matcher per instance; timing covers only the
    decision, never oracle-label computation."""
    budget = MatchBudget(max_states=max_states, wall_timeout=timeout)
    results = []
    for inst in instances:
        start = time.perf_counter()
        outcome = is_subgraph(inst.query, inst.target, budget)
        elapsed = time.perf_counter() - start
        results.append(
            BenchResult(
                method="exact",
                instance_id=inst.instance_id,
                n_query=inst.query.node_count,
                n_target=inst.target.node_count,
                time_s=elapsed,
                success=outcome.is_decided,
                decision=outcome.is_true if outcome.is_decided else None,
                label=inst.oracle_label,
                score=None,
            )
        )
    return results


def bench_neural(
    instances: list[BenchInstance],
    checkpoint,
    use_vote: bool = False,
    workers: int = 1,
) -> tuple[list[BenchResult], dict[str, float]]:
    """Time the online query path with indexes prebuilt. Index-build wall time
    is reported separately as the offline cost."""
    from .query import (
        alignment,
        build_index,
        decide,
        embed_query_nodes,
        vote_mask_for,
    )

    method = "neural_vote" if use_vote else "neural"
    index_time = 0.0
    indexes = {}
    for inst in instances:
        key = inst.target.fingerprint()
        if key not in indexes:
            start = time.perf_counter()
            indexes[key] = build_index(inst.target, checkpoint, workers=workers)
            index_time += time.perf_counter() - start
    results = []
    for inst in instances:
        index = indexes[inst.target.fingerprint()]
        start = time.perf_counter()
        query_embs = embed_query_nodes(inst.query, checkpoint, index.radius)
        matrix = alignment(inst.query, index, checkpoint, query_embs=query_embs)
        vote_mask = None
        if use_vote:
            vote_mask = vote_mask_for(
                matrix, inst.query, inst.target, query_embs, index, checkpoint.margin
            )
        verdict = decide(
            matrix, checkpoint.margin, checkpoint.decision_cutoff, vote_mask=vote_mask
        )
        elapsed = time.perf_counter() - start
        results.append(
            BenchResult(
                method=method,
                instance_id=inst.instance_id,
                n_query=inst.query.node_count,
                n_target=inst.target.node_count,
                time_s=elapsed,
                success=True,
                decision=verdict.decision,
                label=inst.oracle_label,
                # threshold-free score for AUROC: low mean violation = likely subgraph
                score=-verdict.mean_violation,
            )
        )
    return results, {"index_build_s": index_time, "n_indexes": float(len(indexes))}


def bench(
    methods: list[str],
    instances: list[BenchInstance],
    checkpoint=None,
    timeout: float = 20.0,
) -> tuple[list[BenchResult], dict]:
    """Run the named methods over shared instances; returns per-instance rows
    plus a summary with success curves binned by query size."""
    all_results: list[BenchResult] = []
    meta: dict = {}
    for method in methods:
        if method == "exact":
            all_results.extend(bench_exact(instances, timeout=timeout))
        elif method in ("neural", "neural_vote"):
            if checkpoint is None:
                raise ValueError(f"method {method!r} needs a checkpoint")
            results, offline = bench_neural(
                instances, checkpoint, use_vote=(method == "neural_vote")
            )
            all_results.extend(results)
            meta[method] = offline
        else:
            raise ValueError(f"unknown method {method!r}")
    return all_results, summarize(all_results, meta)


def summarize(results: list[BenchResult], meta: dict | None = None) -> dict:
    summary: dict = {"methods": {}, "offline": meta or {}}
    by_method: dict[str, list[BenchResult]] = {}
    for r in results:
        by_method.setdefault(r.method, []).append(r)
    for method, rows in by_method.items():
        sizes = sorted({r.n_query for r in rows})
        curve = []
        for size in sizes:
            at = [r for r in rows if r.n_query == size]
            curve.append(
                {
                    "n_query": size,
                    "success_rate": float(np.mean([r.success for r in at])),
                    "mean_time_s": float(np.mean([r.time_s for r in at])),
                }
            )
        entry: dict = {
            "success_rate": float(np.mean([r.success for r in rows])),
            "mean_time_s": float(np.mean([r.time_s for r in rows])),
            "by_query_size": curve,
        }
        labeled = [r for r in rows if r.label is not None and r.score is not None]
        if labeled:
            labels = np.array([1 if r.label else 0 for r in labeled])
            if labels.min() != labels.max():
                entry["auroc"] = auroc(
                    np.array([r.score for r in labeled]), labels
                )
        summary["methods"][method] = entry
    return summary


def results_to_csv(results: list[BenchResult]) -> str:
    lines = ["method,instance_id,n_query,n_target,time_s,success,decision,label"]
    for r in results:
        decision = "" if r.decision is None else str(int(r.decision))
        label = "" if r.label is None else str(int(r.label))
        lines.append(
            f"{r.method},{r.instance_id},{r.n_query},{r.n_target},"
            f"{r.time_s:.6f},{int(r.success)},{decision},{label}"
        )
    return "\n".join(lines) + "\n"


def write_bench_outputs(results: list[BenchResult], summary: dict, csv_path, json_path) -> None:
    atomic_write_text(csv_path, results_to_csv(results))
    atomic_write_text(json_path, json.dumps(summary, indent=2, sort_keys=True))
