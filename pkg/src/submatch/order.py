"""Order-embedding geometry: violation energy, max-margin loss, thresholded
prediction, and the elementwise-minimum intersection.

The violation E(z_q, z_u) = ||max{0, z_q - z_u}||^2 is zero exactly when z_q
is dominated coordinate-wise by z_u, which is how the embedding space encodes
"query neighborhood is a subgraph of target neighborhood".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad


@dataclass(frozen=True)
class MarginConfig:
    margin: float = 1.0  # required violation for negatives in the loss
    threshold: float = 0.5  # violation cutoff for predicting subgraph

    def __post_init__(self) -> None:
        if self.margin <= 0.0:
            raise ValueError("margin must be positive")
        if self.threshold <= 0.0:
            raise ValueError("threshold must be positive")
        if self.threshold >= self.margin:
            raise ValueError("threshold must be below the negative margin")


def violation(z_q: np.ndarray, z_u: np.ndarray) -> float:
    """E(z_q, z_u): squared norm of the positive part of z_q - z_u."""
    z_q = np.asarray(z_q, dtype=np.float64)
    z_u = np.asarray(z_u, dtype=np.float64)
    if z_q.shape != z_u.shape:
        raise ValueError(f"dimension mismatch: {z_q.shape} vs {z_u.shape}")
    diff = np.maximum(0.0, z_q - z_u)
    return float(np.dot(diff, diff))


def violation_matrix(
    query_embs: np.ndarray, target_embs: np.ndarray, chunk: int = 128
) -> np.ndarray:
    """All-pairs violations: rows are target nodes, columns query nodes.

    Pairs are evaluated in fixed-size chunks, which caps the intermediate
    buffer regardless of graph sizes and keeps the per-score cost uniform.
    """
    q = np.asarray(query_embs, dtype=np.float64)  # (n_q, D)
    t = np.asarray(target_embs, dtype=np.float64)  # (n_t, D)
    if q.ndim != 2 or t.ndim != 2 or q.shape[1] != t.shape[1]:
        raise ValueError(f"dimension mismatch: {q.shape} vs {t.shape}")
    n_t, n_q = t.shape[0], q.shape[0]
    total = n_t * n_q
    t_idx = np.repeat(np.arange(n_t), n_q)
    q_idx = np.tile(np.arange(n_q), n_t)
    out = np.empty(total)
    for start in range(0, total, chunk):
        end = min(start + chunk, total)
        diff = np.maximum(0.0, q[q_idx[start:end]] - t[t_idx[start:end]])
        out[start:end] = np.einsum("ij,ij->i", diff, diff)
    return out.reshape(n_t, n_q)


def predict_subgraph(z_q: np.ndarray, z_u: np.ndarray, cfg: MarginConfig) -> bool:
    """Positive prediction iff the violation is strictly below the threshold."""
    return violation(z_q, z_u) < cfg.threshold


def intersection(z_1: np.ndarray, z_2: np.ndarray) -> np.ndarray:
    """Elementwise minimum; the greatest lower bound under domination."""
    z_1 = np.asarray(z_1, dtype=np.float64)
    z_2 = np.asarray(z_2, dtype=np.float64)
    if z_1.shape != z_2.shape:
        raise ValueError(f"dimension mismatch: {z_1.shape} vs {z_2.shape}")
    if np.any(z_1 < 0) or np.any(z_2 < 0):
        raise ValueError("intersection requires nonnegative embeddings")
    return np.minimum(z_1, z_2)


def margin_loss(
    tape: ad.Tape,
    z_q: ad.Tensor,
    z_u: ad.Tensor,
    labels: np.ndarray,
    cfg: MarginConfig,
) -> ad.Tensor:
    """Max-margin loss over a batch of embedding pairs, summed within batch.

    Positives contribute E(z_q, z_u); negatives contribute max{0, margin - E}.
    z_q and z_u are (B, D) tensors on the tape, labels is a {0,1} vector.
    """
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("batch must be nonempty")
    energies = ad.squared_l2_of_positive_part(tape, z_q, z_u)  # (B,)
    pos_mask = ad.Tensor((labels == 1).astype(np.float64))
    neg_mask = ad.Tensor((labels == 0).astype(np.float64))
    pos_term = ad.mul(tape, energies, pos_mask)
    hinge = ad.relu(tape, ad.add(tape, ad.scale(tape, energies, -1.0),
                                 ad.Tensor(np.full(labels.shape, cfg.margin))))
    neg_term = ad.mul(tape, hinge, neg_mask)
    return ad.sum_all(tape, ad.add(tape, pos_term, neg_term))


def margin_loss_value(
    energies: np.ndarray, labels: np.ndarray, cfg: MarginConfig
) -> float:
    """Loss of precomputed violations, for evaluation without a tape."""
    energies = np.asarray(energies, dtype=np.float64)
    labels = np.asarray(labels)
    pos = energies[labels == 1].sum()
    neg = np.maximum(0.0, cfg.margin - energies[labels == 0]).sum()
    return float(pos + neg)


def calibrate_threshold(
    violations: np.ndarray, labels: np.ndarray, cfg: MarginConfig, n_candidates: int = 100
) -> float:
    """Sweep candidate thresholds over the observed violation range and pick
    the one maximizing balanced accuracy; respects threshold < margin."""
    violations = np.asarray(violations, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.min() == labels.max():
        raise ValueError("calibration needs both classes")
    lo = float(violations.min())
    hi = min(float(violations.max()), cfg.margin)
    candidates = np.linspace(lo, hi, n_candidates + 2)[1:-1]
    candidates = candidates[candidates > 0.0]
    if candidates.size == 0:
        candidates = np.array([cfg.margin / 2.0])
    best_t, best_acc = float(candidates[0]), -1.0
    pos = labels == 1
    neg = ~pos
    for t in candidates:
        pred = violations < t
        tpr = float(pred[pos].mean())
        tnr = float((~pred[neg]).mean())
        balanced = 0.5 * (tpr + tnr)
        if balanced > best_acc:
            best_acc, best_t = balanced, float(t)
    return best_t
