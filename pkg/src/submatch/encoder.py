"""Graph neural encoder mapping anchored neighborhoods to order embeddings.

Architecture: GIN-style sum aggregation, h' = MLP(h + sum of neighbor h),
with skip connections realized by concatenating each layer's input onto its
output, so layer k sees all previous scales. Every node carries an anchor
indicator in its input features, which lets the encoder tell apart d-regular
neighborhoods that plain message passing cannot. The anchor node's final
representation goes through a linear head and a max{0, .} clamp so embeddings
stay in the nonnegative orthant the order geometry requires.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import autodiff as ad
from .graphs import (
    AnchoredNeighborhood,
    GraphError,
    LabeledGraph,
    k_hop_neighborhood,
    structural_features,
)
from .order import MarginConfig
from .util import atomic_write_text, stable_hash

CHECKPOINT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class EncoderConfig:
    layers: int = 8
    hidden_dim: int = 64
    output_dim: int = 64
    leaky_slope: float = 0.01
    use_structural_features: bool = True
    label_alphabet_size: int = 1
    edge_label_count: int = 0  # 0 disables per-edge-label message weights
    nonneg_output: bool = True

    def __post_init__(self) -> None:
        if self.layers < 1 or self.hidden_dim < 1 or self.output_dim < 1:
            raise ValueError("layers, hidden_dim, output_dim must be >= 1")
        if not 0.0 < self.leaky_slope < 1.0:
            raise ValueError("leaky_slope must lie in (0, 1)")
        if self.label_alphabet_size < 1:
            raise ValueError("label_alphabet_size must be >= 1")
        if not self.nonneg_output:
            raise ValueError("nonneg_output is fixed true for order embeddings")

    @property
    def input_dim(self) -> int:
        return 1 + self.label_alphabet_size + (2 if self.use_structural_features else 0)

    def layer_input_dim(self, k: int) -> int:
        """Width seen by layer k (0-based): original features plus k skip blocks."""
        return self.input_dim + k * self.hidden_dim

    @property
    def final_dim(self) -> int:
        return self.layer_input_dim(self.layers)


def expected_param_shapes(cfg: EncoderConfig) -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {}
    for k in range(cfg.layers):
        d = cfg.layer_input_dim(k)
        shapes[f"layer{k}.w1"] = (d, cfg.hidden_dim)
        shapes[f"layer{k}.b1"] = (cfg.hidden_dim,)
        shapes[f"layer{k}.w2"] = (cfg.hidden_dim, cfg.hidden_dim)
        shapes[f"layer{k}.b2"] = (cfg.hidden_dim,)
        for lab in range(cfg.edge_label_count):
            shapes[f"layer{k}.edge{lab}"] = (d, d)
    shapes["out.w"] = (cfg.final_dim, cfg.output_dim)
    shapes["out.b"] = (cfg.output_dim,)
    return shapes


def init_params(cfg: EncoderConfig, seed: int = 0) -> dict[str, np.ndarray]:
    """Glorot-uniform weights; zero biases except the output bias at +0.1,
    which keeps fresh models off the clamp's zero-gradient region.

    The output head starts at a fraction of its Glorot bound: concatenated
    skip features have large correlated components, and a full-scale head can
    push every pre-clamp coordinate negative at init, freezing the model.
    """
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in expected_param_shapes(cfg).items():
        if name.endswith(".b1") or name.endswith(".b2"):
            params[name] = np.zeros(shape)
        elif name == "out.b":
            params[name] = np.full(shape, 0.1)
        else:
            bound = np.sqrt(6.0 / (shape[0] + shape[-1]))
            if name == "out.w":
                bound *= 0.05
            elif ".w1" in name:
                # sum aggregation scales activations by roughly one plus the
                # average degree per layer; compensate so early training sees
                # violations on the order of the margin instead of exploding
                bound *= 0.2
            params[name] = rng.uniform(-bound, bound, size=shape)
    return params


def build_input_features(n: AnchoredNeighborhood, cfg: EncoderConfig) -> np.ndarray:
    """Per-node rows: [anchor flag] + one-hot(label) + optional [degree, clustering]."""
    g = n.graph
    feats = np.zeros((g.node_count, cfg.input_dim))
    for v in range(g.node_count):
        lab = g.node_labels[v]
        if lab >= cfg.label_alphabet_size:
            raise GraphError(
                f"node label {lab} outside encoder alphabet of size "
                f"{cfg.label_alphabet_size}"
            )
        feats[v, 0] = 1.0 if v == n.anchor else 0.0
        feats[v, 1 + lab] = 1.0
        if cfg.use_structural_features:
            deg, clust = structural_features(g, v)
            feats[v, 1 + cfg.label_alphabet_size] = float(deg)
            feats[v, 2 + cfg.label_alphabet_size] = clust
    return feats


class _Block:
    """Disjoint union of a batch of neighborhoods, encoded in one pass."""

    def __init__(self, neighborhoods: list[AnchoredNeighborhood], cfg: EncoderConfig):
        feats = []
        anchors = []
        offset = 0
        groups: list[list[int]] = []
        label_groups: list[list[list[int]]] = [
            [] for _ in range(max(cfg.edge_label_count, 0))
        ]
        for nh in neighborhoods:
            feats.append(build_input_features(nh, cfg))
            anchors.append(offset + nh.anchor)
            g = nh.graph
            for v in range(g.node_count):
                groups.append([offset + w for w in g.adjacency[v]])
                for lab in range(cfg.edge_label_count):
                    label_groups[lab].append(
                        [
                            offset + w
                            for w in g.adjacency[v]
                            if (g.edge_label(v, w) or 0) == lab
                        ]
                    )
            offset += g.node_count
        self.features = np.concatenate(feats, axis=0) if feats else np.zeros((0, cfg.input_dim))
        self.anchors = np.asarray(anchors, dtype=np.intp)
        self.index = ad.group_index(groups)
        self.label_indexes = [ad.group_index(gs) for gs in label_groups]


def _forward(
    tape: ad.Tape,
    block: _Block,
    params: dict[str, ad.Tensor],
    cfg: EncoderConfig,
    canonical: bool = False,
) -> ad.Tensor:
    # canonical mode accumulates neighbor sums in value order, which makes the
    # output a bit-exact isomorphism invariant; training keeps the fast path
    x = ad.Tensor(block.features)
    for k in range(cfg.layers):
        if cfg.edge_label_count > 0:
            agg = x
            for lab in range(cfg.edge_label_count):
                msg = ad.row_sum_aggregate(
                    tape, x, block.label_indexes[lab], value_sorted=canonical
                )
                agg = ad.add(tape, agg, ad.matmul(tape, msg, params[f"layer{k}.edge{lab}"]))
        else:
            agg = ad.add(
                tape, x, ad.row_sum_aggregate(tape, x, block.index, value_sorted=canonical)
            )
        h = ad.add(tape, ad.matmul(tape, agg, params[f"layer{k}.w1"]), params[f"layer{k}.b1"])
        h = ad.leaky_relu(tape, h, cfg.leaky_slope)
        h = ad.add(tape, ad.matmul(tape, h, params[f"layer{k}.w2"]), params[f"layer{k}.b2"])
        x = ad.concat(tape, h, x)
    final = ad.take_rows(tape, x, block.anchors)
    z = ad.add(tape, ad.matmul(tape, final, params["out.w"]), params["out.b"])
    return ad.relu(tape, z)


def _as_tensors(params: dict[str, np.ndarray]) -> dict[str, ad.Tensor]:
    return {k: ad.Tensor(v, name=k) for k, v in params.items()}


def encode_batch(
    tape: ad.Tape,
    neighborhoods: list[AnchoredNeighborhood],
    params: dict[str, ad.Tensor],
    cfg: EncoderConfig,
) -> ad.Tensor:
    """Embed a batch of neighborhoods; returns a (B, D) tensor on the tape."""
    return _forward(tape, _Block(neighborhoods, cfg), params, cfg)


def encode(
    n: AnchoredNeighborhood,
    params: dict[str, np.ndarray],
    cfg: EncoderConfig,
    tape: ad.Tape | None = None,
):
    """Embedding of one neighborhood.

    Without a tape: inference mode, returns a (D,) array whose bits depend
    only on the isomorphism class of the anchored neighborhood. With a
    recording tape: returns a (1, D) tensor using the training-path
    aggregation order (gradients flow; bits may differ from inference by
    float rounding).
    """
    if tape is not None:
        return encode_batch(tape, [n], _as_tensors(params), cfg)
    out = _forward(
        ad.Tape(record=False), _Block([n], cfg), _as_tensors(params), cfg, canonical=True
    )
    return out.value[0]


def encode_all(
    g: LabeledGraph,
    k: int,
    params: dict[str, np.ndarray],
    cfg: EncoderConfig,
    workers: int = 1,
    chunk_size: int = 64,
) -> dict[int, np.ndarray]:
    """Embedding of every node's k-hop neighborhood, each computed exactly as
    an individual encode() call. Chunks may run on a thread pool; results
    merge by node id, so worker count never changes the output."""
    tensors = _as_tensors(params)
    nodes = list(range(g.node_count))
    chunks = [nodes[i : i + chunk_size] for i in range(0, len(nodes), chunk_size)]

    def run(chunk: list[int]) -> list[np.ndarray]:
        out = []
        for u in chunk:
            nh = k_hop_neighborhood(g, u, k)
            z = _forward(
                ad.Tape(record=False), _Block([nh], cfg), tensors, cfg, canonical=True
            )
            out.append(z.value[0])
        return out

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(c) for c in chunks]
    out: dict[int, np.ndarray] = {}
    for chunk, vals in zip(chunks, results):
        for u, z in zip(chunk, vals):
            out[u] = z
    return out


@dataclass
class Checkpoint:
    """Trained model artifact: encoder config + parameters + decision config.

    radius records the hop radius the model was trained at and is the default
    neighborhood radius for indexing and querying.
    """

    config: EncoderConfig
    params: dict[str, np.ndarray]
    margin: MarginConfig
    decision_cutoff: float = 0.5
    radius: int = 4

    def fingerprint(self) -> str:
        payload = {
            "config": asdict(self.config),
            "params": {k: v.tolist() for k, v in sorted(self.params.items())},
            "margin": asdict(self.margin),
            "decision_cutoff": self.decision_cutoff,
            "radius": self.radius,
        }
        return stable_hash(payload)


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    obj = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "config": asdict(ckpt.config),
        "margin": asdict(ckpt.margin),
        "decision_cutoff": ckpt.decision_cutoff,
        "radius": ckpt.radius,
        "params": {
            name: {"shape": list(arr.shape), "values": arr.reshape(-1).tolist()}
            for name, arr in sorted(ckpt.params.items())
        },
    }
    atomic_write_text(path, json.dumps(obj))


class CheckpointError(ValueError):
    pass


def load_checkpoint(path) -> Checkpoint:
    with open(path) as fh:
        obj = json.load(fh)
    if obj.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint format_version {obj.get('format_version')!r}"
        )
    cfg = EncoderConfig(**obj["config"])
    expected = expected_param_shapes(cfg)
    params: dict[str, np.ndarray] = {}
    for name, entry in obj["params"].items():
        if name not in expected:
            raise CheckpointError(f"unexpected parameter {name!r}")
        shape = tuple(entry["shape"])
        if shape != expected[name]:
            raise CheckpointError(
                f"parameter {name!r} has shape {shape}, expected {expected[name]}"
            )
        params[name] = np.asarray(entry["values"], dtype=np.float64).reshape(shape)
    missing = sorted(set(expected) - set(params))
    if missing:
        raise CheckpointError(f"missing parameters: {missing}")
    return Checkpoint(
        config=cfg,
        params=params,
        margin=MarginConfig(**obj["margin"]),
        decision_cutoff=float(obj.get("decision_cutoff", 0.5)),
        radius=int(obj.get("radius", 4)),
    )
