"""Minimal reverse-mode automatic differentiation on dense float64 arrays.

A Tape records every op of a forward pass; backward() walks it once in
reverse and returns gradients for all named leaf tensors. Only the ops the
encoder and loss need are provided; there is no broadcasting beyond bias-add.

Subgradient convention at kinks: relu'(0) = 0, and leaky_relu'(0) = slope.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class Tensor:
    """A dense float64 array, optionally named so backward() reports its grad."""

    __slots__ = ("value", "name")

    def __init__(self, value, name: str | None = None):
        self.value = np.asarray(value, dtype=np.float64)
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape


@dataclass
class Tape:
    """Ordered record of forward ops. record=False skips tracking (inference)."""

    record: bool = True
    nodes: list = field(default_factory=list)
    consumed: bool = False

    def push(self, out: Tensor, parents: tuple[Tensor, ...], backward_fn) -> None:
        if self.record:
            self.nodes.append((out, parents, backward_fn))


def _shapes(*tensors: Tensor) -> str:
    return " vs ".join(str(t.shape) for t in tensors)


def matmul(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {_shapes(a, b)}")
    out = Tensor(a.value @ b.value)

    def backward(g, grads):
        grads.add(a, g @ b.value.T)
        grads.add(b, a.value.T @ g)

    tape.push(out, (a, b), backward)
    return out


def add(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    """Elementwise add; also supports (n,d) + (d,) bias rows."""
    bias_add = a.value.ndim == 2 and b.value.ndim == 1 and a.shape[1] == b.shape[0]
    if not bias_add and a.shape != b.shape:
        raise ValueError(f"add shape mismatch: {_shapes(a, b)}")
    out = Tensor(a.value + b.value)

    def backward(g, grads):
        grads.add(a, g)
        grads.add(b, g.sum(axis=0) if bias_add else g)

    tape.push(out, (a, b), backward)
    return out


def scale(tape: Tape, a: Tensor, c: float) -> Tensor:
    out = Tensor(a.value * c)
    tape.push(out, (a,), lambda g, grads: grads.add(a, g * c))
    return out


def mul(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ValueError(f"mul shape mismatch: {_shapes(a, b)}")
    out = Tensor(a.value * b.value)

    def backward(g, grads):
        grads.add(a, g * b.value)
        grads.add(b, g * a.value)

    tape.push(out, (a, b), backward)
    return out


def leaky_relu(tape: Tape, a: Tensor, slope: float) -> Tensor:
    mask = np.where(a.value > 0.0, 1.0, slope)
    out = Tensor(a.value * mask)
    tape.push(out, (a,), lambda g, grads: grads.add(a, g * mask))
    return out


def relu(tape: Tape, a: Tensor) -> Tensor:
    return leaky_relu(tape, a, 0.0)


# elementwise max{0, x}; identical semantics and subgradient convention
max_with_zero = relu


def concat(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    """Concatenate along the feature axis (columns for 2-D, axis 0 for 1-D)."""
    if a.value.ndim != b.value.ndim or a.value.ndim not in (1, 2):
        raise ValueError(f"concat shape mismatch: {_shapes(a, b)}")
    axis = a.value.ndim - 1
    if axis == 1 and a.shape[0] != b.shape[0]:
        raise ValueError(f"concat shape mismatch: {_shapes(a, b)}")
    out = Tensor(np.concatenate([a.value, b.value], axis=axis))
    split = a.shape[axis]

    def backward(g, grads):
        if axis == 0:
            grads.add(a, g[:split])
            grads.add(b, g[split:])
        else:
            grads.add(a, g[:, :split])
            grads.add(b, g[:, split:])

    tape.push(out, (a, b), backward)
    return out


def group_index(groups) -> tuple[np.ndarray, np.ndarray]:
    """Flatten a per-row neighbor listing into (source, destination) indices."""
    src = np.concatenate([np.asarray(g, dtype=np.intp) for g in groups]) if any(
        len(g) for g in groups
    ) else np.empty(0, dtype=np.intp)
    counts = [len(g) for g in groups]
    dst = np.repeat(np.arange(len(groups), dtype=np.intp), counts)
    return src, dst


def row_sum_aggregate(tape: Tape, h: Tensor, groups, value_sorted: bool = False) -> Tensor:
    """out[i] = sum of h[j] over j in groups[i]; groups may be a list of index
    sequences or a precomputed (src, dst) pair from group_index().

    value_sorted accumulates each group in lexicographic order of the summed
    rows instead of index order, making the float result a function of the
    value multiset alone (used by inference for isomorphism-invariant output).
    """
    if isinstance(groups, tuple) and len(groups) == 2:
        src, dst = groups
        n_out = h.shape[0]
    else:
        src, dst = group_index(groups)
        n_out = len(groups)
    if value_sorted and len(src):
        rows = h.value[src]
        if rows.ndim == 1:
            keys = (rows, dst)
        else:
            keys = tuple(rows[:, c] for c in range(rows.shape[1] - 1, -1, -1)) + (dst,)
        order = np.lexsort(keys)
        src, dst = src[order], dst[order]
    out_val = np.zeros((n_out,) + h.shape[1:], dtype=np.float64)
    np.add.at(out_val, dst, h.value[src])
    out = Tensor(out_val)

    def backward(g, grads):
        gh = np.zeros_like(h.value)
        np.add.at(gh, src, g[dst])
        grads.add(h, gh)

    tape.push(out, (h,), backward)
    return out


def take_rows(tape: Tape, h: Tensor, idx) -> Tensor:
    idx = np.asarray(idx, dtype=np.intp)
    out = Tensor(h.value[idx])

    def backward(g, grads):
        gh = np.zeros_like(h.value)
        np.add.at(gh, idx, g)
        grads.add(h, gh)

    tape.push(out, (h,), backward)
    return out


def squared_l2_of_positive_part(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    """||max{0, a-b}||^2, rowwise for 2-D inputs, scalar for 1-D."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {_shapes(a, b)}")
    pos = np.maximum(0.0, a.value - b.value)
    axis = a.value.ndim - 1
    out = Tensor(np.sum(pos * pos, axis=axis))

    def backward(g, grads):
        g_exp = np.expand_dims(g, axis) if a.value.ndim > 0 else g
        grads.add(a, 2.0 * pos * g_exp)
        grads.add(b, -2.0 * pos * g_exp)

    tape.push(out, (a, b), backward)
    return out


def sum_all(tape: Tape, a: Tensor) -> Tensor:
    out = Tensor(a.value.sum())
    tape.push(out, (a,), lambda g, grads: grads.add(a, np.full_like(a.value, g)))
    return out


def mean(tape: Tape, a: Tensor) -> Tensor:
    n = a.value.size
    out = Tensor(a.value.mean())
    tape.push(out, (a,), lambda g, grads: grads.add(a, np.full_like(a.value, g / n)))
    return out


class _GradStore:
    def __init__(self):
        self.by_id: dict[int, np.ndarray] = {}

    def add(self, t: Tensor, g: np.ndarray) -> None:
        key = id(t)
        if key in self.by_id:
            self.by_id[key] += g
        else:
            self.by_id[key] = np.array(g, dtype=np.float64, copy=True)

    def get(self, t: Tensor):
        return self.by_id.get(id(t))


def backward(tape: Tape, loss: Tensor) -> dict[str, np.ndarray]:
    """Accumulate gradients of a scalar loss; returns {name: grad} for every
    named tensor reached. A tape can only be walked once."""
    if loss.value.ndim != 0:
        raise ValueError(f"loss must be scalar, got shape {loss.shape}")
    if tape.consumed:
        raise RuntimeError("tape already consumed; re-record the forward pass")
    if not tape.record:
        raise RuntimeError("tape was created with record=False")
    tape.consumed = True

    grads = _GradStore()
    grads.add(loss, np.asarray(1.0))
    for out, _parents, backward_fn in reversed(tape.nodes):
        g = grads.get(out)
        if g is not None:
            backward_fn(g, grads)
    named: dict[str, np.ndarray] = {}
    for _out, parents, _fn in tape.nodes:
        for p in parents:
            if p.name is not None and grads.get(p) is not None:
                named[p.name] = grads.get(p)
    return named


@dataclass
class GradCheckReport:
    worst_rel_err: float
    worst_param: str
    worst_coord: int
    passed: bool


def grad_check(
    f, params: dict[str, np.ndarray], h: float = 1e-5, tol: float = 1e-4
) -> GradCheckReport:
    """Compare analytic gradients of f against central finite differences.

    f takes (params: dict[str, Tensor], tape) and returns a scalar Tensor.

    The per-coordinate error is relative to the coordinate's own magnitude,
    floored at a small fraction of the whole gradient's scale: differences on
    coordinates many orders below the dominant gradient are indistinguishable
    from finite-difference roundoff in float64 and must not mask real
    disagreements on coordinates that matter.
    """
    tensors = {k: Tensor(v, name=k) for k, v in params.items()}
    tape = Tape()
    loss = f(tensors, tape)
    analytic = backward(tape, loss)
    grad_scale = max(
        (float(np.abs(g).max()) for g in analytic.values() if g.size), default=0.0
    )
    floor = max(1e-8, 1e-4 * (1.0 + grad_scale))

    def value_at(mutated: dict[str, np.ndarray]) -> float:
        t = {k: Tensor(v, name=k) for k, v in mutated.items()}
        return float(f(t, Tape(record=False)).value)

    worst = (0.0, "", -1)
    for name, arr in params.items():
        a_grad = analytic.get(name, np.zeros_like(arr))
        flat = arr.reshape(-1)
        for i in range(flat.size):
            step = np.array(arr, copy=True).reshape(-1)
            step[i] += h
            up = value_at({**params, name: step.reshape(arr.shape)})
            step[i] -= 2 * h
            down = value_at({**params, name: step.reshape(arr.shape)})
            numeric = (up - down) / (2 * h)
            a = float(a_grad.reshape(-1)[i])
            rel = abs(a - numeric) / max(floor, abs(a) + abs(numeric))
            if rel > worst[0]:
                worst = (rel, name, i)
    return GradCheckReport(
        worst_rel_err=worst[0],
        worst_param=worst[1],
        worst_coord=worst[2],
        passed=worst[0] < tol,
    )
