"""Reverse-mode differentiation over dense float64 arrays.

The engine is deliberately small: the primitives below are exactly what the
interaction network needs. Every primitive output is checked finite
(NaN/Inf is an error state, never a value), and gradients accumulate in a
side table rather than on the tensors, so parameter snapshots can be shared
across threads while one graph is being differentiated.
"""

from __future__ import annotations

import itertools
import json
import math
import zlib
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    CheckpointError,
    ContractError,
    MaskError,
    NumericError,
    ShapeError,
)
from .fileio import atomic_write_text, dump_json

_node_ids = itertools.count()

CHECKPOINT_FORMAT_VERSION = 1


class Tensor:
    """A float64 array plus the bookkeeping for reverse mode.

    ``requires_grad`` is True for parameters and for any value computed
    from one; such interior nodes keep references to their parents and a
    vector-Jacobian closure.
    """

    __slots__ = ("values", "requires_grad", "node_id", "_parents", "_vjp", "_op")

    def __init__(self, values, requires_grad: bool = False, _op: str = "leaf"):
        arr = np.asarray(values, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise NumericError(f"non-finite values produced by '{_op}'")
        self.values = arr
        self.requires_grad = bool(requires_grad)
        self.node_id = next(_node_ids)
        self._parents: tuple[Tensor, ...] = ()
        self._vjp: Callable[[np.ndarray], tuple] | None = None
        self._op = _op

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def size(self) -> int:
        return self.values.size

    def item(self) -> float:
        if self.values.size != 1:
            raise ContractError(f"item() on tensor of shape {self.shape}")
        return float(self.values.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.values, _op="detach")

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self._op!r}, grad={self.requires_grad})"

    # Operator sugar; scalars and plain arrays are lifted to constants.
    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        return div(self, _lift(other))

    def __rtruediv__(self, other):
        return div(_lift(other), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, _lift(other))


def _lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x, _op="const")


def _record(op: str, values: np.ndarray, parents: Sequence[Tensor], vjp) -> Tensor:
    if not any(p.requires_grad for p in parents):
        return Tensor(values, _op=op)
    out = Tensor(values, requires_grad=True, _op=op)
    out._parents = tuple(parents)
    out._vjp = vjp
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# ---------------------------------------------------------------------------
# Elementwise primitives


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = _lift(a), _lift(b)
    out = a.values + b.values

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _record("add", out, (a, b), vjp)


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = _lift(a), _lift(b)
    out = a.values - b.values

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _record("sub", out, (a, b), vjp)


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _lift(a), _lift(b)
    out = a.values * b.values

    def vjp(g):
        return (
            _unbroadcast(g * b.values, a.shape),
            _unbroadcast(g * a.values, b.shape),
        )

    return _record("mul", out, (a, b), vjp)


def div(a: Tensor, b: Tensor) -> Tensor:
    a, b = _lift(a), _lift(b)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a.values / b.values

    def vjp(g):
        return (
            _unbroadcast(g / b.values, a.shape),
            _unbroadcast(-g * a.values / (b.values * b.values), b.shape),
        )

    return _record("div", out, (a, b), vjp)


def neg(a: Tensor) -> Tensor:
    a = _lift(a)
    return _record("neg", -a.values, (a,), lambda g: (-g,))


def relu(a: Tensor) -> Tensor:
    a = _lift(a)
    out = np.maximum(a.values, 0.0)
    active = a.values > 0.0
    return _record("relu", out, (a,), lambda g: (g * active,))


def leaky_relu(a: Tensor, slope: float = 0.2) -> Tensor:
    a = _lift(a)
    out = np.where(a.values > 0.0, a.values, slope * a.values)
    factor = np.where(a.values > 0.0, 1.0, slope)
    return _record("leaky_relu", out, (a,), lambda g: (g * factor,))


def exp(a: Tensor) -> Tensor:
    a = _lift(a)
    with np.errstate(over="ignore"):
        out = np.exp(a.values)
    if not np.all(np.isfinite(out)):
        raise NumericError("overflow in 'exp'")
    return _record("exp", out, (a,), lambda g: (g * out,))


def log(a: Tensor) -> Tensor:
    a = _lift(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(a.values)
    if not np.all(np.isfinite(out)):
        raise NumericError("domain error in 'log'")
    return _record("log", out, (a,), lambda g: (g / a.values,))


def tanh(a: Tensor) -> Tensor:
    a = _lift(a)
    out = np.tanh(a.values)
    return _record("tanh", out, (a,), lambda g: (g * (1.0 - out * out),))


# ---------------------------------------------------------------------------
# Structural primitives


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _lift(a), _lift(b)
    if a.values.ndim != 2 or b.values.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shapes do not conform: {a.shape} vs {b.shape}")
    out = a.values @ b.values

    def vjp(g):
        return g @ b.values.T, a.values.T @ g

    return _record("matmul", out, (a, b), vjp)


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    parts = [_lift(p) for p in parts]
    if not parts:
        raise ContractError("concat of an empty sequence")
    try:
        out = np.concatenate([p.values for p in parts], axis=axis)
    except ValueError as err:
        raise ShapeError(f"concat shapes incompatible: {[p.shape for p in parts]}") from err
    sizes = [p.shape[axis] for p in parts]
    offsets = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, offsets, axis=axis))

    return _record("concat", out, parts, vjp)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    a = _lift(a)
    shape = tuple(int(s) for s in shape)
    try:
        out = a.values.reshape(shape)
    except ValueError as err:
        raise ShapeError(f"cannot reshape {a.shape} to {shape}") from err
    return _record("reshape", out, (a,), lambda g: (g.reshape(a.shape),))


def transpose(a: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    a = _lift(a)
    if axes is None:
        axes = tuple(reversed(range(a.values.ndim)))
    axes = tuple(int(x) for x in axes)
    out = np.transpose(a.values, axes)
    inverse = tuple(np.argsort(axes))
    return _record("transpose", out, (a,), lambda g: (np.transpose(g, inverse),))


def select(a: Tensor, index: int, axis: int = -1) -> Tensor:
    """Pick one index along an axis, dropping that axis."""
    a = _lift(a)
    axis = axis % a.values.ndim
    sl = [slice(None)] * a.values.ndim
    sl[axis] = index
    sl = tuple(sl)
    out = a.values[sl]

    def vjp(g):
        da = np.zeros(a.shape)
        da[sl] = g
        return (da,)

    return _record("select", out, (a,), vjp)


# ---------------------------------------------------------------------------
# Reductions and normalizers


def reduce_sum(a: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    a = _lift(a)
    out = a.values.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        gg = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gg, a.shape).copy(),)

    return _record("reduce_sum", out, (a,), vjp)


def max_reduce(a: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    """Maximum along an axis; the gradient routes to the first argmax."""
    a = _lift(a)
    out = a.values.max(axis=axis, keepdims=keepdims)

    def vjp(g):
        da = np.zeros(a.shape)
        if axis is None:
            da.reshape(-1)[int(np.argmax(a.values))] = float(np.asarray(g).reshape(()))
            return (da,)
        ax = axis % a.values.ndim
        idx = np.expand_dims(np.argmax(a.values, axis=ax), ax)
        gg = g if keepdims else np.expand_dims(g, ax)
        np.put_along_axis(da, idx, np.asarray(gg, dtype=np.float64), ax)
        return (da,)

    return _record("max_reduce", out, (a,), vjp)


def softmax(a: Tensor, axis: int = -1, mask: np.ndarray | None = None) -> Tensor:
    """Softmax along ``axis``; masked positions are exactly zero.

    ``mask`` is a boolean array broadcastable to ``a`` (True keeps an
    entry). A slice with no unmasked entries is an error.
    """
    a = _lift(a)
    x = a.values
    if mask is not None:
        m = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
        if not np.all(m.any(axis=axis)):
            raise MaskError("softmax slice with every position masked")
        xm = np.where(m, x, -np.inf)
    else:
        m = None
        xm = x
    shifted = xm - xm.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    if m is not None:
        e = np.where(m, e, 0.0)
    y = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        inner = (g * y).sum(axis=axis, keepdims=True)
        return (y * (g - inner),)

    return _record("softmax", y, (a,), vjp)


def logsumexp(a: Tensor, axis: int = -1) -> Tensor:
    """Stable log-sum-exp along an axis (axis is dropped)."""
    shift = max_reduce(a, axis=axis, keepdims=True).detach()
    total = reduce_sum(exp(sub(a, shift)), axis=axis, keepdims=True)
    out = add(log(total), shift)
    new_shape = [s for i, s in enumerate(out.shape) if i != axis % len(out.shape)]
    return reshape(out, new_shape)


# ---------------------------------------------------------------------------
# Same-size 1-D convolution


def _conv_pads(k: int) -> tuple[int, int]:
    # Even kernels get the extra zero on the left.
    return k // 2, (k - 1) // 2


def conv1d_same(x: Tensor, kernel: Tensor, bias: Tensor | float | None = None) -> Tensor:
    """Cross-correlate each row of ``x`` with ``kernel``, zero-padded so the
    output length equals the input length."""
    x, kernel = _lift(x), _lift(kernel)
    if kernel.values.ndim != 1 or kernel.values.size < 1:
        raise ShapeError(f"conv1d_same kernel must be 1-D, got shape {kernel.shape}")
    if x.values.ndim not in (1, 2):
        raise ShapeError(f"conv1d_same input must be 1-D or 2-D, got shape {x.shape}")
    one_dim = x.values.ndim == 1
    rows = x.values[None, :] if one_dim else x.values
    length = rows.shape[1]
    k = kernel.values.size
    left, right = _conv_pads(k)
    padded = np.pad(rows, ((0, 0), (left, right)))
    out = np.zeros_like(rows)
    for j in range(k):
        out += kernel.values[j] * padded[:, j : j + length]

    parents = [x, kernel]
    bias_t = None
    if bias is not None:
        bias_t = _lift(bias)
        if bias_t.values.size != 1:
            raise ShapeError(f"conv1d_same bias must be scalar, got shape {bias_t.shape}")
        out = out + bias_t.values.reshape(())
        parents.append(bias_t)

    if one_dim:
        out = out[0]

    def vjp(g):
        g2 = g[None, :] if one_dim else g
        dpad = np.zeros((rows.shape[0], length + k - 1))
        dk = np.zeros(k)
        for j in range(k):
            dpad[:, j : j + length] += kernel.values[j] * g2
            dk[j] = float((g2 * padded[:, j : j + length]).sum())
        dx = dpad[:, left : left + length]
        if one_dim:
            dx = dx[0]
        grads = [dx, dk]
        if bias_t is not None:
            grads.append(np.asarray(g2.sum()).reshape(bias_t.shape))
        return tuple(grads)

    return _record("conv1d_same", out, parents, vjp)


# ---------------------------------------------------------------------------
# Parameters


@dataclass(frozen=True)
class InitRecord:
    distribution: str
    seed: int
    low: float = 0.0
    high: float = 0.0
    offset: float = 0.0


def _name_seed(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


class ParamSet:
    """Named learnable tensors with reproducible initialization.

    Each parameter gets its own random stream derived from the base seed
    and the parameter name, so adding or reordering parameters never
    perturbs usage elsewhere.
    """

    def __init__(self, seed: int = 0):
        if seed < 0:
            raise ContractError("ParamSet seed must be non-negative")
        self.seed = int(seed)
        self._params: dict[str, Tensor] = {}
        self._inits: dict[str, InitRecord] = {}

    def add(self, name: str, shape: Sequence[int], fan_in: int, offset: float = 0.0) -> Tensor:
        """Create a parameter initialized uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))."""
        if name in self._params:
            raise ContractError(f"duplicate parameter name {name!r}")
        if fan_in < 1:
            raise ContractError(f"fan_in must be positive for {name!r}")
        bound = 1.0 / math.sqrt(float(fan_in))
        sub_seed = _name_seed(name)
        rng = np.random.default_rng([self.seed, sub_seed])
        values = rng.uniform(-bound, bound, size=tuple(shape)) + offset
        tensor = Tensor(values, requires_grad=True, _op=f"param:{name}")
        self._params[name] = tensor
        self._inits[name] = InitRecord("uniform", sub_seed, -bound, bound, offset)
        return tensor

    def add_values(self, name: str, values) -> Tensor:
        if name in self._params:
            raise ContractError(f"duplicate parameter name {name!r}")
        tensor = Tensor(np.array(values, dtype=np.float64), requires_grad=True, _op=f"param:{name}")
        self._params[name] = tensor
        self._inits[name] = InitRecord("explicit", 0)
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def init_record(self, name: str) -> InitRecord:
        return self._inits[name]

    def set_values(self, name: str, values: np.ndarray) -> None:
        current = self._params[name]
        arr = np.asarray(values, dtype=np.float64)
        if arr.shape != current.shape:
            raise ShapeError(f"parameter {name!r}: cannot assign {arr.shape} over {current.shape}")
        self._params[name] = Tensor(arr, requires_grad=True, _op=f"param:{name}")

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: p.values.copy() for name, p in self._params.items()}


# ---------------------------------------------------------------------------
# Differentiation


def _topo_order(output: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(output, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(output: Tensor, params: ParamSet) -> dict[str, Tensor]:
    """Differentiate a scalar output with respect to every parameter.

    Parameters the output does not depend on get zero gradients of the
    matching shape.
    """
    if output.values.size != 1:
        raise ContractError(f"backward needs a scalar output, got shape {output.shape}")
    grads: dict[int, np.ndarray] = {id(output): np.ones(output.shape)}
    if output.requires_grad:
        for node in reversed(_topo_order(output)):
            g = grads.pop(id(node), None)
            if g is None or node._vjp is None:
                continue
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient at '{node._op}'")
            for parent, pg in zip(node._parents, node._vjp(g)):
                if pg is None or not parent.requires_grad:
                    continue
                pid = id(parent)
                if pid in grads:
                    grads[pid] = grads[pid] + pg
                else:
                    grads[pid] = np.asarray(pg, dtype=np.float64)
    result: dict[str, Tensor] = {}
    for name, p in params.items():
        g = grads.get(id(p))
        if g is None:
            g = np.zeros(p.shape)
        result[name] = Tensor(np.asarray(g).reshape(p.shape), _op=f"grad:{name}")
    return result


def finite_difference_grad(
    f: Callable[[ParamSet], float],
    params: ParamSet,
    eps: float = 1e-5,
) -> dict[str, Tensor]:
    """Central-difference gradient oracle: (f(p+eps) - f(p-eps)) / (2 eps)
    per scalar parameter entry. Independent of the reverse-mode path."""
    if not (1e-7 <= eps <= 1e-3):
        raise ContractError(f"eps {eps} outside [1e-7, 1e-3]")
    result: dict[str, Tensor] = {}
    for name, p in params.items():
        base = p.values
        grad = np.zeros(base.size)
        flat = base.reshape(-1)
        for i in range(base.size):
            saved = flat[i]
            flat[i] = saved + eps
            hi = f(params)
            flat[i] = saved - eps
            lo = f(params)
            flat[i] = saved
            if not (math.isfinite(hi) and math.isfinite(lo)):
                raise NumericError(f"non-finite objective while perturbing {name!r}[{i}]")
            grad[i] = (hi - lo) / (2.0 * eps)
        result[name] = Tensor(grad.reshape(base.shape), _op=f"fd_grad:{name}")
    return result


# ---------------------------------------------------------------------------
# Optimization


def sgd_step(params: ParamSet, grads: Mapping[str, Tensor], lr: float) -> ParamSet:
    """Plain gradient descent: p <- p - lr * g for every parameter."""
    if lr <= 0.0:
        raise ContractError(f"learning rate must be positive, got {lr}")
    for name, p in params.items():
        if name not in grads:
            raise ContractError(f"missing gradient for parameter {name!r}")
        g = grads[name]
        g_values = g.values if isinstance(g, Tensor) else np.asarray(g, dtype=np.float64)
        if g_values.shape != p.shape:
            raise ShapeError(f"gradient shape {g_values.shape} != parameter shape {p.shape} for {name!r}")
        params.set_values(name, p.values - lr * g_values)
    return params


def lr_schedule(epoch: int, base_lr: float) -> float:
    """Step decay: multiply the base rate by 0.2 after every 10 epochs."""
    if epoch < 0:
        raise ContractError(f"epoch must be non-negative, got {epoch}")
    if base_lr <= 0.0:
        raise ContractError(f"base_lr must be positive, got {base_lr}")
    return base_lr * 0.2 ** (epoch // 10)


# ---------------------------------------------------------------------------
# Checkpoints


def save_checkpoint(path: str, params: ParamSet, config: Mapping) -> None:
    """Write parameters and config as JSON with bit-faithful float text."""
    blob = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "config": dict(config),
        "params": {
            name: {
                "shape": list(p.shape),
                "values": [float(v) for v in p.values.reshape(-1)],
            }
            for name, p in params.items()
        },
    }
    atomic_write_text(path, dump_json(blob) + "\n")


def load_checkpoint(path: str) -> tuple[dict, dict[str, np.ndarray]]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            blob = json.load(handle)
    except json.JSONDecodeError as err:
        raise CheckpointError(f"{path}: not valid JSON ({err})") from err
    if blob.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format_version {blob.get('format_version')!r}")
    values: dict[str, np.ndarray] = {}
    for name, entry in blob.get("params", {}).items():
        arr = np.array(entry["values"], dtype=np.float64)
        shape = tuple(entry["shape"])
        expected = int(np.prod(shape)) if shape else 1
        if arr.size != expected:
            raise CheckpointError(f"{path}: parameter {name!r} shape/values mismatch")
        values[name] = arr.reshape(shape)
    return blob.get("config", {}), values
