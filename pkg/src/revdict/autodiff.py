"""Dense-tensor reverse-mode automatic differentiation engine.

Define-by-run: a :class:`Tape` records every primitive application whose
inputs require gradients; :func:`backward` replays the tape in reverse to
accumulate exact gradients. Everything is float64 and deterministic.
"""

from __future__ import annotations

from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np


class DimensionError(ValueError):
    """Operand shapes do not conform for the requested op."""


class NumericError(ArithmeticError):
    """A primitive produced a NaN or Inf."""


class ContractError(ValueError):
    """An operation was called outside its contract."""


ArrayLike = Union[float, int, Sequence, np.ndarray]


def _as_array(values: ArrayLike) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    return arr


class Tensor:
    """A dense float64 array participating in a recorded computation."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "op")

    def __init__(self, values: ArrayLike, requires_grad: bool = False, op: str = "leaf"):
        self.data = _as_array(values)
        if not np.all(np.isfinite(self.data)):
            raise NumericError(f"non-finite values in tensor (op={op})")
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self._parents: Tuple[Tensor, ...] = ()
        self._backward: Optional[Callable[[np.ndarray], None]] = None
        self.op = op

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            if np.shape(g) == self.data.shape:
                self.grad = np.array(g, dtype=np.float64)
            else:
                self.grad = np.zeros_like(self.data)
                self.grad += g
        else:
            self.grad += g

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op!r}, requires_grad={self.requires_grad})"


class Tape:
    """Ordered record of primitive applications for one forward pass.

    Inputs always precede their consumers, so a single reverse sweep
    yields exact reverse-mode gradients.
    """

    def __init__(self) -> None:
        self.nodes: List[Tensor] = []

    def record(self, node: Tensor) -> None:
        self.nodes.append(node)

    def __enter__(self) -> "Tape":
        _push_tape(self)
        return self

    def __exit__(self, *exc) -> None:
        _pop_tape(self)

    def __len__(self) -> int:
        return len(self.nodes)


_TAPE_STACK: List[Tape] = []


def _push_tape(tape: Tape) -> None:
    _TAPE_STACK.append(tape)


def _pop_tape(tape: Tape) -> None:
    assert _TAPE_STACK and _TAPE_STACK[-1] is tape
    _TAPE_STACK.pop()


def active_tape() -> Optional[Tape]:
    return _TAPE_STACK[-1] if _TAPE_STACK else None


def _make(out_data: np.ndarray, parents: Tuple[Tensor, ...], op: str,
          backward: Callable[[np.ndarray], None]) -> Tensor:
    # a finite sum implies all entries are finite (any inf/nan poisons it)
    if not np.isfinite(out_data.sum()) and not np.all(np.isfinite(out_data)):
        raise NumericError(f"non-finite output from op '{op}'")
    needs = any(p.requires_grad for p in parents)
    out = Tensor.__new__(Tensor)
    out.data = out_data
    out.requires_grad = needs
    out.grad = None
    out.op = op
    tape = active_tape()
    if needs and tape is not None:
        out._parents = parents
        out._backward = backward
        tape.record(out)
    else:
        out._parents = ()
        out._backward = None
    return out


def _ew_shapes_ok(a: Tensor, b: Tensor) -> bool:
    # elementwise ops allow equal shapes, scalar broadcast, or a trailing
    # row broadcast (B, n) op (n,) used by batched layers
    if a.shape == b.shape:
        return True
    if a.data.ndim == 0 or b.data.ndim == 0:
        return True
    if a.data.ndim == 2 and b.data.ndim == 1 and a.shape[1] == b.shape[0]:
        return True
    if b.data.ndim == 2 and a.data.ndim == 1 and b.shape[1] == a.shape[0]:
        return True
    return False


def _reduce_to_shape(g: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a gradient back down to a broadcast operand's shape."""
    if g.shape == shape:
        return g
    if shape == ():
        return np.asarray(g.sum())
    # (B, n) grad -> (n,) operand
    return g.sum(axis=0)


def add(a: Tensor, b: Tensor) -> Tensor:
    if not _ew_shapes_ok(a, b):
        raise DimensionError(f"add: shapes {a.shape} and {b.shape} do not conform")
    out_data = a.data + b.data

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate_grad(_reduce_to_shape(g, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_reduce_to_shape(g, b.shape))

    return _make(out_data, (a, b), "add", backward)


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    if not _ew_shapes_ok(a, b):
        raise DimensionError(f"hadamard: shapes {a.shape} and {b.shape} do not conform")
    out_data = a.data * b.data

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate_grad(_reduce_to_shape(g * b.data, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_reduce_to_shape(g * a.data, b.shape))

    return _make(out_data, (a, b), "hadamard", backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    ad, bd = a.data, b.data
    if ad.ndim == 0 or bd.ndim == 0 or ad.ndim > 2 or bd.ndim > 2:
        raise DimensionError(f"matmul: unsupported ranks {a.shape} x {b.shape}")
    if ad.shape[-1] != (bd.shape[0] if bd.ndim > 0 else None):
        raise DimensionError(f"matmul: inner dims differ for shapes {a.shape} and {b.shape}")
    out_data = ad @ bd

    def backward(g: np.ndarray) -> None:
        a2 = ad if ad.ndim == 2 else ad[None, :]
        b2 = bd if bd.ndim == 2 else bd[:, None]
        g2 = g.reshape(a2.shape[0], b2.shape[1])
        if a.requires_grad:
            a.accumulate_grad((g2 @ b2.T).reshape(ad.shape))
        if b.requires_grad:
            b.accumulate_grad((a2.T @ g2).reshape(bd.shape))

    return _make(out_data, (a, b), "matmul", backward)


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise DimensionError(f"transpose: expected a matrix, got shape {a.shape}")
    out_data = a.data.T.copy()

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate_grad(g.T)

    return _make(out_data, (a,), "transpose", backward)


def sigmoid(a: Tensor) -> Tensor:
    # exp of the negated magnitude never overflows; one exp serves both branches
    x = a.data
    e = np.exp(-np.abs(x))
    pos = 1.0 / (1.0 + e)
    out_data = np.where(x >= 0, pos, 1.0 - pos)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate_grad(g * out_data * (1.0 - out_data))

    return _make(out_data, (a,), "sigmoid", backward)


def tanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate_grad(g * (1.0 - out_data * out_data))

    return _make(out_data, (a,), "tanh", backward)


def relu(a: Tensor) -> Tensor:
    out_data = np.maximum(a.data, 0.0)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            # subgradient at 0 is 0
            a.accumulate_grad(g * (a.data > 0.0))

    return _make(out_data, (a,), "relu", backward)


def sum_reduce(a: Tensor) -> Tensor:
    out_data = np.asarray(a.data.sum())

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate_grad(np.broadcast_to(g, a.shape).astype(np.float64))

    return _make(out_data, (a,), "sum_reduce", backward)


def max_reduce(a: Tensor) -> Tensor:
    flat = a.data.ravel()
    if flat.size == 0:
        raise DimensionError("max_reduce: empty tensor")
    idx = int(np.argmax(flat))  # first maximum: deterministic tie-break
    out_data = np.asarray(flat[idx])

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            grad = np.zeros_like(flat)
            grad[idx] = float(g)
            a.accumulate_grad(grad.reshape(a.shape))

    return _make(out_data, (a,), "max_reduce", backward)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    out_data = a.data * c

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate_grad(g * c)

    return _make(out_data, (a,), "scale", backward)


def concat(tensors: Sequence[Tensor]) -> Tensor:
    """Concatenate 1-D tensors; gradient splits back to the inputs."""
    if not tensors:
        raise DimensionError("concat: need at least one tensor")
    for t in tensors:
        if t.data.ndim != 1:
            raise DimensionError(f"concat: expected 1-D tensors, got shape {t.shape}")
    out_data = np.concatenate([t.data for t in tensors])
    sizes = [t.data.shape[0] for t in tensors]

    def backward(g: np.ndarray) -> None:
        off = 0
        for t, size in zip(tensors, sizes):
            if t.requires_grad:
                t.accumulate_grad(g[off:off + size])
            off += size

    return _make(out_data, tuple(tensors), "concat", backward)


def embedding_lookup(table: Tensor, ids: np.ndarray, frozen_rows: Sequence[int] = ()) -> Tensor:
    """Gather rows of an embedding table; gradients scatter-add back.

    Rows listed in ``frozen_rows`` (the PAD row) never receive gradient.
    """
    ids = np.asarray(ids, dtype=np.int64)
    if np.any(ids < 0) or np.any(ids >= table.shape[0]):
        raise DimensionError(f"embedding_lookup: id out of range for table of {table.shape[0]} rows")
    out_data = table.data[ids]
    frozen = np.asarray(sorted(frozen_rows), dtype=np.int64)

    def backward(g: np.ndarray) -> None:
        if table.requires_grad:
            grad = np.zeros_like(table.data)
            np.add.at(grad, ids, g)
            if frozen.size:
                grad[frozen] = 0.0
            table.accumulate_grad(grad)

    return _make(out_data, (table,), "embedding_lookup", backward)


def sigmoid_bce(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean sigmoid binary cross-entropy, numerically stable.

    Per entry: max(z, 0) - z*y + log(1 + exp(-|z|)). The recorded gradient
    is (sigmoid(z) - y) / n, n the total entry count.
    """
    labels = np.asarray(labels, dtype=np.float64)
    if labels.shape != logits.shape:
        raise DimensionError(f"sigmoid_bce: logits {logits.shape} vs labels {labels.shape}")
    z = logits.data
    per_entry = np.maximum(z, 0.0) - z * labels + np.log1p(np.exp(-np.abs(z)))
    n = max(z.size, 1)
    out_data = np.asarray(per_entry.sum() / n)

    def backward(g: np.ndarray) -> None:
        if logits.requires_grad:
            e = np.exp(-np.abs(z))
            pos = 1.0 / (1.0 + e)
            sig = np.where(z >= 0, pos, 1.0 - pos)
            logits.accumulate_grad(float(g) * (sig - labels) / n)

    return _make(out_data, (logits,), "sigmoid_bce", backward)


PRIMITIVES: Dict[str, Callable[..., Tensor]] = {
    "matmul": matmul,
    "add": add,
    "hadamard": hadamard,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "relu": relu,
    "sum_reduce": sum_reduce,
    "max_reduce": max_reduce,
    "scale": scale,
}


def apply_primitive(op: str, *inputs) -> Tensor:
    """Dispatch one of the named primitives on the given inputs."""
    if op not in PRIMITIVES:
        raise ContractError(f"unknown primitive '{op}'")
    return PRIMITIVES[op](*inputs)


def backward(tape: Tape, loss: Tensor,
             params: Optional[Dict[str, Tensor]] = None) -> Dict[str, np.ndarray]:
    """Reverse sweep over ``tape`` from scalar ``loss``.

    Accumulates ``.grad`` on every tensor that requires gradients. When
    ``params`` is given, returns a name -> gradient map with zeros for
    parameters not on any path to the loss.
    """
    if loss.data.ndim != 0:
        raise ContractError(f"backward: loss must be scalar, got shape {loss.shape}")
    loss.grad = np.ones_like(loss.data)
    for node in reversed(tape.nodes):
        if node.grad is None or node._backward is None:
            continue
        node._backward(node.grad)
    grads: Dict[str, np.ndarray] = {}
    if params is not None:
        for name, p in params.items():
            grads[name] = p.grad if p.grad is not None else np.zeros_like(p.data)
    return grads


def zero_grads(params: Dict[str, Tensor]) -> None:
    for p in params.values():
        p.grad = None


# --------------------------------------------------------------------------
# parameter initialization and optimizers


def uniform_init(shape, rng: np.random.Generator, scale: float = 0.08,
                 requires_grad: bool = True) -> Tensor:
    """Uniform [-scale, scale] initialization, the LSTM reference tradition."""
    return Tensor(rng.uniform(-scale, scale, size=shape), requires_grad=requires_grad)


class AdamState:
    """Per-parameter first/second moment estimates plus a step counter."""

    def __init__(self, params: Dict[str, Tensor]):
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.step = 0


def adam_step(params: Dict[str, Tensor], grads: Dict[str, np.ndarray], state: AdamState,
              lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> None:
    """Standard Adam update with bias correction, in place."""
    if lr < 0:
        raise ContractError("adam_step: lr must be >= 0")
    state.step += 1
    t = state.step
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if g.shape != p.data.shape:
            raise DimensionError(f"adam_step: grad shape {g.shape} != param shape "
                                 f"{p.data.shape} for '{name}'")
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        p.data -= lr * m_hat / (np.sqrt(v_hat) + eps)


def sgd_step(params: Dict[str, Tensor], grads: Dict[str, np.ndarray], lr: float) -> None:
    """Plain SGD update, in place."""
    if lr < 0:
        raise ContractError("sgd_step: lr must be >= 0")
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if g.shape != p.data.shape:
            raise DimensionError(f"sgd_step: grad shape {g.shape} != param shape "
                                 f"{p.data.shape} for '{name}'")
        p.data -= lr * g


class Optimizer:
    """Config-switchable optimizer front end (adam or sgd)."""

    def __init__(self, params: Dict[str, Tensor], kind: str = "adam", lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if kind not in ("adam", "sgd"):
            raise ContractError(f"unknown optimizer '{kind}'")
        self.kind = kind
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = AdamState(params) if kind == "adam" else None

    def step(self, grads: Dict[str, np.ndarray]) -> None:
        if self.kind == "adam":
            adam_step(self.params, grads, self.state, self.lr, self.beta1, self.beta2, self.eps)
        else:
            sgd_step(self.params, grads, self.lr)
