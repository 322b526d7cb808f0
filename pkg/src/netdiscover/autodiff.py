"""A small reverse-mode differentiation tape over dense float64 numpy arrays.

Arrays may carry leading batch axes; ``matmul`` and ``transpose`` act on the
last two.  A ``Tape(record=False)`` evaluates the same expressions without
keeping anything for the backward sweep.
"""
from __future__ import annotations

import json
import os
import struct
import tempfile

import numpy as np

from .errors import DomainError, ParseError, ShapeError


class Var:
    __slots__ = ("value", "grad", "name", "requires_grad")

    def __init__(self, value, name=None, requires_grad=False):
        self.value = value
        self.grad = None
        self.name = name
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Var(shape={self.value.shape}, name={self.name!r})"


def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, size in enumerate(shape):
        if size == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


def _shape_error(op, a, b):
    return ShapeError(f"{op}: incompatible shapes {tuple(a)} and {tuple(b)}")


class Tape:
    def __init__(self, record: bool = True):
        self.record = record
        self.records: list = []

    # -- leaves ----------------------------------------------------------------
    def param(self, value, name=None) -> Var:
        return Var(np.asarray(value, dtype=np.float64), name, requires_grad=self.record)

    def const(self, value) -> Var:
        return Var(np.asarray(value, dtype=np.float64))

    def _out(self, value, inputs, backward) -> Var:
        needs = self.record and any(x.requires_grad for x in inputs)
        out = Var(value, requires_grad=needs)
        if needs:
            self.records.append((out, inputs, backward))
        return out

    # -- primitives ------------------------------------------------------------
    def matmul(self, a: Var, b: Var) -> Var:
        if a.value.ndim < 2 or b.value.ndim < 2 or a.shape[-1] != b.shape[-2]:
            raise _shape_error("matmul", a.shape, b.shape)
        av, bv = a.value, b.value

        def back(g):
            ga = _unbroadcast(g @ np.swapaxes(bv, -1, -2), av.shape)
            gb = _unbroadcast(np.swapaxes(av, -1, -2) @ g, bv.shape)
            return ga, gb

        return self._out(av @ bv, (a, b), back)

    def add(self, a: Var, b: Var) -> Var:
        try:
            value = a.value + b.value
        except ValueError:
            raise _shape_error("add", a.shape, b.shape) from None
        sa, sb = a.shape, b.shape
        return self._out(value, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))

    def hadamard(self, a: Var, b: Var) -> Var:
        if a.shape != b.shape:
            raise _shape_error("hadamard", a.shape, b.shape)
        av, bv = a.value, b.value
        return self._out(av * bv, (a, b), lambda g: (g * bv, g * av))

    def scale(self, a: Var, c: float) -> Var:
        return self._out(a.value * c, (a,), lambda g: (g * c,))

    def relu(self, a: Var) -> Var:
        mask = a.value > 0
        return self._out(np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))

    def sigmoid(self, a: Var) -> Var:
        s = 1.0 / (1.0 + np.exp(-np.clip(a.value, -500, 500)))
        return self._out(s, (a,), lambda g: (g * s * (1.0 - s),))

    def row_softmax(self, a: Var) -> Var:
        z = a.value - a.value.max(axis=-1, keepdims=True)
        e = np.exp(z)
        s = e / e.sum(axis=-1, keepdims=True)

        def back(g):
            return (s * (g - (g * s).sum(axis=-1, keepdims=True)),)

        return self._out(s, (a,), back)

    def transpose(self, a: Var) -> Var:
        return self._out(np.swapaxes(a.value, -1, -2), (a,), lambda g: (np.swapaxes(g, -1, -2),))

    def concat_rows(self, a: Var, b: Var) -> Var:
        if a.shape[:-2] != b.shape[:-2] or a.shape[-1] != b.shape[-1]:
            raise _shape_error("concat_rows", a.shape, b.shape)
        k = a.shape[-2]
        return self._out(np.concatenate([a.value, b.value], axis=-2), (a, b),
                         lambda g: (g[..., :k, :], g[..., k:, :]))

    def concat_cols(self, a: Var, b: Var) -> Var:
        if a.shape[:-1] != b.shape[:-1]:
            raise _shape_error("concat_cols", a.shape, b.shape)
        k = a.shape[-1]
        return self._out(np.concatenate([a.value, b.value], axis=-1), (a, b),
                         lambda g: (g[..., :k], g[..., k:]))

    def reduce_sum(self, a: Var, axis=None) -> Var:
        """``axis=None`` sums everything to a 1x1 matrix; otherwise keeps dims."""
        shape = a.shape
        if axis is None:
            value = np.array([[a.value.sum()]])
            return self._out(value, (a,), lambda g: (np.full(shape, g.item()),))
        value = a.value.sum(axis=axis, keepdims=True)
        return self._out(value, (a,), lambda g: (np.broadcast_to(g, shape).copy(),))

    def reshape(self, a: Var, shape) -> Var:
        old = a.shape
        return self._out(a.value.reshape(shape), (a,), lambda g: (g.reshape(old),))

    def gcn_normalize(self, a: Var) -> Var:
        """``D^-1/2 (A + I) D^-1/2`` with ``D`` the row sums of ``A + I``; differentiable in ``A``."""
        n = a.shape[-1]
        at = a.value + np.eye(n)
        r = at.sum(axis=-1) ** -0.5
        out = at * r[..., :, None] * r[..., None, :]

        def back(g):
            direct = g * r[..., :, None] * r[..., None, :]
            gr = (g * at * r[..., None, :]).sum(axis=-1) + (g * at * r[..., :, None]).sum(axis=-2)
            gd = gr * -0.5 * r ** 3
            return (direct + gd[..., :, None],)

        return self._out(out, (a,), back)

    def huber(self, a: Var, delta: float = 1.0) -> Var:
        x = a.value
        small = np.abs(x) <= delta
        value = np.where(small, 0.5 * x * x, delta * (np.abs(x) - 0.5 * delta))
        return self._out(value, (a,), lambda g: (g * np.clip(x, -delta, delta),))

    # -- reverse sweep ---------------------------------------------------------
    def backward(self, output: Var) -> dict:
        """Accumulate gradients into every reachable leaf; returns ``{name: grad}``."""
        if output.value.size != 1:
            raise DomainError(f"backward needs a scalar output, got shape {output.shape}")
        if not self.record:
            raise DomainError("tape was created with record=False")
        grads = {id(output): np.ones_like(output.value)}
        leaves = {id(output): output} if output.name is not None else {}
        for out, inputs, back in reversed(self.records):
            g = grads.pop(id(out), None)
            if g is None:
                continue
            for x, gx in zip(inputs, back(g)):
                if not x.requires_grad:
                    continue
                if id(x) in grads:
                    grads[id(x)] = grads[id(x)] + gx
                else:
                    grads[id(x)] = gx
                if x.name is not None:
                    leaves[id(x)] = x
        result = {}
        for key, x in leaves.items():
            x.grad = grads.get(key, np.zeros_like(x.value))
            result[x.name] = x.grad
        return result


def backward(tape: Tape, output: Var) -> dict:
    return tape.backward(output)


# -- optimiser -------------------------------------------------------------------
class AdamState:
    def __init__(self):
        self.m: dict = {}
        self.v: dict = {}
        self.t = 0


def adam_step(params: dict, grads: dict, state: AdamState, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """In-place Adam update of every parameter that has a gradient."""
    state.t += 1
    c1 = 1.0 - beta1 ** state.t
    c2 = 1.0 - beta2 ** state.t
    for name, g in grads.items():
        p = params[name]
        if g.shape != p.shape:
            raise _shape_error(f"adam_step[{name}]", p.shape, g.shape)
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return params, state


# -- checkpoints -----------------------------------------------------------------
MAGIC = b"NDCK"
FORMAT_VERSION = 1


def save_checkpoint(path, params: dict, meta: dict | None = None):
    """Write named float64 matrices atomically (temp file, then rename)."""
    header = {
        "meta": meta or {},
        "tensors": [{"name": k, "shape": list(v.shape)} for k, v in params.items()],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<II", FORMAT_VERSION, len(blob)))
            fh.write(blob)
            for v in params.values():
                fh.write(np.ascontiguousarray(v, dtype="<f8").tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path) -> tuple[dict, dict]:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ParseError("not a checkpoint file")
    if len(data) < 12:
        raise ParseError("truncated checkpoint header")
    version, hlen = struct.unpack("<II", data[4:12])
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported checkpoint version {version}")
    try:
        header = json.loads(data[12:12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"corrupt checkpoint header: {exc}") from None
    offset = 12 + hlen
    params = {}
    for t in header["tensors"]:
        count = int(np.prod(t["shape"])) if t["shape"] else 1
        if offset + 8 * count > len(data):
            raise ParseError(f"checkpoint truncated inside tensor {t['name']!r}")
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=offset).astype(np.float64)
        params[t["name"]] = arr.reshape(t["shape"])
        offset += 8 * count
    if offset != len(data):
        raise ParseError("checkpoint size does not match header")
    return params, header["meta"]
