"""Reverse-mode autodiff over numpy arrays.

A ``Tensor`` wraps an ndarray plus an optional gradient buffer. Operations
build a tape of backward closures; calling ``backward()`` on a scalar loss
accumulates gradients into every tensor created with ``requires_grad=True``.

Training runs in float32; tests that compare against finite differences
build their tensors in float64 ("wide" mode). Ops never change dtype, so
the mode is fixed by whatever dtype the leaves carry.
"""

import contextlib
import threading

import numpy as np

from .errors import ContractError, DimensionError, ParameterError

# per-thread so a no_grad inference pass on one thread cannot truncate a
# training tape being built concurrently on another
_GRAD_STATE = threading.local()


@contextlib.contextmanager
def no_grad():
    """Disable tape construction inside the block (inference fast path)."""
    prev = getattr(_GRAD_STATE, "enabled", True)
    _GRAD_STATE.enabled = False
    try:
        yield
    finally:
        _GRAD_STATE.enabled = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_prev", "_backward")

    def __init__(self, data, requires_grad=False, _prev=(), _backward=None):
        if isinstance(data, np.ndarray):
            self.data = data
        elif isinstance(data, np.generic):
            # 0-d array arithmetic yields numpy scalars; keep their dtype
            self.data = np.asarray(data)
        else:
            self.data = np.asarray(data, dtype=np.float32)
        self.grad = None
        self.requires_grad = requires_grad
        self._prev = _prev
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data)

    def numpy(self):
        return self.data

    def accumulate(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def zero_grad(self):
        self.grad = None

    def backward(self):
        """Backpropagate from a scalar; iterative so long LSTM chains are safe."""
        if self.data.size != 1:
            raise ContractError(f"backward() needs a scalar, got shape {self.data.shape}")
        topo = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for child in node._prev:
                if id(child) not in seen:
                    stack.append((child, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"


def tensor(data, dtype=np.float32, requires_grad=False):
    return Tensor(np.asarray(data, dtype=dtype), requires_grad=requires_grad)


def _tracing(*tensors):
    return getattr(_GRAD_STATE, "enabled", True) and any(t.requires_grad for t in tensors)


def _out(data, inputs, backward):
    """Wrap an op result, attaching the tape closure only when tracing."""
    if _tracing(*inputs):
        return Tensor(data, requires_grad=True, _prev=tuple(inputs), _backward=backward)
    return Tensor(data)


def _unbroadcast(g, shape):
    """Sum gradient ``g`` down to ``shape`` (inverse of numpy broadcasting)."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _require_finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"non-finite values in {what}")


# ---------------------------------------------------------------------------
# arithmetic


def add(a, b):
    data = a.data + b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g, b.data.shape))

    return _out(data, (a, b), backward)


def mul(a, b):
    data = a.data * b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g * a.data, b.data.shape))

    return _out(data, (a, b), backward)


def scale(a, s):
    s = float(s)
    data = a.data * np.asarray(s, dtype=a.dtype)

    def backward(g):
        if a.requires_grad:
            a.accumulate(g * np.asarray(s, dtype=a.dtype))

    return _out(data, (a,), backward)


def add_n(tensors):
    data = tensors[0].data.copy()
    for t in tensors[1:]:
        if t.data.shape != data.shape:
            raise DimensionError(f"add_n shapes {t.data.shape} vs {data.shape}")
        data += t.data

    def backward(g):
        for t in tensors:
            if t.requires_grad:
                t.accumulate(g)

    return _out(data, tuple(tensors), backward)


def matmul(a, b):
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise DimensionError(f"matmul shapes {a.data.shape} vs {b.data.shape}")
    data = a.data @ b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate(g @ b.data.T)
        if b.requires_grad:
            b.accumulate(a.data.T @ g)

    return _out(data, (a, b), backward)


def linear(x, w, b=None):
    """Affine map on the last axis: [..., D] @ [D, K] (+ [K])."""
    d = x.data.shape[-1]
    if w.data.ndim != 2 or w.data.shape[0] != d:
        raise DimensionError(f"linear shapes {x.data.shape} vs {w.data.shape}")
    flat = x.data.reshape(-1, d)
    out = flat @ w.data
    if b is not None:
        out = out + b.data
    data = out.reshape(x.data.shape[:-1] + (w.data.shape[1],))
    inputs = (x, w) if b is None else (x, w, b)

    def backward(g):
        gflat = g.reshape(-1, w.data.shape[1])
        if x.requires_grad:
            x.accumulate((gflat @ w.data.T).reshape(x.data.shape))
        if w.requires_grad:
            w.accumulate(flat.T @ gflat)
        if b is not None and b.requires_grad:
            b.accumulate(gflat.sum(axis=0))

    return _out(data, inputs, backward)


def concat(tensors, axis=-1):
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]

    def backward(g):
        offset = 0
        for t, size in zip(tensors, sizes):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(offset, offset + size)
                t.accumulate(g[tuple(idx)])
            offset += size

    return _out(data, tuple(tensors), backward)


def reshape(x, shape):
    data = x.data.reshape(shape)

    def backward(g):
        if x.requires_grad:
            x.accumulate(g.reshape(x.data.shape))

    return _out(data, (x,), backward)


# ---------------------------------------------------------------------------
# gather / structural ops


def embedding_gather(table, ids):
    """Rows of ``table`` [V, D] selected by an integer array of any shape."""
    ids = np.asarray(ids)
    data = table.data[ids]

    def backward(g):
        if table.requires_grad:
            if table.grad is None:
                table.grad = np.zeros_like(table.data)
            np.add.at(table.grad, ids.ravel(), g.reshape(-1, table.data.shape[1]))

    return _out(data, (table,), backward)


def gather2d(x, rows, cols):
    """x[rows, cols] for index vectors; used for CRF path scoring."""
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    data = x.data[rows, cols]

    def backward(g):
        if x.requires_grad:
            if x.grad is None:
                x.grad = np.zeros_like(x.data)
            np.add.at(x.grad, (rows, cols), g)

    return _out(data, (x,), backward)


def slice2d(x, r0, r1, c0, c1):
    """Contiguous block x[r0:r1, c0:c1] of a 2-d tensor."""
    data = x.data[r0:r1, c0:c1]

    def backward(g):
        if x.requires_grad:
            if x.grad is None:
                x.grad = np.zeros_like(x.data)
            x.grad[r0:r1, c0:c1] += g

    return _out(data, (x,), backward)


def select_time(x, t):
    """x[:, t, :] for a [B, L, D] tensor."""
    data = x.data[:, t, :]

    def backward(g):
        if x.requires_grad:
            if x.grad is None:
                x.grad = np.zeros_like(x.data)
            x.grad[:, t, :] += g

    return _out(data, (x,), backward)


def stack_time(steps):
    """Stack per-step [B, D] tensors into [B, L, D]."""
    data = np.stack([s.data for s in steps], axis=1)

    def backward(g):
        for t, s in enumerate(steps):
            if s.requires_grad:
                s.accumulate(g[:, t, :])

    return _out(data, tuple(steps), backward)


def slice_cols(x, start, stop):
    data = x.data[:, start:stop]

    def backward(g):
        if x.requires_grad:
            if x.grad is None:
                x.grad = np.zeros_like(x.data)
            x.grad[:, start:stop] += g

    return _out(data, (x,), backward)


def reverse_time(x, lengths):
    """Reverse each row's valid prefix of a [B, L, D] tensor; pads stay put.

    The index map is an involution, so the backward pass applies the same
    permutation to the incoming gradient.
    """
    B, L = x.data.shape[0], x.data.shape[1]
    perm = np.tile(np.arange(L), (B, 1))
    for b, n in enumerate(lengths):
        perm[b, :n] = np.arange(n - 1, -1, -1)
    bidx = np.arange(B)[:, None]
    data = x.data[bidx, perm]

    def backward(g):
        if x.requires_grad:
            x.accumulate(g[bidx, perm])

    return _out(data, (x,), backward)


# ---------------------------------------------------------------------------
# nonlinearities


def sigmoid(x):
    e = np.exp(-np.abs(x.data))
    data = np.where(x.data >= 0, 1.0 / (1.0 + e), e / (1.0 + e))

    def backward(g):
        if x.requires_grad:
            x.accumulate(g * data * (1.0 - data))

    return _out(data, (x,), backward)


def tanh(x):
    data = np.tanh(x.data)

    def backward(g):
        if x.requires_grad:
            x.accumulate(g * (1.0 - data * data))

    return _out(data, (x,), backward)


def dropout(x, rate, rng, train):
    """Inverted dropout: survivors scaled by 1/keep so inference is identity."""
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout rate must be in [0, 1), got {rate}")
    if not train or rate == 0.0:
        return x
    keep = 1.0 - rate
    mask = (rng.random(x.data.shape) >= rate).astype(x.data.dtype) / keep
    data = x.data * mask

    def backward(g):
        if x.requires_grad:
            x.accumulate(g * mask)

    return _out(data, (x,), backward)


# ---------------------------------------------------------------------------
# convolution / pooling over the time axis


def conv1d_over_time(x, kernel, bias):
    """Valid 1-d convolution along axis 1: [N, T, Cin] -> [N, T-w+1, F]."""
    w, cin, f = kernel.data.shape
    if x.data.ndim != 3 or x.data.shape[2] != cin:
        raise DimensionError(f"conv1d shapes {x.data.shape} vs {kernel.data.shape}")
    n, t = x.data.shape[0], x.data.shape[1]
    if t < w:
        raise DimensionError(f"conv1d window {w} exceeds length {t}")
    tp = t - w + 1
    # [N, T', Cin, w] -> [N, T', w, Cin] -> columns
    win = np.lib.stride_tricks.sliding_window_view(x.data, w, axis=1)
    col = np.ascontiguousarray(win.transpose(0, 1, 3, 2)).reshape(n * tp, w * cin)
    kflat = kernel.data.reshape(w * cin, f)
    data = (col @ kflat + bias.data).reshape(n, tp, f)

    def backward(g):
        gflat = g.reshape(n * tp, f)
        if kernel.requires_grad:
            kernel.accumulate((col.T @ gflat).reshape(w, cin, f))
        if bias.requires_grad:
            bias.accumulate(gflat.sum(axis=0))
        if x.requires_grad:
            gcol = (gflat @ kflat.T).reshape(n, tp, w, cin)
            gx = np.zeros_like(x.data)
            for j in range(w):
                gx[:, j:j + tp, :] += gcol[:, :, j, :]
            x.accumulate(gx)

    return _out(data, (x, kernel, bias), backward)


def max_pool_over_time(x, lengths=None):
    """Column-wise max along axis 1: [N, T, F] -> [N, F].

    ``lengths`` restricts the pooled range per row; ties keep the earliest
    position (numpy argmax convention).
    """
    n, t, f = x.data.shape
    vals = x.data
    if lengths is not None:
        lengths = np.asarray(lengths)
        invalid = np.arange(t)[None, :, None] >= lengths[:, None, None]
        vals = np.where(invalid, -np.inf, vals)
    idx = vals.argmax(axis=1)
    nidx = np.arange(n)[:, None]
    fidx = np.arange(f)[None, :]
    data = x.data[nidx, idx, fidx]

    def backward(g):
        if x.requires_grad:
            if x.grad is None:
                x.grad = np.zeros_like(x.data)
            x.grad[nidx, idx, fidx] += g

    return _out(data, (x,), backward)


# ---------------------------------------------------------------------------
# reductions / probabilistic ops


def sum_all(x):
    data = np.asarray(x.data.sum(), dtype=x.dtype)

    def backward(g):
        if x.requires_grad:
            x.accumulate(np.broadcast_to(g, x.data.shape).astype(x.dtype))

    return _out(data, (x,), backward)


def logsumexp(x, axis=-1):
    """log(sum(exp(x))) along one axis with max-subtraction for stability."""
    m = x.data.max(axis=axis, keepdims=True)
    ex = np.exp(x.data - m)
    s = ex.sum(axis=axis, keepdims=True)
    data = np.squeeze(m + np.log(s), axis=axis)
    soft = ex / s

    def backward(g):
        if x.requires_grad:
            x.accumulate(np.expand_dims(g, axis) * soft)

    return _out(data, (x,), backward)


def softmax_T(x, temperature):
    """Temperature-scaled softmax on the last axis; rows sum to 1."""
    if temperature <= 0:
        raise ParameterError(f"temperature must be positive, got {temperature}")
    z = x.data / np.asarray(temperature, dtype=x.dtype)
    z = z - z.max(axis=-1, keepdims=True)
    ez = np.exp(z)
    data = ez / ez.sum(axis=-1, keepdims=True)

    def backward(g):
        if x.requires_grad:
            inner = g - (g * data).sum(axis=-1, keepdims=True)
            x.accumulate(data * inner / np.asarray(temperature, dtype=x.dtype))

    return _out(data, (x,), backward)


def cross_entropy(logits, targets, mask):
    """Mean negative log-likelihood over masked rows.

    ``logits`` is [N, K], ``targets`` [N] class indices, ``mask`` [N]
    validity flags. Gradient is the classic softmax-minus-onehot, scaled
    by mask/count.
    """
    targets = np.asarray(targets)
    mask = np.asarray(mask, dtype=bool)
    n, k = logits.data.shape
    if targets.shape != (n,) or mask.shape != (n,):
        raise DimensionError(f"cross_entropy shapes {logits.data.shape} vs {targets.shape}/{mask.shape}")
    if targets.min(initial=0) < 0 or targets.max(initial=0) >= k:
        raise IndexError(f"target index out of range for {k} classes")
    count = int(mask.sum())
    if count == 0:
        raise ContractError("cross_entropy over an empty mask")
    z = logits.data - logits.data.max(axis=-1, keepdims=True)
    logz = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    logp = z - logz
    data = np.asarray(-(logp[np.arange(n), targets] * mask).sum() / count, dtype=logits.dtype)
    _require_finite(data, "cross_entropy")

    def backward(g):
        if logits.requires_grad:
            grad = np.exp(logp)
            grad[np.arange(n), targets] -= 1.0
            grad *= (mask.astype(logits.dtype) / count)[:, None]
            logits.accumulate(grad * g)

    return _out(data, (logits,), backward)


def kl_divergence(p, q, mask):
    """Mean over masked rows of sum_i p_i log(p_i / q_i).

    Both arguments are probability rows. The gradient flows into either
    argument that requires it; a frozen teacher passes a constant.
    """
    if p.data.shape != q.data.shape:
        raise DimensionError(f"kl_divergence shapes {p.data.shape} vs {q.data.shape}")
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != p.data.shape[:-1]:
        raise DimensionError(f"kl_divergence mask {mask.shape} vs rows {p.data.shape[:-1]}")
    if np.any(p.data <= 0) or np.any(q.data <= 0):
        raise ContractError("kl_divergence needs strictly positive probabilities")
    count = int(mask.sum())
    if count == 0:
        raise ContractError("kl_divergence over an empty mask")
    log_ratio = np.log(p.data) - np.log(q.data)
    rows = (p.data * log_ratio).sum(axis=-1)
    data = np.asarray((rows * mask).sum() / count, dtype=p.dtype)
    _require_finite(data, "kl_divergence")

    def backward(g):
        w = (mask.astype(p.dtype) / count)[..., None]
        if p.requires_grad:
            p.accumulate((log_ratio + 1.0) * w * g)
        if q.requires_grad:
            q.accumulate(-(p.data / q.data) * w * g)

    return _out(data, (p, q), backward)


# ---------------------------------------------------------------------------
# seedable RNG

_MASK64 = (1 << 64) - 1


def _splitmix64(z):
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master, *keys):
    """Mix a master seed with int or str keys into a fresh 64-bit seed.

    Fixed splitmix-style permutation, so derived streams are reproducible
    across runs and documented for reimplementation: starting from
    splitmix64(master), each key is xor-folded in and permuted again;
    string keys fold as little-endian 8-byte chunks of their UTF-8 form.
    """
    state = _splitmix64(master & _MASK64)
    for k in keys:
        if isinstance(k, str):
            data = k.encode("utf-8")
            for i in range(0, len(data), 8):
                state = _splitmix64(state ^ int.from_bytes(data[i:i + 8], "little"))
        else:
            state = _splitmix64(state ^ (int(k) & _MASK64))
    return state


class Rng:
    """Seedable generator; identical seeds yield identical streams."""

    def __init__(self, seed):
        self.seed = int(seed) & _MASK64
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def random(self, shape=None):
        return self._gen.random(shape)

    def uniform(self, low, high, shape, dtype=np.float32):
        return self._gen.uniform(low, high, shape).astype(dtype)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def permutation(self, n):
        return self._gen.permutation(n)

    def choice_without_replacement(self, n, k):
        return self._gen.choice(n, size=k, replace=False)

    def spawn(self, *keys):
        return Rng(derive_seed(self.seed, *keys))
