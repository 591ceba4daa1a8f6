"""Adam optimizer and the finite-difference gradient oracle."""

import numpy as np

from .autodiff import no_grad
from .errors import ContractError, DimensionError


class AdamState:
    """Per-parameter first/second moment buffers plus the step counter.

    Fixed learning rate, no schedule. Defaults follow the standard
    (0.9, 0.999, 1e-8) choice.
    """

    def __init__(self, params, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in params.items()}


def adam_step(params, state, grads=None):
    """Bias-corrected Adam update, in place on ``params``.

    ``params`` maps names to tensors; gradients come from each tensor's
    ``grad`` buffer unless an explicit ``grads`` dict is given. A missing
    gradient counts as zero.
    """
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    for name, p in params.items():
        g = grads[name] if grads is not None else p.grad
        if g is None:
            g = np.zeros_like(p.data)
        if g.shape != p.data.shape:
            raise DimensionError(f"adam_step grad {g.shape} vs param {p.data.shape} for {name}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        mhat = m / (1.0 - b1 ** state.t)
        vhat = v / (1.0 - b2 ** state.t)
        p.data -= state.lr * mhat / (np.sqrt(vhat) + state.eps)
        if not np.all(np.isfinite(p.data)):
            raise ContractError(f"non-finite parameter values in {name} after adam_step")
    return params, state


def grad_check(loss_fn, params, epsilon=1e-5):
    """Max relative error between analytic and central-difference gradients.

    ``loss_fn`` must be deterministic (dropout off or seeded identically on
    every call) and return a scalar Tensor. Build the parameters in float64;
    float32 roundoff swamps the comparison. The relative error per entry is
    |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
    """
    if isinstance(params, dict):
        params = list(params.items())
    for _, p in params:
        p.zero_grad()
    loss = loss_fn()
    if not np.isfinite(loss.data).all():
        raise ContractError("loss_fn produced a non-finite value")
    loss.backward()
    analytic = {name: (np.zeros_like(p.data) if p.grad is None else p.grad.copy())
                for name, p in params}
    worst = 0.0
    with no_grad():
        for name, p in params:
            flat = p.data.reshape(-1)
            for i in range(flat.size):
                saved = flat[i]
                flat[i] = saved + epsilon
                up = loss_fn().item()
                flat[i] = saved - epsilon
                down = loss_fn().item()
                flat[i] = saved
                numeric = (up - down) / (2.0 * epsilon)
                a = analytic[name].reshape(-1)[i]
                err = abs(a - numeric) / max(1e-8, abs(a) + abs(numeric))
                worst = max(worst, err)
    return worst
