"""Training loss, Adam optimizer, and the finite-difference gradient check."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyInputError,
    LengthMismatchError,
    NonFiniteGradientError,
    NonFiniteValueError,
    ShapeMismatchError,
)


@dataclass(frozen=True)
class TrainConfig:
    """Pretraining/retraining knobs: e epochs of k iterations at rate lr.

    k=0 is allowed so a model can run the prediction loop with online
    retraining disabled (the frozen arm of the benchmark).
    """

    epochs: int = 2
    iterations: int = 300
    lr: float = 0.01
    window: int = 16
    horizon: int = 2

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.horizon != 2:
            raise ValueError(f"horizon is fixed at 2, got {self.horizon}")
        if self.lr <= 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Multi-dimensional MSE over n 3-vectors and its gradient w.r.t. pred.

    alpha = (1/3n) * sum_t (jx_t^2 + jy_t^2 + jz_t^2), with j = pred - target;
    d alpha / d pred = 2 (pred - target) / (3n).
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise LengthMismatchError(f"pred {pred.shape} vs target {target.shape}")
    if pred.size == 0:
        raise EmptyInputError("mse_loss needs at least one entry")
    n = pred.shape[0]
    diff = pred - target
    alpha = float(np.sum(diff * diff) / (3.0 * n))
    return alpha, 2.0 * diff / (3.0 * n)


@dataclass
class AdamState:
    """First/second moment accumulators, one array per parameter."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray], **kw) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            **kw,
        )

    def clone(self) -> "AdamState":
        return AdamState(
            m={k: a.copy() for k, a in self.m.items()},
            v={k: a.copy() for k, a in self.v.items()},
            step_count=self.step_count,
            beta1=self.beta1,
            beta2=self.beta2,
            epsilon=self.epsilon,
        )


def adam_step(
    state: AdamState,
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    lr: float,
) -> None:
    """One Adam update with bias correction; params and state mutate in place."""
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for key, p in params.items():
        g = grads[key]
        if g.shape != p.shape:
            raise ShapeMismatchError(f"{key}: grad {g.shape} vs param {p.shape}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(f"non-finite gradient for {key}")
        m = state.m[key]
        v = state.v[key]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.epsilon)


def grad_check(fn, params: dict[str, np.ndarray], step: float = 1e-6) -> float:
    """Max relative error between fn's analytic gradient and central differences.

    fn(params) must return (scalar, grads dict). Relative error per entry is
    |analytic - numeric| / max(1, |analytic|, |numeric|).
    """
    value, grads = fn(params)
    if not np.isfinite(value):
        raise NonFiniteValueError("function value is not finite")
    worst = 0.0
    for key, p in params.items():
        gflat = grads[key].reshape(-1)
        for idx in range(p.size):
            orig = p.flat[idx]
            p.flat[idx] = orig + step
            f_plus, _ = fn(params)
            p.flat[idx] = orig - step
            f_minus, _ = fn(params)
            p.flat[idx] = orig
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise NonFiniteValueError(f"non-finite value probing {key}[{idx}]")
            numeric = (f_plus - f_minus) / (2.0 * step)
            analytic = gflat[idx]
            err = abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric))
            if err > worst:
                worst = err
    return worst
