"""The five benchmark models behind one prediction interface.

A PredictorModel bundles kind, architecture, and the parameter dict from
nn.init_params. Persistence carries no parameters and simply repeats the
last observed point for both horizons.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import GeoPoint
from .errors import BadArchError, KindNotTrainableError, WindowSizeMismatchError
from .nn import (
    Arch,
    CHECKPOINT_SCHEMA_VERSION,
    MODEL_KINDS,
    init_params,
    sequence_backward,
    sequence_forward,
)
from .normalize import NormStats, denormalize, normalize_array
from .optim import AdamState, adam_step, mse_loss
from .util import render_json


@dataclass
class PredictorModel:
    kind: str
    arch: Arch
    params: dict[str, np.ndarray]
    seed: int

    def clone(self) -> "PredictorModel":
        return PredictorModel(
            kind=self.kind,
            arch=self.arch,
            params={k: p.copy() for k, p in self.params.items()},
            seed=self.seed,
        )

    def copy_params_from(self, other: "PredictorModel") -> None:
        for k, p in self.params.items():
            np.copyto(p, other.params[k])


def create_model(kind: str, arch: Arch | None = None, seed: int = 0) -> PredictorModel:
    if arch is None:
        arch = Arch()
    if kind not in MODEL_KINDS:
        raise BadArchError(f"unknown model kind {kind!r}")
    return PredictorModel(kind=kind, arch=arch, params=init_params(kind, arch, seed), seed=seed)


def predict_window(
    model: PredictorModel,
    window: list[GeoPoint],
    stats: NormStats | None,
) -> tuple[GeoPoint, GeoPoint]:
    """Predict the next two points from the last `window` observed points.

    The window is normalized with `stats`, run through the network, and the
    two 3-vector outputs are denormalized back to physical units.
    """
    if len(window) != model.arch.window:
        raise WindowSizeMismatchError(
            f"expected {model.arch.window} points, got {len(window)}"
        )
    if model.kind == "persistence":
        last = window[-1]
        return last, last
    if stats is None:
        raise ValueError("stats required for network predictors")
    arr = np.array([[p.lat, p.lon, p.alt] for p in window], dtype=np.float64)
    out, _ = sequence_forward(model.kind, model.arch, model.params, normalize_array(arr, stats))
    return denormalize(out[:3], stats), denormalize(out[3:], stats)


def train_step(
    model: PredictorModel,
    window: np.ndarray,
    targets: np.ndarray,
    opt: AdamState,
    lr: float,
) -> float:
    """One forward/backward/Adam update on a normalized (window, targets) pair.

    Returns the pre-update loss. window is (W, 3) and targets (2, 3), both
    in normalized space.
    """
    if model.kind == "persistence":
        raise KindNotTrainableError("persistence has no trainable parameters")
    out, cache = sequence_forward(model.kind, model.arch, model.params, window)
    loss, dpred = mse_loss(out.reshape(2, 3), np.asarray(targets, dtype=np.float64))
    grads = sequence_backward(cache, dpred.reshape(6))
    adam_step(opt, model.params, grads, lr)
    return loss


# ---------------------------------------------------------------------------
# checkpoint files
# ---------------------------------------------------------------------------

def checkpoint_dumps(model: PredictorModel) -> str:
    """Serialize kind, arch, seed, and weights to the checkpoint JSON form.

    Weights render at 17 significant digits so a reload is bit-exact.
    """
    for key, p in model.params.items():
        if not np.all(np.isfinite(p)):
            raise ValueError(f"cannot checkpoint non-finite weights in {key}")
    doc = {
        "schema_version": CHECKPOINT_SCHEMA_VERSION,
        "model_kind": model.kind,
        "arch": {
            "window": model.arch.window,
            "input_dim": model.arch.input_dim,
            "hidden": model.arch.hidden,
            "head_widths": model.arch.head_widths(model.kind),
        },
        "seed": model.seed,
        "weights": {k: p.tolist() for k, p in model.params.items()},
    }
    return render_json(doc) + "\n"


def checkpoint_loads(text: str) -> PredictorModel:
    doc = json.loads(text)
    version = doc.get("schema_version")
    if version != CHECKPOINT_SCHEMA_VERSION:
        raise ValueError(
            f"checkpoint schema mismatch: got {version!r}, "
            f"expected {CHECKPOINT_SCHEMA_VERSION}"
        )
    kind = doc["model_kind"]
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r} in checkpoint")
    a = doc["arch"]
    head = a.get("head_widths", [])
    arch = Arch(
        window=a["window"],
        input_dim=a["input_dim"],
        hidden=a["hidden"],
        output=head[-1] if head else 6,
        mlp_hidden=head[1] if kind == "mlp" and len(head) == 4 else 100,
    )
    params = {k: np.array(v, dtype=np.float64) for k, v in doc["weights"].items()}
    reference = init_params(kind, arch, 0)
    if set(params) != set(reference):
        raise ValueError("checkpoint weights do not match the declared architecture")
    for k, p in params.items():
        if p.shape != reference[k].shape:
            raise ValueError(
                f"checkpoint weight {k} has shape {p.shape}, expected {reference[k].shape}"
            )
    return PredictorModel(kind=kind, arch=arch, params=params, seed=doc.get("seed", 0))


def save_model(model: PredictorModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(checkpoint_dumps(model))


def load_model(path) -> PredictorModel:
    with open(path, "r", encoding="utf-8") as fh:
        return checkpoint_loads(fh.read())
