"""Pretraining and the recurrent training-prediction loop.

The loop streams one trajectory: once more than `start_gate` points have
arrived, every new point triggers a retraining burst on the causal prefix
followed by a two-step-ahead prediction. Normalization statistics are
recomputed from the prefix at every step so no future information leaks.

Determinism: all sampling uses seeds derived from (run seed, step index),
so a prediction at step t depends only on the model state, the prefix
1..t, and the run seed. Replaying a trajectory incrementally therefore
reproduces the offline records bit for bit.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import Dataset, GeoPoint, Trajectory
from .errors import (
    EmptyTrainingSetError,
    InsufficientHistoryError,
    KindNotTrainableError,
    TrajectoryTooShortError,
)
from .metrics import StepError, step_error, two_step_average
from .normalize import compute_stats, normalize_array
from .optim import AdamState, TrainConfig
from .predictors import PredictorModel, predict_window, train_step
from .util import mix_seed


@dataclass(frozen=True)
class EngineConfig:
    """Loop parameters. start_gate is the last silent step: predictions
    begin at start_gate + 1, which also needs start_gate >= window."""

    train: TrainConfig = field(default_factory=TrainConfig)
    start_gate: int = 16
    warm_start: bool = True

    def __post_init__(self):
        if self.start_gate < self.train.window:
            raise ValueError(
                f"start_gate {self.start_gate} < window {self.train.window}"
            )


@dataclass(frozen=True)
class PredictionRecord:
    """Two predicted points made at step t, plus errors once realized."""

    t: int
    pred1: GeoPoint
    pred2: GeoPoint
    uav_id: str = ""
    actual1: GeoPoint | None = None
    actual2: GeoPoint | None = None
    err1: StepError | None = None
    err2: StepError | None = None
    err_avg: StepError | None = None

    @property
    def realized(self) -> bool:
        return self.err_avg is not None


def realize(rec: PredictionRecord, a1: GeoPoint, a2: GeoPoint) -> PredictionRecord:
    """Fill in the true points for t+1, t+2 and the error decomposition."""
    e1 = step_error(rec.pred1, a1)
    e2 = step_error(rec.pred2, a2)
    return dataclasses.replace(
        rec, actual1=a1, actual2=a2, err1=e1, err2=e2, err_avg=two_step_average(e1, e2)
    )


def pretrain(
    model: PredictorModel,
    train: Dataset,
    cfg: EngineConfig,
    seed: int,
    opt: AdamState | None = None,
) -> tuple[AdamState, list[float]]:
    """Train over the training set: epochs x trajectories x iterations.

    Each iteration picks a uniform random start inside one trajectory and
    trains on that window against the two following points, normalized
    with the trajectory's full statistics. Returns the optimizer state and
    the per-iteration loss trace (epochs * len(train) * iterations entries).
    """
    if model.kind == "persistence":
        raise KindNotTrainableError("persistence cannot be pretrained")
    if len(train) == 0:
        raise EmptyTrainingSetError("training set has no trajectories")
    w, h = cfg.train.window, cfg.train.horizon
    need = w + h
    for traj in train.trajectories:
        if len(traj) < need:
            raise TrajectoryTooShortError(
                f"trajectory {traj.uav_id!r} has {len(traj)} points, pretraining needs {need}"
            )
    if opt is None:
        opt = AdamState.for_params(model.params)
    rng = np.random.default_rng(mix_seed(seed, "pretrain"))
    losses: list[float] = []
    for _ in range(cfg.train.epochs):
        for traj in train.trajectories:
            arr = traj.positions()
            norm = normalize_array(arr, compute_stats(arr))
            n_starts = len(traj) - need + 1
            for _ in range(cfg.train.iterations):
                x = int(rng.integers(n_starts))
                losses.append(
                    train_step(model, norm[x:x + w], norm[x + w:x + need], opt, cfg.train.lr)
                )
    return opt, losses


def recurrent_step(
    model: PredictorModel,
    opt: AdamState,
    history: Sequence[GeoPoint],
    cfg: EngineConfig,
    seed: int,
    uav_id: str = "",
) -> PredictionRecord:
    """Retrain on the causal prefix, then predict the next two points.

    history is the full prefix 1..t. Retraining warm-starts from the
    incoming parameters and optimizer moments and samples `iterations`
    random window+target pairs lying wholly inside the prefix. At the very
    first active step the prefix cannot contain a full pair (it is one
    point short), so that step predicts without retraining.
    """
    t = len(history)
    if t <= cfg.start_gate:
        raise InsufficientHistoryError(
            f"need more than {cfg.start_gate} points, got {t}"
        )
    arr = np.array([[p.lat, p.lon, p.alt] for p in history], dtype=np.float64)
    stats = compute_stats(arr)
    w, h = cfg.train.window, cfg.train.horizon
    n_starts = t - (w + h) + 1
    if model.kind != "persistence" and cfg.train.iterations > 0 and n_starts >= 1:
        norm = normalize_array(arr, stats)
        rng = np.random.default_rng(mix_seed(seed, "step", t))
        for _ in range(cfg.train.iterations):
            x = int(rng.integers(n_starts))
            train_step(model, norm[x:x + w], norm[x + w:x + w + h], opt, cfg.train.lr)
    p1, p2 = predict_window(model, list(history[t - w:]), stats)
    return PredictionRecord(t=t, pred1=p1, pred2=p2, uav_id=uav_id)


def run_trajectory(
    model: PredictorModel,
    traj: Trajectory,
    cfg: EngineConfig,
    seed: int,
    opt: AdamState | None = None,
) -> list[PredictionRecord]:
    """Run the full loop over one trajectory; mutates model and opt.

    Emits one realized record per step t from start_gate+1 through L-2
    (later steps would have nothing to score against). The caller clones
    the model first if the original must survive.
    """
    first_t = cfg.start_gate + 1
    length = len(traj)
    if length < first_t + 2:
        raise TrajectoryTooShortError(
            f"insufficient history: trajectory {traj.uav_id!r} has {length} points, "
            f"need at least {first_t + 2}"
        )
    if opt is None:
        opt = AdamState.for_params(model.params)
    snap = None
    if not cfg.warm_start:
        snap = (model.clone(), opt.clone())
    positions = [p.pos for p in traj.points]
    records = []
    for t in range(first_t, length - 1):
        if snap is not None:
            model.copy_params_from(snap[0])
            opt = snap[1].clone()
        rec = recurrent_step(model, opt, positions[:t], cfg, seed, uav_id=traj.uav_id)
        records.append(realize(rec, positions[t], positions[t + 1]))
    return records


class StreamPredictor:
    """Incremental driver for a live feed.

    push() one position at a time; realized records come back as soon as
    their two true points have arrived, in the same order and with the
    same bytes as the offline run_trajectory output. Predictions made too
    close to the end of the stream never realize and are dropped (counted
    in `unrealized` after finish()).
    """

    def __init__(
        self,
        model: PredictorModel,
        cfg: EngineConfig,
        seed: int,
        uav_id: str = "",
        opt: AdamState | None = None,
    ):
        self.model = model
        self.cfg = cfg
        self.seed = seed
        self.uav_id = uav_id
        self.opt = opt if opt is not None else AdamState.for_params(model.params)
        self.history: list[GeoPoint] = []
        self.pending: dict[int, PredictionRecord] = {}
        self.unrealized = 0
        self._snap = None
        if not cfg.warm_start:
            self._snap = (model.clone(), self.opt.clone())

    def push(self, pos: GeoPoint) -> list[PredictionRecord]:
        self.history.append(pos)
        t = len(self.history)
        out = []
        ready = t - 2
        if ready in self.pending:
            rec = self.pending.pop(ready)
            out.append(realize(rec, self.history[ready], self.history[ready + 1]))
        if t > self.cfg.start_gate:
            if self._snap is not None:
                self.model.copy_params_from(self._snap[0])
                self.opt = self._snap[1].clone()
            rec = recurrent_step(
                self.model, self.opt, self.history, self.cfg, self.seed, uav_id=self.uav_id
            )
            self.pending[t] = rec
        return out

    def finish(self) -> None:
        self.unrealized = len(self.pending)
        self.pending.clear()


# ---------------------------------------------------------------------------
# NDJSON record serialization
# ---------------------------------------------------------------------------

def _point_doc(p: GeoPoint) -> dict:
    return {"lat": p.lat, "lon": p.lon, "alt": p.alt}

def _point_from(doc: dict) -> GeoPoint:
    return GeoPoint(float(doc["lat"]), float(doc["lon"]), float(doc["alt"]))

def _err_doc(e: StepError) -> dict:
    return {"jx": e.jx, "jy": e.jy, "jz": e.jz, "j3d": e.j3d}

def _err_from(doc: dict) -> StepError:
    return StepError(float(doc["jx"]), float(doc["jy"]), float(doc["jz"]), float(doc["j3d"]))


def record_to_json(rec: PredictionRecord) -> str:
    """One NDJSON line (without the trailing newline)."""
    doc = {
        "uav_id": rec.uav_id,
        "t": rec.t,
        "pred": [_point_doc(rec.pred1), _point_doc(rec.pred2)],
        "realized": (
            [_point_doc(rec.actual1), _point_doc(rec.actual2)] if rec.realized else None
        ),
        "err": (
            {
                "h1": _err_doc(rec.err1),
                "h2": _err_doc(rec.err2),
                "avg": _err_doc(rec.err_avg),
            }
            if rec.realized
            else None
        ),
    }
    return json.dumps(doc, separators=(",", ":"))


def record_from_json(line: str) -> PredictionRecord:
    doc = json.loads(line)
    rec = PredictionRecord(
        t=int(doc["t"]),
        pred1=_point_from(doc["pred"][0]),
        pred2=_point_from(doc["pred"][1]),
        uav_id=doc.get("uav_id", ""),
    )
    if doc.get("realized") is not None:
        err = doc["err"]
        rec = dataclasses.replace(
            rec,
            actual1=_point_from(doc["realized"][0]),
            actual2=_point_from(doc["realized"][1]),
            err1=_err_from(err["h1"]),
            err2=_err_from(err["h2"]),
            err_avg=_err_from(err["avg"]),
        )
    return rec
