"""From-scratch differentiable layers with exact analytic gradients.

Five model kinds share this kernel: a dense layer, a vanilla RNN cell, an
LSTM cell, a bidirectional LSTM stack, and an MLP. Everything is float64
numpy; gradients are hand-derived and checked against central finite
differences in the test suite.

Model-level parameter sets are plain dicts of float64 arrays. LSTM gate
weights are stored stacked as one (4H, in+H) matrix in gate order
[input, forget, output, candidate]; `LstmParams.from_stacked` exposes the
per-gate views without copying.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BadArchError,
    DimMismatchError,
    StaleCacheError,
    WindowSizeMismatchError,
)

MODEL_KINDS = ("mlp", "rnn", "lstm", "bilstm", "persistence")
CHECKPOINT_SCHEMA_VERSION = 1


def sigmoid(x: np.ndarray) -> np.ndarray:
    # clip keeps exp() finite; below -500 the float64 result is ~0 anyway
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500.0, 500.0)))


@dataclass(frozen=True)
class Arch:
    """Architecture descriptor shared by all model kinds.

    window: input points per prediction; input_dim: values per point;
    hidden: recurrent state width; output: regression head width
    (two 3D points); mlp_hidden: width of the two MLP hidden layers.
    """

    window: int = 16
    input_dim: int = 3
    hidden: int = 16
    output: int = 6
    mlp_hidden: int = 100

    def validate(self) -> None:
        for name in ("window", "input_dim", "hidden", "output", "mlp_hidden"):
            if getattr(self, name) < 1:
                raise BadArchError(f"{name} must be >= 1, got {getattr(self, name)}")

    def head_widths(self, kind: str) -> list[int]:
        """Dense-stack widths from model input to output, per kind."""
        if kind == "mlp":
            flat = self.window * self.input_dim
            return [flat, self.mlp_hidden, self.mlp_hidden, self.output]
        if kind == "bilstm":
            return [2 * self.hidden, self.output]
        if kind in ("rnn", "lstm"):
            return [self.hidden, self.output]
        return []


class TapeCache:
    """Saved forward activations, consumed exactly once by backward."""

    __slots__ = ("data", "_consumed")

    def __init__(self, **data):
        self.data = data
        self._consumed = False

    def consume(self) -> dict:
        if self._consumed:
            raise StaleCacheError("backward cache already consumed")
        self._consumed = True
        return self.data


# ---------------------------------------------------------------------------
# cell-level parameter bundles
# ---------------------------------------------------------------------------

@dataclass
class DenseParams:
    W: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)


@dataclass
class RnnParams:
    W_x: np.ndarray  # (hidden, in)
    W_h: np.ndarray  # (hidden, hidden)
    b: np.ndarray    # (hidden,)


@dataclass
class LstmParams:
    """Per-gate weights, each (hidden, in+hidden), biases (hidden,)."""

    W_i: np.ndarray
    W_f: np.ndarray
    W_o: np.ndarray
    W_g: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray
    b_g: np.ndarray

    @classmethod
    def from_stacked(cls, W: np.ndarray, b: np.ndarray) -> "LstmParams":
        """Per-gate views into the stacked (4H, D) / (4H,) arrays."""
        h = W.shape[0] // 4
        return cls(
            W_i=W[0:h], W_f=W[h:2 * h], W_o=W[2 * h:3 * h], W_g=W[3 * h:],
            b_i=b[0:h], b_f=b[h:2 * h], b_o=b[2 * h:3 * h], b_g=b[3 * h:],
        )

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.vstack([self.W_i, self.W_f, self.W_o, self.W_g]),
            np.concatenate([self.b_i, self.b_f, self.b_o, self.b_g]),
        )


@dataclass
class LstmState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden: int) -> "LstmState":
        return cls(h=np.zeros(hidden), c=np.zeros(hidden))


# ---------------------------------------------------------------------------
# single-layer forward/backward
# ---------------------------------------------------------------------------

def dense_forward(p: DenseParams, x: np.ndarray) -> tuple[np.ndarray, TapeCache]:
    """y = W x + b."""
    if x.shape != (p.W.shape[1],):
        raise DimMismatchError(f"dense expects input {p.W.shape[1]}, got {x.shape}")
    y = p.W @ x + p.b
    return y, TapeCache(W=p.W, x=x)


def dense_backward(cache: TapeCache, dy: np.ndarray):
    """Returns ({'W': dW, 'b': db}, dx)."""
    d = cache.consume()
    dW = np.outer(dy, d["x"])
    dx = d["W"].T @ dy
    return {"W": dW, "b": dy.copy()}, dx


def rnn_cell_forward(p: RnnParams, x: np.ndarray, h: np.ndarray):
    """h' = tanh(W_x x + W_h h + b)."""
    if x.shape != (p.W_x.shape[1],) or h.shape != (p.W_h.shape[1],):
        raise DimMismatchError("rnn cell input/state size mismatch")
    h_new = np.tanh(p.W_x @ x + p.W_h @ h + p.b)
    return h_new, TapeCache(p=p, x=x, h_prev=h, h_new=h_new)


def rnn_cell_backward(cache: TapeCache, dh: np.ndarray):
    """Returns ({'W_x','W_h','b'}, dx, dh_prev)."""
    d = cache.consume()
    p: RnnParams = d["p"]
    da = dh * (1.0 - d["h_new"] ** 2)
    grads = {
        "W_x": np.outer(da, d["x"]),
        "W_h": np.outer(da, d["h_prev"]),
        "b": da,
    }
    return grads, p.W_x.T @ da, p.W_h.T @ da


def lstm_cell_forward(p: LstmParams, x: np.ndarray, s: LstmState):
    """Standard LSTM recurrence on the concatenated [x; h] input.

    i, f, o = sigmoid(W_[ifo] [x;h] + b_[ifo]); g = tanh(W_g [x;h] + b_g)
    c' = f*c + i*g; h' = o*tanh(c').
    """
    hidden = p.b_i.shape[0]
    if x.shape[0] + hidden != p.W_i.shape[1] or s.h.shape != (hidden,):
        raise DimMismatchError("lstm cell input/state size mismatch")
    z = np.concatenate([x, s.h])
    i = sigmoid(p.W_i @ z + p.b_i)
    f = sigmoid(p.W_f @ z + p.b_f)
    o = sigmoid(p.W_o @ z + p.b_o)
    g = np.tanh(p.W_g @ z + p.b_g)
    c_new = f * s.c + i * g
    tc = np.tanh(c_new)
    h_new = o * tc
    cache = TapeCache(p=p, z=z, i=i, f=f, o=o, g=g, c_prev=s.c, tc=tc, n_in=x.shape[0])
    return LstmState(h=h_new, c=c_new), cache


def lstm_cell_backward(cache: TapeCache, dh: np.ndarray, dc: np.ndarray | None = None):
    """Returns (per-gate grads dict, dx, dh_prev, dc_prev)."""
    d = cache.consume()
    p: LstmParams = d["p"]
    i, f, o, g, tc = d["i"], d["f"], d["o"], d["g"], d["tc"]
    if dc is None:
        dc = np.zeros_like(dh)
    do = dh * tc
    dc = dc + dh * o * (1.0 - tc**2)
    da_i = (dc * g) * i * (1.0 - i)
    da_f = (dc * d["c_prev"]) * f * (1.0 - f)
    da_o = do * o * (1.0 - o)
    da_g = (dc * i) * (1.0 - g**2)
    z = d["z"]
    grads = {
        "W_i": np.outer(da_i, z), "b_i": da_i,
        "W_f": np.outer(da_f, z), "b_f": da_f,
        "W_o": np.outer(da_o, z), "b_o": da_o,
        "W_g": np.outer(da_g, z), "b_g": da_g,
    }
    dz = p.W_i.T @ da_i + p.W_f.T @ da_f + p.W_o.T @ da_o + p.W_g.T @ da_g
    n_in = d["n_in"]
    return grads, dz[:n_in], dz[n_in:], dc * f


# ---------------------------------------------------------------------------
# parameter initialization
# ---------------------------------------------------------------------------

def _uniform(rng, bound: float, shape) -> np.ndarray:
    return rng.uniform(-bound, bound, size=shape)


def init_params(kind: str, arch: Arch, seed: int) -> dict[str, np.ndarray]:
    """Initialize a model's parameter dict.

    Weights are uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]; biases are
    zero except the LSTM forget-gate bias, which starts at 1 so early cell
    state is retained. Deterministic for a fixed seed; keys are created in
    a fixed order so iteration order is stable too.
    """
    arch.validate()
    if kind not in MODEL_KINDS:
        raise BadArchError(f"unknown model kind {kind!r}")
    rng = np.random.default_rng(seed)
    h, nin, out = arch.hidden, arch.input_dim, arch.output
    params: dict[str, np.ndarray] = {}

    if kind == "lstm":
        d = nin + h
        params["W"] = _uniform(rng, 1.0 / np.sqrt(d), (4 * h, d))
        b = np.zeros(4 * h)
        b[h:2 * h] = 1.0  # forget gate
        params["b"] = b
        params["head_W"] = _uniform(rng, 1.0 / np.sqrt(h), (out, h))
        params["head_b"] = np.zeros(out)
    elif kind == "bilstm":
        d = nin + h
        for pre in ("fw", "bw"):
            params[f"{pre}_W"] = _uniform(rng, 1.0 / np.sqrt(d), (4 * h, d))
            b = np.zeros(4 * h)
            b[h:2 * h] = 1.0
            params[f"{pre}_b"] = b
        params["head_W"] = _uniform(rng, 1.0 / np.sqrt(2 * h), (out, 2 * h))
        params["head_b"] = np.zeros(out)
    elif kind == "rnn":
        params["W_x"] = _uniform(rng, 1.0 / np.sqrt(nin), (h, nin))
        params["W_h"] = _uniform(rng, 1.0 / np.sqrt(h), (h, h))
        params["b"] = np.zeros(h)
        params["head_W"] = _uniform(rng, 1.0 / np.sqrt(h), (out, h))
        params["head_b"] = np.zeros(out)
    elif kind == "mlp":
        widths = arch.head_widths("mlp")
        for li in range(len(widths) - 1):
            fan_in, fan_out = widths[li], widths[li + 1]
            params[f"W{li + 1}"] = _uniform(rng, 1.0 / np.sqrt(fan_in), (fan_out, fan_in))
            params[f"b{li + 1}"] = np.zeros(fan_out)
    # persistence: no parameters
    return params


# ---------------------------------------------------------------------------
# whole-window forward / backward per model kind
# ---------------------------------------------------------------------------

def _lstm_scan(W: np.ndarray, b: np.ndarray, X: np.ndarray):
    """Run an LSTM over X (T, in) from zero state; returns final h + tape arrays.

    Hot path: per-step work goes through preallocated buffers, and the
    sigmoid is inlined without clipping (an overflowing exp saturates to
    the correct 0 limit, so only the warning needs suppressing).
    """
    T, nin = X.shape
    hid = W.shape[0] // 4
    h3 = 3 * hid
    ax = X @ np.ascontiguousarray(W[:, :nin]).T
    ax += b
    Wh = np.ascontiguousarray(W[:, nin:])
    gates = np.empty((T, 4 * hid))
    cs = np.empty((T, hid))
    tcs = np.empty((T, hid))
    hs = np.empty((T, hid))
    h = np.zeros(hid)
    c = np.zeros(hid)
    dot4 = np.empty(4 * hid)
    tmp = np.empty(hid)
    with np.errstate(over="ignore"):
        for t in range(T):
            a = ax[t]
            np.dot(Wh, h, out=dot4)
            a += dot4
            grow = gates[t]
            ifo = grow[:h3]
            np.negative(a[:h3], out=ifo)
            np.exp(ifo, out=ifo)
            ifo += 1.0
            np.reciprocal(ifo, out=ifo)
            g = grow[h3:]
            np.tanh(a[h3:], out=g)
            c_row = cs[t]
            np.multiply(grow[hid:2 * hid], c, out=c_row)
            np.multiply(grow[:hid], g, out=tmp)
            c_row += tmp
            c = c_row
            tc = tcs[t]
            np.tanh(c_row, out=tc)
            h = hs[t]
            np.multiply(grow[2 * hid:h3], tc, out=h)
    return hs[T - 1], {"X": X, "gates": gates, "cs": cs, "tcs": tcs, "hs": hs, "W": W}


def _lstm_scan_backward(tape: dict, dh: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """BPTT through one _lstm_scan; returns (dW, db)."""
    X, gates, cs, tcs, hs, W = (
        tape["X"], tape["gates"], tape["cs"], tape["tcs"], tape["hs"], tape["W"],
    )
    T, nin = X.shape
    hid = hs.shape[1]
    h3 = 3 * hid
    WhT = np.ascontiguousarray(W[:, nin:].T)
    da = np.empty((T, 4 * hid))
    dc = np.zeros(hid)
    dh = dh.copy()
    s1 = np.empty(hid)
    s3 = np.empty(h3)
    zeros = np.zeros(hid)
    for t in range(T - 1, -1, -1):
        grow = gates[t]
        ifo = grow[:h3]
        i = grow[:hid]
        f = grow[hid:2 * hid]
        g = grow[h3:]
        tc = tcs[t]
        c_prev = cs[t - 1] if t > 0 else zeros
        # dc += dh * o * (1 - tc^2)
        np.multiply(tc, tc, out=s1)
        np.subtract(1.0, s1, out=s1)
        s1 *= grow[2 * hid:h3]
        s1 *= dh
        dc += s1
        row = da[t]
        np.multiply(dc, g, out=row[:hid])               # input gate
        np.multiply(dc, c_prev, out=row[hid:2 * hid])   # forget gate
        np.multiply(dh, tc, out=row[2 * hid:h3])        # output gate
        np.multiply(dc, i, out=row[h3:])                # candidate
        # sigmoid gates: * y(1-y); candidate: * (1-g^2)
        np.subtract(1.0, ifo, out=s3)
        s3 *= ifo
        row[:h3] *= s3
        np.multiply(g, g, out=s1)
        np.subtract(1.0, s1, out=s1)
        row[h3:] *= s1
        np.dot(WhT, row, out=dh)
        dc *= f
    h_prev = np.empty((T, hid))
    h_prev[0] = 0.0
    h_prev[1:] = hs[:-1]
    Z = np.hstack([X, h_prev])
    return da.T @ Z, da.sum(axis=0)


def sequence_forward(kind: str, arch: Arch, params: dict, window: np.ndarray):
    """Map one normalized window (window, input_dim) to the 6-output head.

    Recurrent kinds run from zero initial state and feed the final hidden
    state (forward+backward concatenated for bilstm) through the linear
    head; the MLP flattens the window. Returns (output, cache) where the
    cache feeds sequence_backward exactly once.
    """
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2 or window.shape[0] != arch.window:
        raise WindowSizeMismatchError(
            f"expected window shape ({arch.window}, {arch.input_dim}), got {window.shape}"
        )
    if window.shape[1] != arch.input_dim:
        raise DimMismatchError(f"expected {arch.input_dim} values per point")

    if kind == "lstm":
        h, tape = _lstm_scan(params["W"], params["b"], window)
        y = params["head_W"] @ h + params["head_b"]
        return y, TapeCache(kind=kind, tape=tape, h=h, head_W=params["head_W"])
    if kind == "bilstm":
        h_fw, tape_fw = _lstm_scan(params["fw_W"], params["fw_b"], window)
        h_bw, tape_bw = _lstm_scan(params["bw_W"], params["bw_b"], window[::-1])
        h = np.concatenate([h_fw, h_bw])
        y = params["head_W"] @ h + params["head_b"]
        return y, TapeCache(
            kind=kind, tape_fw=tape_fw, tape_bw=tape_bw, h=h, head_W=params["head_W"]
        )
    if kind == "rnn":
        T = window.shape[0]
        hid = arch.hidden
        ax = window @ params["W_x"].T + params["b"]
        Wh = params["W_h"]
        hs = np.empty((T, hid))
        h = np.zeros(hid)
        for t in range(T):
            h = np.tanh(ax[t] + Wh @ h)
            hs[t] = h
        y = params["head_W"] @ h + params["head_b"]
        tape = {"X": window, "hs": hs, "W_h": Wh}
        return y, TapeCache(kind=kind, tape=tape, h=h, head_W=params["head_W"])
    if kind == "mlp":
        x0 = window.reshape(-1)
        a1 = params["W1"] @ x0 + params["b1"]
        h1 = np.tanh(a1)
        a2 = params["W2"] @ h1 + params["b2"]
        h2 = np.tanh(a2)
        y = params["W3"] @ h2 + params["b3"]
        return y, TapeCache(
            kind=kind, x0=x0, h1=h1, h2=h2,
            W1=params["W1"], W2=params["W2"], W3=params["W3"],
        )
    raise BadArchError(f"kind {kind!r} has no network forward pass")


def sequence_backward(cache: TapeCache, upstream: np.ndarray) -> dict[str, np.ndarray]:
    """Exact gradients of (output . upstream) w.r.t. every model parameter.

    Gradients are accumulated through time for the recurrent kinds. The
    cache is consumed; calling twice raises StaleCacheError.
    """
    d = cache.consume()
    kind = d["kind"]
    upstream = np.asarray(upstream, dtype=np.float64)

    if kind in ("lstm", "bilstm"):
        grads: dict[str, np.ndarray] = {
            "head_W": np.outer(upstream, d["h"]),
            "head_b": upstream.copy(),
        }
        dh = d["head_W"].T @ upstream
        if kind == "lstm":
            dW, db = _lstm_scan_backward(d["tape"], dh)
            grads["W"] = dW
            grads["b"] = db
        else:
            hid = dh.shape[0] // 2
            dW_fw, db_fw = _lstm_scan_backward(d["tape_fw"], dh[:hid])
            dW_bw, db_bw = _lstm_scan_backward(d["tape_bw"], dh[hid:])
            grads["fw_W"] = dW_fw
            grads["fw_b"] = db_fw
            grads["bw_W"] = dW_bw
            grads["bw_b"] = db_bw
        return grads
    if kind == "rnn":
        tape = d["tape"]
        X, hs, Wh = tape["X"], tape["hs"], tape["W_h"]
        T, hid = hs.shape
        grads = {
            "head_W": np.outer(upstream, d["h"]),
            "head_b": upstream.copy(),
        }
        dh = d["head_W"].T @ upstream
        da = np.empty((T, hid))
        WhT = Wh.T
        for t in range(T - 1, -1, -1):
            da[t] = dh * (1.0 - hs[t] ** 2)
            dh = WhT @ da[t]
        h_prev = np.vstack([np.zeros(hid), hs[:-1]])
        grads["W_x"] = da.T @ X
        grads["W_h"] = da.T @ h_prev
        grads["b"] = da.sum(axis=0)
        return grads
    if kind == "mlp":
        x0, h1, h2 = d["x0"], d["h1"], d["h2"]
        dy = upstream
        grads = {"W3": np.outer(dy, h2), "b3": dy.copy()}
        dh2 = d["W3"].T @ dy
        da2 = dh2 * (1.0 - h2**2)
        grads["W2"] = np.outer(da2, h1)
        grads["b2"] = da2
        dh1 = d["W2"].T @ da2
        da1 = dh1 * (1.0 - h1**2)
        grads["W1"] = np.outer(da1, x0)
        grads["b1"] = da1
        return grads
    raise BadArchError(f"kind {kind!r} has no backward pass")
