"""Feed-forward risk surrogate trained with MAE or the hazard-aware loss.

Architecture F -> 50 (ReLU) -> 30 (leaky ReLU) -> 20 (leaky ReLU) ->
10 (ReLU) -> 4 (linear). Inputs and targets are z-scored with statistics
frozen from the training rows; HAL thresholds are mapped into the same
standardized space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hal import HalParams

HIDDEN = (50, 30, 20, 10)
ACTIVATIONS = ("relu", "leaky", "leaky", "relu", "linear")
LEAKY_SLOPE = 0.01
N_OUT = 4


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class NNOptions:
    lr: float = 1e-3
    batch: int = 256
    max_epochs: int = 300
    patience: int = 20
    seed: int = 0
    val_frac: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class NetworkModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: np.ndarray
    y_std: np.ndarray
    loss: str = "mae"
    history: list[float] = field(default_factory=list)
    best_epoch: int = 0

    kind = "nn"

    @property
    def n_features(self) -> int:
        return self.weights[0].shape[0]

    def predict_raw(self, X: np.ndarray) -> np.ndarray:
        Xs = (np.asarray(X, dtype=float) - self.x_mean) / self.x_std
        out, _ = forward(self.weights, self.biases, Xs)
        return out * self.y_std + self.y_mean

    def to_dict(self) -> dict:
        return {
            "kind": "nn",
            "loss": self.loss,
            "layer_dims": [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights],
            "activations": list(ACTIVATIONS),
            "leaky_slope": LEAKY_SLOPE,
            "weights": [w.ravel().tolist() for w in self.weights],  # row-major (in, out)
            "biases": [b.tolist() for b in self.biases],
            "x_mean": self.x_mean.tolist(),
            "x_std": self.x_std.tolist(),
            "y_mean": self.y_mean.tolist(),
            "y_std": self.y_std.tolist(),
            "best_epoch": self.best_epoch,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "NetworkModel":
        dims = doc["layer_dims"]
        weights = [np.array(w, dtype=float).reshape(dims[i], dims[i + 1]) for i, w in enumerate(doc["weights"])]
        biases = [np.array(b, dtype=float) for b in doc["biases"]]
        return cls(
            weights,
            biases,
            np.array(doc["x_mean"]),
            np.array(doc["x_std"]),
            np.array(doc["y_mean"]),
            np.array(doc["y_std"]),
            doc.get("loss", "mae"),
            best_epoch=doc.get("best_epoch", 0),
        )


def _act(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "leaky":
        return np.where(z > 0, z, LEAKY_SLOPE * z)
    return z


def _act_grad(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0).astype(float)
    if kind == "leaky":
        return np.where(z > 0, 1.0, LEAKY_SLOPE)
    return np.ones_like(z)


def init_params(n_in: int, rng: np.random.Generator) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Glorot-uniform weights, zero biases."""
    dims = (n_in,) + HIDDEN + (N_OUT,)
    weights, biases = [], []
    for a, b in zip(dims[:-1], dims[1:]):
        lim = np.sqrt(6.0 / (a + b))
        weights.append(rng.uniform(-lim, lim, (a, b)))
        biases.append(np.zeros(b))
    return weights, biases


def forward(weights, biases, X):
    h = X
    cache = [X]
    pre = []
    for W, b, kind in zip(weights, biases, ACTIVATIONS):
        z = h @ W + b
        pre.append(z)
        h = _act(z, kind)
        cache.append(h)
    return h, (cache, pre)


def backward(weights, state, dout):
    cache, pre = state
    gw, gb = [None] * len(weights), [None] * len(weights)
    delta = dout
    for i in reversed(range(len(weights))):
        delta = delta * _act_grad(pre[i], ACTIVATIONS[i])
        gw[i] = cache[i].T @ delta
        gb[i] = delta.sum(axis=0)
        if i:
            delta = delta @ weights[i].T
    return gw, gb


def loss_and_output_grad(pred, Y, loss: str, hal: list[HalParams] | None):
    """Batch loss and its (sub)gradient w.r.t. ``pred`` (both standardized)."""
    err = pred - Y
    n = pred.shape[0]
    if loss == "mae":
        return float(np.abs(err).mean()), np.sign(err) / err.size
    if loss == "hal":
        total = 0.0
        grad = np.empty_like(pred)
        for k, p in enumerate(hal):
            wu, wo = p.weights(Y[:, k])
            e = err[:, k]
            total += float(np.sum(wu * np.maximum(-e, 0) + wo * np.maximum(e, 0)))
            grad[:, k] = np.where(e < 0, -wu, np.where(e > 0, wo, 0.0))
        return total / n, grad / n
    raise ValueError(f"unknown loss {loss!r}")


def loss_and_grads(weights, biases, Xs, Ys, loss: str, hal=None):
    pred, state = forward(weights, biases, Xs)
    value, dout = loss_and_output_grad(pred, Ys, loss, hal)
    gw, gb = backward(weights, state, dout)
    return value, gw, gb


def _std(a: np.ndarray) -> np.ndarray:
    s = a.std(axis=0)
    return np.where(s > 1e-12, s, 1.0)


def train_nn(
    X: np.ndarray,
    Y: np.ndarray,
    loss: str = "mae",
    hal: list[HalParams] | None = None,
    opts: NNOptions | None = None,
) -> NetworkModel:
    """Adam with early stopping on a held-back slice of the training rows."""
    opts = opts or NNOptions()
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    if loss == "hal" and (hal is None or len(hal) != Y.shape[1]):
        raise ValueError("HAL training needs one HalParams per output")
    rng = np.random.default_rng(opts.seed)
    x_mean, x_std = X.mean(axis=0), _std(X)
    y_mean, y_std = Y.mean(axis=0), _std(Y)
    Xs = (X - x_mean) / x_std
    Ys = (Y - y_mean) / y_std
    hal_s = [p.standardized(y_mean[k], y_std[k]) for k, p in enumerate(hal)] if loss == "hal" else None

    weights, biases = init_params(X.shape[1], rng)
    perm = rng.permutation(X.shape[0])
    n_val = int(round(opts.val_frac * X.shape[0])) if X.shape[0] >= 10 else 0
    val_idx, tr_idx = perm[:n_val], perm[n_val:]

    m_w = [np.zeros_like(w) for w in weights]
    v_w = [np.zeros_like(w) for w in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]
    step = 0
    history = []
    best = (np.inf, 0, [w.copy() for w in weights], [b.copy() for b in biases])
    stale = 0
    for epoch in range(opts.max_epochs):
        order = tr_idx[rng.permutation(tr_idx.size)]
        epoch_loss = 0.0
        for bi, start in enumerate(range(0, order.size, opts.batch)):
            idx = order[start : start + opts.batch]
            value, gw, gb = loss_and_grads(weights, biases, Xs[idx], Ys[idx], loss, hal_s)
            if not np.isfinite(value):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}, batch {bi}")
            epoch_loss += value * idx.size
            step += 1
            c1 = 1 - opts.beta1**step
            c2 = 1 - opts.beta2**step
            for params, grads, m, v in ((weights, gw, m_w, v_w), (biases, gb, m_b, v_b)):
                for i in range(len(params)):
                    m[i] = opts.beta1 * m[i] + (1 - opts.beta1) * grads[i]
                    v[i] = opts.beta2 * v[i] + (1 - opts.beta2) * grads[i] ** 2
                    params[i] -= opts.lr * (m[i] / c1) / (np.sqrt(v[i] / c2) + opts.eps)
        history.append(epoch_loss / max(order.size, 1))
        if n_val:
            pred, _ = forward(weights, biases, Xs[val_idx])
            val_loss, _ = loss_and_output_grad(pred, Ys[val_idx], loss, hal_s)
        else:
            val_loss = history[-1]
        if val_loss < best[0] - 1e-12:
            best = (val_loss, epoch + 1, [w.copy() for w in weights], [b.copy() for b in biases])
            stale = 0
        else:
            stale += 1
            if stale >= opts.patience:
                break
    if opts.max_epochs > 0:
        _, best_epoch, weights, biases = best
    else:
        best_epoch = 0
    return NetworkModel(weights, biases, x_mean, x_std, y_mean, y_std, loss, history, best_epoch)
