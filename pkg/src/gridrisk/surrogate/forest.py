"""Multivariate random-forest surrogate.

Trees are grown by scikit-learn on z-scored targets, so the multi-output
squared-error criterion sums variance reduction over the four standardized
QoIs. The fitted trees are then flattened into plain arrays (leaf values in
physical units) and all prediction runs on those arrays, which is also the
persisted format. Leaf values are stored as float32.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from sklearn.ensemble import RandomForestRegressor


@dataclass
class RFOptions:
    n_trees: int = 200
    max_depth: int | None = None
    min_leaf: int = 2
    mtry: int | None = None  # default ceil(F / 3)
    bootstrap: bool = True
    seed: int = 0


def _f32_text(a: np.ndarray) -> list[float]:
    # shortest decimal that round-trips through float32
    return [float(v) for v in np.asarray(a, dtype=np.float32).astype(str)]


def _floor_f32(t: np.ndarray) -> np.ndarray:
    """Largest float32 <= t, so float32 x <= result iff x <= t."""
    t32 = t.astype(np.float32)
    over = t32.astype(np.float64) > t
    t32[over] = np.nextafter(t32[over], np.float32(-np.inf))
    return t32


ROW_BLOCK = 2048


@njit(cache=True, nogil=True)
def _forest_mean(X, roots, feat, thr, right, value):
    n = X.shape[0]
    n_out = value.shape[1]
    out = np.zeros((n, n_out))
    for a in range(0, n, ROW_BLOCK):
        b = min(a + ROW_BLOCK, n)
        # one tree at a time over a row block keeps its nodes cache-resident
        for t in range(roots.size):
            r = roots[t]
            for i in range(a, b):
                k = r
                f = feat[k]
                while f >= 0:
                    # preorder layout: the left child is the next node
                    k = k + 1 if X[i, f] <= thr[k] else right[k]
                    f = feat[k]
                for j in range(n_out):
                    out[i, j] += value[k, j]
    return out / roots.size


@dataclass
class ForestModel:
    """Trees concatenated into one node table; ``roots[t]`` indexes tree t.

    Nodes are in depth-first preorder, so an internal node's left child is
    the next node. Thresholds and leaf values are float32.
    """

    feature: np.ndarray  # int, -1 at leaves
    threshold: np.ndarray  # float32
    left: np.ndarray  # leaves point at themselves
    right: np.ndarray
    value: np.ndarray  # (nodes, 4) float32, meaningful at leaves
    roots: np.ndarray
    n_features: int
    depth: int

    kind = "rf"

    def __post_init__(self):
        self._feat = self.feature.astype(np.int32)
        self._thr = self.threshold.astype(np.float32)
        self._right = self.right.astype(np.int64)
        self._value = np.ascontiguousarray(self.value, dtype=np.float32)
        self._roots = self.roots.astype(np.int64)

    def predict_raw(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float32)
        if X.shape[0] == 0:
            return np.zeros((0, 4))
        return _forest_mean(X, self._roots, self._feat, self._thr, self._right, self._value)

    def to_dict(self) -> dict:
        leaf = self.feature < 0
        inner = ~leaf
        local_right = self.right - np.repeat(self.roots, np.diff(np.append(self.roots, self.feature.size)))
        return {
            "kind": "rf",
            "n_features": self.n_features,
            "depth": self.depth,
            "tree_sizes": np.diff(np.append(self.roots, self.feature.size)).tolist(),
            "feature": self.feature.tolist(),
            "threshold": _f32_text(self.threshold[inner]),
            "right": local_right[inner].tolist(),
            "value": _f32_text(self.value[leaf].ravel()),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ForestModel":
        sizes = np.array(doc["tree_sizes"], dtype=np.int64)
        roots = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
        feature = np.array(doc["feature"], dtype=np.int64)
        n = feature.size
        leaf = feature < 0
        idx = np.arange(n)
        offset = np.repeat(roots, sizes)
        left = np.where(leaf, idx, idx + 1)
        right = idx.copy()
        right[~leaf] = np.array(doc["right"], dtype=np.int64) + offset[~leaf]
        threshold = np.zeros(n, dtype=np.float32)
        threshold[~leaf] = np.array(doc["threshold"], dtype=np.float32)
        value = np.zeros((n, 4), dtype=np.float32)
        value[leaf] = np.array(doc["value"], dtype=np.float32).reshape(-1, 4)
        return cls(feature, threshold, left, right, value, roots, int(doc["n_features"]), int(doc["depth"]))


def train_rf(X: np.ndarray, Y: np.ndarray, opts: RFOptions | None = None) -> ForestModel:
    opts = opts or RFOptions()
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    F = X.shape[1]
    y_mean = Y.mean(axis=0)
    y_std = Y.std(axis=0)
    y_std = np.where(y_std > 1e-12, y_std, 1.0)
    mtry = opts.mtry if opts.mtry is not None else max(1, math.ceil(F / 3))
    rf = RandomForestRegressor(
        n_estimators=opts.n_trees,
        max_depth=opts.max_depth,
        min_samples_leaf=opts.min_leaf,
        max_features=min(mtry, F),
        bootstrap=opts.bootstrap and X.shape[0] > 1,
        random_state=opts.seed,
        n_jobs=1,
    )
    rf.fit(X, (Y - y_mean) / y_std)

    feats, thrs, lefts, rights, vals, roots = [], [], [], [], [], []
    offset = 0
    depth = 0
    for est in rf.estimators_:
        tr = est.tree_
        n = tr.node_count
        leaf = tr.children_left < 0
        idx = np.arange(n)
        if np.any(tr.children_left[~leaf] != idx[~leaf] + 1):
            raise RuntimeError("expected depth-first node order")
        feats.append(np.where(leaf, -1, tr.feature).astype(np.int64))
        thrs.append(_floor_f32(np.where(leaf, 0.0, tr.threshold)))
        lefts.append(np.where(leaf, idx, tr.children_left) + offset)
        rights.append(np.where(leaf, idx, tr.children_right) + offset)
        vals.append((tr.value[:, :, 0] * y_std + y_mean).astype(np.float32))
        roots.append(offset)
        offset += n
        depth = max(depth, tr.max_depth)
    return ForestModel(
        np.concatenate(feats),
        np.concatenate(thrs),
        np.concatenate(lefts),
        np.concatenate(rights),
        np.concatenate(vals),
        np.array(roots, dtype=np.int64),
        F,
        depth,
    )
