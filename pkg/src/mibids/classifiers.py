"""IBk (k-NN), RandomTree, RandomForest and RandomCommittee, written from scratch.

Distributions are always length-8 vectors in class-ordinal order. Every
tie (equal distances, equal votes, equal averaged probabilities) resolves to
the earliest training index or lowest class ordinal.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import (
    KTooLarge,
    ModelFormatError,
    OutOfRange,
    SchemaMismatch,
    UnlabeledDataset,
    UsageError,
)
from .schema import CLASSES, N_CLASSES, Dataset, MibRecord, TrafficClass, min_max_bounds

MODEL_FORMAT = "mibids-model"
MODEL_VERSION = 1

CLASSIFIERS = ("ibk", "random-tree", "random-forest", "random-committee")
WEKA_NAMES = {
    "ibk": "lazy.IBk",
    "random-tree": "trees.RandomTree",
    "random-forest": "trees.RandomForest",
    "random-committee": "meta.RandomCommittee",
}
DEFAULT_PARAMS = {
    "ibk": {"k": 1},
    "random-tree": {"attrs_per_split": "auto"},
    "random-forest": {"trees": 100, "attrs_per_split": "auto"},
    "random-committee": {"members": 10, "attrs_per_split": "auto"},
}


@dataclass(frozen=True)
class ClassifierSpec:
    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in CLASSIFIERS:
            raise UsageError(f"unknown classifier {self.name!r}; valid: {', '.join(CLASSIFIERS)}")
        merged = dict(DEFAULT_PARAMS[self.name])
        merged.update({k: v for k, v in self.params.items() if v is not None})
        object.__setattr__(self, "params", merged)


# ---------------------------------------------------------------- trees


@dataclass(frozen=True)
class Leaf:
    dist: tuple


@dataclass(frozen=True)
class Split:
    attr: int  # 0-based position within the model's feature subset
    threshold: float
    left: "Node"  # values <= threshold
    right: "Node"


Node = Union[Leaf, Split]


def _entropy_rows(counts: np.ndarray) -> np.ndarray:
    """Base-2 entropy of each row of a count matrix (rows may be all-zero)."""
    tot = counts.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(tot > 0, counts / np.where(tot > 0, tot, 1), 0.0)
        logs = np.where(p > 0, np.log2(np.where(p > 0, p, 1)), 0.0)
    return -(p * logs).sum(axis=1)


def best_split(x: np.ndarray, y0: np.ndarray) -> tuple[float, float]:
    """Best information-gain threshold on one attribute.

    ``y0`` holds 0-based class indices. Returns ``(gain, threshold)``; the
    gain is 0 when the attribute is constant in the node.
    """
    order = np.argsort(x, kind="stable")
    xs = x[order]
    n = len(xs)
    onehot = np.zeros((n, N_CLASSES))
    onehot[np.arange(n), y0[order]] = 1.0
    left = np.cumsum(onehot, axis=0)[:-1]
    cut = np.flatnonzero(xs[1:] > xs[:-1])  # split after position cut
    if cut.size == 0:
        return 0.0, float("nan")
    total = left[-1] + onehot[-1]
    L = left[cut]
    R = total - L
    nl = (cut + 1).astype(float)
    h_parent = _entropy_rows(total[None, :])[0]
    h_split = (nl * _entropy_rows(L) + (n - nl) * _entropy_rows(R)) / n
    gains = h_parent - h_split
    b = int(np.argmax(gains))
    lo, hi = xs[cut[b]], xs[cut[b] + 1]
    thr = (lo + hi) / 2.0
    if not lo <= thr < hi:
        thr = lo
    return float(gains[b]), float(thr)


def auto_attrs(n_features: int) -> int:
    return int(math.floor(math.log2(n_features))) + 1 if n_features > 0 else 1


def _resolve_attrs(value, n_features: int) -> int:
    if value in (None, "auto", "AUTO", 0):
        return min(auto_attrs(n_features), n_features)
    value = int(value)
    if value < 1:
        raise UsageError("attrs_per_split must be >= 1")
    return min(value, n_features)


def grow_tree(X: np.ndarray, y0: np.ndarray, rng: np.random.Generator, attrs_per_split: int) -> Node:
    """Grow an unpruned random tree on ``X`` (already projected to the feature subset).

    At each node the attributes are visited in a fresh random order; the
    first ``attrs_per_split`` are evaluated and, if none of them has positive
    gain, further attributes are drawn until one does or all are exhausted.
    """
    F = X.shape[1]

    def build(idx: np.ndarray) -> Node:
        ys = y0[idx]
        counts = np.bincount(ys, minlength=N_CLASSES).astype(float)
        dist = tuple(float(v) for v in counts / counts.sum())
        if len(idx) < 2 or np.count_nonzero(counts) == 1:
            return Leaf(dist)
        perm = rng.permutation(F)
        best = (0.0, -1, 0.0)
        for pos, a in enumerate(perm):
            if pos >= attrs_per_split and best[0] > 0:
                break
            gain, thr = best_split(X[idx, a], ys)
            if gain > best[0] + 1e-12:
                best = (gain, int(a), thr)
        gain, a, thr = best
        if gain <= 0 or a < 0:
            return Leaf(dist)
        mask = X[idx, a] <= thr
        return Split(a, thr, build(idx[mask]), build(idx[~mask]))

    return build(np.arange(X.shape[0]))


def tree_predict_proba(node: Node, X: np.ndarray) -> np.ndarray:
    out = np.zeros((X.shape[0], N_CLASSES))

    def walk(nd, idx):
        if idx.size == 0:
            return
        if isinstance(nd, Leaf):
            out[idx] = nd.dist
            return
        go_left = X[idx, nd.attr] <= nd.threshold
        walk(nd.left, idx[go_left])
        walk(nd.right, idx[~go_left])

    walk(node, np.arange(X.shape[0]))
    return out


def tree_size(node: Node) -> int:
    return 1 if isinstance(node, Leaf) else 1 + tree_size(node.left) + tree_size(node.right)


def _node_to_dict(node: Node):
    if isinstance(node, Leaf):
        return {"dist": list(node.dist)}
    return {"attr": node.attr, "thr": node.threshold,
            "left": _node_to_dict(node.left), "right": _node_to_dict(node.right)}


def _node_from_dict(d) -> Node:
    if "dist" in d:
        return Leaf(tuple(float(v) for v in d["dist"]))
    return Split(int(d["attr"]), float(d["thr"]), _node_from_dict(d["left"]), _node_from_dict(d["right"]))


# ---------------------------------------------------------------- models


@dataclass(eq=False)
class TrainedModel:
    kind: str
    features: tuple  # 1-based schema positions
    norm_bounds: np.ndarray  # (len(features), 2)
    schema_names: tuple
    seed: int
    params: dict
    instances: np.ndarray | None = None  # normalised, IBk only
    labels: np.ndarray | None = None  # class ordinals, IBk only
    trees: list = field(default_factory=list)
    class_list: tuple = CLASSES

    def to_json(self) -> str:
        doc = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kind": self.kind,
            "params": self.params,
            "seed": self.seed,
            "schema": list(self.schema_names),
            "features": list(self.features),
            "norm_bounds": self.norm_bounds.tolist(),
            "classes": [c.label for c in self.class_list],
        }
        if self.kind == "ibk":
            doc["instances"] = self.instances.tolist()
            doc["labels"] = self.labels.tolist()
        else:
            doc["trees"] = [_node_to_dict(t) for t in self.trees]
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "TrainedModel":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ModelFormatError(f"model file is not JSON: {e}") from None
        if doc.get("format") != MODEL_FORMAT:
            raise ModelFormatError("not a model document")
        if doc.get("version") != MODEL_VERSION:
            raise ModelFormatError(f"unsupported model version {doc.get('version')!r}")
        kind = doc["kind"]
        if kind not in CLASSIFIERS:
            raise ModelFormatError(f"unknown model kind {kind!r}")
        m = cls(
            kind=kind,
            features=tuple(doc["features"]),
            norm_bounds=np.array(doc["norm_bounds"], dtype=float).reshape(-1, 2),
            schema_names=tuple(doc["schema"]),
            seed=int(doc["seed"]),
            params=doc["params"],
            class_list=tuple(TrafficClass.parse(c) for c in doc["classes"]),
        )
        if kind == "ibk":
            m.instances = np.array(doc["instances"], dtype=float).reshape(-1, len(m.features))
            m.labels = np.array(doc["labels"], dtype=np.int64)
        else:
            m.trees = [_node_from_dict(t) for t in doc["trees"]]
        return m

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "TrainedModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


def _check_features(ds: Dataset, features: Sequence[int] | None) -> tuple:
    if not ds.labeled:
        raise UnlabeledDataset("training requires a labeled dataset")
    if len(ds) == 0:
        raise UnlabeledDataset("training requires at least one record")
    if features is None:
        features = range(1, ds.n_features + 1)
    features = tuple(int(f) for f in features)
    if not features:
        raise OutOfRange("feature subset must be non-empty")
    for f in features:
        if not 1 <= f <= ds.n_features:
            raise OutOfRange(f"feature index {f} outside 1..{ds.n_features}")
    return features


def _bounds(ds: Dataset, features) -> np.ndarray:
    return min_max_bounds(ds)[[f - 1 for f in features]]


def normalize(X: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    """Min-max scale and clamp to [0, 1]; constant columns map to 0."""
    lo, hi = bounds[:, 0], bounds[:, 1]
    span = hi - lo
    Z = (X - lo) / np.where(span > 0, span, 1.0)
    Z[:, span <= 0] = 0.0
    return np.clip(Z, 0.0, 1.0)


def train_ibk(ds: Dataset, features: Sequence[int] | None = None, k: int = 1) -> TrainedModel:
    features = _check_features(ds, features)
    if k < 1:
        raise UsageError("k must be >= 1")
    if k > len(ds):
        raise KTooLarge(f"k={k} exceeds the {len(ds)} training records")
    bounds = _bounds(ds, features)
    Z = normalize(ds.X[:, [f - 1 for f in features]], bounds)
    return TrainedModel("ibk", features, bounds, tuple(ds.names), 0, {"k": k},
                        instances=Z, labels=np.array(ds.y))


def _ibk_proba(m: TrainedModel, Zq: np.ndarray, chunk: int = 512) -> np.ndarray:
    k = int(m.params["k"])
    S, labels = m.instances, m.labels
    out = np.zeros((Zq.shape[0], N_CLASSES))
    for start in range(0, Zq.shape[0], chunk):
        q = Zq[start:start + chunk]
        d2 = np.zeros((q.shape[0], S.shape[0]))
        for j in range(S.shape[1]):  # fixed left-to-right accumulation
            diff = q[:, j][:, None] - S[None, :, j]
            d2 += diff * diff
        if k == 1:
            # argmin returns the first minimum, i.e. the earliest training index
            out[start + np.arange(q.shape[0]), labels[np.argmin(d2, axis=1)] - 1] = 1.0
            continue
        kth = np.partition(d2, k - 1, axis=1)[:, k - 1]
        for r in range(q.shape[0]):
            cand = np.flatnonzero(d2[r] <= kth[r])
            near = cand[np.argsort(d2[r, cand], kind="stable")[:k]]
            out[start + r] = np.bincount(labels[near] - 1, minlength=N_CLASSES) / k
    return out


def _train_tree_payload(ds, features, seed, attrs_per_split, bootstrap, rng=None):
    X = ds.X[:, [f - 1 for f in features]]
    y0 = ds.y - 1
    rng = rng if rng is not None else np.random.default_rng(seed)
    if bootstrap:
        idx = rng.integers(0, len(ds), size=len(ds))
        X, y0 = X[idx], y0[idx]
    return grow_tree(X, y0, rng, _resolve_attrs(attrs_per_split, len(features)))


def train_random_tree(ds: Dataset, features: Sequence[int] | None = None, seed: int = 1,
                      attrs_per_split="auto") -> Node:
    features = _check_features(ds, features)
    return _train_tree_payload(ds, features, seed, attrs_per_split, bootstrap=False)


def train_random_tree_model(ds, features=None, seed=1, attrs_per_split="auto") -> TrainedModel:
    features = _check_features(ds, features)
    tree = train_random_tree(ds, features, seed, attrs_per_split)
    return TrainedModel("random-tree", features, _bounds(ds, features), tuple(ds.names), seed,
                        {"attrs_per_split": attrs_per_split}, trees=[tree])


def train_random_forest(ds: Dataset, features: Sequence[int] | None = None, trees: int = 100,
                        seed: int = 1, attrs_per_split="auto", bootstrap: bool = True) -> TrainedModel:
    """Bagged random trees; tree ``i`` draws from the ``i``-th spawned seed substream."""
    features = _check_features(ds, features)
    if trees < 1:
        raise UsageError("trees must be >= 1")
    streams = np.random.SeedSequence(seed).spawn(trees)
    payload = [
        _train_tree_payload(ds, features, seed, attrs_per_split, bootstrap,
                            rng=np.random.default_rng(s))
        for s in streams
    ]
    return TrainedModel("random-forest", features, _bounds(ds, features), tuple(ds.names), seed,
                        {"trees": trees, "attrs_per_split": attrs_per_split}, trees=payload)


def train_random_committee(ds: Dataset, features: Sequence[int] | None = None, members: int = 10,
                           seed: int = 1, attrs_per_split="auto") -> TrainedModel:
    """Random trees on the full data, member ``i`` seeded with ``seed + i``."""
    features = _check_features(ds, features)
    if members < 1:
        raise UsageError("members must be >= 1")
    payload = [train_random_tree(ds, features, seed + i, attrs_per_split) for i in range(members)]
    return TrainedModel("random-committee", features, _bounds(ds, features), tuple(ds.names), seed,
                        {"members": members, "attrs_per_split": attrs_per_split}, trees=payload)


def train(spec: ClassifierSpec, ds: Dataset, features: Sequence[int] | None = None,
          seed: int = 1) -> TrainedModel:
    p = spec.params
    if spec.name == "ibk":
        return train_ibk(ds, features, k=int(p["k"]))
    if spec.name == "random-tree":
        return train_random_tree_model(ds, features, seed, p["attrs_per_split"])
    if spec.name == "random-forest":
        return train_random_forest(ds, features, int(p["trees"]), seed, p["attrs_per_split"])
    return train_random_committee(ds, features, int(p["members"]), seed, p["attrs_per_split"])


# ---------------------------------------------------------------- prediction


def _as_matrix(m: TrainedModel, X) -> np.ndarray:
    if isinstance(X, MibRecord):
        X = [X.values]
    elif isinstance(X, Dataset):
        if tuple(X.names) != tuple(m.schema_names):
            raise SchemaMismatch(f"dataset columns {X.names} differ from model schema {list(m.schema_names)}")
        X = X.X
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != len(m.schema_names):
        raise SchemaMismatch(f"record has {X.shape[1]} values, model schema has {len(m.schema_names)}")
    return X[:, [f - 1 for f in m.features]]


def predict_proba(m: TrainedModel, X) -> np.ndarray:
    """Class distributions for a record, dataset or raw ``(n, F)`` matrix."""
    Xf = _as_matrix(m, X)
    if m.kind == "ibk":
        return _ibk_proba(m, normalize(Xf, m.norm_bounds))
    acc = np.zeros((Xf.shape[0], N_CLASSES))
    for t in m.trees:
        acc += tree_predict_proba(t, Xf)
    P = acc / len(m.trees)
    return P / P.sum(axis=1, keepdims=True)


def argmax_class(dist) -> TrafficClass:
    # np.argmax returns the first maximum: lowest ordinal wins ties
    return CLASSES[int(np.argmax(dist))]


def predict_many(m: TrainedModel, X) -> tuple[list[TrafficClass], np.ndarray]:
    P = predict_proba(m, X)
    return [argmax_class(p) for p in P], P


def predict(m: TrainedModel, x) -> tuple[TrafficClass, np.ndarray]:
    P = predict_proba(m, x)
    return argmax_class(P[0]), P[0]


def predict_ibk(m: TrainedModel, x) -> tuple[TrafficClass, np.ndarray]:
    if m.kind != "ibk":
        raise UsageError("predict_ibk needs an IBk model")
    return predict(m, x)
