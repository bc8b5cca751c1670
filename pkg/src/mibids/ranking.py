"""Attribute evaluators: InfoGain, ReliefF, class correlation, CFS and a wrapper.

Attribute indices are 1-based positions in the dataset schema, which for the
interface dataset coincide with the IF-MIB labels 1-8. Rankings sort by
descending score; ties go to the lower index.
"""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    FewerThanTwoAttributes,
    FewerThanTwoClasses,
    OutOfRange,
    UnlabeledDataset,
    UsageError,
)
from .schema import Dataset, min_max_bounds

EVALUATORS = ("infogain", "correlation", "relieff", "cfs", "wrapper")
WEKA_NAMES = {
    "infogain": "InfoGainAttributeEval",
    "correlation": "CorrelationAttributeEval",
    "relieff": "ReliefFAttributeEval",
    "cfs": "CfsSubsetEval",
    "wrapper": "ClassifierAttributeEval",
}


@dataclass
class RankingResult:
    evaluator: str
    scores: np.ndarray
    order: list[int]
    params: dict = field(default_factory=dict)
    names: list[str] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        doc = {
            "evaluator": self.evaluator,
            "params": self.params,
            "scores": [
                {"attr": i + 1, "name": self.names[i] if self.names else None, "score": float(s)}
                for i, s in enumerate(self.scores)
            ],
            "order": list(self.order),
        }
        if self.flags:
            doc["flags"] = self.flags
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RankingResult":
        doc = json.loads(text)
        entries = sorted(doc["scores"], key=lambda e: e["attr"])
        return cls(
            evaluator=doc["evaluator"],
            scores=np.array([e["score"] for e in entries], dtype=float),
            order=list(doc["order"]),
            params=doc.get("params", {}),
            names=[e.get("name") for e in entries],
            flags=doc.get("flags", []),
        )


@dataclass(frozen=True)
class SubsetResult:
    selected: frozenset
    merit: float
    path: tuple = ()  # attributes in the order the search added them


def rank_scores(scores) -> list[int]:
    scores = np.asarray(scores, dtype=float)
    return sorted(range(1, len(scores) + 1), key=lambda a: (-scores[a - 1], a))


def _result(name, scores, ds, params, flags=()):
    scores = np.asarray(scores, dtype=float)
    return RankingResult(name, scores, rank_scores(scores), dict(params), ds.names, list(flags))


def top_n(r: RankingResult, n: int) -> list[int]:
    if not 1 <= n <= len(r.order):
        raise OutOfRange(f"top-n must lie in 1..{len(r.order)}, got {n}")
    return list(r.order[:n])


def _require_labels(ds: Dataset):
    if not ds.labeled:
        raise UnlabeledDataset("evaluator requires a labeled dataset")


def entropy(counts) -> float:
    """Base-2 entropy of a count vector."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def equal_width_bins(col: np.ndarray, bins: int) -> np.ndarray:
    lo, hi = col.min(), col.max()
    if hi <= lo:
        return np.zeros(len(col), dtype=np.int64)
    idx = np.floor((col - lo) / (hi - lo) * bins).astype(np.int64)
    return np.clip(idx, 0, bins - 1)


def info_gain(ds: Dataset, bins: int = 10) -> RankingResult:
    _require_labels(ds)
    if bins < 2:
        raise UsageError("bins must be >= 2")
    y = ds.y - 1
    h_class = entropy(np.bincount(y, minlength=8))
    n = len(ds)
    scores = np.zeros(ds.n_features)
    for j in range(ds.n_features):
        b = equal_width_bins(ds.X[:, j], bins)
        joint = np.zeros((bins, 8))
        np.add.at(joint, (b, y), 1)
        h_cond = sum(row.sum() / n * entropy(row) for row in joint if row.sum() > 0)
        scores[j] = max(h_class - h_cond, 0.0)
    flags = ["single-class"] if np.count_nonzero(np.bincount(y)) < 2 else []
    return _result("infogain", scores, ds, {"bins": bins}, flags)


def pearson_abs(a: np.ndarray, b: np.ndarray) -> float:
    """|Pearson r|; zero when either vector is constant."""
    da = a - a.mean()
    db = b - b.mean()
    sa = math.sqrt(float(da @ da))
    sb = math.sqrt(float(db @ db))
    if sa == 0 or sb == 0:
        return 0.0
    return min(abs(float(da @ db)) / (sa * sb), 1.0)


def _class_correlations(ds: Dataset) -> np.ndarray:
    y = ds.y
    n = len(ds)
    scores = np.zeros(ds.n_features)
    for c in np.unique(y):
        ind = (y == c).astype(float)
        prior = ind.sum() / n
        for j in range(ds.n_features):
            scores[j] += prior * pearson_abs(ds.X[:, j], ind)
    return scores


def class_correlation(ds: Dataset) -> RankingResult:
    _require_labels(ds)
    return _result("correlation", _class_correlations(ds), ds, {})


def normalized(ds: Dataset) -> np.ndarray:
    """Min-max scaled copy of ``ds.X``; constant columns map to 0."""
    bounds = min_max_bounds(ds)
    span = bounds[:, 1] - bounds[:, 0]
    safe = np.where(span > 0, span, 1.0)
    Z = (ds.X - bounds[:, 0]) / safe
    Z[:, span == 0] = 0.0
    return Z


def relieff(ds: Dataset, k: int = 10, m: int | None = None, seed: int = 1,
            chunk: int = 256) -> RankingResult:
    """ReliefF weights with Manhattan neighbour search on min-max scaled features.

    ``m=None`` samples every instance once (in seeded shuffled order). For each
    sample the k nearest hits and, per other class, the k nearest misses are
    found (fewer if the class is smaller); distance ties go to the lower
    record index.
    """
    _require_labels(ds)
    if k < 1:
        raise UsageError("k must be >= 1")
    y = ds.y
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise FewerThanTwoClasses("ReliefF needs at least two classes")
    n = len(ds)
    prior = {int(c): cnt / n for c, cnt in zip(classes, counts)}
    members = {int(c): np.flatnonzero(y == c) for c in classes}

    rng = np.random.default_rng(seed)
    sample = rng.permutation(n)
    if m is not None:
        if not 1 <= m <= n:
            raise UsageError(f"m must lie in 1..{n}")
        sample = sample[:m]
    n_samples = len(sample)

    Z = normalized(ds)
    W = np.zeros(ds.n_features)
    for start in range(0, n_samples, chunk):
        rows = sample[start:start + chunk]
        D = np.zeros((len(rows), n))
        for j in range(ds.n_features):
            D += np.abs(Z[rows, j][:, None] - Z[None, :, j])
        D[np.arange(len(rows)), rows] = np.inf  # never your own neighbour
        for r_pos, i in enumerate(rows):
            ci = int(y[i])
            upd = np.zeros(ds.n_features)
            for c, idx in members.items():
                if c == ci:
                    idx = idx[idx != i]
                    if idx.size == 0:
                        continue
                dist = D[r_pos, idx]
                near = idx[np.argsort(dist, kind="stable")[:k]]
                mean_diff = np.abs(Z[near] - Z[i]).mean(axis=0)
                if c == ci:
                    upd -= mean_diff
                else:
                    upd += prior[c] / (1.0 - prior[ci]) * mean_diff
            W += upd
    W /= n_samples
    return _result("relieff", W, ds, {"k": k, "m": "all" if m is None else m, "seed": seed})


def _feature_corr_matrix(X: np.ndarray) -> np.ndarray:
    F = X.shape[1]
    R = np.eye(F)
    for a in range(F):
        for b in range(a + 1, F):
            R[a, b] = R[b, a] = pearson_abs(X[:, a], X[:, b])
    return R


def cfs_merit(subset: Sequence[int], r_cf: np.ndarray, r_ff: np.ndarray) -> float:
    """Merit of a 0-based attribute subset."""
    s = list(subset)
    k = len(s)
    if k == 0:
        return 0.0
    mean_cf = float(np.mean(r_cf[s]))
    if k == 1:
        mean_ff = 0.0
    else:
        pairs = [r_ff[a, b] for i, a in enumerate(s) for b in s[i + 1:]]
        mean_ff = float(np.mean(pairs))
    denom = math.sqrt(k + k * (k - 1) * mean_ff)
    return k * mean_cf / denom if denom > 0 else 0.0


def cfs_subset(ds: Dataset, stale_limit: int = 5) -> SubsetResult:
    """Forward best-first search over subsets, maximising CFS merit."""
    _require_labels(ds)
    F = ds.n_features
    if F < 2:
        raise FewerThanTwoAttributes("CFS needs at least two attributes")
    r_cf = _class_correlations(ds)
    r_ff = _feature_corr_matrix(ds.X)

    def key(s):
        return tuple(sorted(s))

    start: tuple = ()
    best_set, best_merit, best_path = start, 0.0, ()
    # heap entries: (-merit, sorted subset, path)
    heap = [(-0.0, key(start), ())]
    visited = {key(start)}
    stale = 0
    while heap and stale < stale_limit:
        neg, s, path = heapq.heappop(heap)
        improved = False
        for a in range(F):
            if a in s:
                continue
            child = key(s + (a,))
            if child in visited:
                continue
            visited.add(child)
            merit = cfs_merit(child, r_cf, r_ff)
            heapq.heappush(heap, (-merit, child, path + (a,)))
            if merit > best_merit + 1e-12 or (not best_set and merit > 0):
                best_set, best_merit, best_path = child, merit, path + (a,)
                improved = True
        stale = 0 if improved else stale + 1
    if not best_set:
        best_set, best_path = (int(np.argmax(r_cf)),), (int(np.argmax(r_cf)),)
        best_merit = cfs_merit(best_set, r_cf, r_ff)
    return SubsetResult(
        frozenset(a + 1 for a in best_set), float(best_merit), tuple(a + 1 for a in best_path)
    )


def cfs_ranking(ds: Dataset, stale_limit: int = 5) -> RankingResult:
    """Turn the CFS subset into an ordering usable for top-n selection.

    Selected attributes come first, in the order the search added them;
    the rest follow by class correlation. Scores are rank-derived, so
    ``scores[order[i]]`` is strictly decreasing.
    """
    sub = cfs_subset(ds, stale_limit)
    rest = [a for a in rank_scores(_class_correlations(ds)) if a not in sub.selected]
    order = list(sub.path) + rest
    F = ds.n_features
    scores = np.zeros(F)
    for pos, a in enumerate(order):
        scores[a - 1] = (F - pos) / F
    return RankingResult("cfs", scores, order,
                         {"stale_limit": stale_limit, "selected": sorted(sub.selected),
                          "merit": sub.merit},
                         ds.names)


def wrapper_eval(ds: Dataset, base=None, folds: int = 10, seed: int = 1) -> RankingResult:
    """Score each attribute by the CV accuracy of ``base`` trained on it alone."""
    from .classifiers import ClassifierSpec
    from .evaluation import cross_validate

    _require_labels(ds)
    if folds < 2:
        raise UsageError("folds must be >= 2")
    base = base or ClassifierSpec("ibk", {"k": 1})
    scores = np.array([
        cross_validate(ds, base, [a], folds=folds, seed=seed).accuracy
        for a in range(1, ds.n_features + 1)
    ])
    return _result("wrapper", scores, ds,
                   {"classifier": base.name, **base.params, "folds": folds, "seed": seed})


def run_evaluator(name: str, ds: Dataset, *, bins: int = 10, k: int = 10, m: int | None = None,
                  seed: int = 1, folds: int = 10, base=None) -> RankingResult:
    if name == "infogain":
        return info_gain(ds, bins)
    if name == "correlation":
        return class_correlation(ds)
    if name == "relieff":
        return relieff(ds, k=k, m=m, seed=seed)
    if name == "cfs":
        return cfs_ranking(ds)
    if name == "wrapper":
        return wrapper_eval(ds, base, folds=folds, seed=seed)
    raise UsageError(f"unknown evaluator {name!r}; valid: {', '.join(EVALUATORS)}")
