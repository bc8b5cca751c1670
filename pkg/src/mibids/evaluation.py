"""Stratified cross-validation, confusion matrices and per-class metrics."""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .classifiers import ClassifierSpec, predict_proba, train
from .errors import EmptyMatrix, ModelFormatError, TooFewRecords, UnlabeledDataset, UsageError
from .schema import CLASSES, N_CLASSES, Dataset

REPORT_FORMAT = "mibids-eval-report"
REPORT_VERSION = 1


@dataclass(frozen=True)
class ClassMetrics:
    cls: str
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f_measure: float


@dataclass
class EvalReport:
    classifier: str
    features: list
    folds: int
    seed: int
    confusion: list  # 8x8, rows = actual, cols = predicted
    per_class: list
    accuracy: float
    evaluator: str | None = None
    params: dict = field(default_factory=dict)
    wall_clock_seconds: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        return {"format": REPORT_FORMAT, "version": REPORT_VERSION, **d}

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        if d.get("format") != REPORT_FORMAT or d.get("version") != REPORT_VERSION:
            raise ModelFormatError(f"unsupported report document (version {d.get('version')!r})")
        d = {k: v for k, v in d.items() if k not in ("format", "version")}
        d["per_class"] = [ClassMetrics(**m) for m in d["per_class"]]
        return cls(**d)


def confusion_matrix(actual, predicted) -> np.ndarray:
    """8x8 count matrix from class ordinals (1-8)."""
    cm = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(cm, (np.asarray(actual) - 1, np.asarray(predicted) - 1), 1)
    return cm


def compute_metrics(cm) -> tuple[list[ClassMetrics], float]:
    cm = np.asarray(cm, dtype=np.int64)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or np.any(cm < 0):
        raise UsageError("confusion matrix must be square with non-negative counts")
    total = int(cm.sum())
    if total == 0:
        raise EmptyMatrix("confusion matrix is empty")
    names = [c.label for c in CLASSES] if cm.shape[0] == N_CLASSES else [str(i + 1) for i in range(cm.shape[0])]
    out = []
    for i, name in enumerate(names):
        tp = int(cm[i, i])
        fp = int(cm[:, i].sum()) - tp
        fn = int(cm[i, :].sum()) - tp
        p = tp / (tp + fp) if tp + fp > 0 else 0.0
        r = tp / (tp + fn) if tp + fn > 0 else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        out.append(ClassMetrics(name, tp, fp, fn, p, r, f))
    return out, int(np.trace(cm)) / total


def stratified_folds(ds: Dataset, folds: int = 10, seed: int = 1) -> list[tuple[np.ndarray, np.ndarray]]:
    """Shuffle, group by class, then deal positions round-robin into folds.

    Dealing continues across class boundaries, so leftover records of small
    classes spread over different folds instead of piling into fold 0.
    """
    if not ds.labeled:
        raise UnlabeledDataset("stratified folds need labels")
    if folds < 2:
        raise UsageError("folds must be >= 2")
    n = len(ds)
    if n < folds:
        raise TooFewRecords(f"{n} records cannot fill {folds} folds")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    perm = perm[np.argsort(ds.y[perm], kind="stable")]
    assign = np.empty(n, dtype=np.int64)
    assign[perm] = np.arange(n) % folds
    all_idx = np.arange(n)
    return [(all_idx[assign != f], all_idx[assign == f]) for f in range(folds)]


def cross_validate(ds: Dataset, spec: ClassifierSpec, features=None, folds: int = 10, seed: int = 1,
                   evaluator: str | None = None) -> EvalReport:
    if features is None:
        features = list(range(1, ds.n_features + 1))
    t0 = time.perf_counter()
    cm = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for train_idx, test_idx in stratified_folds(ds, folds, seed):
        model = train(spec, ds.subset(train_idx), features, seed=seed)
        P = predict_proba(model, ds.X[test_idx])
        pred = np.argmax(P, axis=1) + 1
        cm += confusion_matrix(ds.y[test_idx], pred)
    per_class, acc = compute_metrics(cm)
    return EvalReport(
        classifier=spec.name,
        features=[int(f) for f in features],
        folds=folds,
        seed=seed,
        confusion=cm.tolist(),
        per_class=per_class,
        accuracy=acc,
        evaluator=evaluator,
        params=dict(spec.params),
        wall_clock_seconds=time.perf_counter() - t0,
    )


def format_rate(accuracy: float) -> str:
    return f"{accuracy * 100:.2f}%"


def emit_report(r: EvalReport, fmt: str = "json") -> bytes:
    if fmt == "json":
        return (json.dumps(r.to_dict(), indent=2) + "\n").encode()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["class", "tp", "fp", "fn", "precision", "recall", "f_measure"])
        for m in r.per_class:
            w.writerow([m.cls, m.tp, m.fp, m.fn, repr(m.precision), repr(m.recall), repr(m.f_measure)])
        return buf.getvalue().encode()
    if fmt == "markdown":
        lines = [
            f"## {r.classifier}" + (f" ({r.evaluator}, features {','.join(map(str, r.features))})"
                                    if r.evaluator else f" (features {','.join(map(str, r.features))})"),
            "",
            f"Correctly Classified Instances Rate: {format_rate(r.accuracy)}",
            f"Protocol: {r.folds}-fold stratified CV, seed {r.seed}",
            "",
            "| Class | Precision | Recall | F-Measure |",
            "|---|---|---|---|",
        ]
        for m in r.per_class:
            lines.append(f"| {m.cls} | {m.precision:.4f} | {m.recall:.4f} | {m.f_measure:.4f} |")
        return ("\n".join(lines) + "\n").encode()
    raise UsageError(f"unknown report format {fmt!r}")


def load_report(data: bytes | str) -> EvalReport:
    if isinstance(data, bytes):
        data = data.decode()
    return EvalReport.from_dict(json.loads(data))
