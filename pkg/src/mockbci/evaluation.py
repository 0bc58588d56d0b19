"""Evaluation: F1 reports, stratified cross-validation, rest threshold.

Macro-averaged F1 is used throughout (unweighted mean of per-class F1,
with F1 = 0 whenever precision + recall is undefined).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from sklearn.model_selection import StratifiedKFold

from .errors import FoldError, ValidationError


@dataclass
class EvalReport:
    classes: tuple
    per_class_f1: dict
    macro_f1: float
    confusion: np.ndarray           # rows = true, columns = predicted
    n_trials: int
    fold_macro_f1: list[float] | None = None
    per_fold: list[tuple[int, np.ndarray, np.ndarray]] | None = field(
        default=None, repr=False)

    @property
    def accuracy(self) -> float:
        total = self.confusion.sum()
        return float(np.trace(self.confusion) / total) if total else 0.0

    @property
    def confusion_normalized(self) -> np.ndarray:
        rows = self.confusion.sum(axis=1, keepdims=True).astype(float)
        rows[rows == 0] = 1.0
        return self.confusion / rows

    @property
    def macro_f1_variance(self) -> float | None:
        if not self.fold_macro_f1:
            return None
        return float(np.var(self.fold_macro_f1))

    def to_json_dict(self) -> dict:
        out = {
            "classes": [str(c) for c in self.classes],
            "macro_f1": self.macro_f1,
            "per_class_f1": {str(k): v for k, v in self.per_class_f1.items()},
            "confusion": self.confusion.tolist(),
            "n_trials": self.n_trials,
            "accuracy": self.accuracy,
        }
        if self.fold_macro_f1 is not None:
            out["fold_macro_f1"] = self.fold_macro_f1
            out["macro_f1_variance"] = self.macro_f1_variance
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def evaluate(y_true: Sequence, y_pred: Sequence,
             classes: Sequence | None = None) -> EvalReport:
    """Per-class F1 (2PR/(P+R), 0 when undefined), macro F1 and the
    confusion matrix."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if len(y_true) != len(y_pred):
        raise ValidationError("y_true and y_pred differ in length")
    if classes is None:
        classes = np.unique(np.concatenate([y_true, y_pred]))
    classes = np.asarray(classes)
    lookup = {c: i for i, c in enumerate(classes)}
    for arr, name in ((y_true, "y_true"), (y_pred, "y_pred")):
        unknown = set(arr) - set(classes)
        if unknown:
            raise ValidationError(f"{name} contains unknown labels {unknown}")
    k = len(classes)
    confusion = np.zeros((k, k), dtype=int)
    for t, p in zip(y_true, y_pred):
        confusion[lookup[t], lookup[p]] += 1
    per_class = {}
    for i, c in enumerate(classes):
        tp = confusion[i, i]
        fp = confusion[:, i].sum() - tp
        fn = confusion[i, :].sum() - tp
        denom = 2 * tp + fp + fn
        per_class[c] = float(2 * tp / denom) if denom else 0.0
    macro = float(np.mean(list(per_class.values())))
    return EvalReport(tuple(classes), per_class, macro, confusion, len(y_true))


FitPredict = Callable[[np.ndarray, np.ndarray], np.ndarray]


def crossval(fit_predict: FitPredict, labels: Sequence, k: int,
             seed: int) -> EvalReport:
    """Stratified k-fold cross-validation harness.

    ``fit_predict(train_idx, test_idx)`` must fit on the training trials and
    return predictions for the test trials. Every trial is predicted exactly
    once; folds are deterministic given the seed.
    """
    labels = np.asarray(labels)
    classes, counts = np.unique(labels, return_counts=True)
    if k < 2:
        raise FoldError("need at least 2 folds")
    if k > counts.min():
        raise FoldError(
            f"k={k} exceeds the smallest class count ({counts.min()})")
    skf = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
    y_pred = np.empty(len(labels), dtype=labels.dtype)
    covered = np.zeros(len(labels), dtype=bool)
    per_fold = []
    fold_scores = []
    for fold, (train_idx, test_idx) in enumerate(
            skf.split(np.zeros(len(labels)), labels)):
        preds = np.asarray(fit_predict(train_idx, test_idx))
        if len(preds) != len(test_idx):
            raise ValidationError("fit_predict returned wrong prediction count")
        y_pred[test_idx] = preds
        if covered[test_idx].any():
            raise FoldError("folds overlap; trial predicted twice")
        covered[test_idx] = True
        per_fold.append((fold, test_idx, preds))
        fold_scores.append(evaluate(labels[test_idx], preds, classes).macro_f1)
    if not covered.all():
        raise FoldError("folds do not cover all trials")
    report = evaluate(labels, y_pred, classes)
    report.fold_macro_f1 = fold_scores
    report.per_fold = per_fold
    return report


def apply_rest_threshold(proba: np.ndarray, classes: Sequence, theta: float,
                         rest_label: str = "REST") -> np.ndarray:
    """Decision rule: REST iff p(REST) >= theta, else argmax over the
    movement classes."""
    classes = np.asarray(classes)
    rest_pos = int(np.flatnonzero(classes == rest_label)[0])
    move_pos = [i for i in range(len(classes)) if i != rest_pos]
    proba = np.atleast_2d(proba)
    move_winner = classes[move_pos][np.argmax(proba[:, move_pos], axis=1)]
    is_rest = proba[:, rest_pos] >= theta
    return np.where(is_rest, rest_label, move_winner)


def rest_threshold_calibrate(proba: np.ndarray, labels: Sequence,
                             classes: Sequence, rest_label: str = "REST",
                             split_fraction: float = 0.10) -> float:
    """Pick the REST threshold on the first ``split_fraction`` of trials.

    Trials must be in chronological order. The threshold maximizing macro-F1
    on the calibration slice is selected from a 101-point grid over [0, 1]
    (first maximum wins); evaluation should use only the remaining trials.
    A calibration slice missing one of the classes degenerates to
    theta = 0.5 with a warning.
    """
    proba = np.atleast_2d(np.asarray(proba, dtype=float))
    labels = np.asarray(labels)
    classes = np.asarray(classes)
    if rest_label not in classes:
        raise ValidationError(f"{rest_label!r} not among classes")
    n_cal = int(np.ceil(split_fraction * len(labels)))
    cal_proba, cal_labels = proba[:n_cal], labels[:n_cal]
    if set(classes) - set(cal_labels):
        warnings.warn(
            "calibration split is missing a class; falling back to theta=0.5",
            stacklevel=2)
        return 0.5
    grid = np.linspace(0.0, 1.0, 101)
    best_theta, best_score = 0.5, -1.0
    for theta in grid:
        preds = apply_rest_threshold(cal_proba, classes, theta, rest_label)
        score = evaluate(cal_labels, preds, classes).macro_f1
        if score > best_score:
            best_theta, best_score = float(theta), score
    return best_theta
