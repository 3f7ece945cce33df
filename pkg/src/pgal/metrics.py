"""Downstream evaluation: retrain on the selected labels, score test assertions.

Accuracy and macro-F1 are computed over labeled test-split assertions only.
Macro-F1 is the unweighted mean of per-class F1 across all classes; a class
with no true and no predicted members contributes F1 = 0, which keeps the
metric defined on small test splits.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from pgal import gcn
from pgal.graph import Graph


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    macro_f1: float
    precision: np.ndarray      # per class
    recall: np.ndarray
    f1: np.ndarray
    confusion: np.ndarray      # (c, c), rows = truth
    test_count: int
    elapsed_ms: dict


@dataclass(frozen=True)
class AggregateStats:
    mean_accuracy: float
    std_accuracy: float
    mean_macro_f1: float
    std_macro_f1: float
    count: int
    std_defined: bool


def confusion_matrix(y_true, y_pred, class_count: int) -> np.ndarray:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    cm = np.zeros((class_count, class_count), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def classification_scores(cm: np.ndarray):
    """Per-class precision/recall/F1 from a confusion matrix; empty classes
    score 0 on all three."""
    tp = np.diag(cm).astype(np.float64)
    pred_total = cm.sum(axis=0).astype(np.float64)
    true_total = cm.sum(axis=1).astype(np.float64)
    precision = np.divide(tp, pred_total, out=np.zeros_like(tp), where=pred_total > 0)
    recall = np.divide(tp, true_total, out=np.zeros_like(tp), where=true_total > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)
    return precision, recall, f1


def evaluate(g: Graph, labeled, hyper: gcn.GcnHyper) -> EvalReport:
    """Train a fresh GCN on `labeled` and score the test assertions."""
    test_idx = g.test_assertions()
    if test_idx.size == 0:
        raise ValueError("test split is empty")

    elapsed = {}
    start = time.perf_counter()
    model = gcn.train(g, labeled, hyper)
    elapsed["train"] = (time.perf_counter() - start) * 1e3

    start = time.perf_counter()
    probs = gcn.predict_distributions(model, g)
    y_pred = probs[test_idx].argmax(axis=1)
    y_true = g.labels[test_idx]
    cm = confusion_matrix(y_true, y_pred, g.class_count)
    precision, recall, f1 = classification_scores(cm)
    elapsed["predict"] = (time.perf_counter() - start) * 1e3

    accuracy = float(np.diag(cm).sum() / cm.sum())
    return EvalReport(accuracy=accuracy,
                      macro_f1=float(f1.mean()),
                      precision=precision, recall=recall, f1=f1,
                      confusion=cm, test_count=int(test_idx.size),
                      elapsed_ms=elapsed)


def aggregate(reports) -> AggregateStats:
    """Mean and sample standard deviation (n-1) over a group of reports."""
    reports = list(reports)
    if not reports:
        raise ValueError("need at least one report")
    acc = np.array([r.accuracy for r in reports])
    f1 = np.array([r.macro_f1 for r in reports])
    if len(reports) == 1:
        return AggregateStats(float(acc[0]), 0.0, float(f1[0]), 0.0, 1, False)
    return AggregateStats(float(acc.mean()), float(acc.std(ddof=1)),
                          float(f1.mean()), float(f1.std(ddof=1)),
                          len(reports), True)
