"""User-level classifier training and the 5-fold evaluation protocol.

Logistic regression is trained by deterministic full-batch gradient descent
(no library solver), so identical inputs give bit-identical models. Mode F
follows the fixed-threshold protocol instead: the user threshold tau_u is
grid-searched on an inner validation split of each training fold.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import Dataset
from .errors import DegenerateDataError
from .features import DEFAULT_BINS, DEFAULT_TAU_U, MODES, FeatureExtractor

DEFAULT_TAU_U_GRID = (1, 3, 5, 10, 20, 50, 100)
MAX_ITER = 5000
GRAD_TOL = 1e-6
INITIAL_LR = 0.1


@dataclass
class TrainedModel:
    mode: str
    weights: np.ndarray
    intercept: float
    decision_threshold: float = 0.5
    l2_strength: float = 1.0
    seed: int = 0


def _logistic(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _loss(X: np.ndarray, y: np.ndarray, w: np.ndarray, b: float, l2: float) -> float:
    z = X @ w + b
    sign = 2.0 * y - 1.0
    nll = float(np.mean(np.logaddexp(0.0, -sign * z)))
    return nll + 0.5 * l2 * float(w @ w) / X.shape[0]


def train_logreg(
    X: np.ndarray, y: Sequence[int], l2: float = 1.0, seed: int = 0, mode: str = ""
) -> TrainedModel:
    """L2-regularized logistic regression via monotone gradient descent.

    Starts from zero weights with learning rate 0.1; a step that fails to
    decrease the loss halves the rate and is retried. Stops when the gradient
    max-norm drops below 1e-6 or after 5000 iterations.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    if X.shape[0] < 2:
        raise DegenerateDataError("need at least 2 training rows")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values")
    classes = np.unique(y)
    if classes.size < 2:
        raise DegenerateDataError(f"labels are single-class ({classes.tolist()})")

    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    lr = INITIAL_LR
    loss = _loss(X, y, w, b, l2)
    for _ in range(MAX_ITER):
        p = _logistic(X @ w + b)
        resid = p - y
        gw = X.T @ resid / n + l2 * w / n
        gb = float(np.mean(resid))
        if max(float(np.abs(gw).max(initial=0.0)), abs(gb)) < GRAD_TOL:
            break
        w_new = w - lr * gw
        b_new = b - lr * gb
        loss_new = _loss(X, y, w_new, b_new, l2)
        if loss_new < loss:
            w, b, loss = w_new, b_new, loss_new
        else:
            lr *= 0.5
            if lr < 1e-15:
                break
    return TrainedModel(mode=mode, weights=w, intercept=b, l2_strength=l2, seed=seed)


def predict_proba(m: TrainedModel, x: np.ndarray) -> float | np.ndarray:
    """Probability of the positive class for one row or a matrix of rows."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != m.weights.shape[0]:
        raise ValueError(
            f"feature dimension {x.shape[-1]} != model dimension {m.weights.shape[0]}"
        )
    z = x @ m.weights + m.intercept
    p = _logistic(np.atleast_1d(z))
    return float(p[0]) if z.ndim == 0 else p


# ---- metrics ----------------------------------------------------------------

def precision_recall_f1(
    pred: Sequence[int], gold: Sequence[int]
) -> tuple[float, float, float]:
    """Positive-class precision, recall, and F1; 0/0 cases resolve to 0."""
    pred = np.asarray(pred, dtype=np.int64)
    gold = np.asarray(gold, dtype=np.int64)
    if pred.shape != gold.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {gold.shape}")
    tp = int(np.sum((pred == 1) & (gold == 1)))
    fp = int(np.sum((pred == 1) & (gold == 0)))
    fn = int(np.sum((pred == 0) & (gold == 1)))
    flagged = tp + fp == 0 or tp + fn == 0
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0:
        f1, flagged = 0.0, True
    else:
        f1 = 2 * precision * recall / (precision + recall)
    if flagged:
        warnings.warn("zero division in precision/recall/F1; returning 0", RuntimeWarning)
    return precision, recall, f1


def pr_auc(scores: Sequence[float], gold: Sequence[int]) -> float:
    """Average precision: recall-increment-weighted precision over thresholds.

    Scores are swept descending with ties grouped into a single threshold.
    """
    scores = np.asarray(scores, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.int64)
    if scores.shape != gold.shape:
        raise ValueError(f"length mismatch: {scores.shape} vs {gold.shape}")
    n_pos = int(gold.sum())
    if n_pos == 0:
        raise ValueError("pr_auc needs at least one positive label")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    g = gold[order]
    group_end = np.append(s[:-1] != s[1:], True)
    cum_tp = np.cumsum(g)
    tp = cum_tp[group_end]
    pp = np.flatnonzero(group_end) + 1
    precision = tp / pp
    delta_tp = np.diff(tp, prepend=0)
    return float(np.sum(precision * delta_tp) / n_pos)


def grid_search_tau_u(
    counts: Sequence[int],
    gold: Sequence[int],
    grid: Sequence[float] = DEFAULT_TAU_U_GRID,
) -> tuple[float, float]:
    """tau_u from the grid maximizing F1; ties go to the smaller threshold."""
    if len(grid) == 0:
        raise ValueError("empty grid")
    counts = np.asarray(counts)
    gold = np.asarray(gold, dtype=np.int64)
    best_tau, best_f1 = None, -1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for tau in sorted(grid):
            _, _, f1 = precision_recall_f1((counts >= tau).astype(np.int64), gold)
            if f1 > best_f1:
                best_tau, best_f1 = tau, f1
    return best_tau, best_f1


# ---- cross-validation ---------------------------------------------------------

@dataclass
class EvalReport:
    mode: str
    seed: int
    k_folds: int
    hyperparameters: dict
    per_fold: list[dict] = field(default_factory=list)

    METRICS = ("precision", "recall", "f1", "pr_auc")

    def mean(self, metric: str) -> float:
        return float(np.mean([f[metric] for f in self.per_fold]))

    def std(self, metric: str) -> float:
        # sample std across folds, matching the mean +/- std presentation
        vals = [f[metric] for f in self.per_fold]
        return float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "k_folds": self.k_folds,
            "hyperparameters": self.hyperparameters,
            "per_fold": self.per_fold,
            "mean": {m: self.mean(m) for m in self.METRICS},
            "std": {m: self.std(m) for m in self.METRICS},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def write_csv(self, path: str | Path) -> None:
        """One-row table in the results-table layout (mean +/- std cells)."""
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["method", "precision", "recall", "f1", "pr_auc"])
            writer.writerow(
                [self.mode]
                + [f"{self.mean(m):.3f}±{self.std(m):.3f}" for m in self.METRICS]
            )


def stratified_folds(
    y: Sequence[int], k_folds: int, seed: int
) -> list[np.ndarray]:
    """Disjoint, label-stratified test folds covering every index."""
    y = np.asarray(y, dtype=np.int64)
    folds: list[list[int]] = [[] for _ in range(k_folds)]
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        if members.size < k_folds:
            raise DegenerateDataError(
                f"class {cls} has {members.size} members, fewer than {k_folds} folds"
            )
        rng = np.random.default_rng((seed, int(cls)))
        members = members[rng.permutation(members.size)]
        for j, idx in enumerate(members):
            folds[j % k_folds].append(int(idx))
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


class Standardizer:
    """Per-feature z-scoring fit on training folds, applied to test folds."""

    def __init__(self, X: np.ndarray):
        self.mean = X.mean(axis=0)
        std = X.std(axis=0)
        std[std == 0] = 1.0
        self.std = std

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std


def cross_validate(
    X: np.ndarray,
    y: Sequence[int],
    mode: str,
    k_folds: int = 5,
    seed: int = 0,
    l2: float = 1.0,
    threads: int = 1,
) -> EvalReport:
    """Stratified k-fold CV of logistic regression over a feature matrix."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    folds = stratified_folds(y, k_folds, seed)
    report = EvalReport(
        mode=mode,
        seed=seed,
        k_folds=k_folds,
        hyperparameters={"l2": l2, "decision_threshold": 0.5},
    )

    def run_fold(test_idx: np.ndarray) -> dict:
        train_mask = np.ones(y.shape[0], dtype=bool)
        train_mask[test_idx] = False
        scaler = Standardizer(X[train_mask])
        m = train_logreg(scaler.apply(X[train_mask]), y[train_mask], l2=l2, seed=seed, mode=mode)
        probs = predict_proba(m, scaler.apply(X[test_idx]))
        pred = (probs >= m.decision_threshold).astype(np.int64)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            p, r, f1 = precision_recall_f1(pred, y[test_idx])
        auc = pr_auc(probs, y[test_idx])
        return {"precision": p, "recall": r, "f1": f1, "pr_auc": auc}

    report.per_fold = _map_folds(run_fold, folds, threads)
    return report


def fixed_threshold_cv(
    counts: Sequence[int],
    y: Sequence[int],
    k_folds: int = 5,
    seed: int = 0,
    grid: Sequence[float] = DEFAULT_TAU_U_GRID,
    threads: int = 1,
) -> EvalReport:
    """Fixed-threshold protocol: tau_u grid-searched on an inner 80/20
    validation split of each training fold, then applied to the test fold."""
    counts = np.asarray(counts, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    folds = stratified_folds(y, k_folds, seed)
    report = EvalReport(
        mode="F",
        seed=seed,
        k_folds=k_folds,
        hyperparameters={"grid": list(grid)},
    )

    def run_fold(fold_id_and_idx: tuple[int, np.ndarray]) -> dict:
        fold_id, test_idx = fold_id_and_idx
        train_mask = np.ones(y.shape[0], dtype=bool)
        train_mask[test_idx] = False
        train_idx = np.flatnonzero(train_mask)
        val_idx = _inner_validation_split(y[train_idx], seed, fold_id)
        val = train_idx[val_idx]
        tau, _ = grid_search_tau_u(counts[val], y[val], grid)
        pred = (counts[test_idx] >= tau).astype(np.int64)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            p, r, f1 = precision_recall_f1(pred, y[test_idx])
        auc = pr_auc(counts[test_idx].astype(np.float64), y[test_idx])
        return {"precision": p, "recall": r, "f1": f1, "pr_auc": auc, "tau_u": tau}

    report.per_fold = _map_folds(run_fold, list(enumerate(folds)), threads)
    return report


def _inner_validation_split(y_train: np.ndarray, seed: int, fold_id: int) -> np.ndarray:
    """Indices (into the training fold) of a stratified 20% validation slice."""
    val: list[int] = []
    for cls in np.unique(y_train):
        members = np.flatnonzero(y_train == cls)
        rng = np.random.default_rng((seed, fold_id, int(cls)))
        members = members[rng.permutation(members.size)]
        take = max(1, int(round(0.2 * members.size)))
        val.extend(members[:take].tolist())
    return np.sort(np.array(val, dtype=np.int64))


def _map_folds(fn, items, threads: int) -> list:
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def kfold_cv(
    dataset: Dataset,
    mode: str,
    tau_t: float = 0.5,
    tau_u: float = DEFAULT_TAU_U,
    k: int = DEFAULT_BINS,
    k_folds: int = 5,
    seed: int = 0,
    l2: float = 1.0,
    grid: Sequence[float] = DEFAULT_TAU_U_GRID,
    threads: int = 1,
) -> EvalReport:
    """The evaluation protocol over a dataset (callers pass the LCC dataset).

    Mode F runs the grid-searched fixed-threshold baseline; every other mode
    trains logistic regression on that mode's assembled features.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; valid modes: {', '.join(MODES)}")
    labeled = [l for l in dataset.labels if l.user_id in dataset.graph]
    if len(labeled) < k_folds:
        raise DegenerateDataError(
            f"{len(labeled)} labeled users in graph, need at least {k_folds}"
        )
    y = np.array([l.label for l in labeled], dtype=np.int64)
    ex = FeatureExtractor.from_dataset(dataset, tau_t=tau_t, tau_u=tau_u, k=k)
    user_ids = [l.user_id for l in labeled]
    if mode == "F":
        rows = [dataset.graph.index_of(u) for u in user_ids]
        counts = ex.own_counts[rows]
        report = fixed_threshold_cv(
            counts, y, k_folds=k_folds, seed=seed, grid=grid, threads=threads
        )
        report.hyperparameters.update({"tau_t": tau_t, "k_bins": k})
        return report
    X = ex.matrix(mode, user_ids)
    report = cross_validate(
        X, y, mode=mode, k_folds=k_folds, seed=seed, l2=l2, threads=threads
    )
    report.hyperparameters.update({"tau_t": tau_t, "tau_u": tau_u, "k_bins": k})
    return report
