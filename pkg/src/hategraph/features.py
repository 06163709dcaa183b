"""User-level aggregation features built from per-post hate scores.

Three constructions over a user's posts and ego network:

* fixed-threshold: count posts whose score crosses tau_t, thresholded at tau_u;
* relational: the user's own count combined with the hateful fraction of
  followers (in-neighbors) and followees (out-neighbors);
* distributional: softmax-normalized k-bin histograms of the user's scores,
  over the global [0, 1] range and over the user's own [min, max] range.

Feature modes mirror the model variants: F, R, Db, Dq, DbDq, and FULL
(relational + both histograms, weights learned jointly downstream).

Every operation has a per-user form and a vectorized whole-graph form; the
two are exact-equal by construction (shared bin edges and placement logic).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .data import Dataset
from .graph import UserGraph, UserId

MODES = ("F", "R", "Db", "Dq", "DbDq", "FULL")
DEFAULT_BINS = 10
DEFAULT_TAU_U = 1.0

# Reference relational weights (own, follower, followee) reported for the
# three source platforms; documentation only, nothing asserts them.
REFERENCE_RELATIONAL_WEIGHTS = {
    "echo": (0.6, 0.8, 1.5),
    "gab": (0.8, 0.1, 0.1),
    "parler": (0.2, 0.3, 0.2),
}


@dataclass
class UserFeatureVector:
    user_id: UserId
    mode: str
    own_count: int
    own_flag: int
    follower_hate_frac: float
    followee_hate_frac: float
    bin_hist: np.ndarray        # softmaxed, sums to 1
    quantile_hist: np.ndarray   # softmaxed, sums to 1
    neighbor_missing_flags: tuple[int, int]  # (no followers, no followees)


# ---- scalar operations ------------------------------------------------------

def fixed_threshold_count(scores: Sequence[float], tau_t: float) -> int:
    """Number of posts with score >= tau_t."""
    if len(scores) == 0:
        return 0
    arr = np.asarray(scores, dtype=np.float64)
    return int(np.count_nonzero(arr >= tau_t))


def fixed_threshold_classify(count: int, tau_u: float) -> int:
    """1 iff the hateful-post count reaches the user threshold (inclusive)."""
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    if tau_u < 0:
        raise ValueError(f"tau_u must be >= 0, got {tau_u}")
    return int(count >= tau_u)


def relational_features(
    g: UserGraph, u: UserId, flags: Mapping[UserId, int], own_count: int
) -> tuple[int, float, float, tuple[int, int]]:
    """Own count plus hateful fraction of followers and followees.

    Empty neighbor sets give fraction 0.0 with the matching missing flag set,
    so the learner can tell "no neighbors" from "no hateful neighbors".
    """
    ui = g.index_of(u)

    def frac(neighbors: np.ndarray) -> tuple[float, int]:
        if neighbors.size == 0:
            return 0.0, 1
        total = sum(flags[g.user_ids[v]] for v in neighbors)
        return total / neighbors.size, 0

    follower_frac, miss_in = frac(g.in_neighbors(ui))
    followee_frac, miss_out = frac(g.out_neighbors(ui))
    return own_count, follower_frac, followee_frac, (miss_in, miss_out)


def _global_edges(k: int) -> np.ndarray:
    return np.arange(k + 1, dtype=np.float64) / k


def bin_histogram(scores: Sequence[float], k: int) -> np.ndarray:
    """Counts over k half-open bins [i/k, (i+1)/k), last bin closed at 1."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    arr = np.asarray(scores, dtype=np.float64)
    if arr.size == 0:
        return np.zeros(k, dtype=np.int64)
    idx = np.clip(np.searchsorted(_global_edges(k), arr, side="right") - 1, 0, k - 1)
    return np.bincount(idx, minlength=k).astype(np.int64)


def _quantile_edges(mn: float, mx: float, k: int) -> np.ndarray:
    edges = mn + (mx - mn) * (np.arange(k + 1, dtype=np.float64) / k)
    edges[0], edges[-1] = mn, mx
    return edges


def quantile_histogram(scores: Sequence[float], k: int) -> np.ndarray:
    """Counts over k equal-width bins spanning this user's [min, max].

    A degenerate range (all scores equal) puts everything in bin 0.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    arr = np.asarray(scores, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("quantile histogram of an empty score sequence")
    mn, mx = float(arr.min()), float(arr.max())
    out = np.zeros(k, dtype=np.int64)
    if mn == mx:
        out[0] = arr.size
        return out
    idx = np.clip(
        np.searchsorted(_quantile_edges(mn, mx, k), arr, side="right") - 1, 0, k - 1
    )
    np.add.at(out, idx, 1)
    return out


def softmax(v: Sequence[float]) -> np.ndarray:
    """Numerically stable exp-normalization; output sums to 1."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("softmax of an empty vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError("softmax requires finite entries")
    e = np.exp(arr - arr.max())
    return e / e.sum()


# ---- per-user assembly ------------------------------------------------------

def assemble_features(
    dataset: Dataset,
    u: UserId,
    mode: str = "FULL",
    tau_t: float = 0.5,
    tau_u: float = DEFAULT_TAU_U,
    k: int = DEFAULT_BINS,
) -> UserFeatureVector:
    """Feature vector for one user (reference path; see FeatureExtractor
    for whole-graph assembly)."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; valid modes: {', '.join(MODES)}")
    g = dataset.graph
    flags = {
        uid: fixed_threshold_classify(
            fixed_threshold_count(dataset.scores_of(uid), tau_t), tau_u
        )
        for uid in g.user_ids
    }
    scores = dataset.scores_of(u)
    own_count = fixed_threshold_count(scores, tau_t)
    _, follower_frac, followee_frac, missing = relational_features(
        g, u, flags, own_count
    )
    bins = bin_histogram(scores, k)
    quants = (
        quantile_histogram(scores, k) if len(scores) else np.zeros(k, dtype=np.int64)
    )
    return UserFeatureVector(
        user_id=u,
        mode=mode,
        own_count=own_count,
        own_flag=flags[u],
        follower_hate_frac=follower_frac,
        followee_hate_frac=followee_frac,
        bin_hist=softmax(bins),
        quantile_hist=softmax(quants),
        neighbor_missing_flags=missing,
    )


def slot_names(mode: str, k: int = DEFAULT_BINS) -> list[str]:
    bins = [f"b{i}" for i in range(k)]
    quants = [f"q{i}" for i in range(k)]
    relational = ["own_count", "follower_frac", "followee_frac", "miss_in", "miss_out"]
    if mode == "F":
        return ["own_count"]
    if mode == "R":
        return relational
    if mode == "Db":
        return bins
    if mode == "Dq":
        return quants
    if mode == "DbDq":
        return bins + quants
    if mode == "FULL":
        return relational + bins + quants
    raise ValueError(f"unknown mode {mode!r}; valid modes: {', '.join(MODES)}")


def design_row(fv: UserFeatureVector) -> np.ndarray:
    """Model-facing row for the vector's mode (FULL is 5 + 2k wide)."""
    relational = np.array(
        [
            fv.own_count,
            fv.follower_hate_frac,
            fv.followee_hate_frac,
            fv.neighbor_missing_flags[0],
            fv.neighbor_missing_flags[1],
        ],
        dtype=np.float64,
    )
    if fv.mode == "F":
        return relational[:1].copy()
    if fv.mode == "R":
        return relational
    if fv.mode == "Db":
        return fv.bin_hist.copy()
    if fv.mode == "Dq":
        return fv.quantile_hist.copy()
    if fv.mode == "DbDq":
        return np.concatenate([fv.bin_hist, fv.quantile_hist])
    if fv.mode == "FULL":
        return np.concatenate([relational, fv.bin_hist, fv.quantile_hist])
    raise ValueError(f"unknown mode {fv.mode!r}")


# ---- vectorized whole-graph assembly ----------------------------------------

class FeatureExtractor:
    """Column-oriented feature assembly for every node of a graph.

    Works on flat (user_index, score) arrays so that million-post datasets
    assemble in seconds; the per-user reference path above must agree exactly.
    """

    def __init__(
        self,
        graph: UserGraph,
        user_idx: np.ndarray,
        scores: np.ndarray,
        tau_t: float = 0.5,
        tau_u: float = DEFAULT_TAU_U,
        k: int = DEFAULT_BINS,
    ):
        self.graph = graph
        self.tau_t = tau_t
        self.tau_u = tau_u
        self.k = k
        n = graph.node_count
        user_idx = np.asarray(user_idx, dtype=np.int64)
        scores = np.asarray(scores, dtype=np.float64)

        self.post_counts = np.bincount(user_idx, minlength=n)
        self.own_counts = np.bincount(
            user_idx[scores >= tau_t], minlength=n
        ).astype(np.int64)
        self.own_flags = (self.own_counts >= tau_u).astype(np.int64)

        self.follower_frac, self.miss_in = _neighbor_fraction(
            graph.in_indptr, graph.in_indices, self.own_flags
        )
        self.followee_frac, self.miss_out = _neighbor_fraction(
            graph.out_indptr, graph.out_indices, self.own_flags
        )

        self.bin_hist = _softmax_rows(self._bin_counts(user_idx, scores))
        self.quantile_hist = _softmax_rows(self._quantile_counts(user_idx, scores))

    def _bin_counts(self, user_idx: np.ndarray, scores: np.ndarray) -> np.ndarray:
        n, k = self.graph.node_count, self.k
        if scores.size == 0:
            return np.zeros((n, k), dtype=np.int64)
        bins = np.clip(
            np.searchsorted(_global_edges(k), scores, side="right") - 1, 0, k - 1
        )
        return np.bincount(user_idx * k + bins, minlength=n * k).reshape(n, k)

    def _quantile_counts(self, user_idx: np.ndarray, scores: np.ndarray) -> np.ndarray:
        n, k = self.graph.node_count, self.k
        counts = np.zeros((n, k), dtype=np.int64)
        if scores.size == 0:
            return counts
        order = np.argsort(user_idx, kind="stable")
        sorted_scores = scores[order]
        bounds = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(self.post_counts, out=bounds[1:])
        for u in range(n):
            lo, hi = bounds[u], bounds[u + 1]
            if lo == hi:
                continue
            s = sorted_scores[lo:hi]
            mn, mx = float(s.min()), float(s.max())
            if mn == mx:
                counts[u, 0] = hi - lo
                continue
            idx = np.clip(
                np.searchsorted(_quantile_edges(mn, mx, k), s, side="right") - 1,
                0,
                k - 1,
            )
            counts[u] = np.bincount(idx, minlength=k)
        return counts

    def matrix(self, mode: str, user_ids: Sequence[UserId]) -> np.ndarray:
        """Design matrix for the given users, rows aligned with user_ids."""
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; valid modes: {', '.join(MODES)}")
        g = self.graph
        rows = np.fromiter(
            (g.index_of(u) for u in user_ids), dtype=np.int64, count=len(user_ids)
        )
        relational = np.column_stack(
            [
                self.own_counts[rows],
                self.follower_frac[rows],
                self.followee_frac[rows],
                self.miss_in[rows],
                self.miss_out[rows],
            ]
        ).astype(np.float64)
        if mode == "F":
            return relational[:, :1].copy()
        if mode == "R":
            return relational
        if mode == "Db":
            return self.bin_hist[rows].copy()
        if mode == "Dq":
            return self.quantile_hist[rows].copy()
        if mode == "DbDq":
            return np.hstack([self.bin_hist[rows], self.quantile_hist[rows]])
        return np.hstack(
            [relational, self.bin_hist[rows], self.quantile_hist[rows]]
        )

    @classmethod
    def from_dataset(
        cls,
        dataset: Dataset,
        tau_t: float = 0.5,
        tau_u: float = DEFAULT_TAU_U,
        k: int = DEFAULT_BINS,
    ) -> "FeatureExtractor":
        g = dataset.graph
        sizes = [len(ps) for ps in dataset.posts_by_user.values()]
        total = sum(sizes)
        user_idx = np.empty(total, dtype=np.int64)
        scores = np.empty(total, dtype=np.float64)
        pos = 0
        for uid, posts in dataset.posts_by_user.items():
            i = g.index_of(uid)
            for p in posts:
                user_idx[pos] = i
                scores[pos] = p.score
                pos += 1
        return cls(g, user_idx, scores, tau_t=tau_t, tau_u=tau_u, k=k)


def _neighbor_fraction(
    indptr: np.ndarray, indices: np.ndarray, flags: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-node mean of neighbor flags; empty sets give 0.0 and a miss flag."""
    csum = np.zeros(indices.size + 1, dtype=np.float64)
    np.cumsum(flags[indices], out=csum[1:])
    sums = csum[indptr[1:]] - csum[indptr[:-1]]
    deg = np.diff(indptr)
    miss = (deg == 0).astype(np.int64)
    frac = np.divide(sums, deg, out=np.zeros_like(sums), where=deg > 0)
    return frac, miss


def _softmax_rows(counts: np.ndarray) -> np.ndarray:
    x = counts.astype(np.float64)
    x -= x.max(axis=1, keepdims=True)
    np.exp(x, out=x)
    x /= x.sum(axis=1, keepdims=True)
    return x


def export_features(
    path: str | Path,
    dataset: Dataset,
    user_ids: Iterable[UserId] | None = None,
    tau_t: float = 0.5,
    tau_u: float = DEFAULT_TAU_U,
    k: int = DEFAULT_BINS,
) -> None:
    """Write the full per-user feature table as CSV (all slots, every mode)."""
    ex = FeatureExtractor.from_dataset(dataset, tau_t=tau_t, tau_u=tau_u, k=k)
    g = dataset.graph
    if user_ids is None:
        user_ids = g.user_ids
    header = (
        ["user_id", "own_count", "own_flag", "follower_frac", "followee_frac", "miss_in", "miss_out"]
        + [f"b{i}" for i in range(k)]
        + [f"q{i}" for i in range(k)]
    )
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for uid in user_ids:
            i = g.index_of(uid)
            row = (
                [
                    uid,
                    int(ex.own_counts[i]),
                    int(ex.own_flags[i]),
                    repr(float(ex.follower_frac[i])),
                    repr(float(ex.followee_frac[i])),
                    int(ex.miss_in[i]),
                    int(ex.miss_out[i]),
                ]
                + [repr(float(v)) for v in ex.bin_hist[i]]
                + [repr(float(v)) for v in ex.quantile_hist[i]]
            )
            writer.writerow(row)
