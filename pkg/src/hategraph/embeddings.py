"""Random-walk node embeddings: biased second-order walks + SGNS.

Walks run over the undirected projection with the usual return/in-out bias
(1/p back to the previous node, 1 to mutual neighbors, 1/q outward). Each
walk draws from its own RNG stream keyed by (seed, start node, walk index),
so walk generation is reproducible and trivially parallelizable.

Skip-gram with negative sampling is trained by a sequential numba kernel:
fixed update order, explicit xorshift RNG, hence bit-reproducible per seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from numba import njit

from .data import Dataset
from .graph import UserGraph, UserId
from .model import EvalReport, cross_validate

LR_START = 0.025
LR_MIN = 0.0001
NOISE_EXPONENT = 0.75


@dataclass
class WalkConfig:
    walks_per_node: int = 10
    walk_length: int = 20
    p: float = 1.0
    q: float = 1.0
    window: int = 10
    dim: int = 128
    epochs: int = 50
    negatives: int = 5
    seed: int = 0

    def __post_init__(self):
        for name in ("walks_per_node", "walk_length", "window", "dim", "epochs", "negatives"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.p <= 0 or self.q <= 0:
            raise ValueError("p and q must be > 0")


@dataclass
class EmbeddingTable:
    vectors: np.ndarray                     # (node_count, dim) float32
    user_ids: tuple[UserId, ...] | None = None

    def vector(self, user_id: UserId) -> np.ndarray:
        if self.user_ids is None:
            raise ValueError("table has no user ids attached")
        return self.vectors[self.user_ids.index(user_id)]

    def write_csv(self, path: str | Path) -> None:
        if self.user_ids is None:
            raise ValueError("table has no user ids attached")
        dim = self.vectors.shape[1]
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            fh.write("user_id," + ",".join(f"e{i}" for i in range(dim)) + "\n")
            for uid, vec in zip(self.user_ids, self.vectors):
                fh.write(uid + "," + ",".join(repr(float(v)) for v in vec) + "\n")


def generate_walks(g: UserGraph, cfg: WalkConfig) -> list[np.ndarray]:
    """cfg.walks_per_node truncated walks from every node, ordered by
    (start node, walk index)."""
    if g.node_count == 0:
        raise ValueError("empty graph")
    indptr, indices = g.und_indptr, g.und_indices
    uniform = cfg.p == 1.0 and cfg.q == 1.0
    walks: list[np.ndarray] = []
    for node in range(g.node_count):
        for w in range(cfg.walks_per_node):
            rng = np.random.default_rng((cfg.seed, node, w))
            u = rng.random(cfg.walk_length - 1)
            walk = np.empty(cfg.walk_length, dtype=np.int64)
            walk[0] = node
            length = 1
            for t in range(cfg.walk_length - 1):
                cur = walk[length - 1]
                nbrs = indices[indptr[cur] : indptr[cur + 1]]
                if nbrs.size == 0:
                    break
                if uniform or length == 1:
                    pick = int(u[t] * nbrs.size)
                else:
                    prev = walk[length - 2]
                    weights = _step_weights(nbrs, prev, indptr, indices, cfg.p, cfg.q)
                    cum = np.cumsum(weights)
                    pick = int(np.searchsorted(cum, u[t] * cum[-1], side="right"))
                    pick = min(pick, nbrs.size - 1)
                walk[length] = nbrs[pick]
                length += 1
            walks.append(walk[:length])
    return walks


def _step_weights(
    nbrs: np.ndarray, prev: int, indptr: np.ndarray, indices: np.ndarray, p: float, q: float
) -> np.ndarray:
    """Second-order weights: 1/p back to prev, 1 at distance 1, 1/q at distance 2."""
    prev_nbrs = indices[indptr[prev] : indptr[prev + 1]]  # nonempty: contains cur
    pos = np.minimum(np.searchsorted(prev_nbrs, nbrs), prev_nbrs.size - 1)
    adjacent = prev_nbrs[pos] == nbrs
    weights = np.where(adjacent, 1.0, 1.0 / q)
    weights[nbrs == prev] = 1.0 / p
    return weights


@njit(cache=True)
def _xorshift(state):
    state ^= state >> np.uint64(12)
    state ^= state << np.uint64(25)
    state ^= state >> np.uint64(27)
    return state


@njit(cache=True)
def _rand_unit(state):
    state = _xorshift(state)
    x = (state * np.uint64(0x2545F4914F6CDD1D)) >> np.uint64(11)
    return state, float(x) / 9007199254740992.0  # 2**53


@njit(cache=True)
def _sgns_train(
    corpus, offsets, noise_cdf, syn0, syn1, window, negatives, epochs, lr0, lr_min, state
):
    total_tokens = epochs * corpus.shape[0]
    processed = 0
    dim = syn0.shape[1]
    n = noise_cdf.shape[0]
    for _ in range(epochs):
        for w in range(offsets.shape[0] - 1):
            start, end = offsets[w], offsets[w + 1]
            for i in range(start, end):
                center = corpus[i]
                alpha = lr0 * (1.0 - processed / total_tokens)
                if alpha < lr_min:
                    alpha = lr_min
                processed += 1
                lo = i - window
                if lo < start:
                    lo = start
                hi = i + window + 1
                if hi > end:
                    hi = end
                for j in range(lo, hi):
                    if j == i:
                        continue
                    context = corpus[j]
                    accum = np.zeros(dim, dtype=np.float32)
                    for s in range(negatives + 1):
                        if s == 0:
                            target = context
                            label = 1.0
                        else:
                            state, r = _rand_unit(state)
                            # smallest index with cdf > r
                            a, b = 0, n - 1
                            while a < b:
                                mid = (a + b) // 2
                                if noise_cdf[mid] > r:
                                    b = mid
                                else:
                                    a = mid + 1
                            target = a
                            if target == context:
                                continue
                            label = 0.0
                        f = 0.0
                        for d in range(dim):
                            f += syn0[center, d] * syn1[target, d]
                        if f > 30.0:
                            sig = 1.0
                        elif f < -30.0:
                            sig = 0.0
                        else:
                            sig = 1.0 / (1.0 + np.exp(-f))
                        g = np.float32((label - sig) * alpha)
                        for d in range(dim):
                            accum[d] += g * syn1[target, d]
                            syn1[target, d] += g * syn0[center, d]
                    for d in range(dim):
                        syn0[center, d] += accum[d]
    return state


def train_skipgram(
    walks: Sequence[np.ndarray], cfg: WalkConfig, node_count: int | None = None
) -> EmbeddingTable:
    """SGNS over window co-occurrences, negatives from the unigram^0.75
    distribution of walk visits; learning rate decays linearly."""
    if len(walks) == 0:
        raise ValueError("no walks to train on")
    if node_count is None:
        node_count = int(max(w.max() for w in walks)) + 1
    corpus = np.concatenate([np.asarray(w, dtype=np.int64) for w in walks])
    offsets = np.zeros(len(walks) + 1, dtype=np.int64)
    np.cumsum([len(w) for w in walks], out=offsets[1:])

    counts = np.bincount(corpus, minlength=node_count).astype(np.float64)
    weights = counts**NOISE_EXPONENT
    if weights.sum() == 0:
        weights[:] = 1.0
    noise_cdf = np.cumsum(weights / weights.sum())
    noise_cdf[-1] = 1.0

    rng = np.random.default_rng((cfg.seed, 0x5EED))
    syn0 = ((rng.random((node_count, cfg.dim)) - 0.5) / cfg.dim).astype(np.float32)
    syn1 = np.zeros((node_count, cfg.dim), dtype=np.float32)
    state = np.uint64(rng.integers(1, 2**63, dtype=np.int64))
    _sgns_train(
        corpus,
        offsets,
        noise_cdf,
        syn0,
        syn1,
        cfg.window,
        cfg.negatives,
        cfg.epochs,
        LR_START,
        LR_MIN,
        state,
    )
    return EmbeddingTable(vectors=syn0)


def embed_graph(g: UserGraph, cfg: WalkConfig) -> EmbeddingTable:
    """Walk + train over a graph, with user ids attached for export."""
    walks = generate_walks(g, cfg)
    table = train_skipgram(walks, cfg, node_count=g.node_count)
    table.user_ids = g.user_ids
    return table


def embed_and_classify(
    dataset: Dataset,
    cfg: WalkConfig,
    cv_seed: int = 0,
    k_folds: int = 5,
    l2: float = 1.0,
    threads: int = 1,
) -> EvalReport:
    """Feed node embeddings of labeled users into the logistic-regression CV."""
    g = dataset.graph
    table = embed_graph(g, cfg)
    labeled = [l for l in dataset.labels if l.user_id in g]
    if not labeled:
        raise ValueError("no labeled users present in the graph")
    rows = np.array([g.index_of(l.user_id) for l in labeled])
    X = table.vectors[rows].astype(np.float64)
    y = np.array([l.label for l in labeled], dtype=np.int64)
    report = cross_validate(
        X, y, mode="node2vec", k_folds=k_folds, seed=cv_seed, l2=l2, threads=threads
    )
    report.hyperparameters.update(
        {
            "dim": cfg.dim,
            "walks_per_node": cfg.walks_per_node,
            "walk_length": cfg.walk_length,
            "window": cfg.window,
            "epochs": cfg.epochs,
            "p": cfg.p,
            "q": cfg.q,
            "negatives": cfg.negatives,
            "embedding_seed": cfg.seed,
        }
    )
    return report
