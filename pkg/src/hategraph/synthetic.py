"""Seeded synthetic datasets with planted hateful communities.

A preferential-attachment follower graph gets homophily injected by edge
rewiring (each edge re-targets, with the configured probability, to a node
of its source's class), then per-user post scores are drawn from
class-conditional Beta distributions. The overlap of the two Betas controls
how hard text-only detection is; homophily controls how much the ego
network gives away.

Generation is single-threaded and fully deterministic: one config, one byte
stream.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset, PostScore, UserLabel
from .errors import DataFormatError
from .graph import UserGraph, from_indexed_edges, largest_weakly_connected_component
from .version import TOOLKIT_VERSION

REWIRE_RETRIES = 20


@dataclass
class SynthConfig:
    n_users: int = 2000
    attach_m: int = 3
    hate_fraction: float = 0.25
    homophily: float = 0.8
    posts_min: int = 1
    posts_max: int = 10
    hateful_alpha: float = 5.0
    hateful_beta: float = 5.0
    benign_alpha: float = 2.0
    benign_beta: float = 8.0
    seed: int = 0

    def __post_init__(self):
        if self.n_users <= self.attach_m or self.attach_m < 1:
            raise ValueError("need n_users > attach_m >= 1")
        if not 0.0 < self.hate_fraction < 1.0:
            raise ValueError("hate_fraction must be in (0, 1)")
        if not 0.0 <= self.homophily <= 1.0:
            raise ValueError("homophily must be in [0, 1]")
        if not 0 <= self.posts_min <= self.posts_max:
            raise ValueError("need 0 <= posts_min <= posts_max")
        for field in ("hateful_alpha", "hateful_beta", "benign_alpha", "benign_beta"):
            if getattr(self, field) <= 0:
                raise ValueError(f"{field} must be > 0")

    @classmethod
    def from_json(cls, path: str | Path) -> "SynthConfig":
        with Path(path).open("r", encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as e:
                raise DataFormatError(f"invalid JSON ({e.msg})", str(path), e.lineno)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise DataFormatError(
                f"unknown config key(s): {', '.join(sorted(unknown))}", str(path)
            )
        try:
            return cls(**raw)
        except (TypeError, ValueError) as e:
            raise DataFormatError(f"bad config value: {e}", str(path))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def user_id_of(i: int, n: int) -> str:
    return f"u{i:0{len(str(n - 1))}d}"


def assign_classes(cfg: SynthConfig) -> np.ndarray:
    """Exactly round(n * hate_fraction) hateful users (at least one)."""
    n = cfg.n_users
    n_hate = max(1, int(round(n * cfg.hate_fraction)))
    rng = np.random.default_rng((cfg.seed, 1))
    classes = np.zeros(n, dtype=np.int64)
    classes[rng.choice(n, size=n_hate, replace=False)] = 1
    return classes


def _preferential_attachment_edges(cfg: SynthConfig, rng) -> tuple[np.ndarray, np.ndarray]:
    """Directed BA edges: each new node follows m earlier nodes picked
    proportionally to degree."""
    n, m = cfg.n_users, cfg.attach_m
    src = np.empty((n - m - 1) * m + m, dtype=np.int64)
    dst = np.empty_like(src)
    # seed star: nodes 1..m follow node 0
    src[:m] = np.arange(1, m + 1)
    dst[:m] = 0
    repeated = list(range(1, m + 1)) + [0] * m
    pos = m
    for source in range(m + 1, n):
        targets: set[int] = set()
        while len(targets) < m:
            pick = repeated[int(rng.integers(len(repeated)))]
            targets.add(pick)
        for t in sorted(targets):
            src[pos] = source
            dst[pos] = t
            pos += 1
        repeated.extend(sorted(targets))
        repeated.extend([source] * m)
    return src, dst


def _rewire_for_homophily(
    src: np.ndarray, dst: np.ndarray, classes: np.ndarray, cfg: SynthConfig, rng
) -> np.ndarray:
    """Each edge independently re-targets, with probability cfg.homophily, to
    a uniformly sampled node of its source's class (no self-loops or
    duplicates; the original target survives if retries run out)."""
    if cfg.homophily == 0.0:
        return dst
    n = cfg.n_users
    by_class = [np.flatnonzero(classes == c) for c in (0, 1)]
    existing = set((src * n + dst).tolist())
    rewire = rng.random(src.size) < cfg.homophily
    new_dst = dst.copy()
    for e in np.flatnonzero(rewire):
        s = src[e]
        pool = by_class[classes[s]]
        old_code = s * n + dst[e]
        for _ in range(REWIRE_RETRIES):
            cand = int(pool[int(rng.integers(pool.size))])
            code = s * n + cand
            if cand == s or code in existing:
                continue
            existing.discard(old_code)
            existing.add(code)
            new_dst[e] = cand
            break
    return new_dst


def generate_graph(cfg: SynthConfig, classes: np.ndarray | None = None) -> UserGraph:
    """Scale-free follower graph with homophily rewiring, LCC extracted."""
    if classes is None:
        classes = assign_classes(cfg)
    rng = np.random.default_rng((cfg.seed, 2))
    src, dst = _preferential_attachment_edges(cfg, rng)
    dst = _rewire_for_homophily(src, dst, classes, cfg, rng)
    ids = [user_id_of(i, cfg.n_users) for i in range(cfg.n_users)]
    return largest_weakly_connected_component(from_indexed_edges(ids, src, dst))


def sample_score_columns(
    cfg: SynthConfig, classes: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Flat (user index, score) arrays, user-grouped in index order.

    Scores are rounded to 6 decimals so in-memory values and file round-trips
    agree exactly.
    """
    rng = np.random.default_rng((cfg.seed, 3))
    n = cfg.n_users
    counts = rng.integers(cfg.posts_min, cfg.posts_max + 1, size=n)
    user_idx = np.repeat(np.arange(n, dtype=np.int64), counts)
    post_cls = classes[user_idx]
    scores = np.empty(user_idx.size, dtype=np.float64)
    hateful = post_cls == 1
    scores[hateful] = rng.beta(cfg.hateful_alpha, cfg.hateful_beta, size=int(hateful.sum()))
    scores[~hateful] = rng.beta(cfg.benign_alpha, cfg.benign_beta, size=int((~hateful).sum()))
    return user_idx, np.round(scores, 6)


def sample_scores(cfg: SynthConfig, classes: np.ndarray) -> list[PostScore]:
    """The column samples materialized as PostScore records."""
    user_idx, scores = sample_score_columns(cfg, classes)
    n = cfg.n_users
    return [
        PostScore(post_id=f"p{j}", user_id=user_id_of(int(u), n), score=float(s))
        for j, (u, s) in enumerate(zip(user_idx, scores))
    ]


def generate_columns(
    cfg: SynthConfig,
) -> tuple[UserGraph, np.ndarray, np.ndarray, np.ndarray]:
    """(LCC graph, per-node labels, post user indices, post scores).

    Post columns are remapped onto the LCC graph's node indexing; posts of
    users outside the component are dropped.
    """
    classes = assign_classes(cfg)
    graph = generate_graph(cfg, classes)
    user_idx, scores = sample_score_columns(cfg, classes)
    remap = np.full(cfg.n_users, -1, dtype=np.int64)
    for node, uid in enumerate(graph.user_ids):
        remap[int(uid[1:])] = node
    mapped = remap[user_idx]
    keep = mapped >= 0
    node_labels = np.array(
        [classes[int(uid[1:])] for uid in graph.user_ids], dtype=np.int64
    )
    return graph, node_labels, mapped[keep], scores[keep]


def generate_dataset(cfg: SynthConfig) -> Dataset:
    """In-memory dataset: LCC graph plus posts and labels of its members."""
    classes = assign_classes(cfg)
    graph = generate_graph(cfg, classes)
    posts = sample_scores(cfg, classes)
    members = set(graph.user_ids)
    posts_by_user: dict[str, list[PostScore]] = {}
    for p in posts:
        if p.user_id in members:
            posts_by_user.setdefault(p.user_id, []).append(p)
    labels = [
        UserLabel(user_id=user_id_of(i, cfg.n_users), label=int(c))
        for i, c in enumerate(classes)
        if user_id_of(i, cfg.n_users) in members
    ]
    return Dataset(graph=graph, posts_by_user=posts_by_user, labels=labels)


def write_dataset(cfg: SynthConfig, out_dir: str | Path) -> dict:
    """Emit edges.csv / posts.jsonl / labels.csv / manifest.json.

    Streams from the column representation: byte-identical per config and
    fast enough for six-figure user counts.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    classes = assign_classes(cfg)
    graph = generate_graph(cfg, classes)
    user_idx, scores = sample_score_columns(cfg, classes)
    n = cfg.n_users
    members_idx = np.zeros(n, dtype=bool)
    for uid in graph.user_ids:
        members_idx[int(uid[1:])] = True

    with (out / "edges.csv").open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("src,dst\n")
        ids = graph.user_ids
        fh.writelines(
            f"{ids[a]},{ids[b]}\n" for a, b in zip(graph.edge_src, graph.edge_dst)
        )

    keep = members_idx[user_idx]
    with (out / "posts.jsonl").open("w", encoding="utf-8", newline="\n") as fh:
        width = len(str(n - 1))
        fh.writelines(
            f'{{"post_id":"p{j}","user_id":"u{u:0{width}d}","score":{s!r}}}\n'
            for j, (u, s, k) in enumerate(zip(user_idx, scores, keep))
            if k
        )

    with (out / "labels.csv").open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("user_id,label\n")
        fh.writelines(
            f"{user_id_of(i, n)},{int(classes[i])}\n"
            for i in range(n)
            if members_idx[i]
        )

    manifest = {
        "config": cfg.to_dict(),
        "toolkit_version": TOOLKIT_VERSION,
        "lcc_node_count": graph.node_count,
        "lcc_edge_count": graph.edge_count,
    }
    with (out / "manifest.json").open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return manifest
