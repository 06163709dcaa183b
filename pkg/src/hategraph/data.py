"""Load and write the on-disk dataset formats.

posts:  JSONL, one object per line with keys post_id, user_id, score
        (optional text); blank lines are skipped.
edges:  CSV with header ``src,dst``, direction follower -> followee.
labels: CSV with header ``user_id,label`` with label in {0, 1}.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataFormatError
from .graph import UserGraph, UserId, build_graph, largest_weakly_connected_component


@dataclass(slots=True)
class PostScore:
    """One utterance's hate probability attached to its author."""

    post_id: str
    user_id: UserId
    score: float
    text: str | None = None


@dataclass(slots=True)
class UserLabel:
    user_id: UserId
    label: int  # 0 = not hateful, 1 = hate-monger


@dataclass
class Dataset:
    graph: UserGraph
    posts_by_user: dict[UserId, list[PostScore]]
    labels: list[UserLabel]

    @property
    def labeled_user_ids(self) -> list[UserId]:
        return [l.user_id for l in self.labels]

    def scores_of(self, user_id: UserId) -> list[float]:
        return [p.score for p in self.posts_by_user.get(user_id, [])]


def load_post_scores(path: str | Path) -> list[PostScore]:
    """Read and validate a JSONL post-score file."""
    path = Path(path)
    out: list[PostScore] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataFormatError(f"invalid JSON ({e.msg})", str(path), lineno)
            if not isinstance(obj, dict):
                raise DataFormatError("expected a JSON object", str(path), lineno)
            missing = {"post_id", "user_id", "score"} - obj.keys()
            if missing:
                raise DataFormatError(
                    f"missing keys {sorted(missing)}", str(path), lineno
                )
            score = obj["score"]
            if not isinstance(score, (int, float)) or isinstance(score, bool):
                raise DataFormatError("score must be a number", str(path), lineno)
            if not 0.0 <= score <= 1.0:
                raise DataFormatError(
                    f"score {score} outside [0, 1]", str(path), lineno
                )
            user_id = obj["user_id"]
            if not isinstance(user_id, str) or not user_id:
                raise DataFormatError("user_id must be a non-empty string", str(path), lineno)
            out.append(
                PostScore(
                    post_id=str(obj["post_id"]),
                    user_id=user_id,
                    score=float(score),
                    text=obj.get("text"),
                )
            )
    return out


def load_edges(path: str | Path) -> list[tuple[UserId, UserId]]:
    """Read a ``src,dst`` edge CSV (follower -> followee)."""
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("empty file, expected 'src,dst' header", str(path), 1)
        if [h.strip() for h in header] != ["src", "dst"]:
            raise DataFormatError(
                f"expected header 'src,dst', got {','.join(header)!r}", str(path), 1
            )
        out: list[tuple[UserId, UserId]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataFormatError(
                    f"expected 2 fields, got {len(row)}", str(path), lineno
                )
            a, b = row[0].strip(), row[1].strip()
            if not a or not b:
                raise DataFormatError("empty endpoint", str(path), lineno)
            out.append((a, b))
    return out


def load_labels(path: str | Path) -> list[UserLabel]:
    """Read a ``user_id,label`` CSV; duplicate users are rejected."""
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("empty file, expected 'user_id,label' header", str(path), 1)
        if [h.strip() for h in header] != ["user_id", "label"]:
            raise DataFormatError(
                f"expected header 'user_id,label', got {','.join(header)!r}", str(path), 1
            )
        seen: set[str] = set()
        out: list[UserLabel] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataFormatError(
                    f"expected 2 fields, got {len(row)}", str(path), lineno
                )
            user_id, label = row[0].strip(), row[1].strip()
            if label not in ("0", "1"):
                raise DataFormatError(
                    f"label must be 0 or 1, got {label!r}", str(path), lineno
                )
            if user_id in seen:
                raise DataFormatError(f"duplicate user_id {user_id!r}", str(path), lineno)
            seen.add(user_id)
            out.append(UserLabel(user_id=user_id, label=int(label)))
    return out


def load_dataset(
    edges_path: str | Path, posts_path: str | Path, labels_path: str | Path
) -> Dataset:
    """Load the three files into one validated dataset.

    Users that appear only in posts or labels become isolated graph nodes;
    LCC extraction is the one place they get excluded, never silently here.
    """
    edges = load_edges(edges_path)
    posts = load_post_scores(posts_path)
    labels = load_labels(labels_path)
    extra = {p.user_id for p in posts} | {l.user_id for l in labels}
    graph = build_graph(edges, extra_nodes=extra)
    return Dataset(graph=graph, posts_by_user=group_posts(posts), labels=labels)


def group_posts(posts: Iterable[PostScore]) -> dict[UserId, list[PostScore]]:
    by_user: dict[UserId, list[PostScore]] = {}
    for p in posts:
        by_user.setdefault(p.user_id, []).append(p)
    return by_user


def restrict_to_lcc(dataset: Dataset) -> Dataset:
    """Dataset induced on the largest weakly connected component."""
    lcc = largest_weakly_connected_component(dataset.graph)
    members = set(lcc.user_ids)
    return Dataset(
        graph=lcc,
        posts_by_user={u: ps for u, ps in dataset.posts_by_user.items() if u in members},
        labels=[l for l in dataset.labels if l.user_id in members],
    )


# ---- writers (used by the synthetic generator and for round-trips) ---------

def write_post_scores(path: str | Path, posts: Iterable[PostScore]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for p in posts:
            obj = {"post_id": p.post_id, "user_id": p.user_id, "score": p.score}
            if p.text is not None:
                obj["text"] = p.text
            fh.write(json.dumps(obj, separators=(",", ":")) + "\n")


def write_edges(path: str | Path, edges: Iterable[tuple[UserId, UserId]]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("src,dst\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows(edges)


def write_labels(path: str | Path, labels: Iterable[UserLabel]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("user_id,label\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows((l.user_id, l.label) for l in labels)
