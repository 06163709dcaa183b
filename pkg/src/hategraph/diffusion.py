"""Label-anchored DeGroot belief diffusion over the undirected projection.

A stratified sample of labeled users is clamped to its labels; every other
node repeatedly takes the mean of its neighbors' beliefs (synchronous
updates from the previous iteration's snapshot). Degree-0 nodes keep their
belief. Final beliefs threshold into hate-monger classifications.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import UserLabel
from .graph import UserGraph, UserId

DEFAULT_ITERATIONS = 10
DEFAULT_SEED_FRACTION = 0.05
DEFAULT_PRIOR = 0.5


@dataclass
class DiffusionState:
    beliefs: np.ndarray            # per-node, always within [0, 1]
    iteration: int
    seed_indices: np.ndarray       # clamped nodes
    seed_values: np.ndarray        # their anchored labels

    @property
    def seed_set(self) -> set[int]:
        return set(self.seed_indices.tolist())


def seed_beliefs(
    g: UserGraph,
    labels: Sequence[UserLabel],
    seed_fraction: float = DEFAULT_SEED_FRACTION,
    seed: int = 0,
    prior: float = DEFAULT_PRIOR,
) -> DiffusionState:
    """Initial state: a stratified labeled sample anchored, everyone else at
    the prior.

    Per class, round(seed_fraction * class_size) users are sampled (at least
    one per non-empty class). Labeled users absent from the graph are skipped.
    """
    if not 0.0 < seed_fraction <= 1.0:
        raise ValueError(f"seed_fraction {seed_fraction} outside (0, 1]")
    if not 0.0 <= prior <= 1.0:
        raise ValueError(f"prior {prior} outside [0, 1]")
    if len(labels) == 0:
        raise ValueError("no labeled users to seed from")

    in_graph = [l for l in labels if l.user_id in g]
    beliefs = np.full(g.node_count, prior, dtype=np.float64)
    chosen_idx: list[int] = []
    chosen_val: list[float] = []
    for cls in (0, 1):
        members = [l.user_id for l in in_graph if l.label == cls]
        if not members:
            continue
        take = max(1, int(round(seed_fraction * len(members))))
        rng = np.random.default_rng((seed, cls))
        picks = rng.choice(len(members), size=min(take, len(members)), replace=False)
        for p in np.sort(picks):
            chosen_idx.append(g.index_of(members[p]))
            chosen_val.append(float(cls))
    seed_indices = np.array(chosen_idx, dtype=np.int64)
    seed_values = np.array(chosen_val, dtype=np.float64)
    beliefs[seed_indices] = seed_values
    return DiffusionState(
        beliefs=beliefs, iteration=0, seed_indices=seed_indices, seed_values=seed_values
    )


def degroot_step(g: UserGraph, s: DiffusionState) -> DiffusionState:
    """One synchronous neighbor-averaging update with seed clamping."""
    indptr, indices = g.und_indptr, g.und_indices
    csum = np.zeros(indices.size + 1, dtype=np.float64)
    np.cumsum(s.beliefs[indices], out=csum[1:])
    sums = csum[indptr[1:]] - csum[indptr[:-1]]
    deg = g.und_degrees
    new = np.where(deg > 0, sums / np.maximum(deg, 1), s.beliefs)
    new[s.seed_indices] = s.seed_values
    return DiffusionState(
        beliefs=new,
        iteration=s.iteration + 1,
        seed_indices=s.seed_indices,
        seed_values=s.seed_values,
    )


def degroot_run(
    g: UserGraph,
    s0: DiffusionState,
    iterations: int = DEFAULT_ITERATIONS,
    tau: float = 0.5,
) -> tuple[np.ndarray, np.ndarray]:
    """Iterate the averaging update and threshold the final beliefs."""
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    state = s0
    for _ in range(iterations):
        state = degroot_step(g, state)
    classifications = (state.beliefs >= tau).astype(np.int64)
    return state.beliefs, classifications
