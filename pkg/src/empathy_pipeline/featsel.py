"""Equal-frequency discretization, Relief feature weighting, fusion and
learning-curve feature-count selection.

Relief operates on discretized values, so its ranking is invariant under any
strictly monotone transform of a raw feature column. Weighting follows the
classic single-neighbor form: for each sampled instance, the nearest hit and
nearest miss are found by Manhattan distance on the discretized features and
each feature accumulates (disagrees-with-miss - disagrees-with-hit) / m.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .features import FeatureVector


@dataclass(frozen=True)
class Discretization:
    """Bin assignment for one column plus reusable boundaries.

    ``boundaries[i]`` is the largest value in bin i; unseen data maps to the
    first bin whose boundary is >= the value (values beyond the last
    boundary go to the last bin). ``n_bins`` can be smaller than requested
    when the column has few distinct values; ``collapsed`` flags that case.
    """

    bin_ids: np.ndarray
    boundaries: np.ndarray
    n_bins: int
    collapsed: bool

    def apply(self, values: np.ndarray) -> np.ndarray:
        return np.clip(
            np.searchsorted(self.boundaries, np.asarray(values), side="left"),
            0,
            self.n_bins - 1,
        )


def equal_freq_discretize(column: Sequence[float], k: int = 10) -> Discretization:
    """Split a column into k equal-frequency bins.

    Values are ranked by (value, index) — ties broken by original position —
    and ranks are split into k contiguous chunks, the larger chunks first;
    with distinct values every bin holds floor(n/k) or ceil(n/k) of them.
    Equal values always share a bin (ties that would span a chunk edge
    collapse into the earlier bin), so columns with fewer than k distinct
    values produce fewer bins, flagged via ``collapsed``.
    """
    x = np.asarray(column, dtype=np.float64)
    n = x.size
    if n == 0:
        raise ValueError("empty column")
    k_eff = min(k, n)
    order = np.argsort(x, kind="stable")
    sizes = np.full(k_eff, n // k_eff)
    sizes[: n % k_eff] += 1
    rank_bins = np.repeat(np.arange(k_eff), sizes)

    uppers = np.asarray([x[order[np.flatnonzero(rank_bins == b)[-1]]] for b in range(k_eff)])
    boundaries = np.unique(uppers)
    n_bins = len(boundaries)
    bin_ids = np.clip(np.searchsorted(boundaries, x, side="left"), 0, n_bins - 1)
    return Discretization(bin_ids, boundaries, n_bins, collapsed=n_bins < k)


def discretize_matrix(X: np.ndarray, k: int = 10) -> tuple[np.ndarray, list[Discretization]]:
    """Column-wise equal-frequency discretization of a feature matrix."""
    X = np.asarray(X, dtype=np.float64)
    discs = [equal_freq_discretize(X[:, j], k) for j in range(X.shape[1])]
    ids = np.column_stack([d.bin_ids for d in discs]).astype(np.int16)
    return ids, discs


@dataclass(frozen=True)
class ReliefWeights:
    weights: np.ndarray
    ranking: np.ndarray  # feature indices, best first

    def top(self, k: int) -> np.ndarray:
        return self.ranking[:k]


def relief_weights(
    X_disc: np.ndarray,
    y: np.ndarray,
    sample_m: int | None = None,
    seed: int = 0,
) -> ReliefWeights:
    """Classic Relief weights on discretized features with binary labels.

    Nearest hit/miss use Manhattan distance on the bin ids; ties go to the
    lowest index. diff() is 0/1 disagreement of the discretized values, so
    every weight lies in [-1, 1] and constant features score exactly 0. With
    ``sample_m`` unset, all instances are visited in order (deterministic);
    otherwise a seeded random subset is used.
    """
    X = np.asarray(X_disc)
    y = np.asarray(y)
    n, n_feat = X.shape
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("Relief requires at least one instance per class")
    if len(classes) > 2:
        raise ValueError("binary labels required")

    if sample_m is None or sample_m >= n:
        picks = np.arange(n)
    else:
        picks = np.sort(np.random.default_rng(seed).choice(n, size=sample_m, replace=False))
    m = len(picks)

    weights = np.zeros(n_feat)
    same = y[:, None] == y[None, :]
    for i in picks:
        diffs = X != X[i]
        dist = diffs.sum(axis=1)
        dist_hit = np.where(same[i], dist, np.iinfo(np.int64).max)
        dist_hit[i] = np.iinfo(np.int64).max
        dist_miss = np.where(~same[i], dist, np.iinfo(np.int64).max)
        hit = int(np.argmin(dist_hit))
        miss = int(np.argmin(dist_miss))
        if dist_hit[hit] == np.iinfo(np.int64).max:
            raise ValueError("Relief requires at least two instances of each class")
        weights += (diffs[miss].astype(np.float64) - diffs[hit].astype(np.float64)) / m

    ranking = np.lexsort((np.arange(n_feat), -weights))
    return ReliefWeights(weights, ranking)


@dataclass
class LearningCurve:
    sizes: list[int] = field(default_factory=list)
    scores: list[float] = field(default_factory=list)
    selected_k: int = 0

    def rows(self) -> list[tuple[int, float]]:
        return list(zip(self.sizes, self.scores))


def learning_curve_select(
    ranked_features: Sequence[int],
    train_eval: Callable[[Sequence[int]], float],
    batch_size: int,
    epsilon: float = 0.005,
) -> tuple[list[int], LearningCurve]:
    """Pick the shortest ranked-feature prefix at which performance saturates.

    ``train_eval`` trains on the given feature ids and returns the dev score
    (UA). Prefixes of batch_size, 2*batch_size, ... are evaluated until the
    score fails to improve on the best so far by at least epsilon (or
    decreases); the prefix holding the best score is returned along with the
    full curve for plotting.
    """
    ranked = list(ranked_features)
    if not ranked:
        raise ValueError("ranked feature list is empty")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")

    curve = LearningCurve()
    best_score = -np.inf
    best_k = 0
    size = min(batch_size, len(ranked))
    while True:
        score = float(train_eval(ranked[:size]))
        curve.sizes.append(size)
        curve.scores.append(score)
        if score >= best_score + epsilon:
            best_score, best_k = score, size
        else:
            break
        if size == len(ranked):
            break
        size = min(size + batch_size, len(ranked))
    curve.selected_k = best_k
    return ranked[:best_k], curve


@dataclass(frozen=True)
class FusedVector:
    """Acoustic-then-lexical concatenation with the split point recorded."""

    names: tuple[str, ...]
    values: np.ndarray
    acoustic_dim: int
    lexical_dim: int

    def acoustic_part(self) -> np.ndarray:
        return self.values[: self.acoustic_dim]

    def lexical_part(self) -> np.ndarray:
        return self.values[self.acoustic_dim :]


def fuse(acoustic: FeatureVector, lexical: FeatureVector) -> FusedVector:
    """Concatenate acoustic and lexical vectors (acoustic first)."""
    names = tuple(f"ac::{n}" for n in acoustic.names) + tuple(
        f"lx::{n}" for n in lexical.names
    )
    return FusedVector(
        names,
        np.concatenate([acoustic.values, lexical.values]),
        acoustic_dim=len(acoustic.values),
        lexical_dim=len(lexical.values),
    )


def fuse_matrices(acoustic: np.ndarray, lexical: np.ndarray) -> np.ndarray:
    acoustic = np.atleast_2d(acoustic)
    lexical = np.atleast_2d(lexical)
    if len(acoustic) != len(lexical):
        raise ValueError(
            f"row mismatch: {len(acoustic)} acoustic vs {len(lexical)} lexical segments"
        )
    return np.hstack([acoustic, lexical])
