"""Class-imbalance correction: duration-binned undersampling and SMOTE.

Undersampling keeps length diversity in the retained majority class by
drawing a fixed number of segments from each duration bin. SMOTE
interpolates synthetic minority vectors between each seed and one of its k
nearest minority neighbors; every synthetic sample's provenance (seed index,
neighbor index, interpolation factor) is recorded so its geometry can be
audited.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class BinSpec:
    """Ascending duration bin edges (seconds) and per-bin sample count.

    Items longer than the last edge fall into an overflow bin.
    """

    edges: tuple[float, ...]
    per_bin_n: int = 1

    def __post_init__(self) -> None:
        if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise ValueError("bin edges must be strictly ascending")
        if self.per_bin_n < 1:
            raise ValueError("per_bin_n must be >= 1")

    @classmethod
    def from_percentiles(
        cls, durations: Sequence[float], n_bins: int = 10, per_bin_n: int = 1
    ) -> "BinSpec":
        """Edges at equally spaced percentiles of the observed durations."""
        qs = np.linspace(0, 100, n_bins + 1)[1:-1]
        edges = np.unique(np.percentile(np.asarray(durations, dtype=np.float64), qs))
        return cls(tuple(float(e) for e in edges), per_bin_n)


def binned_undersample(
    durations: Sequence[float], spec: BinSpec, seed: int
) -> list[int]:
    """Indices of the retained majority items: min(per_bin_n, bin size) drawn
    uniformly without replacement from each non-empty duration bin.

    Deterministic under a fixed seed; the output is a sorted subset of input
    indices with no duplicates.
    """
    durations = np.asarray(durations, dtype=np.float64)
    bins = np.searchsorted(np.asarray(spec.edges), durations, side="right")
    rng = np.random.default_rng(seed)
    keep: list[int] = []
    for b in range(len(spec.edges) + 1):
        members = np.flatnonzero(bins == b)
        if members.size == 0:
            continue
        take = min(spec.per_bin_n, members.size)
        keep.extend(rng.choice(members, size=take, replace=False).tolist())
    return sorted(keep)


@dataclass(frozen=True)
class SmoteConfig:
    k: int = 5
    percent: float = 100.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.percent < 0:
            raise ValueError("percent must be >= 0")


@dataclass
class SmoteProvenance:
    """Audit record for one synthetic sample."""

    seed_index: int
    neighbor_index: int
    r: float

    def to_dict(self) -> dict:
        return {"seed_index": self.seed_index, "neighbor_index": self.neighbor_index, "r": self.r}


@dataclass
class SmoteResult:
    synthetic: np.ndarray = field(repr=False)
    provenance: list[SmoteProvenance] = field(default_factory=list)

    def write_audit(self, path: str | Path, config: SmoteConfig) -> None:
        payload = {
            "k": config.k,
            "percent": config.percent,
            "seed": config.seed,
            "n_synthetic": len(self.provenance),
            "samples": [p.to_dict() for p in self.provenance],
        }
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


def smote(minority: np.ndarray, config: SmoteConfig) -> SmoteResult:
    """Generate ceil(percent/100 * n) synthetic minority vectors.

    Each synthetic vector is x + r * (nn - x) for a seed x, a uniformly
    chosen neighbor nn among x's k nearest minority neighbors (Euclidean)
    and r ~ U[0, 1]. Seeds are cycled in order; when the target count is not
    a multiple of n, the remainder seeds are chosen without replacement.
    """
    X = np.asarray(minority, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("minority must be a 2-D array")
    n = len(X)
    if n <= config.k:
        raise ValueError(f"SMOTE needs more than k={config.k} minority samples, got {n}")
    if not np.all(np.isfinite(X)):
        raise ValueError("minority vectors must be finite")

    total = int(np.ceil(config.percent / 100.0 * n))
    rng = np.random.default_rng(config.seed)
    if total == 0:
        return SmoteResult(np.zeros((0, X.shape[1])))

    # k nearest minority neighbors of each seed (excluding itself)
    d2 = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=2)
    np.fill_diagonal(d2, np.inf)
    nn_idx = np.argsort(d2, axis=1, kind="stable")[:, : config.k]

    base, extra = divmod(total, n)
    counts = np.full(n, base, dtype=int)
    if extra:
        counts[rng.choice(n, size=extra, replace=False)] += 1

    rows = []
    provenance = []
    for i in range(n):
        for _ in range(counts[i]):
            j = int(nn_idx[i, rng.integers(config.k)])
            r = float(rng.random())
            rows.append(X[i] + r * (X[j] - X[i]))
            provenance.append(SmoteProvenance(i, j, r))
    return SmoteResult(np.vstack(rows), provenance)
