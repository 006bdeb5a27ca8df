"""Fixed-order named feature vectors shared by the acoustic and text stages."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def schema_id(names: Sequence[str]) -> str:
    """Stable 12-hex id for an ordered feature name list."""
    h = hashlib.sha256("\n".join(names).encode("utf-8")).hexdigest()
    return h[:12]


@dataclass(frozen=True)
class FeatureVector:
    """Dense, fixed-order numeric representation of one segment."""

    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        if len(self.names) != len(self.values):
            raise ValueError(f"{len(self.names)} names but {len(self.values)} values")

    @property
    def schema(self) -> str:
        return schema_id(self.names)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class SparseVector:
    """Sparse feature vector (sorted indices into a fixed schema of size dim)."""

    indices: np.ndarray
    values: np.ndarray
    dim: int

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim)
        dense[self.indices] = self.values
        return dense

    def serialize(self) -> str:
        """One line of whitespace-separated ``index:value`` pairs."""
        return " ".join(f"{int(i)}:{v:.10g}" for i, v in zip(self.indices, self.values))

    @classmethod
    def parse(cls, line: str, dim: int) -> "SparseVector":
        idx, vals = [], []
        for pair in line.split():
            i, v = pair.split(":")
            idx.append(int(i))
            vals.append(float(v))
        return cls(np.asarray(idx, dtype=np.intp), np.asarray(vals), dim)


@dataclass
class FeatureMatrix:
    """A stack of segment feature vectors with ids and labels."""

    names: tuple[str, ...]
    segment_ids: list[str]
    labels: list[str]
    values: np.ndarray = field(repr=False)

    @property
    def schema(self) -> str:
        return schema_id(self.names)

    @classmethod
    def from_vectors(
        cls, ids: Iterable[str], labels: Iterable[str], vectors: Sequence[FeatureVector]
    ) -> "FeatureMatrix":
        if not vectors:
            raise ValueError("no vectors to stack")
        names = vectors[0].names
        for v in vectors[1:]:
            if v.names != names:
                raise ValueError("inconsistent feature schemas")
        return cls(names, list(ids), list(labels), np.vstack([v.values for v in vectors]))

    def write_csv(self, path: str | Path, sidecar: dict | None = None) -> None:
        """CSV with segment_id, label and one column per feature; optional JSON
        sidecar (e.g. the frame configuration) for reproducibility."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["segment_id", "label", *self.names])
            for sid, lab, row in zip(self.segment_ids, self.labels, self.values):
                writer.writerow([sid, lab, *(f"{x:.10g}" for x in row)])
        if sidecar is not None:
            Path(str(path) + ".json").write_text(
                json.dumps(sidecar, indent=2, sort_keys=True), encoding="utf-8"
            )

    @classmethod
    def read_csv(cls, path: str | Path) -> "FeatureMatrix":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            names = tuple(header[2:])
            ids, labels, rows = [], [], []
            for row in reader:
                ids.append(row[0])
                labels.append(row[1])
                rows.append([float(x) for x in row[2:]])
        return cls(names, ids, labels, np.asarray(rows))
