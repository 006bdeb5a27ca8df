"""Segment-level scoring: alignment of automatic segments to the reference
annotation, duration-weighted confusion matrix, and unweighted average recall.

The reference for one conversation is a Neutral span [0, t_i) followed by an
Empathy span [t_i, t_e]; evaluation is clipped to [0, t_e]. Hypothesis
segments crossing a reference boundary are split there so every scored span
carries exactly one reference label. A sample at exactly t_i belongs to the
right (Empathy) span. Coverage gaps in the hypothesis are scored with a
configurable label (default Neutral) and flagged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

POSITIVE = "Empathy"
NEGATIVE = "Neutral"


@dataclass(frozen=True)
class RefSpan:
    start_s: float
    end_s: float
    label: str


@dataclass(frozen=True)
class HypSpan:
    start_s: float
    end_s: float
    label: str


@dataclass(frozen=True)
class AlignedSpan:
    start_s: float
    end_s: float
    ref_label: str
    hyp_label: str
    gap: bool = False

    @property
    def length_s(self) -> float:
        return self.end_s - self.start_s


def reference_spans(onset_s: float, end_s: float) -> list[RefSpan]:
    """Neutral [0, onset) followed by Empathy [onset, end]."""
    if not 0.0 < onset_s < end_s:
        raise ValueError("require 0 < onset < end")
    return [RefSpan(0.0, onset_s, NEGATIVE), RefSpan(onset_s, end_s, POSITIVE)]


def align(
    ref: Sequence[RefSpan],
    hyp: Sequence[HypSpan],
    gap_label: str = NEGATIVE,
) -> list[AlignedSpan]:
    """Partition the evaluated range into spans with one ref and one hyp label.

    ``ref`` must be sorted, non-overlapping and contiguous from 0; ``hyp``
    sorted and non-overlapping. Hypothesis content outside the reference
    range is discarded; uncovered reference time becomes gap spans labeled
    ``gap_label``.
    """
    if not ref:
        raise ValueError("empty reference")
    t_end = ref[-1].end_s
    for a, b in zip(ref, ref[1:]):
        if abs(a.end_s - b.start_s) > 1e-9:
            raise ValueError("reference spans must be contiguous")
    prev_end = 0.0
    for h in hyp:
        if h.start_s < prev_end - 1e-9:
            raise ValueError("hypothesis spans must be sorted and non-overlapping")
        prev_end = h.end_s

    # timeline events: hyp segments clipped to [0, t_end], gaps filled
    events: list[tuple[float, float, str, bool]] = []
    cursor = 0.0
    for h in hyp:
        lo, hi = max(h.start_s, 0.0), min(h.end_s, t_end)
        if hi <= lo:
            continue
        if lo > cursor + 1e-12:
            events.append((cursor, lo, gap_label, True))
        events.append((lo, hi, h.label, False))
        cursor = hi
    if cursor < t_end - 1e-12:
        events.append((cursor, t_end, gap_label, True))

    out: list[AlignedSpan] = []
    for lo, hi, label, is_gap in events:
        for r in ref:
            s, e = max(lo, r.start_s), min(hi, r.end_s)
            if e - s > 1e-12:
                out.append(AlignedSpan(s, e, r.label, label, gap=is_gap))
    return out


@dataclass
class WeightedConfusion:
    """2x2 duration-weighted confusion in seconds (ref label x hyp label)."""

    cells: dict[tuple[str, str], float] = field(
        default_factory=lambda: {
            (POSITIVE, POSITIVE): 0.0,
            (POSITIVE, NEGATIVE): 0.0,
            (NEGATIVE, POSITIVE): 0.0,
            (NEGATIVE, NEGATIVE): 0.0,
        }
    )

    @property
    def tp(self) -> float:
        return self.cells[(POSITIVE, POSITIVE)]

    @property
    def fn(self) -> float:
        return self.cells[(POSITIVE, NEGATIVE)]

    @property
    def fp(self) -> float:
        return self.cells[(NEGATIVE, POSITIVE)]

    @property
    def tn(self) -> float:
        return self.cells[(NEGATIVE, NEGATIVE)]

    @property
    def total_s(self) -> float:
        return sum(self.cells.values())

    def add(self, other: "WeightedConfusion") -> "WeightedConfusion":
        for key, value in other.cells.items():
            self.cells[key] = self.cells.get(key, 0.0) + value
        return self

    def to_dict(self) -> dict:
        return {
            "tp_s": self.tp, "fn_s": self.fn, "fp_s": self.fp, "tn_s": self.tn,
            "total_s": self.total_s,
        }


def weighted_confusion(spans: Sequence[AlignedSpan]) -> WeightedConfusion:
    """Sum span durations into cells keyed by (reference, hypothesis) label."""
    conf = WeightedConfusion()
    for span in spans:
        key = (span.ref_label, span.hyp_label)
        conf.cells[key] = conf.cells.get(key, 0.0) + span.length_s
    return conf


def unweighted_average(conf: WeightedConfusion) -> float:
    """UA = (tp/(tp+fn) + tn/(tn+fp)) / 2 with Empathy as the positive class."""
    pos = conf.tp + conf.fn
    neg = conf.tn + conf.fp
    if pos <= 0 or neg <= 0:
        raise ValueError("UA undefined: a reference class is absent")
    return 0.5 * (conf.tp / pos + conf.tn / neg)


def score_conversation(
    onset_s: float,
    end_s: float,
    hyp: Sequence[HypSpan],
    gap_label: str = NEGATIVE,
) -> WeightedConfusion:
    """Align one conversation's hypothesis against its reference and score it."""
    spans = align(reference_spans(onset_s, end_s), hyp, gap_label=gap_label)
    return weighted_confusion(spans)


def frame_level_confusion(
    onset_s: float,
    end_s: float,
    hyp: Sequence[HypSpan],
    frame_s: float = 0.010,
    gap_label: str = NEGATIVE,
) -> WeightedConfusion:
    """Brute-force scorer: 10 ms frames, labels resolved at frame midpoints.

    Kept as an independent cross-check of the exact interval scorer; the two
    agree within one frame duration per span boundary.
    """
    n = int(np.ceil(end_s / frame_s))
    conf = WeightedConfusion()
    for k in range(n):
        mid = (k + 0.5) * frame_s
        if mid >= end_s:
            break
        ref_label = POSITIVE if mid >= onset_s else NEGATIVE
        hyp_label = gap_label
        for h in hyp:
            if h.start_s <= mid < h.end_s:
                hyp_label = h.label
                break
        key = (ref_label, hyp_label)
        conf.cells[key] = conf.cells.get(key, 0.0) + frame_s
    return conf
