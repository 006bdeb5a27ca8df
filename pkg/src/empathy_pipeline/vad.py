"""Energy-based speech/non-speech segmentation and frame-level F-measure.

Stands in for an HMM segmenter behind the same span-list interface: any
callable ``(audio, sr) -> [(start_s, end_s), ...]`` can be plugged into the
pipeline in its place. The detector thresholds per-frame log energy relative
to the channel median, so output spans are invariant to positive amplitude
scaling. Frames with exactly zero energy are never speech, which keeps that
invariance while mapping digital silence to an empty span list.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class VadConfig:
    frame_ms: float = 25.0
    hop_ms: float = 10.0
    energy_threshold_db: float = -30.0  # relative to median frame energy (dB)
    min_speech_ms: float = 200.0
    min_gap_ms: float = 150.0

    def __post_init__(self) -> None:
        if not self.frame_ms >= self.hop_ms > 0:
            raise ValueError("require frame_ms >= hop_ms > 0")
        if self.min_speech_ms < 0 or self.min_gap_ms < 0:
            raise ValueError("smoothing durations must be >= 0")


def frame_energies(audio: np.ndarray, sr: int, frame_ms: float, hop_ms: float) -> np.ndarray:
    """Mean-square energy per frame (frame k starts at k*hop)."""
    frame = int(round(sr * frame_ms / 1000.0))
    hop = int(round(sr * hop_ms / 1000.0))
    n = len(audio)
    if n == 0:
        return np.zeros(0)
    n_frames = max(1, 1 + (n - 1) // hop)
    padded = np.concatenate([audio, np.zeros(frame)])
    idx = np.arange(frame)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = padded[idx]
    return np.mean(frames * frames, axis=1)


def mask_to_spans(mask: np.ndarray, hop_s: float) -> list[tuple[float, float]]:
    """Convert a boolean frame mask to [start_s, end_s) spans."""
    if mask.size == 0 or not mask.any():
        return []
    padded = np.concatenate([[False], mask, [False]])
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    starts, ends = edges[0::2], edges[1::2]
    return [(s * hop_s, e * hop_s) for s, e in zip(starts, ends)]


def spans_to_mask(spans: list[tuple[float, float]], n_frames: int, hop_s: float) -> np.ndarray:
    """Frame mask from spans; frame k is speech iff its midpoint lies in a span."""
    mask = np.zeros(n_frames, dtype=bool)
    mids = (np.arange(n_frames) + 0.5) * hop_s
    for start, end in spans:
        mask |= (mids >= start) & (mids < end)
    return mask


def smooth_spans(
    spans: list[tuple[float, float]], min_speech_s: float, min_gap_s: float
) -> list[tuple[float, float]]:
    """Merge gaps shorter than min_gap_s, then drop spans shorter than min_speech_s."""
    if not spans:
        return []
    merged = [list(spans[0])]
    for start, end in spans[1:]:
        if start - merged[-1][1] < min_gap_s:
            merged[-1][1] = end
        else:
            merged.append([start, end])
    return [(float(s), float(e)) for s, e in merged if e - s >= min_speech_s]


def segment_speech(
    audio: np.ndarray, sr: int, config: VadConfig | None = None
) -> list[tuple[float, float]]:
    """Detect speech spans on one channel.

    A frame is speech when its energy is positive and its dB level is above
    the median dB level of positive-energy frames plus
    ``energy_threshold_db``. Spans are then smoothed: gaps shorter than
    ``min_gap_ms`` are merged and spans shorter than ``min_speech_ms``
    dropped. All-zero audio yields an empty list.
    """
    cfg = config or VadConfig()
    energies = frame_energies(audio, sr, cfg.frame_ms, cfg.hop_ms)
    if energies.size == 0:
        return []
    hop_s = cfg.hop_ms / 1000.0

    positive = energies > 0.0
    if not positive.any():
        return []
    db = np.full(energies.shape, -np.inf)
    db[positive] = 10.0 * np.log10(energies[positive])
    median_db = float(np.median(db[positive]))
    mask = positive & (db > median_db + cfg.energy_threshold_db)

    spans = mask_to_spans(mask, hop_s)
    return smooth_spans(spans, cfg.min_speech_ms / 1000.0, cfg.min_gap_ms / 1000.0)


def vad_f_measure(
    ref_spans: list[tuple[float, float]],
    hyp_spans: list[tuple[float, float]],
    frame_ms: float = 10.0,
) -> dict[str, float | None]:
    """Frame-level precision/recall/F1 of hypothesis speech spans.

    Spans are discretized to frames of ``frame_ms``; a frame counts as speech
    when its midpoint falls inside a span. Undefined ratios (no reference
    speech frames for recall, no hypothesis speech frames for precision) are
    reported as None, as is F1 when either component is undefined.
    """
    all_spans = list(ref_spans) + list(hyp_spans)
    t_max = max((e for _, e in all_spans), default=0.0)
    hop_s = frame_ms / 1000.0
    n_frames = int(np.ceil(t_max / hop_s)) if t_max > 0 else 0
    ref = spans_to_mask(list(ref_spans), n_frames, hop_s)
    hyp = spans_to_mask(list(hyp_spans), n_frames, hop_s)

    tp = int(np.sum(ref & hyp))
    n_hyp = int(np.sum(hyp))
    n_ref = int(np.sum(ref))

    precision = tp / n_hyp if n_hyp else None
    recall = tp / n_ref if n_ref else None
    if precision is None or recall is None:
        f1 = None
    elif precision + recall == 0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return {"precision": precision, "recall": recall, "f1": f1}
