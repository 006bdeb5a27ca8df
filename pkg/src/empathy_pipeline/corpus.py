"""Corpus data model: conversations, annotation tiers, segment pairs, agreement.

A conversation is a two-channel call (agent / customer) with per-annotator
tiers of labeled time segments and optional per-channel transcripts. The
manifest format is a JSON array of conversation objects; see
``load_manifest`` for the schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Sequence

from .audio import read_wav, wav_duration_s

AGENT = "agent"
CUSTOMER = "customer"

#: Seconds of slack allowed when validating timestamps against audio duration
#: (one analysis frame at 100 fps).
DURATION_TOLERANCE_S = 0.010


class Label(str, Enum):
    """Segment labels. Empathy/Neutral live on the agent channel, Anger and
    Frustration on the customer channel in valid corpora."""

    EMPATHY = "Empathy"
    NEUTRAL = "Neutral"
    ANGER = "Anger"
    FRUSTRATION = "Frustration"


AGENT_LABELS = {Label.EMPATHY, Label.NEUTRAL}
CUSTOMER_LABELS = {Label.ANGER, Label.FRUSTRATION, Label.NEUTRAL}


class CorpusError(ValueError):
    """Raised for manifest/validation problems; message carries the conversation id."""


@dataclass(frozen=True)
class Segment:
    """A labeled time span on one channel of a conversation."""

    channel: str
    start_s: float
    end_s: float
    label: Label

    def __post_init__(self) -> None:
        if self.channel not in (AGENT, CUSTOMER):
            raise CorpusError(f"unknown channel {self.channel!r}")
        if self.start_s < 0 or self.end_s <= self.start_s:
            raise CorpusError(f"invalid span [{self.start_s}, {self.end_s}]")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    def to_dict(self) -> dict[str, Any]:
        return {
            "channel": self.channel,
            "start_s": round(self.start_s, 3),
            "end_s": round(self.end_s, 3),
            "label": self.label.value,
        }


@dataclass(frozen=True)
class TranscriptEntry:
    start_s: float
    end_s: float
    text: str


@dataclass(frozen=True)
class Conversation:
    """One two-channel conversation with annotation tiers and transcripts.

    ``tiers`` maps annotator id to a sorted, non-overlapping list of segments
    (both channels mixed; filter by ``Segment.channel``). Immutable after load.
    """

    id: str
    agent_wav: str
    customer_wav: str
    tiers: dict[str, tuple[Segment, ...]]
    transcripts: dict[str, tuple[TranscriptEntry, ...]] = field(default_factory=dict)
    speaker_id: str | None = None
    duration_s: float | None = None

    def tier(self, annotator: str) -> tuple[Segment, ...]:
        return self.tiers[annotator]

    def segments(self, annotator: str, channel: str, label: Label | None = None) -> list[Segment]:
        out = [s for s in self.tiers.get(annotator, ()) if s.channel == channel]
        if label is not None:
            out = [s for s in out if s.label == label]
        return out

    def load_audio(self, channel: str) -> tuple[Any, int]:
        path = self.agent_wav if channel == AGENT else self.customer_wav
        return read_wav(path)


@dataclass(frozen=True)
class SegmentPair:
    """First-instance empathy segment and its preceding neutral context."""

    conversation_id: str
    neutral: Segment
    empathy: Segment

    def __post_init__(self) -> None:
        if self.neutral.label is not Label.NEUTRAL or self.empathy.label is not Label.EMPATHY:
            raise CorpusError(f"{self.conversation_id}: pair labels must be Neutral/Empathy")
        if self.neutral.end_s > self.empathy.start_s:
            raise CorpusError(f"{self.conversation_id}: neutral span must precede empathy onset")


Corpus = list[Conversation]


def _parse_tier(conv_id: str, annotator: str, raw: list[dict]) -> tuple[Segment, ...]:
    segs = []
    for item in raw:
        try:
            seg = Segment(
                channel=item["channel"],
                start_s=float(item["start_s"]),
                end_s=float(item["end_s"]),
                label=Label(item["label"]),
            )
        except (KeyError, ValueError) as exc:
            raise CorpusError(f"{conv_id}: bad segment in tier {annotator!r}: {exc}") from exc
        if seg.label not in (AGENT_LABELS if seg.channel == AGENT else CUSTOMER_LABELS):
            raise CorpusError(
                f"{conv_id}: label {seg.label.value} not valid on {seg.channel} channel"
            )
        segs.append(seg)
    segs.sort(key=lambda s: (s.channel, s.start_s))
    for a, b in zip(segs, segs[1:]):
        if a.channel == b.channel and b.start_s < a.end_s:
            raise CorpusError(
                f"{conv_id}: overlapping segments in tier {annotator!r} "
                f"([{a.start_s},{a.end_s}] vs [{b.start_s},{b.end_s}])"
            )
    return tuple(segs)


def load_manifest(path: str | Path, check_audio: bool = True) -> Corpus:
    """Load a corpus manifest.

    The manifest is a UTF-8 JSON array of conversation objects::

        {"id": ..., "agent_wav": ..., "customer_wav": ...,
         "speaker_id": ...,                      # optional
         "tiers": {annotator: [{"channel", "start_s", "end_s", "label"}]},
         "transcripts": {channel: [{"start_s", "end_s", "text"}]}}

    WAV paths are resolved relative to the manifest directory. With
    ``check_audio`` the referenced files must exist, both channels must have
    equal duration (within one frame) and all tier timestamps must lie
    within the audio.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise CorpusError("manifest must be a JSON array of conversation objects")

    base = path.parent
    corpus: Corpus = []
    for entry in raw:
        conv_id = str(entry.get("id", "<missing id>"))
        try:
            agent_wav = str(base / entry["agent_wav"])
            customer_wav = str(base / entry["customer_wav"])
        except KeyError as exc:
            raise CorpusError(f"{conv_id}: missing required key {exc}") from exc

        duration = None
        if check_audio:
            for wav in (agent_wav, customer_wav):
                if not Path(wav).is_file():
                    raise CorpusError(f"{conv_id}: audio file not found: {wav}")
            da, dc = wav_duration_s(agent_wav), wav_duration_s(customer_wav)
            if abs(da - dc) > DURATION_TOLERANCE_S:
                raise CorpusError(
                    f"{conv_id}: channel durations differ ({da:.3f}s vs {dc:.3f}s)"
                )
            duration = da

        tiers = {
            str(ann): _parse_tier(conv_id, str(ann), segs)
            for ann, segs in entry.get("tiers", {}).items()
        }
        if check_audio and duration is not None:
            for ann, segs in tiers.items():
                for seg in segs:
                    if seg.end_s > duration + DURATION_TOLERANCE_S:
                        raise CorpusError(
                            f"{conv_id}: segment [{seg.start_s},{seg.end_s}] in tier "
                            f"{ann!r} exceeds audio duration {duration:.3f}s"
                        )

        transcripts = {}
        for channel, items in entry.get("transcripts", {}).items():
            transcripts[str(channel)] = tuple(
                TranscriptEntry(float(t["start_s"]), float(t["end_s"]), str(t["text"]))
                for t in items
            )

        corpus.append(
            Conversation(
                id=conv_id,
                agent_wav=agent_wav,
                customer_wav=customer_wav,
                tiers=tiers,
                transcripts=transcripts,
                speaker_id=entry.get("speaker_id"),
                duration_s=duration,
            )
        )
    return corpus


def first_empathy_segment(conv: Conversation, annotator: str) -> Segment | None:
    """Earliest-onset Empathy segment on the agent tier, or None."""
    segs = conv.segments(annotator, AGENT, Label.EMPATHY)
    return min(segs, key=lambda s: s.start_s) if segs else None


def extract_segment_pairs(
    corpus: Iterable[Conversation], annotator: str = "ref", warn: list[str] | None = None
) -> list[SegmentPair]:
    """One neutral/empathy pair per conversation with an Empathy annotation.

    Only the first Empathy instance is used; the neutral context spans from
    the conversation start to the empathy onset. Conversations whose first
    Empathy segment starts at 0 have no context and are skipped (a warning
    message is appended to ``warn`` when provided).
    """
    pairs: list[SegmentPair] = []
    for conv in corpus:
        emp = first_empathy_segment(conv, annotator)
        if emp is None:
            continue
        if emp.start_s <= 0:
            if warn is not None:
                warn.append(f"{conv.id}: empathy onset at 0, no neutral context; skipped")
            continue
        neutral = Segment(AGENT, 0.0, emp.start_s, Label.NEUTRAL)
        pairs.append(SegmentPair(conv.id, neutral, emp))
    return pairs


@dataclass(frozen=True)
class CooccurrenceTable:
    """2x2 conversation counts: agent Empathy/Neutral x customer emotion/Neutral."""

    counts: dict[tuple[str, str], int]
    total: int

    def percent(self, row: str, col: str) -> float:
        return 100.0 * self.counts[(row, col)] / self.total if self.total else 0.0

    def to_dict(self) -> dict[str, Any]:
        cells = {
            f"{row}/{col}": {
                "count": self.counts[(row, col)],
                "percent": round(self.percent(row, col), 2),
            }
            for row, col in self.counts
        }
        return {"total": self.total, "cells": cells}


ROW_EMOTION = "anger_or_frustration"
ROW_NEUTRAL = "neutral"
COL_EMPATHY = "empathy"
COL_NEUTRAL = "neutral"


def cooccurrence(corpus: Sequence[Conversation], annotator: str = "ref") -> CooccurrenceTable:
    """Count conversations by (customer shows anger/frustration) x (agent shows empathy)."""
    counts = {
        (ROW_EMOTION, COL_EMPATHY): 0,
        (ROW_EMOTION, COL_NEUTRAL): 0,
        (ROW_NEUTRAL, COL_EMPATHY): 0,
        (ROW_NEUTRAL, COL_NEUTRAL): 0,
    }
    for conv in corpus:
        agent_emp = bool(conv.segments(annotator, AGENT, Label.EMPATHY))
        cust_emo = bool(
            conv.segments(annotator, CUSTOMER, Label.ANGER)
            or conv.segments(annotator, CUSTOMER, Label.FRUSTRATION)
        )
        row = ROW_EMOTION if cust_emo else ROW_NEUTRAL
        col = COL_EMPATHY if agent_emp else COL_NEUTRAL
        counts[(row, col)] += 1
    return CooccurrenceTable(counts=counts, total=len(corpus))


class UndefinedKappaError(ValueError):
    """Raised when kappa cannot be computed (no data, or degenerate margins)."""


def kappa_with_tolerance(
    tier_a: dict[str, Sequence[Segment]],
    tier_b: dict[str, Sequence[Segment]],
    tolerance_s: float,
    label: Label = Label.EMPATHY,
    channel: str = AGENT,
) -> dict[str, Any]:
    """Chance-corrected agreement between two annotators with onset tolerance.

    Tiers map conversation id to that annotator's segments. Per conversation,
    each annotator makes a binary decision (did they mark ``label``); two
    "yes" decisions match when the first onsets differ by at most
    ``tolerance_s`` (ties count as a match). Cohen's kappa is computed over
    the per-conversation decisions, with matched both-yes and both-no counted
    as observed agreement; a both-yes pair outside the tolerance counts as
    disagreement while still contributing to both "yes" margins.

    Returns a dict with ``kappa``, ``percent_agreement`` (both marked, as a
    percentage of conversations where either marked), ``onset_agreement``
    (both marked within tolerance, same denominator) and the raw decision
    counts. The denominators for the two percentages are per-conversation;
    with first-instance annotation this coincides with per-segment counting.
    """
    if tolerance_s < 0:
        raise ValueError("tolerance_s must be >= 0")
    ids = sorted(set(tier_a) | set(tier_b))
    n = len(ids)
    if n == 0:
        raise UndefinedKappaError("kappa undefined for an empty conversation set")

    def first_onset(segs: Sequence[Segment] | None) -> float | None:
        if not segs:
            return None
        marked = [s for s in segs if s.label == label and s.channel == channel]
        return min((s.start_s for s in marked), default=None)

    n_matched = n_both = n_a_only = n_b_only = n_neither = 0
    for cid in ids:
        oa = first_onset(tier_a.get(cid))
        ob = first_onset(tier_b.get(cid))
        if oa is not None and ob is not None:
            n_both += 1
            if abs(oa - ob) <= tolerance_s:
                n_matched += 1
        elif oa is not None:
            n_a_only += 1
        elif ob is not None:
            n_b_only += 1
        else:
            n_neither += 1

    p_o = (n_matched + n_neither) / n
    p_yes_a = (n_both + n_a_only) / n
    p_yes_b = (n_both + n_b_only) / n
    p_e = p_yes_a * p_yes_b + (1 - p_yes_a) * (1 - p_yes_b)

    if p_e >= 1.0 - 1e-15:
        # Degenerate margins: all decisions identical on both sides.
        if p_o >= 1.0 - 1e-15:
            kappa = 1.0
        else:
            raise UndefinedKappaError("degenerate margins with imperfect agreement")
    else:
        kappa = (p_o - p_e) / (1 - p_e)

    union = n_both + n_a_only + n_b_only
    return {
        "kappa": kappa,
        "percent_agreement": 100.0 * n_both / union if union else 100.0,
        "onset_agreement": 100.0 * n_matched / union if union else 100.0,
        "n_conversations": n,
        "n_matched": n_matched,
        "n_both": n_both,
        "n_a_only": n_a_only,
        "n_b_only": n_b_only,
        "n_neither": n_neither,
    }


def tiers_by_conversation(corpus: Sequence[Conversation], annotator: str) -> dict[str, tuple[Segment, ...]]:
    """Collect one annotator's tier across a corpus, keyed by conversation id."""
    return {conv.id: conv.tiers.get(annotator, ()) for conv in corpus}
