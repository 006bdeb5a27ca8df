"""Synthetic two-channel conversation generator for desk-scale validation.

Produces corpora in the manifest format with controllable class signatures:
the empathy span of the agent channel can carry a pitch shift, a loudness
shift and injected key phrases, while the neutral context and the customer
channel stay at baseline. With all shifts at zero the two classes are drawn
from identical distributions, which makes null-effect controls meaningful.

Audio is a pulse-train-style vowel: a harmonic stack with 1/h rolloff,
4 Hz vibrato, attack/release envelope and a low in-burst noise floor.
Utterances are separated by digital-silence pauses long enough for the
energy VAD to split them, and the empathy onset always coincides with an
utterance onset so reference boundaries fall in pauses.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .audio import write_wav

DEFAULT_KEYWORD_PHRASES = (
    "vediamo un po'",
    "non si preoccupi",
    "assolutamente",
    "vediamo subito allora",
    "non si preoccupi sistemiamo tutto",
    "capisco vediamo un attimo",
    "facciamo così le attivo il rimborso",
    "assolutamente sì risolviamo il problema",
)

NEUTRAL_PHRASES = (
    "buongiorno mi dica",
    "controllo subito la sua pratica",
    "mi può dare il codice cliente",
    "verifico la fattura in linea",
    "il sistema oggi è lento",
    "le confermo i dati del contratto",
    "la bolletta risulta emessa",
    "un momento per favore resti in linea",
    "sto aprendo la sua scheda",
    "la tariffa prevede un canone",
    "vedo qui il suo conto",
    "mi serve il numero di telefono",
    "la pratica è in lavorazione",
    "il pagamento risulta registrato",
)

CUSTOMER_PHRASES = (
    "buongiorno ho un problema con la fattura",
    "il servizio non funziona da ieri",
    "vorrei sapere quando arriva il tecnico",
    "ho già pagato la bolletta",
    "il numero non risponde",
    "aspetto da molto tempo",
)


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a synthetic corpus; the seed fixes everything."""

    n_conversations: int = 10
    neutral_mean_s: float = 220.0
    neutral_std_s: float = 148.0
    neutral_min_s: float = 5.0
    empathy_mean_s: float = 19.0
    empathy_std_s: float = 13.0
    empathy_min_s: float = 3.0
    pitch_shift_pct: float = -20.0
    loudness_shift_db: float = -6.0
    keyword_phrases: tuple[str, ...] = DEFAULT_KEYWORD_PHRASES
    keyword_rate: float = 0.85
    utterance_range_s: tuple[float, float] = (1.4, 2.6)
    pause_range_s: tuple[float, float] = (0.30, 0.50)
    boundary_gap_s: float = 0.40  # silence reserved before the empathy onset
    tail_s: float = 1.5
    sample_rate: int = 8000
    base_amplitude: float = 0.18
    customer_emotion_rate: float = 0.15
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "n_conversations": self.n_conversations,
            "neutral_mean_s": self.neutral_mean_s,
            "neutral_std_s": self.neutral_std_s,
            "neutral_min_s": self.neutral_min_s,
            "empathy_mean_s": self.empathy_mean_s,
            "empathy_std_s": self.empathy_std_s,
            "empathy_min_s": self.empathy_min_s,
            "pitch_shift_pct": self.pitch_shift_pct,
            "loudness_shift_db": self.loudness_shift_db,
            "keyword_phrases": list(self.keyword_phrases),
            "keyword_rate": self.keyword_rate,
            "utterance_range_s": list(self.utterance_range_s),
            "pause_range_s": list(self.pause_range_s),
            "boundary_gap_s": self.boundary_gap_s,
            "tail_s": self.tail_s,
            "sample_rate": self.sample_rate,
            "base_amplitude": self.base_amplitude,
            "customer_emotion_rate": self.customer_emotion_rate,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class Burst:
    start_s: float
    end_s: float
    f0_hz: float
    amplitude: float
    text: str


@dataclass
class ConversationPlan:
    id: str
    speaker_id: str
    onset_s: float  # empathy onset t_i
    eval_end_s: float  # empathy end t_e
    duration_s: float
    agent_bursts: list[Burst] = field(default_factory=list)
    customer_bursts: list[Burst] = field(default_factory=list)
    customer_emotion: tuple[str, float, float] | None = None


def _truncated_normal(rng: np.random.Generator, mean: float, std: float, lo: float) -> float:
    return float(max(lo, rng.normal(mean, std)))


def _fill_bursts(
    rng: np.random.Generator,
    span: tuple[float, float],
    u_range: tuple[float, float],
    p_range: tuple[float, float],
    f0_base: float,
    amp_base: float,
    texts: Sequence[str],
    keyword: tuple[Sequence[str], float] | None = None,
    lead_in: float = 0.0,
) -> list[Burst]:
    """Alternate utterances and pauses over [span); the first burst starts at
    span[0] + lead_in. Burst-level f0/amplitude variation is identically
    distributed regardless of class so zero-shift corpora stay symmetric."""
    u_min, u_max = u_range
    start, end = span
    cursor = start + lead_in
    bursts: list[Burst] = []
    while True:
        remaining = end - cursor
        if remaining < 0.5 and bursts:
            break
        length = min(float(rng.uniform(u_min, u_max)), remaining)
        if length < 0.5:
            length = remaining
        if length <= 0.05:
            break
        f0 = f0_base * float(np.exp(rng.uniform(-0.03, 0.03)))
        amp = amp_base * float(10.0 ** (rng.uniform(-1.0, 1.0) / 20.0))
        if keyword is not None and rng.random() < keyword[1]:
            text = str(keyword[0][int(rng.integers(len(keyword[0])))])
        else:
            text = str(texts[int(rng.integers(len(texts)))])
        t0 = round(cursor, 3)
        t1 = round(min(cursor + length, end), 3)
        if t1 > t0:
            bursts.append(Burst(t0, t1, f0, amp, text))
        cursor = t1 + float(rng.uniform(*p_range))
        if cursor >= end - 0.05:
            break
    return bursts


def plan_conversation(spec: SynthSpec, index: int) -> ConversationPlan:
    rng = np.random.default_rng([spec.seed, index])
    neutral_dur = _truncated_normal(rng, spec.neutral_mean_s, spec.neutral_std_s, spec.neutral_min_s)
    empathy_dur = _truncated_normal(rng, spec.empathy_mean_s, spec.empathy_std_s, spec.empathy_min_s)
    onset = round(neutral_dur, 3)
    eval_end = round(neutral_dur + empathy_dur, 3)
    duration = round(eval_end + spec.tail_s, 3)

    agent_f0 = float(rng.uniform(140.0, 220.0))
    customer_f0 = float(rng.uniform(100.0, 200.0))
    amp = spec.base_amplitude
    emp_f0 = agent_f0 * (1.0 + spec.pitch_shift_pct / 100.0)
    emp_amp = amp * float(10.0 ** (spec.loudness_shift_db / 20.0))

    plan = ConversationPlan(
        id=f"conv{index:04d}",
        speaker_id=f"spk{index:04d}",
        onset_s=onset,
        eval_end_s=eval_end,
        duration_s=duration,
    )
    plan.agent_bursts = _fill_bursts(
        rng, (0.0, max(0.5, onset - spec.boundary_gap_s)), spec.utterance_range_s,
        spec.pause_range_s, agent_f0, amp, NEUTRAL_PHRASES, lead_in=0.2,
    )
    plan.agent_bursts += _fill_bursts(
        rng, (onset, eval_end), spec.utterance_range_s, spec.pause_range_s,
        emp_f0, emp_amp, NEUTRAL_PHRASES,
        keyword=(spec.keyword_phrases, spec.keyword_rate),
    )
    plan.customer_bursts = _fill_bursts(
        rng, (0.0, duration), spec.utterance_range_s, (0.8, 1.6),
        customer_f0, amp, CUSTOMER_PHRASES, lead_in=0.5,
    )
    if rng.random() < spec.customer_emotion_rate:
        label = "Anger" if rng.random() < 0.5 else "Frustration"
        e0 = round(float(rng.uniform(0.0, max(0.5, onset - 5.0))), 3)
        e1 = round(min(e0 + float(rng.uniform(3.0, 8.0)), duration), 3)
        if e1 > e0:
            plan.customer_emotion = (label, e0, e1)
    return plan


def plan_corpus(spec: SynthSpec) -> list[ConversationPlan]:
    return [plan_conversation(spec, i) for i in range(spec.n_conversations)]


def render_channel(
    bursts: Sequence[Burst], duration_s: float, sr: int, rng: np.random.Generator
) -> np.ndarray:
    """Synthesize one channel: harmonic vowel bursts over digital silence."""
    out = np.zeros(int(round(duration_s * sr)))
    for b in bursts:
        lo = int(round(b.start_s * sr))
        hi = min(int(round(b.end_s * sr)), len(out))
        n = hi - lo
        if n <= 0:
            continue
        t = np.arange(n) / sr
        f0 = b.f0_hz * (1.0 + 0.02 * np.sin(2 * np.pi * 4.0 * t + rng.uniform(0, 2 * np.pi)))
        phase = 2 * np.pi * np.cumsum(f0) / sr
        wave = np.zeros(n)
        n_harm = max(1, min(12, int(3400.0 / b.f0_hz)))
        for h in range(1, n_harm + 1):
            wave += np.sin(h * phase) / h
        wave /= np.max(np.abs(wave)) + 1e-12
        env = np.ones(n)
        ramp = min(int(0.030 * sr), n // 2)
        if ramp > 0:
            env[:ramp] = np.linspace(0.0, 1.0, ramp)
            env[-ramp:] = np.linspace(1.0, 0.0, ramp)
        noise = rng.standard_normal(n) * 10 ** (-45.0 / 20.0)
        out[lo:hi] += b.amplitude * env * (wave + noise)
    return out


def _manifest_entry(plan: ConversationPlan, agent_name: str, customer_name: str) -> dict:
    tiers = {
        "ref": [
            {"channel": "agent", "start_s": 0.0, "end_s": plan.onset_s, "label": "Neutral"},
            {"channel": "agent", "start_s": plan.onset_s, "end_s": plan.eval_end_s, "label": "Empathy"},
        ]
    }
    if plan.customer_emotion is None:
        tiers["ref"].append(
            {"channel": "customer", "start_s": 0.0, "end_s": plan.duration_s, "label": "Neutral"}
        )
    else:
        label, e0, e1 = plan.customer_emotion
        spans = []
        if e0 > 0:
            spans.append({"channel": "customer", "start_s": 0.0, "end_s": e0, "label": "Neutral"})
        spans.append({"channel": "customer", "start_s": e0, "end_s": e1, "label": label})
        if e1 < plan.duration_s:
            spans.append(
                {"channel": "customer", "start_s": e1, "end_s": plan.duration_s, "label": "Neutral"}
            )
        tiers["ref"].extend(spans)
    return {
        "id": plan.id,
        "speaker_id": plan.speaker_id,
        "agent_wav": agent_name,
        "customer_wav": customer_name,
        "tiers": tiers,
        "transcripts": {
            "agent": [
                {"start_s": b.start_s, "end_s": b.end_s, "text": b.text}
                for b in plan.agent_bursts
            ]
        },
    }


def generate(spec: SynthSpec, out_dir: str | Path, write_audio: bool = True) -> Path:
    """Emit WAV pairs and a manifest under out_dir; returns the manifest path.

    With ``write_audio`` disabled only the manifest is produced (useful for
    statistics over conversation plans without rendering hours of audio).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(spec.n_conversations):
        plan = plan_conversation(spec, i)
        agent_name = f"{plan.id}_agent.wav"
        customer_name = f"{plan.id}_customer.wav"
        if write_audio:
            render_rng = np.random.default_rng([spec.seed, i, 7])
            agent = render_channel(plan.agent_bursts, plan.duration_s, spec.sample_rate, render_rng)
            customer = render_channel(plan.customer_bursts, plan.duration_s, spec.sample_rate, render_rng)
            write_wav(out / agent_name, agent, spec.sample_rate)
            write_wav(out / customer_name, customer, spec.sample_rate)
        entries.append(_manifest_entry(plan, agent_name, customer_name))

    manifest = out / "manifest.json"
    manifest.write_text(
        json.dumps(entries, indent=2, sort_keys=True, ensure_ascii=False), encoding="utf-8"
    )
    (out / "synth_spec.json").write_text(
        json.dumps(spec.to_dict(), indent=2, sort_keys=True, ensure_ascii=False), encoding="utf-8"
    )
    return manifest
