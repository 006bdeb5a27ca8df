"""End-to-end orchestration: segmentation, feature extraction, balancing,
selection, training, fusion and duration-weighted scoring.

The flow mirrors the training/testing architecture: manual neutral/empathy
spans are cut into speech segments by the VAD and inherit their span's
label; the majority class is duration-bin undersampled at data preparation;
the minority class is SMOTE-oversampled after feature extraction (training
data only — dev and test are never resampled). Discretization boundaries and
Relief weights are estimated on the development set, the learning curve
picks the feature count, the penalty grid is tuned on dev UA, and the final
models are refit on train+dev. Test conversations are segmented blind,
classified per segment, and scored against the reference with the weighted
confusion matrix.

Every random draw derives from the config seed, so a rerun with the same
config produces a bit-identical report.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import balance as bal
from . import featsel, scoring, svm, text
from .acoustic import FrameConfig, extract_segment_features, feature_names
from .audio import read_wav
from .corpus import AGENT, Conversation, Corpus, extract_segment_pairs, load_manifest
from .vad import VadConfig, segment_speech

POSITIVE = "Empathy"
NEGATIVE = "Neutral"

WORK_DIR_ENV = "EMPATHY_WORK_DIR"

SYSTEM_NAMES = ("acoustic", "lexical", "psycholinguistic", "fused_acoustic_lexical")


class PipelineValidationError(ValueError):
    """Configuration/corpus validation failure (CLI exit code 2)."""


class StageError(RuntimeError):
    """A pipeline stage failed (CLI exit code 3); message names the stage."""


@dataclass(frozen=True)
class PipelineConfig:
    corpus_manifest: str
    work_dir: str
    lexicon_path: str | None = None
    annotator: str = "ref"
    seed: int = 0
    split_ratios: tuple[float, float, float] = (0.70, 0.15, 0.15)
    splits: dict | None = None  # explicit {"train": [ids], "dev": [...], "test": [...]}
    frame: FrameConfig = field(default_factory=FrameConfig)
    vad: VadConfig = field(default_factory=VadConfig)
    n_duration_bins: int = 10
    target_majority_fraction: float = 0.82
    smote_k: int = 5
    smote_percent: float = 100.0
    select_batch: int = 400
    select_epsilon: float = 0.005
    curve_c: float = 1.0
    c_grid: tuple[float, ...] | None = None
    g_grid: tuple[float, ...] | None = None
    svm_tol: float = 1e-3
    svm_max_steps: int = 30_000
    vocab_cap: int = 10_000
    ngram_max: int = 3
    baseline_trials: int = 1000
    export_csv: bool = False

    def __post_init__(self) -> None:
        if abs(sum(self.split_ratios) - 1.0) > 1e-9:
            raise PipelineValidationError("split ratios must sum to 1")

    def resolved_work_dir(self) -> Path:
        return Path(os.environ.get(WORK_DIR_ENV, self.work_dir))

    def to_dict(self) -> dict:
        return {
            "corpus_manifest": self.corpus_manifest,
            "work_dir": self.work_dir,
            "lexicon_path": self.lexicon_path,
            "annotator": self.annotator,
            "seed": self.seed,
            "split_ratios": list(self.split_ratios),
            "splits": self.splits,
            "frame": self.frame.to_dict(),
            "vad": {
                "frame_ms": self.vad.frame_ms,
                "hop_ms": self.vad.hop_ms,
                "energy_threshold_db": self.vad.energy_threshold_db,
                "min_speech_ms": self.vad.min_speech_ms,
                "min_gap_ms": self.vad.min_gap_ms,
            },
            "n_duration_bins": self.n_duration_bins,
            "target_majority_fraction": self.target_majority_fraction,
            "smote_k": self.smote_k,
            "smote_percent": self.smote_percent,
            "select_batch": self.select_batch,
            "select_epsilon": self.select_epsilon,
            "curve_c": self.curve_c,
            "c_grid": None if self.c_grid is None else list(self.c_grid),
            "g_grid": None if self.g_grid is None else list(self.g_grid),
            "svm_tol": self.svm_tol,
            "svm_max_steps": self.svm_max_steps,
            "vocab_cap": self.vocab_cap,
            "ngram_max": self.ngram_max,
            "baseline_trials": self.baseline_trials,
            "export_csv": self.export_csv,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        if isinstance(d.get("frame"), dict):
            d["frame"] = FrameConfig(**d["frame"])
        if isinstance(d.get("vad"), dict):
            d["vad"] = VadConfig(**d["vad"])
        for key in ("split_ratios", "c_grid", "g_grid"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return cls(**d)

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class PipeSegment:
    """One speech segment flowing through the pipeline."""

    conv_id: str
    start_s: float
    end_s: float
    label: str | None  # None for blind test segments

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    @property
    def segment_id(self) -> str:
        return f"{self.conv_id}:{self.start_s:.3f}-{self.end_s:.3f}"

    def to_dict(self) -> dict:
        return {
            "conv_id": self.conv_id,
            "start_s": self.start_s,
            "end_s": self.end_s,
            "label": self.label,
        }


def split_corpus(corpus: Corpus, config: PipelineConfig) -> dict[str, list[Conversation]]:
    """Speaker-disjoint train/dev/test split.

    Explicit splits from the config are validated for disjoint speakers;
    otherwise speaker groups are shuffled with the config seed and filled
    greedily to the requested conversation-count ratios.
    """
    by_id = {c.id: c for c in corpus}
    if config.splits is not None:
        out: dict[str, list[Conversation]] = {}
        speakers: dict[str, set[str]] = {}
        for name in ("train", "dev", "test"):
            ids = config.splits.get(name, [])
            missing = [i for i in ids if i not in by_id]
            if missing:
                raise PipelineValidationError(
                    f"unknown conversation ids in split {name}: {missing}"
                )
            out[name] = [by_id[i] for i in ids]
            speakers[name] = {c.speaker_id or c.id for c in out[name]}
        for a, b in (("train", "dev"), ("train", "test"), ("dev", "test")):
            overlap = speakers[a] & speakers[b]
            if overlap:
                raise PipelineValidationError(
                    f"speaker(s) {sorted(overlap)} appear in both {a} and {b} splits"
                )
        return out

    groups: dict[str, list[Conversation]] = {}
    for conv in corpus:
        groups.setdefault(conv.speaker_id or conv.id, []).append(conv)
    keys = sorted(groups)
    rng = np.random.default_rng(config.seed)
    rng.shuffle(keys)
    n = len(corpus)
    t_train = config.split_ratios[0] * n
    t_dev = (config.split_ratios[0] + config.split_ratios[1]) * n
    out = {"train": [], "dev": [], "test": []}
    filled = 0
    for key in keys:
        if filled < t_train:
            bucket = "train"
        elif filled < t_dev:
            bucket = "dev"
        else:
            bucket = "test"
        out[bucket].extend(groups[key])
        filled += len(groups[key])
    for name, convs in out.items():
        if not convs:
            raise PipelineValidationError(f"{name} split is empty; corpus too small")
    return out


def _load_agent(conv: Conversation, cache: dict) -> tuple[np.ndarray, int]:
    if conv.id not in cache:
        cache[conv.id] = read_wav(conv.agent_wav)
    return cache[conv.id]


def segment_labeled_spans(
    conv: Conversation,
    onset_s: float,
    end_s: float,
    vad_config: VadConfig,
    audio_cache: dict,
) -> list[PipeSegment]:
    """VAD inside the neutral and empathy spans; segments inherit the label."""
    audio, sr = _load_agent(conv, audio_cache)
    segments: list[PipeSegment] = []
    for lo, hi, label in ((0.0, onset_s, NEGATIVE), (onset_s, end_s, POSITIVE)):
        a, b = int(lo * sr), min(int(hi * sr), len(audio))
        for s, e in segment_speech(audio[a:b], sr, vad_config):
            segments.append(PipeSegment(conv.id, round(lo + s, 3), round(lo + e, 3), label))
    return segments


def segment_blind(
    conv: Conversation, end_s: float, vad_config: VadConfig, audio_cache: dict
) -> list[PipeSegment]:
    """VAD over the evaluated range [0, t_e] without labels."""
    audio, sr = _load_agent(conv, audio_cache)
    hi = min(int(end_s * sr), len(audio))
    return [
        PipeSegment(conv.id, round(s, 3), round(e, 3), None)
        for s, e in segment_speech(audio[:hi], sr, vad_config)
    ]


def tokens_for_span(conv: Conversation, start_s: float, end_s: float) -> list[str]:
    """Tokens of agent transcript entries whose midpoint falls inside the span."""
    tokens: list[str] = []
    for entry in conv.transcripts.get(AGENT, ()):
        mid = 0.5 * (entry.start_s + entry.end_s)
        if start_s <= mid < end_s:
            tokens.extend(text.tokenize(entry.text))
    return tokens


def undersample_majority(
    segments: list[PipeSegment], config: PipelineConfig
) -> tuple[list[PipeSegment], dict]:
    """Duration-binned undersampling of the Neutral training segments.

    The per-bin quota is derived from the target majority fraction (the bin
    edges are percentile-based, so occupancy is nearly even); when the
    majority is already at or below the target share, everything is kept.
    """
    minority = [s for s in segments if s.label == POSITIVE]
    majority = [s for s in segments if s.label == NEGATIVE]
    info: dict = {"n_minority": len(minority), "n_majority_before": len(majority)}
    frac = config.target_majority_fraction
    target = int(round(len(minority) * frac / (1.0 - frac)))
    if len(majority) <= target or not majority:
        info.update({"n_majority_after": len(majority), "undersampled": False})
        return segments, info

    durations = [s.duration_s for s in majority]
    spec = bal.BinSpec.from_percentiles(
        durations,
        n_bins=config.n_duration_bins,
        per_bin_n=max(1, int(np.ceil(target / config.n_duration_bins))),
    )
    keep_idx = bal.binned_undersample(durations, spec, seed=config.seed + 17)
    kept = [majority[i] for i in keep_idx]
    info.update(
        {
            "n_majority_after": len(kept),
            "undersampled": True,
            "bin_edges": list(spec.edges),
            "per_bin_n": spec.per_bin_n,
        }
    )
    return minority + kept, info


def _labels_to_pm1(labels: Sequence[str | None]) -> np.ndarray:
    return np.asarray([1.0 if l == POSITIVE else -1.0 for l in labels])


_SPACE_OFFSETS = {"acoustic": 101, "lexical": 102, "psycholinguistic": 103, "fused_acoustic_lexical": 104}


def apply_smote(
    X: np.ndarray, y: np.ndarray, config: PipelineConfig, space: str
) -> tuple[np.ndarray, np.ndarray, bal.SmoteResult | None]:
    """Oversample the minority (+1) class of one training matrix."""
    if config.smote_percent <= 0:
        return X, y, None
    minority = X[y > 0]
    if len(minority) <= config.smote_k:
        return X, y, None
    cfg = bal.SmoteConfig(
        k=config.smote_k,
        percent=config.smote_percent,
        seed=config.seed + _SPACE_OFFSETS.get(space, 100),
    )
    result = bal.smote(minority, cfg)
    return (
        np.vstack([X, result.synthetic]),
        np.concatenate([y, np.ones(len(result.synthetic))]),
        result,
    )


@dataclass
class SystemResult:
    name: str
    model: svm.SvmModel
    selected: list[int] | None
    curve: featsel.LearningCurve | None
    best_c: float
    best_g: float | None
    dev_ua: float

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        cols = X[:, self.selected] if self.selected is not None else X
        return self.model.decision_function(cols)

    def summary(self) -> dict:
        return {
            "selected_dim": None if self.selected is None else len(self.selected),
            "C": self.best_c,
            "G": self.best_g,
            "dev_ua": self.dev_ua,
            "kkt_residual": self.model.kkt_residual,
            "curve": None if self.curve is None else self.curve.rows(),
        }


def train_system(
    name: str,
    X_train: np.ndarray,
    y_train: np.ndarray,
    X_dev: np.ndarray,
    y_dev: np.ndarray,
    config: PipelineConfig,
    kernel: str,
    standardize: bool,
    select: bool,
) -> SystemResult:
    """Optional Relief selection, grid tuning on dev, final fit on train+dev."""
    selected: list[int] | None = None
    curve = None
    if select and X_train.shape[1] > config.select_batch:
        ids_disc, _ = featsel.discretize_matrix(X_dev, k=10)
        weights = featsel.relief_weights(ids_disc, y_dev)
        ranked = [int(i) for i in weights.ranking]

        def train_eval(feat_ids: Sequence[int]) -> float:
            cols = list(feat_ids)
            model = svm.train_svm(
                X_train[:, cols], y_train, kernel=kernel, C=config.curve_c,
                tol=config.svm_tol, standardize=standardize,
                max_steps=config.svm_max_steps,
            )
            pred = np.where(model.decision_function(X_dev[:, cols]) >= 0, 1.0, -1.0)
            return svm.count_ua(y_dev, pred)

        selected, curve = featsel.learning_curve_select(
            ranked, train_eval, batch_size=config.select_batch,
            epsilon=config.select_epsilon,
        )
        X_train = X_train[:, selected]
        X_dev = X_dev[:, selected]

    g_grid = config.g_grid if kernel == "gaussian" else None
    best_c, best_g, _ = svm.grid_tune(
        (X_train, y_train), (X_dev, y_dev), kernel=kernel,
        c_grid=config.c_grid, g_grid=g_grid,
        tol=config.svm_tol, standardize=standardize, max_steps=config.svm_max_steps,
    )
    dev_model = svm.train_svm(
        X_train, y_train, kernel=kernel, C=best_c, gamma=best_g,
        tol=config.svm_tol, standardize=standardize, max_steps=config.svm_max_steps,
    )
    dev_pred = np.where(dev_model.decision_function(X_dev) >= 0, 1.0, -1.0)
    dev_ua = svm.count_ua(y_dev, dev_pred)

    model = svm.retrain_on_train_plus_dev(
        (X_train, y_train), (X_dev, y_dev), kernel=kernel, C=best_c, gamma=best_g,
        tol=config.svm_tol, standardize=standardize, max_steps=config.svm_max_steps,
    )
    return SystemResult(name, model, selected, curve, best_c, best_g, dev_ua)


def _segment_ref_overlaps(seg: PipeSegment, onset: float, end: float) -> tuple[float, float]:
    """Overlap of the segment with the reference Neutral/Empathy spans."""
    lo, hi = max(seg.start_s, 0.0), min(seg.end_s, end)
    if hi <= lo:
        return 0.0, 0.0
    dur_n = max(0.0, min(hi, onset) - lo)
    dur_e = max(0.0, hi - max(lo, onset))
    return dur_n, dur_e


def random_baseline_scored(
    priors: dict[str, float],
    dur_n: np.ndarray,
    dur_e: np.ndarray,
    gap_n: float,
    gap_e: float,
    seed: int,
    trials: int,
) -> np.ndarray:
    """Duration-weighted UA distribution for prior-sampled segment labels.

    Coverage gaps contribute fixed Neutral-labeled time; only segment labels
    are random. Vectorized over trials.
    """
    labels = sorted(priors)
    p = np.asarray([priors[l] for l in labels])
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(labels), size=(trials, len(dur_n)), p=p)
    is_pos = np.asarray(labels)[picks] == POSITIVE

    tp = is_pos @ dur_e
    fp = is_pos @ dur_n
    fn = (~is_pos) @ dur_e + gap_e
    tn = (~is_pos) @ dur_n + gap_n
    return 0.5 * (tp / (tp + fn) + tn / (tn + fp))


def score_system(
    test_segments: list[PipeSegment],
    decisions: Sequence[svm.Decision],
    pairs_by_conv: dict,
) -> tuple[scoring.WeightedConfusion, dict[str, float]]:
    """Pooled duration-weighted confusion plus per-conversation UA."""
    by_conv: dict[str, list[scoring.HypSpan]] = {}
    for seg, dec in zip(test_segments, decisions):
        by_conv.setdefault(seg.conv_id, []).append(
            scoring.HypSpan(seg.start_s, seg.end_s, dec.label)
        )
    pooled = scoring.WeightedConfusion()
    per_conv: dict[str, float] = {}
    for conv_id, pair in pairs_by_conv.items():
        hyp = sorted(by_conv.get(conv_id, []), key=lambda h: h.start_s)
        conf = scoring.score_conversation(pair.empathy.start_s, pair.empathy.end_s, hyp)
        pooled.add(conf)
        try:
            per_conv[conv_id] = scoring.unweighted_average(conf)
        except ValueError:
            per_conv[conv_id] = float("nan")
    return pooled, per_conv


def run_pipeline(config: PipelineConfig) -> dict:
    """Execute all stages and return the report dict (persisted as JSON too)."""
    work = config.resolved_work_dir()
    work.mkdir(parents=True, exist_ok=True)

    # --- load & split ----------------------------------------------------
    try:
        corpus = load_manifest(config.corpus_manifest)
    except Exception as exc:
        raise StageError(f"stage 'load' failed: {exc}") from exc
    splits = split_corpus(corpus, config)
    (work / "splits.json").write_text(
        json.dumps({k: sorted(c.id for c in v) for k, v in splits.items()},
                   indent=2, sort_keys=True),
        encoding="utf-8",
    )
    pairs = {
        name: {p.conversation_id: p for p in extract_segment_pairs(convs, config.annotator)}
        for name, convs in splits.items()
    }
    audio_cache: dict = {}

    # --- stage: segment ---------------------------------------------------
    try:
        segments: dict[str, list[PipeSegment]] = {"train": [], "dev": [], "test": []}
        for name in ("train", "dev"):
            for conv in splits[name]:
                pair = pairs[name].get(conv.id)
                if pair is None:
                    continue
                segments[name].extend(
                    segment_labeled_spans(
                        conv, pair.empathy.start_s, pair.empathy.end_s,
                        config.vad, audio_cache,
                    )
                )
        for conv in splits["test"]:
            pair = pairs["test"].get(conv.id)
            if pair is None:
                continue
            segments["test"].extend(
                segment_blind(conv, pair.empathy.end_s, config.vad, audio_cache)
            )
        for name in ("train", "dev"):
            if {s.label for s in segments[name]} != {POSITIVE, NEGATIVE}:
                raise RuntimeError(f"{name} split lacks both classes after segmentation")
    except Exception as exc:
        raise StageError(f"stage 'segment' failed: {exc}") from exc
    (work / "segments.json").write_text(
        json.dumps({k: [s.to_dict() for s in v] for k, v in segments.items()},
                   indent=2, sort_keys=True),
        encoding="utf-8",
    )

    natural_train_labels = [s.label for s in segments["train"]]

    # --- stage: balance (undersampling precedes feature extraction) -------
    try:
        segments["train"], under_info = undersample_majority(segments["train"], config)
    except Exception as exc:
        raise StageError(f"stage 'balance' failed: {exc}") from exc

    # --- stage: extract ----------------------------------------------------
    conv_by_id = {c.id: c for c in corpus}
    lexicon = text.load_lexicon(config.lexicon_path or text.fixture_lexicon_path())
    try:
        acoustic_mats: dict[str, np.ndarray] = {}
        token_lists: dict[str, list[list[str]]] = {}
        psycho_mats: dict[str, np.ndarray] = {}
        n_ac = len(feature_names(config.frame))
        n_ps = len(text.psycho_feature_names(lexicon))
        for name in ("train", "dev", "test"):
            vecs, toks_all, psy = [], [], []
            for s in segments[name]:
                conv = conv_by_id[s.conv_id]
                audio, sr = _load_agent(conv, audio_cache)
                vecs.append(
                    extract_segment_features(audio, sr, s.start_s, s.end_s, config.frame).values
                )
                tokens = tokens_for_span(conv, s.start_s, s.end_s)
                toks_all.append(tokens)
                psy.append(text.psycho_features(tokens, lexicon))
            acoustic_mats[name] = np.vstack(vecs) if vecs else np.zeros((0, n_ac))
            token_lists[name] = toks_all
            psycho_mats[name] = np.vstack(psy) if psy else np.zeros((0, n_ps))

        vocab = text.Vocabulary.build(
            token_lists["train"], n_max=config.ngram_max, size_cap=config.vocab_cap
        )
        n_train_segments = max(1, len(token_lists["train"]))
        lexical_mats = {}
        for name in ("train", "dev", "test"):
            rows = [
                text.tfidf_vector(toks, vocab, n_train_segments).to_dense()
                for toks in token_lists[name]
            ]
            lexical_mats[name] = np.vstack(rows) if rows else np.zeros((0, len(vocab)))
    except Exception as exc:
        raise StageError(f"stage 'extract' failed: {exc}") from exc

    fused_mats = {
        name: featsel.fuse_matrices(acoustic_mats[name], lexical_mats[name])
        for name in ("train", "dev", "test")
    }
    matrices = {
        "acoustic": acoustic_mats,
        "lexical": lexical_mats,
        "psycholinguistic": psycho_mats,
        "fused_acoustic_lexical": fused_mats,
    }
    for name, mats in matrices.items():
        np.save(work / f"features_{name}_train.npy", mats["train"])

    y_train_base = _labels_to_pm1([s.label for s in segments["train"]])
    y_dev = _labels_to_pm1([s.label for s in segments["dev"]])

    # --- stage: oversample (SMOTE per feature space, training data only) ---
    try:
        balanced: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        smote_audit = {}
        for name, mats in matrices.items():
            X, y, result = apply_smote(mats["train"], y_train_base, config, name)
            balanced[name] = (X, y)
            if result is not None:
                result.write_audit(
                    work / f"smote_{name}.json",
                    bal.SmoteConfig(config.smote_k, config.smote_percent,
                                    config.seed + _SPACE_OFFSETS.get(name, 100)),
                )
                smote_audit[name] = len(result.provenance)
    except Exception as exc:
        raise StageError(f"stage 'oversample' failed: {exc}") from exc

    # --- stage: select + train ---------------------------------------------
    system_specs = {
        "acoustic": dict(kernel="linear", standardize=True, select=True),
        "lexical": dict(kernel="linear", standardize=False, select=True),
        "psycholinguistic": dict(kernel="gaussian", standardize=True, select=False),
        "fused_acoustic_lexical": dict(kernel="linear", standardize=True, select=True),
    }
    systems: dict[str, SystemResult] = {}
    for name, spec in system_specs.items():
        try:
            X, y = balanced[name]
            systems[name] = train_system(
                name, X, y, matrices[name]["dev"], y_dev, config, **spec
            )
            systems[name].model.schema = name
            systems[name].model.save(work / f"model_{name}.json")
        except Exception as exc:
            raise StageError(f"stage 'train:{name}' failed: {exc}") from exc
        if systems[name].curve is not None:
            curve_path = work / f"learning_curve_{name}.csv"
            with open(curve_path, "w", encoding="utf-8") as fh:
                fh.write("n_features,dev_ua\n")
                for size, score in systems[name].curve.rows():
                    fh.write(f"{size},{score:.6f}\n")

    # --- stage: score --------------------------------------------------------
    try:
        test_segments = segments["test"]
        ids = [s.segment_id for s in test_segments]
        decisions: dict[str, list[svm.Decision]] = {}
        for name, system in systems.items():
            margins = system.predict_matrix(matrices[name]["test"])
            decisions[name] = [
                svm.Decision(sid, POSITIVE if m >= 0 else NEGATIVE, float(m))
                for sid, m in zip(ids, margins)
            ]
        decisions["majority_vote"] = svm.majority_vote_batch(
            [decisions["acoustic"], decisions["lexical"], decisions["psycholinguistic"]]
        )

        results = {}
        per_conv_all = {}
        for name, decs in decisions.items():
            pooled, per_conv = score_system(test_segments, decs, pairs["test"])
            results[name] = {
                "ua": scoring.unweighted_average(pooled),
                "confusion_s": pooled.to_dict(),
            }
            if name in systems:
                results[name].update(systems[name].summary())
            per_conv_all[name] = per_conv

        # duration-weighted random baseline from natural training priors
        n_pos = sum(1 for l in natural_train_labels if l == POSITIVE)
        priors = {
            POSITIVE: n_pos / len(natural_train_labels),
            NEGATIVE: 1.0 - n_pos / len(natural_train_labels),
        }
        dur_n, dur_e = [], []
        covered = {}
        for seg in test_segments:
            pair = pairs["test"][seg.conv_id]
            n_s, e_s = _segment_ref_overlaps(seg, pair.empathy.start_s, pair.empathy.end_s)
            dur_n.append(n_s)
            dur_e.append(e_s)
            cov = covered.setdefault(seg.conv_id, [0.0, 0.0])
            cov[0] += n_s
            cov[1] += e_s
        gap_n = gap_e = 0.0
        for conv_id, pair in pairs["test"].items():
            cov_n, cov_e = covered.get(conv_id, (0.0, 0.0))
            gap_n += max(0.0, pair.neutral.duration_s - cov_n)
            gap_e += max(0.0, pair.empathy.duration_s - cov_e)
        baseline = random_baseline_scored(
            priors, np.asarray(dur_n), np.asarray(dur_e), gap_n, gap_e,
            seed=config.seed + 999, trials=config.baseline_trials,
        )
        results["random_baseline"] = {
            "ua": float(baseline.mean()),
            "ua_std": float(baseline.std()),
            "trials": config.baseline_trials,
            "priors": priors,
        }
    except Exception as exc:
        raise StageError(f"stage 'score' failed: {exc}") from exc

    report = {
        "config": config.to_dict(),
        "n_conversations": len(corpus),
        "splits": {k: sorted(c.id for c in v) for k, v in splits.items()},
        "n_segments": {k: len(v) for k, v in segments.items()},
        "undersampling": under_info,
        "smote_synthetic": smote_audit,
        "vocabulary_size": len(vocab),
        "systems": results,
        "per_conversation_ua": per_conv_all,
    }
    (work / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True), encoding="utf-8"
    )
    (work / "report.txt").write_text(format_report(report), encoding="utf-8")
    return report


def format_report(report: dict) -> str:
    """Human-readable summary with one row per system."""
    lines = ["system                         UA"]
    order = [
        "random_baseline", "acoustic", "lexical", "psycholinguistic",
        "fused_acoustic_lexical", "majority_vote",
    ]
    for name in order:
        if name in report["systems"]:
            ua = report["systems"][name]["ua"]
            lines.append(f"{name:<28} {100 * ua:6.1f}")
    lines.append("")
    lines.append(f"segments: {report['n_segments']}")
    return "\n".join(lines) + "\n"
