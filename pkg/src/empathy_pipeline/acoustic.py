"""Frame-level acoustic descriptor extraction and per-segment vectors.

Descriptors are computed at 100 frames per second from 8 kHz audio:

* spectral family (centroid, flux, roll-offs, band energies, shape moments,
  entropy, slope, position of spectral max/min) from 25 ms Hamming frames of
  the pre-emphasized signal,
* 26 auditory (mel) band energies, loudness and MFCC 1-14 from the same
  spectra,
* zero-crossing rate and RMS energy from the raw frames,
* F0 and voicing probability via taper-corrected autocorrelation on 40 ms
  frames (range 60-500 Hz),
* voice-quality measures (jitter, shimmer, log HNR) from the voiced period
  and amplitude sequences, with per-frame HNR taken from 60 ms Gaussian
  windows.

``extract_segment_features`` applies the Table-style functionals to every
track and appends the voice-quality scalars, producing a deterministic
fixed-order vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.fft import dct

from .features import FeatureVector
from .functionals import FUNCTIONAL_NAMES, compute_functionals


@dataclass(frozen=True)
class FrameConfig:
    rate_fps: int = 100
    window_ms: float = 25.0
    vq_window_ms: float = 60.0
    vq_gauss_sigma: float = 0.4
    pitch_window_ms: float = 40.0
    preemphasis_k: float = 0.97
    fft_size: int = 256
    sample_rate: int = 8000
    n_mel_bands: int = 26
    n_mfcc: int = 14
    f0_min_hz: float = 60.0
    f0_max_hz: float = 500.0
    voicing_threshold: float = 0.45

    def __post_init__(self) -> None:
        if self.window_ms < self.hop_ms:
            raise ValueError("window must cover at least one hop")
        if self.fft_size < self.window_samples:
            raise ValueError("fft_size must be >= window length in samples")
        if not 0 <= self.preemphasis_k < 1:
            raise ValueError("preemphasis_k must be in [0, 1)")

    @property
    def hop_ms(self) -> float:
        return 1000.0 / self.rate_fps

    @property
    def hop_samples(self) -> int:
        return int(round(self.sample_rate / self.rate_fps))

    @property
    def window_samples(self) -> int:
        return int(round(self.window_ms * self.sample_rate / 1000.0))

    @property
    def pitch_window_samples(self) -> int:
        return int(round(self.pitch_window_ms * self.sample_rate / 1000.0))

    @property
    def vq_window_samples(self) -> int:
        return int(round(self.vq_window_ms * self.sample_rate / 1000.0))

    def to_dict(self) -> dict:
        return {
            "rate_fps": self.rate_fps,
            "window_ms": self.window_ms,
            "vq_window_ms": self.vq_window_ms,
            "vq_gauss_sigma": self.vq_gauss_sigma,
            "pitch_window_ms": self.pitch_window_ms,
            "preemphasis_k": self.preemphasis_k,
            "fft_size": self.fft_size,
            "sample_rate": self.sample_rate,
            "n_mel_bands": self.n_mel_bands,
            "n_mfcc": self.n_mfcc,
            "f0_min_hz": self.f0_min_hz,
            "f0_max_hz": self.f0_max_hz,
            "voicing_threshold": self.voicing_threshold,
        }


def preemphasize(signal: np.ndarray, k: float = 0.97) -> np.ndarray:
    """y[n] = x[n] - k*x[n-1], with y[0] = x[0]."""
    if not 0 <= k < 1:
        raise ValueError("k must be in [0, 1)")
    x = np.asarray(signal, dtype=np.float64)
    if x.size == 0:
        return x.copy()
    y = np.empty_like(x)
    y[0] = x[0]
    y[1:] = x[1:] - k * x[:-1]
    return y


def n_frames_for(n_samples: int, hop: int) -> int:
    return max(1, int(np.ceil(n_samples / hop)))


def frame_signal(signal: np.ndarray, win: int, hop: int) -> np.ndarray:
    """Slice into ceil(n/hop) frames of length win; frame k starts at k*hop.

    The tail is zero-padded so every window size yields the same frame count
    and tracks stay aligned.
    """
    x = np.asarray(signal, dtype=np.float64)
    n = x.size
    nf = n_frames_for(n, hop)
    need = (nf - 1) * hop + win
    if need > n:
        x = np.concatenate([x, np.zeros(need - n)])
    view = np.lib.stride_tricks.sliding_window_view(x, win)[::hop]
    return view[:nf]


def hamming(n: int) -> np.ndarray:
    return np.hamming(n)


def gaussian_window(n: int, sigma: float) -> np.ndarray:
    """Gaussian window with sigma relative to half the window length."""
    t = np.arange(n) - (n - 1) / 2.0
    s = sigma * (n - 1) / 2.0
    return np.exp(-0.5 * (t / s) ** 2)


def power_spectrum(frames: np.ndarray, window: np.ndarray, nfft: int) -> np.ndarray:
    spec = np.fft.rfft(frames * window, nfft, axis=1)
    return (spec.real**2 + spec.imag**2) / nfft


def fft_bin_freqs(nfft: int, sr: int) -> np.ndarray:
    return np.fft.rfftfreq(nfft, d=1.0 / sr)


SPECTRAL_TRACKS = (
    "centroid",
    "flux",
    "rolloff25",
    "rolloff50",
    "rolloff75",
    "rolloff90",
    "energy_0_650",
    "energy_250_650",
    "energy_1000_4000",
    "spec_variance",
    "spec_skewness",
    "spec_kurtosis",
    "spec_entropy",
    "spec_slope",
    "spec_posmax",
    "spec_posmin",
)


def spectral_llds(ps: np.ndarray, freqs: np.ndarray) -> dict[str, np.ndarray]:
    """Spectral descriptor tracks from a (frames x bins) power spectrum.

    All-zero frames yield 0 for every descriptor (callers can detect them via
    the returned ``zero_frames`` mask under key ``_zero``).
    """
    ps = np.asarray(ps, dtype=np.float64)
    if ps.ndim == 1:
        ps = ps[None, :]
    if np.any(ps < 0):
        raise ValueError("power spectrum must be non-negative")
    total = ps.sum(axis=1)
    zero = total <= 0.0
    safe_total = np.where(zero, 1.0, total)
    p = ps / safe_total[:, None]

    out: dict[str, np.ndarray] = {}
    centroid = p @ freqs
    centroid[zero] = 0.0
    out["centroid"] = centroid

    flux = np.zeros(len(ps))
    if len(ps) > 1:
        flux[1:] = np.sqrt(np.sum(np.diff(p, axis=0) ** 2, axis=1))
        flux[1:][zero[1:] | zero[:-1]] = 0.0
    out["flux"] = flux

    cum = np.cumsum(ps, axis=1)
    for q, name in ((0.25, "rolloff25"), (0.50, "rolloff50"), (0.75, "rolloff75"), (0.90, "rolloff90")):
        idx = np.argmax(cum >= q * total[:, None] - 1e-300, axis=1)
        roll = freqs[idx]
        roll[zero] = 0.0
        out[name] = roll

    half_bw = (freqs[1] - freqs[0]) / 2.0 if len(freqs) > 1 else 0.0
    for lo, hi, name in ((0, 650, "energy_0_650"), (250, 650, "energy_250_650"), (1000, 4000, "energy_1000_4000")):
        sel = (freqs + half_bw > lo) & (freqs - half_bw < hi)
        out[name] = ps[:, sel].sum(axis=1)

    dev = freqs[None, :] - centroid[:, None]
    var = np.sum(p * dev**2, axis=1)
    var[zero] = 0.0
    m3 = np.sum(p * dev**3, axis=1)
    m4 = np.sum(p * dev**4, axis=1)
    safe_var = np.where(var > 0, var, 1.0)
    skew = np.where(var > 0, m3 / safe_var**1.5, 0.0)
    kurt = np.where(var > 0, m4 / safe_var**2, 0.0)
    out["spec_variance"] = var
    out["spec_skewness"] = skew
    out["spec_kurtosis"] = kurt

    with np.errstate(divide="ignore", invalid="ignore"):
        logp = np.where(p > 0, np.log(np.where(p > 0, p, 1.0)), 0.0)
    entropy = -np.sum(p * logp, axis=1)
    entropy[zero] = 0.0
    out["spec_entropy"] = entropy

    fc = freqs - freqs.mean()
    denom = float(np.dot(fc, fc))
    slope = (p @ fc) / denom
    slope[zero] = 0.0
    out["spec_slope"] = slope

    posmax = freqs[np.argmax(ps, axis=1)]
    posmin = freqs[np.argmin(ps, axis=1)]
    posmax[zero] = 0.0
    posmin[zero] = 0.0
    out["spec_posmax"] = posmax
    out["spec_posmin"] = posmin
    out["_zero"] = zero
    return out


def hz_to_mel(f: np.ndarray | float) -> np.ndarray | float:
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m: np.ndarray | float) -> np.ndarray | float:
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(
    n_bands: int, nfft: int, sr: int, f_lo: float = 0.0, f_hi: float | None = None
) -> np.ndarray:
    """Triangular mel filterbank (peak 1) on FFT bin frequencies."""
    f_hi = sr / 2.0 if f_hi is None else f_hi
    pts = mel_to_hz(np.linspace(hz_to_mel(f_lo), hz_to_mel(f_hi), n_bands + 2))
    freqs = fft_bin_freqs(nfft, sr)
    fb = np.zeros((n_bands, len(freqs)))
    for m in range(n_bands):
        lo, mid, hi = pts[m], pts[m + 1], pts[m + 2]
        rising = (freqs - lo) / (mid - lo)
        falling = (hi - freqs) / (hi - mid)
        fb[m] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb


def partition_bands(n_bands: int, nfft: int, sr: int) -> np.ndarray:
    """Rectangular mel-spaced partition: every bin in exactly one band, so the
    band energies sum to the total spectral energy."""
    freqs = fft_bin_freqs(nfft, sr)
    edges = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(sr / 2.0), n_bands + 1))
    assign = np.clip(np.searchsorted(edges[1:-1], freqs, side="right"), 0, n_bands - 1)
    fb = np.zeros((n_bands, len(freqs)))
    fb[assign, np.arange(len(freqs))] = 1.0
    return fb


def auditory_bands(ps: np.ndarray, filterbank: np.ndarray) -> np.ndarray:
    """Band energies (frames x bands) for a precomputed filterbank."""
    return np.asarray(ps, dtype=np.float64) @ filterbank.T


def loudness(bands: np.ndarray) -> np.ndarray:
    """Stevens-law loudness approximation: sum of band energies ** 0.3."""
    return np.sum(np.asarray(bands, dtype=np.float64) ** 0.3, axis=-1)


def mfcc(band_energies: np.ndarray, n_coeffs: int = 14) -> np.ndarray:
    """MFCCs 1..n_coeffs from mel band energies via log + DCT-II (ortho)."""
    loge = np.log(np.maximum(band_energies, 1e-30))
    coeffs = dct(loge, type=2, axis=-1, norm="ortho")
    return coeffs[..., 1 : n_coeffs + 1]


def zcr(frames: np.ndarray) -> np.ndarray:
    """Sign changes per sample within each frame."""
    frames = np.atleast_2d(frames)
    signs = np.sign(frames)
    changes = np.sum(np.abs(np.diff(signs, axis=1)) > 1, axis=1)
    return changes / frames.shape[1]


def rms_energy(frames: np.ndarray) -> np.ndarray:
    frames = np.atleast_2d(frames)
    return np.sqrt(np.mean(frames * frames, axis=1))


def _parabolic_offset(y_prev: np.ndarray, y0: np.ndarray, y_next: np.ndarray) -> np.ndarray:
    denom = y_prev - 2.0 * y0 + y_next
    off = np.where(np.abs(denom) > 1e-12, 0.5 * (y_prev - y_next) / np.where(denom == 0, 1.0, denom), 0.0)
    return np.clip(off, -0.5, 0.5)


def pitch_llds(
    frames: np.ndarray, sr: int, f0_min: float = 60.0, f0_max: float = 500.0,
    voicing_threshold: float = 0.45, window: np.ndarray | None = None,
    peak_ratio: float = 0.9,
) -> tuple[np.ndarray, np.ndarray]:
    """F0 (Hz) and voicing probability per frame via autocorrelation.

    The frame autocorrelation is normalized by the window autocorrelation to
    undo the taper bias, then the first local peak within [f0_max, f0_min]
    lags that reaches ``peak_ratio`` of the global peak is chosen (guards
    against octave errors) and refined by parabolic interpolation. Unvoiced
    and silent frames report f0 = 0.
    """
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    win_len = frames.shape[1]
    if window is None:
        window = hamming(win_len)
    lag_min = max(2, int(np.floor(sr / f0_max)))
    lag_max = min(win_len - 2, int(np.ceil(sr / f0_min)))
    if lag_max <= lag_min:
        raise ValueError("frame too short for the requested pitch range")

    nfft = 1 << int(np.ceil(np.log2(2 * win_len)))
    spec = np.fft.rfft(frames * window, nfft, axis=1)
    ac = np.fft.irfft(spec.real**2 + spec.imag**2, nfft, axis=1)[:, : lag_max + 2]
    wspec = np.fft.rfft(window, nfft)
    wac = np.fft.irfft(wspec.real**2 + wspec.imag**2, nfft)[: lag_max + 2]

    r0 = ac[:, 0]
    silent = r0 <= 1e-20
    safe_r0 = np.where(silent, 1.0, r0)
    # taper-corrected normalized autocorrelation
    rn = ac / safe_r0[:, None] / (wac / wac[0])[None, :]

    seg = rn[:, lag_min : lag_max + 1]
    local_max = np.zeros_like(seg, dtype=bool)
    local_max[:, 1:-1] = (seg[:, 1:-1] >= seg[:, :-2]) & (seg[:, 1:-1] >= seg[:, 2:])
    gmax = seg.max(axis=1)
    candidate = local_max & (seg >= peak_ratio * gmax[:, None])
    has_peak = candidate.any(axis=1)
    first = np.argmax(candidate, axis=1)
    best = np.where(has_peak, first, np.argmax(seg, axis=1)) + lag_min

    idx = np.arange(len(frames))
    y0 = rn[idx, best]
    y_prev = rn[idx, best - 1]
    y_next = rn[idx, np.minimum(best + 1, lag_max + 1)]
    lag = best + _parabolic_offset(y_prev, y0, y_next)

    voicing = np.clip(np.where(silent, 0.0, gmax), 0.0, 1.0)
    voiced = (~silent) & (voicing >= voicing_threshold)
    f0 = np.where(voiced, sr / lag, 0.0)
    f0 = np.clip(f0, 0.0, f0_max)
    return f0, voicing


def hnr_track(frames: np.ndarray, sr: int, config: FrameConfig) -> np.ndarray:
    """Per-frame harmonics-to-noise ratio in dB from Gaussian-windowed frames.

    HNR = 10*log10(r / (1 - r)) with r the taper-corrected autocorrelation
    peak, clipped to [-60, 60] dB. Silent frames report -60 dB.
    """
    window = gaussian_window(frames.shape[1], config.vq_gauss_sigma)
    _, voicing = pitch_llds(
        frames, sr, config.f0_min_hz, config.f0_max_hz,
        voicing_threshold=0.0, window=window,
    )
    r = np.clip(voicing, 1e-6, 1.0 - 1e-6)
    return 10.0 * np.log10(r / (1.0 - r))


def voice_quality(
    periods_s: np.ndarray,
    amplitudes: np.ndarray | None = None,
    hnr_db: np.ndarray | None = None,
) -> dict[str, float]:
    """Jitter, shimmer and mean log-HNR from period/amplitude sequences.

    jitter_local is the mean absolute difference of consecutive periods over
    the mean period; jitter_ddp uses second differences; shimmer_local is the
    analogous measure on amplitudes. With fewer than two periods all values
    are 0 and ``unvoiced`` is set.
    """
    periods = np.asarray(periods_s, dtype=np.float64)
    out = {"jitter_local": 0.0, "jitter_ddp": 0.0, "shimmer_local": 0.0,
           "log_hnr": 0.0, "unvoiced": False}
    if hnr_db is not None and len(hnr_db):
        out["log_hnr"] = float(np.mean(hnr_db))
    if periods.size < 2:
        out["unvoiced"] = True
        return out
    mean_t = float(periods.mean())
    if mean_t > 0:
        out["jitter_local"] = float(np.mean(np.abs(np.diff(periods)))) / mean_t
        if periods.size >= 3:
            out["jitter_ddp"] = float(np.mean(np.abs(np.diff(periods, 2)))) / mean_t
    if amplitudes is not None:
        amps = np.asarray(amplitudes, dtype=np.float64)
        if amps.size >= 2 and amps.mean() > 0:
            out["shimmer_local"] = float(np.mean(np.abs(np.diff(amps)))) / float(amps.mean())
    return out


VQ_NAMES = ("vq__jitter_local", "vq__jitter_ddp", "vq__shimmer_local", "vq__log_hnr")


def _track_names(config: FrameConfig) -> list[str]:
    names = list(SPECTRAL_TRACKS)
    names += [f"band_{i:02d}" for i in range(config.n_mel_bands)]
    names += [f"mfcc_{i:02d}" for i in range(1, config.n_mfcc + 1)]
    names += ["loudness", "zcr", "rms", "f0", "voicing"]
    return names


def feature_names(config: FrameConfig | None = None) -> tuple[str, ...]:
    """Ordered names of the full acoustic feature vector."""
    cfg = config or FrameConfig()
    names = [f"{t}__{f}" for t in _track_names(cfg) for f in FUNCTIONAL_NAMES]
    names += list(VQ_NAMES)
    return tuple(names)


class SegmentTooShortError(ValueError):
    pass


def compute_lld_tracks(audio: np.ndarray, config: FrameConfig) -> dict[str, np.ndarray]:
    """All descriptor tracks for one stretch of audio, aligned at 100 fps."""
    sr = config.sample_rate
    hop = config.hop_samples
    emphasized = preemphasize(audio, config.preemphasis_k)

    frames_spec = frame_signal(emphasized, config.window_samples, hop)
    ps = power_spectrum(frames_spec, hamming(config.window_samples), config.fft_size)
    freqs = fft_bin_freqs(config.fft_size, sr)
    tracks = spectral_llds(ps, freqs)
    tracks.pop("_zero")

    fb = mel_filterbank(config.n_mel_bands, config.fft_size, sr)
    bands = auditory_bands(ps, fb)
    for i in range(config.n_mel_bands):
        tracks[f"band_{i:02d}"] = bands[:, i]
    cc = mfcc(bands, config.n_mfcc)
    for i in range(1, config.n_mfcc + 1):
        tracks[f"mfcc_{i:02d}"] = cc[:, i - 1]
    tracks["loudness"] = loudness(bands)

    frames_raw = frame_signal(audio, config.window_samples, hop)
    tracks["zcr"] = zcr(frames_raw)
    tracks["rms"] = rms_energy(frames_raw)

    frames_pitch = frame_signal(audio, config.pitch_window_samples, hop)
    f0, voicing = pitch_llds(
        frames_pitch, sr, config.f0_min_hz, config.f0_max_hz, config.voicing_threshold
    )
    tracks["f0"] = f0
    tracks["voicing"] = voicing
    return tracks


def extract_segment_features(
    audio: np.ndarray,
    sr: int,
    start_s: float,
    end_s: float,
    config: FrameConfig | None = None,
) -> FeatureVector:
    """Fixed-order acoustic feature vector for one segment of a channel."""
    cfg = config or FrameConfig()
    if sr != cfg.sample_rate:
        cfg = FrameConfig(**{**cfg.to_dict(), "sample_rate": sr})
    lo, hi = int(round(start_s * sr)), int(round(end_s * sr))
    if lo < 0 or hi > len(audio):
        raise ValueError(f"segment [{start_s}, {end_s}] outside audio bounds")
    min_dur = 3.0 / cfg.rate_fps
    if (hi - lo) < 3 * cfg.hop_samples:
        raise SegmentTooShortError(
            f"segment [{start_s}, {end_s}] shorter than minimum duration {min_dur:.2f}s"
        )
    segment = audio[lo:hi]

    tracks = compute_lld_tracks(segment, cfg)
    blocks = [compute_functionals(tracks[name])[0] for name in _track_names(cfg)]

    f0 = tracks["f0"]
    voiced = f0 > 0
    periods = 1.0 / f0[voiced] if voiced.any() else np.zeros(0)
    amps = tracks["rms"][voiced]
    frames_vq = frame_signal(segment, cfg.vq_window_samples, cfg.hop_samples)
    hnr = hnr_track(frames_vq, sr, cfg)[voiced]
    vq = voice_quality(periods, amps, hnr)
    vq_values = np.array(
        [vq["jitter_local"], vq["jitter_ddp"], vq["shimmer_local"], vq["log_hnr"]]
    )

    values = np.concatenate(blocks + [vq_values])
    return FeatureVector(feature_names(cfg), values)
