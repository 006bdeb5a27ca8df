"""WAV file I/O for 8 kHz 16-bit PCM mono channels.

All corpus audio is RIFF WAV, PCM signed 16-bit little-endian, mono.
Samples are exposed as float64 in [-1, 1).
"""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np

PCM_SCALE = 32768.0


class AudioFormatError(ValueError):
    """Raised when a WAV file does not match the expected PCM format."""


def read_wav(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a mono 16-bit PCM WAV file.

    Returns:
        (samples, sample_rate) where samples is float64 in [-1, 1).
    """
    with wave.open(str(path), "rb") as wf:
        if wf.getnchannels() != 1:
            raise AudioFormatError(f"{path}: expected mono, got {wf.getnchannels()} channels")
        if wf.getsampwidth() != 2:
            raise AudioFormatError(f"{path}: expected 16-bit PCM, got {8 * wf.getsampwidth()}-bit")
        rate = wf.getframerate()
        raw = wf.readframes(wf.getnframes())
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / PCM_SCALE
    return samples, rate


def write_wav(path: str | Path, samples: np.ndarray, rate: int = 8000) -> None:
    """Write float samples in [-1, 1] as mono 16-bit PCM."""
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 32767.0 / PCM_SCALE)
    pcm = np.round(clipped * PCM_SCALE).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(rate)
        wf.writeframes(pcm.tobytes())


def wav_duration_s(path: str | Path) -> float:
    """Duration in seconds from the WAV header, without reading samples."""
    with wave.open(str(path), "rb") as wf:
        return wf.getnframes() / wf.getframerate()
