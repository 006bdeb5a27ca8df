"""Statistical functionals summarizing a per-frame descriptor track.

Each track maps to a fixed-order block of 42 values; the order is given by
``FUNCTIONAL_NAMES`` and is stable across runs for a given configuration.
Percentiles use linear interpolation between closest ranks. Regression is in
frame units (t = 0, 1, ...). The LPC block runs Levinson-Durbin on the track
treated as a signal.
"""

from __future__ import annotations

import numpy as np

LPC_ORDER = 6

FUNCTIONAL_NAMES: tuple[str, ...] = (
    "mean",
    "rqmean",
    "nnz_mean",
    "std",
    "skewness",
    "kurtosis",
    "pctl1",
    "pctl99",
    "pctl_range",
    "quartile1",
    "quartile2",
    "quartile3",
    "iqr12",
    "iqr23",
    "iqr13",
    "relpos_max",
    "relpos_min",
    "range",
    "linreg_slope",
    "linreg_offset",
    "linreg_err",
    "quadreg_a",
    "quadreg_b",
    "quadreg_c",
    "quadreg_err",
    "uplevel25",
    "uplevel50",
    "uplevel75",
    "uplevel90",
    "risetime",
    "falltime",
    "seg_mean",
    "seg_max",
    "seg_min",
    "seg_std",
    "lpc0",
    "lpc1",
    "lpc2",
    "lpc3",
    "lpc4",
    "lpc5",
    "lpc_gain",
)

N_FUNCTIONALS = len(FUNCTIONAL_NAMES)


def _moments(x: np.ndarray) -> tuple[float, float, float]:
    """(std, skewness, excess kurtosis) with population normalization."""
    m = x.mean()
    d = x - m
    m2 = float(np.mean(d * d))
    if m2 <= 0.0:
        return 0.0, 0.0, 0.0
    m3 = float(np.mean(d**3))
    m4 = float(np.mean(d**4))
    return float(np.sqrt(m2)), m3 / m2**1.5, m4 / (m2 * m2) - 3.0


def _nonzero_run_lengths(x: np.ndarray) -> np.ndarray:
    nz = np.concatenate([[False], x != 0.0, [False]])
    edges = np.flatnonzero(np.diff(nz.astype(np.int8)))
    return edges[1::2] - edges[0::2]


def levinson_durbin(r: np.ndarray, order: int) -> tuple[np.ndarray, float]:
    """Predictor coefficients and final prediction error from autocorrelation r.

    Stops early (remaining coefficients zero, gain zero) when the prediction
    error collapses, as happens for constant tracks.
    """
    a = np.zeros(order)
    err = float(r[0])
    if err <= 1e-300:
        return a, 0.0
    for i in range(order):
        acc = r[i + 1] - np.dot(a[:i], r[i:0:-1])
        k = acc / err
        a_new = a.copy()
        a_new[i] = k
        if i:
            a_new[:i] = a[:i] - k * a[:i][::-1]
        a = a_new
        err *= 1.0 - k * k
        if err <= 1e-300:
            return a, 0.0
    return a, err


def _lpc_block(x: np.ndarray) -> np.ndarray:
    n = len(x)
    out = np.zeros(LPC_ORDER + 1)
    if n < 2:
        return out
    lags = min(LPC_ORDER, n - 1)
    r = np.array([float(np.dot(x[: n - k], x[k:])) / n for k in range(lags + 1)])
    if r[0] <= 1e-300:
        return out
    r_full = np.zeros(LPC_ORDER + 1)
    r_full[: lags + 1] = r
    a, gain = levinson_durbin(r_full, LPC_ORDER)
    out[:LPC_ORDER] = a
    out[LPC_ORDER] = gain
    return out


def compute_functionals(track: np.ndarray) -> tuple[np.ndarray, bool]:
    """Functional block for one track, plus a degenerate flag.

    The flag marks tracks too short for spread statistics (single frame);
    std/skewness/kurtosis are reported as 0 in that case.
    """
    x = np.asarray(track, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty track")
    n = x.size
    degenerate = n < 2

    out = np.zeros(N_FUNCTIONALS)
    mean = float(x.mean())
    out[0] = mean
    out[1] = float(np.sqrt(np.mean(x * x)))
    nz = x[x != 0.0]
    out[2] = float(nz.mean()) if nz.size else 0.0
    out[3], out[4], out[5] = _moments(x) if not degenerate else (0.0, 0.0, 0.0)

    p1, p25, p50, p75, p99 = np.percentile(x, [1, 25, 50, 75, 99])
    out[6], out[7], out[8] = p1, p99, p99 - p1
    out[9], out[10], out[11] = p25, p50, p75
    out[12], out[13], out[14] = p50 - p25, p75 - p50, p75 - p25

    denom = n - 1 if n > 1 else 1
    out[15] = float(np.argmax(x)) / denom
    out[16] = float(np.argmin(x)) / denom
    xmin, xmax = float(x.min()), float(x.max())
    out[17] = xmax - xmin

    t = np.arange(n, dtype=np.float64)
    if n > 1:
        slope, offset = np.polyfit(t, x, 1)
        resid = x - (slope * t + offset)
        out[18], out[19], out[20] = slope, offset, float(np.mean(resid * resid))
        if n > 2:
            qa, qb, qc = np.polyfit(t, x, 2)
            residq = x - (qa * t * t + qb * t + qc)
            out[21], out[22], out[23], out[24] = qa, qb, qc, float(np.mean(residq * residq))
        else:
            out[21:25] = (0.0, slope, offset, 0.0)
    else:
        out[19] = mean
        out[23] = mean

    rng = xmax - xmin
    for j, q in enumerate((0.25, 0.50, 0.75, 0.90)):
        out[25 + j] = float(np.mean(x > xmin + q * rng)) if rng > 0 else 0.0
    if n > 1:
        dx = np.diff(x)
        out[29] = float(np.mean(dx > 0))
        out[30] = float(np.mean(dx < 0))

    runs = _nonzero_run_lengths(x)
    if runs.size:
        out[31] = float(runs.mean())
        out[32] = float(runs.max())
        out[33] = float(runs.min())
        out[34] = float(runs.std())

    out[35:] = _lpc_block(x)
    return out, degenerate


def functionals_dict(track: np.ndarray) -> dict[str, float]:
    values, _ = compute_functionals(track)
    return dict(zip(FUNCTIONAL_NAMES, values))
