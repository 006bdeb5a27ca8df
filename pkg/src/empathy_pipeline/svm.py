"""Binary SVM training via sequential minimal optimization, hyperparameter
grid tuning, a prior-sampling random baseline, and majority-vote fusion.

The solver is the classic two-alpha working-set scheme with an error cache
and the second-choice heuristic that maximizes |E1 - E2|; candidate sweeps
start at a deterministic position so training is reproducible. Kernels:
``linear`` (dot product, collapsed to an explicit weight vector after
training) and ``gaussian`` with K(x, z) = exp(-G * ||x - z||^2).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

EPS = 1e-12
STEP_EPS = 1e-8  # relative minimum useful alpha change (Platt's eps)

POSITIVE = "Empathy"
NEGATIVE = "Neutral"


def linear_kernel(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B.T


def gaussian_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    a2 = np.sum(A * A, axis=1)[:, None]
    b2 = np.sum(B * B, axis=1)[None, :]
    d2 = np.maximum(a2 + b2 - 2.0 * (A @ B.T), 0.0)
    return np.exp(-gamma * d2)


def kernel_matrix(A: np.ndarray, B: np.ndarray, kernel: str, gamma: float | None) -> np.ndarray:
    if kernel == "linear":
        return linear_kernel(A, B)
    if kernel == "gaussian":
        if gamma is None:
            raise ValueError("gaussian kernel needs gamma")
        return gaussian_kernel(A, B, gamma)
    raise ValueError(f"unknown kernel {kernel!r}")


@dataclass
class SvmModel:
    kernel: str
    C: float
    gamma: float | None
    support_vectors: np.ndarray = field(repr=False)
    dual_coef: np.ndarray = field(repr=False)  # alpha_i * y_i over support vectors
    bias: float = 0.0
    w: np.ndarray | None = field(default=None, repr=False)  # linear collapse
    norm_mean: np.ndarray | None = field(default=None, repr=False)
    norm_std: np.ndarray | None = field(default=None, repr=False)
    schema: str | None = None
    kkt_residual: float = 0.0
    n_steps: int = 0
    converged: bool = True
    objective_curve: list[float] | None = None

    def _normalize(self, X: np.ndarray) -> np.ndarray:
        if self.norm_mean is None:
            return X
        return (X - self.norm_mean) / self.norm_std

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = self._normalize(np.atleast_2d(np.asarray(X, dtype=np.float64)))
        if self.kernel == "linear" and self.w is not None:
            return X @ self.w + self.bias
        K = kernel_matrix(X, self.support_vectors, self.kernel, self.gamma)
        return K @ self.dual_coef + self.bias

    def save(self, path: str | Path) -> None:
        payload = {
            "format_version": 1,
            "kernel": self.kernel,
            "C": self.C,
            "gamma": self.gamma,
            "bias": self.bias,
            "schema": self.schema,
            "kkt_residual": self.kkt_residual,
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "w": None if self.w is None else self.w.tolist(),
            "norm_mean": None if self.norm_mean is None else self.norm_mean.tolist(),
            "norm_std": None if self.norm_std is None else self.norm_std.tolist(),
        }
        Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "SvmModel":
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        arr = lambda v: None if v is None else np.asarray(v, dtype=np.float64)
        return cls(
            kernel=d["kernel"], C=d["C"], gamma=d["gamma"],
            support_vectors=np.asarray(d["support_vectors"], dtype=np.float64),
            dual_coef=np.asarray(d["dual_coef"], dtype=np.float64),
            bias=d["bias"], w=arr(d["w"]),
            norm_mean=arr(d["norm_mean"]), norm_std=arr(d["norm_std"]),
            schema=d.get("schema"), kkt_residual=d.get("kkt_residual", 0.0),
        )


@dataclass(frozen=True)
class Decision:
    segment_id: str
    label: str
    margin: float


def smo_train(
    X: np.ndarray,
    y: np.ndarray,
    kernel: str = "linear",
    C: float = 1.0,
    gamma: float | None = None,
    tol: float = 1e-3,
    max_steps: int = 200_000,
    precomputed_kernel: np.ndarray | None = None,
    track_objective: bool = False,
) -> SvmModel:
    """Solve the soft-margin dual for labels in {-1, +1}.

    Stops when no example violates its KKT condition by more than ``tol``
    (or after ``max_steps`` successful alpha-pair updates, flagged via
    ``converged=False``). The returned model keeps only support vectors;
    linear models also carry the collapsed weight vector.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if set(np.unique(y)) - {-1.0, 1.0}:
        raise ValueError("labels must be -1/+1")
    if len(np.unique(y)) < 2:
        raise ValueError("need at least one instance of each class")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values")
    n = len(X)

    K = precomputed_kernel if precomputed_kernel is not None else kernel_matrix(X, X, kernel, gamma)
    alpha = np.zeros(n)
    b = 0.0
    E = -y.copy()  # decision function starts at 0
    steps = 0
    objective: list[float] | None = [] if track_objective else None

    def take_step(i1: int, i2: int) -> bool:
        nonlocal b, steps, E
        if i1 == i2:
            return False
        a1 = float(alpha[i1])
        a2 = float(alpha[i2])
        y1, y2 = y[i1], y[i2]
        E1 = float(E[i1])
        E2 = float(E[i2])
        s = y1 * y2
        if s > 0:
            L, H = max(0.0, a1 + a2 - C), min(C, a1 + a2)
        else:
            L, H = max(0.0, a2 - a1), min(C, C + a2 - a1)
        if H - L < EPS:
            return False
        k11, k12, k22 = K[i1, i1], K[i1, i2], K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > EPS:
            a2_new = min(max(a2 + y2 * (E1 - E2) / eta, L), H)
        else:
            # flat direction: evaluate the objective at both clip bounds
            f1 = y1 * (E1 + b) - a1 * k11 - s * a2 * k12
            f2 = y2 * (E2 + b) - s * a1 * k12 - a2 * k22
            L1 = a1 + s * (a2 - L)
            H1 = a1 + s * (a2 - H)
            l_obj = L1 * f1 + L * f2 + 0.5 * L1 * L1 * k11 + 0.5 * L * L * k22 + s * L * L1 * k12
            h_obj = H1 * f1 + H * f2 + 0.5 * H1 * H1 * k11 + 0.5 * H * H * k22 + s * H * H1 * k12
            if l_obj < h_obj - EPS:
                a2_new = L
            elif l_obj > h_obj + EPS:
                a2_new = H
            else:
                return False
        if abs(a2_new - a2) < STEP_EPS * (a2_new + a2 + STEP_EPS):
            return False
        a1_new = a1 + s * (a2 - a2_new)

        d1, d2 = y1 * (a1_new - a1), y2 * (a2_new - a2)
        b1 = b - E1 - d1 * k11 - d2 * k12
        b2 = b - E2 - d1 * k12 - d2 * k22
        if 0.0 < a1_new < C:
            b_new = b1
        elif 0.0 < a2_new < C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)

        E += d1 * K[i1] + d2 * K[i2] + (b_new - b)
        alpha[i1], alpha[i2] = a1_new, a2_new
        b = b_new
        steps += 1
        return True

    def examine(i2: int) -> bool:
        y2, a2 = y[i2], float(alpha[i2])
        r2 = float(E[i2]) * y2
        if not ((r2 < -tol and a2 < C) or (r2 > tol and a2 > 0)):
            return False
        non_bound = np.flatnonzero((alpha > 0) & (alpha < C))
        if len(non_bound) > 1:
            i1 = int(non_bound[np.argmax(np.abs(E[non_bound] - E[i2]))])
            if take_step(i1, i2):
                return True
        # deterministic sweep positions instead of Platt's random start
        for pool in (non_bound, np.arange(n)):
            m = len(pool)
            if m == 0:
                continue
            offset = int(np.searchsorted(pool, (i2 + 1) % n))
            for k in range(m):
                if take_step(int(pool[(offset + k) % m]), i2):
                    return True
        return False

    examine_all = True
    num_changed = 1
    while (num_changed > 0 or examine_all) and steps < max_steps:
        num_changed = 0
        targets = range(n) if examine_all else np.flatnonzero((alpha > 0) & (alpha < C))
        for i2 in targets:
            num_changed += examine(int(i2))
            if steps >= max_steps:
                break
        if objective is not None:
            ayk = (alpha * y) @ K
            objective.append(float(alpha.sum() - 0.5 * np.dot(ayk, alpha * y)))
        if examine_all:
            examine_all = False
        elif num_changed == 0:
            examine_all = True

    f = (alpha * y) @ K + b
    residual = _kkt_residual(alpha, y, f, C)

    sv_mask = alpha > EPS
    model = SvmModel(
        kernel=kernel,
        C=C,
        gamma=gamma,
        support_vectors=X[sv_mask],
        dual_coef=(alpha * y)[sv_mask],
        bias=float(b),
        w=(alpha * y) @ X if kernel == "linear" else None,
        kkt_residual=float(residual),
        n_steps=steps,
        converged=steps < max_steps,
        objective_curve=objective,
    )
    return model


def _kkt_residual(alpha: np.ndarray, y: np.ndarray, f: np.ndarray, C: float) -> float:
    """Largest violation of the KKT optimality conditions in y*f units."""
    margin = y * f
    bound_eps = 1e-9 * max(1.0, C)
    lower = alpha <= bound_eps
    upper = alpha >= C - bound_eps
    interior = ~(lower | upper)
    viol = np.zeros_like(alpha)
    viol[lower] = np.maximum(0.0, 1.0 - margin[lower])
    viol[upper] = np.maximum(0.0, margin[upper] - 1.0)
    viol[interior] = np.abs(margin[interior] - 1.0)
    return float(viol.max()) if len(viol) else 0.0


def train_svm(
    X: np.ndarray,
    y: np.ndarray,
    kernel: str = "linear",
    C: float = 1.0,
    gamma: float | None = None,
    tol: float = 1e-3,
    standardize: bool = False,
    schema: str | None = None,
    max_steps: int = 200_000,
) -> SvmModel:
    """Train with optional per-column z-normalization (constants stored in
    the model so prediction sees the same transform)."""
    X = np.asarray(X, dtype=np.float64)
    mean = std = None
    if standardize:
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std = np.where(std > 0, std, 1.0)
        X = (X - mean) / std
    model = smo_train(X, y, kernel=kernel, C=C, gamma=gamma, tol=tol, max_steps=max_steps)
    model.norm_mean = mean
    model.norm_std = std
    model.schema = schema
    return model


def predict(model: SvmModel, X: np.ndarray, segment_ids: Sequence[str] | None = None) -> list[Decision]:
    """Signed-margin decisions; non-negative margin maps to the positive class."""
    margins = model.decision_function(X)
    ids = list(segment_ids) if segment_ids is not None else [str(i) for i in range(len(margins))]
    return [
        Decision(sid, POSITIVE if m >= 0 else NEGATIVE, float(m))
        for sid, m in zip(ids, margins)
    ]


def count_ua(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """Unweighted average recall over the classes present in y_true."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    recalls = []
    for cls in np.unique(y_true):
        mask = y_true == cls
        recalls.append(float(np.mean(y_pred[mask] == cls)))
    return float(np.mean(recalls))


def default_grid() -> list[float]:
    """Powers of 10 from 1e-5 to 10 (7 values)."""
    return [10.0**e for e in range(-5, 2)]


def grid_tune(
    train: tuple[np.ndarray, np.ndarray],
    dev: tuple[np.ndarray, np.ndarray],
    kernel: str = "linear",
    c_grid: Sequence[float] | None = None,
    g_grid: Sequence[float] | None = None,
    tol: float = 1e-3,
    standardize: bool = False,
    max_steps: int = 200_000,
) -> tuple[float, float | None, list[dict]]:
    """Pick (C, G) maximizing dev UA; ties resolve to smaller C then smaller G."""
    X, y = train
    Xd, yd = dev
    if len(np.unique(yd)) < 2:
        raise ValueError("development set must contain both classes")
    c_grid = sorted(c_grid if c_grid is not None else default_grid())
    if kernel == "gaussian":
        g_values: list[float | None] = sorted(g_grid if g_grid is not None else default_grid())
    else:
        g_values = [None]
    if not c_grid or not g_values:
        raise ValueError("grids must be non-empty")

    best: tuple[float, float | None] | None = None
    best_ua = -1.0
    results = []
    for C in c_grid:
        for G in g_values:
            model = train_svm(
                X, y, kernel=kernel, C=C, gamma=G, tol=tol,
                standardize=standardize, max_steps=max_steps,
            )
            margins = model.decision_function(Xd)
            pred = np.where(margins >= 0, 1.0, -1.0)
            ua = count_ua(yd, pred)
            results.append({"C": C, "G": G, "dev_ua": ua})
            if ua > best_ua:  # strict: first (smallest C, G) wins ties
                best_ua, best = ua, (C, G)
    assert best is not None
    return best[0], best[1], results


def retrain_on_train_plus_dev(
    train: tuple[np.ndarray, np.ndarray],
    dev: tuple[np.ndarray, np.ndarray],
    kernel: str,
    C: float,
    gamma: float | None = None,
    tol: float = 1e-3,
    standardize: bool = False,
    schema: str | None = None,
    max_steps: int = 200_000,
) -> SvmModel:
    """Final fit on the concatenated train+dev data with tuned parameters."""
    X = np.vstack([train[0], dev[0]])
    y = np.concatenate([train[1], dev[1]])
    return train_svm(
        X, y, kernel=kernel, C=C, gamma=gamma, tol=tol,
        standardize=standardize, schema=schema, max_steps=max_steps,
    )


def random_baseline(
    priors: dict[str, float],
    test_labels: Sequence[str],
    seed: int = 0,
    trials: int = 1000,
    durations: Sequence[float] | None = None,
) -> np.ndarray:
    """UA distribution of labels drawn i.i.d. from the prior distribution.

    With ``durations`` the recalls are duration-weighted, matching the
    segment-level scoring; otherwise they are plain counts.
    """
    labels = sorted(priors)
    p = np.asarray([priors[l] for l in labels], dtype=np.float64)
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("priors must sum to 1")
    refs = np.asarray(test_labels)
    n = len(refs)
    w = np.ones(n) if durations is None else np.asarray(durations, dtype=np.float64)
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(labels), size=(trials, n), p=p)
    pred = np.asarray(labels)[picks]

    classes = [c for c in np.unique(refs)]
    uas = np.zeros(trials)
    for cls in classes:
        mask = refs == cls
        denom = w[mask].sum()
        correct = (pred[:, mask] == cls) @ w[mask]
        uas += np.where(denom > 0, correct / denom, 0.0)
    return uas / len(classes)


def majority_vote(decisions: Sequence[Decision]) -> Decision:
    """Fuse one segment's decisions from T classifiers by vote count.

    Vote ties resolve to the side with the higher mean absolute margin
    (then lexicographically smallest label, for full determinism). The fused
    margin is the winners' mean absolute margin.
    """
    if not decisions:
        raise ValueError("no decisions to fuse")
    sid = decisions[0].segment_id
    if any(d.segment_id != sid for d in decisions):
        raise ValueError("decisions fuse per segment; mismatched segment ids")
    by_label: dict[str, list[float]] = {}
    for d in decisions:
        by_label.setdefault(d.label, []).append(abs(d.margin))
    ranked = sorted(
        by_label.items(),
        key=lambda kv: (-len(kv[1]), -float(np.mean(kv[1])), kv[0]),
    )
    label, margins = ranked[0]
    return Decision(sid, label, float(np.mean(margins)))


def majority_vote_batch(per_classifier: Sequence[Sequence[Decision]]) -> list[Decision]:
    """Fuse aligned decision lists from T classifiers."""
    lengths = {len(d) for d in per_classifier}
    if len(lengths) != 1:
        raise ValueError("classifiers produced differing decision counts")
    fused = []
    for group in zip(*per_classifier):
        fused.append(majority_vote(list(group)))
    return fused
