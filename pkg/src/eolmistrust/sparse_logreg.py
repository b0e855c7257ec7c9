"""L1-regularized logistic regression fitted by monotone accelerated proximal gradient.

The minimized objective is::

    sum_i s_i * log(1 + exp(-t_i * (x_i . w + b))) + (1 / C) * ||w||_1

with ``t_i = 2 * y_i - 1`` in {-1, +1}, per-sample weights ``s_i`` (all 1
unless class weighting is requested) and an unpenalized intercept ``b``.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .chart_features import FeatureMatrix

log = logging.getLogger(__name__)

DEFAULT_C = 1.0
DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 5000


class SingleClassError(ValueError):
    pass


def sigmoid(z):
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValueError("inputs must be finite")


def smooth_loss(w, b, X, y, sample_weight=None):
    """Weighted logistic loss and its gradient ``(value, grad_w, grad_b)``."""
    z = X @ w + b
    t = 2.0 * y - 1.0
    losses = np.logaddexp(0.0, -t * z)
    r = sigmoid(z) - y
    if sample_weight is not None:
        losses = losses * sample_weight
        r = r * sample_weight
    return float(losses.sum()), X.T @ r, float(r.sum())


def objective(w, b, X, y, C, sample_weight=None) -> float:
    w = np.asarray(w, dtype=float)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_finite(w, np.asarray(b, dtype=float), X, y)
    if not C > 0:
        raise ValueError("C must be positive")
    if X.shape != (len(y), len(w)):
        raise ValueError(f"shape mismatch: X {X.shape}, y {len(y)}, w {len(w)}")
    value, _, _ = smooth_loss(w, float(b), X, y, sample_weight)
    return value + np.abs(w).sum() / C


def soft_threshold(v, thresh):
    return np.sign(v) * np.maximum(np.abs(v) - thresh, 0.0)


def _class_weights(y, class_weight):
    if class_weight is None:
        return None
    n = len(y)
    n_pos = float(y.sum())
    if class_weight == "balanced":
        wpos, wneg = n / (2.0 * n_pos), n / (2.0 * (n - n_pos))
    else:
        wpos, wneg = float(class_weight.get(1, 1.0)), float(class_weight.get(0, 1.0))
    return np.where(y == 1, wpos, wneg)


def intercept_only(y, sample_weight=None) -> float:
    """Optimal intercept when all weights are zero: logit of the weighted positive rate."""
    sw = np.ones_like(y) if sample_weight is None else sample_weight
    p = float((sw * y).sum() / sw.sum())
    return math.log(p / (1.0 - p))


def lambda_max(X, y, sample_weight=None) -> float:
    """Smallest L1 penalty ``1/C`` at which every feature weight is zero."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    b = intercept_only(y, sample_weight)
    _, gw, _ = smooth_loss(np.zeros(X.shape[1]), b, X, y, sample_weight)
    return float(np.max(np.abs(gw))) if gw.size else 0.0


@dataclass(frozen=True, eq=False)
class MistrustModel:
    feature_names: tuple[str, ...]
    weights: np.ndarray
    intercept: float
    C: float
    iterations: int = 0
    objective: float = float("nan")
    converged: bool = True
    history: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if len(self.weights) != len(self.feature_names):
            raise ValueError("one weight per feature required")
        if not (np.all(np.isfinite(self.weights)) and math.isfinite(self.intercept)):
            raise ValueError("model parameters must be finite")

    def __eq__(self, other):
        if not isinstance(other, MistrustModel):
            return NotImplemented
        return (
            self.feature_names == other.feature_names
            and np.array_equal(self.weights, other.weights)
            and self.intercept == other.intercept
            and self.C == other.C
        )


def _as_arrays(X, y):
    if isinstance(X, FeatureMatrix):
        names = X.vocabulary.names
        if isinstance(y, Mapping):
            y = [y[aid] for aid in X.admission_ids]
        X = X.values
    else:
        names = None
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    return X, y, names


def fit(
    X: FeatureMatrix | np.ndarray,
    y: Mapping[str, bool] | Sequence,
    C: float = DEFAULT_C,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    class_weight: str | dict | None = None,
    fit_intercept: bool = True,
    feature_names: Sequence[str] | None = None,
) -> MistrustModel:
    """Fit the L1-regularized logistic model.

    Parameters
    ----------
    X : FeatureMatrix or array of shape (n, d)
    y : label mapping keyed by admission id (with a FeatureMatrix) or 0/1 array
    C : float
        Inverse regularization strength; the L1 penalty weight is ``1 / C``.
    tol : float
        Stop when an accepted step lowers the objective by at most
        ``tol * max(1, |objective|)``.
    max_iter : int
        Iteration cap; hitting it returns a model with ``converged=False``.
    class_weight : None, "balanced" or {0: w0, 1: w1}
    fit_intercept : bool
        With False the intercept is held at zero.

    Returns
    -------
    MistrustModel
        ``history`` holds the objective after every iteration and is
        non-increasing.
    """
    X, y, names = _as_arrays(X, y)
    if feature_names is not None:
        names = tuple(feature_names)
    if names is None:
        names = tuple(f"x{j}" for j in range(X.shape[1]))
    _check_finite(X, y)
    if not C > 0:
        raise ValueError("C must be positive")
    if X.ndim != 2 or X.shape[0] != len(y):
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0/1")
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == len(y):
        raise SingleClassError(
            f"labels contain a single class ({n_pos} positive of {len(y)}); "
            "need at least one positive and one negative"
        )

    sw = _class_weights(y, class_weight)
    alpha = 1.0 / C
    n, d = X.shape

    def F(w, b):
        v, _, _ = smooth_loss(w, b, X, y, sw)
        return v + alpha * np.abs(w).sum()

    w = np.zeros(d)
    b = intercept_only(y, sw) if fit_intercept else 0.0
    Fx = F(w, b)
    history = [Fx]

    # Lipschitz bound of the smooth gradient; backtracking starts well below it
    smax = 1.0 if sw is None else float(sw.max())
    Xa = np.hstack([X, np.ones((n, 1))]) if fit_intercept else X
    lip = 0.25 * smax * (np.linalg.norm(Xa, 2) ** 2 if Xa.size else 1.0)
    L = max(lip / 16.0, 1e-12)

    yw, yb = w.copy(), b
    t = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        fy, gw, gb = smooth_loss(yw, yb, X, y, sw)
        if not fit_intercept:
            gb = 0.0
        while True:
            zw = soft_threshold(yw - gw / L, alpha / L)
            zb = yb - gb / L
            dw, db = zw - yw, zb - yb
            fz, _, _ = smooth_loss(zw, zb, X, y, sw)
            quad = fy + gw @ dw + gb * db + 0.5 * L * (dw @ dw + db * db)
            if fz <= quad + 1e-12 * abs(fy):
                break
            L *= 2.0
        Fz = fz + alpha * np.abs(zw).sum()
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        accepted = Fz <= Fx
        if accepted:
            new_w, new_b, Fnew = zw, zb, Fz
        else:
            new_w, new_b, Fnew = w, b, Fx
        yw = new_w + (t / t_next) * (zw - new_w) + ((t - 1.0) / t_next) * (new_w - w)
        yb = new_b + (t / t_next) * (zb - new_b) + ((t - 1.0) / t_next) * (new_b - b)
        decrease = Fx - Fnew
        w, b, Fx, t = new_w, new_b, Fnew, t_next
        history.append(Fx)
        if accepted and decrease <= tol * max(1.0, abs(Fx)):
            converged = True
            break
        if not accepted:
            # restart momentum from the current iterate
            yw, yb, t = w.copy(), b, 1.0

    if not converged:
        log.warning("L1 logistic regression did not converge in %d iterations", max_iter)
    return MistrustModel(
        feature_names=tuple(names),
        weights=w,
        intercept=float(b),
        C=float(C),
        iterations=it,
        objective=float(Fx),
        converged=converged,
        history=tuple(history),
    )


def predict_proba(model: MistrustModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != model.weights.shape:
        raise ValueError(f"feature vector has length {x.size}, model expects {model.weights.size}")
    return float(sigmoid(model.weights @ x + model.intercept))


def score(model: MistrustModel, fm: FeatureMatrix) -> dict[str, float]:
    """Mistrust score of every row of ``fm``, keyed by admission id."""
    if fm.vocabulary.names != model.feature_names:
        raise ValueError("feature matrix vocabulary differs from the model's")
    p = sigmoid(fm.values.astype(float) @ model.weights + model.intercept)
    return {aid: float(v) for aid, v in zip(fm.admission_ids, p)}


def top_features(model: MistrustModel, k: int = 3) -> list[tuple[str, float]]:
    """The ``k`` most positive and ``k`` most negative weights, by descending weight.

    Ties are broken by feature name; the negative picks never repeat a
    positive pick.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    pairs = list(zip(model.feature_names, (float(v) for v in model.weights)))
    pos = sorted(pairs, key=lambda p: (-p[1], p[0]))[:k]
    chosen = {p[0] for p in pos}
    neg = [p for p in sorted(pairs, key=lambda p: (p[1], p[0])) if p[0] not in chosen][:k]
    return sorted(pos + neg, key=lambda p: (-p[1], p[0]))


def write_model(model: MistrustModel, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("feature_name", "weight"))
        w.writerow(("__intercept__", repr(model.intercept)))
        w.writerow(("__C__", repr(model.C)))
        w.writerow(("__iterations__", model.iterations))
        w.writerow(("__objective__", repr(float(model.objective))))
        w.writerow(("__converged__", int(model.converged)))
        for name, v in zip(model.feature_names, model.weights):
            w.writerow((name, repr(float(v))))


def read_model(path: str | os.PathLike) -> MistrustModel:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["feature_name", "weight"]:
        raise ValueError(f"{path}: not a model file")
    meta = {}
    names, weights = [], []
    for name, value in rows[1:]:
        if name.startswith("__") and name.endswith("__"):
            meta[name] = float(value)
        else:
            names.append(name)
            weights.append(float(value))
    return MistrustModel(
        feature_names=tuple(names),
        weights=np.array(weights, dtype=float),
        intercept=meta["__intercept__"],
        C=meta["__C__"],
        iterations=int(meta.get("__iterations__", 0)),
        objective=meta.get("__objective__", float("nan")),
        converged=bool(meta.get("__converged__", 1)),
    )
