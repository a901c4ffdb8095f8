"""Pairwise linear ranking functions with [0,1] intensity calibration.

One model is trained per (emotion, level) pair from ordered pairs
(emotional sample should outrank a neutral sample) and similar pairs
(same-class samples should score alike). The primal objective

    L(w) = 0.5||w||^2
         + C_ordered * sum_O max(0, 1 - w.(x_hi - x_lo))^2
         + C_similar * sum_S (w.(x_i - x_j))^2

is minimized over standardized features by a deterministic full-batch
L-BFGS with backtracking line search. The bias term in the scoring rule
cancels in every pairwise difference and is absorbed by the min-max
calibration, so it is fixed at zero.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, ModelFileError, ModelVersionError

MODEL_FORMAT_VERSION = 1
LEVELS = ("utterance", "word", "phoneme")
DEFAULT_EMOTIONS = ("Angry", "Happy", "Sad", "Surprise")
DEFAULT_NEUTRAL_LABEL = "Neutral"
DEGENERATE_SPAN = 1e-9


@dataclass(frozen=True)
class Hyper:
    c_ordered: float = 0.1
    c_similar: float = 0.1
    tol: float = 1e-6
    max_iter: int = 500

    def __post_init__(self):
        if self.c_ordered <= 0:
            raise ValueError("c_ordered must be > 0")
        if self.c_similar < 0:
            raise ValueError("c_similar must be >= 0")


@dataclass(frozen=True)
class PairSet:
    """Training pairs over a shared feature matrix.

    ordered_pairs (hi, lo): sample hi should outrank sample lo.
    similar_pairs (i, j): samples should score approximately equal.
    """

    features: np.ndarray
    ordered_pairs: tuple[tuple[int, int], ...]
    similar_pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        features.setflags(write=False)
        object.__setattr__(self, "features", features)
        n = len(features)
        seen = set()
        for name, pairs in (("ordered", self.ordered_pairs), ("similar", self.similar_pairs)):
            for i, j in pairs:
                if not (0 <= i < n and 0 <= j < n):
                    raise ValueError(f"{name} pair ({i},{j}) out of range")
                if i == j:
                    raise ValueError(f"{name} pair ({i},{j}) is degenerate")
                key = frozenset((i, j))
                if name == "similar" and key in seen:
                    raise ValueError(f"pair ({i},{j}) in both ordered and similar sets")
                if name == "ordered":
                    seen.add(key)


@dataclass(frozen=True)
class RankingModel:
    emotion: str
    level: str
    w: np.ndarray
    feature_mean: np.ndarray
    feature_std: np.ndarray
    score_min: float
    score_max: float
    trained_on: str = ""
    b: float = 0.0
    converged: bool = True
    final_grad_norm: float = 0.0

    def __post_init__(self):
        for name in ("w", "feature_mean", "feature_std"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.level not in LEVELS:
            raise ValueError(f"level must be one of {LEVELS}")
        if np.any(self.feature_std <= 0):
            raise ValueError("feature_std must be strictly positive")

    @property
    def degenerate(self) -> bool:
        return self.score_max - self.score_min < DEGENERATE_SPAN

    def raw_score(self, x: np.ndarray) -> float:
        z = (np.asarray(x, dtype=np.float64) - self.feature_mean) / self.feature_std
        return float(self.w @ z + self.b)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RankingModel):
            return NotImplemented
        return (
            self.emotion == other.emotion
            and self.level == other.level
            and np.array_equal(self.w, other.w)
            and np.array_equal(self.feature_mean, other.feature_mean)
            and np.array_equal(self.feature_std, other.feature_std)
            and self.score_min == other.score_min
            and self.score_max == other.score_max
            and self.trained_on == other.trained_on
        )


def build_pairs(
    features: np.ndarray,
    labels: list[str],
    target_emotion: str,
    neutral_label: str = DEFAULT_NEUTRAL_LABEL,
    max_ordered: int | None = None,
    max_similar: int | None = None,
    seed: int = 0,
) -> PairSet:
    """Cross-class ordered pairs and within-class similar pairs, capped
    by uniform seeded subsampling."""
    features = np.asarray(features, dtype=np.float64)
    target_idx = [i for i, lab in enumerate(labels) if lab == target_emotion]
    neutral_idx = [i for i, lab in enumerate(labels) if lab == neutral_label]
    if not target_idx:
        raise InsufficientDataError(f"no samples labeled {target_emotion!r}")
    if not neutral_idx:
        raise InsufficientDataError(f"no samples labeled {neutral_label!r}")

    ordered = [(hi, lo) for hi in target_idx for lo in neutral_idx]
    similar = [
        (idx[a], idx[b])
        for idx in (target_idx, neutral_idx)
        for a in range(len(idx))
        for b in range(a + 1, len(idx))
    ]

    rng = np.random.default_rng(seed)
    if max_ordered is not None and len(ordered) > max_ordered:
        keep = rng.choice(len(ordered), size=max_ordered, replace=False)
        ordered = [ordered[k] for k in sorted(keep)]
    if max_similar is not None and len(similar) > max_similar:
        keep = rng.choice(len(similar), size=max_similar, replace=False)
        similar = [similar[k] for k in sorted(keep)]
    return PairSet(features, tuple(ordered), tuple(similar))


def standardize_stats(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-dimension mean/std; zero-variance dims get std 1."""
    mean = features.mean(axis=0)
    std = features.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return mean, std


def objective_and_grad(
    w: np.ndarray,
    d_ordered: np.ndarray,
    d_similar: np.ndarray,
    hyper: Hyper,
) -> tuple[float, np.ndarray]:
    """L(w) and its gradient over precomputed standardized difference rows."""
    value = 0.5 * float(w @ w)
    grad = w.copy()
    if len(d_ordered):
        margin = 1.0 - d_ordered @ w
        active = margin > 0
        value += hyper.c_ordered * float((margin[active] ** 2).sum())
        if np.any(active):
            grad -= 2.0 * hyper.c_ordered * (d_ordered[active].T @ margin[active])
    if len(d_similar):
        gap = d_similar @ w
        value += hyper.c_similar * float((gap**2).sum())
        grad += 2.0 * hyper.c_similar * (d_similar.T @ gap)
    return value, grad


def _lbfgs_minimize(d_ordered, d_similar, hyper: Hyper, dim: int):
    """Deterministic L-BFGS (memory 10) with Armijo backtracking.

    Every accepted step strictly decreases the objective; stops when the
    max-norm of the gradient falls under hyper.tol.
    """
    w = np.zeros(dim)
    value, grad = objective_and_grad(w, d_ordered, d_similar, hyper)
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    memory = 10

    for _ in range(hyper.max_iter):
        if np.max(np.abs(grad)) <= hyper.tol:
            return w, value, grad, True

        # two-loop recursion
        q = grad.copy()
        alphas = []
        for s, y in zip(reversed(s_hist), reversed(y_hist)):
            rho = 1.0 / float(y @ s)
            a = rho * float(s @ q)
            alphas.append((a, rho))
            q -= a * y
        if y_hist:
            y_last, s_last = y_hist[-1], s_hist[-1]
            q *= float(s_last @ y_last) / float(y_last @ y_last)
        for (a, rho), s, y in zip(reversed(alphas), s_hist, y_hist):
            beta = rho * float(y @ q)
            q += (a - beta) * s
        direction = -q
        descent = float(grad @ direction)
        if descent >= 0:  # fall back to steepest descent
            direction = -grad
            descent = -float(grad @ grad)

        # Armijo backtracking
        step = 1.0
        accepted = False
        for _ in range(60):
            w_new = w + step * direction
            value_new, grad_new = objective_and_grad(w_new, d_ordered, d_similar, hyper)
            if value_new <= value + 1e-4 * step * descent and value_new < value:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break

        s_vec = w_new - w
        y_vec = grad_new - grad
        if float(s_vec @ y_vec) > 1e-12:
            s_hist.append(s_vec)
            y_hist.append(y_vec)
            if len(s_hist) > memory:
                s_hist.pop(0)
                y_hist.pop(0)
        w, value, grad = w_new, value_new, grad_new

    return w, value, grad, bool(np.max(np.abs(grad)) <= hyper.tol)


def fingerprint(pairs: PairSet) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(pairs.features).tobytes())
    h.update(repr(pairs.ordered_pairs).encode())
    h.update(repr(pairs.similar_pairs).encode())
    return h.hexdigest()[:16]


def train(
    pairs: PairSet,
    hyper: Hyper = Hyper(),
    emotion: str = "",
    level: str = "utterance",
) -> RankingModel:
    """Fit the ranking weight vector and min-max calibration bounds.

    A model is returned even without convergence; check ``converged`` and
    ``final_grad_norm`` for the diagnostic.
    """
    features = pairs.features
    mean, std = standardize_stats(features)
    z = (features - mean) / std

    d_ordered = (
        np.array([z[hi] - z[lo] for hi, lo in pairs.ordered_pairs])
        if pairs.ordered_pairs else np.zeros((0, features.shape[1]))
    )
    d_similar = (
        np.array([z[i] - z[j] for i, j in pairs.similar_pairs])
        if pairs.similar_pairs else np.zeros((0, features.shape[1]))
    )

    w, _, grad, converged = _lbfgs_minimize(d_ordered, d_similar, hyper, features.shape[1])
    w = np.where(features.std(axis=0) > 0, w, 0.0)  # pin zero-variance dims

    raw = z @ w
    return RankingModel(
        emotion=emotion,
        level=level,
        w=w,
        feature_mean=mean,
        feature_std=std,
        score_min=float(raw.min()),
        score_max=float(raw.max()),
        trained_on=fingerprint(pairs),
        converged=converged,
        final_grad_norm=float(np.max(np.abs(grad))),
    )


def pair_diffs(model: RankingModel, pairs: PairSet) -> tuple[np.ndarray, np.ndarray]:
    """Standardized (hi - lo) and (i - j) difference rows under the model's
    normalization."""
    z = (pairs.features - model.feature_mean) / model.feature_std
    dim = pairs.features.shape[1]
    d_ordered = (
        np.array([z[hi] - z[lo] for hi, lo in pairs.ordered_pairs])
        if pairs.ordered_pairs else np.zeros((0, dim))
    )
    d_similar = (
        np.array([z[i] - z[j] for i, j in pairs.similar_pairs])
        if pairs.similar_pairs else np.zeros((0, dim))
    )
    return d_ordered, d_similar


def objective_of(model: RankingModel, pairs: PairSet, hyper: Hyper = Hyper()) -> float:
    """L(w) evaluated at the trained weights, for reporting."""
    d_ordered, d_similar = pair_diffs(model, pairs)
    value, _ = objective_and_grad(model.w, d_ordered, d_similar, hyper)
    return value


def score(model: RankingModel, x: np.ndarray) -> float:
    """Calibrated emotion intensity in [0, 1]; larger means stronger."""
    if model.degenerate:
        return 0.5
    raw = model.raw_score(x)
    return float(np.clip((raw - model.score_min) / (model.score_max - model.score_min), 0.0, 1.0))


def ordering_accuracy(model: RankingModel, pairs: PairSet) -> float:
    """Fraction of ordered pairs ranked correctly by raw scores."""
    if not pairs.ordered_pairs:
        return 1.0
    z = (pairs.features - model.feature_mean) / model.feature_std
    raw = z @ model.w
    good = sum(1 for hi, lo in pairs.ordered_pairs if raw[hi] > raw[lo])
    return good / len(pairs.ordered_pairs)


# persistence ----------------------------------------------------------------

def model_to_dict(model: RankingModel) -> dict:
    return {
        "version": MODEL_FORMAT_VERSION,
        "emotion": model.emotion,
        "level": model.level,
        "w": model.w.tolist(),
        "feature_mean": model.feature_mean.tolist(),
        "feature_std": model.feature_std.tolist(),
        "score_min": model.score_min,
        "score_max": model.score_max,
        "trained_on": model.trained_on,
    }


def save_model(model: RankingModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True, indent=1)
        fh.write("\n")


def model_from_dict(doc: dict) -> RankingModel:
    if not isinstance(doc, dict) or "version" not in doc:
        raise ModelFileError("not a ranking-model file (missing version)")
    if doc["version"] != MODEL_FORMAT_VERSION:
        raise ModelVersionError(
            f"unsupported model version {doc['version']!r}; "
            f"supported: [{MODEL_FORMAT_VERSION}]"
        )
    try:
        return RankingModel(
            emotion=doc["emotion"],
            level=doc["level"],
            w=np.array(doc["w"], dtype=np.float64),
            feature_mean=np.array(doc["feature_mean"], dtype=np.float64),
            feature_std=np.array(doc["feature_std"], dtype=np.float64),
            score_min=float(doc["score_min"]),
            score_max=float(doc["score_max"]),
            trained_on=doc.get("trained_on", ""),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFileError(f"corrupt model file: {e}") from e


def load_model(path) -> RankingModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ModelFileError(f"cannot read model file {path}: {e}") from e
    return model_from_dict(doc)
