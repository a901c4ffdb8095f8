"""Objective evaluation: prosody statistics, spectral/prosody distortion
metrics, and intensity-trend analysis over edit sweeps.

Metric conventions, pinned here because the cited definitions vary:
  MCD      per aligned frame pair (10/ln10) * sqrt(2 * sum_d (c_d - c'_d)^2)
           over cepstral coefficients 1..13, averaged over the alignment.
  DTW      steps {(1,0),(0,1),(1,1)}, Euclidean local cost, ties prefer
           the diagonal, then the (1,0) step.
  FD       RMS deviation of the DTW path from the diagonal, in frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import spearmanr

from . import features as feats
from .alignment import AlignmentHierarchy
from .audio import Waveform
from .errors import InvalidSegmentError

MCD_CONST = 10.0 / np.log(10.0)
PROSODY_FEATURES = (
    "duration_s",
    "pitch_mean_hz",
    "pitch_std_hz",
    "energy_mean_db",
    "energy_std_db",
)
CONDITIONS = ("U", "W", "P", "WP")
_FLAT_SLOPE = 1e-9


@dataclass(frozen=True)
class ProsodyStats:
    duration_s: float
    pitch_mean_hz: float
    pitch_std_hz: float
    energy_mean_db: float
    energy_std_db: float
    fully_unvoiced: bool = False

    def as_dict(self) -> dict:
        return {
            "duration_s": self.duration_s,
            "pitch_mean_hz": self.pitch_mean_hz,
            "pitch_std_hz": self.pitch_std_hz,
            "energy_mean_db": self.energy_mean_db,
            "energy_std_db": self.energy_std_db,
            "fully_unvoiced": self.fully_unvoiced,
        }


def prosody_stats(
    w: Waveform,
    h: AlignmentHierarchy | None = None,
    cfg: feats.FeatureConfig = feats.DEFAULT_CONFIG,
) -> ProsodyStats:
    """Pitch/energy statistics over the utterance (voiced frames only for
    pitch; zeros plus a flag when nothing is voiced)."""
    if h is not None:
        start, end = h.utterance.start_s, h.utterance.end_s
    else:
        start, end = 0.0, w.duration_s
    if end <= start:
        raise InvalidSegmentError("empty audio")
    tracks = feats.extract_llds(w, start, end, cfg)
    voiced = tracks["logF0"].voiced_mask
    energy = tracks["energy_db"].values
    if np.any(voiced):
        pitch = np.exp(tracks["logF0"].values[voiced])
        pitch_mean, pitch_std = float(np.mean(pitch)), float(np.std(pitch))
        unvoiced = False
    else:
        pitch_mean = pitch_std = 0.0
        unvoiced = True
    return ProsodyStats(
        duration_s=end - start,
        pitch_mean_hz=pitch_mean,
        pitch_std_hz=pitch_std,
        energy_mean_db=float(np.mean(energy)),
        energy_std_db=float(np.std(energy)),
        fully_unvoiced=unvoiced,
    )


# alignment + distortion -------------------------------------------------------

def dtw_align(a: np.ndarray, b: np.ndarray) -> list[tuple[int, int]]:
    """Minimum-cost monotone alignment path from (0,0) to (n-1,m-1)."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    n, m = a.shape[0], b.shape[0]
    if n == 0 or m == 0:
        raise InvalidSegmentError("dtw_align needs non-empty sequences")

    # local Euclidean cost matrix
    diff = a[:, None, :] - b[None, :, :]
    local = np.sqrt((diff**2).sum(axis=2))

    INF = np.inf
    acc = np.full((n, m), INF)
    acc[0, 0] = local[0, 0]
    for i in range(n):
        for j in range(m):
            if i == 0 and j == 0:
                continue
            best = INF
            if i > 0 and j > 0:
                best = acc[i - 1, j - 1]
            if i > 0 and acc[i - 1, j] < best:
                best = acc[i - 1, j]
            if j > 0 and acc[i, j - 1] < best:
                best = acc[i, j - 1]
            acc[i, j] = local[i, j] + best

    # backtrack; ties prefer diagonal, then advancing the first sequence
    path = [(n - 1, m - 1)]
    i, j = n - 1, m - 1
    while i > 0 or j > 0:
        candidates = []
        if i > 0 and j > 0:
            candidates.append((acc[i - 1, j - 1], 0, (i - 1, j - 1)))
        if i > 0:
            candidates.append((acc[i - 1, j], 1, (i - 1, j)))
        if j > 0:
            candidates.append((acc[i, j - 1], 2, (i, j - 1)))
        _, _, (i, j) = min(candidates, key=lambda c: (c[0], c[1]))
        path.append((i, j))
    path.reverse()
    return path


def path_cost(a: np.ndarray, b: np.ndarray, path) -> float:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    return float(sum(np.linalg.norm(a[i] - b[j]) for i, j in path))


def frame_disturbance(path) -> float:
    """RMS deviation of an alignment path from the diagonal, in frames."""
    if not len(path):
        raise InvalidSegmentError("empty path")
    dev = np.array([i - j for i, j in path], dtype=np.float64)
    return float(np.sqrt(np.mean(dev**2)))


def mcd(c_ref: np.ndarray, c_test: np.ndarray, use_dtw: bool = True) -> float:
    """Mel-cepstral distortion in dB over 13-dim cepstra (c1..c13)."""
    c_ref = np.atleast_2d(np.asarray(c_ref, dtype=np.float64))
    c_test = np.atleast_2d(np.asarray(c_test, dtype=np.float64))
    if c_ref.shape[0] == 0 or c_test.shape[0] == 0:
        raise InvalidSegmentError("mcd needs non-empty cepstra sequences")
    if use_dtw:
        pairs = dtw_align(c_ref, c_test)
    else:
        n = min(c_ref.shape[0], c_test.shape[0])
        pairs = [(i, i) for i in range(n)]
    per_frame = [
        MCD_CONST * np.sqrt(2.0 * ((c_ref[i] - c_test[j]) ** 2).sum())
        for i, j in pairs
    ]
    return float(np.mean(per_frame))


def mel_cepstra(w: Waveform, cfg: feats.FeatureConfig = feats.DEFAULT_CONFIG) -> np.ndarray:
    """Per-frame 13-dim cepstra (c1..c13) for a whole waveform."""
    tracks = feats.extract_llds(w, 0.0, w.duration_s, cfg)
    return np.stack([tracks[f"mfcc_{i}"].values for i in range(1, 14)], axis=1)


def pitch_energy_distortion(
    ref: Waveform,
    test: Waveform,
    cfg: feats.FeatureConfig = feats.DEFAULT_CONFIG,
) -> dict:
    """RMSE of pitch (jointly voiced frames) and energy over a cepstral
    DTW alignment. pitch_rmse_hz is None when no frame pair is jointly
    voiced."""
    ref_tracks = feats.extract_llds(ref, 0.0, ref.duration_s, cfg)
    test_tracks = feats.extract_llds(test, 0.0, test.duration_s, cfg)
    ref_cep = np.stack([ref_tracks[f"mfcc_{i}"].values for i in range(1, 14)], axis=1)
    test_cep = np.stack([test_tracks[f"mfcc_{i}"].values for i in range(1, 14)], axis=1)
    path = dtw_align(ref_cep, test_cep)

    ref_f0 = np.exp(ref_tracks["logF0"].values)
    test_f0 = np.exp(test_tracks["logF0"].values)
    ref_voiced = ref_tracks["logF0"].voiced_mask
    test_voiced = test_tracks["logF0"].voiced_mask

    pitch_sq, energy_sq = [], []
    for i, j in path:
        if ref_voiced[i] and test_voiced[j]:
            pitch_sq.append((ref_f0[i] - test_f0[j]) ** 2)
        energy_sq.append(
            (ref_tracks["energy_db"].values[i] - test_tracks["energy_db"].values[j]) ** 2
        )
    return {
        "pitch_rmse_hz": float(np.sqrt(np.mean(pitch_sq))) if pitch_sq else None,
        "energy_rmse_db": float(np.sqrt(np.mean(energy_sq))),
        "frame_disturbance": frame_disturbance(path),
    }


# trend analysis ---------------------------------------------------------------

@dataclass(frozen=True)
class TrendCell:
    emotion: str
    condition: str
    feature: str
    rho: float
    slope: float
    sign: str  # "positive" | "negative" | "flat"
    n: int
    expected_sign: str | None = None

    @property
    def matches_expected(self) -> bool | None:
        if self.expected_sign is None:
            return None
        return self.sign == self.expected_sign

    def as_dict(self) -> dict:
        return {
            "emotion": self.emotion,
            "condition": self.condition,
            "feature": self.feature,
            "rho": self.rho,
            "slope": self.slope,
            "sign": self.sign,
            "n": self.n,
            "expected_sign": self.expected_sign,
            "matches_expected": self.matches_expected,
        }


@dataclass(frozen=True)
class TrendReport:
    cells: tuple[TrendCell, ...]
    skipped: tuple[dict, ...] = ()

    def grid(self) -> dict:
        """Nested {feature: {emotion: {condition: cell}}} view."""
        out: dict = {}
        for cell in self.cells:
            out.setdefault(cell.feature, {}).setdefault(cell.emotion, {})[
                cell.condition
            ] = cell
        return out

    def as_dict(self) -> dict:
        return {
            "cells": [c.as_dict() for c in self.cells],
            "skipped": list(self.skipped),
        }


def _rho(x: np.ndarray, y: np.ndarray) -> float:
    if len(set(x.tolist())) < 2 or len(set(y.tolist())) < 2:
        return 0.0
    rho = spearmanr(x, y).statistic
    return float(rho) if np.isfinite(rho) else 0.0


def _sign_of(slope: float) -> str:
    if abs(slope) <= _FLAT_SLOPE:
        return "flat"
    return "positive" if slope > 0 else "negative"


def trend_analysis(
    runs: list[dict],
    expected_signs: dict | None = None,
    min_intensities: int = 3,
) -> TrendReport:
    """Spearman correlation and fitted slope of each prosody feature
    against intensity, per (condition, emotion) cell.

    ``runs``: dicts with condition, emotion, intensity, and either the
    prosody feature values inline or a ProsodyStats under "stats". Cells
    with fewer than ``min_intensities`` distinct intensities are skipped
    and reported as such.
    """
    groups: dict[tuple[str, str], list[dict]] = {}
    for run in runs:
        if isinstance(run.get("stats"), ProsodyStats):
            run = {**run, **run["stats"].as_dict()}
        groups.setdefault((run["condition"], run["emotion"]), []).append(run)

    cells, skipped = [], []
    for (condition, emotion), rows in sorted(groups.items()):
        intensities = np.array([float(r["intensity"]) for r in rows])
        if len(set(intensities.tolist())) < min_intensities:
            skipped.append({
                "condition": condition,
                "emotion": emotion,
                "reason": f"fewer than {min_intensities} distinct intensities",
            })
            continue
        for feature in PROSODY_FEATURES:
            y = np.array([float(r[feature]) for r in rows])
            slope = _fit_slope(intensities, y)
            expected = None
            if expected_signs and emotion in expected_signs:
                expected = expected_signs[emotion].get(feature)
            cells.append(TrendCell(
                emotion=emotion,
                condition=condition,
                feature=feature,
                rho=_rho(intensities, y),
                slope=slope,
                sign=_sign_of(slope),
                n=len(rows),
                expected_sign=expected,
            ))
    return TrendReport(cells=tuple(cells), skipped=tuple(skipped))


def _fit_slope(x: np.ndarray, y: np.ndarray) -> float:
    xm, ym = x.mean(), y.mean()
    denom = ((x - xm) ** 2).sum()
    if denom <= 0:
        return 0.0
    return float(((x - xm) * (y - ym)).sum() / denom)
