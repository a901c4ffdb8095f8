"""Per-segment acoustic features: 20 frame-level descriptor tracks
summarized by 4 functionals each, plus 8 temporal statistics = 88 dims.

Tracks: logF0, energy_db, zcr, spectral_centroid_hz, spectral_flux,
spectral_rolloff85_hz, voicing_prob, mfcc_1..mfcc_13.
Functionals: mean, stddev, p20, p80 (logF0 over voiced frames only).
Temporal: voiced_ratio, mean_voiced_run_s, mean_unvoiced_run_s,
energy_peaks_per_s, f0_slope_per_s, energy_slope_db_per_s,
delta_logF0_mean_abs, delta_energy_mean_abs_db.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dct

from . import audio
from .errors import InvalidSegmentError

ENERGY_FLOOR_DB = -100.0
_EPS = 1e-10

LLD_NAMES = (
    "logF0",
    "energy_db",
    "zcr",
    "spectral_centroid_hz",
    "spectral_flux",
    "spectral_rolloff85_hz",
    "voicing_prob",
) + tuple(f"mfcc_{i}" for i in range(1, 14))

FUNCTIONAL_NAMES = ("mean", "stddev", "p20", "p80")

TEMPORAL_NAMES = (
    "voiced_ratio",
    "mean_voiced_run_s",
    "mean_unvoiced_run_s",
    "energy_peaks_per_s",
    "f0_slope_per_s",
    "energy_slope_db_per_s",
    "delta_logF0_mean_abs",
    "delta_energy_mean_abs_db",
)

FEATURE_NAMES = tuple(
    f"{lld}_{fn}" for lld in LLD_NAMES for fn in FUNCTIONAL_NAMES
) + TEMPORAL_NAMES

N_DIMS = len(FEATURE_NAMES)
assert N_DIMS == 88


@dataclass(frozen=True)
class FeatureConfig:
    frame_ms: float = audio.DEFAULT_FRAME_MS
    hop_ms: float = audio.DEFAULT_HOP_MS
    window: str = "hann"
    f0_min_hz: float = 60.0
    f0_max_hz: float = 400.0
    voicing_threshold: float = 0.45
    n_mels: int = 26
    fft_size: int = 512
    mel_fmin_hz: float = 0.0
    mel_fmax_hz: float = 8000.0


DEFAULT_CONFIG = FeatureConfig()


@dataclass(frozen=True)
class LldTrack:
    name: str
    values: np.ndarray
    voiced_mask: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        mask = np.asarray(self.voiced_mask, dtype=bool)
        values.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "voiced_mask", mask)
        if values.shape != mask.shape:
            raise ValueError("values and voiced_mask must share shape")
        if values.size and not np.all(np.isfinite(values)):
            raise ValueError(f"track {self.name}: non-finite values")


@dataclass(frozen=True)
class FeatureVector:
    dims: np.ndarray

    def __post_init__(self):
        dims = np.asarray(self.dims, dtype=np.float64)
        dims.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        if dims.shape != (N_DIMS,):
            raise ValueError(f"expected {N_DIMS} dims, got {dims.shape}")
        if not np.all(np.isfinite(dims)):
            raise ValueError("feature vector has non-finite dims")

    def as_dict(self) -> dict:
        return dict(zip(FEATURE_NAMES, self.dims.tolist()))


def _mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def _mel_inv(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, fft_size: int, sr: int, fmin: float, fmax: float) -> np.ndarray:
    """Triangular mel filterbank over rfft bins, shape (n_mels, fft_size//2 + 1)."""
    fmax = min(fmax, sr / 2.0)
    mel_points = np.linspace(_mel(fmin), _mel(fmax), n_mels + 2)
    hz_points = _mel_inv(mel_points)
    bins = np.fft.rfftfreq(fft_size, d=1.0 / sr)
    fb = np.zeros((n_mels, len(bins)))
    for m in range(n_mels):
        lo, center, hi = hz_points[m], hz_points[m + 1], hz_points[m + 2]
        up = (bins - lo) / max(center - lo, _EPS)
        down = (hi - bins) / max(hi - center, _EPS)
        fb[m] = np.maximum(0.0, np.minimum(up, down))
    return fb


def _autocorr_f0(frames: np.ndarray, sr: int, cfg: FeatureConfig):
    """Normalized autocorrelation F0 with parabolic peak refinement.

    Returns (f0_hz, voicing_prob, voiced_mask) per frame; f0_hz is 0 where
    unvoiced.
    """
    n_frames, flen = frames.shape
    centered = frames - frames.mean(axis=1, keepdims=True)
    nfft = 1
    while nfft < 2 * flen:
        nfft *= 2
    spec = np.fft.rfft(centered, n=nfft, axis=1)
    acf = np.fft.irfft(spec.real**2 + spec.imag**2, n=nfft, axis=1)[:, :flen]
    r0 = acf[:, 0].copy()
    silent = r0 <= _EPS
    r0[silent] = 1.0
    norm = acf / r0[:, None]

    lag_min = max(2, int(np.floor(sr / cfg.f0_max_hz)))
    lag_max = min(flen - 2, int(np.ceil(sr / cfg.f0_min_hz)))
    if lag_max <= lag_min:
        zeros = np.zeros(n_frames)
        return zeros, zeros.copy(), np.zeros(n_frames, dtype=bool)

    search = norm[:, lag_min:lag_max + 1]
    best = np.argmax(search, axis=1) + lag_min
    peak = norm[np.arange(n_frames), best]

    # parabolic interpolation around the integer-lag peak
    left = norm[np.arange(n_frames), best - 1]
    right = norm[np.arange(n_frames), best + 1]
    denom = left - 2.0 * peak + right
    shift = np.divide(
        0.5 * (left - right),
        denom,
        out=np.zeros(n_frames),
        where=np.abs(denom) > _EPS,
    )
    shift = np.clip(shift, -0.5, 0.5)
    lag = best + shift

    voicing_prob = np.clip(peak, 0.0, 1.0)
    voicing_prob[silent] = 0.0
    voiced = (voicing_prob >= cfg.voicing_threshold) & ~silent
    f0 = np.where(voiced, sr / lag, 0.0)
    f0 = np.clip(f0, 0.0, cfg.f0_max_hz * 1.5)
    return f0, voicing_prob, voiced


def extract_llds(
    w: audio.Waveform,
    start_s: float,
    end_s: float,
    cfg: FeatureConfig = DEFAULT_CONFIG,
) -> dict[str, LldTrack]:
    """Compute all 20 descriptor tracks for one segment of the waveform."""
    if w.sample_rate != audio.ANALYSIS_RATE:
        # callers should resample once up front; this guard keeps a stray
        # high-rate waveform from silently truncating FFT frames
        w = audio.resample(w, audio.ANALYSIS_RATE)
    grid, frames = audio.frame(
        w, start_s, end_s, frame_ms=cfg.frame_ms, hop_ms=cfg.hop_ms, window=cfg.window
    )
    sr = w.sample_rate
    n_frames = len(grid)

    f0, voicing_prob, voiced = _autocorr_f0(frames, sr, cfg)
    logf0 = np.where(voiced, np.log(np.maximum(f0, _EPS)), 0.0)

    energy_db = 10.0 * np.log10(np.mean(frames**2, axis=1) + _EPS)
    energy_db = np.maximum(energy_db, ENERGY_FLOOR_DB)

    signs = np.sign(frames)
    zcr = np.mean(signs[:, 1:] != signs[:, :-1], axis=1) if frames.shape[1] > 1 \
        else np.zeros(n_frames)

    windowed = frames * audio.window_function(grid)[None, :]
    spec = np.abs(np.fft.rfft(windowed, n=cfg.fft_size, axis=1))
    freqs = np.fft.rfftfreq(cfg.fft_size, d=1.0 / sr)

    mag_sum = spec.sum(axis=1)
    centroid = np.where(mag_sum > _EPS, (spec * freqs[None, :]).sum(axis=1) / np.maximum(mag_sum, _EPS), 0.0)

    flux = np.zeros(n_frames)
    if n_frames > 1:
        flux[1:] = np.sqrt(((spec[1:] - spec[:-1]) ** 2).sum(axis=1))

    power = spec**2
    cum = np.cumsum(power, axis=1)
    total = cum[:, -1]
    rolloff = np.zeros(n_frames)
    live = total > _EPS
    if np.any(live):
        thresh = 0.85 * total[live, None]
        idx = np.argmax(cum[live] >= thresh, axis=1)
        rolloff[live] = freqs[idx]

    fb = mel_filterbank(cfg.n_mels, cfg.fft_size, sr, cfg.mel_fmin_hz, cfg.mel_fmax_hz)
    mel_energy = power @ fb.T
    log_mel = np.log(mel_energy + _EPS)
    cepstra = dct(log_mel, type=2, norm="ortho", axis=1)[:, 1:14]

    tracks = {
        "logF0": LldTrack("logF0", logf0, voiced),
        "energy_db": LldTrack("energy_db", energy_db, voiced),
        "zcr": LldTrack("zcr", zcr, voiced),
        "spectral_centroid_hz": LldTrack("spectral_centroid_hz", centroid, voiced),
        "spectral_flux": LldTrack("spectral_flux", flux, voiced),
        "spectral_rolloff85_hz": LldTrack("spectral_rolloff85_hz", rolloff, voiced),
        "voicing_prob": LldTrack("voicing_prob", voicing_prob, voiced),
    }
    for i in range(13):
        name = f"mfcc_{i + 1}"
        tracks[name] = LldTrack(name, cepstra[:, i], voiced)
    return tracks


def _run_lengths(mask: np.ndarray) -> list[int]:
    runs, count = [], 0
    for v in mask:
        if v:
            count += 1
        elif count:
            runs.append(count)
            count = 0
    if count:
        runs.append(count)
    return runs


def _slope(y: np.ndarray, x: np.ndarray) -> float:
    if len(y) < 2:
        return 0.0
    xm, ym = x.mean(), y.mean()
    denom = ((x - xm) ** 2).sum()
    if denom <= 0:
        return 0.0
    return float(((x - xm) * (y - ym)).sum() / denom)


def functionals(
    tracks: dict[str, LldTrack],
    hop_s: float = audio.DEFAULT_HOP_MS / 1000.0,
) -> FeatureVector:
    """Summarize descriptor tracks into the fixed 88-dim vector."""
    n_frames = len(tracks["energy_db"].values)
    if n_frames == 0:
        raise InvalidSegmentError("zero frames: cannot compute functionals")

    voiced = tracks["logF0"].voiced_mask
    times = np.arange(n_frames) * hop_s

    dims = []
    for name in LLD_NAMES:
        values = tracks[name].values
        if name == "logF0":
            values = values[voiced]
        if len(values) == 0:
            dims.extend([0.0, 0.0, 0.0, 0.0])
        else:
            dims.extend([
                float(np.mean(values)),
                float(np.std(values)),
                float(np.percentile(values, 20)),
                float(np.percentile(values, 80)),
            ])

    duration_s = max(n_frames * hop_s, _EPS)
    energy = tracks["energy_db"].values

    voiced_runs = _run_lengths(voiced)
    unvoiced_runs = _run_lengths(~voiced)
    peaks = 0
    if n_frames >= 3:
        inner = energy[1:-1]
        peaks = int(np.sum((inner > energy[:-2]) & (inner > energy[2:])))

    logf0 = tracks["logF0"].values
    voiced_pairs = voiced[1:] & voiced[:-1]
    delta_f0 = np.abs(np.diff(logf0))[voiced_pairs] if n_frames > 1 else np.array([])
    delta_energy = np.abs(np.diff(energy)) if n_frames > 1 else np.array([])

    dims.extend([
        float(np.mean(voiced)),
        float(np.mean(voiced_runs) * hop_s) if voiced_runs else 0.0,
        float(np.mean(unvoiced_runs) * hop_s) if unvoiced_runs else 0.0,
        peaks / duration_s,
        _slope(logf0[voiced], times[voiced]),
        _slope(energy, times),
        float(np.mean(delta_f0)) if len(delta_f0) else 0.0,
        float(np.mean(delta_energy)) if len(delta_energy) else 0.0,
    ])
    return FeatureVector(np.array(dims))


def extract_segment_features(
    w: audio.Waveform,
    start_s: float,
    end_s: float,
    cfg: FeatureConfig = DEFAULT_CONFIG,
) -> FeatureVector:
    """One-call extraction: descriptor tracks plus functionals."""
    tracks = extract_llds(w, start_s, end_s, cfg)
    return functionals(tracks, hop_s=cfg.hop_ms / 1000.0)
