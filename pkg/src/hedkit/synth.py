"""Deterministic synthetic speech-like fixtures.

Generates harmonic "utterances" whose pitch, energy, and tempo move from a
neutral profile toward an emotion profile as intensity rises. The signals
are not speech, but they carry the signed prosody relationships the
evaluation machinery is supposed to detect, and they give the rankers
cleanly separable classes to learn.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import audio
from .alignment import AlignmentHierarchy, Segment

SAMPLE_RATE = audio.ANALYSIS_RATE

# per-emotion synthesis targets at full intensity; neutral is the origin
# that intensity 0 falls back to
@dataclass(frozen=True)
class VoiceProfile:
    f0_hz: float
    f0_jitter: float     # proportional vibrato depth
    amplitude: float     # peak amplitude of voiced phones
    tempo: float         # duration multiplier (>1 = slower)


PROFILES = {
    "Neutral": VoiceProfile(140.0, 0.010, 0.20, 1.00),
    "Angry": VoiceProfile(190.0, 0.030, 0.46, 0.82),
    "Happy": VoiceProfile(210.0, 0.040, 0.34, 0.90),
    "Sad": VoiceProfile(102.0, 0.006, 0.09, 1.35),
    "Surprise": VoiceProfile(235.0, 0.050, 0.30, 0.92),
}

_VOWELS = ("AA", "EH", "IY", "OW", "UW")
_VOICED_CONS = ("M", "N", "L")
_FRICATIVES = ("S", "SH", "F")
_LEXICON = ("ona", "tiva", "kel", "sora", "mani", "lupo", "rada", "bemi")


def _blend(emotion: str, intensity: float) -> VoiceProfile:
    base = PROFILES["Neutral"]
    target = PROFILES[emotion]
    t = float(np.clip(intensity, 0.0, 1.0))
    return VoiceProfile(
        f0_hz=base.f0_hz + t * (target.f0_hz - base.f0_hz),
        f0_jitter=base.f0_jitter + t * (target.f0_jitter - base.f0_jitter),
        amplitude=base.amplitude + t * (target.amplitude - base.amplitude),
        tempo=base.tempo + t * (target.tempo - base.tempo),
    )


def _envelope(n: int, sr: int) -> np.ndarray:
    ramp = min(max(int(0.01 * sr), 1), max(n // 4, 1))
    env = np.ones(n)
    fade = 0.5 * (1.0 - np.cos(np.linspace(0.0, np.pi, ramp)))
    env[:ramp] = fade
    env[n - ramp:] = fade[::-1]
    return env


def _voiced(rng, dur_s: float, f0: float, amp: float, jitter: float, sr: int) -> np.ndarray:
    n = max(int(round(dur_s * sr)), 8)
    t = np.arange(n) / sr
    glide = rng.uniform(-0.05, 0.05)
    vibrato = 1.0 + jitter * np.sin(2 * np.pi * 5.5 * t + rng.uniform(0, 2 * np.pi))
    f0_t = f0 * (1.0 + glide * t / max(dur_s, 1e-6)) * vibrato
    phase = 2.0 * np.pi * np.cumsum(f0_t) / sr
    x = np.zeros(n)
    for k, gain in enumerate((1.0, 0.55, 0.30, 0.15), start=1):
        x += gain * np.sin(k * phase + rng.uniform(0, 2 * np.pi))
    x += 0.01 * rng.standard_normal(n)
    peak = np.max(np.abs(x))
    return amp * _envelope(n, sr) * x / (peak + 1e-9)


def _fricative(rng, dur_s: float, amp: float, sr: int) -> np.ndarray:
    n = max(int(round(dur_s * sr)), 8)
    noise = rng.standard_normal(n)
    hissy = np.diff(noise, prepend=0.0)  # first difference = high-pass
    peak = np.max(np.abs(hissy))
    return 0.5 * amp * _envelope(n, sr) * hissy / (peak + 1e-9)


def synth_utterance(
    emotion: str,
    intensity: float = 1.0,
    seed: int | list[int] = 0,
    n_words: int | None = None,
    sr: int = SAMPLE_RATE,
) -> tuple[audio.Waveform, AlignmentHierarchy]:
    """One synthetic utterance with a matching word/phoneme hierarchy.

    The hierarchy excludes the leading/trailing silence and inter-word
    gaps; the waveform includes them.
    """
    if emotion not in PROFILES:
        raise ValueError(f"unknown emotion {emotion!r}; known: {sorted(PROFILES)}")
    rng = np.random.default_rng(seed)
    prof = _blend(emotion, intensity)
    if n_words is None:
        n_words = int(rng.integers(2, 5))

    pieces: list[np.ndarray] = []
    words: list[Segment] = []
    phones: list[Segment] = []
    word_of_phoneme: list[int] = []
    cursor = int(round(rng.uniform(0.08, 0.15) * sr))
    pieces.append(np.zeros(cursor))

    for wi in range(n_words):
        word_label = _LEXICON[int(rng.integers(0, len(_LEXICON)))]
        word_start = cursor
        n_phones = int(rng.integers(2, 5))
        for pi in range(n_phones):
            kind = rng.uniform()
            if kind < 0.62 or pi == n_phones - 1:
                label = _VOWELS[int(rng.integers(0, len(_VOWELS)))]
                dur = rng.uniform(0.07, 0.15) * prof.tempo
                f0 = prof.f0_hz * rng.normal(1.0, 0.015)
                amp = prof.amplitude * rng.normal(1.0, 0.05)
                seg = _voiced(rng, dur, f0, max(amp, 0.01), prof.f0_jitter, sr)
            elif kind < 0.84:
                label = _VOICED_CONS[int(rng.integers(0, len(_VOICED_CONS)))]
                dur = rng.uniform(0.04, 0.08) * prof.tempo
                f0 = prof.f0_hz * rng.normal(0.95, 0.015)
                seg = _voiced(rng, dur, f0, max(prof.amplitude * 0.55, 0.008),
                              prof.f0_jitter, sr)
            else:
                label = _FRICATIVES[int(rng.integers(0, len(_FRICATIVES)))]
                dur = rng.uniform(0.05, 0.10) * prof.tempo
                seg = _fricative(rng, dur, max(prof.amplitude, 0.01), sr)
            phones.append(Segment(label, cursor / sr, (cursor + len(seg)) / sr))
            word_of_phoneme.append(wi)
            pieces.append(seg)
            cursor += len(seg)
        words.append(Segment(word_label, word_start / sr, cursor / sr))
        gap = int(round(rng.uniform(0.03, 0.08) * sr))
        if wi < n_words - 1:
            pieces.append(np.zeros(gap))
            cursor += gap

    tail = int(round(rng.uniform(0.08, 0.15) * sr))
    pieces.append(np.zeros(tail))
    cursor += tail

    samples = np.clip(np.concatenate(pieces), -1.0, 1.0)
    w = audio.Waveform(samples=samples, sample_rate=sr)
    h = AlignmentHierarchy(
        utterance=Segment(" ".join(s.label for s in words), 0.0, cursor / sr),
        words=tuple(words),
        phonemes=tuple(phones),
        word_of_phoneme=tuple(word_of_phoneme),
    )
    return w, h


def to_textgrid(h: AlignmentHierarchy) -> str:
    """Long-form TextGrid with explicit silence gaps between words."""

    def tile(segments, x0, x1):
        out = []
        cursor = x0
        for s in segments:
            if s.start_s > cursor + 1e-9:
                out.append((cursor, s.start_s, ""))
            out.append((s.start_s, s.end_s, s.label))
            cursor = s.end_s
        if x1 > cursor + 1e-9:
            out.append((cursor, x1, ""))
        return out

    x0, x1 = h.utterance.start_s, h.utterance.end_s
    tiers = [("words", tile(h.words, x0, x1)), ("phones", tile(h.phonemes, x0, x1))]
    lines = [
        'File type = "ooTextFile"',
        'Object class = "TextGrid"',
        "",
        f"xmin = {x0!r}",
        f"xmax = {x1!r}",
        "tiers? <exists>",
        f"size = {len(tiers)}",
        "item []:",
    ]
    for ti, (name, intervals) in enumerate(tiers, start=1):
        lines += [
            f"    item [{ti}]:",
            '        class = "IntervalTier"',
            f'        name = "{name}"',
            f"        xmin = {x0!r}",
            f"        xmax = {x1!r}",
            f"        intervals: size = {len(intervals)}",
        ]
        for ii, (a, b, label) in enumerate(intervals, start=1):
            lines += [
                f"        intervals [{ii}]:",
                f"            xmin = {a!r}",
                f"            xmax = {b!r}",
                f'            text = "{label}"',
            ]
    return "\n".join(lines) + "\n"


def write_corpus(
    root: str | Path,
    per_class: int = 4,
    emotions: tuple[str, ...] = ("Angry", "Happy", "Sad", "Surprise"),
    neutral_label: str = "Neutral",
    seed: int = 0,
    alignment_format: str = "textgrid",
) -> Path:
    """Write WAVs + alignments + a `wav,alignment,emotion,speaker` manifest.

    Returns the manifest path. Fully determined by ``seed``.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rows = []
    classes = (neutral_label, *emotions)
    for ci, emotion in enumerate(classes):
        for k in range(per_class):
            w, h = synth_utterance(
                emotion,
                intensity=0.0 if emotion == neutral_label else 1.0,
                seed=[seed, ci, k],
            )
            stem = f"{emotion.lower()}_{k:02d}"
            wav_name = f"{stem}.wav"
            (root / wav_name).write_bytes(audio.encode_wav(w))
            if alignment_format == "textgrid":
                ali_name = f"{stem}.TextGrid"
                (root / ali_name).write_text(to_textgrid(h), encoding="utf-8")
            else:
                from .alignment import serialize_alignment_json

                ali_name = f"{stem}.json"
                (root / ali_name).write_text(
                    serialize_alignment_json(h) + "\n", encoding="utf-8"
                )
            rows.append((wav_name, ali_name, emotion, f"spk{k % 2}"))

    manifest = root / "manifest.csv"
    with open(manifest, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["wav", "alignment", "emotion", "speaker"])
        writer.writerows(rows)
    return manifest


def synth_trend_runs(
    expected_signs: dict,
    intensities=(0.0, 0.25, 0.5, 0.75, 1.0),
    conditions=("U", "W", "P", "WP"),
    noise: float = 0.01,
    seed: int = 0,
) -> list[dict]:
    """Prosody-statistic rows with known signed intensity relationships.

    For every (emotion, condition) cell and each feature in the
    expected-sign table, the value moves linearly in the tabled direction
    with a little seeded noise, so a correct trend analysis recovers every
    sign with |rho| near 1.
    """
    bases = {
        "duration_s": (1.5, 0.6),
        "pitch_mean_hz": (140.0, 60.0),
        "pitch_std_hz": (12.0, 8.0),
        "energy_mean_db": (-30.0, 10.0),
        "energy_std_db": (6.0, 3.0),
    }
    rng = np.random.default_rng(seed)
    runs = []
    for emotion in sorted(expected_signs):
        for condition in conditions:
            for intensity in intensities:
                row = {
                    "condition": condition,
                    "emotion": emotion,
                    "intensity": float(intensity),
                }
                for feature, (base, gain) in bases.items():
                    sign = expected_signs[emotion].get(feature, "positive")
                    direction = {"positive": 1.0, "negative": -1.0, "flat": 0.0}[sign]
                    wiggle = noise * gain * rng.standard_normal()
                    row[feature] = base + direction * gain * intensity + wiggle
                runs.append(row)
    return runs


def write_trend_runs_csv(runs: list[dict], path: str | Path) -> None:
    fields = [
        "condition", "emotion", "intensity",
        "duration_s", "pitch_mean_hz", "pitch_std_hz",
        "energy_mean_db", "energy_std_db",
    ]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for run in runs:
            writer.writerow({k: run[k] for k in fields})


def _main() -> None:
    # tiny helper for regenerating the bundled fixture corpus by hand
    import argparse

    ap = argparse.ArgumentParser(description="write a synthetic fixture corpus")
    ap.add_argument("root")
    ap.add_argument("--per-class", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    manifest = write_corpus(args.root, per_class=args.per_class, seed=args.seed)
    print(json.dumps({"manifest": str(manifest)}))


if __name__ == "__main__":
    _main()
