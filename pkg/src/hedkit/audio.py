"""WAV decoding, resampling, and deterministic framing.

All analysis downstream runs at a fixed internal rate (16 kHz) with
25 ms / 10 ms Hann-windowed frames by default.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import resample_poly

from .errors import AudioParseError, InvalidSegmentError, UnsupportedFormatError

ANALYSIS_RATE = 16000
DEFAULT_FRAME_MS = 25.0
DEFAULT_HOP_MS = 10.0

_WAVE_FORMAT_PCM = 1
_WAVE_FORMAT_IEEE_FLOAT = 3


@dataclass(frozen=True)
class Waveform:
    """Mono audio in [-1, 1] at a known sample rate. Immutable."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        if samples.size and np.max(np.abs(samples)) > 1.0:
            raise ValueError("samples must lie in [-1, 1]")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate

    def __eq__(self, other) -> bool:
        if not isinstance(other, Waveform):
            return NotImplemented
        return self.sample_rate == other.sample_rate and np.array_equal(
            self.samples, other.samples
        )


@dataclass(frozen=True)
class FrameGrid:
    """Frame placement over a waveform: (start_sample, length) per frame.

    Starts may be negative and frames may overrun the signal; the overrun
    is zero-padded when samples are cut, never read out of bounds.
    """

    frame_length: int
    hop: int
    window: str = "hann"
    frames: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.window not in ("hann", "rectangular"):
            raise ValueError(f"unknown window {self.window!r}")

    def __len__(self) -> int:
        return len(self.frames)


def decode_wav(data: bytes) -> Waveform:
    """Decode a RIFF/WAVE buffer (PCM16 or float32, mono/stereo) to a Waveform.

    Stereo is averaged to mono; PCM16 samples are scaled by 1/32768.
    """
    if len(data) < 12:
        raise AudioParseError("buffer too short for RIFF header", 0)
    if data[0:4] != b"RIFF":
        raise AudioParseError("missing RIFF magic", 0)
    if data[8:12] != b"WAVE":
        raise AudioParseError("missing WAVE form type", 8)

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body_start = pos + 8
        if body_start + chunk_size > len(data):
            raise AudioParseError(f"chunk {chunk_id!r} overruns buffer", pos)
        if chunk_id == b"fmt ":
            if chunk_size < 16:
                raise AudioParseError("fmt chunk too short", pos)
            fmt = struct.unpack_from("<HHIIHH", data, body_start)
        elif chunk_id == b"data":
            payload = data[body_start:body_start + chunk_size]
        pos = body_start + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None:
        raise AudioParseError("no fmt chunk found", pos)
    if payload is None:
        raise AudioParseError("no data chunk found", pos)

    audio_format, n_channels, sample_rate, _, _, bits = fmt
    if n_channels < 1:
        raise AudioParseError("zero channels", 12)
    if audio_format == _WAVE_FORMAT_PCM and bits == 16:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % 2], dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif audio_format == _WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % 4], dtype="<f4")
        samples = np.clip(raw.astype(np.float64), -1.0, 1.0)
    else:
        raise UnsupportedFormatError(
            f"unsupported codec: format tag {audio_format}, {bits}-bit "
            "(PCM16 and float32 are supported)"
        )

    if n_channels > 1:
        usable = len(samples) - len(samples) % n_channels
        samples = samples[:usable].reshape(-1, n_channels).mean(axis=1)
    return Waveform(samples=samples, sample_rate=int(sample_rate))


def encode_wav(w: Waveform) -> bytes:
    """Serialize a Waveform as a PCM16 RIFF/WAVE buffer."""
    pcm = np.clip(np.round(w.samples * 32768.0), -32768, 32767).astype("<i2")
    body = pcm.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(body), b"WAVE",
        b"fmt ", 16, _WAVE_FORMAT_PCM, 1, w.sample_rate,
        w.sample_rate * 2, 2, 16,
        b"data", len(body),
    )
    return header + body


def resample(w: Waveform, target_rate: int) -> Waveform:
    """Polyphase resampling; identity when rates already match."""
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == w.sample_rate:
        return w
    from math import gcd

    g = gcd(target_rate, w.sample_rate)
    out = resample_poly(w.samples, target_rate // g, w.sample_rate // g)
    return Waveform(samples=np.clip(out, -1.0, 1.0), sample_rate=target_rate)


def frame(
    w: Waveform,
    start_s: float,
    end_s: float,
    frame_ms: float = DEFAULT_FRAME_MS,
    hop_ms: float = DEFAULT_HOP_MS,
    window: str = "hann",
) -> tuple[FrameGrid, np.ndarray]:
    """Cut [start_s, end_s) of the waveform into frames.

    Returns the grid and a (n_frames, frame_length) sample matrix. Frames
    step by the hop; a segment shorter than one frame yields exactly one
    frame centered on it. Out-of-signal regions are zero-padded.
    """
    if not (np.isfinite(start_s) and np.isfinite(end_s)) or end_s <= start_s:
        raise InvalidSegmentError(f"invalid segment [{start_s}, {end_s}]")
    if start_s < 0 or end_s > w.duration_s + 1e-9:
        raise InvalidSegmentError(
            f"segment [{start_s}, {end_s}] outside waveform of {w.duration_s:.6f}s"
        )

    sr = w.sample_rate
    flen = max(1, int(round(frame_ms * sr / 1000.0)))
    hop = max(1, int(round(hop_ms * sr / 1000.0)))
    seg_start = int(round(start_s * sr))
    seg_len = int(round((end_s - start_s) * sr))

    if seg_len < flen:
        center = seg_start + seg_len // 2
        starts = [center - flen // 2]
    else:
        n = (seg_len - flen) // hop + 1
        starts = [seg_start + k * hop for k in range(n)]

    out = np.zeros((len(starts), flen), dtype=np.float64)
    n_total = len(w.samples)
    for i, s in enumerate(starts):
        lo = max(s, 0)
        hi = min(s + flen, n_total)
        if hi > lo:
            out[i, lo - s:hi - s] = w.samples[lo:hi]
    grid = FrameGrid(
        frame_length=flen,
        hop=hop,
        window=window,
        frames=tuple((s, flen) for s in starts),
    )
    return grid, out


def window_function(grid: FrameGrid) -> np.ndarray:
    """Analysis window matching the grid's window field."""
    if grid.window == "hann":
        return np.hanning(grid.frame_length)
    return np.ones(grid.frame_length)
