"""Distortion metrics and trend analysis.

DTW results are checked against exhaustive path enumeration on small
instances; closed-form spectral-distortion values are recomputed here from
the defining formula.
"""

import numpy as np
import pytest

from hedkit import audio, evaluate, synth
from hedkit.errors import InvalidSegmentError


def enumerate_paths(local):
    """All monotone paths (steps down/right/diagonal) with their cost and
    RMS diagonal deviation. Exponential; keep instances tiny."""
    n, m = local.shape
    results = []

    def walk(i, j, cost, devs):
        cost += local[i, j]
        devs = devs + [i - j]
        if i == n - 1 and j == m - 1:
            results.append((cost, float(np.sqrt(np.mean(np.square(devs))))))
            return
        if i + 1 < n and j + 1 < m:
            walk(i + 1, j + 1, cost, devs)
        if i + 1 < n:
            walk(i + 1, j, cost, devs)
        if j + 1 < m:
            walk(i, j + 1, cost, devs)

    walk(0, 0, 0.0, [])
    return results


def local_cost(a, b):
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt((diff**2).sum(axis=2))


def sine(freq, dur_s, sr=16000, amp=0.5):
    t = np.arange(int(dur_s * sr)) / sr
    return audio.Waveform(samples=amp * np.sin(2 * np.pi * freq * t), sample_rate=sr)


# dtw ---------------------------------------------------------------------------

def test_dtw_identity_is_diagonal():
    seq = np.arange(12.0).reshape(4, 3)
    path = evaluate.dtw_align(seq, seq)
    assert path == [(0, 0), (1, 1), (2, 2), (3, 3)]
    assert evaluate.frame_disturbance(path) == 0.0


def test_dtw_duplicated_frame_costs_nothing():
    a = np.array([[0.0], [1.0], [2.0]])
    b = np.array([[0.0], [1.0], [1.0], [2.0]])
    path = evaluate.dtw_align(a, b)
    assert evaluate.path_cost(a, b, path) == 0.0
    off_diagonal = sum(1 for (i, j) in path if i != j)
    assert off_diagonal == 2  # (1,2) and (2,3) after the duplicate


def test_dtw_matches_exhaustive_enumeration():
    rng = np.random.default_rng(5)
    for trial in range(12):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(2, 7))
        a = rng.normal(0, 1, (n, 2))
        b = rng.normal(0, 1, (m, 2))
        local = local_cost(a, b)
        best_cost, best_fd = min(enumerate_paths(local))
        path = evaluate.dtw_align(a, b)
        assert evaluate.path_cost(a, b, path) == pytest.approx(best_cost, abs=1e-9)
        assert evaluate.frame_disturbance(path) == pytest.approx(best_fd, abs=1e-9)


def test_dtw_tie_break_prefers_diagonal():
    z = np.zeros((3, 1))
    assert evaluate.dtw_align(z, z) == [(0, 0), (1, 1), (2, 2)]


def test_dtw_tie_break_then_first_sequence():
    path = evaluate.dtw_align(np.zeros((3, 1)), np.zeros((2, 1)))
    assert path == [(0, 0), (1, 0), (2, 1)]


def test_dtw_rejects_empty():
    with pytest.raises(InvalidSegmentError):
        evaluate.dtw_align(np.zeros((0, 2)), np.zeros((3, 2)))


def test_frame_disturbance_formula():
    assert evaluate.frame_disturbance([(0, 0), (1, 2), (2, 2)]) == pytest.approx(
        np.sqrt(1.0 / 3.0)
    )


# mcd ----------------------------------------------------------------------------

def test_mcd_identical_is_zero():
    c = np.random.default_rng(6).normal(0, 1, (20, 13))
    assert evaluate.mcd(c, c) == 0.0


def test_mcd_uniform_offset_closed_form():
    rng = np.random.default_rng(7)
    c = rng.normal(0, 1, (30, 13))
    shifted = c + 0.1
    expected = (10.0 / np.log(10.0)) * np.sqrt(2.0 * 13 * 0.1**2)
    assert evaluate.mcd(c, shifted, use_dtw=False) == pytest.approx(expected, abs=1e-9)
    assert expected == pytest.approx(2.2146, abs=1e-3)


def test_mcd_single_dim_offset():
    c = np.zeros((5, 13))
    d = c.copy()
    d[:, 4] = 0.5
    expected = (10.0 / np.log(10.0)) * np.sqrt(2.0) * 0.5
    assert evaluate.mcd(c, d, use_dtw=False) == pytest.approx(expected, abs=1e-12)


def test_mcd_no_dtw_truncates_to_shorter():
    a = np.zeros((4, 13))
    b = np.zeros((9, 13))
    b[4:] = 100.0  # only the overlapping prefix may count
    assert evaluate.mcd(a, b, use_dtw=False) == 0.0


def test_mcd_dtw_absorbs_duplicate_frames():
    rng = np.random.default_rng(8)
    c = rng.normal(0, 1, (10, 13))
    dup = np.insert(c, 5, c[5], axis=0)
    assert evaluate.mcd(c, dup) == pytest.approx(0.0, abs=1e-12)


# waveform-level metrics ------------------------------------------------------------

def test_mel_cepstra_shape():
    cep = evaluate.mel_cepstra(sine(200.0, 0.5))
    assert cep.shape == (48, 13)  # floor((8000 - 400) / 160) + 1


def test_pitch_energy_distortion_self_is_zero():
    w = sine(220.0, 0.5)
    out = evaluate.pitch_energy_distortion(w, w)
    assert out["pitch_rmse_hz"] == 0.0
    assert out["energy_rmse_db"] == 0.0
    assert out["frame_disturbance"] == 0.0


def test_pitch_rmse_none_without_joint_voicing():
    w = sine(220.0, 0.4)
    flat = audio.Waveform(samples=np.zeros(int(0.4 * 16000)), sample_rate=16000)
    out = evaluate.pitch_energy_distortion(flat, w)
    assert out["pitch_rmse_hz"] is None
    assert out["energy_rmse_db"] > 0.0


def test_energy_rmse_for_doubled_amplitude():
    quiet = sine(220.0, 1.0, amp=0.4)
    loud = sine(220.0, 1.0, amp=0.8)
    out = evaluate.pitch_energy_distortion(quiet, loud)
    # power ratio 4 => 10*log10(4) dB at every frame
    assert out["energy_rmse_db"] == pytest.approx(6.0206, abs=0.1)
    assert out["frame_disturbance"] == 0.0


def test_prosody_stats_sine():
    stats = evaluate.prosody_stats(sine(220.0, 0.5))
    assert stats.duration_s == pytest.approx(0.5)
    assert 215.0 <= stats.pitch_mean_hz <= 225.0
    assert not stats.fully_unvoiced


def test_prosody_stats_silence_flagged():
    w = audio.Waveform(samples=np.zeros(8000), sample_rate=16000)
    stats = evaluate.prosody_stats(w)
    assert stats.fully_unvoiced
    assert stats.pitch_mean_hz == 0.0
    assert stats.energy_mean_db == -100.0


def test_prosody_stats_respects_hierarchy_span():
    w, h = synth.synth_utterance("Happy", seed=30)
    stats = evaluate.prosody_stats(w, h)
    assert stats.duration_s == pytest.approx(h.utterance.duration_s)


# trends ------------------------------------------------------------------------------

def runs_for(feature_values, condition="U", emotion="Angry"):
    runs = []
    for intensity, value in feature_values:
        row = {
            "condition": condition, "emotion": emotion, "intensity": intensity,
            "duration_s": 1.0, "pitch_mean_hz": 100.0, "pitch_std_hz": 10.0,
            "energy_mean_db": -30.0, "energy_std_db": 5.0,
        }
        row["pitch_mean_hz"] = value
        runs.append(row)
    return runs


def cell_for(report, feature, condition="U", emotion="Angry"):
    return report.grid()[feature][emotion][condition]


def test_increasing_feature_gives_positive_monotone_cell():
    report = evaluate.trend_analysis(
        runs_for([(0.0, 100.0), (0.5, 120.0), (1.0, 140.0)])
    )
    cell = cell_for(report, "pitch_mean_hz")
    assert cell.rho == 1.0
    assert cell.sign == "positive"
    assert cell.slope == pytest.approx(40.0)


def test_nonlinear_monotone_still_rho_one():
    report = evaluate.trend_analysis(
        runs_for([(0.0, 100.0), (0.25, 101.0), (0.5, 140.0), (1.0, 400.0)])
    )
    assert cell_for(report, "pitch_mean_hz").rho == 1.0


def test_decreasing_feature_negative():
    report = evaluate.trend_analysis(
        runs_for([(0.0, 140.0), (0.5, 120.0), (1.0, 100.0)])
    )
    cell = cell_for(report, "pitch_mean_hz")
    assert cell.rho == -1.0
    assert cell.sign == "negative"


def test_constant_feature_flat():
    report = evaluate.trend_analysis(
        runs_for([(0.0, 100.0), (0.5, 100.0), (1.0, 100.0)])
    )
    cell = cell_for(report, "pitch_mean_hz")
    assert cell.rho == 0.0
    assert cell.sign == "flat"


def test_too_few_intensities_skipped():
    report = evaluate.trend_analysis(runs_for([(0.0, 100.0), (1.0, 140.0)]))
    assert report.cells == ()
    assert len(report.skipped) == 1
    assert report.skipped[0]["condition"] == "U"


def test_expected_sign_annotation():
    signs = {"Angry": {"pitch_mean_hz": "positive"}}
    report = evaluate.trend_analysis(
        runs_for([(0.0, 100.0), (0.5, 120.0), (1.0, 140.0)]), expected_signs=signs
    )
    cell = cell_for(report, "pitch_mean_hz")
    assert cell.expected_sign == "positive"
    assert cell.matches_expected is True
    other = cell_for(report, "duration_s")
    assert other.expected_sign is None and other.matches_expected is None


def test_stats_objects_accepted_in_runs():
    runs = [
        {"condition": "W", "emotion": "Sad", "intensity": i,
         "stats": evaluate.ProsodyStats(
             duration_s=1.0 + i, pitch_mean_hz=120.0, pitch_std_hz=10.0,
             energy_mean_db=-30.0, energy_std_db=5.0)}
        for i in (0.0, 0.5, 1.0)
    ]
    report = evaluate.trend_analysis(runs)
    assert cell_for(report, "duration_s", "W", "Sad").sign == "positive"


def test_synthetic_trend_runs_recover_the_sign_table():
    from hedkit.report import load_expected_signs

    signs = load_expected_signs()
    runs = synth.synth_trend_runs(signs, seed=3)
    report = evaluate.trend_analysis(runs, expected_signs=signs)
    assert len(report.cells) == 4 * 4 * 5  # emotions x conditions x features
    assert all(c.matches_expected for c in report.cells)
    assert all(abs(c.rho) >= 0.8 for c in report.cells)
