"""Synthetic speech generator used by the test corpus and demos."""

import numpy as np

from hedkit import alignment, audio, evaluate, synth


def test_same_seed_same_output():
    w1, h1 = synth.synth_utterance("Angry", seed=42)
    w2, h2 = synth.synth_utterance("Angry", seed=42)
    assert w1 == w2
    assert h1 == h2


def test_different_seed_differs():
    w1, _ = synth.synth_utterance("Angry", seed=1)
    w2, _ = synth.synth_utterance("Angry", seed=2)
    assert not np.array_equal(w1.samples, w2.samples)


def test_hierarchy_covers_waveform():
    w, h = synth.synth_utterance("Sad", seed=5, n_words=3)
    assert len(h.words) == 3
    assert h.utterance.end_s == w.duration_s
    for p, wi in zip(h.phonemes, h.word_of_phoneme):
        assert h.words[wi].start_s <= p.start_s < p.end_s <= h.words[wi].end_s


def test_profiles_separate_prosody():
    angry = evaluate.prosody_stats(synth.synth_utterance("Angry", seed=8)[0])
    sad = evaluate.prosody_stats(synth.synth_utterance("Sad", seed=8)[0])
    assert angry.pitch_mean_hz > sad.pitch_mean_hz + 30.0
    assert angry.energy_mean_db > sad.energy_mean_db + 3.0


def test_intensity_blends_toward_neutral():
    lo = evaluate.prosody_stats(synth.synth_utterance("Angry", 0.0, seed=9)[0])
    hi = evaluate.prosody_stats(synth.synth_utterance("Angry", 1.0, seed=9)[0])
    neutral_f0 = synth.PROFILES["Neutral"].f0_hz
    angry_f0 = synth.PROFILES["Angry"].f0_hz
    assert abs(lo.pitch_mean_hz - neutral_f0) < abs(lo.pitch_mean_hz - angry_f0)
    assert abs(hi.pitch_mean_hz - angry_f0) < abs(hi.pitch_mean_hz - neutral_f0)


def test_write_corpus_layout(tmp_path):
    manifest = synth.write_corpus(tmp_path, per_class=2, seed=3)
    lines = manifest.read_text().splitlines()
    assert lines[0] == "wav,alignment,emotion,speaker"
    assert len(lines) == 1 + 2 * 5  # neutral + four emotions
    for line in lines[1:]:
        wav_name, ali_name, emotion, speaker = line.split(",")
        assert (tmp_path / wav_name).exists()
        assert (tmp_path / ali_name).exists()
        assert speaker in ("spk0", "spk1")
        h = alignment.parse_textgrid((tmp_path / ali_name).read_text())
        w = audio.decode_wav((tmp_path / wav_name).read_bytes())
        assert abs(h.utterance.end_s - w.duration_s) < 1e-3


def test_write_corpus_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    synth.write_corpus(a, per_class=1, seed=6)
    synth.write_corpus(b, per_class=1, seed=6)
    for path in sorted(a.iterdir()):
        assert (b / path.name).read_bytes() == path.read_bytes()


def test_write_corpus_json_alignments(tmp_path):
    manifest = synth.write_corpus(tmp_path, per_class=1, seed=2,
                                  alignment_format="json")
    row = manifest.read_text().splitlines()[1].split(",")
    assert row[1].endswith(".json")
    h = alignment.load_alignment((tmp_path / row[1]).read_text(),
                                 filename=row[1])
    assert len(h.phonemes) > 0


def test_trend_runs_move_with_the_table():
    signs = {"Sad": {"duration_s": "positive", "pitch_mean_hz": "negative",
                     "pitch_std_hz": "negative", "energy_mean_db": "negative",
                     "energy_std_db": "negative"}}
    runs = synth.synth_trend_runs(signs, conditions=("U",), seed=0)
    xs = [r["intensity"] for r in runs]
    dur = [r["duration_s"] for r in runs]
    pitch = [r["pitch_mean_hz"] for r in runs]
    assert np.corrcoef(xs, dur)[0, 1] > 0.9
    assert np.corrcoef(xs, pitch)[0, 1] < -0.9


def test_trend_runs_csv_round_trip(tmp_path):
    signs = {"Angry": {"duration_s": "negative"}}
    runs = synth.synth_trend_runs(signs, seed=1)
    path = tmp_path / "runs.csv"
    synth.write_trend_runs_csv(runs, path)
    lines = path.read_text().splitlines()
    assert lines[0].split(",")[:3] == ["condition", "emotion", "intensity"]
    assert len(lines) == 1 + len(runs)
