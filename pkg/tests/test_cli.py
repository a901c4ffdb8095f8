"""Command-line interface: every subcommand, error JSON, reproducibility."""

import json

import numpy as np
import pytest

from hedkit import alignment, cli, editor, features, hed, synth
from hedkit.report import load_expected_signs


def run(capsys, argv):
    rc = cli.main(argv)
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def first_utterance(corpus_dir):
    lines = (corpus_dir / "manifest.csv").read_text().splitlines()[1:]
    wav, ali, _, _ = lines[0].split(",")
    return corpus_dir / wav, corpus_dir / ali


# train ---------------------------------------------------------------------------

def test_train_outputs(models_dir):
    names = {p.name for p in models_dir.iterdir()}
    assert "bank.json" in names
    assert "training_report.json" in names
    assert len([n for n in names if "__" in n]) == 12  # 4 emotions x 3 levels
    doc = json.loads((models_dir / "training_report.json").read_text())
    assert doc["seed"] == 7
    assert set(doc["models"]) == {"Angry", "Happy", "Sad", "Surprise"}
    for per_level in doc["models"].values():
        for lvl in ("utterance", "word", "phoneme"):
            entry = per_level[lvl]
            assert entry["ordered_pairs"] > 0
            assert 0.0 <= entry["ordering_accuracy"] <= 1.0


def test_train_without_neutral_exits_2(tmp_path, capsys, corpus_dir):
    manifest = tmp_path / "manifest.csv"
    rows = (corpus_dir / "manifest.csv").read_text().splitlines()
    kept = [rows[0]] + [r for r in rows[1:] if ",Neutral," not in r]
    manifest.write_text("\n".join(kept) + "\n")
    rc, out, err = run(capsys, [
        "train", "--manifest", str(manifest), "--models", str(tmp_path / "m"),
    ])
    assert rc == 2
    doc = json.loads(err)
    assert doc["error"]["code"] == "insufficient-data"
    assert "Neutral" in doc["error"]["message"]


def test_train_missing_manifest_column(tmp_path, capsys):
    manifest = tmp_path / "bad.csv"
    manifest.write_text("wav,emotion\nx.wav,Angry\n")
    rc, _, err = run(capsys, [
        "train", "--manifest", str(manifest), "--models", str(tmp_path / "m"),
    ])
    assert rc == 2
    assert "alignment" in json.loads(err)["error"]["message"]


# extract -------------------------------------------------------------------------

def test_extract_csv_to_stdout(capsys, corpus_dir, models_dir):
    wav, ali = first_utterance(corpus_dir)
    rc, out, _ = run(capsys, [
        "extract", "--wav", str(wav), "--alignment", str(ali),
        "--models", str(models_dir),
    ])
    assert rc == 0
    m = hed.parse_hed_csv(out)
    h = alignment.load_alignment(ali.read_text(), filename=str(ali))
    assert m.n_phonemes == len(h.phonemes)
    assert m.emotions == ("Angry", "Happy", "Sad", "Surprise")


def test_extract_json_format(tmp_path, capsys, corpus_dir, models_dir):
    wav, ali = first_utterance(corpus_dir)
    out_path = tmp_path / "m.json"
    rc, _, _ = run(capsys, [
        "extract", "--wav", str(wav), "--alignment", str(ali),
        "--models", str(models_dir), "--format", "json",
        "--out", str(out_path),
    ])
    assert rc == 0
    m = hed.parse_hed_json(out_path.read_text())
    assert m.rows.shape[1] == 12


def test_extract_models_env_var(capsys, corpus_dir, models_dir, monkeypatch):
    wav, ali = first_utterance(corpus_dir)
    monkeypatch.setenv(cli.MODELS_ENV, str(models_dir))
    rc, out, _ = run(capsys, ["extract", "--wav", str(wav), "--alignment", str(ali)])
    assert rc == 0
    assert out.startswith("phoneme,word_index,")


def test_extract_without_models_exits_2(capsys, corpus_dir, monkeypatch):
    wav, ali = first_utterance(corpus_dir)
    monkeypatch.delenv(cli.MODELS_ENV, raising=False)
    rc, _, err = run(capsys, ["extract", "--wav", str(wav), "--alignment", str(ali)])
    assert rc == 2
    assert cli.MODELS_ENV in json.loads(err)["error"]["message"]


def test_extract_is_byte_reproducible(capsys, corpus_dir, models_dir):
    wav, ali = first_utterance(corpus_dir)
    argv = ["extract", "--wav", str(wav), "--alignment", str(ali),
            "--models", str(models_dir)]
    _, out1, _ = run(capsys, argv)
    _, out2, _ = run(capsys, argv)
    assert out1 == out2


# edit / sweep ----------------------------------------------------------------------

@pytest.fixture
def extracted_csv(tmp_path_factory, corpus_dir, models_dir, capsys):
    wav, ali = first_utterance(corpus_dir)
    path = tmp_path_factory.mktemp("hed") / "m.csv"
    rc, _, _ = run(capsys, [
        "extract", "--wav", str(wav), "--alignment", str(ali),
        "--models", str(models_dir), "--out", str(path),
    ])
    assert rc == 0
    return path


def test_edit_applies_script(tmp_path, capsys, extracted_csv):
    script = tmp_path / "script.json"
    script.write_text(editor.EditScript(ops=(
        editor.EditOp("utterance", "all", "Happy", "set", 1.0),
    )).to_json())
    rc, out, _ = run(capsys, [
        "edit", "--in", str(extracted_csv), "--script", str(script),
    ])
    assert rc == 0
    m = hed.parse_hed_csv(out)  # output mirrors the input form
    col = m.emotions.index("Happy")
    assert np.all(m.block("utterance")[:, col] == 1.0)


def test_edit_format_override(tmp_path, capsys, extracted_csv):
    script = tmp_path / "script.json"
    script.write_text(editor.EditScript().to_json())
    rc, out, _ = run(capsys, [
        "edit", "--in", str(extracted_csv), "--script", str(script),
        "--format", "json",
    ])
    assert rc == 0
    assert hed.parse_hed_json(out) == hed.parse_hed_csv(extracted_csv.read_text())


def test_edit_unknown_emotion_exits_2(tmp_path, capsys, extracted_csv):
    script = tmp_path / "script.json"
    script.write_text(editor.EditScript(ops=(
        editor.EditOp("word", 0, "Bored", "set", 0.5),
    )).to_json())
    rc, _, err = run(capsys, [
        "edit", "--in", str(extracted_csv), "--script", str(script),
    ])
    assert rc == 2
    doc = json.loads(err)
    assert doc["error"]["code"] == "unknown-emotion"
    assert "Bored" in doc["error"]["message"]


def test_sweep_writes_one_file_per_value(tmp_path, capsys, extracted_csv):
    out_dir = tmp_path / "sweeps"
    rc, out, _ = run(capsys, [
        "sweep", "--in", str(extracted_csv), "--level", "word",
        "--selector", "0", "--emotion", "Angry", "--values", "0,0.5,1",
        "--out-dir", str(out_dir),
    ])
    assert rc == 0
    summary = json.loads(out)
    assert len(summary["files"]) == 3
    base = hed.parse_hed_csv(extracted_csv.read_text())
    col = base.k + base.emotions.index("Angry")
    sel = [i for i, wi in enumerate(base.word_of_phoneme) if wi == 0]
    for name, value in zip(summary["files"], (0.0, 0.5, 1.0)):
        m = hed.parse_hed_csv((out_dir / name).read_text())
        assert np.all(m.rows[sel, col] == value)


def test_sweep_wp_level(tmp_path, capsys, extracted_csv):
    out_dir = tmp_path / "wp"
    rc, out, _ = run(capsys, [
        "sweep", "--in", str(extracted_csv), "--level", "wp",
        "--selector", "0", "--emotion", "Sad", "--values", "1",
        "--out-dir", str(out_dir),
    ])
    assert rc == 0
    (name,) = json.loads(out)["files"]
    m = hed.parse_hed_csv((out_dir / name).read_text())
    sel = [i for i, wi in enumerate(m.word_of_phoneme) if wi == 0]
    c = m.emotions.index("Sad")
    assert np.all(m.rows[sel, m.k + c] == 1.0)
    assert np.all(m.rows[sel, 2 * m.k + c] == 1.0)


# eval ----------------------------------------------------------------------------

def test_eval_metrics_self_comparison(capsys, corpus_dir):
    wav, _ = first_utterance(corpus_dir)
    rc, out, _ = run(capsys, [
        "eval", "metrics", "--ref", str(wav), "--test", str(wav),
    ])
    assert rc == 0
    doc = json.loads(out)
    assert doc["mcd_db"] == 0.0
    assert doc["pitch_rmse_hz"] == 0.0
    assert doc["energy_rmse_db"] == 0.0
    assert doc["frame_disturbance"] == 0.0
    assert doc["use_dtw"] is True
    assert doc["ref_frames"] == doc["test_frames"] > 0


def test_eval_metrics_no_dtw_flag(capsys, corpus_dir):
    wav, _ = first_utterance(corpus_dir)
    rc, out, _ = run(capsys, [
        "eval", "metrics", "--ref", str(wav), "--test", str(wav), "--no-dtw",
    ])
    assert json.loads(out)["use_dtw"] is False


def test_eval_trends_full_pipeline(tmp_path, capsys):
    runs_path = tmp_path / "runs.csv"
    synth.write_trend_runs_csv(
        synth.synth_trend_runs(load_expected_signs(), seed=2), runs_path
    )
    out_json = tmp_path / "trend.json"
    out_csv = tmp_path / "trend.csv"
    out_png = tmp_path / "trend.png"
    rc, _, _ = run(capsys, [
        "eval", "trends", "--runs", str(runs_path),
        "--out", str(out_json), "--csv", str(out_csv), "--png", str(out_png),
    ])
    assert rc == 0
    doc = json.loads(out_json.read_text())
    assert len(doc["cells"]) == 80
    assert all(c["matches_expected"] for c in doc["cells"])
    assert out_csv.read_text().startswith("emotion,feature,expected_sign")
    assert out_png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_eval_trends_bad_csv_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("condition,emotion\nU,Angry\n")
    rc, _, err = run(capsys, ["eval", "trends", "--runs", str(bad)])
    assert rc == 2
    assert "missing columns" in json.loads(err)["error"]["message"]


# features dump ----------------------------------------------------------------------

def test_features_dump_whole_file(capsys, corpus_dir):
    wav, _ = first_utterance(corpus_dir)
    rc, out, _ = run(capsys, ["features", "dump", "--wav", str(wav)])
    assert rc == 0
    lines = out.splitlines()
    header = lines[0].split(",")
    assert header[:4] == ["level", "label", "start_s", "end_s"]
    assert tuple(header[4:]) == features.FEATURE_NAMES
    assert len(lines) == 2
    assert lines[1].startswith("utterance,")


def test_features_dump_with_alignment(capsys, corpus_dir):
    wav, ali = first_utterance(corpus_dir)
    h = alignment.load_alignment(ali.read_text(), filename=str(ali))
    rc, out, _ = run(capsys, [
        "features", "dump", "--wav", str(wav), "--alignment", str(ali),
    ])
    lines = out.splitlines()
    assert len(lines) == 1 + 1 + len(h.words) + len(h.phonemes)
    levels = [line.split(",")[0] for line in lines[1:]]
    assert levels.count("utterance") == 1
    assert levels.count("word") == len(h.words)
    assert levels.count("phoneme") == len(h.phonemes)
    row = lines[1].split(",")
    assert len(row) == 4 + 88
    float(row[10])  # numeric payload


# plumbing -----------------------------------------------------------------------------

def test_missing_file_is_io_error(capsys, models_dir):
    rc, _, err = run(capsys, [
        "extract", "--wav", "/nonexistent.wav", "--alignment", "/nonexistent.TextGrid",
        "--models", str(models_dir),
    ])
    assert rc == 2
    assert json.loads(err)["error"]["code"] == "io_error"


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--help"])
    assert exc.value.code == 0
