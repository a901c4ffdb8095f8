"""Command-line entry point.

Subcommands: train, extract, edit, sweep, eval metrics, eval trends,
features dump, serve. Every run is reproducible given identical inputs
and seed; failures exit nonzero with an error JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import audio, editor, evaluate, features, hed, ranker, report
from .alignment import load_alignment
from .errors import HedkitError, InsufficientDataError, SchemaError

MODELS_ENV = "HEDKIT_MODELS"


# plumbing ---------------------------------------------------------------------

def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")


def _dump_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _models_dir(args) -> str:
    models = getattr(args, "models", None) or os.environ.get(MODELS_ENV)
    if not models:
        raise SchemaError(f"no model directory: pass --models or set {MODELS_ENV}")
    return models


def _feature_config(args) -> features.FeatureConfig:
    cfg = features.DEFAULT_CONFIG
    frame_ms = getattr(args, "frame_ms", None)
    hop_ms = getattr(args, "hop_ms", None)
    if frame_ms is not None or hop_ms is not None:
        cfg = dataclasses.replace(
            cfg,
            frame_ms=frame_ms if frame_ms is not None else cfg.frame_ms,
            hop_ms=hop_ms if hop_ms is not None else cfg.hop_ms,
        )
    return cfg


def _load_waveform(path: str) -> audio.Waveform:
    w = audio.decode_wav(Path(path).read_bytes())
    return audio.resample(w, audio.ANALYSIS_RATE)


def _load_hierarchy(path: str):
    text = Path(path).read_text(encoding="utf-8")
    return load_alignment(text, filename=path)


def _read_hed(path: str) -> tuple[hed.HedMatrix, str]:
    text = Path(path).read_text(encoding="utf-8")
    form = "json" if text.lstrip().startswith("{") else "csv"
    return hed.parse_hed(text, form), form


def _parse_selector(raw: str):
    if raw == "all":
        return editor.ALL
    if ":" in raw:
        lo, hi = raw.split(":", 1)
        return (int(lo), int(hi))
    return int(raw)


# train -------------------------------------------------------------------------

MANIFEST_FIELDS = ("wav", "alignment", "emotion", "speaker")


def _read_manifest(path: str) -> list[dict]:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [f for f in MANIFEST_FIELDS if f not in header]
        if missing:
            raise SchemaError(
                f"manifest missing columns {missing}; need {list(MANIFEST_FIELDS)}"
            )
        rows = [row for row in reader]
    if not rows:
        raise SchemaError("manifest has no rows")
    return rows


def _segment_features(args_tuple):
    """Per-utterance feature extraction at all three levels."""
    root, row, cfg = args_tuple
    w = _load_waveform(str(root / row["wav"]))
    h = _load_hierarchy(str(root / row["alignment"]))
    utt = features.extract_segment_features(w, h.utterance.start_s, h.utterance.end_s, cfg)
    words = [
        features.extract_segment_features(w, s.start_s, s.end_s, cfg) for s in h.words
    ]
    phones = [
        features.extract_segment_features(w, s.start_s, s.end_s, cfg) for s in h.phonemes
    ]
    return {"utterance": [utt.dims], "word": [x.dims for x in words],
            "phoneme": [x.dims for x in phones]}


def cmd_train(args) -> int:
    manifest_path = Path(args.manifest)
    rows = _read_manifest(str(manifest_path))
    root = manifest_path.parent
    cfg = _feature_config(args)
    labels_in_manifest = sorted({row["emotion"] for row in rows})
    if args.neutral_label not in labels_in_manifest:
        raise InsufficientDataError(
            f"manifest has no {args.neutral_label!r} rows "
            f"(labels present: {labels_in_manifest}); the low-intensity "
            "class is required for pair building"
        )
    emotions = tuple(args.emotions.split(",")) if args.emotions else tuple(
        lab for lab in labels_in_manifest if lab != args.neutral_label
    )

    jobs = max(args.jobs, 1)
    work = [(root, row, cfg) for row in rows]
    if jobs == 1:
        extracted = [_segment_features(item) for item in work]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            extracted = list(pool.map(_segment_features, work))

    level_feats: dict[str, list] = {lvl: [] for lvl in ranker.LEVELS}
    level_labels: dict[str, list] = {lvl: [] for lvl in ranker.LEVELS}
    for row, result in zip(rows, extracted):
        for lvl in ranker.LEVELS:
            for vec in result[lvl]:
                level_feats[lvl].append(vec)
                level_labels[lvl].append(row["emotion"])

    hyper = ranker.Hyper(c_ordered=args.c_ordered, c_similar=args.c_similar)
    models: dict = {}
    report_models: dict = {}
    for emotion in emotions:
        report_models[emotion] = {}
        for lvl in ranker.LEVELS:
            pairs = ranker.build_pairs(
                np.array(level_feats[lvl]),
                level_labels[lvl],
                emotion,
                neutral_label=args.neutral_label,
                max_ordered=args.max_ordered,
                max_similar=args.max_similar,
                seed=args.seed,
            )
            model = ranker.train(pairs, hyper, emotion=emotion, level=lvl)
            models[(emotion, lvl)] = model
            report_models[emotion][lvl] = {
                "ordered_pairs": len(pairs.ordered_pairs),
                "similar_pairs": len(pairs.similar_pairs),
                "final_objective": ranker.objective_of(model, pairs, hyper),
                "ordering_accuracy": ranker.ordering_accuracy(model, pairs),
                "converged": model.converged,
                "final_grad_norm": model.final_grad_norm,
                "score_span": model.score_max - model.score_min,
            }

    bank = hed.ModelBank(emotions=emotions, models=models)
    hed.save_bank(bank, args.models)
    training_report = {
        "emotions": list(emotions),
        "neutral_label": args.neutral_label,
        "seed": args.seed,
        "hyper": {
            "c_ordered": hyper.c_ordered,
            "c_similar": hyper.c_similar,
            "tol": hyper.tol,
            "max_iter": hyper.max_iter,
        },
        "manifest": manifest_path.name,
        "n_utterances": len(rows),
        "models": report_models,
    }
    (Path(args.models) / "training_report.json").write_text(
        _dump_json(training_report), encoding="utf-8"
    )
    if args.out:
        _emit(_dump_json(training_report), args.out)
    return 0


# extract / edit / sweep ----------------------------------------------------------

def cmd_extract(args) -> int:
    bank = hed.load_bank(_models_dir(args))
    w = _load_waveform(args.wav)
    h = _load_hierarchy(args.alignment)
    m = hed.extract_hed(w, h, bank, _feature_config(args))
    _emit(hed.serialize_hed(m, args.format), args.out)
    return 0


def cmd_edit(args) -> int:
    m, form = _read_hed(args.hed_in)
    script = editor.EditScript.from_json(Path(args.script).read_text(encoding="utf-8"))
    out_m = editor.apply(m, script)
    _emit(hed.serialize_hed(out_m, args.format or form), args.out)
    return 0


def cmd_sweep(args) -> int:
    m, form = _read_hed(args.hed_in)
    values = [float(v) for v in args.values.split(",") if v != ""]
    if not values:
        raise SchemaError("--values must list at least one number")
    selector = _parse_selector(args.selector)
    results = editor.sweep(m, args.level, selector, args.emotion, values)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    form = args.format or form
    ext = "json" if form == "json" else "csv"
    sel_part = args.selector.replace(":", "-")
    written = []
    for value, matrix in zip(values, results):
        name = f"sweep_{args.level}_{sel_part}_{args.emotion}_{value!r}.{ext}"
        (out_dir / name).write_text(hed.serialize_hed(matrix, form), encoding="utf-8")
        written.append(name)
    _emit(_dump_json({"out_dir": str(out_dir), "files": written}), args.out)
    return 0


# eval ---------------------------------------------------------------------------

def cmd_eval_metrics(args) -> int:
    ref = _load_waveform(args.ref)
    test = _load_waveform(args.test)
    cfg = _feature_config(args)
    ref_cep = evaluate.mel_cepstra(ref, cfg)
    test_cep = evaluate.mel_cepstra(test, cfg)
    distortion = evaluate.pitch_energy_distortion(ref, test, cfg)
    doc = {
        "mcd_db": evaluate.mcd(ref_cep, test_cep, use_dtw=not args.no_dtw),
        "pitch_rmse_hz": distortion["pitch_rmse_hz"],
        "energy_rmse_db": distortion["energy_rmse_db"],
        "frame_disturbance": distortion["frame_disturbance"],
        "ref_frames": int(ref_cep.shape[0]),
        "test_frames": int(test_cep.shape[0]),
        "use_dtw": not args.no_dtw,
    }
    _emit(_dump_json(doc), args.out)
    return 0


def _read_runs_csv(path: str) -> list[dict]:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        needed = ["condition", "emotion", "intensity", *evaluate.PROSODY_FEATURES]
        missing = [f for f in needed if f not in header]
        if missing:
            raise SchemaError(f"runs CSV missing columns {missing}")
        rows = []
        for idx, row in enumerate(reader):
            parsed = {"condition": row["condition"], "emotion": row["emotion"]}
            for key in ("intensity", *evaluate.PROSODY_FEATURES):
                try:
                    parsed[key] = float(row[key])
                except ValueError as e:
                    raise SchemaError(
                        f"runs CSV row {idx}: bad number for {key}: {row[key]!r}"
                    ) from e
            rows.append(parsed)
    if not rows:
        raise SchemaError("runs CSV has no rows")
    return rows


def cmd_eval_trends(args) -> int:
    runs = _read_runs_csv(args.runs)
    signs = report.load_expected_signs(args.expected_signs)
    trend = evaluate.trend_analysis(runs, expected_signs=signs)
    _emit(_dump_json(trend.as_dict()), args.out)
    if args.csv:
        Path(args.csv).parent.mkdir(parents=True, exist_ok=True)
        Path(args.csv).write_text(report.trend_grid_csv(trend), encoding="utf-8")
    if args.png:
        Path(args.png).parent.mkdir(parents=True, exist_ok=True)
        report.render_trend_heatmap(trend, args.png)
    return 0


# features dump --------------------------------------------------------------------

def cmd_features_dump(args) -> int:
    w = _load_waveform(args.wav)
    cfg = _feature_config(args)
    segments: list[tuple[str, str, float, float]] = []
    if args.alignment:
        h = _load_hierarchy(args.alignment)
        segments.append(("utterance", h.utterance.label, h.utterance.start_s, h.utterance.end_s))
        segments += [("word", s.label, s.start_s, s.end_s) for s in h.words]
        segments += [("phoneme", s.label, s.start_s, s.end_s) for s in h.phonemes]
    else:
        segments.append(("utterance", "<whole-file>", 0.0, w.duration_s))

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["level", "label", "start_s", "end_s", *features.FEATURE_NAMES])
    for level, label, start, end in segments:
        vec = features.extract_segment_features(w, start, end, cfg)
        writer.writerow([level, label, repr(start), repr(end)]
                        + [repr(v) for v in vec.dims.tolist()])
    _emit(buf.getvalue(), args.out)
    return 0


# serve ------------------------------------------------------------------------------

def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        models_dir=getattr(args, "models", None) or os.environ.get(MODELS_ENV),
        persist_dir=args.persist_dir,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


# parser -------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hedkit",
        description="Hierarchical emotion-intensity extraction, editing, and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_frame_flags(p):
        p.add_argument("--frame-ms", type=float, default=None, help="analysis frame length")
        p.add_argument("--hop-ms", type=float, default=None, help="analysis hop length")

    p = sub.add_parser("train", help="train the ranking-model bank from a corpus manifest")
    p.add_argument("--manifest", required=True, help="CSV with wav,alignment,emotion,speaker")
    p.add_argument("--models", required=True, help="output model directory")
    p.add_argument("--emotions", default=None, help="comma list; default: manifest labels minus neutral")
    p.add_argument("--neutral-label", default=ranker.DEFAULT_NEUTRAL_LABEL)
    p.add_argument("--c-ordered", type=float, default=0.1)
    p.add_argument("--c-similar", type=float, default=0.1)
    p.add_argument("--max-ordered", type=int, default=None, help="cap on ordered pairs")
    p.add_argument("--max-similar", type=int, default=None, help="cap on similar pairs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="parallel feature extraction")
    p.add_argument("--out", default=None, help="also write the training report here ('-' = stdout)")
    add_frame_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("extract", help="extract an emotion-intensity matrix from audio + alignment")
    p.add_argument("--wav", required=True)
    p.add_argument("--alignment", required=True, help="TextGrid or alignment JSON")
    p.add_argument("--models", default=None, help=f"model directory (or ${MODELS_ENV})")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default="-")
    add_frame_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("edit", help="apply an edit script to a matrix file")
    p.add_argument("--in", dest="hed_in", required=True, help="matrix file (csv or json)")
    p.add_argument("--script", required=True, help="edit-script JSON file")
    p.add_argument("--format", choices=("csv", "json"), default=None,
                   help="output format; default mirrors the input")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_edit)

    p = sub.add_parser("sweep", help="write one edited matrix per intensity value")
    p.add_argument("--in", dest="hed_in", required=True)
    p.add_argument("--level", choices=(*editor.LEVELS, "wp"), required=True)
    p.add_argument("--selector", default="all", help="'all', an index, or lo:hi")
    p.add_argument("--emotion", default="all")
    p.add_argument("--values", required=True, help="comma list, e.g. 0,0.5,1")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--out", default="-", help="summary JSON destination")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="objective evaluation")
    eval_sub = p.add_subparsers(dest="eval_command", required=True)

    pm = eval_sub.add_parser("metrics", help="spectral/prosody distortion between two WAVs")
    pm.add_argument("--ref", required=True)
    pm.add_argument("--test", required=True)
    pm.add_argument("--no-dtw", action="store_true", help="pair frames by index instead of DTW")
    pm.add_argument("--out", default="-")
    add_frame_flags(pm)
    pm.set_defaults(func=cmd_eval_metrics)

    pt = eval_sub.add_parser("trends", help="intensity-trend analysis over sweep runs")
    pt.add_argument("--runs", required=True, help="CSV: condition,emotion,intensity,<prosody features>")
    pt.add_argument("--expected-signs", default=None, help="JSON sign table; default packaged")
    pt.add_argument("--out", default="-", help="report JSON destination")
    pt.add_argument("--csv", default=None, help="also write the grid as CSV")
    pt.add_argument("--png", default=None, help="also render the grid heatmap as PNG")
    pt.set_defaults(func=cmd_eval_trends)

    p = sub.add_parser("features", help="feature extraction utilities")
    feat_sub = p.add_subparsers(dest="features_command", required=True)
    pf = feat_sub.add_parser("dump", help="per-segment 88-column feature CSV")
    pf.add_argument("--wav", required=True)
    pf.add_argument("--alignment", default=None, help="optional; default dumps the whole file")
    pf.add_argument("--out", default="-")
    add_frame_flags(pf)
    pf.set_defaults(func=cmd_features_dump)

    p = sub.add_parser("serve", help="run the HTTP editing service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--models", default=None, help=f"model directory (or ${MODELS_ENV})")
    p.add_argument("--persist-dir", default=None, help="save/load sessions here")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HedkitError as e:
        sys.stderr.write(json.dumps({"error": e.payload()}, sort_keys=True) + "\n")
        return 2
    except OSError as e:
        sys.stderr.write(json.dumps(
            {"error": {"code": "io_error", "message": str(e)}}, sort_keys=True
        ) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
