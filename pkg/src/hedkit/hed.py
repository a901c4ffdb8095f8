"""Hierarchical emotion-distribution matrices.

Each non-silence phoneme gets one row of 3K intensities laid out
[utterance block | word block | phoneme block]: the utterance vector is
duplicated across every row and each word vector is replicated across
that word's phonemes.
"""

from __future__ import annotations

import io
import json
import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ranker
from .alignment import AlignmentHierarchy
from .audio import Waveform
from .errors import EmptyHierarchyError, HedValidationError, IncompleteBankError, SchemaError
from .features import DEFAULT_CONFIG, FeatureConfig, extract_segment_features
from .ranker import RankingModel

HED_FORMAT_VERSION = 1
_BLOCK_TOL = 0.0  # replication must hold exactly


@dataclass(frozen=True)
class HedMatrix:
    phoneme_labels: tuple[str, ...]
    word_of_phoneme: tuple[int, ...]
    emotions: tuple[str, ...]
    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "phoneme_labels", tuple(self.phoneme_labels))
        object.__setattr__(self, "word_of_phoneme", tuple(self.word_of_phoneme))
        object.__setattr__(self, "emotions", tuple(self.emotions))
        n, k = len(self.phoneme_labels), len(self.emotions)
        if k == 0:
            raise HedValidationError("no emotions")
        if rows.shape != (n, 3 * k):
            raise HedValidationError(
                f"rows must be ({n}, {3 * k}), got {rows.shape}"
            )
        if len(self.word_of_phoneme) != n:
            raise HedValidationError("word_of_phoneme arity mismatch")
        if n == 0:
            raise HedValidationError("matrix must have at least one phoneme row")
        if not np.all(np.isfinite(rows)):
            raise HedValidationError("intensities must be finite")
        if rows.min() < 0.0 or rows.max() > 1.0:
            bad = np.argwhere((rows < 0.0) | (rows > 1.0))[0]
            raise HedValidationError(
                f"intensity outside [0,1] at row {bad[0]}, column {bad[1]}"
            )
        utt = rows[:, :k]
        if np.any(np.abs(utt - utt[0]) > _BLOCK_TOL):
            raise HedValidationError("utterance block must be identical on every row")
        for word in set(self.word_of_phoneme):
            sel = [i for i, wi in enumerate(self.word_of_phoneme) if wi == word]
            block = rows[sel, k:2 * k]
            if np.any(np.abs(block - block[0]) > _BLOCK_TOL):
                raise HedValidationError(
                    f"word block must be identical across phonemes of word {word}"
                )

    @property
    def n_phonemes(self) -> int:
        return len(self.phoneme_labels)

    @property
    def k(self) -> int:
        return len(self.emotions)

    def block(self, level: str) -> np.ndarray:
        """View of one level's K columns: 'utterance' | 'word' | 'phoneme'."""
        k = self.k
        offset = {"utterance": 0, "word": k, "phoneme": 2 * k}[level]
        return self.rows[:, offset:offset + k]

    def word_indices(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.word_of_phoneme)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, HedMatrix):
            return NotImplemented
        return (
            self.phoneme_labels == other.phoneme_labels
            and self.word_of_phoneme == other.word_of_phoneme
            and self.emotions == other.emotions
            and np.array_equal(self.rows, other.rows)
        )


@dataclass(frozen=True)
class ModelBank:
    """Complete set of ranking models: one per (emotion, level)."""

    emotions: tuple[str, ...]
    models: dict

    def __post_init__(self):
        object.__setattr__(self, "emotions", tuple(self.emotions))
        missing = [
            (e, lvl)
            for e in self.emotions
            for lvl in ranker.LEVELS
            if (e, lvl) not in self.models
        ]
        if missing:
            raise IncompleteBankError(f"bank missing models for {missing}")
        for (e, lvl), model in self.models.items():
            if model.emotion != e or model.level != lvl:
                raise IncompleteBankError(
                    f"model stored under {(e, lvl)} is for "
                    f"{(model.emotion, model.level)}"
                )

    def model(self, emotion: str, level: str) -> RankingModel:
        return self.models[(emotion, level)]


def extract_hed(
    w: Waveform,
    h: AlignmentHierarchy,
    bank: ModelBank,
    cfg: FeatureConfig = DEFAULT_CONFIG,
) -> HedMatrix:
    """Score utterance/word/phoneme segments and assemble the matrix."""
    if len(h.phonemes) == 0:
        raise EmptyHierarchyError("alignment has no non-silence phonemes")

    utt_x = extract_segment_features(w, h.utterance.start_s, h.utterance.end_s, cfg)
    word_x = [extract_segment_features(w, seg.start_s, seg.end_s, cfg) for seg in h.words]
    phon_x = [extract_segment_features(w, seg.start_s, seg.end_s, cfg) for seg in h.phonemes]

    utt_ed = [ranker.score(bank.model(e, "utterance"), utt_x.dims) for e in bank.emotions]
    word_ed = [
        [ranker.score(bank.model(e, "word"), x.dims) for e in bank.emotions]
        for x in word_x
    ]
    phon_ed = [
        [ranker.score(bank.model(e, "phoneme"), x.dims) for e in bank.emotions]
        for x in phon_x
    ]

    rows = np.array([
        utt_ed + word_ed[h.word_of_phoneme[i]] + phon_ed[i]
        for i in range(len(h.phonemes))
    ])
    return HedMatrix(
        phoneme_labels=tuple(p.label for p in h.phonemes),
        word_of_phoneme=h.word_of_phoneme,
        emotions=bank.emotions,
        rows=rows,
    )


# serialization ---------------------------------------------------------------

def hed_csv_header(emotions) -> list[str]:
    return (
        ["phoneme", "word_index"]
        + [f"utt_{e}" for e in emotions]
        + [f"word_{e}" for e in emotions]
        + [f"phon_{e}" for e in emotions]
    )


def serialize_hed_csv(m: HedMatrix) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(hed_csv_header(m.emotions))
    for i in range(m.n_phonemes):
        writer.writerow(
            [m.phoneme_labels[i], m.word_of_phoneme[i]]
            + [repr(v) for v in m.rows[i].tolist()]
        )
    return out.getvalue()


def parse_hed_csv(text: str) -> HedMatrix:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty HED CSV") from None
    if len(header) < 5 or header[:2] != ["phoneme", "word_index"]:
        raise SchemaError("bad HED CSV header", "header")
    k3 = len(header) - 2
    if k3 % 3 != 0:
        raise SchemaError(f"column count {k3} is not 3K", "header")
    k = k3 // 3
    emotions = []
    for j in range(k):
        name = header[2 + j]
        if not name.startswith("utt_"):
            raise SchemaError(f"expected utt_<emotion>, got {name!r}", f"header[{2 + j}]")
        emotions.append(name[4:])
    for j, e in enumerate(emotions):
        if header[2 + k + j] != f"word_{e}" or header[2 + 2 * k + j] != f"phon_{e}":
            raise SchemaError("word_/phon_ columns do not mirror utt_ columns", "header")

    labels, word_of, rows = [], [], []
    for r, row in enumerate(reader):
        if not row:
            continue
        if len(row) != 2 + 3 * k:
            raise SchemaError(
                f"expected {2 + 3 * k} fields, got {len(row)}", f"row {r}"
            )
        labels.append(row[0])
        try:
            word_of.append(int(row[1]))
        except ValueError:
            raise SchemaError("word_index must be an integer", f"row {r}") from None
        values = []
        for c, cell in enumerate(row[2:]):
            try:
                v = float(cell)
            except ValueError:
                raise SchemaError(
                    f"not a number: {cell!r}", f"row {r}, column {header[2 + c]}"
                ) from None
            if not (0.0 <= v <= 1.0):
                raise HedValidationError(
                    f"value {v} outside [0,1] at row {r}, column {header[2 + c]}"
                )
            values.append(v)
        rows.append(values)
    return HedMatrix(
        phoneme_labels=tuple(labels),
        word_of_phoneme=tuple(word_of),
        emotions=tuple(emotions),
        rows=np.array(rows, dtype=np.float64),
    )


def serialize_hed_json(m: HedMatrix) -> str:
    doc = {
        "version": HED_FORMAT_VERSION,
        "emotions": list(m.emotions),
        "phonemes": [
            {"label": m.phoneme_labels[i], "word": m.word_of_phoneme[i]}
            for i in range(m.n_phonemes)
        ],
        "rows": [row for row in m.rows.tolist()],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def parse_hed_json(text: str) -> HedMatrix:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON: {e}") from e
    for key in ("emotions", "phonemes", "rows"):
        if key not in doc:
            raise SchemaError("missing required field", f"$.{key}")
    emotions = tuple(doc["emotions"])
    labels, word_of = [], []
    for i, item in enumerate(doc["phonemes"]):
        if "label" not in item or "word" not in item:
            raise SchemaError("phoneme needs label and word", f"$.phonemes[{i}]")
        if not isinstance(item["word"], int) or isinstance(item["word"], bool):
            raise SchemaError("word must be an integer", f"$.phonemes[{i}].word")
        labels.append(item["label"])
        word_of.append(item["word"])
    rows = doc["rows"]
    for i, row in enumerate(rows):
        if len(row) != 3 * len(emotions):
            raise SchemaError(
                f"expected {3 * len(emotions)} values, got {len(row)}", f"$.rows[{i}]"
            )
        for j, v in enumerate(row):
            if not isinstance(v, (int, float)) or not (0.0 <= float(v) <= 1.0):
                raise HedValidationError(
                    f"value {v!r} outside [0,1] at row {i}, column {j}"
                )
    return HedMatrix(
        phoneme_labels=tuple(labels),
        word_of_phoneme=tuple(word_of),
        emotions=emotions,
        rows=np.array(rows, dtype=np.float64),
    )


def serialize_hed(m: HedMatrix, form: str = "csv") -> str:
    if form == "csv":
        return serialize_hed_csv(m)
    if form == "json":
        return serialize_hed_json(m)
    raise ValueError(f"unknown HED format {form!r}")


def parse_hed(text: str, form: str | None = None) -> HedMatrix:
    if form is None:
        form = "json" if text.lstrip().startswith("{") else "csv"
    if form == "csv":
        return parse_hed_csv(text)
    if form == "json":
        return parse_hed_json(text)
    raise ValueError(f"unknown HED format {form!r}")


# bank persistence ------------------------------------------------------------

def save_bank(bank: ModelBank, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index = {"version": 1, "emotions": list(bank.emotions), "models": {}}
    for (emotion, level), model in sorted(bank.models.items()):
        filename = f"{emotion}__{level}.json"
        ranker.save_model(model, directory / filename)
        index["models"][f"{emotion}/{level}"] = filename
    with open(directory / "bank.json", "w", encoding="utf-8") as fh:
        json.dump(index, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_bank(directory) -> ModelBank:
    directory = Path(directory)
    index_path = directory / "bank.json"
    if not index_path.exists():
        raise IncompleteBankError(f"no bank.json in {directory}")
    with open(index_path, "r", encoding="utf-8") as fh:
        index = json.load(fh)
    models = {}
    for key, filename in index["models"].items():
        emotion, level = key.split("/", 1)
        models[(emotion, level)] = ranker.load_model(directory / filename)
    return ModelBank(emotions=tuple(index["emotions"]), models=models)
