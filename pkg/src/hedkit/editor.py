"""Quantitative, level-targeted edits on HED matrices.

Edits are pure: ``apply`` returns a new matrix and never mutates its
input. The three level blocks are independent channels; a phoneme edit
never back-propagates into word or utterance values. Results are always
clamped to [0, 1].
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EditIndexError, SchemaError, ShapeMismatchError, UnknownEmotionError
from .hed import HedMatrix

LEVELS = ("utterance", "word", "phoneme")
ACTIONS = ("set", "scale", "add")
ALL = "all"


@dataclass(frozen=True)
class EditOp:
    """One edit: level + selector + emotion + action.

    selector: "all", a single index, or an inclusive (start, end) range.
    Word-level selectors index words, phoneme-level selectors index
    phonemes; the utterance level takes only "all".
    """

    level: str
    selector: object = ALL
    emotion: str = ALL
    action: str = "set"
    value: float = 0.0

    def __post_init__(self):
        if self.level not in LEVELS:
            raise ValueError(f"level must be one of {LEVELS}, got {self.level!r}")
        if self.action not in ACTIONS:
            raise ValueError(f"action must be one of {ACTIONS}, got {self.action!r}")
        if not np.isfinite(self.value):
            raise ValueError("edit value must be finite")
        sel = self.selector
        if not (
            sel == ALL
            or isinstance(sel, int)
            or (isinstance(sel, tuple) and len(sel) == 2
                and all(isinstance(v, int) for v in sel))
        ):
            raise ValueError(f"bad selector {sel!r}")

    def to_dict(self) -> dict:
        sel = list(self.selector) if isinstance(self.selector, tuple) else self.selector
        return {
            "level": self.level,
            "selector": sel,
            "emotion": self.emotion,
            "action": self.action,
            "value": self.value,
        }

    @staticmethod
    def from_dict(doc: dict) -> "EditOp":
        if not isinstance(doc, dict):
            raise SchemaError("op must be an object")
        for key in ("level", "action", "value"):
            if key not in doc:
                raise SchemaError("missing required field", f"op.{key}")
        sel = doc.get("selector", ALL)
        if isinstance(sel, list):
            if len(sel) != 2:
                raise SchemaError("range selector must have two entries", "op.selector")
            sel = (int(sel[0]), int(sel[1]))
        elif sel is None:
            sel = ALL
        try:
            return EditOp(
                level=doc["level"],
                selector=sel,
                emotion=doc.get("emotion", ALL),
                action=doc["action"],
                value=float(doc["value"]),
            )
        except (TypeError, ValueError) as e:
            raise SchemaError(str(e), "op") from e


@dataclass(frozen=True)
class EditScript:
    ops: tuple[EditOp, ...] = ()
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {"ops": [op.to_dict() for op in self.ops], "meta": self.meta},
            indent=2, sort_keys=True,
        )

    @staticmethod
    def from_dict(doc) -> "EditScript":
        if not isinstance(doc, dict) or "ops" not in doc or not isinstance(doc["ops"], list):
            raise SchemaError("missing ops list", "$.ops")
        ops = tuple(EditOp.from_dict(op) for op in doc["ops"])
        meta = doc.get("meta", {})
        if not isinstance(meta, dict):
            raise SchemaError("meta must be an object", "$.meta")
        return EditScript(ops=ops, meta=meta)

    @staticmethod
    def from_json(text: str) -> "EditScript":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise SchemaError(f"invalid JSON: {e}") from e
        return EditScript.from_dict(doc)

    def __len__(self) -> int:
        return len(self.ops)


def _emotion_columns(m: HedMatrix, op: EditOp) -> list[int]:
    if op.emotion == ALL:
        return list(range(m.k))
    if op.emotion not in m.emotions:
        raise UnknownEmotionError(
            f"unknown emotion {op.emotion!r}; matrix has {list(m.emotions)}"
        )
    return [m.emotions.index(op.emotion)]


def _selected_indices(op: EditOp, count: int, kind: str) -> list[int]:
    if op.selector == ALL:
        return list(range(count))
    if isinstance(op.selector, int):
        lo = hi = op.selector
    else:
        lo, hi = op.selector
    if lo > hi or lo < 0 or hi >= count:
        raise EditIndexError(
            f"{kind} selector {op.selector!r} out of range for {count} {kind}s "
            f"(op {op.to_dict()})"
        )
    return list(range(lo, hi + 1))


def _apply_action(block: np.ndarray, rows, cols, action: str, value: float):
    region = block[np.ix_(rows, cols)]
    if action == "set":
        region = np.full_like(region, value)
    elif action == "scale":
        region = region * value
    else:
        region = region + value
    block[np.ix_(rows, cols)] = np.clip(region, 0.0, 1.0)


def apply_op(m: HedMatrix, op: EditOp) -> HedMatrix:
    k = m.k
    cols = _emotion_columns(m, op)
    rows = np.array(m.rows, dtype=np.float64)

    if op.level == "utterance":
        _apply_action(rows, list(range(m.n_phonemes)), cols, op.action, op.value)
    elif op.level == "word":
        words = _selected_indices(op, max(m.word_of_phoneme) + 1, "word")
        target = [i for i, wi in enumerate(m.word_of_phoneme) if wi in set(words)]
        if not target and op.selector != ALL:
            raise EditIndexError(
                f"word selector {op.selector!r} matches no phonemes (op {op.to_dict()})"
            )
        word_cols = [k + c for c in cols]
        _apply_action(rows, target, word_cols, op.action, op.value)
    else:
        target = _selected_indices(op, m.n_phonemes, "phoneme")
        phon_cols = [2 * k + c for c in cols]
        _apply_action(rows, target, phon_cols, op.action, op.value)

    return HedMatrix(
        phoneme_labels=m.phoneme_labels,
        word_of_phoneme=m.word_of_phoneme,
        emotions=m.emotions,
        rows=rows,
    )


def apply(m: HedMatrix, script: EditScript) -> HedMatrix:
    """Apply ops in order; returns a new matrix, input left untouched."""
    out = m
    for op in script.ops:
        out = apply_op(out, op)
    return out


def sweep(
    m: HedMatrix,
    level: str,
    selector,
    emotion: str,
    values,
) -> list[HedMatrix]:
    """One edited matrix per value via set-edits at the chosen level.

    ``level`` additionally accepts "wp": the same value is written to the
    word block and the phoneme block of the selected word's phonemes.
    """
    out = []
    for value in values:
        if level == "wp":
            words = _selected_indices(
                EditOp("word", selector, emotion, "set", value),
                max(m.word_of_phoneme) + 1, "word",
            )
            phons = [i for i, wi in enumerate(m.word_of_phoneme) if wi in set(words)]
            if not phons:
                raise EditIndexError(f"wp selector {selector!r} matches no phonemes")
            ops = [
                EditOp("word", selector, emotion, "set", value),
                EditOp("phoneme", (min(phons), max(phons)), emotion, "set", value),
            ]
        else:
            ops = [EditOp(level, selector, emotion, "set", value)]
        out.append(apply(m, EditScript(ops=tuple(ops))))
    return out


def diff(a: HedMatrix, b: HedMatrix) -> EditScript:
    """Minimal set-op script turning ``a`` into ``b``.

    Uniform changes in the utterance or a word block come out as one op
    per emotion; phoneme-block changes as one op per changed cell.
    """
    if (
        a.phoneme_labels != b.phoneme_labels
        or a.word_of_phoneme != b.word_of_phoneme
        or a.emotions != b.emotions
    ):
        raise ShapeMismatchError("matrices differ in shape, labels, or emotions")

    k = a.k
    ops = []
    for c in range(k):
        if a.rows[0, c] != b.rows[0, c]:
            ops.append(EditOp("utterance", ALL, a.emotions[c], "set", float(b.rows[0, c])))
    for word in a.word_indices():
        row = next(i for i, wi in enumerate(a.word_of_phoneme) if wi == word)
        for c in range(k):
            if a.rows[row, k + c] != b.rows[row, k + c]:
                ops.append(EditOp("word", word, a.emotions[c], "set",
                                  float(b.rows[row, k + c])))
    for i in range(a.n_phonemes):
        for c in range(k):
            if a.rows[i, 2 * k + c] != b.rows[i, 2 * k + c]:
                ops.append(EditOp("phoneme", i, a.emotions[c], "set",
                                  float(b.rows[i, 2 * k + c])))
    return EditScript(ops=tuple(ops))
