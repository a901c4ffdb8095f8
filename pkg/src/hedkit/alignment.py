"""Forced-alignment ingestion: Praat TextGrids and a JSON schema.

Builds a validated utterance/word/phoneme hierarchy. Silence intervals
(labels "", "sil", "sp", "spn" by default) are dropped from the word and
phoneme lists but still bound the utterance interval.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import AlignmentValidationError, ContainmentError, SchemaError, TierNotFoundError

DEFAULT_SILENCE_LABELS = frozenset({"", "sil", "sp", "spn"})
BOUNDARY_TOL_S = 0.001  # aligner outputs carry ~ms rounding jitter


@dataclass(frozen=True)
class Segment:
    label: str
    start_s: float
    end_s: float

    def __post_init__(self):
        if not (0.0 <= self.start_s < self.end_s):
            raise AlignmentValidationError(
                f"segment {self.label!r}: need 0 <= start < end, "
                f"got [{self.start_s}, {self.end_s}]"
            )

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class AlignmentHierarchy:
    """Utterance -> words -> phonemes with per-phoneme word membership."""

    utterance: Segment
    words: tuple[Segment, ...]
    phonemes: tuple[Segment, ...]
    word_of_phoneme: tuple[int, ...]
    silence_labels: frozenset = DEFAULT_SILENCE_LABELS

    def __post_init__(self):
        _check_ordered(self.words, "words")
        _check_ordered(self.phonemes, "phonemes")
        if len(self.word_of_phoneme) != len(self.phonemes):
            raise AlignmentValidationError("word_of_phoneme arity mismatch")
        prev = 0
        for i, wi in enumerate(self.word_of_phoneme):
            if not (0 <= wi < len(self.words)):
                raise ContainmentError(f"phoneme {i} maps to missing word {wi}")
            if wi < prev:
                raise AlignmentValidationError(
                    f"word_of_phoneme not monotonic at phoneme {i}"
                )
            prev = wi
            p, w = self.phonemes[i], self.words[wi]
            if p.start_s < w.start_s - BOUNDARY_TOL_S or p.end_s > w.end_s + BOUNDARY_TOL_S:
                raise ContainmentError(
                    f"phoneme {i} ({p.label!r} [{p.start_s}, {p.end_s}]) "
                    f"not inside word {wi} ({w.label!r} [{w.start_s}, {w.end_s}])"
                )
        for j, w in enumerate(self.words):
            if w.start_s < self.utterance.start_s - BOUNDARY_TOL_S or \
                    w.end_s > self.utterance.end_s + BOUNDARY_TOL_S:
                raise AlignmentValidationError(
                    f"word {j} outside the utterance interval"
                )


def _check_ordered(segments, name: str):
    bad = [
        i for i in range(1, len(segments))
        if segments[i].start_s < segments[i - 1].end_s - BOUNDARY_TOL_S
    ]
    if bad:
        raise AlignmentValidationError(
            f"{name} overlap or run backwards at indices {bad}"
        )


# TextGrid parsing -----------------------------------------------------------

_TOKEN_RE = re.compile(r'"(?:[^"]|"")*"|[-+]?[0-9]+(?:\.[0-9]*)?(?:[eE][-+]?[0-9]+)?')


def _tokenize_textgrid(text: str) -> list:
    """Flatten a TextGrid (long or short form) into its value stream.

    Both forms carry the same ordered sequence of numbers and quoted
    strings; the long form merely labels them. Keys like ``xmin`` never
    collide with values because values are either numeric or quoted.
    """
    tokens = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        # structural headers like `item [1]:` carry no values; their bracket
        # indices must not leak into the stream
        if re.fullmatch(r"\w+\s*\[\s*\d*\s*\]\s*:?", line):
            continue
        # long form: strip `key =` prefixes so only the value remains
        stripped = re.sub(r"^[A-Za-z?\[\]\s]+=", "", line).strip()
        for match in _TOKEN_RE.finditer(stripped):
            tok = match.group(0)
            if tok.startswith('"'):
                tokens.append(tok[1:-1].replace('""', '"'))
            else:
                tokens.append(float(tok))
    return tokens


class _TokenStream:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def next_number(self) -> float:
        while self.pos < len(self.tokens):
            tok = self.tokens[self.pos]
            self.pos += 1
            if isinstance(tok, float):
                return tok
        raise SchemaError("unexpected end of TextGrid value stream")

    def next_string(self) -> str:
        while self.pos < len(self.tokens):
            tok = self.tokens[self.pos]
            self.pos += 1
            if isinstance(tok, str):
                return tok
        raise SchemaError("unexpected end of TextGrid value stream")


def _read_textgrid_tiers(text: str) -> tuple[float, float, dict]:
    if "ooTextFile" not in text or "TextGrid" not in text:
        raise SchemaError("not a Praat TextGrid (missing ooTextFile header)")
    stream = _TokenStream(_tokenize_textgrid(text))
    file_xmin = stream.next_number()
    file_xmax = stream.next_number()
    n_tiers = int(stream.next_number())
    tiers: dict[str, list] = {}
    for _ in range(n_tiers):
        tier_class = stream.next_string()
        tier_name = stream.next_string()
        stream.next_number()  # tier xmin
        stream.next_number()  # tier xmax
        size = int(stream.next_number())
        entries = []
        if tier_class == "IntervalTier":
            for _ in range(size):
                xmin = stream.next_number()
                xmax = stream.next_number()
                label = stream.next_string()
                entries.append((xmin, xmax, label))
        elif tier_class == "TextTier":
            for _ in range(size):
                stream.next_number()
                stream.next_string()
        else:
            raise SchemaError(f"unknown tier class {tier_class!r}")
        tiers[tier_name] = entries if tier_class == "IntervalTier" else []
    return file_xmin, file_xmax, tiers


def parse_textgrid(
    text: str,
    word_tier: str = "words",
    phone_tier: str = "phones",
    silence_labels=DEFAULT_SILENCE_LABELS,
) -> AlignmentHierarchy:
    """Parse a Praat TextGrid into a validated hierarchy."""
    file_xmin, file_xmax, tiers = _read_textgrid_tiers(text)
    for name in (word_tier, phone_tier):
        if name not in tiers:
            raise TierNotFoundError(
                f"tier {name!r} not found; TextGrid has {sorted(tiers)}"
            )

    silence = frozenset(silence_labels)
    words = [
        Segment(label, xmin, xmax)
        for xmin, xmax, label in tiers[word_tier]
        if label.strip() not in silence and xmax > xmin
    ]
    phones = [
        (label, xmin, xmax)
        for xmin, xmax, label in tiers[phone_tier]
        if label.strip() not in silence and xmax > xmin
    ]
    return _assemble(file_xmin, file_xmax, words, phones, silence)


def _assemble(
    utt_start: float,
    utt_end: float,
    words: list[Segment],
    phones: list[tuple],
    silence: frozenset,
) -> AlignmentHierarchy:
    """Snap phoneme boundaries to word boundaries and derive membership."""
    _check_ordered(words, "words")
    phonemes = []
    word_of_phoneme = []
    for i, (label, start, end) in enumerate(phones):
        owner = None
        for j, w in enumerate(words):
            if start >= w.start_s - BOUNDARY_TOL_S and end <= w.end_s + BOUNDARY_TOL_S:
                owner = j
                break
        if owner is None:
            raise ContainmentError(
                f"phoneme {i} ({label!r} [{start}, {end}]) not inside any word"
            )
        w = words[owner]
        start = max(start, w.start_s)
        end = min(end, w.end_s)
        phonemes.append(Segment(label, start, end))
        word_of_phoneme.append(owner)

    text = " ".join(w.label for w in words)
    utterance = Segment(text if text else "<empty>", utt_start, max(utt_end, utt_start + 1e-6))
    return AlignmentHierarchy(
        utterance=utterance,
        words=tuple(words),
        phonemes=tuple(phonemes),
        word_of_phoneme=tuple(word_of_phoneme),
        silence_labels=silence,
    )


# JSON form ------------------------------------------------------------------

def parse_alignment_json(text: str, silence_labels=DEFAULT_SILENCE_LABELS) -> AlignmentHierarchy:
    """Parse the JSON alignment schema (see README) with field-path errors."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON: {e}") from e

    def need(obj, key, kind, path):
        if not isinstance(obj, dict) or key not in obj:
            raise SchemaError("missing required field", f"{path}.{key}")
        value = obj[key]
        if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        if kind is int and isinstance(value, int) and not isinstance(value, bool):
            return value
        if isinstance(value, kind):
            return value
        raise SchemaError(f"expected {kind.__name__}", f"{path}.{key}")

    utt = need(doc, "utterance", dict, "$")
    utt_start = need(utt, "start", float, "$.utterance")
    utt_end = need(utt, "end", float, "$.utterance")
    need(utt, "text", str, "$.utterance")
    if utt_end <= utt_start:
        raise SchemaError("start >= end", "$.utterance")

    silence = frozenset(silence_labels)
    words = []
    for j, item in enumerate(need(doc, "words", list, "$")):
        path = f"$.words[{j}]"
        label = need(item, "label", str, path)
        start = need(item, "start", float, path)
        end = need(item, "end", float, path)
        if end <= start:
            raise SchemaError("start >= end", path)
        if label.strip() not in silence:
            words.append(Segment(label, start, end))

    phones = []
    for i, item in enumerate(need(doc, "phonemes", list, "$")):
        path = f"$.phonemes[{i}]"
        label = need(item, "label", str, path)
        start = need(item, "start", float, path)
        end = need(item, "end", float, path)
        need(item, "word", int, path)
        if end <= start:
            raise SchemaError("start >= end", path)
        if label.strip() not in silence:
            phones.append((label, start, end))

    # word indices are re-derived from containment: the serialized indices
    # count silence entries the hierarchy drops
    return _assemble(utt_start, utt_end, words, phones, silence)


def serialize_alignment_json(h: AlignmentHierarchy) -> str:
    doc = {
        "utterance": {
            "start": h.utterance.start_s,
            "end": h.utterance.end_s,
            "text": h.utterance.label,
        },
        "words": [
            {"label": w.label, "start": w.start_s, "end": w.end_s} for w in h.words
        ],
        "phonemes": [
            {
                "label": p.label,
                "start": p.start_s,
                "end": p.end_s,
                "word": h.word_of_phoneme[i],
            }
            for i, p in enumerate(h.phonemes)
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def load_alignment(text: str, filename: str = "", **kwargs) -> AlignmentHierarchy:
    """Dispatch on content: TextGrid header vs JSON object."""
    head = text.lstrip()[:200]
    if filename.lower().endswith((".json",)) or head.startswith("{"):
        return parse_alignment_json(text, **kwargs)
    return parse_textgrid(text, **kwargs)
