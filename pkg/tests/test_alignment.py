"""Alignment parsing: TextGrid (long and short form), JSON, validation."""

import json

import pytest

from hedkit import alignment as al
from hedkit import synth
from hedkit.errors import (
    AlignmentValidationError,
    ContainmentError,
    SchemaError,
    TierNotFoundError,
)

LONG_FORM = '''File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 2.0
tiers? <exists>
size = 2
item []:
    item [1]:
        class = "IntervalTier"
        name = "words"
        xmin = 0
        xmax = 2.0
        intervals: size = 4
        intervals [1]:
            xmin = 0
            xmax = 0.25
            text = ""
        intervals [2]:
            xmin = 0.25
            xmax = 1.0
            text = "hello"
        intervals [3]:
            xmin = 1.0
            xmax = 1.8
            text = "world"
        intervals [4]:
            xmin = 1.8
            xmax = 2.0
            text = "sil"
    item [2]:
        class = "IntervalTier"
        name = "phones"
        xmin = 0
        xmax = 2.0
        intervals: size = 8
        intervals [1]:
            xmin = 0
            xmax = 0.25
            text = "sp"
        intervals [2]:
            xmin = 0.25
            xmax = 0.5
            text = "HH"
        intervals [3]:
            xmin = 0.5
            xmax = 0.75
            text = "EH"
        intervals [4]:
            xmin = 0.75
            xmax = 1.0
            text = "L"
        intervals [5]:
            xmin = 1.0
            xmax = 1.3
            text = "W"
        intervals [6]:
            xmin = 1.3
            xmax = 1.6
            text = "ER"
        intervals [7]:
            xmin = 1.6
            xmax = 1.8
            text = "D"
        intervals [8]:
            xmin = 1.8
            xmax = 2.0
            text = ""
'''

SHORT_FORM = '''File type = "ooTextFile"
Object class = "TextGrid"

0
2.0
<exists>
2
"IntervalTier"
"words"
0
2.0
4
0
0.25
""
0.25
1.0
"hello"
1.0
1.8
"world"
1.8
2.0
"sil"
"IntervalTier"
"phones"
0
2.0
8
0
0.25
"sp"
0.25
0.5
"HH"
0.5
0.75
"EH"
0.75
1.0
"L"
1.0
1.3
"W"
1.3
1.6
"ER"
1.6
1.8
"D"
1.8
2.0
""
'''


def json_doc():
    return {
        "utterance": {"start": 0.0, "end": 2.0, "text": "hello world"},
        "words": [
            {"label": "hello", "start": 0.25, "end": 1.0},
            {"label": "world", "start": 1.0, "end": 1.8},
        ],
        "phonemes": [
            {"label": "HH", "start": 0.25, "end": 0.5, "word": 0},
            {"label": "EH", "start": 0.5, "end": 0.75, "word": 0},
            {"label": "L", "start": 0.75, "end": 1.0, "word": 0},
            {"label": "W", "start": 1.0, "end": 1.3, "word": 1},
            {"label": "ER", "start": 1.3, "end": 1.6, "word": 1},
            {"label": "D", "start": 1.6, "end": 1.8, "word": 1},
        ],
    }


def check_two_word_hierarchy(h):
    assert [w.label for w in h.words] == ["hello", "world"]
    assert [p.label for p in h.phonemes] == ["HH", "EH", "L", "W", "ER", "D"]
    assert h.word_of_phoneme == (0, 0, 0, 1, 1, 1)
    assert h.utterance.start_s == 0.0 and h.utterance.end_s == 2.0


def test_long_form_two_words_six_phonemes_silence_dropped():
    check_two_word_hierarchy(al.parse_textgrid(LONG_FORM))


def test_short_form_parses_identically():
    assert al.parse_textgrid(SHORT_FORM) == al.parse_textgrid(LONG_FORM)


def test_json_parses_same_hierarchy():
    check_two_word_hierarchy(al.parse_alignment_json(json.dumps(json_doc())))


def test_json_round_trip():
    h = al.parse_alignment_json(json.dumps(json_doc()))
    assert al.parse_alignment_json(al.serialize_alignment_json(h)) == h


def test_json_word_indices_rederived_from_containment():
    doc = json_doc()
    for p in doc["phonemes"]:
        p["word"] = 0  # stale indices must not survive the parse
    h = al.parse_alignment_json(json.dumps(doc))
    assert h.word_of_phoneme == (0, 0, 0, 1, 1, 1)


def test_straddling_phoneme_rejected():
    doc = json_doc()
    doc["phonemes"][2]["end"] = 1.2  # leaks 200 ms into the next word
    with pytest.raises(ContainmentError):
        al.parse_alignment_json(json.dumps(doc))


def test_boundary_jitter_snapped_to_word():
    doc = json_doc()
    doc["phonemes"][5]["end"] = 1.8005  # within the 1 ms tolerance
    h = al.parse_alignment_json(json.dumps(doc))
    assert h.phonemes[5].end_s == 1.8


def test_empty_phone_tier_gives_zero_phonemes():
    doc = json_doc()
    doc["phonemes"] = []
    h = al.parse_alignment_json(json.dumps(doc))
    assert len(h.phonemes) == 0
    assert len(h.words) == 2


def test_phones_without_words_rejected():
    doc = json_doc()
    doc["words"] = []
    with pytest.raises(ContainmentError):
        al.parse_alignment_json(json.dumps(doc))


def test_json_missing_field_reports_path():
    doc = json_doc()
    del doc["phonemes"][1]["word"]
    with pytest.raises(SchemaError) as exc:
        al.parse_alignment_json(json.dumps(doc))
    assert "$.phonemes[1]" in str(exc.value)


def test_json_start_not_before_end_rejected():
    doc = json_doc()
    doc["words"][0]["end"] = 0.25
    with pytest.raises(SchemaError) as exc:
        al.parse_alignment_json(json.dumps(doc))
    assert "start >= end" in str(exc.value)


def test_segment_validation():
    with pytest.raises(AlignmentValidationError):
        al.Segment("x", 1.0, 1.0)
    with pytest.raises(AlignmentValidationError):
        al.Segment("x", -0.1, 1.0)
    assert al.Segment("x", 0.5, 1.0).duration_s == 0.5


def test_hierarchy_rejects_nonmonotonic_word_membership():
    words = (al.Segment("a", 0.0, 1.0), al.Segment("b", 1.0, 2.0))
    phones = (al.Segment("P", 1.0, 2.0), al.Segment("Q", 0.0, 1.0))
    with pytest.raises(AlignmentValidationError):
        al.AlignmentHierarchy(
            utterance=al.Segment("a b", 0.0, 2.0),
            words=words,
            phonemes=phones,
            word_of_phoneme=(1, 0),
        )


def test_hierarchy_rejects_overlapping_words():
    words = (al.Segment("a", 0.0, 1.2), al.Segment("b", 1.0, 2.0))
    with pytest.raises(AlignmentValidationError):
        al.AlignmentHierarchy(
            utterance=al.Segment("a b", 0.0, 2.0),
            words=words,
            phonemes=(),
            word_of_phoneme=(),
        )


def test_missing_tier_lists_available():
    with pytest.raises(TierNotFoundError) as exc:
        al.parse_textgrid(LONG_FORM, phone_tier="segments")
    assert "words" in str(exc.value)


def test_not_a_textgrid():
    with pytest.raises(SchemaError):
        al.parse_textgrid("just some text")


def test_load_alignment_dispatches_on_content():
    assert al.load_alignment(json.dumps(json_doc())) == al.parse_alignment_json(
        json.dumps(json_doc())
    )
    assert al.load_alignment(LONG_FORM) == al.parse_textgrid(LONG_FORM)


def test_zero_length_intervals_dropped():
    # zero-length entries are aligner debris, not real phones
    text = LONG_FORM.replace(
        'xmin = 0.25\n            xmax = 0.5\n            text = "HH"',
        'xmin = 0.25\n            xmax = 0.25\n            text = "HH"',
    )
    h = al.parse_textgrid(text)
    assert [p.label for p in h.phonemes] == ["EH", "L", "W", "ER", "D"]


def test_synth_textgrid_round_trips():
    _, h = synth.synth_utterance("Happy", seed=5)
    parsed = al.parse_textgrid(synth.to_textgrid(h))
    assert parsed.words == h.words
    assert parsed.phonemes == h.phonemes
    assert parsed.word_of_phoneme == h.word_of_phoneme
