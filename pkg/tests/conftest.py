"""Shared fixtures: a small synthetic corpus, a trained model bank, and
matrix factories. Session-scoped where training or disk writes are involved
so the expensive steps run once."""

import numpy as np
import pytest

from hedkit import cli, hed, ranker, synth
from hedkit.features import N_DIMS


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    synth.write_corpus(root, per_class=3, seed=11)
    return root


@pytest.fixture(scope="session")
def manifest_path(corpus_dir):
    return corpus_dir / "manifest.csv"


@pytest.fixture(scope="session")
def models_dir(tmp_path_factory, manifest_path):
    out = tmp_path_factory.mktemp("models")
    rc = cli.main([
        "train",
        "--manifest", str(manifest_path),
        "--models", str(out),
        "--seed", "7",
    ])
    assert rc == 0
    return out


@pytest.fixture(scope="session")
def bank(models_dir):
    return hed.load_bank(models_dir)


def _toy_model(emotion: str, level: str, seed: int) -> ranker.RankingModel:
    rng = np.random.default_rng(seed)
    w = rng.normal(0.0, 0.2, N_DIMS)
    return ranker.RankingModel(
        emotion=emotion,
        level=level,
        w=w,
        feature_mean=np.zeros(N_DIMS),
        feature_std=np.ones(N_DIMS),
        score_min=-40.0,
        score_max=40.0,
        trained_on="toy",
    )


@pytest.fixture(scope="session")
def toy_bank():
    """Deterministic hand-built bank; scores are arbitrary but valid, which
    is all the structural matrix tests need."""
    emotions = ("Angry", "Sad")
    models = {
        (e, lvl): _toy_model(e, lvl, seed=100 * ei + li)
        for ei, e in enumerate(emotions)
        for li, lvl in enumerate(ranker.LEVELS)
    }
    return hed.ModelBank(emotions=emotions, models=models)


def make_hed(n_words=2, phones_per_word=2, emotions=("Angry", "Sad"), seed=0):
    """Random valid matrix: utterance row duplicated, word rows replicated."""
    rng = np.random.default_rng(seed)
    k = len(emotions)
    n = n_words * phones_per_word
    utt = rng.uniform(0.0, 1.0, k)
    words = rng.uniform(0.0, 1.0, (n_words, k))
    phones = rng.uniform(0.0, 1.0, (n, k))
    word_of = [i // phones_per_word for i in range(n)]
    rows = np.array([
        np.concatenate([utt, words[word_of[i]], phones[i]]) for i in range(n)
    ])
    return hed.HedMatrix(
        phoneme_labels=tuple(f"P{i}" for i in range(n)),
        word_of_phoneme=tuple(word_of),
        emotions=tuple(emotions),
        rows=rows,
    )


@pytest.fixture
def hed_factory():
    return make_hed
