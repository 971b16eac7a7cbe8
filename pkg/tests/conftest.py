import pytest

from vwords import synth
from vwords.classify import TrainingSet
from vwords.pipeline import (
    load_clip,
    read_annotations,
    run_pipeline,
    save_training_set,
)


@pytest.fixture(scope="session")
def word_corpus(tmp_path_factory):
    """Two recorded repetitions of the five scripted words, on disk."""
    root = tmp_path_factory.mktemp("corpus")
    dirs = synth.write_word_corpus(root, reps=2, seed=31)
    return dirs


@pytest.fixture(scope="session")
def word_store(tmp_path_factory, word_corpus):
    """Training store built from the session corpus."""
    store = tmp_path_factory.mktemp("store") / "train"
    entries = []
    for d in word_corpus:
        clip = load_clip(d)
        anns = read_annotations(d / "annotations.txt")
        entries.extend(run_pipeline(clip, anns))
    save_training_set(TrainingSet(entries), store)
    return store
