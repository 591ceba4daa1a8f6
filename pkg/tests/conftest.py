"""Shared fixtures: corpora and model bundles sized for exhaustive oracles."""

import numpy as np
import pytest

from compactner.autodiff import Rng, derive_seed
from compactner.data import Sentence, TagSet, build_vocab
from compactner.model import CRF, SOFTMAX, ModelBundle, TaggerConfig, init_params


TOY_SENTENCES = [
    Sentence(0, ["ana", "runs", "acme"], ["B-PER", "O", "B-ORG"]),
    Sentence(1, ["acme", "hired", "bo", "li"], ["B-ORG", "O", "B-PER", "I-PER"]),
    Sentence(2, ["nothing", "here"], ["O", "O"]),
    Sentence(3, ["ana"], ["B-PER"]),
]


@pytest.fixture
def toy_sentences():
    return [Sentence(s.id, list(s.tokens), list(s.gold_tags)) for s in TOY_SENTENCES]


@pytest.fixture
def toy_tagset():
    return TagSet(["O", "B-ORG", "B-PER", "I-ORG", "I-PER"])


@pytest.fixture
def toy_vocab(toy_sentences):
    return build_vocab(toy_sentences)


def small_config(vocab, tagset, classifier=SOFTMAX, **overrides):
    kwargs = dict(n_words=vocab.n_words, n_chars=vocab.n_chars, n_tags=len(tagset),
                  word_dim=8, char_dim=4, char_filters=4, char_window=3,
                  lstm_hidden=6, classifier=classifier, dropout_rate=0.5)
    kwargs.update(overrides)
    return TaggerConfig(**kwargs)


def small_bundle(sentences, tagset, classifier=SOFTMAX, seed=0, dtype=np.float32,
                 **overrides):
    vocab = build_vocab(sentences)
    config = small_config(vocab, tagset, classifier, **overrides)
    params = init_params(config, Rng(derive_seed(seed, "init")), dtype=dtype)
    return ModelBundle(params, config, vocab, tagset)


@pytest.fixture
def toy_bundle(toy_sentences, toy_tagset):
    return small_bundle(toy_sentences, toy_tagset)


@pytest.fixture
def toy_crf_bundle(toy_sentences, toy_tagset):
    return small_bundle(toy_sentences, toy_tagset, classifier=CRF)
