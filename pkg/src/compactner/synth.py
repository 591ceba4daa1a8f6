"""Seeded synthetic pattern-entity corpora.

Words are random syllable strings assigned to entity lexicons at random,
so surface form carries no type signal. Sentences come from two kinds of
template: typed frames whose slots always hold one entity type (the
surrounding words give the answer away) and ambiguous frames whose slots
are filled from any lexicon, where only knowing the word's lexicon
helps. A model trained on a small labeled slice learns the frames but
not the lexicons; lexicon knowledge has to arrive some other way, which
is exactly the effect teacher-guided training is supposed to produce.
"""

from .autodiff import Rng, derive_seed
from .data import Sentence, TagSet

_SYLLABLES = [c + v for c in "bdfgklmnprstvz" for v in "aeiou"]


def _make_words(rng, count, seen, prefix="", forbidden_prefixes=()):
    """Unique syllable words; ``seen`` is shared so pools stay disjoint."""
    out = []
    while len(out) < count:
        n = 1 + int(rng.integers(0, 2)) if prefix else 2 + int(rng.integers(0, 2))
        picks = rng.integers(0, len(_SYLLABLES), size=n)
        word = prefix + "".join(_SYLLABLES[int(i)] for i in picks)
        if word in seen or any(word.startswith(p) for p in forbidden_prefixes):
            continue
        seen.add(word)
        out.append(word)
    return out


class CorpusFactory:
    """One seeded universe of lexicons and templates to draw corpora from."""

    def __init__(self, seed, entity_types=("ORG", "PER"), entity_words=120,
                 context_words=60, typed_templates=4, ambiguous_templates=4,
                 two_word_rate=0.3, type_markers=None):
        """``type_markers`` (type -> syllable prefix), when given, stamps
        every entity word with its type's prefix and keeps context words
        prefix-free: tags become readable off the surface form, which the
        default (no markers) deliberately prevents."""
        self.seed = seed
        self.entity_types = tuple(entity_types)
        self.two_word_rate = two_word_rate
        if type_markers is not None and set(type_markers) != set(self.entity_types):
            raise ValueError("type_markers must cover exactly the entity types")
        rng = Rng(derive_seed(seed, "synth", "lexicon"))
        seen = set()
        markers = tuple(type_markers.values()) if type_markers else ()
        self.lexicons = {
            t: _make_words(rng, entity_words, seen,
                           prefix=type_markers[t] if type_markers else "")
            for t in self.entity_types
        }
        self.context = _make_words(rng, context_words, seen,
                                   forbidden_prefixes=markers)
        self.templates = []
        for i in range(typed_templates):
            etype = self.entity_types[i % len(self.entity_types)]
            self.templates.append(self._build_template(rng, etype))
        for _ in range(ambiguous_templates):
            self.templates.append(self._build_template(rng, None))

    def _build_template(self, rng, etype):
        """A template is a list of ("w", word) and ("slot", type-or-None)."""
        n_ctx = 3 + int(rng.integers(0, 3))
        n_slots = 1 + int(rng.integers(0, 2))
        items = [("w", self.context[int(rng.integers(0, len(self.context)))])
                 for _ in range(n_ctx)]
        items += [("slot", etype)] * n_slots
        order = rng.permutation(len(items))
        return [items[int(j)] for j in order]

    def tagset(self):
        labels = ["O"]
        for t in self.entity_types:
            labels += [f"B-{t}", f"I-{t}"]
        return TagSet(labels)

    def sentences(self, count, start_id=0, key="train"):
        """Draw ``count`` sentences; the stream is fixed by (seed, key)."""
        rng = Rng(derive_seed(self.seed, "synth", key))
        out = []
        for i in range(count):
            template = self.templates[int(rng.integers(0, len(self.templates)))]
            tokens, tags = [], []
            for kind, value in template:
                if kind == "w":
                    tokens.append(value)
                    tags.append("O")
                    continue
                etype = value
                if etype is None:
                    etype = self.entity_types[int(rng.integers(0, len(self.entity_types)))]
                lexicon = self.lexicons[etype]
                span_len = 2 if rng.random() < self.two_word_rate else 1
                for j in range(span_len):
                    tokens.append(lexicon[int(rng.integers(0, len(lexicon)))])
                    tags.append(("B-" if j == 0 else "I-") + etype)
            out.append(Sentence(start_id + i, tokens, tags))
        return out


def overfit_corpus(count=50, seed=0):
    """A small corpus a capable trainer must drive to F1 100; returns
    (sentences, tagset).

    Entity words carry a type-marker prefix here, so the tag is a
    function of the surface form and zero training error is reachable
    quickly. That is the opposite choice from the default factory, whose
    corpora keep surface forms uninformative on purpose.
    """
    factory = CorpusFactory(seed, entity_words=6, context_words=10,
                            type_markers={"ORG": "zu", "PER": "ve"})
    rng = Rng(derive_seed(seed, "synth", "overfit"))
    sentences = []
    for i in range(count):
        tokens, tags = [], []
        for _ in range(3):
            tokens.append(factory.context[int(rng.integers(0, len(factory.context)))])
            tags.append("O")
            if rng.random() < 0.8:
                etype = factory.entity_types[int(rng.integers(0, 2))]
                lexicon = factory.lexicons[etype]
                tokens.append(lexicon[int(rng.integers(0, len(lexicon)))])
                tags.append("B-" + etype)
        sentences.append(Sentence(i, tokens, tags))
    return sentences, factory.tagset()


def bench_corpus(count, seed=0):
    """Throughput-measurement text; returns (sentences, tagset)."""
    factory = CorpusFactory(seed)
    return factory.sentences(count, key="bench"), factory.tagset()
