"""Synthetic ABSA corpora with known structure, for experiments and sanity tests.

Sentences are assembled from parts so aspect character spans are exact by
construction. Sentiment words determine the gold label, making the corpora
separable; the two-aspect generator writes opposite-polarity clauses whose
sentiment words sit strictly closer to their own aspect.
"""

from __future__ import annotations

import random

from .corpus import Dataset, Instance

POSITIVE_WORDS = ["great", "excellent", "fantastic", "superb", "delightful"]
NEGATIVE_WORDS = ["terrible", "awful", "horrible", "dreadful", "lousy"]
NEUTRAL_WORDS = ["average", "ordinary", "unremarkable", "standard", "plain"]
ASPECTS = [
    "battery", "screen", "camera", "keyboard", "speaker",
    "battery life", "touch pad", "charger", "display", "warranty",
]
TAILS = ["overall", "honestly", "frankly", "certainly", "definitely"]
# Connectors survive the bundled stop-word list, keeping the two clauses of a
# conflicting sentence far apart after preprocessing.
CONNECTORS = [
    ["meanwhile", "people", "say"],
    ["although", "everyone", "thinks"],
    ["whereas", "folks", "reckon"],
    ["yet", "reviewers", "claim"],
]

_WORDS_BY_LABEL = {-1: NEGATIVE_WORDS, 0: NEUTRAL_WORDS, 1: POSITIVE_WORDS}


def _sentence(prefix_words: list[str], aspect: str, suffix_words: list[str]) -> tuple[str, int, int]:
    """Join parts with single spaces; return (text, aspect_from, aspect_to)."""
    prefix = " ".join(prefix_words)
    start = len(prefix) + 1 if prefix else 0
    end = start + len(aspect)
    pieces = ([prefix] if prefix else []) + [aspect] + ([" ".join(suffix_words)] if suffix_words else [])
    return " ".join(pieces), start, end


def separable_corpus(n: int, seed: int, name: str = "synthetic") -> Dataset:
    """n single-aspect sentences whose sentiment word decides the label; classes balanced."""
    rng = random.Random(seed)
    instances = []
    for i in range(n):
        label = (-1, 0, 1)[i % 3]
        word = rng.choice(_WORDS_BY_LABEL[label])
        aspect = rng.choice(ASPECTS)
        tail = rng.choice(TAILS)
        text, frm, to = _sentence(["the"], aspect, ["is", word, tail])
        instances.append(
            Instance(id=i, text=text, aspect_term=aspect, aspect_char_span=(frm, to),
                     polarity=label)
        )
    return Dataset(name=name, instances=tuple(instances))


def conflicting_corpus(n_sentences: int, seed: int, name: str = "conflicting") -> Dataset:
    """Two-aspect sentences with opposite gold labels, two instances per sentence.

    Template: "the A1 is W1 <connector> the A2 is W2" where W1 and W2 carry
    opposite polarity; which clause is positive alternates.
    """
    rng = random.Random(seed)
    instances = []
    for i in range(n_sentences):
        a1, a2 = rng.sample(ASPECTS, 2)
        pos = rng.choice(POSITIVE_WORDS)
        neg = rng.choice(NEGATIVE_WORDS)
        connector = rng.choice(CONNECTORS)
        if i % 2 == 0:
            w1, l1, w2, l2 = pos, 1, neg, -1
        else:
            w1, l1, w2, l2 = neg, -1, pos, 1
        prefix1 = ["the"]
        text1, f1, t1 = _sentence(prefix1, a1, ["is", w1] + connector + ["the", a2, "is", w2])
        # the second aspect starts after "the a1 is w1 <connector> the "
        lead = " ".join(prefix1 + [a1, "is", w1] + connector + ["the"]) + " "
        f2 = len(lead)
        t2 = f2 + len(a2)
        assert text1[f2:t2] == a2
        instances.append(
            Instance(id=2 * i, text=text1, aspect_term=a1, aspect_char_span=(f1, t1), polarity=l1)
        )
        instances.append(
            Instance(id=2 * i + 1, text=text1, aspect_term=a2, aspect_char_span=(f2, t2), polarity=l2)
        )
    return Dataset(name=name, instances=tuple(instances))
