"""Aspect-aware integer encodings, padding, and the bag-of-words / TF-IDF vectorizers.

The integer encodings operate on token positions. In "phrase" views the whole
aspect term counts as a single position regardless of its length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Collection, Iterable, Literal, Sequence

import numpy as np

from .textproc import TokenizedInstance, Vocabulary

AspectMode = Literal["per_token", "phrase"]


class TruncationError(ValueError):
    """Padding would truncate protected (aspect) entries."""


@dataclass(frozen=True)
class AspectIdMap:
    """Unique positive id per distinct aspect phrase, in first-appearance order."""

    phrase_to_id: dict[str, int]

    def id_for(self, ti: TokenizedInstance) -> int:
        """Aspect id of an instance, or 0 when the phrase was never assigned one."""
        return self.phrase_to_id.get(aspect_phrase(ti), 0)


@dataclass(frozen=True)
class FeatureVector:
    """Sparse feature vector: index -> value, with explicit zeros omitted."""

    dim: int
    values: dict[int, float]

    def __post_init__(self):
        for idx, val in self.values.items():
            if not 0 <= idx < self.dim:
                raise ValueError(f"feature index {idx} outside dimensionality {self.dim}")
            if val == 0.0:
                raise ValueError(f"explicit zero stored at index {idx}")

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim)
        for idx, val in self.values.items():
            dense[idx] = val
        return dense


def to_matrix(vectors: Sequence[FeatureVector]) -> np.ndarray:
    """Densify a batch of FeatureVectors; all must share one dimensionality."""
    if not vectors:
        return np.zeros((0, 0))
    dim = vectors[0].dim
    for fv in vectors:
        if fv.dim != dim:
            raise ValueError(f"mixed feature dimensionalities: {fv.dim} vs {dim}")
    mat = np.zeros((len(vectors), dim))
    for row, fv in enumerate(vectors):
        for idx, val in fv.values.items():
            mat[row, idx] = val
    return mat


def aspect_phrase(ti: TokenizedInstance) -> str:
    return " ".join(ti.aspect_tokens)


def assign_aspect_ids(corpus: Iterable[TokenizedInstance]) -> AspectIdMap:
    """Give each distinct aspect phrase the next free id, starting at 1."""
    phrase_to_id: dict[str, int] = {}
    for ti in corpus:
        phrase = aspect_phrase(ti)
        if phrase not in phrase_to_id:
            phrase_to_id[phrase] = len(phrase_to_id) + 1
    return AspectIdMap(phrase_to_id=phrase_to_id)


def id_encode(ti: TokenizedInstance, aspect_id: int, mode: AspectMode = "per_token") -> list[int]:
    """Zero vector with the aspect id written at the aspect location(s).

    "per_token" keeps one entry per token; "phrase" collapses the aspect term
    to a single entry.
    """
    if aspect_id < 1:
        raise ValueError(f"aspect_id must be >= 1, got {aspect_id}")
    start, end = ti.aspect_token_span
    if mode == "per_token":
        return [aspect_id if start <= i < end else 0 for i in range(len(ti.tokens))]
    if mode == "phrase":
        return [0] * start + [aspect_id] + [0] * (len(ti.tokens) - end)
    raise ValueError(f"unknown mode {mode!r}")


def bit_mask(ti: TokenizedInstance) -> list[int]:
    """1 at every aspect token position, 0 elsewhere."""
    start, end = ti.aspect_token_span
    return [1 if start <= i < end else 0 for i in range(len(ti.tokens))]


def location_encode(ti: TokenizedInstance) -> list[int]:
    """Distance of each context token to the aspect, the aspect counting as one position.

    The aspect itself is excluded, so the output has collapsed_length - 1 entries,
    in original token order, each >= 1.
    """
    start, end = ti.aspect_token_span
    width = end - start
    out = []
    for i in range(len(ti.tokens)):
        if start <= i < end:
            continue
        collapsed = i if i < start else i - width + 1
        out.append(abs(collapsed - start))
    return out


def zero_pad(
    seq: Sequence[int], max_len: int, protect: Collection[int] | None = None
) -> list[int]:
    """Post-pad with zeros to exactly max_len, truncating the tail if needed.

    protect lists the indices that must survive truncation; by default every
    nonzero position is protected, which for aspect sequences and bit masks
    means the aspect can never be silently dropped.
    """
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    if len(seq) > max_len:
        if protect is None:
            protect = [i for i, v in enumerate(seq) if v != 0]
        lost = [i for i in protect if i >= max_len]
        if lost:
            raise TruncationError(
                f"truncating to {max_len} would drop protected entries at {lost}"
            )
        return list(seq[:max_len])
    return list(seq) + [0] * (max_len - len(seq))


def default_max_len(lengths: Sequence[int], percentile: float = 95.0) -> int:
    """Padding length: the given percentile of training lengths, rounded up."""
    if not lengths:
        raise ValueError("no lengths supplied")
    return int(math.ceil(float(np.percentile(np.asarray(lengths), percentile))))


def one_hot_vector(ti: TokenizedInstance, vocab: Vocabulary) -> FeatureVector:
    """Binary bag-of-words over 2V slots: sentence presence block, then aspect presence block.

    The second block marks vocabulary tokens occurring inside the aspect term,
    giving aspect-blind classifiers an aspect-identity channel.
    """
    size = vocab.size
    values: dict[int, float] = {}
    for tok in ti.tokens:
        tid = vocab.id(tok)
        if tid:
            values[tid - 1] = 1.0
    for tok in ti.aspect_tokens:
        tid = vocab.id(tok)
        if tid:
            values[size + tid - 1] = 1.0
    return FeatureVector(dim=2 * size, values=values)


@dataclass(frozen=True)
class TfIdfModel:
    """Fitted idf weights: idf[t] = ln((1 + N) / (1 + df_t)) + 1, entry 0 unused."""

    vocab: Vocabulary
    idf: np.ndarray  # shape (V + 1,)
    n_docs: int


def tfidf_fit(corpus: list[TokenizedInstance], vocab: Vocabulary) -> TfIdfModel:
    """Count document frequencies over the corpus and derive smoothed idf weights."""
    if not corpus:
        raise ValueError("cannot fit tf-idf on an empty corpus")
    n = len(corpus)
    df = np.zeros(vocab.size + 1)
    for ti in corpus:
        for tid in {vocab.id(tok) for tok in ti.tokens}:
            if tid:
                df[tid] += 1
    idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
    idf[0] = 0.0
    return TfIdfModel(vocab=vocab, idf=idf, n_docs=n)


def tfidf_transform(model: TfIdfModel, ti: TokenizedInstance) -> FeatureVector:
    """Raw term counts times idf, L2-normalized unless the vector is all zero."""
    counts: dict[int, int] = {}
    for tok in ti.tokens:
        tid = model.vocab.id(tok)
        if tid:
            counts[tid] = counts.get(tid, 0) + 1
    weights = {tid - 1: cnt * model.idf[tid] for tid, cnt in counts.items()}
    norm = math.sqrt(sum(w * w for w in weights.values()))
    if norm > 0.0:
        weights = {idx: w / norm for idx, w in weights.items()}
    return FeatureVector(dim=model.vocab.size, values=weights)


def location_feature_vector(ti: TokenizedInstance, aspect_id: int, max_len: int) -> FeatureVector:
    """Fixed-length "LE" features for the classical models.

    The padded phrase-mode aspect sequence concatenated with the padded
    location sequence, 2 * max_len entries total. aspect_id 0 (an aspect never
    seen at fit time) yields an all-zero first half. Location tails beyond
    max_len are truncated; a truncated aspect entry raises TruncationError.
    """
    if aspect_id >= 1:
        aseq = zero_pad(id_encode(ti, aspect_id, "phrase"), max_len)
    else:
        start, _ = ti.aspect_token_span
        aseq = zero_pad([0] * ti.collapsed_length, max_len, protect=[start])
    lseq = zero_pad(location_encode(ti), max_len, protect=())
    values = {i: float(v) for i, v in enumerate(aseq + lseq) if v}
    return FeatureVector(dim=2 * max_len, values=values)
