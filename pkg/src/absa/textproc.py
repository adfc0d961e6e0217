"""Tokenization, stop-word removal with aspect protection, and vocabulary building."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable

from .corpus import Instance

# Characters replaced by a space before splitting. Tokens are lowercased and
# split on runs of spaces; the apostrophe deliberately survives.
TOKEN_FILTER = '!"#$%&()*+,-./:;<=>?@[\\]^_`{|}~\t\n'

_FILTER_TABLE = str.maketrans({c: " " for c in TOKEN_FILTER})
_SEPARATORS = frozenset(TOKEN_FILTER) | {" "}

PAD_ID = 0


class AspectAlignmentError(ValueError):
    """The aspect character span cannot be mapped onto the token sequence."""


def tokenize(text: str) -> list[str]:
    """Lowercase, replace filtered characters by spaces, split, drop empties."""
    cleaned = text.lower().translate(_FILTER_TABLE)
    return [tok for tok in cleaned.split(" ") if tok]


def token_spans(text: str) -> list[tuple[int, int]]:
    """Half-open character spans of tokenize(text)'s tokens, in original-text offsets."""
    spans = []
    start = None
    for i, ch in enumerate(text):
        if ch in _SEPARATORS:
            if start is not None:
                spans.append((start, i))
                start = None
        elif start is None:
            start = i
    if start is not None:
        spans.append((start, len(text)))
    return spans


def align_aspect_span(
    text: str, aspect_char_span: tuple[int, int], tokens: list[str]
) -> tuple[int, int]:
    """Map a character span to the minimal covering token range.

    Requires tokens == tokenize(text). Raises AspectAlignmentError when no
    token overlaps the span (aspect erased by the filter) or when the covered
    tokens do not reproduce the tokenized aspect (misplaced annotation).
    """
    frm, to = aspect_char_span
    spans = token_spans(text)
    covering = [i for i, (s, e) in enumerate(spans) if s < to and e > frm]
    if not covering:
        raise AspectAlignmentError(
            f"aspect chars [{frm},{to}) of {text!r} contain no token characters"
        )
    start, end = covering[0], covering[-1] + 1
    aspect_tokens = tokenize(text[frm:to])
    if tokens[start:end] != aspect_tokens:
        raise AspectAlignmentError(
            f"aspect {text[frm:to]!r} aligns to tokens {tokens[start:end]!r}; "
            "the span does not cover whole tokens"
        )
    return (start, end)


@dataclass
class TokenizedInstance:
    """Lowercased tokens, the aspect's token range, and the gold polarity."""

    tokens: list[str]
    aspect_token_span: tuple[int, int]
    polarity: int

    def __post_init__(self):
        start, end = self.aspect_token_span
        if not (0 <= start < end <= len(self.tokens)):
            raise ValueError(
                f"aspect token span [{start},{end}) invalid for {len(self.tokens)} tokens"
            )

    @property
    def aspect_tokens(self) -> list[str]:
        start, end = self.aspect_token_span
        return self.tokens[start:end]

    @property
    def collapsed_length(self) -> int:
        """Token count with the whole aspect counted as a single position."""
        start, end = self.aspect_token_span
        return len(self.tokens) - (end - start) + 1


def tokenize_instance(instance: Instance, stoplist: Iterable[str] | None = None) -> TokenizedInstance:
    """Tokenize an Instance and locate its aspect; optionally drop stop words."""
    tokens = tokenize(instance.text)
    span = align_aspect_span(instance.text, instance.aspect_char_span, tokens)
    ti = TokenizedInstance(tokens=tokens, aspect_token_span=span, polarity=instance.polarity)
    if stoplist is not None:
        ti = remove_stopwords(ti, set(stoplist))
    return ti


def remove_stopwords(ti: TokenizedInstance, stoplist: set[str]) -> TokenizedInstance:
    """Drop stoplisted tokens, but never tokens inside the aspect span."""
    start, end = ti.aspect_token_span
    kept = [
        tok
        for i, tok in enumerate(ti.tokens)
        if start <= i < end or tok not in stoplist
    ]
    kept_before = sum(1 for tok in ti.tokens[:start] if tok not in stoplist)
    new_span = (kept_before, kept_before + (end - start))
    return TokenizedInstance(tokens=kept, aspect_token_span=new_span, polarity=ti.polarity)


@dataclass(frozen=True)
class Vocabulary:
    """Bijection between tokens and ids 1..size; id 0 is reserved for padding."""

    token_to_id: dict[str, int]
    id_to_token: tuple[str, ...]  # index 0 holds the empty padding slot

    @property
    def size(self) -> int:
        return len(self.token_to_id)

    def id(self, token: str) -> int:
        """Token id, or PAD_ID (0) for out-of-vocabulary tokens."""
        return self.token_to_id.get(token, PAD_ID)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id


def build_vocab(corpus: list[TokenizedInstance], min_freq: int = 1) -> Vocabulary:
    """Assign ids 1..V by descending corpus frequency, ties broken lexicographically."""
    if not corpus:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    if min_freq < 1:
        raise ValueError(f"min_freq must be >= 1, got {min_freq}")
    counts = Counter()
    for ti in corpus:
        counts.update(ti.tokens)
    ranked = sorted(
        ((tok, c) for tok, c in counts.items() if c >= min_freq),
        key=lambda item: (-item[1], item[0]),
    )
    token_to_id = {tok: i + 1 for i, (tok, _) in enumerate(ranked)}
    return Vocabulary(token_to_id=token_to_id, id_to_token=("",) + tuple(t for t, _ in ranked))


def load_stopwords(path: str | Path) -> set[str]:
    """Read a stop-word file: one lowercase token per line, '#' lines are comments."""
    words = set()
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if word and not word.startswith("#"):
                words.add(word)
    return words


def default_stopwords() -> set[str]:
    """The stop-word list bundled with the package."""
    text = resources.files("absa").joinpath("data/stopwords.txt").read_text(encoding="utf-8")
    return {w for w in (line.strip() for line in text.splitlines()) if w and not w.startswith("#")}
