"""Text-side preparation: text dropout augmentation and a dependency-free
whitespace tokenizer with per-character fallback for unknown words."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import EmptyCandidatesError

PAD_ID = 0
UNK_ID = 1
CLS_ID = 2
SPECIALS = ("[PAD]", "[UNK]", "[CLS]")
MAX_TEXT_LEN = 128


@dataclass
class TextDropoutConfig:
    enabled: bool = True
    seed: int = 0


def text_dropout(candidates: list[str], rng: np.random.Generator) -> str:
    """Concatenate a uniformly random K of the L candidates in shuffled order.

    K is uniform on {1..L}; the shuffle is a Fisher-Yates pass driven by the
    given PCG64 generator, so results are reproducible across platforms.
    """
    if not candidates:
        raise EmptyCandidatesError("text dropout needs at least one candidate")
    count = int(rng.integers(1, len(candidates) + 1))
    order = rng.permutation(len(candidates))
    return " ".join(candidates[i] for i in order[:count])


def concat_candidates(candidates: list[str]) -> str:
    """Dropout-disabled path: all candidates in stored order."""
    if not candidates:
        raise EmptyCandidatesError("need at least one candidate")
    return " ".join(candidates)


def pair_rng(global_seed: int, pair_index: int) -> np.random.Generator:
    """Per-pair generator so augmentation parallelizes deterministically."""
    return np.random.default_rng(global_seed ^ pair_index)


@dataclass
class TextTokens:
    ids: np.ndarray  # int64, length <= MAX_TEXT_LEN, starts with [CLS]
    mask: np.ndarray  # uint8, ones over real tokens

    def __len__(self) -> int:
        return len(self.ids)


class TextVocabulary:
    """Lowercased word vocabulary with single characters for OOV fallback.

    Ids 0..2 are [PAD]/[UNK]/[CLS]; remaining entries are sorted
    lexicographically so id assignment is deterministic.
    """

    def __init__(self, entries: list[str]):
        self.entries = list(entries)
        self._ids = {entry: i + len(SPECIALS) for i, entry in enumerate(self.entries)}

    def __len__(self) -> int:
        return len(self.entries) + len(SPECIALS)

    @classmethod
    def build(cls, texts: Iterable[str]) -> "TextVocabulary":
        words: set[str] = set()
        chars: set[str] = set()
        for text in texts:
            for word in text.lower().split():
                words.add(word)
                chars.update(word)
        return cls(sorted(words | chars))

    def tokenize(self, text: str, max_len: int = MAX_TEXT_LEN) -> TextTokens:
        """[CLS] + word ids, falling back to per-character ids for unknown
        words (unknown characters map to [UNK]); truncated to max_len."""
        ids = [CLS_ID]
        for word in text.lower().split():
            if word in self._ids:
                ids.append(self._ids[word])
            else:
                ids.extend(self._ids.get(ch, UNK_ID) for ch in word)
        ids = ids[:max_len]
        return TextTokens(
            ids=np.asarray(ids, dtype=np.int64),
            mask=np.ones(len(ids), dtype=np.uint8),
        )

    def save(self, path: str | Path) -> None:
        """One entry per line, id = line number; the first three lines are
        the special token literals."""
        with open(path, "w", encoding="utf-8") as fh:
            for entry in (*SPECIALS, *self.entries):
                fh.write(entry + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "TextVocabulary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if tuple(lines[:3]) != SPECIALS:
            raise ValueError("vocabulary file must start with the special token literals")
        return cls(lines[3:])
