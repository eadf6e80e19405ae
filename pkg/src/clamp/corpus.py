"""ABC corpus handling: parsing, natural-language stripping, bar segmentation,
music-text pair ingestion, genre keyword voting, and corpus statistics."""

from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .errors import (
    EmptyCorpusError,
    EmptyScoreError,
    MissingKeyHeaderWarning,
    OversizedLineError,
    PairParseError,
)

HEADER_RE = re.compile(r"^[A-Za-z]:")

# ABC information fields carrying natural language (titles, composers, origin,
# lyrics, discography, notes...). `W`/`w` are lyric lines in either position.
STRIPPED_FIELDS = frozenset("TCOAZNGHBDFSWw")

# Longest-first so matching is maximal-munch.
BARLINE_TOKENS = ("|:", ":|", "||", "[|", "|]", "|")

MAX_BODY_LINE = 4096


def is_header_line(line: str) -> bool:
    return bool(HEADER_RE.match(line))


@dataclass
class Score:
    """A parsed ABC piece as an ordered list of raw lines.

    Header lines keep their `X:value` form; whether a line is a header is
    derivable (and body lines never look like headers), so the line list is
    the single source of truth and reconstruction is lossless.
    """

    lines: list[str]
    source_id: str = ""

    @property
    def headers(self) -> list[tuple[str, str]]:
        """Ordered (field-letter, value) pairs."""
        return [(ln[0], ln[2:]) for ln in self.lines if is_header_line(ln)]

    @property
    def body_lines(self) -> list[str]:
        return [ln for ln in self.lines if not is_header_line(ln)]

    def header_value(self, letter: str) -> Optional[str]:
        """Value of the first header with this field letter, if any."""
        for ln in self.lines:
            if ln.startswith(letter + ":"):
                return ln[2:]
        return None

    def to_text(self) -> str:
        return "\n".join(self.lines) + "\n"


@dataclass(frozen=True)
class PatchText:
    """One segment of a score: a full header line or one bar."""

    text: str
    kind: str  # "header" | "bar"


@dataclass
class MusicTextPair:
    music: Score
    texts: list[str]
    labels: dict[str, str] = field(default_factory=dict)


def parse_score(text: str, source_id: str = "") -> Score:
    """Parse raw ABC text into a Score.

    Lines matching `^[A-Za-z]:` are headers, everything else is body; order
    is preserved. CRLF is normalized to LF. Raises EmptyScoreError on
    empty/whitespace input and warns (MissingKeyHeaderWarning) when no `K:`
    header is present.
    """
    normalized = text.replace("\r\n", "\n")
    if not normalized.strip():
        raise EmptyScoreError("score text is empty")
    lines = normalized.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    score = Score(lines=lines, source_id=source_id)
    if score.header_value("K") is None:
        warnings.warn(
            f"score {source_id or '<anonymous>'} has no K: header",
            MissingKeyHeaderWarning,
            stacklevel=2,
        )
    return score


def strip_natural_language(score: Score) -> Score:
    """Remove natural-language content: header fields in STRIPPED_FIELDS and
    lyric lines (`w:`/`W:`), leaving everything else byte-identical. Idempotent."""
    kept = []
    for ln in score.lines:
        if is_header_line(ln) and ln[0] in STRIPPED_FIELDS:
            continue
        if ln.startswith("w:") or ln.startswith("W:"):
            continue
        kept.append(ln)
    return Score(lines=kept, source_id=score.source_id)


def _match_barline(line: str, i: int) -> Optional[str]:
    for tok in BARLINE_TOKENS:
        if line.startswith(tok, i):
            return tok
    return None


def _barline_ws_only(segment: str) -> bool:
    i = 0
    while i < len(segment):
        tok = _match_barline(segment, i)
        if tok:
            i += len(tok)
        elif segment[i].isspace():
            i += 1
        else:
            return False
    return True


def split_bars(line: str) -> list[str]:
    """Split one body line into bar segments.

    Barline tokens match maximal-munch among BARLINE_TOKENS. A split happens
    immediately before a barline token preceded by at least one non-barline,
    non-whitespace character since the last split. A final segment holding
    only barlines and whitespace is merged into its predecessor. Joining the
    result reproduces the line exactly.
    """
    if len(line) > MAX_BODY_LINE:
        raise OversizedLineError(f"body line of {len(line)} chars exceeds {MAX_BODY_LINE}")
    segments = []
    start = 0
    has_content = False
    i = 0
    while i < len(line):
        tok = _match_barline(line, i)
        if tok:
            if has_content:
                segments.append(line[start:i])
                start = i
                has_content = False
            i += len(tok)
        else:
            if not line[i].isspace():
                has_content = True
            i += 1
    segments.append(line[start:])
    if len(segments) >= 2 and _barline_ws_only(segments[-1]):
        tail = segments.pop()
        segments[-1] += tail
    return segments


def segment_score(score: Score) -> list[PatchText]:
    """Segment a (stripped) score into header and bar patches, in score order."""
    patches = []
    for ln in score.lines:
        if is_header_line(ln):
            patches.append(PatchText(ln, "header"))
        else:
            patches.extend(PatchText(seg, "bar") for seg in split_bars(ln))
    return patches


def _parse_pair_record(record: dict, lineno: int, default_id: str) -> MusicTextPair:
    abc = record.get("abc")
    if not isinstance(abc, str):
        raise PairParseError(lineno, "missing or non-string 'abc' field")
    texts = record.get("texts")
    if not isinstance(texts, list) or not texts:
        raise PairParseError(lineno, "'texts' must be a non-empty array")
    if not all(isinstance(t, str) and t.strip() for t in texts):
        raise PairParseError(lineno, "candidate texts must be non-empty strings")
    labels = record.get("labels", {})
    if not isinstance(labels, dict):
        raise PairParseError(lineno, "'labels' must be an object")
    source_id = record.get("id", default_id)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MissingKeyHeaderWarning)
            score = parse_score(abc, source_id=source_id)
    except EmptyScoreError as exc:
        raise PairParseError(lineno, str(exc)) from exc
    return MusicTextPair(
        music=strip_natural_language(score),
        texts=[t.strip() for t in texts],
        labels={str(k): str(v) for k, v in labels.items()},
    )


def load_pairs(path: str | Path) -> list[MusicTextPair]:
    """Load music-text pairs from a JSONL file.

    One record per line: {"abc": str, "texts": [str, ...], "labels": {...}?,
    "id": str?}. Scores are parsed and stripped on load. Blank lines are
    skipped; malformed lines raise PairParseError with their line number.
    """
    pairs = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise PairParseError(lineno, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise PairParseError(lineno, "record must be a JSON object")
            pairs.append(_parse_pair_record(record, lineno, default_id=f"p{lineno:06d}"))
    return pairs


def save_pairs(pairs: Iterable[MusicTextPair], path: str | Path) -> None:
    """Write pairs back to the JSONL format accepted by load_pairs."""
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            record = {
                "id": pair.music.source_id,
                "abc": pair.music.to_text(),
                "texts": pair.texts,
            }
            if pair.labels:
                record["labels"] = pair.labels
            fh.write(json.dumps(record, sort_keys=True) + "\n")


class GenreKeywordTable:
    """Genre -> lowercase keywords; keywords must be unique across the table."""

    def __init__(self, table: dict[str, list[str]]):
        self.table = {genre: [kw.lower() for kw in kws] for genre, kws in table.items()}
        seen: dict[str, str] = {}
        for genre, kws in self.table.items():
            for kw in kws:
                if kw in seen:
                    raise ValueError(f"keyword {kw!r} appears under both {seen[kw]} and {genre}")
                seen[kw] = genre
        self._patterns = {
            genre: [re.compile(rf"(?<![a-z0-9]){re.escape(kw)}(?![a-z0-9])") for kw in kws]
            for genre, kws in self.table.items()
        }

    @classmethod
    def from_json(cls, path: str | Path) -> "GenreKeywordTable":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(json.load(fh))

    def match_counts(self, text: str) -> dict[str, int]:
        lowered = text.lower()
        return {
            genre: sum(len(pat.findall(lowered)) for pat in pats)
            for genre, pats in self._patterns.items()
        }


def assign_genre(text: str, table: GenreKeywordTable) -> Optional[str]:
    """Whole-word, case-insensitive keyword voting; the winner must have
    strictly the most matches, otherwise None (zero matches or a tie)."""
    counts = table.match_counts(text)
    best = max(counts.values(), default=0)
    if best == 0:
        return None
    winners = [genre for genre, c in counts.items() if c == best]
    return winners[0] if len(winners) == 1 else None


@dataclass(frozen=True)
class Summary:
    mean: float
    std: float  # population standard deviation
    max: float
    min: float


@dataclass(frozen=True)
class CorpusStats:
    count: int
    abc_chars: Summary
    bar_patches: Summary
    text_words: Summary

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "abc_chars": vars(self.abc_chars),
            "bar_patches": vars(self.bar_patches),
            "text_words": vars(self.text_words),
        }

    def to_table(self) -> str:
        rows = [
            ("encoding", "mean", "std", "max", "min"),
            ("abc_chars",) + _fmt(self.abc_chars),
            ("bar_patches",) + _fmt(self.bar_patches),
            ("text_words",) + _fmt(self.text_words),
        ]
        widths = [max(len(r[c]) for r in rows) for c in range(5)]
        return "\n".join(
            "  ".join(cell.rjust(w) if c else cell.ljust(w) for c, (cell, w) in enumerate(zip(r, widths)))
            for r in rows
        )


def _fmt(s: Summary) -> tuple[str, str, str, str]:
    return (f"{s.mean:.2f}", f"{s.std:.2f}", f"{s.max:.0f}", f"{s.min:.0f}")


def _summary(values: list[float]) -> Summary:
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return Summary(mean=mean, std=var**0.5, max=max(values), min=min(values))


def corpus_stats(pairs: list[MusicTextPair]) -> CorpusStats:
    """Per-piece raw ABC character count, bar-patch count, and whitespace
    token count of the concatenated candidate texts, aggregated over the corpus."""
    if not pairs:
        raise EmptyCorpusError("cannot compute statistics of an empty corpus")
    chars, patches, words = [], [], []
    for pair in pairs:
        chars.append(float(len("\n".join(pair.music.lines))))
        patches.append(float(len(segment_score(pair.music))))
        words.append(float(len(" ".join(pair.texts).split())))
    return CorpusStats(
        count=len(pairs),
        abc_chars=_summary(chars),
        bar_patches=_summary(patches),
        text_words=_summary(words),
    )
