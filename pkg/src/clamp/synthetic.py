"""Synthetic music-text corpus whose texts describe key signature and meter.

Small enough to train in minutes, structured enough that retrieval and
zero-shot classification have real signal: the key shapes the note
distribution (tonic-triad bias, explicitly spelled accidentals) and sits in
the K: header; the meter fixes the notes per bar and sits in the M: header;
the candidate texts mention both in varied phrasings.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .corpus import MusicTextPair, parse_score, save_pairs, strip_natural_language

KEYS = ("C", "G", "D", "A", "E", "F", "Bb", "Eb")
METERS = {"2/4": "polka", "3/4": "waltz", "4/4": "march", "6/8": "jig"}

# Major scales spelled with explicit accidentals (redundant under the key
# signature but legal ABC) so every key leaves a distinct trace in the notes.
_SCALES = {
    "C": ["C", "D", "E", "F", "G", "A", "B"],
    "G": ["G", "A", "B", "C", "D", "E", "^F"],
    "D": ["D", "E", "^F", "G", "A", "B", "^C"],
    "A": ["A", "B", "^C", "D", "E", "^F", "^G"],
    "E": ["E", "^F", "^G", "A", "B", "^C", "^D"],
    "F": ["F", "G", "A", "_B", "C", "D", "E"],
    "Bb": ["_B", "C", "D", "_E", "F", "G", "A"],
    "Eb": ["_E", "F", "G", "_A", "_B", "C", "D"],
}

_BEATS = {"2/4": 2, "3/4": 3, "4/4": 4, "6/8": 6}

# Scale-degree weights biased toward the tonic triad so the note histogram
# itself carries the key, the way real melodies do.
_DEGREE_WEIGHTS = np.array([4.0, 1.0, 3.0, 1.0, 3.0, 1.0, 1.0])
_DEGREE_WEIGHTS /= _DEGREE_WEIGHTS.sum()


def _scale_notes(key: str) -> list[str]:
    return _SCALES[key]


def _bar(notes: list[str], beats: int, rng: np.random.Generator) -> str:
    degrees = rng.choice(7, size=beats, p=_DEGREE_WEIGHTS)
    picks = []
    for d in degrees:
        note = notes[int(d)]
        if rng.random() < 0.3:
            note = note[:-1] + note[-1].lower()  # upper octave, accidental kept
        picks.append(note)
    return " ".join(picks)


def _body(key: str, meter: str, rng: np.random.Generator) -> list[str]:
    notes = _scale_notes(key)
    tonic = notes[0]
    lines = []
    for line_idx in range(3):
        bars = [_bar(notes, _BEATS[meter], rng) for _ in range(4)]
        bars[0] = tonic + " " + bars[0]
        bars[-1] = bars[-1] + " " + tonic  # cadence on the tonic
        tail = " |]" if line_idx == 2 else " |"
        lines.append(" | ".join(bars) + tail)
    return lines


def _texts(key: str, meter: str, rng: np.random.Generator) -> list[str]:
    # No articles: the key letter must stay a unique token after lowercasing
    # ("a" the article would collide with "A" the key).
    meter_word = METERS[meter]
    options = [
        f"{meter_word} in {key} major",
        f"piece in the key of {key} major",
        f"{meter_word} rhythm in {key}",
        f"traditional {meter_word} tune of {key}",
    ]
    count = int(rng.integers(2, 5))
    order = rng.permutation(len(options))
    return [options[int(i)] for i in sorted(order[:count])]


def make_toy_corpus(n: int = 200, seed: int = 0) -> list[MusicTextPair]:
    pairs = []
    for i in range(n):
        rng = np.random.default_rng((seed, i))
        key = KEYS[int(rng.integers(len(KEYS)))]
        meter = list(METERS)[int(rng.integers(len(METERS)))]
        abc_lines = [
            f"X:{i + 1}",
            f"T:Toy Tune {i + 1}",
            f"M:{meter}",
            "L:1/8",
            f"K:{key}",
            *_body(key, meter, rng),
        ]
        score = strip_natural_language(parse_score("\n".join(abc_lines) + "\n", source_id=f"toy{i:04d}"))
        pairs.append(
            MusicTextPair(
                music=score,
                texts=_texts(key, meter, rng),
                labels={"key": key, "meter": meter},
            )
        )
    return pairs


def write_toy_corpus(path: str | Path, n: int = 200, seed: int = 0) -> None:
    save_pairs(make_toy_corpus(n, seed), path)
