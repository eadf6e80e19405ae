#!/usr/bin/env python3
"""Download the WikiMusicText evaluation dataset and convert it to the JSONL
pair format this package consumes.

Usage:
    python3 scripts/fetch_wikimt.py [--out data/wikimt.jsonl]

Requires network access to huggingface.co. The dataset is published at
https://huggingface.co/datasets/sander-wood/wikimt (1010 lead sheets in ABC
notation, each with title, artist, genre, and a summarized description).
The converter is tolerant about field names since the upstream schema has
varied: music text is read from the first of abc/music/score/text fields
containing header-style ABC lines; candidate texts are [title, artist,
description] in that order, dropping empties.
"""

from __future__ import annotations

import argparse
import json
import sys
import urllib.request
from pathlib import Path

CANDIDATE_URLS = [
    "https://huggingface.co/datasets/sander-wood/wikimt/resolve/main/wikimusictext.json",
    "https://huggingface.co/datasets/sander-wood/wikimt/resolve/main/wikimusictext.jsonl",
]

MUSIC_FIELDS = ("abc", "music", "score", "abc notation", "abc_notation")
TEXT_FIELDS = ("title", "artist", "description")


def looks_like_abc(value: str) -> bool:
    lines = value.replace("\r\n", "\n").split("\n")
    return any(len(ln) > 1 and ln[1] == ":" and ln[0].isalpha() for ln in lines)


def pick_music(record: dict) -> str | None:
    for field in MUSIC_FIELDS:
        value = record.get(field)
        if isinstance(value, str) and looks_like_abc(value):
            return value
    for value in record.values():
        if isinstance(value, str) and looks_like_abc(value):
            return value
    return None


def convert(records: list[dict], out_path: Path) -> int:
    written = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for i, record in enumerate(records):
            lowered = {str(k).lower(): v for k, v in record.items()}
            abc = pick_music(lowered)
            if abc is None:
                print(f"warning: record {i} has no recognizable ABC field; skipped", file=sys.stderr)
                continue
            texts = [str(lowered[f]).strip() for f in TEXT_FIELDS if str(lowered.get(f, "")).strip()]
            if not texts:
                print(f"warning: record {i} has no text fields; skipped", file=sys.stderr)
                continue
            labels = {}
            if lowered.get("genre"):
                labels["genre"] = str(lowered["genre"])
            if lowered.get("title"):
                labels["title"] = str(lowered["title"])
            row = {"id": f"wikimt{i:04d}", "abc": abc, "texts": texts}
            if labels:
                row["labels"] = labels
            fh.write(json.dumps(row, sort_keys=True) + "\n")
            written += 1
    return written


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/wikimt.jsonl")
    parser.add_argument("--source", default=None, help="local wikimusictext.json instead of downloading")
    args = parser.parse_args()

    if args.source:
        raw = Path(args.source).read_text(encoding="utf-8")
    else:
        raw = None
        for url in CANDIDATE_URLS:
            try:
                print(f"fetching {url} ...")
                with urllib.request.urlopen(url, timeout=60) as response:
                    raw = response.read().decode("utf-8")
                break
            except Exception as exc:  # noqa: BLE001 - report and try the next mirror
                print(f"  failed: {exc}", file=sys.stderr)
        if raw is None:
            print("could not download WikiMT; pass --source <file> if you have a local copy", file=sys.stderr)
            return 1

    stripped = raw.lstrip()
    if stripped.startswith("["):
        records = json.loads(raw)
    else:
        records = [json.loads(line) for line in raw.splitlines() if line.strip()]

    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    written = convert(records, out_path)
    print(f"wrote {written} pairs to {out_path}")
    return 0 if written else 1


if __name__ == "__main__":
    sys.exit(main())
