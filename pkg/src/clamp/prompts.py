"""Label prompt sets for zero-shot classification, shipped as editable JSON."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .errors import DegenerateLabelSetError

SHIPPED = ("wikimt_genres", "vgmidi_emotions", "pianist8_composers")


def _validate(prompts: list[tuple[str, str]]) -> list[tuple[str, str]]:
    labels = [label for label, _ in prompts]
    if len(set(labels)) != len(labels):
        raise DegenerateLabelSetError("labels must be unique")
    if any(not prompt.strip() for _, prompt in prompts):
        raise DegenerateLabelSetError("prompts must be non-empty")
    return prompts


def load_prompt_file(path: str | Path) -> list[tuple[str, str]]:
    records = json.loads(Path(path).read_text(encoding="utf-8"))
    return _validate([(r["label"], r["prompt"]) for r in records])


def shipped_prompts(name: str) -> list[tuple[str, str]]:
    """One of the bundled sets: wikimt_genres, vgmidi_emotions, pianist8_composers."""
    if name not in SHIPPED:
        raise KeyError(f"unknown prompt set {name!r}; available: {SHIPPED}")
    payload = resources.files("clamp.data.prompts").joinpath(f"{name}.json").read_text("utf-8")
    return _validate([(r["label"], r["prompt"]) for r in json.loads(payload)])
