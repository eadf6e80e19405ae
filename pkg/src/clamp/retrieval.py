"""Embedding index construction and persistence, semantic search, zero-shot
classification, retrieval evaluation, and linear probing."""

from __future__ import annotations

import hashlib
import io
import json
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch
import torch.nn.functional as F

from .contrastive import ClampBundle, encode_sequences, encode_texts
from .corpus import MusicTextPair, Score, parse_score, segment_score, strip_natural_language
from .errors import (
    ConfigMismatchError,
    DegenerateLabelSetError,
    EmptyIndexError,
    MissingKeyHeaderWarning,
    MissingTargetError,
    ShapeMismatchError,
)
from .m3 import sequences_for_pairs
from .metrics import f1_macro, hr_at_k, mrr
from .patches import encode_score

INDEX_MAGIC = b"CIDX"
INDEX_VERSION = 1


@dataclass
class EmbeddingIndex:
    """Flat store of unit-norm music features plus per-piece metadata."""

    dim: int
    vectors: np.ndarray  # float32, (count, dim)
    meta: list[dict]  # per vector: source_id, abc, optional title/labels

    def __post_init__(self):
        if self.vectors.shape[0] != len(self.meta):
            raise ShapeMismatchError(
                f"{self.vectors.shape[0]} vectors vs {len(self.meta)} metadata records"
            )
        if self.vectors.size:
            norms = np.linalg.norm(self.vectors, axis=1)
            if not np.allclose(norms, 1.0, atol=1e-5):
                raise ValueError("index vectors must be unit-norm within 1e-5")

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @property
    def source_ids(self) -> list[str]:
        return [m["source_id"] for m in self.meta]

    def lookup(self, source_id: str) -> Optional[dict]:
        for record in self.meta:
            if record["source_id"] == source_id:
                return record
        return None


def meta_sidecar_path(path: str | Path) -> Path:
    return Path(str(path) + ".meta.jsonl")


def save_index(index: EmbeddingIndex, path: str | Path) -> None:
    """Vectors file: magic "CIDX", version byte, u32 dim, u64 count, float32
    little-endian rows; metadata goes to a JSONL sidecar, one record per row."""
    buf = io.BytesIO()
    buf.write(INDEX_MAGIC)
    buf.write(struct.pack("<B", INDEX_VERSION))
    buf.write(struct.pack("<I", index.dim))
    buf.write(struct.pack("<Q", index.count))
    buf.write(index.vectors.astype("<f4").tobytes(order="C"))
    Path(path).write_bytes(buf.getvalue())
    with open(meta_sidecar_path(path), "w", encoding="utf-8") as fh:
        for record in index.meta:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_index(path: str | Path) -> EmbeddingIndex:
    data = Path(path).read_bytes()
    if data[:4] != INDEX_MAGIC:
        raise ValueError(f"not a CIDX index: bad magic {data[:4]!r}")
    if data[4] != INDEX_VERSION:
        raise ValueError(f"unsupported index version {data[4]}")
    (dim,) = struct.unpack_from("<I", data, 5)
    (count,) = struct.unpack_from("<Q", data, 9)
    vectors = np.frombuffer(data, dtype="<f4", count=count * dim, offset=17).reshape(count, dim).copy()
    meta = []
    with open(meta_sidecar_path(path), "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                meta.append(json.loads(line))
    return EmbeddingIndex(dim=dim, vectors=vectors, meta=meta)


def build_index(pairs: list[MusicTextPair], bundle: ClampBundle) -> EmbeddingIndex:
    """Encode every piece with the music encoder, in corpus order."""
    dim = bundle.model.cfg.hidden_dim
    if not pairs:
        return EmbeddingIndex(dim=dim, vectors=np.zeros((0, dim), dtype=np.float32), meta=[])
    sequences = sequences_for_pairs(pairs, bundle.config["max_patches"])
    vectors = encode_sequences(bundle.model, sequences)
    if vectors.shape[1] != dim:
        raise ConfigMismatchError(f"feature dim {vectors.shape[1]} != checkpoint dim {dim}")
    meta = []
    for pair in pairs:
        record = {"source_id": pair.music.source_id, "abc": pair.music.to_text()}
        if pair.labels:
            record["labels"] = pair.labels
            if "title" in pair.labels:
                record["title"] = pair.labels["title"]
        meta.append(record)
    return EmbeddingIndex(dim=dim, vectors=vectors, meta=meta)


@dataclass
class RankedResult:
    """Scored hits in non-increasing score order; ties break by source_id."""

    items: list[tuple[str, float]]
    rank_of_target: Optional[int] = None


def _ranked(scores: np.ndarray, source_ids: list[str], k: int) -> list[tuple[str, float]]:
    order = sorted(range(len(source_ids)), key=lambda i: (-scores[i], source_ids[i]))
    return [(source_ids[i], float(scores[i])) for i in order[:k]]


def search(index: EmbeddingIndex, query_text: str, k: int, bundle: ClampBundle) -> RankedResult:
    """Rank the library by cosine similarity between the query's text feature
    and the stored music features."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if index.count == 0:
        raise EmptyIndexError("cannot search an empty index")
    query = encode_texts(bundle.model, bundle.vocab, [query_text])[0]
    scores = index.vectors @ query
    return RankedResult(items=_ranked(scores, index.source_ids, k))


@dataclass
class ClassifyResult:
    label: str
    scores: list[tuple[str, float]]  # all labels, sorted by descending score
    tie: bool


def zero_shot_classify(
    music: Score | str,
    prompts: Sequence[tuple[str, str]],
    bundle: ClampBundle,
) -> ClassifyResult:
    """Pick the label whose prompt feature is most similar to the music
    feature. Exact score ties fall to the earliest label in the set and are
    flagged."""
    labels = [label for label, _ in prompts]
    if len(labels) < 2:
        raise DegenerateLabelSetError("need at least 2 labels")
    if len(set(labels)) != len(labels):
        raise DegenerateLabelSetError("labels must be unique")
    if any(not prompt.strip() for _, prompt in prompts):
        raise DegenerateLabelSetError("prompts must be non-empty")

    if isinstance(music, str):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MissingKeyHeaderWarning)
            music = strip_natural_language(parse_score(music))
    seq = encode_score(segment_score(music), bundle.config["max_patches"])
    music_vec = encode_sequences(bundle.model, [seq])[0]
    prompt_vecs = encode_texts(bundle.model, bundle.vocab, [prompt for _, prompt in prompts])
    sims = prompt_vecs @ music_vec

    best = int(np.argmax(sims))
    tie = bool(np.sum(sims == sims[best]) > 1)
    order = sorted(range(len(labels)), key=lambda i: (-sims[i], i))
    return ClassifyResult(
        label=labels[best],
        scores=[(labels[i], float(sims[i])) for i in order],
        tie=tie,
    )


@dataclass
class EvalReport:
    mrr: float
    hr1: float
    hr10: float
    hr100: float
    ranks: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"mrr": self.mrr, "hr1": self.hr1, "hr10": self.hr10, "hr100": self.hr100}


def rank_of_target(scores: np.ndarray, source_ids: list[str], target_id: str) -> int:
    """1-based rank under the search tie order (descending score, then id)."""
    try:
        t = source_ids.index(target_id)
    except ValueError:
        raise MissingTargetError(target_id) from None
    better = np.sum(scores > scores[t])
    tied_before = sum(
        1 for j, sid in enumerate(source_ids) if scores[j] == scores[t] and sid < target_id
    )
    return int(better) + tied_before + 1


def eval_search(index: EmbeddingIndex, pairs: list[MusicTextPair], bundle: ClampBundle) -> EvalReport:
    """Query each pair's piece with the concatenation of all its candidate
    texts (dropout disabled) and score the rank of the piece itself."""
    ids = index.source_ids
    queries = [" ".join(p.texts) for p in pairs]
    query_vecs = encode_texts(bundle.model, bundle.vocab, queries)
    ranks = []
    for pair, qvec in zip(pairs, query_vecs):
        scores = index.vectors @ qvec
        ranks.append(rank_of_target(scores, ids, pair.music.source_id))
    return EvalReport(
        mrr=mrr(ranks),
        hr1=hr_at_k(ranks, 1),
        hr10=hr_at_k(ranks, 10),
        hr100=hr_at_k(ranks, 100),
        ranks=ranks,
    )


def fold_of(key: str | int, seed: int, folds: int) -> int:
    """Deterministic, platform-stable fold assignment."""
    digest = hashlib.sha256(f"{seed}:{key}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") % folds


@dataclass
class ProbeReport:
    f1_macro: float
    accuracy: float
    fold_f1: list[float]
    fold_accuracy: list[float]

    def to_dict(self) -> dict:
        return {
            "f1_macro": self.f1_macro,
            "accuracy": self.accuracy,
            "fold_f1": self.fold_f1,
            "fold_accuracy": self.fold_accuracy,
        }


def linear_probe(
    features: np.ndarray,
    labels: Sequence[str],
    folds: int = 5,
    batch: int = 10,
    seed: int = 0,
    epochs: int = 100,
    lr: float = 0.05,
    keys: Optional[Sequence[str | int]] = None,
) -> ProbeReport:
    """Multinomial logistic regression on frozen features, trained fold by
    fold with minibatch gradient descent; folds come from a seeded hash of
    each sample's key (its index by default)."""
    if len(features) != len(labels):
        raise ShapeMismatchError(f"{len(features)} features vs {len(labels)} labels")
    torch.set_num_threads(1)
    classes = sorted(set(labels))
    class_ids = {c: i for i, c in enumerate(classes)}
    y = np.asarray([class_ids[label] for label in labels], dtype=np.int64)
    x = np.asarray(features, dtype=np.float32)
    keys = list(keys) if keys is not None else list(range(len(labels)))
    assignment = np.asarray([fold_of(k, seed, folds) for k in keys])

    fold_f1, fold_acc = [], []
    for fold in range(folds):
        test_mask = assignment == fold
        train_mask = ~test_mask
        if not test_mask.any() or not train_mask.any():
            warnings.warn(f"fold {fold} is empty; skipping")
            continue
        train_classes = set(y[train_mask].tolist())
        missing = [c for c in classes if class_ids[c] not in train_classes]
        if missing:
            warnings.warn(f"fold {fold}: classes absent from training split: {missing}")

        gen = torch.Generator().manual_seed(seed + fold)
        weight = torch.zeros(len(classes), x.shape[1], dtype=torch.float32, requires_grad=True)
        with torch.no_grad():
            weight.normal_(0.0, 0.01, generator=gen)
        bias = torch.zeros(len(classes), requires_grad=True)
        xt = torch.from_numpy(x[train_mask])
        yt = torch.from_numpy(y[train_mask])

        opt = torch.optim.SGD([weight, bias], lr=lr)
        n = len(yt)
        for epoch in range(epochs):
            order = torch.randperm(n, generator=gen)
            for start in range(0, n, batch):
                idx = order[start : start + batch]
                logits = xt[idx] @ weight.T + bias
                loss = F.cross_entropy(logits, yt[idx])
                opt.zero_grad()
                loss.backward()
                opt.step()

        with torch.no_grad():
            logits = torch.from_numpy(x[test_mask]) @ weight.T + bias
            preds = logits.argmax(dim=1).numpy()
        truth = [classes[i] for i in y[test_mask]]
        predicted = [classes[i] for i in preds]
        f1, acc = f1_macro(predicted, truth)
        fold_f1.append(f1)
        fold_acc.append(acc)

    return ProbeReport(
        f1_macro=float(np.mean(fold_f1)),
        accuracy=float(np.mean(fold_acc)),
        fold_f1=fold_f1,
        fold_accuracy=fold_acc,
    )
