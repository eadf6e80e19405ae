"""Fixed 64-slot patch token representation over a 98-symbol vocabulary.

Vocabulary: id 0=[PAD], 1=[MASK], 2=[END]; ids 3..97 are the 95 printable
ASCII characters 0x20..0x7E in code-point order, id(c) = ord(c) - 32 + 3.
Every patch row has exactly 64 slots; content is capped at 63 characters so
the [END] marker always fits.
"""

from __future__ import annotations

import io
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import PatchText
from .errors import EmptySequenceError, InvalidTokenError

PAD_ID = 0
MASK_ID = 1
END_ID = 2
VOCAB_SIZE = 98
PATCH_LEN = 64
_CHAR_BASE = 3
_ASCII_LO = 0x20
_ASCII_HI = 0x7E

MAGIC = b"BPAT"
FORMAT_VERSION = 1


def char_to_id(ch: str) -> int:
    return ord(ch) - _ASCII_LO + _CHAR_BASE


def id_to_char(token_id: int) -> str:
    return chr(token_id - _CHAR_BASE + _ASCII_LO)


def encode_patch(patch: PatchText | str) -> np.ndarray:
    """Encode one patch text as a row of 64 token ids (uint8).

    Characters outside printable ASCII are dropped with a warning; content is
    truncated to 63 characters, then [END] and [PAD] fill the row.
    """
    text = patch.text if isinstance(patch, PatchText) else patch
    ids = []
    dropped = 0
    for ch in text:
        code = ord(ch)
        if _ASCII_LO <= code <= _ASCII_HI:
            ids.append(code - _ASCII_LO + _CHAR_BASE)
        else:
            dropped += 1
    if dropped:
        warnings.warn(f"dropped {dropped} non-printable-ASCII character(s) from patch", stacklevel=2)
    ids = ids[: PATCH_LEN - 1]
    row = np.full(PATCH_LEN, PAD_ID, dtype=np.uint8)
    row[: len(ids)] = ids
    row[len(ids)] = END_ID
    return row


def decode_patch(tokens: np.ndarray) -> str:
    """Decode a token row back to text: characters up to the first [END].

    [MASK] renders as "?"; [PAD] before the first [END] renders as nothing.
    Ids outside the vocabulary raise InvalidTokenError.
    """
    chars = []
    for token_id in np.asarray(tokens).tolist():
        if token_id >= VOCAB_SIZE or token_id < 0:
            raise InvalidTokenError(f"token id {token_id} outside vocabulary of {VOCAB_SIZE}")
        if token_id == END_ID:
            break
        if token_id == MASK_ID:
            chars.append("?")
        elif token_id != PAD_ID:
            chars.append(id_to_char(token_id))
    return "".join(chars)


@dataclass
class PatchSequence:
    """Ordered patch rows for one piece.

    tokens: uint8 array of shape (num_patches, 64); kinds: "header"/"bar" per
    patch; mask: 1 per real patch (padding rows only appear in batched
    tensors, never here).
    """

    tokens: np.ndarray
    kinds: list[str]
    mask: np.ndarray

    def __len__(self) -> int:
        return self.tokens.shape[0]

    @property
    def bar_indices(self) -> list[int]:
        return [i for i, k in enumerate(self.kinds) if k == "bar"]


def encode_score(patches: list[PatchText], max_patches: int = 512) -> PatchSequence:
    """Encode segmented patches in order, truncating from the tail beyond
    max_patches. Raises EmptySequenceError for zero patches."""
    if not patches:
        raise EmptySequenceError("cannot encode a score with zero patches")
    kept = patches[:max_patches]
    tokens = np.stack([encode_patch(p) for p in kept])
    return PatchSequence(
        tokens=tokens,
        kinds=[p.kind for p in kept],
        mask=np.ones(len(kept), dtype=np.uint8),
    )


def write_sequence(seq: PatchSequence, path: str | Path) -> None:
    """Binary layout: magic "BPAT", version byte, u32 little-endian patch
    count, then 64-byte token rows."""
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<B", FORMAT_VERSION))
    buf.write(struct.pack("<I", len(seq)))
    buf.write(seq.tokens.astype(np.uint8).tobytes(order="C"))
    Path(path).write_bytes(buf.getvalue())


def read_sequence(path: str | Path) -> np.ndarray:
    """Read the token rows of a BPAT file (kinds are not persisted)."""
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError(f"not a BPAT file: bad magic {data[:4]!r}")
    version = data[4]
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported BPAT version {version}")
    (count,) = struct.unpack_from("<I", data, 5)
    rows = np.frombuffer(data, dtype=np.uint8, count=count * PATCH_LEN, offset=9)
    return rows.reshape(count, PATCH_LEN).copy()
