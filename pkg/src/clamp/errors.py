"""Exception taxonomy shared across the package."""


class ClampError(Exception):
    """Base class for all package-specific errors."""


class EmptyScoreError(ClampError, ValueError):
    """Raised when the input contains no parsable content."""


class OversizedLineError(ClampError, ValueError):
    """Raised when a body line exceeds the segmentation length cap."""


class PairParseError(ClampError, ValueError):
    """A malformed record in a JSONL pair file; carries the 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class EmptyCorpusError(ClampError, ValueError):
    """Raised when an operation requires a non-empty corpus."""


class InvalidTokenError(ClampError, ValueError):
    """A token id outside the vocabulary range."""


class EmptySequenceError(ClampError, ValueError):
    """Raised when encoding a score that produced zero patches."""


class SequenceTooLongError(ClampError, ValueError):
    """A patch sequence longer than the model's configured maximum."""


class EmptyCandidatesError(ClampError, ValueError):
    """Text dropout requires at least one candidate text."""


class EmptyPoolError(ClampError, ValueError):
    """Pooling over an all-masked sequence is undefined."""


class NonFiniteGradientError(ClampError, FloatingPointError):
    """An optimizer step received NaN or infinite gradients."""


class NoBarsToNoiseError(ClampError, ValueError):
    """Noising requires at least one bar patch in the sequence."""


class NoLossTargetsError(ClampError, ValueError):
    """The reconstruction loss requires at least one selected patch."""


class BatchTooSmallError(ClampError, ValueError):
    """The contrastive loss needs at least two pairs per batch."""


class NonFiniteInputError(ClampError, ValueError):
    """Features fed to the contrastive loss must be finite."""


class EmptyIndexError(ClampError, ValueError):
    """Search requires a non-empty embedding index."""


class ConfigMismatchError(ClampError, ValueError):
    """Index and checkpoint disagree on a structural parameter."""


class MissingTargetError(ClampError, KeyError):
    """An evaluation pair's piece is absent from the index."""

    def __init__(self, source_id: str):
        super().__init__(source_id)
        self.source_id = source_id


class DegenerateLabelSetError(ClampError, ValueError):
    """Zero-shot classification needs at least two labels."""


class EmptyInputError(ClampError, ValueError):
    """A metric received an empty input list."""


class ShapeMismatchError(ClampError, ValueError):
    """Paired inputs have inconsistent lengths or shapes."""


class MissingKeyHeaderWarning(UserWarning):
    """A score parsed without a `K:` header."""
