"""Exception hierarchy shared across the package.

Every error raised by cseval derives from :class:`CSEvalError` so callers
(and the CLI) can distinguish data problems from programming bugs.
"""

from __future__ import annotations


class CSEvalError(Exception):
    """Base class for all cseval errors."""


# --- prompt parsing ---------------------------------------------------------

class PromptParseError(CSEvalError):
    """A prompt could not be parsed against the closed template grammar."""


class UnknownPathology(PromptParseError):
    """No pathology token from the lexicon matches the prompt."""


class AmbiguousPrompt(PromptParseError):
    """More than one pathology token matches the prompt."""


# --- graph extraction / ingestion -------------------------------------------

class EmptySentence(CSEvalError):
    """Sentence is empty after normalization."""


class SchemaError(CSEvalError):
    """A JSON document does not match its documented schema."""


class UnknownLabel(SchemaError):
    """An entity or relation label is outside the supported enums."""


# --- numeric metrics ---------------------------------------------------------

class DimensionMismatch(CSEvalError):
    """Inputs have incompatible shapes or dimensions."""


class ImageTooSmall(CSEvalError):
    """Image is smaller than the filter window at the finest scale."""


class TooFewImages(CSEvalError):
    """Pairwise statistics need at least two images."""


class TooFewVectors(CSEvalError):
    """Gaussian statistics need at least two vectors."""


class NotSymmetric(CSEvalError):
    """Matrix is not symmetric within tolerance."""


class NotPSD(CSEvalError):
    """Matrix has an eigenvalue below the PSD tolerance."""


class ZeroVector(CSEvalError):
    """Cosine alignment is undefined for zero-norm vectors."""


# --- agreement statistics ----------------------------------------------------

class LengthMismatch(CSEvalError):
    """Paired score vectors differ in length."""


class DegenerateInput(CSEvalError):
    """Rank correlation is undefined (fewer than two points, or all tied)."""


class UnknownSampleId(CSEvalError):
    """A rating references a sample id absent from the score records."""


class FindingSetMismatch(CSEvalError):
    """Two aggregate tables cover different finding sets."""


# --- harness ------------------------------------------------------------------

class DuplicateId(CSEvalError):
    """Manifest contains a repeated sample id."""


class EmptyResults(CSEvalError):
    """Report emission needs at least one result row."""
