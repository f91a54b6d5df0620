"""Exception hierarchy shared across the toolkit.

Every error the library raises on purpose derives from NegkitError so the
CLI can map failures onto its exit-code contract without string matching.
"""


class NegkitError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(NegkitError):
    """Bad or incomplete pipeline configuration."""


# --- ingestion ---------------------------------------------------------


class MalformedRow(NegkitError):
    """A corpus row that cannot be parsed; message names the record."""


class UnknownRelation(NegkitError):
    """Relation code or column outside the closed nine-relation set."""


# --- negation ----------------------------------------------------------


class UnnegatableEvent(NegkitError):
    """No rule applies to this event text."""


class AlreadyNegated(NegkitError):
    """Event already carries a negation cue; refusing to double-negate."""


class NotAnOriginal(NegkitError):
    """Variant generation requires an ORIG triple."""


class RewriteRejected(NegkitError):
    """Generative rewrite failed the cue/overlap acceptance check."""


# --- chat client -------------------------------------------------------


class BackendUnavailable(NegkitError):
    """Transient backend failures exhausted the retry budget."""


class TransientBackendError(NegkitError):
    """A single failed attempt; retried internally, never escapes the client."""


class ProtocolError(NegkitError):
    """Backend answered with a body we cannot interpret."""


class TemplateError(NegkitError):
    """Prompt template and bindings do not line up."""


# --- judging -----------------------------------------------------------


class UnparseableVerdict(NegkitError):
    """Judge reply mentions none of the validity labels."""


class ShortfallError(NegkitError):
    """A sampling quota cannot be met from the available pool."""


class RecombinationExhausted(NegkitError):
    """Could not assemble enough novel recombinations within the attempt budget."""


class GenerationRejected(NegkitError):
    """Generated text failed validation (empty or degenerate)."""


class EmptyInput(NegkitError):
    """An evaluation was asked to score nothing."""


class UnknownInstance(NegkitError):
    """Prediction or label refers to an id outside the gold set."""


# --- corpus assembly ---------------------------------------------------


class LabelingAborted(NegkitError):
    """Too many triples failed labeling; quarantine budget exceeded."""


class IncompleteGroup(NegkitError):
    """A variant group is missing members required by the selection rule."""


class ExportRejected(NegkitError):
    """A record violates the export contract (e.g. Ambiguous label)."""


# --- annotation --------------------------------------------------------


class SessionError(NegkitError):
    """Annotation request without a usable annotator identity."""


class ValidationError(NegkitError):
    """Submitted annotation payload fails validation."""


class EmptyOverlap(NegkitError):
    """Two annotators share no labeled items; agreement undefined."""


class IncompleteAnnotation(NegkitError):
    """Adjudication requires full double coverage and did not find it."""


# --- evaluation --------------------------------------------------------


class DuplicatePrediction(NegkitError):
    """Two predictions carry the same instance id."""


class CoverageError(NegkitError):
    """Paired significance test requires both systems to cover every instance."""
