"""Exception types shared across the package."""


class GrammarLabError(Exception):
    """Base class for package-specific errors."""


# grammar / trees
class GrammarFormatError(GrammarLabError):
    """Grammar data file is malformed or violates its invariants."""


class ConstraintUnsatisfiable(GrammarLabError):
    """The grammar cannot produce a tree of the requested branching class."""


class MalformedTree(GrammarLabError):
    """Tree labels or structure do not belong to the grammar."""


class ParseError(GrammarLabError):
    """Token sequence is not a sentence of the grammar."""


# rule oracles
class NoAuxiliary(GrammarLabError):
    """Question formation applied to a sentence without an auxiliary."""


class UnknownVerbForm(GrammarLabError):
    """A verb token has no entry in the verb-form table."""


class NoPrecedingNoun(GrammarLabError):
    """Linear tense inflection found a verb with no noun to its left."""


# dataset builder
class InfeasibleComposition(GrammarLabError):
    """DatasetConfig knobs target an empty or contradictory portion."""


class FormatError(GrammarLabError):
    """Malformed dataset line; carries the 1-based line number."""

    def __init__(self, message, line_number=None):
        super().__init__(message)
        self.line_number = line_number


# metrics
class TooFewCheckpoints(GrammarLabError):
    """Total variation needs at least two checkpoints."""


class EmptyReference(GrammarLabError):
    """min_ted_to_train called with no training shapes."""


class LengthMismatch(GrammarLabError):
    """Prediction and gold lists have different lengths."""


# lm trainer
class UnknownToken(GrammarLabError):
    """Token is not in the vocabulary."""


class SequenceTooLong(GrammarLabError):
    """Sequence exceeds the model's maximum length."""


class ShapeMismatch(GrammarLabError):
    """Logits and targets have incompatible shapes."""


class NonFiniteGradient(GrammarLabError):
    """A gradient became NaN/Inf; the run is aborted and recorded."""


class LengthLimitExceeded(GrammarLabError):
    """Greedy decoding hit the length limit before a terminator."""


# harness
class MissingCheckpoint(GrammarLabError):
    """A checkpoint file expected by evaluation does not exist."""
