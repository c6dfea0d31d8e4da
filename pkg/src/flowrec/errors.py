"""Exception types shared across the flowrec package."""


class FlowrecError(Exception):
    """Base class for all flowrec errors."""


class ParseError(FlowrecError):
    """Input bytes could not be parsed (malformed XML/JSON, bad model file)."""


class ValidationError(FlowrecError):
    """Parsed input violates a structural invariant."""


class UnknownServiceError(FlowrecError):
    """A service id was looked up that the graph does not contain."""


class UnknownTokenError(FlowrecError):
    """A token key was looked up that the model vocabulary does not contain."""


class VocabularyTooSmallError(ValidationError):
    """Training or tree construction needs at least two vocabulary tokens."""


class EmptySessionError(FlowrecError):
    """Recommendation was requested for a session with no selected tokens."""


class ColdStartError(FlowrecError):
    """The session's anchor token never appeared in the training vocabulary."""


class TrainingDivergedError(FlowrecError):
    """Non-finite values appeared in model parameters during training."""
