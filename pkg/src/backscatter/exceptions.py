class BackscatterError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(BackscatterError, ValueError):
    """An input lies outside the physical domain of a formula."""


class ModelValidityError(BackscatterError, ValueError):
    """The small-signal approximations behind a model do not hold."""


class RegimeError(BackscatterError, ValueError):
    """The requested operation does not apply in this motion regime."""


class AliasingError(BackscatterError, ValueError):
    """The sample rate cannot resolve the highest fringe frequency."""


class InsufficientExcitationError(BackscatterError, ValueError):
    """A driven measurement is not above the background it is scaled to."""


class InputError(BackscatterError, ValueError):
    """Malformed, degenerate or inconsistent input data."""
