"""Exception types shared across the package."""


class ObringError(Exception):
    """Base class for all obring errors."""


class InvalidIdError(ObringError, ValueError):
    """Identifier cannot be encoded (e.g. id = 0)."""


class OutOfRangeError(ObringError, IndexError):
    """Bit/prefix index outside the identifier's length."""


class NoUniqueMinError(ObringError, ValueError):
    """Arrangement has no unique round-elimination minimum."""


class BadParamError(ObringError, ValueError):
    """Invalid protocol or experiment parameter."""


class EmptyLinkError(ObringError, RuntimeError):
    """Delivery attempted from a link with no pulse in transit (scheduler bug)."""


class AlreadyTerminatedError(ObringError, RuntimeError):
    """A terminated machine was resumed."""


class ConfigMismatchError(ObringError, ValueError):
    """Machine count does not match the ring size."""


class StepCapExceededError(ObringError, RuntimeError):
    """Simulation or exploration exceeded its step budget."""


class StateCapExceededError(ObringError, RuntimeError):
    """Exhaustive exploration exceeded its distinct-state budget."""


class ScenarioError(ObringError, ValueError):
    """Malformed or incomplete scenario file."""
