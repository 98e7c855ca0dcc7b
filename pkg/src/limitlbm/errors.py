"""Exception hierarchy shared by all modules."""


class LimitLBMError(Exception):
    """Base class for errors raised by limitlbm."""


class DomainError(LimitLBMError, ValueError):
    """A parameter lies outside its admissible range."""


class DegenerateDensityError(LimitLBMError, ArithmeticError):
    """Non-positive particle density where moments are required."""

    def __init__(self, message, node=None):
        if node is not None:
            message = f"{message} at node {tuple(int(i) for i in node)}"
        super().__init__(message)
        self.node = node


class DimensionMismatchError(LimitLBMError, ValueError):
    """Stencil, grid or flow disagree on the spatial dimension."""


class FitError(LimitLBMError, ArithmeticError):
    """An order fit cannot be formed from the sampled errors."""


class InstabilityError(LimitLBMError, RuntimeError):
    """A simulation blew up (non-finite values or runaway field norm)."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ConfigError(LimitLBMError, ValueError):
    """Invalid experiment configuration; carries the offending line if known."""

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
