"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all errors raised by abkit."""


class InputError(ToolkitError, ValueError):
    """Invalid input data: bad file contents, violated invariants, unknown labels.

    Messages name the offending source (file or argument), field and constraint
    so the CLI can surface them verbatim.
    """


class RegimeError(ToolkitError, ValueError):
    """Parameters outside the validity range of a model or numerical method."""


class SingularNetworkError(ToolkitError, ArithmeticError):
    """A capacitance matrix is singular or too ill-conditioned to invert."""


class FitError(ToolkitError, RuntimeError):
    """A fit failed: no convergence, no resonance in window, unphysical result."""
