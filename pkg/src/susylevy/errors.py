"""Exception hierarchy shared by all modules."""


class SusyLevyError(Exception):
    """Base class for errors raised by this package."""


class DomainError(SusyLevyError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class BranchCutError(DomainError):
    """Evaluation requested exactly on the essential spectrum (E real, E > 0)."""


class InfiniteMeanError(DomainError):
    """c(0) = E[W(1)] was requested for a process with infinite mean."""


class UnsupportedError(SusyLevyError, NotImplementedError):
    """The requested method does not apply to this process family."""


class ConvergenceError(SusyLevyError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance.

    Attributes
    ----------
    diagnostics : dict
        Whatever trace the failing routine could collect (iterates,
        offsets, residuals).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
