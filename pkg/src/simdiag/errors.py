"""Exception hierarchy shared across the package."""


class SimDiagError(Exception):
    """Base class for all errors raised by simdiag."""


class ShapeError(SimDiagError, ValueError):
    """Matrix shapes or symmetry do not satisfy an operation's precondition."""


class OptionError(SimDiagError, ValueError):
    """Invalid solver option."""


class IllConditionedError(SimDiagError, ArithmeticError):
    """The accumulated non-orthogonal transform became numerically singular."""

    def __init__(self, sweep, cond):
        self.sweep = sweep
        self.cond = cond
        super().__init__(
            f"accumulated transform condition number {cond:.3e} exceeds limit at sweep {sweep}"
        )


class PairingError(SimDiagError):
    """Embedded components could not be paired into asymmetric factors."""


class RankError(SimDiagError):
    """Fewer recoverable components than the requested rank."""


class UnidentifiablePairError(SimDiagError, ArithmeticError):
    """Two components have indistinguishable weight profiles."""

    def __init__(self, i, j, reason=""):
        self.pair = (i, j)
        msg = f"components {i} and {j} are not identifiable"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class AlignmentError(SimDiagError):
    """Estimated factors could not be matched to the reference factors."""
