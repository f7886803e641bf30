"""Exception hierarchy shared by the solver modules."""


class L1GalerkinError(Exception):
    """Base class for all errors raised by this package."""


class InvalidOrderError(L1GalerkinError, ValueError):
    """Fractional order outside the open interval (0, 1)."""


class EmptyGridError(L1GalerkinError, ValueError):
    """Time grid without any step."""


class InsufficientHistoryError(L1GalerkinError, ValueError):
    """History too short (or too long) for the requested operator."""


class StepIndexError(L1GalerkinError, IndexError):
    """Time-step index outside ``1..N``."""


class BasisIndexError(L1GalerkinError, IndexError):
    """Basis index outside the interior range ``2..M-1``."""


class MeshError(L1GalerkinError, ValueError):
    """Invalid mesh or mismatched meshes."""


class DiffusivityBoundError(L1GalerkinError, ValueError):
    """Diffusivity sampled at or below zero."""


class FirstStepDivergenceError(L1GalerkinError, RuntimeError):
    """The fixed-point iteration of the first step did not converge."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class IllPosedStepError(L1GalerkinError, RuntimeError):
    """A step system had a non-positive pivot."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class MissingExactSolutionError(L1GalerkinError, ValueError):
    """An error measure needs an exact solution the problem does not have."""


class IndeterminateOrderError(L1GalerkinError, ArithmeticError):
    """Order estimate with a vanishing denominator."""
