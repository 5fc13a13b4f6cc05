"""Exception types shared across the package."""

from __future__ import annotations


class TwistDensityError(Exception):
    """Base class for all package errors."""


class DomainError(TwistDensityError, ValueError):
    """An argument lies outside the region where an operation is defined."""


class CapacityError(TwistDensityError, ValueError):
    """A request exceeds the configured memory or work budget."""


class CoverageError(TwistDensityError, ValueError):
    """A prime table does not reach the bound a computation needs."""

    def __init__(self, needed: int, available: int):
        self.needed = int(needed)
        self.available = int(available)
        super().__init__(
            f"prime table reaches {self.available} but primes up to {self.needed} are required"
        )


class BadReductionError(TwistDensityError, ValueError):
    """Point counting was requested at a prime of bad reduction other than the conductor."""


class PoleError(DomainError):
    """Evaluation at a pole."""


class QuadratureError(TwistDensityError, RuntimeError):
    """Adaptive quadrature failed to reach its tolerance within the window budget."""
