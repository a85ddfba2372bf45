"""Exception hierarchy. Everything raised on purpose derives from PzwError."""

from __future__ import annotations


class PzwError(Exception):
    """Root of all pzw-lattice errors."""


class GridError(PzwError):
    """Invalid lattice parameters."""


class GridMismatch(PzwError):
    """Two fields live on different grids."""


class NonFiniteField(PzwError):
    """NaN or Inf in lattice samples."""


class NonNeutralSource(PzwError):
    """Charge density with a non-negligible spatial mean (no periodic Poisson solution)."""


class SmearingTooNarrow(PzwError):
    """Gaussian width below 3 lattice spacings."""


class OutOfTrustedRegion(PzwError):
    """Position outside the ball where periodic-image effects are bounded."""


class QuadratureTooCoarse(PzwError):
    """Doubling the s-quadrature order moved the result by more than tol_quad."""


class NonTransverseInput(PzwError):
    """Field expected to be divergence-free is not."""


class InconsistentPotentials(PzwError):
    """Potentials do not reproduce the fields of the state they are paired with."""


class UnknownVariant(PzwError):
    """Unknown variant or check name."""


class StabilityViolation(PzwError):
    """Time step above the stability bound of the Maxwell step."""


class ConfigError(PzwError):
    """Unreadable or invalid scenario / particle configuration."""


class CheckFailure(PzwError):
    """At least one verification record failed."""
