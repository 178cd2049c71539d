"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class StripBlochError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(StripBlochError, ValueError):
    """Inputs are inconsistent (shape, period, grid or parameter mismatch)."""


class ThresholdProximity(StripBlochError):
    """An (E, k) point lies within the exclusion band around a threshold curve."""


class EmptyMinusSubspace(StripBlochError):
    """No hyperbolic modes: the decaying subspace at minus infinity is trivial."""


class InsufficientSamples(StripBlochError):
    """Too few samples on a curve for the requested stencil."""


class BoundaryContamination(StripBlochError):
    """Wavefunction mass reached a Dirichlet edge of the simulation box."""
