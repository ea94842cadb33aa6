"""Shared exceptions and warnings."""


class SolitonLabError(Exception):
    """Base class for all package errors."""


class GridError(SolitonLabError):
    """Invalid grid construction or mismatched grids."""


class NodeProximityError(SolitonLabError):
    """Evaluation requested too close to a node of the pilot wave.

    Carries the last good state when raised from a trajectory integrator.
    """

    def __init__(self, message, t=None, x=None, partial=None):
        super().__init__(message)
        self.t = t
        self.x = x
        self.partial = partial


class UnsupportedPilotError(SolitonLabError):
    """Pilot wave outside the family an operation is exact for."""


class PropagationError(SolitonLabError):
    """Non-finite values encountered during time stepping."""


class ScenarioError(SolitonLabError):
    """Malformed scenario configuration; message names the offending field path."""


class ApproximationBreach(UserWarning):
    """Soliton width exceeded the pilot-wave variation scale (width_ratio > 0.2)."""


class EdgeMassWarning(UserWarning):
    """Field carries non-negligible amplitude at the periodic domain boundary."""
