"""Reduced dynamics of Gaussian solitons: per-axis complex (A, B, C) system.

For phi = exp(-A x^2/2 + B x + C) per axis under a pilot whose phase gradient
is spatially uniform, the field equation closes on the ODE system

    i dA/dt = (hbar/m) A^2 - (hbar/m) (Re A)^2
    i dB/dt = (hbar/m) A B + V1/hbar + i (hbar/m) A g(t)
    i dC/dt = (hbar/2m)(A - B^2) + V0/hbar - i (hbar/m) B g(t)

with g = grad(phase_L) at the barycentre and V0, V1 the constant and linear
Taylor coefficients of the self-focusing potential
(hbar^2 (Re A)^2 / 2m)(x - x0)^2, x0 = Re B / Re A. Real A is a fixed point
(dA/dt = 0, the solitonic branch) and real (A, B) stays real, reproducing the
rigid transport of the full field equation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedPilotError
from .pilot_wave import has_uniform_phase_gradient, uniform_velocity
from .spectral_core import ComplexField, Grid, PhysicalConstants, normalized


@dataclass
class GaussianSolitonParams:
    """Per-axis complex (A, B, C) and the time they refer to."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.A = np.atleast_1d(np.asarray(self.A, dtype=np.complex128))
        self.B = np.atleast_1d(np.asarray(self.B, dtype=np.complex128))
        self.C = np.atleast_1d(np.asarray(self.C, dtype=np.complex128))
        if not (self.A.shape == self.B.shape == self.C.shape):
            raise ValueError("A, B, C must have one value per axis")
        if np.any(self.A.real <= 0):
            raise ValueError("Re A must be positive (normalizable Gaussian)")

    @property
    def dims(self):
        return len(self.A)

    @property
    def barycentre(self):
        return self.B.real / self.A.real

    def copy(self):
        return GaussianSolitonParams(self.A.copy(), self.B.copy(), self.C.copy(),
                                     self.time)


def _pilot_gradient(pilot, t, constants):
    if not has_uniform_phase_gradient(pilot):
        raise UnsupportedPilotError(
            "the Gaussian reduction needs a pilot with position-independent "
            "phase gradient (plane wave or coherent state)")
    v = uniform_velocity(pilot, t)
    return constants.mass * np.asarray(v) / constants.hbar


def ode_rhs(params: GaussianSolitonParams, pilot, t,
            constants: PhysicalConstants) -> tuple:
    """(dA/dt, dB/dt, dC/dt) per axis."""
    hbar, m = constants.hbar, constants.mass
    g = _pilot_gradient(pilot, t, constants)
    A, B = params.A, params.B
    x0 = B.real / A.real
    # Taylor coefficients of (hbar^2 (Re A)^2 / 2m)(x - x0)^2
    v2 = hbar ** 2 * A.real ** 2 / (2.0 * m)
    v1 = -2.0 * v2 * x0
    v0 = v2 * x0 ** 2
    dA = -1j * ((hbar / m) * A ** 2 - 2.0 * v2 / hbar)
    dB = -1j * ((hbar / m) * A * B + v1 / hbar + 1j * (hbar / m) * A * g)
    dC = -1j * ((hbar / (2.0 * m)) * (A - B ** 2) + v0 / hbar
                - 1j * (hbar / m) * B * g)
    return dA, dB, dC


def integrate_params(params0: GaussianSolitonParams, pilot, t_final, dt,
                     constants: PhysicalConstants, record_every=1):
    """Classical RK4 integration; returns the recorded parameter history."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    n_steps = max(1, int(round((t_final - params0.time) / dt)))
    h = (t_final - params0.time) / n_steps

    def rhs_vec(t, y):
        p = GaussianSolitonParams(y[0], y[1], y[2], t)
        dA, dB, dC = ode_rhs(p, pilot, t, constants)
        return np.stack([dA, dB, dC])

    y = np.stack([params0.A, params0.B, params0.C])
    t = params0.time
    out = [params0.copy()]
    for step in range(n_steps):
        k1 = rhs_vec(t, y)
        k2 = rhs_vec(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs_vec(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs_vec(t + h, y + h * k3)
        y = y + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        t += h
        if not np.all(np.isfinite(y)):
            raise FloatingPointError(f"parameter integration diverged at step {step}")
        if (step + 1) % record_every == 0 or step == n_steps - 1:
            out.append(GaussianSolitonParams(y[0], y[1], y[2], t))
    return out


def params_to_field(params: GaussianSolitonParams, grid: Grid,
                    normalize=True) -> ComplexField:
    """Sample exp(-A x^2/2 + B x + C) per axis on the grid."""
    if grid.dims != params.dims:
        raise ValueError("grid dimensionality does not match parameters")
    x0 = params.barycentre
    sigma = 1.0 / np.sqrt(2.0 * params.A.real)
    for axis in range(grid.dims):
        half = grid.lengths[axis] / 2.0
        if abs(x0[axis]) + 6.0 * sigma[axis] > half:
            raise ValueError(
                f"grid does not cover 6 widths around the barycentre on axis {axis}")
    vals = np.ones(grid.shape, dtype=np.complex128)
    for axis, x in enumerate(grid.meshgrid()):
        vals = vals * np.exp(-0.5 * params.A[axis] * x ** 2
                             + params.B[axis] * x + params.C[axis])
    f = ComplexField(grid, vals)
    return normalized(f) if normalize else f
