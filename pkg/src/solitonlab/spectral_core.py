"""Grids, complex fields, spectral differentiation and split-step propagation.

Everything here assumes periodic boundaries and uniform Cartesian grids,
so derivatives are exact Fourier multiplications and both sub-steps of the
Strang splitting are norm-preserving phase multiplications.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EdgeMassWarning, GridError, PropagationError

# CODATA 2018
HBAR_SI = 1.054571817e-34  # J s
G_SI = 6.67430e-11         # m^3 kg^-1 s^-2
C_SI = 2.99792458e8        # m / s
ELECTRON_MASS_SI = 9.1093837015e-31  # kg

EDGE_MASS_TOL = 1e-12


@dataclass(frozen=True)
class PhysicalConstants:
    """hbar, particle mass, G and c. Natural units (hbar = m = 1) by default."""

    hbar: float = 1.0
    mass: float = 1.0
    G: float = G_SI
    c: float = C_SI

    def __post_init__(self):
        for name in ("hbar", "mass", "G", "c"):
            if getattr(self, name) <= 0:
                raise ValueError(f"constants.{name} must be positive")

    @classmethod
    def si(cls, mass):
        return cls(hbar=HBAR_SI, mass=mass, G=G_SI, c=C_SI)

    def to_dict(self):
        return {"hbar": self.hbar, "mass": self.mass, "G": self.G, "c": self.c}


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid centered on the origin, 1 to 3 dimensions."""

    dims: int
    points: tuple
    lengths: tuple

    @property
    def spacing(self):
        return tuple(L / n for L, n in zip(self.lengths, self.points))

    @property
    def shape(self):
        return self.points

    @property
    def size(self):
        return int(np.prod(self.points))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    def axes(self):
        """Node coordinates per axis, centered on 0 (range [-L/2, L/2))."""
        return tuple(
            (np.arange(n) - n // 2) * d for n, d in zip(self.points, self.spacing)
        )

    def meshgrid(self):
        return np.meshgrid(*self.axes(), indexing="ij", sparse=True)

    def wavenumbers(self):
        """Angular wavenumbers per axis matching numpy FFT ordering."""
        return tuple(
            2.0 * np.pi * np.fft.fftfreq(n, d=d)
            for n, d in zip(self.points, self.spacing)
        )

    def k_squared(self):
        ks = self.wavenumbers()
        k2 = np.zeros(self.points)
        for axis, k in enumerate(ks):
            shape = [1] * self.dims
            shape[axis] = len(k)
            k2 = k2 + (k ** 2).reshape(shape)
        return k2

    def to_dict(self):
        return {
            "dims": self.dims,
            "points": list(self.points),
            "lengths": list(self.lengths),
            "spacing": list(self.spacing),
        }


def _is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


def make_grid(dims, points, lengths) -> Grid:
    """Build a Grid; points must be a power of two (>= 8) on every axis."""
    if dims not in (1, 2, 3):
        raise GridError(f"dims must be 1, 2 or 3, got {dims}")
    pts = tuple(points) if np.iterable(points) else (int(points),) * dims
    lens = tuple(float(L) for L in lengths) if np.iterable(lengths) else (float(lengths),) * dims
    if len(pts) != dims or len(lens) != dims:
        raise GridError("points/lengths do not match dims")
    for n in pts:
        if not _is_power_of_two(int(n)) or n < 8:
            raise GridError(f"points per axis must be a power of two >= 8, got {n}")
    for L in lens:
        if L <= 0:
            raise GridError(f"lengths must be positive, got {L}")
    return Grid(dims=dims, points=tuple(int(n) for n in pts), lengths=lens)


@dataclass
class ComplexField:
    """Complex amplitude sampled on a Grid."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != self.grid.shape:
            raise GridError(
                f"values shape {self.values.shape} != grid shape {self.grid.shape}"
            )

    def copy(self):
        return ComplexField(self.grid, self.values.copy())

    def check_finite(self, context=""):
        if not np.all(np.isfinite(self.values)):
            raise PropagationError(f"non-finite field values {context}".strip())


def field_from_function(grid, fn) -> ComplexField:
    """Sample fn(*coords) on the grid."""
    return ComplexField(grid, np.asarray(fn(*grid.meshgrid()), dtype=np.complex128)
                        * np.ones(grid.shape))


def _require_same_grid(f, g):
    if f.grid != g.grid:
        raise GridError("fields live on different grids")


def l2_norm(f: ComplexField) -> float:
    """sqrt of the Riemann-sum integral of |f|^2."""
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2) * f.grid.cell_volume))


def overlap(f: ComplexField, g: ComplexField) -> complex:
    """<f|g> by Riemann quadrature; overlap(f, f) == l2_norm(f)**2."""
    _require_same_grid(f, g)
    return complex(np.sum(np.conj(f.values) * g.values) * f.grid.cell_volume)


def expectation_position(f: ComplexField) -> np.ndarray:
    """Barycentre <x> weighted by |f|^2."""
    w = np.abs(f.values) ** 2
    total = w.sum()
    if total <= 0:
        raise ValueError("zero-norm field has no barycentre")
    out = np.empty(f.grid.dims)
    for axis, x in enumerate(f.grid.meshgrid()):
        out[axis] = float(np.sum(w * x) / total)
    return out


def position_variance(f: ComplexField) -> np.ndarray:
    """Per-axis variance of |f|^2."""
    w = np.abs(f.values) ** 2
    total = w.sum()
    if total <= 0:
        raise ValueError("zero-norm field has no variance")
    mean = expectation_position(f)
    out = np.empty(f.grid.dims)
    for axis, x in enumerate(f.grid.meshgrid()):
        out[axis] = float(np.sum(w * (x - mean[axis]) ** 2) / total)
    return out


def rms_width(f: ComplexField) -> float:
    return float(np.sqrt(position_variance(f).mean()))


def spectral_laplacian(f: ComplexField) -> ComplexField:
    """Laplacian via Fourier multiplication with -k^2."""
    f.check_finite("in spectral_laplacian")
    fk = np.fft.fftn(f.values)
    out = np.fft.ifftn(-f.grid.k_squared() * fk)
    return ComplexField(f.grid, out)


def spectral_gradient(f: ComplexField):
    """Tuple of d/dx_i fields via Fourier multiplication with i*k."""
    fk = np.fft.fftn(f.values)
    grads = []
    for axis, k in enumerate(f.grid.wavenumbers()):
        shape = [1] * f.grid.dims
        shape[axis] = len(k)
        grads.append(
            ComplexField(f.grid, np.fft.ifftn(1j * k.reshape(shape) * fk))
        )
    return tuple(grads)


def spectral_translate(f: ComplexField, displacement) -> ComplexField:
    """f(x) -> f(x - displacement), exact for band-limited fields."""
    disp = np.atleast_1d(np.asarray(displacement, dtype=float))
    fk = np.fft.fftn(f.values)
    for axis, k in enumerate(f.grid.wavenumbers()):
        shape = [1] * f.grid.dims
        shape[axis] = len(k)
        fk = fk * np.exp(-1j * k.reshape(shape) * disp[axis])
    return ComplexField(f.grid, np.fft.ifftn(fk))


def edge_mass_fraction(f: ComplexField) -> float:
    """Max |f| on the outermost grid shell relative to max |f|."""
    a = np.abs(f.values)
    peak = a.max()
    if peak == 0:
        return 0.0
    edge = 0.0
    for axis in range(f.grid.dims):
        edge = max(edge, float(np.take(a, 0, axis=axis).max()),
                   float(np.take(a, -1, axis=axis).max()))
    return edge / peak


def warn_if_edge_mass(f: ComplexField, context=""):
    frac = edge_mass_fraction(f)
    if frac > EDGE_MASS_TOL:
        warnings.warn(
            f"relative edge amplitude {frac:.2e} exceeds {EDGE_MASS_TOL:.0e} {context}".strip(),
            EdgeMassWarning,
            stacklevel=2,
        )


def split_step_linear(f: ComplexField, potential, dt, n_steps,
                      constants: PhysicalConstants, t0=0.0) -> ComplexField:
    """Advance i*hbar df/dt = (-hbar^2/2m Lap + V) f by Strang splitting.

    potential(t, coords) must return the real potential on the grid given the
    sparse meshgrid coords. Each sub-step is a pure phase, so the L2 norm is
    conserved to roundoff; splitting error is O(dt^2) per unit time.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    hbar, m = constants.hbar, constants.mass
    grid = f.grid
    coords = grid.meshgrid()
    kinetic_phase = np.exp(-1j * hbar * grid.k_squared() * dt / (2.0 * m))

    def v_at(t):
        v = np.asarray(potential(t, coords))
        if np.iscomplexobj(v):
            raise ValueError("potential must be real-valued")
        return v

    v0 = v_at(t0)
    t_end = t0 + n_steps * dt
    static = np.array_equal(v0, v_at(t0 + 0.5 * (t_end - t0))) and \
        np.array_equal(v0, v_at(t_end))

    def v_phase(t):
        v = v0 if static else v_at(t)
        return np.exp(-1j * v * (0.5 * dt) / hbar)

    psi = f.values.copy()
    t = t0
    half = v_phase(t)
    for step in range(n_steps):
        psi = psi * half
        psi = np.fft.ifftn(kinetic_phase * np.fft.fftn(psi))
        if not static:
            half = v_phase(t + dt)
        psi = psi * half
        t += dt
        if step % 64 == 0 and not np.all(np.isfinite(psi)):
            raise PropagationError(f"split_step_linear diverged at step {step}")
    out = ComplexField(grid, psi)
    out.check_finite("after split_step_linear")
    warn_if_edge_mass(out, "after split_step_linear")
    return out


def harmonic_potential(omega, constants: PhysicalConstants):
    """V(x) = m omega^2 |x|^2 / 2 as a potential callable."""
    m = constants.mass

    def V(t, coords):
        r2 = sum(np.asarray(c) ** 2 for c in coords)
        return 0.5 * m * omega ** 2 * r2

    return V


def free_potential():
    def V(t, coords):
        return np.zeros(tuple(np.broadcast_shapes(*(np.shape(c) for c in coords))))

    return V


# --- serialization: CSV body (coordinates then re, im) + JSON grid header ---

def field_to_csv(f: ComplexField, path, header_path=None):
    """Write node rows 'x[,y,z],re,im' in C order; grid metadata as JSON."""
    coords = np.meshgrid(*f.grid.axes(), indexing="ij")
    cols = [c.ravel() for c in coords] + [f.values.real.ravel(), f.values.imag.ravel()]
    names = ["xyz"[i] for i in range(f.grid.dims)] + ["re", "im"]
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*cols):
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")
    if header_path is not None:
        with open(header_path, "w") as fh:
            json.dump(f.grid.to_dict(), fh, indent=2)
            fh.write("\n")


def field_from_csv(path, grid: Grid) -> ComplexField:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    re = data[:, grid.dims]
    im = data[:, grid.dims + 1]
    return ComplexField(grid, (re + 1j * im).reshape(grid.shape))


def normalized(f: ComplexField) -> ComplexField:
    n = l2_norm(f)
    if n == 0:
        raise ValueError("cannot normalize zero field")
    return ComplexField(f.grid, f.values / n)


def gaussian_field(grid, sigma, center=None, momentum=None) -> ComplexField:
    """Normalized Gaussian exp(-(x-c)^2/(4 sigma^2)) * exp(i q x); |f|^2 has std sigma."""
    center = np.zeros(grid.dims) if center is None else np.atleast_1d(center)
    momentum = np.zeros(grid.dims) if momentum is None else np.atleast_1d(momentum)
    sig = np.broadcast_to(np.atleast_1d(np.asarray(sigma, float)), (grid.dims,))
    vals = np.ones(grid.shape, dtype=np.complex128)
    for axis, x in enumerate(grid.meshgrid()):
        vals = vals * np.exp(-((x - center[axis]) ** 2) / (4.0 * sig[axis] ** 2)
                             + 1j * momentum[axis] * x)
    return normalized(ComplexField(grid, vals))
