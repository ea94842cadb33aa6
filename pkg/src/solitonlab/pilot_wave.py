"""Pilot waves: closed-form families plus a numeric fallback.

Each spec exposes the amplitude R, phase gradient, phase Laplacian and
log-amplitude gradient needed by the guidance equation and by the soliton
drift terms. Analytic families use closed-form derivatives; the numeric
family differentiates spectrally and masks the neighbourhood of nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridError, NodeProximityError
from .spectral_core import (
    ComplexField,
    Grid,
    PhysicalConstants,
    free_potential,
    harmonic_potential,
    l2_norm,
    rms_width,
    spectral_gradient,
    spectral_laplacian,
    split_step_linear,
)

NODE_EPSILON = 1e-8


@dataclass(frozen=True)
class PhaseData:
    """Amplitude and phase derivatives of the pilot wave at one point."""

    R_L: float
    grad_phase: np.ndarray
    laplacian_phase: float


@dataclass(frozen=True)
class PlaneWave:
    """exp(i(k.x - hbar k^2 t / 2m)); modulus one everywhere."""

    k: tuple
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(float(v) for v in np.atleast_1d(self.k)))

    @property
    def dims(self):
        return len(self.k)


@dataclass(frozen=True)
class CoherentState:
    """Harmonic-oscillator coherent state with centre amp_j cos(wt + delta_j).

    Built as the exact normalized solution of the linear equation for the
    harmonic potential: Gaussian envelope of width sqrt(hbar/2 m w) riding on
    a phase linear in x with slope m xc'(t) / hbar, plus the -w t/2 zero-point
    phase per axis ("standard" global-phase convention).
    """

    omega: float
    amplitude: tuple
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    phase_offsets: tuple = None
    global_phase: str = "standard"

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        amp = tuple(float(v) for v in np.atleast_1d(self.amplitude))
        object.__setattr__(self, "amplitude", amp)
        off = self.phase_offsets
        off = (0.0,) * len(amp) if off is None else tuple(float(v) for v in np.atleast_1d(off))
        if len(off) != len(amp):
            raise ValueError("phase_offsets must match amplitude length")
        object.__setattr__(self, "phase_offsets", off)
        if self.global_phase != "standard":
            raise ValueError("only the standard global-phase convention is supported")

    @property
    def dims(self):
        return len(self.amplitude)

    @property
    def mass(self):
        return self.constants.mass

    def center(self, t):
        wt = self.omega * t
        return np.array([a * np.cos(wt + d) for a, d in zip(self.amplitude, self.phase_offsets)])

    def center_momentum(self, t):
        m, w = self.mass, self.omega
        return np.array([-m * w * a * np.sin(w * t + d)
                         for a, d in zip(self.amplitude, self.phase_offsets)])

    @property
    def sigma(self):
        """Envelope width: |psi|^2 has per-axis std sqrt(hbar / 2 m w)."""
        return float(np.sqrt(self.constants.hbar / (2.0 * self.mass * self.omega)))


@dataclass(frozen=True)
class EigenstateSuperposition:
    """1D superposition sum_n c_n phi_n(x) exp(-i w (n + 1/2) t)."""

    terms: tuple  # ((n, complex coefficient), ...)
    omega: float
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        terms = tuple((int(n), complex(c)) for n, c in self.terms)
        if not terms or all(c == 0 for _, c in terms):
            raise ValueError("superposition coefficients must not all vanish")
        if any(n < 0 for n, _ in terms):
            raise ValueError("eigenstate indices must be non-negative")
        object.__setattr__(self, "terms", terms)

    @property
    def dims(self):
        return 1

    @property
    def n_max(self):
        return max(n for n, _ in self.terms)


class NumericField:
    """Pilot wave carried on a grid and advanced by the split-step solver.

    Evaluation at arbitrary times re-propagates from the stored snapshot;
    point queries interpolate linearly and fail outside the grid.
    """

    def __init__(self, base: ComplexField, potential, constants=None,
                 t_base=0.0, dt_max=2e-3):
        if l2_norm(base) <= 0:
            raise ValueError("numeric pilot must have positive norm")
        self.grid = base.grid
        self.base = base.copy()
        self.potential = potential
        self.constants = constants or PhysicalConstants()
        self.t_base = float(t_base)
        self.dt_max = float(dt_max)
        self._t_cur = self.t_base
        self._cur = base.copy()
        self._fields_cache = (None, None)

    @property
    def dims(self):
        return self.grid.dims

    def field_at(self, t) -> ComplexField:
        t = float(t)
        if t == self._t_cur:
            return self._cur
        # re-propagate from whichever snapshot is nearer in the right direction
        start_t, start_f = self.t_base, self.base
        if (t >= self._t_cur >= self.t_base) or (t <= self._t_cur <= self.t_base):
            start_t, start_f = self._t_cur, self._cur
        span = t - start_t
        if span == 0.0:
            adv = start_f.copy()
        else:
            n = max(1, int(np.ceil(abs(span) / self.dt_max)))
            adv = split_step_linear(start_f, self.potential, span / n, n,
                                    self.constants, t0=start_t)
        self._t_cur, self._cur = t, adv
        self._fields_cache = (None, None)
        self._lap_cache = (None, None)
        return adv


PILOT_TYPES = (PlaneWave, CoherentState, EigenstateSuperposition, NumericField)


def _axes_of(spec, x):
    """Split a point/array of points into per-axis coordinate arrays."""
    x = np.asarray(x, dtype=float)
    if spec.dims == 1:
        return [x]
    if x.shape[-1] != spec.dims:
        raise ValueError(f"expected trailing axis of size {spec.dims}")
    return [x[..., j] for j in range(spec.dims)]


def _hermite_basis(xi, n_max):
    """phi-hat_n(xi) = H_n(xi) exp(-xi^2/2) / sqrt(2^n n! sqrt(pi)), n = 0..n_max."""
    xi = np.asarray(xi, dtype=float)
    out = np.empty((n_max + 1,) + xi.shape)
    out[0] = np.pi ** (-0.25) * np.exp(-0.5 * xi ** 2)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * xi * out[0]
    for n in range(1, n_max):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * xi * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def _superposition_psi_derivs(spec: EigenstateSuperposition, t, x):
    """psi, dpsi/dx, d2psi/dx2 for the 1D eigenstate superposition."""
    hbar, m = spec.constants.hbar, spec.constants.mass
    w = spec.omega
    alpha = np.sqrt(m * w / hbar)
    x = np.asarray(x, dtype=float)
    xi = alpha * x
    basis = _hermite_basis(xi, spec.n_max + 1)
    norm = np.sqrt(alpha)
    psi = np.zeros(xi.shape, dtype=np.complex128)
    dpsi = np.zeros_like(psi)
    d2psi = np.zeros_like(psi)
    for n, c in spec.terms:
        phase = c * np.exp(-1j * w * (n + 0.5) * t)
        phi_n = norm * basis[n]
        phi_down = norm * basis[n - 1] if n > 0 else 0.0
        phi_up = norm * basis[n + 1]
        dphi = alpha * (np.sqrt(n / 2.0) * phi_down - np.sqrt((n + 1) / 2.0) * phi_up)
        d2phi = alpha ** 2 * (xi ** 2 - (2 * n + 1)) * phi_n
        psi += phase * phi_n
        dpsi += phase * dphi
        d2psi += phase * d2phi
    return psi, dpsi, d2psi


def reference_amplitude(spec, t=None) -> float:
    """Scale used for relative node detection (max |psi| or an upper bound)."""
    c = spec.constants
    if isinstance(spec, PlaneWave):
        return 1.0
    if isinstance(spec, CoherentState):
        return float((c.mass * spec.omega / (np.pi * c.hbar)) ** (spec.dims / 4.0))
    if isinstance(spec, EigenstateSuperposition):
        alpha = np.sqrt(c.mass * spec.omega / c.hbar)
        span = np.sqrt(2 * spec.n_max + 1.0) / alpha + 6.0 / alpha
        xs = np.linspace(-span, span, 4096)
        basis = _hermite_basis(alpha * xs, spec.n_max)
        bound = sum(abs(cn) * np.abs(np.sqrt(alpha) * basis[n]) for n, cn in spec.terms)
        return float(bound.max())
    if isinstance(spec, NumericField):
        return float(np.abs(spec.field_at(spec.t_base if t is None else t).values).max())
    raise TypeError(f"unknown pilot spec {type(spec)!r}")


def _interp_linear(grid: Grid, values, x):
    """Linear interpolation at point x; raises outside the grid."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    idx = []
    frac = []
    for axis in range(grid.dims):
        ax = grid.axes()[axis]
        lo, hi = ax[0], ax[-1]
        if x[axis] < lo or x[axis] > hi:
            raise ValueError(f"point {x} outside numeric pilot grid on axis {axis}")
        pos = (x[axis] - lo) / grid.spacing[axis]
        i0 = min(int(np.floor(pos)), grid.points[axis] - 2)
        idx.append(i0)
        frac.append(pos - i0)
    out = 0.0
    for corner in range(2 ** grid.dims):
        weight = 1.0
        sel = []
        for axis in range(grid.dims):
            bit = (corner >> axis) & 1
            weight *= frac[axis] if bit else (1.0 - frac[axis])
            sel.append(idx[axis] + bit)
        out = out + weight * values[tuple(sel)]
    return out


def evaluate(spec, t, x):
    """Complex pilot amplitude at (t, x); broadcasts over arrays of points."""
    c = spec.constants
    if isinstance(spec, PlaneWave):
        axes = _axes_of(spec, x)
        k = np.asarray(spec.k)
        phase = sum(kj * xj for kj, xj in zip(k, axes)) \
            - c.hbar * float(k @ k) * t / (2.0 * c.mass)
        return np.exp(1j * phase)
    if isinstance(spec, CoherentState):
        axes = _axes_of(spec, x)
        xc = spec.center(t)
        pc = spec.center_momentum(t)
        m, w, hbar = c.mass, spec.omega, c.hbar
        pref = (m * w / (np.pi * hbar)) ** 0.25
        out = 1.0
        for j, xj in enumerate(axes):
            u = xj - xc[j]
            out = out * pref * np.exp(
                -m * w * u ** 2 / (2.0 * hbar)
                + 1j * (pc[j] * xj / hbar - pc[j] * xc[j] / (2.0 * hbar) - 0.5 * w * t)
            )
        return out
    if isinstance(spec, EigenstateSuperposition):
        return _superposition_psi_derivs(spec, t, x)[0]
    if isinstance(spec, NumericField):
        f = spec.field_at(t)
        return _interp_linear(spec.grid, f.values, x)
    raise TypeError(f"unknown pilot spec {type(spec)!r}")


def evaluate_with_gradient(spec, t, x):
    """(psi, tuple of dpsi/dx_j) at a point; closed form for analytic specs."""
    c = spec.constants
    if isinstance(spec, PlaneWave):
        psi = evaluate(spec, t, x)
        return psi, tuple(1j * kj * psi for kj in spec.k)
    if isinstance(spec, CoherentState):
        psi = evaluate(spec, t, x)
        axes = _axes_of(spec, x)
        xc = spec.center(t)
        pc = spec.center_momentum(t)
        m, w, hbar = c.mass, spec.omega, c.hbar
        grads = tuple(
            (-m * w * (axes[j] - xc[j]) / hbar + 1j * pc[j] / hbar) * psi
            for j in range(spec.dims)
        )
        return psi, grads
    if isinstance(spec, EigenstateSuperposition):
        psi, dpsi, _ = _superposition_psi_derivs(spec, t, x)
        return psi, (dpsi,)
    if isinstance(spec, NumericField):
        f = spec.field_at(t)
        grads = spec_gradient_fields(spec, t)
        psi = _interp_linear(spec.grid, f.values, x)
        return psi, tuple(_interp_linear(spec.grid, g, x) for g in grads)
    raise TypeError(f"unknown pilot spec {type(spec)!r}")


def spec_gradient_fields(spec: NumericField, t):
    """Cached spectral gradient arrays of the numeric pilot at time t."""
    key, cached = spec._fields_cache
    if key == ("grad", t):
        return cached
    grads = tuple(g.values for g in spectral_gradient(spec.field_at(t)))
    spec._fields_cache = (("grad", t), grads)
    return grads


def _check_node(spec, t, x, amp, node_epsilon):
    ref = reference_amplitude(spec, t)
    if amp <= node_epsilon * ref:
        raise NodeProximityError(
            f"|pilot| = {amp:.3e} within {node_epsilon:.0e} of a node at t={t}, x={x}",
            t=t, x=np.asarray(x),
        )


def phase_data(spec, t, x, node_epsilon=NODE_EPSILON) -> PhaseData:
    """Amplitude, phase gradient and phase Laplacian at a point.

    Raises NodeProximityError when |psi| <= node_epsilon * max |psi|.
    """
    if isinstance(spec, PlaneWave):
        return PhaseData(R_L=1.0, grad_phase=np.asarray(spec.k, dtype=float),
                         laplacian_phase=0.0)
    if isinstance(spec, CoherentState):
        psi = evaluate(spec, t, x)
        amp = float(np.abs(psi))
        _check_node(spec, t, x, amp, node_epsilon)
        return PhaseData(R_L=amp,
                         grad_phase=spec.center_momentum(t) / spec.constants.hbar,
                         laplacian_phase=0.0)
    if isinstance(spec, EigenstateSuperposition):
        psi, dpsi, d2psi = _superposition_psi_derivs(spec, t, x)
        rho = float(np.abs(psi) ** 2)
        _check_node(spec, t, x, np.sqrt(rho), node_epsilon)
        s = float(np.imag(np.conj(psi) * dpsi))
        lap = float(np.imag(np.conj(psi) * d2psi)) / rho \
            - 2.0 * s * float(np.real(np.conj(psi) * dpsi)) / rho ** 2
        return PhaseData(R_L=float(np.sqrt(rho)), grad_phase=np.array([s / rho]),
                         laplacian_phase=lap)
    if isinstance(spec, NumericField):
        f = spec.field_at(t)
        grads = spec_gradient_fields(spec, t)
        lap = _numeric_lap_cache(spec, t)
        psi = _interp_linear(spec.grid, f.values, x)
        rho = float(np.abs(psi) ** 2)
        _check_node(spec, t, x, np.sqrt(rho), node_epsilon)
        gpsi = np.array([_interp_linear(spec.grid, g, x) for g in grads])
        s = np.imag(np.conj(psi) * gpsi)
        lap_val = float(np.imag(np.conj(psi) * _interp_linear(spec.grid, lap, x)))
        lap_phase = lap_val / rho - 2.0 * float(s @ np.real(np.conj(psi) * gpsi)) / rho ** 2
        return PhaseData(R_L=float(np.sqrt(rho)), grad_phase=s / rho,
                         laplacian_phase=lap_phase)
    raise TypeError(f"unknown pilot spec {type(spec)!r}")


def _numeric_lap_cache(spec: NumericField, t):
    key, cached = getattr(spec, "_lap_cache", (None, None))
    if key == t:
        return cached
    lap = spectral_laplacian(spec.field_at(t)).values
    spec._lap_cache = (t, lap)
    return lap


def log_amp_gradient(spec, t, x, node_epsilon=NODE_EPSILON) -> np.ndarray:
    """grad R_L / R_L at a point (zero for plane waves)."""
    if isinstance(spec, PlaneWave):
        return np.zeros(spec.dims)
    if isinstance(spec, CoherentState):
        c = spec.constants
        xc = spec.center(t)
        axes = _axes_of(spec, x)
        return np.array([-c.mass * spec.omega * (axes[j] - xc[j]) / c.hbar
                         for j in range(spec.dims)], dtype=float)
    psi, grads = evaluate_with_gradient(spec, t, x)
    rho = float(np.abs(psi) ** 2)
    _check_node(spec, t, x, np.sqrt(rho), node_epsilon)
    return np.array([float(np.real(np.conj(psi) * g)) / rho for g in grads])


def guidance_velocity(spec, t, x, constants=None, node_epsilon=NODE_EPSILON) -> np.ndarray:
    """(hbar/m) grad(phase); invariant under rescaling of the pilot."""
    c = constants or spec.constants
    data = phase_data(spec, t, x, node_epsilon=node_epsilon)
    return (c.hbar / c.mass) * np.asarray(data.grad_phase, dtype=float)


def has_uniform_phase_gradient(spec) -> bool:
    """True when grad(phase) does not depend on x (plane wave, coherent state)."""
    return isinstance(spec, (PlaneWave, CoherentState))


def uniform_velocity(spec, t) -> np.ndarray:
    """Guidance velocity for uniform-phase-gradient pilots (x-independent)."""
    c = spec.constants
    if isinstance(spec, PlaneWave):
        return c.hbar * np.asarray(spec.k) / c.mass
    if isinstance(spec, CoherentState):
        return spec.center_momentum(t) / c.mass
    raise ValueError("pilot phase gradient depends on position")


def uniform_displacement(spec, t1, t2) -> np.ndarray:
    """Integral of the uniform guidance velocity between t1 and t2, closed form."""
    c = spec.constants
    if isinstance(spec, PlaneWave):
        return c.hbar * np.asarray(spec.k) / c.mass * (t2 - t1)
    if isinstance(spec, CoherentState):
        w = spec.omega
        return np.array([
            a * (np.cos(w * t2 + d) - np.cos(w * t1 + d))
            for a, d in zip(spec.amplitude, spec.phase_offsets)
        ])
    raise ValueError("pilot phase gradient depends on position")


def typical_speed(spec) -> float:
    """Characteristic guidance speed, used to flag node-induced spikes."""
    c = spec.constants
    if isinstance(spec, PlaneWave):
        return max(float(np.linalg.norm(spec.k)) * c.hbar / c.mass, 1e-30)
    if isinstance(spec, CoherentState):
        return max(spec.omega * float(np.linalg.norm(spec.amplitude)), 1e-30)
    if isinstance(spec, EigenstateSuperposition):
        return float(np.sqrt(c.hbar * spec.omega * (2 * spec.n_max + 1) / c.mass))
    if isinstance(spec, NumericField):
        f = spec.field_at(spec.t_base)
        grads = spec_gradient_fields(spec, spec.t_base)
        rho = np.abs(f.values) ** 2
        mask = rho > (1e-6 * rho.max())
        v = np.imag(np.conj(f.values)[mask] * grads[0][mask]) / rho[mask]
        return max(float(np.median(np.abs(v))) * c.hbar / c.mass, 1e-30)
    raise TypeError(f"unknown pilot spec {type(spec)!r}")


def pilot_rms_width(spec, t=0.0) -> float:
    """rms width of |psi|^2, used by the width_ratio fallback."""
    if isinstance(spec, PlaneWave):
        return np.inf
    if isinstance(spec, CoherentState):
        return spec.sigma
    if isinstance(spec, EigenstateSuperposition):
        c = spec.constants
        alpha = np.sqrt(c.mass * spec.omega / c.hbar)
        span = (np.sqrt(2 * spec.n_max + 1.0) + 6.0) / alpha
        xs = np.linspace(-span, span, 4096)
        rho = np.abs(_superposition_psi_derivs(spec, t, xs)[0]) ** 2
        rho /= rho.sum()
        mean = float(xs @ rho)
        return float(np.sqrt(((xs - mean) ** 2) @ rho))
    if isinstance(spec, NumericField):
        return rms_width(spec.field_at(t))
    raise TypeError(f"unknown pilot spec {type(spec)!r}")


@dataclass(frozen=True)
class PilotGridFields:
    """Pilot-wave quantities sampled on a solver grid at one time.

    grad_phase and grad_log_amp hold one array per axis (broadcastable against
    the grid shape); valid marks nodes where the ratios are trustworthy.
    """

    amplitude: np.ndarray
    grad_phase: tuple
    lap_phase: np.ndarray
    grad_log_amp: tuple
    valid: np.ndarray
    uniform_gradient: bool


def pilot_grid_fields(spec, grid: Grid, t, node_epsilon=NODE_EPSILON) -> PilotGridFields:
    """Evaluate the pilot accessors on every node of a grid."""
    coords = grid.meshgrid()
    ones = np.ones(grid.shape)
    c = spec.constants
    if isinstance(spec, PlaneWave):
        k = np.asarray(spec.k)
        return PilotGridFields(
            amplitude=ones,
            grad_phase=tuple(k[j] * ones for j in range(spec.dims)),
            lap_phase=np.zeros(grid.shape),
            grad_log_amp=tuple(np.zeros(grid.shape) for _ in range(spec.dims)),
            valid=np.ones(grid.shape, dtype=bool),
            uniform_gradient=True,
        )
    if isinstance(spec, CoherentState):
        xc = spec.center(t)
        pc = spec.center_momentum(t)
        m, w, hbar = c.mass, spec.omega, c.hbar
        amp = (m * w / (np.pi * hbar)) ** (spec.dims / 4.0) * ones
        for j, xj in enumerate(coords):
            amp = amp * np.exp(-m * w * (xj - xc[j]) ** 2 / (2.0 * hbar))
        return PilotGridFields(
            amplitude=amp,
            grad_phase=tuple(pc[j] / hbar * ones for j in range(spec.dims)),
            lap_phase=np.zeros(grid.shape),
            grad_log_amp=tuple(-m * w * (coords[j] - xc[j]) / hbar * ones
                               for j in range(spec.dims)),
            valid=amp > node_epsilon * amp.max(),
            uniform_gradient=True,
        )
    if isinstance(spec, EigenstateSuperposition):
        if grid.dims != 1:
            raise GridError("eigenstate superpositions are one-dimensional")
        x = coords[0]
        psi, dpsi, d2psi = _superposition_psi_derivs(spec, t, x)
        return _fields_from_derivs(psi, (dpsi,), d2psi, node_epsilon)
    if isinstance(spec, NumericField):
        if grid != spec.grid:
            raise GridError("numeric pilot grid differs from the solver grid")
        f = spec.field_at(t)
        grads = spec_gradient_fields(spec, t)
        lap = _numeric_lap_cache(spec, t)
        return _fields_from_derivs(f.values, grads, lap, node_epsilon)
    raise TypeError(f"unknown pilot spec {type(spec)!r}")


def _fields_from_derivs(psi, grads, lap, node_epsilon):
    rho = np.abs(psi) ** 2
    valid = rho > (node_epsilon ** 2) * rho.max()
    safe_rho = np.where(valid, rho, 1.0)
    grad_phase = []
    grad_log_amp = []
    s_list = []
    for g in grads:
        s = np.where(valid, np.imag(np.conj(psi) * g), 0.0) / safe_rho
        grad_phase.append(s)
        s_list.append(s)
        grad_log_amp.append(np.where(valid, np.real(np.conj(psi) * g), 0.0) / safe_rho)
    lap_phase = np.where(valid, np.imag(np.conj(psi) * lap), 0.0) / safe_rho
    for s, g in zip(s_list, grads):
        lap_phase = lap_phase - 2.0 * s * np.where(valid, np.real(np.conj(psi) * g), 0.0) / safe_rho
    return PilotGridFields(
        amplitude=np.sqrt(rho),
        grad_phase=tuple(grad_phase),
        lap_phase=lap_phase,
        grad_log_amp=tuple(grad_log_amp),
        valid=valid,
        uniform_gradient=False,
    )


# --- JSON scenario blocks ---

def pilot_to_dict(spec) -> dict:
    if isinstance(spec, PlaneWave):
        return {"kind": "plane_wave", "k": list(spec.k)}
    if isinstance(spec, CoherentState):
        return {
            "kind": "coherent_state",
            "omega": spec.omega,
            "amplitude": list(spec.amplitude),
            "phase_offsets": list(spec.phase_offsets),
        }
    if isinstance(spec, EigenstateSuperposition):
        return {
            "kind": "eigenstate_superposition",
            "omega": spec.omega,
            "terms": [{"n": n, "re": c.real, "im": c.imag} for n, c in spec.terms],
        }
    if isinstance(spec, NumericField):
        raise ValueError("numeric pilots are described via their scenario block")
    raise TypeError(f"unknown pilot spec {type(spec)!r}")


def pilot_from_dict(data: dict, constants=None):
    constants = constants or PhysicalConstants()
    kind = data.get("kind")
    if kind == "plane_wave":
        return PlaneWave(k=data["k"], constants=constants)
    if kind == "coherent_state":
        return CoherentState(
            omega=data["omega"], amplitude=data["amplitude"],
            phase_offsets=data.get("phase_offsets"), constants=constants,
        )
    if kind == "eigenstate_superposition":
        terms = [(int(t["n"]), complex(t.get("re", 0.0), t.get("im", 0.0)))
                 for t in data["terms"]]
        return EigenstateSuperposition(terms=terms, omega=data["omega"], constants=constants)
    raise ValueError(f"unknown pilot kind {kind!r}")
