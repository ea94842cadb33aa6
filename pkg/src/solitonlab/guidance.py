"""Trajectory integration under the guidance velocity and ensemble diagnostics.

Single trajectories, N-particle configuration-space guidance for separable
pilot waves (N <= 3), Born/uniform ensembles, and the coarse-grained
relative-entropy diagnostic used to watch relaxation toward |psi|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from . import _kernels
from .errors import NodeProximityError
from .spectral_core import PhysicalConstants
from .pilot_wave import (
    CoherentState,
    EigenstateSuperposition,
    NumericField,
    PlaneWave,
    evaluate,
    evaluate_with_gradient,
    guidance_velocity,
    has_uniform_phase_gradient,
    reference_amplitude,
    typical_speed,
    uniform_displacement,
)

NODE_SPEED_FACTOR = 1e3


@dataclass
class Trajectory:
    """Time-stamped positions (and velocities) of one guided particle."""

    particle_id: int
    times: np.ndarray
    positions: np.ndarray   # shape (n_times,) in 1D, (n_times, dims) otherwise
    velocities: np.ndarray = None
    completed: bool = True

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("time stamps must be strictly increasing")
        if not np.all(np.isfinite(self.positions)):
            raise ValueError("positions must be finite")

    def position_at(self, t):
        i = int(np.argmin(np.abs(self.times - t)))
        return self.positions[i]


def _record_times(t0, t1, dt, record_every):
    """Steps and record indices; dt is nudged so the run lands exactly on t1."""
    if dt <= 0 or t1 <= t0:
        raise ValueError("need dt > 0 and t1 > t0")
    n_steps = max(1, int(round((t1 - t0) / dt)))
    dt_eff = (t1 - t0) / n_steps
    idx = np.arange(0, n_steps + 1, record_every)
    if idx[-1] != n_steps:
        idx = np.append(idx, n_steps)
    return n_steps, dt_eff, t0 + idx * dt_eff, idx


def integrate_trajectory(pilot, x0, t0, t1, dt, record_every=1,
                         node_epsilon=1e-8) -> Trajectory:
    """RK4 integration of dx/dt = (hbar/m) grad(phase); exact for uniform pilots.

    Near a node (stage speed above 1e3 times the pilot's typical speed) the
    step is retried with up to 2^6 substeps; if the spike persists the run
    aborts with a NodeProximityError carrying the partial trajectory.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    run = evolve_ensemble(pilot, x0[None, :] if pilot.dims > 1 else x0[:1],
                          t0, t1, dt, record_every=record_every,
                          node_epsilon=node_epsilon)
    _, dt_eff, _, _ = _record_times(t0, t1, dt, record_every)
    times = run.times
    pos = run.positions[:, 0]
    status = run.status[0]
    if status >= 0:
        t_fail = t0 + status * dt_eff
        good = times <= t_fail + 1e-12
        partial = Trajectory(0, times[good], pos[good], completed=False)
        raise NodeProximityError(
            f"trajectory hit a pilot node near t={t_fail:.6g}",
            t=t_fail, x=pos[np.sum(good) - 1], partial=partial,
        )
    vels = np.array([guidance_velocity(pilot, t, p, node_epsilon=node_epsilon)
                     for t, p in zip(times, pos)])
    return Trajectory(0, times, pos, velocities=vels)


@dataclass
class EnsembleRun:
    """Positions of many particles at the recorded times."""

    times: np.ndarray
    positions: np.ndarray  # (n_times, n_particles) in 1D
    status: np.ndarray     # -1 completed, else step index of node abort

    def at_time(self, t):
        i = int(np.argmin(np.abs(self.times - t)))
        return self.positions[i]


def evolve_ensemble(pilot, x0s, t0, t1, dt, record_every=1,
                    node_epsilon=1e-8, backend=None) -> EnsembleRun:
    """Transport an ensemble of initial points along guidance trajectories."""
    x0s = np.asarray(x0s, dtype=float)
    n_steps, dt_eff, times, rec_idx = _record_times(t0, t1, dt, record_every)
    if has_uniform_phase_gradient(pilot):
        # velocity is x-independent: the step displacement integrates exactly
        disp = np.array([uniform_displacement(pilot, t0, t)[0] if pilot.dims == 1
                         else uniform_displacement(pilot, t0, t) for t in times])
        if pilot.dims == 1:
            pos = x0s[None, :] + disp[:, None]
        else:
            pos = x0s[None, :, :] + disp[:, None, :]
        return EnsembleRun(times, pos, np.full(len(x0s), -1, np.int64))
    if isinstance(pilot, EigenstateSuperposition):
        c = pilot.constants
        nmax = pilot.n_max
        coeffs = np.zeros(nmax + 1, dtype=np.complex128)
        for n, cn in pilot.terms:
            coeffs[n] += cn
        alpha = np.sqrt(c.mass * pilot.omega / c.hbar)
        cap = NODE_SPEED_FACTOR * typical_speed(pilot)
        out, status = _kernels.superposition_ensemble_rk4(
            x0s, t0, dt_eff, n_steps, rec_idx, pilot.omega, alpha, coeffs,
            c.hbar / c.mass, reference_amplitude(pilot), node_epsilon, cap,
            backend=backend,
        )
        return EnsembleRun(times, out, status)
    return _evolve_generic(pilot, x0s, t0, dt_eff, n_steps, rec_idx, node_epsilon)


def _rk4_point(vfun, t, x, dt):
    k1 = vfun(t, x)
    k2 = vfun(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = vfun(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = vfun(t + dt, x + dt * k3)
    return x + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0, max(
        float(np.max(np.abs(k))) for k in (k1, k2, k3, k4))


def _evolve_generic(pilot, x0s, t0, dt, n_steps, rec_idx, node_epsilon):
    """Python RK4 fallback for numeric or multi-dimensional pilots."""
    cap = NODE_SPEED_FACTOR * typical_speed(pilot)

    def vfun(t, x):
        return guidance_velocity(pilot, t, x, node_epsilon=node_epsilon)

    xs = [np.atleast_1d(np.asarray(x, float)) for x in
          (x0s if np.ndim(x0s) > 0 else [x0s])]
    n = len(xs)
    status = np.full(n, -1, np.int64)
    rec = {0: [x.copy() for x in xs]}
    rec_set = set(int(i) for i in rec_idx)
    for step in range(n_steps):
        t = t0 + step * dt
        for i in range(n):
            if status[i] >= 0:
                continue
            ok = False
            for level in range(_kernels.MAX_HALVINGS + 1):
                nsub = 1 << level
                h = dt / nsub
                xx = xs[i]
                try:
                    bad = False
                    for s in range(nsub):
                        xx, vmax = _rk4_point(vfun, t + s * h, xx, h)
                        if not np.all(np.isfinite(xx)) or vmax > cap:
                            bad = True
                            break
                    if not bad:
                        xs[i] = xx
                        ok = True
                        break
                except NodeProximityError:
                    continue
            if not ok:
                status[i] = step
        if (step + 1) in rec_set:
            rec[step + 1] = [x.copy() for x in xs]
    times = t0 + np.asarray(sorted(rec)) * dt
    stacked = np.array([np.array(rec[k]) for k in sorted(rec)])
    if stacked.shape[-1] == 1 and pilot.dims == 1:
        stacked = stacked[..., 0]
    return EnsembleRun(times, stacked, status)


# --- N-particle configuration-space guidance (product / symmetrized sums) ---

@dataclass(frozen=True)
class ProductPilot:
    """Psi(x1..xN) = prod_i psi_i(x_i) for independent 1D pilots, N <= 3."""

    specs: tuple

    def __post_init__(self):
        if not (1 <= len(self.specs) <= 3):
            raise ValueError("configuration guidance supports 1 to 3 particles")
        if any(s.dims != 1 for s in self.specs):
            raise ValueError("component pilots must be one-dimensional")

    @property
    def n_particles(self):
        return len(self.specs)

    def psi_and_grads(self, t, X):
        vals = [evaluate_with_gradient(s, t, X[i]) for i, s in enumerate(self.specs)]
        psis = [v[0] for v in vals]
        psi = np.prod(psis)
        grads = np.empty(len(self.specs), dtype=np.complex128)
        for i, (p, g) in enumerate(vals):
            others = psi / p if p != 0 else np.prod([q for j, q in enumerate(psis) if j != i])
            grads[i] = g[0] * others
        return psi, grads


@dataclass(frozen=True)
class SymmetrizedPilot:
    """Psi = sum over permutations (sign^parity) prod_i psi_{perm(i)}(x_i)."""

    specs: tuple
    sign: int = 1

    def __post_init__(self):
        if not (2 <= len(self.specs) <= 3):
            raise ValueError("symmetrized pilots need 2 or 3 particles")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if any(s.dims != 1 for s in self.specs):
            raise ValueError("component pilots must be one-dimensional")

    @property
    def n_particles(self):
        return len(self.specs)

    def psi_and_grads(self, t, X):
        n = len(self.specs)
        # per (spec, particle) values and derivatives
        v = np.empty((n, n), dtype=np.complex128)
        dv = np.empty((n, n), dtype=np.complex128)
        for a, s in enumerate(self.specs):
            for i in range(n):
                p, g = evaluate_with_gradient(s, t, X[i])
                v[a, i] = p
                dv[a, i] = g[0]
        psi = 0.0 + 0.0j
        grads = np.zeros(n, dtype=np.complex128)
        for perm in permutations(range(n)):
            parity = _perm_parity(perm)
            w = self.sign ** parity
            term = w * np.prod([v[perm[i], i] for i in range(n)])
            psi += term
            for i in range(n):
                rest = w * np.prod([v[perm[j], j] for j in range(n) if j != i])
                grads[i] += rest * dv[perm[i], i]
        return psi, grads


def _perm_parity(perm):
    perm = list(perm)
    parity = 0
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            parity += 1
    return parity


def configuration_velocity(pilot_n, t, X, constants_list=None, node_epsilon=1e-8):
    """Per-particle guidance velocities in configuration space."""
    X = np.asarray(X, dtype=float)
    psi, grads = pilot_n.psi_and_grads(t, X)
    rho = abs(psi) ** 2
    ref = np.prod([reference_amplitude(s, t) for s in pilot_n.specs])
    if isinstance(pilot_n, SymmetrizedPilot):
        ref *= math.factorial(pilot_n.n_particles)
    if rho <= (node_epsilon * ref) ** 2:
        raise NodeProximityError(
            f"N-particle amplitude below node threshold at t={t}", t=t, x=X)
    consts = constants_list or [s.constants for s in pilot_n.specs]
    hom = np.array([c.hbar / c.mass for c in consts])
    return hom * np.imag(np.conj(psi) * grads) / rho


def integrate_configuration(pilot_n, X0, t0, t1, dt, record_every=1,
                            node_epsilon=1e-8) -> Trajectory:
    """Simultaneous RK4 guidance of N <= 3 particles (configuration space)."""
    X0 = np.asarray(X0, dtype=float)
    if X0.shape != (pilot_n.n_particles,):
        raise ValueError(f"X0 must have shape ({pilot_n.n_particles},)")
    n_steps, dt, times, rec_idx = _record_times(t0, t1, dt, record_every)
    speeds = [typical_speed(s) for s in pilot_n.specs]
    cap = NODE_SPEED_FACTOR * max(speeds)

    def vfun(t, X):
        return configuration_velocity(pilot_n, t, X, node_epsilon=node_epsilon)

    X = X0.copy()
    rec = [X0.copy()]
    rec_set = set(int(i) for i in rec_idx)
    rec_t = [t0]
    for step in range(n_steps):
        t = t0 + step * dt
        advanced = False
        for level in range(_kernels.MAX_HALVINGS + 1):
            nsub = 1 << level
            h = dt / nsub
            XX = X.copy()
            try:
                bad = False
                for s in range(nsub):
                    XX, vmax = _rk4_point(vfun, t + s * h, XX, h)
                    if vmax > cap:
                        bad = True
                        break
                if not bad:
                    X = XX
                    advanced = True
                    break
            except NodeProximityError:
                continue
        if not advanced:
            partial = Trajectory(0, np.asarray(rec_t), np.asarray(rec), completed=False)
            raise NodeProximityError(
                f"configuration trajectory hit the nodal set near t={t:.6g}",
                t=t, x=X, partial=partial)
        if (step + 1) in rec_set:
            rec.append(X.copy())
            rec_t.append(t + dt)
    return Trajectory(0, np.asarray(rec_t), np.asarray(rec))


@dataclass(frozen=True)
class ConfigurationSuperposition:
    """Two-particle pilot sum_k c_k phi_{a_k}(x1) phi_{b_k}(x2) e^{-i E_k t / hbar}.

    The closed-form family the fast ensemble kernels understand; product and
    symmetrized pilots built from eigenstate superpositions expand into it.
    """

    terms: tuple  # ((a, b, complex coefficient), ...)
    omega: float
    constants: PhysicalConstants = None

    def __post_init__(self):
        if self.constants is None:
            object.__setattr__(self, "constants", PhysicalConstants())
        terms = tuple((int(a), int(b), complex(c)) for a, b, c in self.terms)
        if not terms or all(c == 0 for _, _, c in terms):
            raise ValueError("superposition coefficients must not all vanish")
        object.__setattr__(self, "terms", terms)
        if self.omega <= 0:
            raise ValueError("omega must be positive")

    @property
    def n_particles(self):
        return 2

    @property
    def n_max(self):
        return max(max(a, b) for a, b, _ in self.terms)

    def _arrays(self):
        a = np.array([t[0] for t in self.terms], dtype=np.int64)
        b = np.array([t[1] for t in self.terms], dtype=np.int64)
        c = np.array([t[2] for t in self.terms], dtype=np.complex128)
        return a, b, c

    def density(self, t, x1, x2):
        """|Psi|^2 in the physical normalization, vectorized."""
        cst = self.constants
        alpha = np.sqrt(cst.mass * self.omega / cst.hbar)
        a, b, c = self._arrays()
        psi, _, _ = _kernels._config_psi_grads_numpy(
            t, x1, x2, self.omega, alpha, a, b, c.real, c.imag, self.n_max)
        return alpha ** 2 * (psi.real ** 2 + psi.imag ** 2)


def as_configuration_superposition(pilot_n, omega=None):
    """Expand a 2-particle product/symmetrized eigenstate pilot into terms."""
    if isinstance(pilot_n, ConfigurationSuperposition):
        return pilot_n
    specs = pilot_n.specs
    if len(specs) != 2 or not all(isinstance(s, EigenstateSuperposition) for s in specs):
        return None
    if specs[0].omega != specs[1].omega:
        return None
    terms = {}
    if isinstance(pilot_n, ProductPilot):
        pairs = [((0, 1), 1.0)]
    else:
        pairs = [((0, 1), 1.0), ((1, 0), float(pilot_n.sign))]
    for (i, j), w in pairs:
        for na, ca in specs[i].terms:
            for nb, cb in specs[j].terms:
                terms[(na, nb)] = terms.get((na, nb), 0.0) + w * ca * cb
    kept = tuple((a, b, c) for (a, b), c in sorted(terms.items()) if c != 0)
    if not kept:  # e.g. fermionic symmetrization of identical states
        return None
    return ConfigurationSuperposition(
        terms=kept, omega=specs[0].omega, constants=specs[0].constants)


def configuration_reference_amplitude(pilot2: ConfigurationSuperposition) -> float:
    cst = pilot2.constants
    alpha = np.sqrt(cst.mass * pilot2.omega / cst.hbar)
    span = (np.sqrt(2 * pilot2.n_max + 1.0) + 4.0) / alpha
    xs = np.linspace(-span, span, 256)
    X1, X2 = np.meshgrid(xs, xs)
    rho = pilot2.density(0.0, X1.ravel(), X2.ravel())
    # loose upper bound over time: sum of |c_k| times single-term maxima
    return float(np.sqrt(rho.max())) * len(pilot2.terms)


def evolve_configuration_ensemble(pilot2: ConfigurationSuperposition, X0s,
                                  t0, t1, dt, record_every=1,
                                  node_epsilon=1e-8, backend=None) -> EnsembleRun:
    """Transport an ensemble of 2-particle configurations under guidance."""
    X0s = np.asarray(X0s, dtype=float)
    if X0s.ndim != 2 or X0s.shape[1] != 2:
        raise ValueError("X0s must have shape (n, 2)")
    n_steps, dt_eff, times, rec_idx = _record_times(t0, t1, dt, record_every)
    cst = pilot2.constants
    alpha = np.sqrt(cst.mass * pilot2.omega / cst.hbar)
    a, b, c = pilot2._arrays()
    cap = NODE_SPEED_FACTOR * np.sqrt(cst.hbar * pilot2.omega * (2 * pilot2.n_max + 1) / cst.mass)
    out, status = _kernels.config_ensemble_rk4(
        X0s, t0, dt_eff, n_steps, rec_idx, pilot2.omega, alpha, a, b, c,
        cst.hbar / cst.mass, configuration_reference_amplitude(pilot2),
        node_epsilon, cap, backend=backend)
    return EnsembleRun(times, out, status)


# --- ensembles and relaxation diagnostics ---

@dataclass
class Ensemble:
    """Initial positions, their sampling law, and the transported run."""

    initial_positions: np.ndarray
    sampling: str = "born"
    run: EnsembleRun = None

    def __post_init__(self):
        self.initial_positions = np.asarray(self.initial_positions, dtype=float)

    @property
    def n_samples(self):
        return len(self.initial_positions)

    def positions_at(self, t):
        if self.run is None:
            raise ValueError("ensemble has not been evolved")
        return self.run.at_time(t)


def born_sample(pilot, n, rng, t=0.0, domain=None) -> np.ndarray:
    """Draw n positions from |psi(t)|^2 (inverse CDF on a fine grid)."""
    if isinstance(pilot, CoherentState) and pilot.dims == 1:
        return rng.normal(pilot.center(t)[0], pilot.sigma, size=n)
    lo, hi = domain or pilot_support(pilot, t)
    xs = np.linspace(lo, hi, 16384)
    rho = np.abs(evaluate(pilot, t, xs)) ** 2
    cdf = np.cumsum(rho)
    cdf /= cdf[-1]
    u = rng.random(n)
    return np.interp(u, cdf, xs)


def uniform_sample(lo, hi, n, rng) -> np.ndarray:
    return rng.uniform(lo, hi, size=n)


def pilot_support(pilot, t=0.0):
    """Interval that carries essentially all of |psi|^2 (per axis)."""
    if isinstance(pilot, CoherentState):
        c0 = pilot.center(t)[0]
        return (c0 - 8 * pilot.sigma, c0 + 8 * pilot.sigma)
    if isinstance(pilot, (EigenstateSuperposition, ConfigurationSuperposition)):
        c = pilot.constants
        alpha = np.sqrt(c.mass * pilot.omega / c.hbar)
        span = (np.sqrt(2 * pilot.n_max + 1.0) + 6.0) / alpha
        return (-span, span)
    if isinstance(pilot, NumericField):
        ax = pilot.grid.axes()[0]
        return (float(ax[0]), float(ax[-1]))
    raise ValueError("no support estimate for this pilot family")


def make_ensemble(pilot, n, sampling="born", rng=None, domain=None, t=0.0) -> Ensemble:
    rng = rng or np.random.default_rng(0)
    if n < 1:
        raise ValueError("ensemble needs at least one sample")
    two_d = isinstance(pilot, ConfigurationSuperposition)
    if sampling == "born":
        if two_d:
            x0 = born_sample_2d(pilot, n, rng, t=t, domain=domain)
        else:
            x0 = born_sample(pilot, n, rng, t=t, domain=domain)
    elif sampling == "uniform":
        lo, hi = domain or pilot_support(pilot, t)
        if two_d:
            x0 = np.column_stack([uniform_sample(lo, hi, n, rng),
                                  uniform_sample(lo, hi, n, rng)])
        else:
            x0 = uniform_sample(lo, hi, n, rng)
    else:
        raise ValueError(f"unknown sampling {sampling!r}")
    return Ensemble(initial_positions=x0, sampling=sampling)


def born_sample_2d(pilot2: ConfigurationSuperposition, n, rng, t=0.0, domain=None):
    """Rejection-sample configuration points from |Psi(t)|^2."""
    lo, hi = domain or pilot_support(pilot2, t)
    xs = np.linspace(lo, hi, 256)
    X1, X2 = np.meshgrid(xs, xs)
    rho_max = pilot2.density(t, X1.ravel(), X2.ravel()).max() * 1.2
    out = np.empty((n, 2))
    filled = 0
    while filled < n:
        m = max(2 * (n - filled), 1024)
        cand = rng.uniform(lo, hi, size=(m, 2))
        u = rng.uniform(0.0, rho_max, size=m)
        keep = cand[u < pilot2.density(t, cand[:, 0], cand[:, 1])]
        take = min(len(keep), n - filled)
        out[filled:filled + take] = keep[:take]
        filled += take
    return out


def relaxation_h(ensemble: Ensemble, pilot, t, bin_width=None, domain=None,
                 eps=1e-12) -> float:
    """Coarse-grained H = sum rho_bar ln(rho_bar / |psi|^2_bar) * cell volume.

    Non-negative up to sampling noise; zero iff the binned ensemble matches
    the binned Born density. Handles single-particle (1D) and two-particle
    (configuration-space) ensembles.
    """
    if ensemble.n_samples < 100:
        raise ValueError("relaxation diagnostics need at least 100 samples")
    xs = ensemble.positions_at(t)
    lo, hi = domain or pilot_support(pilot, t)
    if bin_width is None:
        bin_width = (hi - lo) / 64.0
    edges = np.arange(lo, hi + 0.5 * bin_width, bin_width)
    widths = np.diff(edges)
    if np.ndim(xs) == 2:  # configuration space
        counts, _, _ = np.histogram2d(xs[:, 0], xs[:, 1], bins=(edges, edges))
        area = widths[:, None] * widths[None, :]
        rho_bar = counts / counts.sum() / area
        q = np.linspace(0.0, 1.0, 5)[1:-1]
        pts = edges[:-1, None] + widths[:, None] * q[None, :]
        p1 = np.repeat(pts.ravel(), pts.size)
        p2 = np.tile(pts.ravel(), pts.size)
        rho_psi = pilot.density(t, p1, p2)
        nb, nq = pts.shape
        q_bar = rho_psi.reshape(nb, nq, nb, nq).mean(axis=(1, 3))
        return float(np.sum(rho_bar * np.log((rho_bar + eps) / (q_bar + eps)) * area))
    counts, edges = np.histogram(xs, bins=edges)
    rho_bar = counts / counts.sum() / widths
    # bin-averaged Born density from interior quadrature points per bin
    q = np.linspace(0.0, 1.0, 10)[1:-1]
    pts = edges[:-1, None] + widths[:, None] * q[None, :]
    rho_psi = np.abs(evaluate(pilot, t, pts.ravel())) ** 2
    q_bar = rho_psi.reshape(pts.shape).mean(axis=1)
    return float(np.sum(rho_bar * np.log((rho_bar + eps) / (q_bar + eps)) * widths))


def ks_statistic(samples, cdf) -> float:
    """One-sample Kolmogorov-Smirnov statistic against a callable CDF."""
    xs = np.sort(np.asarray(samples, dtype=float))
    n = len(xs)
    c = np.asarray(cdf(xs), dtype=float)
    upper = np.arange(1, n + 1) / n - c
    lower = c - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def born_cdf(pilot, t, domain=None):
    """Numeric CDF of |psi(t)|^2 as a callable (1D)."""
    lo, hi = domain or pilot_support(pilot, t)
    xs = np.linspace(lo, hi, 16384)
    rho = np.abs(evaluate(pilot, t, xs)) ** 2
    cdf = np.concatenate([[0.0], np.cumsum((rho[1:] + rho[:-1]) * 0.5 * np.diff(xs))])
    cdf /= cdf[-1]

    def F(x):
        return np.interp(x, xs, cdf)

    return F
