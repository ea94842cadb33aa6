"""Hot inner loops for ensemble trajectory integration.

Two interchangeable backends: numba-jitted per-particle loops (default) and
a vectorized pure-numpy fallback. Select with the environment variable
SOLITONLAB_DISABLE_NUMBA=1 or per call via backend="numpy"/"numba".
Both backends perform identical IEEE arithmetic per particle (no fastmath),
so results agree to roundoff and runs are reproducible.

The jitted path covers the eigenstate-superposition pilot, the only family
whose guidance velocity needs per-point special-function work; uniform-phase
pilots are integrated in closed form elsewhere.
"""

from __future__ import annotations

import math
import os

import numpy as np

DISABLE_ENV = "SOLITONLAB_DISABLE_NUMBA"

try:
    import numba
    from numba import njit, prange

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap

    prange = range

MAX_HALVINGS = 6


def numba_enabled() -> bool:
    return NUMBA_AVAILABLE and os.environ.get(DISABLE_ENV, "") not in ("1", "true", "yes")


def active_backend() -> str:
    return "numba" if numba_enabled() else "numpy"


# ---------------------------------------------------------------------------
# numba backend: scalar velocity + per-particle RK4 with step-halving retries
# ---------------------------------------------------------------------------

@njit(cache=True)
def _super_velocity_scalar(t, x, omega, alpha, cre, cim, hbar_over_m, rho_floor):
    """Guidance velocity of a 1D eigenstate superposition at one point.

    Works in the dimensionless Hermite basis (the sqrt(alpha) normalization
    cancels in the ratio). Returns NaN at nodes (rho <= rho_floor).
    """
    xi = alpha * x
    b = math.pi ** -0.25 * math.exp(-0.5 * xi * xi)  # phi-hat_0
    bm = 0.0
    # e^{-i omega (n + 1/2) t} built as base * step^n
    pr = math.cos(0.5 * omega * t)
    pi_ = -math.sin(0.5 * omega * t)
    wr = math.cos(omega * t)
    wi = -math.sin(omega * t)
    psi_r = 0.0
    psi_i = 0.0
    dpsi_r = 0.0
    dpsi_i = 0.0
    nmax = cre.shape[0] - 1
    for n in range(nmax + 1):
        bp = math.sqrt(2.0 / (n + 1)) * xi * b - math.sqrt(n / (n + 1.0)) * bm
        cr = cre[n]
        ci = cim[n]
        if cr != 0.0 or ci != 0.0:
            ar = cr * pr - ci * pi_
            ai = cr * pi_ + ci * pr
            d = alpha * (math.sqrt(n / 2.0) * bm - math.sqrt((n + 1) / 2.0) * bp)
            psi_r += ar * b
            psi_i += ai * b
            dpsi_r += ar * d
            dpsi_i += ai * d
        bm = b
        b = bp
        tmp = pr * wr - pi_ * wi
        pi_ = pr * wi + pi_ * wr
        pr = tmp
    rho = psi_r * psi_r + psi_i * psi_i
    if rho <= rho_floor or not math.isfinite(rho):
        return math.nan
    return hbar_over_m * (psi_r * dpsi_i - psi_i * dpsi_r) / rho


@njit(cache=True)
def _advance_particle(x, t, dt, omega, alpha, cre, cim, hbar_over_m, rho_floor,
                      speed_cap):
    """One RK4 step, retried with 2^r substeps when a stage spikes or hits a node.

    Returns (x_new, ok)."""
    for r in range(MAX_HALVINGS + 1):
        nsub = 1 << r
        h = dt / nsub
        xx = x
        bad = False
        for s in range(nsub):
            ts = t + s * h
            k1 = _super_velocity_scalar(ts, xx, omega, alpha, cre, cim, hbar_over_m, rho_floor)
            k2 = _super_velocity_scalar(ts + 0.5 * h, xx + 0.5 * h * k1, omega, alpha,
                                        cre, cim, hbar_over_m, rho_floor)
            k3 = _super_velocity_scalar(ts + 0.5 * h, xx + 0.5 * h * k2, omega, alpha,
                                        cre, cim, hbar_over_m, rho_floor)
            k4 = _super_velocity_scalar(ts + h, xx + h * k3, omega, alpha,
                                        cre, cim, hbar_over_m, rho_floor)
            vmax = max(abs(k1), abs(k2), abs(k3), abs(k4))
            if not math.isfinite(vmax) or vmax > speed_cap:
                bad = True
                break
            xx = xx + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if not bad:
            return xx, True
    return x, False


@njit(parallel=True, cache=True)
def _super_ensemble_numba(x0, t0, dt, n_steps, rec_idx, omega, alpha,
                          cre, cim, hbar_over_m, rho_floor, speed_cap):
    n = x0.shape[0]
    out = np.empty((rec_idx.shape[0], n))
    status = np.full(n, -1, np.int64)
    for i in prange(n):
        x = x0[i]
        out[0, i] = x
        dead = False
        r = 1
        for step in range(n_steps):
            if not dead:
                t = t0 + step * dt
                x_new, ok = _advance_particle(x, t, dt, omega, alpha, cre, cim,
                                              hbar_over_m, rho_floor, speed_cap)
                if ok:
                    x = x_new
                else:
                    dead = True
                    status[i] = step
            if r < rec_idx.shape[0] and step + 1 == rec_idx[r]:
                out[r, i] = x
                r += 1
    return out, status


# ---------------------------------------------------------------------------
# two-particle configuration space: Psi = sum_k c_k phi_{a_k}(x1) phi_{b_k}(x2)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _fill_basis(x, alpha, nmax, idx, phi, dphi):
    """Rolling Hermite recurrence; captures phi_n and phi_n' at the listed n."""
    xi = alpha * x
    b = math.pi ** -0.25 * math.exp(-0.5 * xi * xi)
    bm = 0.0
    for n in range(nmax + 1):
        bp = math.sqrt(2.0 / (n + 1)) * xi * b - math.sqrt(n / (n + 1.0)) * bm
        for k in range(idx.shape[0]):
            if idx[k] == n:
                phi[k] = b
                dphi[k] = alpha * (math.sqrt(n / 2.0) * bm - math.sqrt((n + 1) / 2.0) * bp)
        bm = b
        b = bp


@njit(cache=True)
def _config_velocity(t, x1, x2, omega, alpha, a_idx, b_idx, cre, cim, nmax,
                     hbar_over_m, rho_floor, phi1, dphi1, phi2, dphi2):
    _fill_basis(x1, alpha, nmax, a_idx, phi1, dphi1)
    _fill_basis(x2, alpha, nmax, b_idx, phi2, dphi2)
    psi = 0.0j
    d1 = 0.0j
    d2 = 0.0j
    for k in range(a_idx.shape[0]):
        e_k = omega * (a_idx[k] + b_idx[k] + 1.0) * t
        c = complex(cre[k], cim[k]) * complex(math.cos(e_k), -math.sin(e_k))
        psi += c * phi1[k] * phi2[k]
        d1 += c * dphi1[k] * phi2[k]
        d2 += c * phi1[k] * dphi2[k]
    rho = psi.real * psi.real + psi.imag * psi.imag
    if rho <= rho_floor or not math.isfinite(rho):
        return math.nan, math.nan
    v1 = hbar_over_m * (psi.real * d1.imag - psi.imag * d1.real) / rho
    v2 = hbar_over_m * (psi.real * d2.imag - psi.imag * d2.real) / rho
    return v1, v2


@njit(cache=True)
def _advance_config_particle(x1, x2, t, dt, omega, alpha, a_idx, b_idx, cre, cim,
                             nmax, hbar_over_m, rho_floor, speed_cap,
                             phi1, dphi1, phi2, dphi2):
    for r in range(MAX_HALVINGS + 1):
        nsub = 1 << r
        h = dt / nsub
        u1 = x1
        u2 = x2
        bad = False
        for s in range(nsub):
            ts = t + s * h
            a1, a2 = _config_velocity(ts, u1, u2, omega, alpha, a_idx, b_idx, cre, cim,
                                      nmax, hbar_over_m, rho_floor, phi1, dphi1, phi2, dphi2)
            b1, b2 = _config_velocity(ts + 0.5 * h, u1 + 0.5 * h * a1, u2 + 0.5 * h * a2,
                                      omega, alpha, a_idx, b_idx, cre, cim, nmax,
                                      hbar_over_m, rho_floor, phi1, dphi1, phi2, dphi2)
            c1, c2 = _config_velocity(ts + 0.5 * h, u1 + 0.5 * h * b1, u2 + 0.5 * h * b2,
                                      omega, alpha, a_idx, b_idx, cre, cim, nmax,
                                      hbar_over_m, rho_floor, phi1, dphi1, phi2, dphi2)
            d1, d2 = _config_velocity(ts + h, u1 + h * c1, u2 + h * c2,
                                      omega, alpha, a_idx, b_idx, cre, cim, nmax,
                                      hbar_over_m, rho_floor, phi1, dphi1, phi2, dphi2)
            vmax = max(abs(a1), abs(a2), abs(b1), abs(b2), abs(c1), abs(c2),
                       abs(d1), abs(d2))
            if not math.isfinite(vmax) or vmax > speed_cap:
                bad = True
                break
            u1 = u1 + h * (a1 + 2.0 * b1 + 2.0 * c1 + d1) / 6.0
            u2 = u2 + h * (a2 + 2.0 * b2 + 2.0 * c2 + d2) / 6.0
        if not bad:
            return u1, u2, True
    return x1, x2, False


@njit(parallel=True, cache=True)
def _config_ensemble_numba(x0, t0, dt, n_steps, rec_idx, omega, alpha,
                           a_idx, b_idx, cre, cim, nmax, hbar_over_m,
                           rho_floor, speed_cap):
    n = x0.shape[0]
    nk = a_idx.shape[0]
    out = np.empty((rec_idx.shape[0], n, 2))
    status = np.full(n, -1, np.int64)
    for i in prange(n):
        phi1 = np.empty(nk)
        dphi1 = np.empty(nk)
        phi2 = np.empty(nk)
        dphi2 = np.empty(nk)
        x1 = x0[i, 0]
        x2 = x0[i, 1]
        out[0, i, 0] = x1
        out[0, i, 1] = x2
        dead = False
        r = 1
        for step in range(n_steps):
            if not dead:
                t = t0 + step * dt
                n1, n2, ok = _advance_config_particle(
                    x1, x2, t, dt, omega, alpha, a_idx, b_idx, cre, cim, nmax,
                    hbar_over_m, rho_floor, speed_cap, phi1, dphi1, phi2, dphi2)
                if ok:
                    x1 = n1
                    x2 = n2
                else:
                    dead = True
                    status[i] = step
            if r < rec_idx.shape[0] and step + 1 == rec_idx[r]:
                out[r, i, 0] = x1
                out[r, i, 1] = x2
                r += 1
    return out, status


def _config_psi_grads_numpy(t, x1, x2, omega, alpha, a_idx, b_idx, cre, cim, nmax):
    xi1 = alpha * np.asarray(x1, dtype=float)
    xi2 = alpha * np.asarray(x2, dtype=float)

    def basis(xi):
        rows = [np.pi ** -0.25 * np.exp(-0.5 * xi * xi)]
        rows.append(np.sqrt(2.0) * xi * rows[0])
        for n in range(1, nmax + 1):
            rows.append(np.sqrt(2.0 / (n + 1)) * xi * rows[n]
                        - np.sqrt(n / (n + 1.0)) * rows[n - 1])
        return rows

    b1 = basis(xi1)
    b2 = basis(xi2)

    def dphi(rows, xi, n):
        lo = rows[n - 1] if n > 0 else 0.0
        return alpha * (np.sqrt(n / 2.0) * lo - np.sqrt((n + 1) / 2.0) * rows[n + 1])

    psi = np.zeros(np.broadcast_shapes(xi1.shape, xi2.shape), dtype=np.complex128)
    d1 = np.zeros_like(psi)
    d2 = np.zeros_like(psi)
    for k in range(len(a_idx)):
        a, b = int(a_idx[k]), int(b_idx[k])
        c = (cre[k] + 1j * cim[k]) * np.exp(-1j * omega * (a + b + 1.0) * t)
        psi += c * b1[a] * b2[b]
        d1 += c * dphi(b1, xi1, a) * b2[b]
        d2 += c * b1[a] * dphi(b2, xi2, b)
    return psi, d1, d2


def _config_velocity_numpy(t, x, omega, alpha, a_idx, b_idx, cre, cim, nmax,
                           hbar_over_m, rho_floor):
    psi, d1, d2 = _config_psi_grads_numpy(t, x[:, 0], x[:, 1], omega, alpha,
                                          a_idx, b_idx, cre, cim, nmax)
    rho = psi.real ** 2 + psi.imag ** 2
    v = np.full((len(rho), 2), np.nan)
    good = (rho > rho_floor) & np.isfinite(rho)
    v[good, 0] = hbar_over_m * (psi.real * d1.imag - psi.imag * d1.real)[good] / rho[good]
    v[good, 1] = hbar_over_m * (psi.real * d2.imag - psi.imag * d2.real)[good] / rho[good]
    return v


def _advance_config_numpy(x, t, dt, depth, params):
    (omega, alpha, a_idx, b_idx, cre, cim, nmax, hbar_over_m, rho_floor,
     speed_cap) = params

    def v(ts, xs):
        return _config_velocity_numpy(ts, xs, omega, alpha, a_idx, b_idx, cre,
                                      cim, nmax, hbar_over_m, rho_floor)

    k1 = v(t, x)
    k2 = v(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = v(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = v(t + dt, x + dt * k3)
    speeds = np.max(np.abs(np.stack([k1, k2, k3, k4])), axis=(0, 2))
    bad = ~np.isfinite((k1 + k2 + k3 + k4).sum(axis=1)) | (speeds > speed_cap)
    x_new = x + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    ok = ~bad
    if np.any(bad):
        if depth >= MAX_HALVINGS:
            x_new[bad] = x[bad]
        else:
            xh, ok_h = _advance_config_numpy(x[bad], t, 0.5 * dt, depth + 1, params)
            xh2, ok_h2 = _advance_config_numpy(xh, t + 0.5 * dt, 0.5 * dt, depth + 1, params)
            x_new[bad] = xh2
            ok = ok.copy()
            ok[np.flatnonzero(bad)] = ok_h & ok_h2
    return x_new, ok


def _config_ensemble_numpy(x0, t0, dt, n_steps, rec_idx, omega, alpha,
                           a_idx, b_idx, cre, cim, nmax, hbar_over_m,
                           rho_floor, speed_cap):
    n = x0.shape[0]
    out = np.empty((rec_idx.shape[0], n, 2))
    out[0] = x0
    status = np.full(n, -1, np.int64)
    x = x0.astype(float).copy()
    alive = np.ones(n, dtype=bool)
    params = (omega, alpha, a_idx, b_idx, cre, cim, nmax, hbar_over_m,
              rho_floor, speed_cap)
    r = 1
    for step in range(n_steps):
        if np.any(alive):
            idx = np.flatnonzero(alive)
            x_new, ok = _advance_config_numpy(x[idx], t0 + step * dt, dt, 0, params)
            x[idx[ok]] = x_new[ok]
            died = idx[~ok]
            status[died] = step
            alive[died] = False
        if r < rec_idx.shape[0] and step + 1 == rec_idx[r]:
            out[r] = x
            r += 1
    return out, status


def config_ensemble_rk4(x0, t0, dt, n_steps, rec_idx, omega, alpha, a_idx,
                        b_idx, coeffs, hbar_over_m, ref_amp, node_epsilon,
                        speed_cap, backend=None):
    """Guidance trajectories for a two-particle eigenstate superposition.

    x0 has shape (n_particles, 2): configuration-space points.
    """
    x0 = np.ascontiguousarray(np.asarray(x0, dtype=float))
    a_idx = np.ascontiguousarray(np.asarray(a_idx, dtype=np.int64))
    b_idx = np.ascontiguousarray(np.asarray(b_idx, dtype=np.int64))
    cre = np.ascontiguousarray(np.real(coeffs).astype(float))
    cim = np.ascontiguousarray(np.imag(coeffs).astype(float))
    rec_idx = np.ascontiguousarray(np.asarray(rec_idx, dtype=np.int64))
    nmax = int(max(a_idx.max(), b_idx.max()))
    rho_floor = (node_epsilon * ref_amp) ** 2 / alpha ** 2
    if backend is None:
        backend = active_backend()
    if backend == "numba":
        if not NUMBA_AVAILABLE:
            raise RuntimeError("numba backend requested but numba is not importable")
        fn = _config_ensemble_numba
    elif backend == "numpy":
        fn = _config_ensemble_numpy
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return fn(x0, float(t0), float(dt), int(n_steps), rec_idx, float(omega),
              float(alpha), a_idx, b_idx, cre, cim, nmax, float(hbar_over_m),
              float(rho_floor), float(speed_cap))


# ---------------------------------------------------------------------------
# numpy backend: vectorized over particles, recursive halving on the subset
# that spikes
# ---------------------------------------------------------------------------

def _super_psi_dpsi_numpy(t, x, omega, alpha, cre, cim):
    xi = alpha * np.asarray(x, dtype=float)
    nmax = len(cre) - 1
    b = np.pi ** -0.25 * np.exp(-0.5 * xi * xi)
    bm = np.zeros_like(b)
    base = np.exp(-0.5j * omega * t)
    step = np.exp(-1j * omega * t)
    psi = np.zeros(xi.shape, dtype=np.complex128)
    dpsi = np.zeros_like(psi)
    p = base
    for n in range(nmax + 1):
        bp = np.sqrt(2.0 / (n + 1)) * xi * b - np.sqrt(n / (n + 1.0)) * bm
        c = cre[n] + 1j * cim[n]
        if c != 0:
            d = alpha * (np.sqrt(n / 2.0) * bm - np.sqrt((n + 1) / 2.0) * bp)
            psi += (c * p) * b
            dpsi += (c * p) * d
        bm, b = b, bp
        p = p * step
    return psi, dpsi


def _super_velocity_numpy(t, x, omega, alpha, cre, cim, hbar_over_m, rho_floor):
    psi, dpsi = _super_psi_dpsi_numpy(t, x, omega, alpha, cre, cim)
    rho = psi.real ** 2 + psi.imag ** 2
    v = np.full(rho.shape, np.nan)
    good = (rho > rho_floor) & np.isfinite(rho)
    v[good] = hbar_over_m * (psi.real * dpsi.imag - psi.imag * dpsi.real)[good] / rho[good]
    return v


def _advance_numpy(x, t, dt, depth, params):
    """RK4 step for an array of particles; recursively halves the bad subset."""
    omega, alpha, cre, cim, hbar_over_m, rho_floor, speed_cap = params

    def v(ts, xs):
        return _super_velocity_numpy(ts, xs, omega, alpha, cre, cim, hbar_over_m, rho_floor)

    k1 = v(t, x)
    k2 = v(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = v(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = v(t + dt, x + dt * k3)
    speeds = np.max(np.abs(np.stack([k1, k2, k3, k4])), axis=0)
    bad = ~np.isfinite(k1 + k2 + k3 + k4) | (speeds > speed_cap)
    x_new = x + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    ok = ~bad
    if np.any(bad):
        if depth >= MAX_HALVINGS:
            x_new[bad] = x[bad]
        else:
            xh, ok_h = _advance_numpy(x[bad], t, 0.5 * dt, depth + 1, params)
            xh2, ok_h2 = _advance_numpy(xh, t + 0.5 * dt, 0.5 * dt, depth + 1, params)
            x_new[bad] = xh2
            ok_bad = ok_h & ok_h2
            ok = ok.copy()
            ok[np.flatnonzero(bad)] = ok_bad
    return x_new, ok


def _super_ensemble_numpy(x0, t0, dt, n_steps, rec_idx, omega, alpha,
                          cre, cim, hbar_over_m, rho_floor, speed_cap):
    n = x0.shape[0]
    out = np.empty((rec_idx.shape[0], n))
    out[0] = x0
    status = np.full(n, -1, np.int64)
    x = x0.astype(float).copy()
    alive = np.ones(n, dtype=bool)
    params = (omega, alpha, cre, cim, hbar_over_m, rho_floor, speed_cap)
    r = 1
    for step in range(n_steps):
        if np.any(alive):
            idx = np.flatnonzero(alive)
            x_new, ok = _advance_numpy(x[idx], t0 + step * dt, dt, 0, params)
            x[idx[ok]] = x_new[ok]
            died = idx[~ok]
            status[died] = step
            alive[died] = False
        if r < rec_idx.shape[0] and step + 1 == rec_idx[r]:
            out[r] = x
            r += 1
    return out, status


def superposition_ensemble_rk4(x0, t0, dt, n_steps, rec_idx, omega, alpha,
                               coeffs, hbar_over_m, ref_amp, node_epsilon,
                               speed_cap, backend=None):
    """Integrate guidance trajectories for a 1D eigenstate superposition.

    coeffs: dense complex array indexed by eigenstate number n. rec_idx lists
    the step indices to record (starting with 0). Returns
    (positions[len(rec_idx), n_particles], status) where status[i] is -1 for
    a completed trajectory or the step index where it hit a node.
    """
    x0 = np.ascontiguousarray(np.asarray(x0, dtype=float))
    cre = np.ascontiguousarray(np.real(coeffs).astype(float))
    cim = np.ascontiguousarray(np.imag(coeffs).astype(float))
    rec_idx = np.ascontiguousarray(np.asarray(rec_idx, dtype=np.int64))
    # node floor in the dimensionless basis used by the kernels
    rho_floor = (node_epsilon * ref_amp) ** 2 / alpha
    if backend is None:
        backend = active_backend()
    if backend == "numba":
        if not NUMBA_AVAILABLE:
            raise RuntimeError("numba backend requested but numba is not importable")
        fn = _super_ensemble_numba
    elif backend == "numpy":
        fn = _super_ensemble_numpy
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return fn(x0, float(t0), float(dt), int(n_steps), rec_idx,
              float(omega), float(alpha), cre, cim, float(hbar_over_m),
              float(rho_floor), float(speed_cap))
