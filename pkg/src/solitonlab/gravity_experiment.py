"""Gravitational-phase predictions for the paired Stern-Gerlach interferometers.

Closed-form calculator: uniform-sphere self-gravity potentials, Compton-scale
estimates, the standard vs. mass-localized ("soliton") phase tables for two
recombined spin-1/2 systems, the single-device dephasing, and density-matrix
tomography quantities (purity, fidelity, negativity). SI units throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral_core import C_SI, G_SI, HBAR_SI, PhysicalConstants

BRANCHES = ("+", "-")
BASIS = tuple((i, j) for i in BRANCHES for j in BRANCHES)  # ++, +-, -+, --


def si_constants(mass=1.0) -> PhysicalConstants:
    return PhysicalConstants(hbar=HBAR_SI, mass=mass, G=G_SI, c=C_SI)


@dataclass(frozen=True)
class SelfGravitySphere:
    """Uniform sphere of mass m and radius R sourcing its own Newton potential."""

    mass: float
    radius: float

    def __post_init__(self):
        if self.mass <= 0 or self.radius <= 0:
            raise ValueError("mass and radius must be positive")


def sphere_potential(sphere: SelfGravitySphere, d, G=G_SI) -> float:
    """Self-interaction energy at distance d from the sphere centre (J).

    Interior: (G m^2 / R)(-3/2 + (d/R)^2 / 2); exterior: -G m^2 / d. The two
    branches agree at d = R.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise ValueError("distance must be non-negative")
    m, R = sphere.mass, sphere.radius
    inside = G * m ** 2 / R * (-1.5 + 0.5 * (d / R) ** 2)
    outside = -G * m ** 2 / np.where(d > 0, d, np.inf)
    out = np.where(d <= R, inside, outside)
    return float(out) if out.ndim == 0 else out


def compton_radius(mass, constants: PhysicalConstants = None) -> float:
    """hbar / (m c): the intrinsic soliton size estimate."""
    c = constants or si_constants()
    if mass <= 0:
        raise ValueError("mass must be positive")
    return c.hbar / (mass * c.c)


def self_coupling_ratio(mass, constants: PhysicalConstants = None) -> float:
    """G m^2 / (hbar c): gravitational vs self-focusing strength."""
    c = constants or si_constants()
    if mass <= 0:
        raise ValueError("mass must be positive")
    return c.G * mass ** 2 / (c.hbar * c.c)


def soliton_spring_constant(mass, constants: PhysicalConstants = None) -> dict:
    """Spring constants of the self-gravity well and the self-focusing well.

    k_grav = G rho m with rho = m^4 c^3 / hbar^3 (Compton-density estimate),
    k_focus = m^3 c^4 / hbar^2, and their ratio G m^2 / (hbar c).
    """
    c = constants or si_constants()
    if mass <= 0:
        raise ValueError("mass must be positive")
    rho = mass ** 4 * c.c ** 3 / c.hbar ** 3
    k_grav = c.G * rho * mass
    k_focus = mass ** 3 * c.c ** 4 / c.hbar ** 2
    return {"k_grav": k_grav, "k_focus": k_focus,
            "ratio": self_coupling_ratio(mass, c)}


@dataclass(frozen=True)
class ExperimentConfig:
    """Two nanospheres falling through parallel spin interferometers.

    d_cross[(i, j)] is the distance between the axis of spin branch i of
    system A and branch j of system B; d_intra_a / d_intra_b separate the two
    spin paths within one device. Amplitudes are per-system spinor entries.
    """

    m_a: float
    m_b: float
    r_a: float
    r_b: float
    tau: float
    d_cross: dict
    d_intra_a: float
    d_intra_b: float
    alpha_a: complex = 1.0 / np.sqrt(2.0)
    beta_a: complex = 1.0 / np.sqrt(2.0)
    alpha_b: complex = 1.0 / np.sqrt(2.0)
    beta_b: complex = 1.0 / np.sqrt(2.0)
    constants: PhysicalConstants = field(default_factory=si_constants)

    def __post_init__(self):
        for name in ("m_a", "m_b", "r_a", "r_b", "d_intra_a", "d_intra_b"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        cross = {tuple(k) if not isinstance(k, str) else (k[0], k[1]): float(v)
                 for k, v in self.d_cross.items()}
        if set(cross) != set(BASIS):
            raise ValueError("d_cross must provide the four branch pairs ++, +-, -+, --")
        object.__setattr__(self, "d_cross", cross)
        rmax = max(self.r_a, self.r_b)
        for v in cross.values():
            if v <= rmax:
                raise ValueError("branch separations must exceed the sphere radii")
        for name, (a, b) in (("A", (self.alpha_a, self.beta_a)),
                             ("B", (self.alpha_b, self.beta_b))):
            if abs(abs(a) ** 2 + abs(b) ** 2 - 1.0) > 1e-9:
                raise ValueError(f"spin amplitudes of system {name} are not normalized")

    def amplitude(self, system, branch):
        if system == "A":
            return self.alpha_a if branch == "+" else self.beta_a
        return self.alpha_b if branch == "+" else self.beta_b


def theta_standard(config: ExperimentConfig) -> dict:
    """Linear-gravity phases: theta_ij = tau G m_A m_B / (hbar d_ij)."""
    c = config.constants
    pref = config.tau * c.G * config.m_a * config.m_b / c.hbar
    return {(i, j): pref / config.d_cross[(i, j)] for (i, j) in BASIS}


def theta_soliton(config: ExperimentConfig, k, l) -> dict:
    """Phases when the mass-energy rides the (k, l) branch pair.

    theta_ij(k,l) = (tau G / hbar) [ delta_ki 3 m_A^2 / 2 R_A
                                   + (1 - delta_ki) m_A^2 / d_intra_A
                                   + delta_lj 3 m_B^2 / 2 R_B
                                   + (1 - delta_lj) m_B^2 / d_intra_B
                                   + m_A m_B (1/d_il + 1/d_kj
                                              - delta_ki delta_lj / d_kl) ].
    """
    if k not in BRANCHES or l not in BRANCHES:
        raise ValueError("localization branches must be '+' or '-'")
    c = config.constants
    pref = config.tau * c.G / c.hbar
    out = {}
    for (i, j) in BASIS:
        d_ki = 1.0 if k == i else 0.0
        d_lj = 1.0 if l == j else 0.0
        term = d_ki * 1.5 * config.m_a ** 2 / config.r_a \
            + (1.0 - d_ki) * config.m_a ** 2 / config.d_intra_a \
            + d_lj * 1.5 * config.m_b ** 2 / config.r_b \
            + (1.0 - d_lj) * config.m_b ** 2 / config.d_intra_b \
            + config.m_a * config.m_b * (1.0 / config.d_cross[(i, l)]
                                         + 1.0 / config.d_cross[(k, j)]
                                         - d_ki * d_lj / config.d_cross[(k, l)])
        out[(i, j)] = pref * term
    return out


def single_device_dephasing(m, R, d, tau, constants: PhysicalConstants = None) -> dict:
    """One interferometer only: dephasing +/- tau (G m^2/hbar)(3/2R - 1/d).

    The sign follows where the mass-energy localizes; both outcomes are
    returned with their Born weights left to the caller's amplitudes.
    """
    c = constants or si_constants()
    if d <= R:
        raise ValueError("path separation must exceed the sphere radius")
    magnitude = tau * c.G * m ** 2 / c.hbar * (1.5 / R - 1.0 / d)
    return {"magnitude": abs(magnitude), "phases": (magnitude, -magnitude)}


@dataclass
class SpinDensityMatrix:
    """4x4 complex density matrix in the {++, +-, -+, --} basis."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.complex128)
        if self.matrix.shape != (4, 4):
            raise ValueError("density matrix must be 4x4")
        if np.abs(self.matrix - self.matrix.conj().T).max() > 1e-12:
            raise ValueError("density matrix must be Hermitian")
        if abs(np.trace(self.matrix).real - 1.0) > 1e-12:
            raise ValueError("density matrix must have unit trace")
        if np.linalg.eigvalsh(self.matrix).min() < -1e-12:
            raise ValueError("density matrix must be positive semidefinite")

    @property
    def purity(self):
        return float(np.trace(self.matrix @ self.matrix).real)

    def negativity(self):
        """Sum of |negative eigenvalues| of the partial transpose over B."""
        r = self.matrix.reshape(2, 2, 2, 2)
        pt = r.transpose(0, 3, 2, 1).reshape(4, 4)
        eig = np.linalg.eigvalsh(pt)
        return float(-eig[eig < 0].sum())


def _branch_state(config: ExperimentConfig, phases: dict) -> np.ndarray:
    vec = np.array([
        config.amplitude("A", i) * config.amplitude("B", j)
        * np.exp(1j * phases[(i, j)])
        for (i, j) in BASIS
    ])
    return vec


def final_state_standard(config: ExperimentConfig) -> SpinDensityMatrix:
    """Rank-one projector onto the phased pure state of the linear prediction."""
    vec = _branch_state(config, theta_standard(config))
    return SpinDensityMatrix(np.outer(vec, vec.conj()))


def born_branch_probabilities(config: ExperimentConfig) -> dict:
    return {(k, l): abs(config.amplitude("A", k)) ** 2
            * abs(config.amplitude("B", l)) ** 2 for (k, l) in BASIS}


def final_state_soliton(config: ExperimentConfig,
                        branch_probs: dict = None) -> SpinDensityMatrix:
    """Mixture over mass-localization branches of the conditioned pure states."""
    probs = branch_probs or born_branch_probabilities(config)
    probs = {tuple(k) if not isinstance(k, str) else (k[0], k[1]): float(v)
             for k, v in probs.items()}
    total = sum(probs.values())
    if abs(total - 1.0) > 1e-9:
        raise ValueError("branch probabilities must sum to 1")
    rho = np.zeros((4, 4), dtype=np.complex128)
    for (k, l), p in probs.items():
        if p == 0:
            continue
        vec = _branch_state(config, theta_soliton(config, k, l))
        rho += p * np.outer(vec, vec.conj())
    return SpinDensityMatrix(rho)


def fidelity(rho: SpinDensityMatrix, sigma: SpinDensityMatrix) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    Eigenvalues below 1e-14 of the largest are zeroed: sqrt would otherwise
    amplify their roundoff to ~1e-8 for rank-deficient states.
    """
    def clipped(w):
        w = np.clip(w, 0.0, None)
        w[w < 1e-14 * max(w.max(), 1e-300)] = 0.0
        return w

    w, v = np.linalg.eigh(rho.matrix)
    sqrt_rho = (v * np.sqrt(clipped(w))) @ v.conj().T
    inner = sqrt_rho @ sigma.matrix @ sqrt_rho
    ev = clipped(np.linalg.eigvalsh(inner))
    return float(np.sum(np.sqrt(ev)) ** 2)


def tomography_report(rho_standard: SpinDensityMatrix,
                      rho_soliton: SpinDensityMatrix,
                      amp_tol=1e-12) -> dict:
    """Quantities a state tomography would compare between the two models."""
    diff = np.full((4, 4), np.nan)
    a, b = rho_standard.matrix, rho_soliton.matrix
    for r in range(4):
        for s in range(4):
            if abs(a[r, s]) > amp_tol and abs(b[r, s]) > amp_tol:
                d = np.angle(a[r, s]) - np.angle(b[r, s])
                diff[r, s] = (d + np.pi) % (2 * np.pi) - np.pi
    return {
        "purity_standard": rho_standard.purity,
        "purity_soliton": rho_soliton.purity,
        "fidelity": fidelity(rho_standard, rho_soliton),
        "negativity_standard": rho_standard.negativity(),
        "negativity_soliton": rho_soliton.negativity(),
        "element_phase_differences": diff,
    }
