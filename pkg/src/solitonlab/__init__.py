"""Numerical laboratory for pilot-wave guided solitons.

Spectral solvers for a soliton field advected by a linear pilot wave, the
Gaussian-parameter reduction of its dynamics, Bohmian trajectory ensembles
with relaxation diagnostics, and closed-form gravitational-phase predictions
for paired Stern-Gerlach interferometers.
"""

__version__ = "0.1.0"

from .errors import (
    ApproximationBreach,
    EdgeMassWarning,
    GridError,
    NodeProximityError,
    PropagationError,
    ScenarioError,
    SolitonLabError,
    UnsupportedPilotError,
)
from .spectral_core import (
    ComplexField,
    Grid,
    PhysicalConstants,
    expectation_position,
    l2_norm,
    make_grid,
    overlap,
    spectral_laplacian,
    split_step_linear,
)
from .pilot_wave import (
    CoherentState,
    EigenstateSuperposition,
    NumericField,
    PhaseData,
    PlaneWave,
    evaluate,
    guidance_velocity,
    phase_data,
)
from .soliton import (
    DriftDecomposition,
    SolitonState,
    drift_decomposition,
    evolve_history,
    evolve_soliton,
    nonlinear_potential,
    norm_evolution_check,
)
from .gaussian_ansatz import (
    GaussianSolitonParams,
    integrate_params,
    ode_rhs,
    params_to_field,
)
from .guidance import (
    ConfigurationSuperposition,
    Ensemble,
    ProductPilot,
    SymmetrizedPilot,
    Trajectory,
    integrate_configuration,
    integrate_trajectory,
    relaxation_h,
)
from .gravity_experiment import (
    ExperimentConfig,
    SelfGravitySphere,
    SpinDensityMatrix,
    compton_radius,
    final_state_soliton,
    final_state_standard,
    self_coupling_ratio,
    single_device_dephasing,
    soliton_spring_constant,
    sphere_potential,
    theta_soliton,
    theta_standard,
    tomography_report,
)
