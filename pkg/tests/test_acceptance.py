"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with  pytest -s tests/test_acceptance.py  to see the lines as they pass.
"""

import time
import warnings

import numpy as np
import pytest
from scipy import stats

from solitonlab.errors import ApproximationBreach
from solitonlab.gaussian_ansatz import (
    GaussianSolitonParams,
    integrate_params,
    params_to_field,
)
from solitonlab.gravity_experiment import (
    BASIS,
    ExperimentConfig,
    born_branch_probabilities,
    final_state_soliton,
    final_state_standard,
    single_device_dephasing,
    theta_soliton,
    theta_standard,
)
from solitonlab.guidance import (
    ConfigurationSuperposition,
    Ensemble,
    EnsembleRun,
    born_sample,
    evolve_configuration_ensemble,
    evolve_ensemble,
    ks_statistic,
    make_ensemble,
    relaxation_h,
)
from solitonlab.pilot_wave import (
    CoherentState,
    NumericField,
    evaluate,
    guidance_velocity,
)
from solitonlab.soliton import (
    SolitonState,
    drift_decomposition,
    evolve_history,
    evolve_soliton,
    gaussian_soliton_field,
    nonlinear_potential,
    norm_evolution_check,
    raised_cosine_field,
    shape_error,
)
from solitonlab.spectral_core import (
    ComplexField,
    PhysicalConstants,
    free_potential,
    gaussian_field,
    harmonic_potential,
    l2_norm,
    make_grid,
    split_step_linear,
)

NAT = PhysicalConstants()
T = 2 * np.pi
COHERENT = CoherentState(omega=1.0, amplitude=[2.0])


def report(num, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail}")
    return ok


def overlap_aligned_l2(a_field, b_field):
    g = a_field.grid
    a = a_field.values / l2_norm(a_field)
    b = b_field.values / l2_norm(b_field)
    inner = np.sum(np.conj(b) * a) * g.cell_volume
    phase = inner / abs(inner)
    return float(np.sqrt(np.sum(np.abs(a - phase * b) ** 2) * g.cell_volume))


def test_criterion_1_coherent_state_exactness():
    t0 = time.perf_counter()
    # reduced dynamics: barycentre must follow x(0) - amp + amp cos(w t)
    a0 = 400.0
    hist = integrate_params(GaussianSolitonParams(A=[a0], B=[0.0], C=[0.0]),
                            COHERENT, T, 1e-3, NAT, record_every=100)
    bary_err = max(abs(p.barycentre[0] - (-2.0 + 2.0 * np.cos(p.time)))
                   for p in hist)
    # full field equation at N = 512, dt = 1e-3
    g = make_grid(1, 512, [10.0])
    phi0 = gaussian_soliton_field(g, a0)
    s0 = SolitonState(phi_nl=phi0, time=0.0, pilot=COHERENT, constants=NAT)
    n = int(round(T / 1e-3))
    sT = evolve_soliton(s0, T / n, n)
    shape = shape_error(sT.phi_nl, phi0, sT.barycentre - s0.barycentre)
    elapsed = time.perf_counter() - t0
    ok = bary_err < 1e-6 and shape < 1e-3 and sT.max_width_ratio <= 0.05 \
        and elapsed < 60.0
    assert report(1, ok,
                  f"ansatz barycentre err {bary_err:.2e} (<1e-6), PDE shape "
                  f"L2 {shape:.2e} (<1e-3) at width_ratio "
                  f"{sT.max_width_ratio:.3f}, {elapsed:.1f}s (<60s)")


def _raised_cosine_shape_errors():
    # rms width of the cos^2 bump is 0.28290 of its half-width
    rms_factor = 0.2828964019345049
    sigma_pilot = COHERENT.sigma
    g = make_grid(1, 1024, [12.0])
    out = {}
    for ratio in (0.2, 0.1, 0.05):
        w = ratio * sigma_pilot / rms_factor
        phi0 = raised_cosine_field(g, w, center=[0.0])
        s0 = SolitonState(phi_nl=phi0, time=0.0, pilot=COHERENT, constants=NAT)
        n = int(round(T / 1e-3))
        sT = evolve_soliton(s0, T / n, n)
        out[ratio] = shape_error(sT.phi_nl, phi0, sT.barycentre - s0.barycentre)
    return out


def test_criterion_2_rigid_transport_tolerance():
    errs = _raised_cosine_shape_errors()
    ok = errs[0.05] < 1e-2
    assert report(2, ok,
                  f"raised-cosine shape L2 {errs[0.05]:.2e} (<1e-2) at "
                  f"width_ratio 0.05 under the coherent pilot")


def test_criterion_2_monotone_width_sweep_as_stated():
    """Shape error decreasing across width_ratio 0.2 -> 0.1 -> 0.05.

    Implemented exactly as stated (coherent pilot). For that pilot the
    transport is exact at every width, so the measured error is pure grid
    truncation, which grows as the soliton shrinks; the physically
    width-dependent validity statements (norm law, drift closure) are covered
    by test_soliton.py::TestWidthConvergence. See the decisions ledger.
    """
    errs = _raised_cosine_shape_errors()
    ok = errs[0.2] >= errs[0.1] >= errs[0.05]
    report(2, ok,
           f"monotone clause: errors at width_ratio (0.2, 0.1, 0.05) = "
           f"({errs[0.2]:.2e}, {errs[0.1]:.2e}, {errs[0.05]:.2e}); under a "
           "coherent pilot transport is exact at every width, so only grid "
           "truncation remains and it grows as the soliton shrinks")
    assert ok, (
        "unattainable as stated: coherent-pilot transport carries no "
        "width-dependent physical error to decrease (see decisions ledger)")


def test_criterion_3_norm_law():
    g = make_grid(1, 2048, [48.0])
    pilot = NumericField(gaussian_field(g, 2.0), free_potential(),
                         constants=NAT, dt_max=0.05)
    phi0 = gaussian_soliton_field(g, 50.0, center=[3.0])  # sigma = 0.1
    s0 = SolitonState(phi_nl=phi0, time=0.0, pilot=pilot, constants=NAT)
    hist = evolve_history(s0, 5e-3, 1200, record_every=120)
    rep = norm_evolution_check(hist)
    wr = max(s.max_width_ratio for s in hist)
    ok = rep["norm_ratio_max_rel_dev"] < 0.02 and wr <= 0.05
    assert report(3, ok,
                  f"norm ratio deviation {rep['norm_ratio_max_rel_dev']:.2e} "
                  f"(<0.02) at width_ratio {wr:.3f}, final ratio "
                  f"{rep['norm_ratio_measured'][-1]:.4f} vs model "
                  f"{rep['norm_ratio_model'][-1]:.4f}")


def test_criterion_4_drift_decomposition():
    g = make_grid(1, 512, [10.0])
    phi0 = gaussian_soliton_field(g, 400.0)
    s0 = SolitonState(phi_nl=phi0, time=0.0, pilot=COHERENT, constants=NAT)
    n = int(round(T / 1e-3))
    hist = evolve_history(s0, T / n, n, record_every=n // 40)
    worst = 0.0
    worst_vint = 0.0
    sampled = 0
    for st in hist[1:]:
        d = drift_decomposition(st)
        worst_vint = max(worst_vint, abs(d.v_int[0]))
        v = abs(d.v_drift[0])
        if v < 0.02:  # relative closure is undefined through the turning points
            continue
        sampled += 1
        worst = max(worst, d.residual / v)
    ok = worst < 1e-4 and worst_vint < 1e-10 and sampled >= 30
    assert report(4, ok,
                  f"max |v_drift - v_dbb - v_int| / |v_drift| = {worst:.2e} "
                  f"(<1e-4) over {sampled} sampled steps; |v_int| max "
                  f"{worst_vint:.1e} (<1e-10)")


def test_criterion_5_ode_pde_cross_validation():
    t0 = time.perf_counter()
    a0 = 400.0
    g = make_grid(1, 512, [10.0])
    phi0 = gaussian_soliton_field(g, a0)
    s0 = SolitonState(phi_nl=phi0, time=0.0, pilot=COHERENT, constants=NAT)
    n = int(round(T / 1e-3))
    sT = evolve_soliton(s0, T / n, n)
    pT = integrate_params(GaussianSolitonParams(A=[a0], B=[0.0], C=[0.0]),
                          COHERENT, T, 1e-3, NAT, record_every=n)[-1]
    err = overlap_aligned_l2(sT.phi_nl, params_to_field(pT, g))
    elapsed = time.perf_counter() - t0
    ok = err < 1e-2 and elapsed < 120.0
    assert report(5, ok,
                  f"ansatz reconstruction vs field equation L2 {err:.2e} "
                  f"(<1e-2), {elapsed:.1f}s (<120s)")


def test_criterion_6_guidance_equivariance():
    n = 10 ** 4
    rng = np.random.default_rng(0)
    x0 = born_sample(COHERENT, n, rng)
    run = evolve_ensemble(COHERENT, x0, 0.0, T, 1e-3,
                          record_every=int(round(T / 1e-3 / 2)))
    crit = 1.63 / np.sqrt(n)
    ks = []
    for idx in (1, 2):  # half period and full period
        t = run.times[idx]
        c = COHERENT.center(t)[0]
        ks.append(ks_statistic(run.positions[idx],
                               lambda y: stats.norm.cdf(y, c, COHERENT.sigma)))
    ok = all(k < crit for k in ks)
    assert report(6, ok,
                  f"KS at T/2 and T: {ks[0]:.4f}, {ks[1]:.4f} "
                  f"(< {crit:.4f} at 1% level, n = {n})")


def test_criterion_7_born_relaxation():
    terms = [(0, 1, 0.5 * np.exp(0.3j)), (1, 2, 0.5 * np.exp(-1.1j)),
             (2, 3, 0.5 * np.exp(2.2j)), (3, 4, 0.5 * np.exp(0.9j))]
    pilot = ConfigurationSuperposition(terms=terms, omega=1.0)
    rng = np.random.default_rng(7)
    n = 3000
    ens = make_ensemble(pilot, n, sampling="uniform", rng=rng,
                        domain=(-3.0, 3.0))
    n_steps = int(round(10 * T / 1e-2))
    run = evolve_configuration_ensemble(pilot, ens.initial_positions, 0.0,
                                        10 * T, 1e-2, record_every=n_steps)
    ens.run = run
    dom = (-5.0, 5.0)
    bw = (dom[1] - dom[0]) / 16.0
    h0 = relaxation_h(Ensemble(ens.initial_positions, "uniform",
                               EnsembleRun(np.array([0.0]),
                                           ens.initial_positions[None],
                                           run.status)),
                      pilot, 0.0, bin_width=bw, domain=dom)
    h10 = relaxation_h(ens, pilot, run.times[-1], bin_width=bw, domain=dom)
    ok = h10 < 0.5 * h0 and (run.status >= 0).sum() == 0
    assert report(7, ok,
                  f"two-particle uniform ensemble (n = {n}): H(10T) = "
                  f"{h10:.3f} < 0.5 H(0) = {0.5 * h0:.3f} "
                  f"(ratio {h10 / h0:.2f})")


def test_criterion_8_phase_calculator():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    hbar, G = 1.054571817e-34, 6.6743e-11

    def oracle_standard(cfg, i, j):
        return cfg.tau * G * cfg.m_a * cfg.m_b / hbar / cfg.d_cross[(i, j)]

    def oracle_soliton(cfg, k, l, i, j):
        total = (1.5 * cfg.m_a ** 2 / cfg.r_a if k == i
                 else cfg.m_a ** 2 / cfg.d_intra_a)
        total += (1.5 * cfg.m_b ** 2 / cfg.r_b if l == j
                  else cfg.m_b ** 2 / cfg.d_intra_b)
        cross = 1.0 / cfg.d_cross[(i, l)] + 1.0 / cfg.d_cross[(k, j)]
        if k == i and l == j:
            cross -= 1.0 / cfg.d_cross[(k, l)]
        return cfg.tau * G / hbar * (total + cfg.m_a * cfg.m_b * cross)

    worst = 0.0
    purity_ok = True
    for _ in range(20):
        amps = rng.uniform(0.2, 0.8, 2)
        cfg = ExperimentConfig(
            m_a=float(rng.uniform(1e-15, 1e-13)),
            m_b=float(rng.uniform(1e-15, 1e-13)),
            r_a=float(rng.uniform(1e-7, 3e-6)),
            r_b=float(rng.uniform(1e-7, 3e-6)),
            tau=float(rng.uniform(0.1, 5.0)),
            d_cross={kk: float(rng.uniform(5e-5, 5e-4)) for kk in BASIS},
            d_intra_a=float(rng.uniform(5e-5, 5e-4)),
            d_intra_b=float(rng.uniform(5e-5, 5e-4)),
            alpha_a=np.sqrt(amps[0]), beta_a=np.sqrt(1 - amps[0]),
            alpha_b=np.sqrt(amps[1]), beta_b=np.sqrt(1 - amps[1]),
        )
        std = theta_standard(cfg)
        for (i, j) in BASIS:
            worst = max(worst, abs(std[(i, j)] / oracle_standard(cfg, i, j) - 1))
        for (k, l) in BASIS:
            sol = theta_soliton(cfg, k, l)
            for (i, j) in BASIS:
                worst = max(worst, abs(
                    sol[(i, j)] / oracle_soliton(cfg, k, l, i, j) - 1))
        dep = single_device_dephasing(cfg.m_a, cfg.r_a, cfg.d_intra_a, cfg.tau)
        want = cfg.tau * G * cfg.m_a ** 2 / hbar * (1.5 / cfg.r_a
                                                    - 1.0 / cfg.d_intra_a)
        worst = max(worst, abs(dep["magnitude"] / abs(want) - 1))
        rho_std = final_state_standard(cfg)
        rho_sol = final_state_soliton(cfg)
        branch_states = [theta_soliton(cfg, k, l) for (k, l) in BASIS]
        vectors = []
        for ph in branch_states:
            vectors.append(np.array([np.exp(1j * ph[b]) for b in BASIS]))
        distinct = any(
            np.abs(np.vdot(v1, v2)) < len(BASIS) - 1e-9
            for a_, v1 in enumerate(vectors) for v2 in vectors[a_ + 1:])
        purity_ok &= abs(rho_std.purity - 1.0) < 1e-12
        if distinct:
            purity_ok &= rho_sol.purity < 1.0
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-12 and purity_ok and elapsed < 1.0
    assert report(8, ok,
                  f"20 randomized configs: worst relative deviation "
                  f"{worst:.1e} (<1e-12), purity conditions hold, "
                  f"{elapsed * 1000:.0f}ms (<1s)")


def test_criterion_9_scaling_invariance():
    g = make_grid(1, 512, [24.0])
    base = gaussian_field(g, 1.0, momentum=[0.6])
    pilot_ref = NumericField(base, free_potential(), constants=NAT)
    phi_ref = gaussian_soliton_field(g, 16.0, center=[0.4])
    v_ref = nonlinear_potential(phi_ref, pilot_ref, 0.0, NAT)
    region = np.abs(phi_ref.values) > 1e-6 * np.abs(phi_ref.values).max()
    scale = np.abs(v_ref[region]).max()
    rng = np.random.default_rng(99)
    xs_probe = np.array([-0.8, 0.1, 1.3])
    vel_ref = np.array([guidance_velocity(pilot_ref, 0.2, float(x))[0]
                        for x in xs_probe])
    worst_pot = 0.0
    worst_vel = 0.0
    for _ in range(100):
        lam = complex(rng.normal(), rng.normal()) * 10 ** rng.uniform(-3, 3)
        mu = complex(rng.normal(), rng.normal()) * 10 ** rng.uniform(-3, 3)
        phi2 = ComplexField(g, lam * phi_ref.values)
        pilot2 = NumericField(ComplexField(g, mu * base.values),
                              free_potential(), constants=NAT)
        v2 = nonlinear_potential(phi2, pilot2, 0.0, NAT)
        worst_pot = max(worst_pot, np.abs((v2 - v_ref)[region]).max() / scale)
        vel2 = np.array([guidance_velocity(pilot2, 0.2, float(x))[0]
                         for x in xs_probe])
        worst_vel = max(worst_vel, np.abs(vel2 - vel_ref).max()
                        / np.abs(vel_ref).max())
    ok = worst_pot < 1e-9 and worst_vel < 1e-12
    assert report(9, ok,
                  f"100 random scale pairs: potential deviation "
                  f"{worst_pot:.1e} (<1e-9 on the soliton support), "
                  f"velocity deviation {worst_vel:.1e} (<1e-12)")


def test_criterion_10_numerical_hygiene():
    g = make_grid(1, 512, [24.0])
    x = g.meshgrid()[0]
    f0 = ComplexField(g, evaluate(COHERENT, 0.0, x))
    # norm drift over 1000 steps
    f1 = split_step_linear(f0, harmonic_potential(1.0, NAT), 1e-3, 1000, NAT)
    drift = abs(l2_norm(f1) - l2_norm(f0))
    # halving dt quarters the error against the exact coherent state
    errs = []
    for dt in (2e-3, 1e-3):
        n = int(round(1.0 / dt))
        fT = split_step_linear(f0, harmonic_potential(1.0, NAT), 1.0 / n, n, NAT)
        exact = ComplexField(g, evaluate(COHERENT, 1.0, x))
        errs.append(l2_norm(ComplexField(g, fT.values - exact.values)))
    ratio = errs[0] / errs[1]
    ok = drift < 1e-10 and 3.8 < ratio < 4.2
    assert report(10, ok,
                  f"norm drift {drift:.1e} per 1000 steps (<1e-10), "
                  f"dt-halving error ratio {ratio:.3f} (in [3.8, 4.2])")
