"""Scenario-driven command line front end.

`dsl <subcommand> --config scenario.json [--seed N] [--out DIR]` parses a
JSON scenario, dispatches the solvers, and writes CSV time series plus a JSON
summary embedding the fully resolved configuration and the constants table.
Runs are deterministic for a fixed seed.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import ApproximationBreach, ScenarioError
from .gaussian_ansatz import GaussianSolitonParams, integrate_params
from .gravity_experiment import (
    BASIS,
    ExperimentConfig,
    SelfGravitySphere,
    born_branch_probabilities,
    final_state_soliton,
    final_state_standard,
    si_constants,
    sphere_potential,
    theta_soliton,
    theta_standard,
    tomography_report,
)
from .guidance import (
    ConfigurationSuperposition,
    Ensemble,
    born_cdf,
    evolve_configuration_ensemble,
    evolve_ensemble,
    ks_statistic,
    make_ensemble,
    pilot_support,
    relaxation_h,
)
from .pilot_wave import NumericField, pilot_from_dict, pilot_to_dict
from .soliton import (
    SolitonState,
    drift_decomposition,
    evolve_history,
    gaussian_soliton_field,
    raised_cosine_field,
    shape_error,
)
from .spectral_core import (
    C_SI,
    G_SI,
    HBAR_SI,
    PhysicalConstants,
    free_potential,
    gaussian_field,
    harmonic_potential,
    make_grid,
)

FMT = "%.17g"

KINDS = ("evolve", "gaussian", "trajectories", "relax", "phases", "selfgrav")


@dataclass
class Scenario:
    """A validated scenario: kind plus the fully defaulted config block."""

    kind: str
    data: dict
    seed: int = 0


def _fail(path, message):
    raise ScenarioError(f"{path}: {message}")


def _take(src: dict, path, key, default=None, required=False, kind=None):
    full = f"{path}.{key}" if path else key
    if key not in src:
        if required:
            _fail(full, "missing required field")
        return default
    val = src.pop(key)
    if kind is not None and not isinstance(val, kind):
        _fail(full, f"expected {getattr(kind, '__name__', kind)}, got {type(val).__name__}")
    return val


def _no_extras(src: dict, path):
    if src:
        _fail(f"{path}.{sorted(src)[0]}" if path else sorted(src)[0],
              "unknown field")


def _constants_block(raw, path):
    raw = dict(raw or {})
    out = {
        "hbar": float(_take(raw, path, "hbar", 1.0)),
        "mass": float(_take(raw, path, "mass", 1.0)),
        "G": float(_take(raw, path, "G", G_SI)),
        "c": float(_take(raw, path, "c", C_SI)),
    }
    _no_extras(raw, path)
    return out


def _grid_block(raw, path):
    raw = dict(raw or {})
    out = {
        "dims": int(_take(raw, path, "dims", 1)),
        "points": _take(raw, path, "points", 256),
        "lengths": _take(raw, path, "lengths", 20.0),
    }
    _no_extras(raw, path)
    return out


def _time_block(raw, path, t_char=None):
    raw = dict(raw or {})
    t_final = _take(raw, path, "t_final", required=True)
    dt = _take(raw, path, "dt", None)
    if dt is None:
        dt = (t_char if t_char is not None else float(t_final)) / 1000.0
    out = {
        "t_final": float(t_final),
        "dt": float(dt),
        "record_every": int(_take(raw, path, "record_every", 10)),
    }
    _no_extras(raw, path)
    return out


def _pilot_block(raw, path):
    raw = dict(raw or {})
    kind = _take(raw, path, "kind", required=True)
    keep = {"kind": kind}
    if kind == "plane_wave":
        keep["k"] = _take(raw, path, "k", required=True)
    elif kind == "coherent_state":
        keep["omega"] = float(_take(raw, path, "omega", required=True))
        keep["amplitude"] = _take(raw, path, "amplitude", required=True)
        off = _take(raw, path, "phase_offsets", None)
        if off is not None:
            keep["phase_offsets"] = off
    elif kind == "eigenstate_superposition":
        keep["omega"] = float(_take(raw, path, "omega", required=True))
        keep["terms"] = _take(raw, path, "terms", required=True)
    elif kind == "configuration_superposition":
        keep["omega"] = float(_take(raw, path, "omega", required=True))
        keep["terms"] = _take(raw, path, "terms", required=True)
    elif kind == "numeric":
        keep["initial"] = _take(raw, path, "initial", required=True)
        keep["potential"] = _take(raw, path, "potential", {"kind": "free"})
        keep["dt_max"] = float(_take(raw, path, "dt_max", 2e-3))
    else:
        _fail(f"{path}.kind", f"unknown pilot kind {kind!r}")
    _no_extras(raw, path)
    return keep


def _soliton_block(raw, path):
    raw = dict(raw or {})
    shape = _take(raw, path, "shape", "gaussian")
    keep = {"shape": shape, "center": _take(raw, path, "center", [0.0])}
    if shape == "gaussian":
        keep["a0"] = float(_take(raw, path, "a0", required=True))
    elif shape == "raised_cosine":
        keep["width"] = float(_take(raw, path, "width", required=True))
    else:
        _fail(f"{path}.shape", f"unknown soliton shape {shape!r}")
    _no_extras(raw, path)
    return keep


def parse_scenario(path) -> Scenario:
    """Load, validate and default-fill a scenario file."""
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as e:
            raise ScenarioError(f"{path}: invalid JSON ({e})") from None
    return scenario_from_dict(raw)


def scenario_from_dict(raw: dict) -> Scenario:
    raw = dict(raw)
    kind = _take(raw, "", "kind", required=True)
    if kind not in KINDS:
        _fail("kind", f"must be one of {KINDS}")
    seed = int(_take(raw, "", "seed", 0))
    data = {"constants": _constants_block(_take(raw, "", "constants", {}), "constants")}
    if kind == "evolve":
        t_raw = _take(raw, "", "time", required=True, kind=dict)
        data["pilot"] = _pilot_block(_take(raw, "", "pilot", required=True), "pilot")
        data["soliton"] = _soliton_block(_take(raw, "", "soliton", required=True), "soliton")
        data["grid"] = _grid_block(_take(raw, "", "grid", {}), "grid")
        data["time"] = _time_block(t_raw, "time")
    elif kind == "gaussian":
        data["pilot"] = _pilot_block(_take(raw, "", "pilot", required=True), "pilot")
        p = dict(_take(raw, "", "params", required=True))
        data["params"] = {
            "a0": float(_take(p, "params", "a0", required=True)),
            "center": _take(p, "params", "center", [0.0]),
        }
        _no_extras(p, "params")
        data["time"] = _time_block(_take(raw, "", "time", required=True), "time")
    elif kind == "trajectories":
        data["pilot"] = _pilot_block(_take(raw, "", "pilot", required=True), "pilot")
        ini = dict(_take(raw, "", "initial", required=True))
        data["initial"] = {
            "sampling": _take(ini, "initial", "sampling", "born"),
            "n": int(_take(ini, "initial", "n", 100)),
            "domain": _take(ini, "initial", "domain", None),
            "positions": _take(ini, "initial", "positions", None),
        }
        _no_extras(ini, "initial")
        data["time"] = _time_block(_take(raw, "", "time", required=True), "time")
    elif kind == "relax":
        data["pilot"] = _pilot_block(_take(raw, "", "pilot", required=True), "pilot")
        ens = dict(_take(raw, "", "ensemble", required=True))
        data["ensemble"] = {
            "sampling": _take(ens, "ensemble", "sampling", "uniform"),
            "n": int(_take(ens, "ensemble", "n", 1000)),
            "domain": _take(ens, "ensemble", "domain", None),
        }
        _no_extras(ens, "ensemble")
        data["time"] = _time_block(_take(raw, "", "time", required=True), "time")
        data["bins"] = int(_take(raw, "", "bins", 64))
        data["h_domain"] = _take(raw, "", "h_domain", None)
    elif kind == "phases":
        exp = dict(_take(raw, "", "experiment", required=True))
        keep = {}
        for key in ("m_a", "m_b", "r_a", "r_b", "tau", "d_intra_a", "d_intra_b"):
            keep[key] = float(_take(exp, "experiment", key, required=True))
        keep["d_cross"] = _take(exp, "experiment", "d_cross", required=True, kind=dict)
        for key in ("alpha_a", "beta_a", "alpha_b", "beta_b"):
            keep[key] = _take(exp, "experiment", key, [1.0 / np.sqrt(2.0), 0.0])
        keep["branch_probs"] = _take(exp, "experiment", "branch_probs", None)
        _no_extras(exp, "experiment")
        data["experiment"] = keep
        data["constants"]["hbar"] = data["constants"].get("hbar", HBAR_SI)
    elif kind == "selfgrav":
        sph = dict(_take(raw, "", "sphere", required=True))
        data["sphere"] = {
            "mass": float(_take(sph, "sphere", "mass", required=True)),
            "radius": float(_take(sph, "sphere", "radius", required=True)),
        }
        _no_extras(sph, "sphere")
        dist = dict(_take(raw, "", "distances", {}))
        data["distances"] = {
            "max": float(_take(dist, "distances", "max",
                               4.0 * data["sphere"]["radius"])),
            "n": int(_take(dist, "distances", "n", 200)),
        }
        _no_extras(dist, "distances")
    _take(raw, "", "output", None)  # accepted for symmetry; --out wins
    _no_extras(raw, "")
    return Scenario(kind=kind, data=data, seed=seed)


def scenario_to_dict(s: Scenario) -> dict:
    return {"kind": s.kind, "seed": s.seed, **json.loads(json.dumps(s.data))}


def _build_constants(block) -> PhysicalConstants:
    return PhysicalConstants(**block)


def _build_pilot(block, constants, grid=None):
    block = dict(block)
    kind = block["kind"]
    if kind == "configuration_superposition":
        terms = [(t["a"], t["b"], complex(t["re"], t.get("im", 0.0)))
                 for t in block["terms"]]
        return ConfigurationSuperposition(terms=terms, omega=block["omega"],
                                          constants=constants)
    if kind == "numeric":
        if grid is None:
            raise ScenarioError("pilot.kind=numeric needs a grid block")
        ini = block["initial"]
        base = gaussian_field(grid, ini.get("sigma", 1.0),
                              center=ini.get("center", None),
                              momentum=ini.get("momentum", None))
        pot_block = block.get("potential", {"kind": "free"})
        if pot_block.get("kind") == "harmonic":
            pot = harmonic_potential(float(pot_block["omega"]), constants)
        elif pot_block.get("kind") == "free":
            pot = free_potential()
        else:
            raise ScenarioError(f"pilot.potential.kind: unknown {pot_block.get('kind')!r}")
        return NumericField(base, pot, constants=constants,
                            dt_max=block.get("dt_max", 2e-3))
    return pilot_from_dict(block, constants=constants)


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(FMT % v if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _rho_to_json(rho):
    return [[[float(v.real), float(v.imag)] for v in row] for row in rho.matrix]


# --- subcommand runners -----------------------------------------------------

def _run_evolve(s: Scenario, outdir):
    d = s.data
    constants = _build_constants(d["constants"])
    grid = make_grid(d["grid"]["dims"], d["grid"]["points"], d["grid"]["lengths"])
    pilot = _build_pilot(d["pilot"], constants, grid=grid)
    sol = d["soliton"]
    if sol["shape"] == "gaussian":
        phi0 = gaussian_soliton_field(grid, sol["a0"], center=sol["center"])
    else:
        phi0 = raised_cosine_field(grid, sol["width"], center=sol["center"])
    state0 = SolitonState(phi_nl=phi0, time=0.0, pilot=pilot, constants=constants)
    tb = d["time"]
    n_steps = max(1, int(round(tb["t_final"] / tb["dt"])))
    dt = tb["t_final"] / n_steps
    rec = max(1, min(tb["record_every"], n_steps))
    hist = evolve_history(state0, dt, n_steps, record_every=rec)
    rows = []
    x0_0 = hist[0].barycentre
    for st in hist:
        x0 = st.barycentre
        err = shape_error(st.phi_nl, phi0, x0 - x0_0)
        if st.prev_barycentre is None:
            v = np.zeros(grid.dims)
            dd = None
        else:
            dd = drift_decomposition(st)
        row = [st.time] + list(x0) + [np.sqrt(st.norm_squared)]
        for vec in ((dd.v_drift, dd.v_dbb, dd.v_int) if dd else
                    (np.zeros(grid.dims),) * 3):
            row += list(vec)
        row += [err, st.width_ratio]
        rows.append([float(v) for v in row])
    axes = "xyz"[:grid.dims]
    header = ["t"] + [f"x0_{a}" for a in axes] + ["norm"]
    for name in ("v_drift", "v_dbb", "v_int"):
        header += [f"{name}_{a}" for a in axes]
    header += ["shape_error", "width_ratio"]
    _write_csv(outdir / "timeseries.csv", header, rows)
    final = hist[-1]
    return {
        "outputs": {"timeseries": "timeseries.csv"},
        "final_barycentre": [float(v) for v in final.barycentre],
        "final_shape_error": float(rows[-1][-2]),
        "max_width_ratio": float(final.max_width_ratio),
        "norm_change": float(np.sqrt(final.norm_squared / hist[0].norm_squared)),
    }


def _run_gaussian(s: Scenario, outdir):
    d = s.data
    constants = _build_constants(d["constants"])
    pilot = _build_pilot(d["pilot"], constants)
    a0 = d["params"]["a0"]
    center = np.atleast_1d(d["params"]["center"])
    dims = len(center)
    p0 = GaussianSolitonParams(A=[a0] * dims, B=a0 * center, C=-0.5 * a0 * center ** 2)
    tb = d["time"]
    hist = integrate_params(p0, pilot, tb["t_final"], tb["dt"], constants,
                            record_every=tb["record_every"])
    axes = "xyz"[:dims]
    header = ["t"]
    for a in axes:
        header += [f"reA_{a}", f"imA_{a}", f"reB_{a}", f"imB_{a}",
                   f"reC_{a}", f"imC_{a}", f"x0_{a}"]
    rows = []
    for p in hist:
        row = [p.time]
        for j in range(dims):
            row += [p.A[j].real, p.A[j].imag, p.B[j].real, p.B[j].imag,
                    p.C[j].real, p.C[j].imag, p.barycentre[j]]
        rows.append([float(v) for v in row])
    _write_csv(outdir / "params.csv", header, rows)
    return {
        "outputs": {"params": "params.csv"},
        "final_barycentre": [float(v) for v in hist[-1].barycentre],
        "max_imag_A": float(max(np.abs(p.A.imag).max() for p in hist)),
    }


def _run_trajectories(s: Scenario, outdir):
    d = s.data
    constants = _build_constants(d["constants"])
    pilot = _build_pilot(d["pilot"], constants)
    ini = d["initial"]
    rng = np.random.default_rng(s.seed)
    if ini["positions"] is not None:
        x0 = np.asarray(ini["positions"], dtype=float)
        ens = Ensemble(initial_positions=x0, sampling="custom")
    else:
        domain = tuple(ini["domain"]) if ini["domain"] else None
        ens = make_ensemble(pilot, ini["n"], sampling=ini["sampling"],
                            rng=rng, domain=domain)
    tb = d["time"]
    run = evolve_ensemble(pilot, ens.initial_positions, 0.0, tb["t_final"],
                          tb["dt"], record_every=tb["record_every"])
    n = run.positions.shape[1]
    header = ["t"] + [f"x_{i}" for i in range(n)]
    rows = [[float(t)] + [float(v) for v in pos]
            for t, pos in zip(run.times, run.positions)]
    _write_csv(outdir / "trajectories.csv", header, rows)
    out = {
        "outputs": {"trajectories": "trajectories.csv"},
        "n_trajectories": int(n),
        "n_node_aborts": int((run.status >= 0).sum()),
    }
    if ini["sampling"] == "born":
        ks = ks_statistic(run.positions[-1], born_cdf(pilot, run.times[-1]))
        out["ks_final"] = float(ks)
    return out


def _run_relax(s: Scenario, outdir):
    d = s.data
    constants = _build_constants(d["constants"])
    pilot = _build_pilot(d["pilot"], constants)
    ens_block = d["ensemble"]
    rng = np.random.default_rng(s.seed)
    domain = tuple(ens_block["domain"]) if ens_block["domain"] else None
    ens = make_ensemble(pilot, ens_block["n"], sampling=ens_block["sampling"],
                        rng=rng, domain=domain)
    tb = d["time"]
    two_d = isinstance(pilot, ConfigurationSuperposition)
    evolver = evolve_configuration_ensemble if two_d else evolve_ensemble
    run = evolver(pilot, ens.initial_positions, 0.0, tb["t_final"], tb["dt"],
                  record_every=tb["record_every"])
    ens.run = run
    h_domain = tuple(d["h_domain"]) if d["h_domain"] else pilot_support(pilot)
    bw = (h_domain[1] - h_domain[0]) / d["bins"]
    series = []
    for t in run.times:
        entry = {"t": float(t),
                 "H": relaxation_h(ens, pilot, t, bin_width=bw, domain=h_domain)}
        if not two_d:
            entry["ks"] = float(ks_statistic(run.at_time(t), born_cdf(pilot, t)))
        series.append(entry)
    report = {
        "series": series,
        "H_initial": series[0]["H"],
        "H_final": series[-1]["H"],
        "n_node_aborts": int((run.status >= 0).sum()),
    }
    with open(outdir / "relaxation.json", "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    return {"outputs": {"relaxation": "relaxation.json"},
            "H_initial": report["H_initial"], "H_final": report["H_final"]}


def _experiment_from_block(block, constants) -> ExperimentConfig:
    def c128(v):
        if isinstance(v, (list, tuple)):
            return complex(v[0], v[1] if len(v) > 1 else 0.0)
        return complex(v)

    d_cross = {(k[0], k[1]): float(v) for k, v in block["d_cross"].items()}
    return ExperimentConfig(
        m_a=block["m_a"], m_b=block["m_b"], r_a=block["r_a"], r_b=block["r_b"],
        tau=block["tau"], d_cross=d_cross,
        d_intra_a=block["d_intra_a"], d_intra_b=block["d_intra_b"],
        alpha_a=c128(block["alpha_a"]), beta_a=c128(block["beta_a"]),
        alpha_b=c128(block["alpha_b"]), beta_b=c128(block["beta_b"]),
        constants=PhysicalConstants(hbar=constants.hbar, mass=block["m_a"],
                                    G=constants.G, c=constants.c),
    )


def _run_phases(s: Scenario, outdir):
    d = s.data
    constants = _build_constants(d["constants"])
    cfg = _experiment_from_block(d["experiment"], constants)
    rows = []
    std = theta_standard(cfg)
    for (i, j) in BASIS:
        rows.append(["standard", f"{i}{j}", "", float(std[(i, j)])])
    for (k, l) in BASIS:
        sol = theta_soliton(cfg, k, l)
        for (i, j) in BASIS:
            rows.append(["soliton", f"{i}{j}", f"{k}{l}", float(sol[(i, j)])])
    _write_csv(outdir / "phases.csv",
               ["model", "branch", "localization", "theta_rad"], rows)
    probs_block = d["experiment"].get("branch_probs")
    probs = None
    if probs_block:
        probs = {(k[0], k[1]): float(v) for k, v in probs_block.items()}
    rho_std = final_state_standard(cfg)
    rho_sol = final_state_soliton(cfg, probs)
    rep = tomography_report(rho_std, rho_sol)
    with open(outdir / "rho_standard.json", "w") as fh:
        json.dump({"basis": ["++", "+-", "-+", "--"],
                   "matrix": _rho_to_json(rho_std)}, fh, indent=2)
        fh.write("\n")
    with open(outdir / "rho_soliton.json", "w") as fh:
        json.dump({"basis": ["++", "+-", "-+", "--"],
                   "matrix": _rho_to_json(rho_sol)}, fh, indent=2)
        fh.write("\n")
    tom = {k: (v.tolist() if isinstance(v, np.ndarray) else float(v))
           for k, v in rep.items()}
    tom["born_branch_probabilities"] = {f"{k}{l}": float(p) for (k, l), p
                                        in born_branch_probabilities(cfg).items()}
    with open(outdir / "tomography.json", "w") as fh:
        json.dump(tom, fh, indent=2)
        fh.write("\n")
    return {
        "outputs": {"phases": "phases.csv", "rho_standard": "rho_standard.json",
                    "rho_soliton": "rho_soliton.json",
                    "tomography": "tomography.json"},
        "purity_standard": rep["purity_standard"],
        "purity_soliton": rep["purity_soliton"],
    }


def _run_selfgrav(s: Scenario, outdir):
    d = s.data
    constants = _build_constants(d["constants"])
    sph = SelfGravitySphere(mass=d["sphere"]["mass"], radius=d["sphere"]["radius"])
    dmax, n = d["distances"]["max"], d["distances"]["n"]
    ds = np.linspace(0.0, dmax, n)
    vs = sphere_potential(sph, ds, G=constants.G)
    _write_csv(outdir / "potential.csv", ["d", "V"],
               [[float(a), float(b)] for a, b in zip(ds, vs)])
    return {"outputs": {"potential": "potential.csv"},
            "V_at_center": float(sphere_potential(sph, 0.0, G=constants.G)),
            "V_at_radius": float(sphere_potential(sph, sph.radius, G=constants.G))}


_RUNNERS = {
    "evolve": _run_evolve,
    "gaussian": _run_gaussian,
    "trajectories": _run_trajectories,
    "relax": _run_relax,
    "phases": _run_phases,
    "selfgrav": _run_selfgrav,
}


def run(scenario: Scenario, outdir, breach_policy="fail") -> dict:
    """Execute a scenario; returns the machine-readable summary dict."""
    from pathlib import Path

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    caught = []
    with warnings.catch_warnings(record=True) as wlist:
        warnings.simplefilter("always")
        result = _RUNNERS[scenario.kind](scenario, outdir)
        caught = [{"category": type(w.message).__name__, "message": str(w.message)}
                  for w in wlist]
    breached = any(w["category"] == "ApproximationBreach" for w in caught)
    summary = {
        "scenario": scenario_to_dict(scenario),
        "constants": scenario.data["constants"],
        "version": __version__,
        "runtime_seconds": time.perf_counter() - t0,
        "warnings": caught,
        "approximation_breach": breached,
        "exit_code": 2 if (breached and breach_policy == "fail") else 0,
        **result,
    }
    with open(outdir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return summary


def constants_table() -> str:
    lines = [
        f"solitonlab {__version__}",
        "compiled constants (CODATA 2018, SI):",
        f"  hbar = {HBAR_SI!r} J s",
        f"  G    = {G_SI!r} m^3 kg^-1 s^-2",
        f"  c    = {C_SI!r} m s^-1",
        "dynamics default: natural units hbar = m = 1",
    ]
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsl",
        description="pilot-wave soliton laboratory: scenario runner")
    parser.add_argument("--version", action="store_true",
                        help="print version and the constants table")
    sub = parser.add_subparsers(dest="command")
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} scenario")
        p.add_argument("--config", required=True, help="scenario JSON path")
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--breach-policy", choices=("fail", "ignore"),
                       default="fail",
                       help="exit nonzero when the peaked-soliton "
                            "approximation is breached")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.version:
        print(constants_table())
        return 0
    if args.command is None:
        parser.print_help()
        return 1
    try:
        scenario = parse_scenario(args.config)
        if scenario.kind != args.command:
            raise ScenarioError(
                f"kind: scenario declares {scenario.kind!r} but the "
                f"{args.command!r} subcommand was invoked")
        if args.seed is not None:
            scenario.seed = args.seed
        summary = run(scenario, args.out, breach_policy=args.breach_policy)
    except ScenarioError as e:
        print(f"scenario error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # solver failures propagate with nonzero exit
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    print(json.dumps({k: summary[k] for k in
                      ("exit_code", "runtime_seconds", "outputs")}, indent=2))
    return summary["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
