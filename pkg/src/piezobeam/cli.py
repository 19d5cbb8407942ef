"""Command-line front end: JSON configs in, deterministic CSV/JSON out.

Every run writes a summary JSON embedding the exact config, seed, grid
and derived constants, plus a manifest listing every output file with a
sha256 digest.  (config, seed) -> outputs is a pure function at the byte
level: floats are serialized with repr-faithful %.17g and reductions are
sequential, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .discretization import Grid, h_norm_sq, smallest_eigenvalue
from .errors import (BlowUpError, ConfigError, NewtonDivergedError,
                     PiezobeamError, SingularJacobianError)
from .integrator import State, StepConfig, simulate
from .model import (Forcing, PhysicalParams, derived_constants, make_forcing,
                    make_nonlinearity, validate_assumptions)
from .stationary import check_stationary_bound, sample_stationary_set

COMMANDS = ("simulate", "stationary", "validate", "quasi-stability",
            "eps-lipschitz", "attractor", "sweep", "eigen")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_CHECK = 4

_DEFAULTS = {
    "physical": {"rho": 1.0, "mu": 1.0, "alpha1": 1.0, "beta": 1.0,
                 "gamma": 1.0, "epsilon": 0.0},
    "grid": {"length": 1.0, "n_cells": 200},
    "nonlinearity": {"name": "default_quartic", "overrides": {}},
    "forcing": {"profile": "zero", "amplitude": 1.0, "center": 0.5,
                "width": 0.1},
    "integrator": {"dt": None, "newton_tol": 1e-12, "newton_max_iter": 30,
                   "record_every": 1},
    "experiment": {},
    "seed": 0,
    "theta": 2,
}


class RunConfig:
    """Validated run configuration; `data` is the defaults-filled dict."""

    def __init__(self, data: dict):
        self.data = data
        g = data["grid"]
        self.grid = Grid(length=g["length"], n_cells=g["n_cells"])
        try:
            self.params = PhysicalParams(length=g["length"],
                                         **data["physical"])
        except ValueError as exc:
            raise ConfigError(f"validation-error: {exc}")
        nl_spec = data["nonlinearity"]
        self.nonlinearity = make_nonlinearity(nl_spec["name"],
                                              **nl_spec["overrides"])
        self.forcing = make_forcing(self.grid, **data["forcing"])
        integ = data["integrator"]
        dt = integ["dt"] if integ["dt"] is not None else 0.5 * self.grid.dx
        try:
            self.step_config = StepConfig(
                dt=dt, newton_tol=integ["newton_tol"],
                newton_max_iter=integ["newton_max_iter"],
                record_every=integ["record_every"])
        except ValueError as exc:
            raise ConfigError(f"validation-error: {exc}")
        self.experiment = data["experiment"]
        self.seed = data["seed"]
        self.theta = data["theta"]

    def serialize(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True)


def _merge_section(name, given, defaults):
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"validation-error: unknown keys in '{name}': "
                          f"{sorted(unknown)}")
    merged = dict(defaults)
    merged.update(given)
    return merged


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON config, filling defaults."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"parse-error: line {exc.lineno} column {exc.colno}: "
                          f"{exc.msg}")
    if not isinstance(raw, dict):
        raise ConfigError("parse-error: config must be a JSON object")
    unknown = set(raw) - set(_DEFAULTS)
    if unknown:
        raise ConfigError(f"validation-error: unknown top-level keys: "
                          f"{sorted(unknown)}")
    data = {}
    for key, defaults in _DEFAULTS.items():
        given = raw.get(key, {} if isinstance(defaults, dict) else defaults)
        if isinstance(defaults, dict) and key != "experiment":
            if not isinstance(given, dict):
                raise ConfigError(f"validation-error: '{key}' must be an object")
            data[key] = _merge_section(key, given, defaults)
        else:
            data[key] = given
    if not isinstance(data["experiment"], dict):
        raise ConfigError("validation-error: 'experiment' must be an object")
    if not isinstance(data["seed"], int) or data["seed"] < 0:
        raise ConfigError("validation-error: seed must be a nonnegative integer")
    eps = data["physical"]["epsilon"]
    if not 0.0 <= eps <= 1.0:
        raise ConfigError("validation-error: epsilon ∈ [0,1] violated "
                          f"(got {eps})")
    if data["theta"] < 2:
        raise ConfigError("validation-error: theta must be >= 2")
    return RunConfig(data)


# ---------------------------------------------------------------------------
# Output plumbing
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON-serializable: {type(o)}")


def write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    lines.extend(",".join(_fmt(x) for x in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def write_outputs(records: dict, out_dir: Path) -> Path:
    """Write named CSV/JSON records plus a sha256 manifest.

    records maps filename -> either (header, rows) for CSV or a dict for
    JSON.  Returns the manifest path.
    """
    if not records:
        raise ValueError("records must be nonempty")
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for name in sorted(records):
        path = out_dir / name
        content = records[name]
        if name.endswith(".csv"):
            header, rows = content
            write_csv(path, header, rows)
        else:
            path.write_text(json.dumps(content, indent=2, sort_keys=True,
                                       default=_json_default) + "\n")
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        entries.append({"file": name, "sha256": digest,
                        "bytes": path.stat().st_size})
    manifest = out_dir / "manifest.json"
    manifest.write_text(json.dumps({"files": entries}, indent=2,
                                   sort_keys=True) + "\n")
    return manifest


def _summary_base(cfg: RunConfig) -> dict:
    dc = derived_constants(cfg.params, cfg.nonlinearity.beta0,
                           cfg.nonlinearity.m_F, cfg.forcing, cfg.grid)
    return {
        "config": cfg.data,
        "seed": cfg.seed,
        "grid": {"length": cfg.grid.length, "n_cells": cfg.grid.n_cells,
                 "dx": cfg.grid.dx},
        "config_sha256": hashlib.sha256(
            cfg.serialize().encode()).hexdigest(),
        "derived_constants": {
            "alpha": dc.alpha, "lambda1": dc.lambda1, "kappa": dc.kappa,
            "beta1": dc.beta1, "beta2": dc.beta2, "C_F": dc.C_F,
        },
    }


def _experiment_opts(cfg: RunConfig, defaults: dict) -> dict:
    return _merge_section("experiment", cfg.experiment, defaults)


def _initial_state(cfg: RunConfig, kind: str, scale: float) -> State:
    if kind == "zero":
        return State.zero(cfg.grid)
    if kind == "random":
        rng = np.random.default_rng(cfg.seed)
        return analysis.random_state(cfg.grid, rng, scale)
    raise ConfigError(f"validation-error: unknown initial kind '{kind}'")


# ---------------------------------------------------------------------------
# Command implementations (each returns (records, exit_code))
# ---------------------------------------------------------------------------

def _cmd_simulate(cfg):
    opts = _experiment_opts(cfg, {"T": 10.0, "initial": "random",
                                  "initial_scale": 1.0, "snapshot_every": None})
    z0 = _initial_state(cfg, opts["initial"], opts["initial_scale"])
    final, series, _ = simulate(cfg.grid, z0, opts["T"], cfg.step_config,
                                cfg.params, cfg.nonlinearity, cfg.forcing,
                                snapshot_every=opts["snapshot_every"])
    t, e, tot, dis = series.as_arrays()
    summary = _summary_base(cfg)
    summary["result"] = {
        "T": opts["T"], "n_samples": len(t),
        "final_norm": math.sqrt(h_norm_sq(cfg.grid, cfg.params, final)),
        "final_E": e[-1], "final_total_E": tot[-1],
    }
    records = {
        "energy.csv": ("t,E,total_E,dissipation", list(zip(t, e, tot, dis))),
        "final_state.csv": ("x,v,p,vt,pt",
                            list(zip(cfg.grid.nodes(), final.v, final.p,
                                     final.vt, final.pt))),
        "summary.json": summary,
    }
    return records, EXIT_OK


def _cmd_stationary(cfg):
    opts = _experiment_opts(cfg, {"n_guesses": 10, "guess_scale": 1.0,
                                  "tol": 1e-12, "max_iter": 60})
    points, dropped = sample_stationary_set(
        cfg.grid, cfg.params, cfg.nonlinearity, cfg.forcing,
        n_guesses=opts["n_guesses"], guess_scale=opts["guess_scale"],
        seed=cfg.seed, tol=opts["tol"], max_iter=opts["max_iter"])
    dc = derived_constants(cfg.params, cfg.nonlinearity.beta0,
                           cfg.nonlinearity.m_F, cfg.forcing, cfg.grid)
    rows, all_pass = [], True
    for i, pt in enumerate(points):
        lhs, rhs, ok = check_stationary_bound(pt, dc, cfg.nonlinearity.m_F,
                                              cfg.forcing, cfg.grid,
                                              cfg.params.length)
        all_pass = all_pass and ok
        rows.append((i, math.sqrt(pt.h_norm_sq), pt.residual_norm, lhs, rhs,
                     int(ok)))
    summary = _summary_base(cfg)
    summary["result"] = {"n_points": len(points), "n_dropped": dropped,
                         "bound_passed": all_pass}
    records = {
        "stationary_points.csv": (
            "index,h_norm,residual,bound_lhs,bound_rhs,bound_pass", rows),
        "summary.json": summary,
    }
    x = cfg.grid.nodes()
    for i, pt in enumerate(points):
        records[f"point_{i:03d}.csv"] = ("x,v,p", list(zip(x, pt.v, pt.p)))
    return records, EXIT_OK if all_pass else EXIT_CHECK


def _cmd_validate(cfg):
    opts = _experiment_opts(cfg, {"sample_box": [[-5.0, 5.0], [-5.0, 5.0]],
                                  "n_samples": 1000})
    box = tuple(tuple(b) for b in opts["sample_box"])
    dc = derived_constants(cfg.params, cfg.nonlinearity.beta0,
                           cfg.nonlinearity.m_F, cfg.forcing, cfg.grid)
    report = validate_assumptions(cfg.nonlinearity, sample_box=box,
                                  n_samples=opts["n_samples"], seed=cfg.seed,
                                  beta1=dc.beta1)
    summary = _summary_base(cfg)
    summary["result"] = report.summary()
    rows = [(c.check_id, int(c.passed), c.margin)
            for c in report.checks]
    records = {
        "checks.csv": ("check_id,passed,margin", rows),
        "summary.json": summary,
    }
    return records, EXIT_OK if report.passed else EXIT_CHECK


def _cmd_quasi_stability(cfg):
    opts = _experiment_opts(cfg, {"T": 10.0, "n_pairs": 1,
                                  "initial_scale": 0.5, "floor": None})
    summary = _summary_base(cfg)
    fits, records = [], {}
    for pair in range(opts["n_pairs"]):
        rng = np.random.default_rng((cfg.seed, pair))
        z1 = analysis.random_state(cfg.grid, rng, opts["initial_scale"])
        z2 = analysis.random_state(cfg.grid, rng, opts["initial_scale"])
        t, e_diff, chi = analysis.difference_energy_experiment(
            cfg.grid, z1, z2, opts["T"], cfg.step_config, cfg.params,
            cfg.nonlinearity, cfg.forcing, theta=cfg.theta)
        floor = opts["floor"]
        if floor is None:
            floor = 0.5 * float(np.min(e_diff))
        fit = analysis.fit_exponential_decay(t, e_diff, floor=floor)
        fits.append({"pair": pair, "sigma": fit.sigma,
                     "amplitude": fit.amplitude, "offset": fit.offset,
                     "r_squared": fit.r_squared,
                     "varsigma": fit.amplitude / e_diff[0]})
        records[f"difference_energy_{pair:03d}.csv"] = (
            "t,E_diff,chi_sup", list(zip(t, e_diff, chi)))
    summary["result"] = {"theta": cfg.theta, "fits": fits}
    records["summary.json"] = summary
    return records, EXIT_OK


def _cmd_eps_lipschitz(cfg):
    opts = _experiment_opts(cfg, {
        "T": 5.0, "initial": "random", "initial_scale": 0.5,
        "eps_pairs": [[0.0, 0.001], [0.0, 0.01], [0.0, 0.1], [0.0, 1.0]]})
    z0 = _initial_state(cfg, opts["initial"], opts["initial_scale"])
    pairs = [tuple(p) for p in opts["eps_pairs"]]
    rows = analysis.epsilon_lipschitz_experiment(
        cfg.grid, z0, pairs, opts["T"], cfg.step_config, cfg.params,
        cfg.nonlinearity, cfg.forcing)
    finite = [(d, g) for d, g, _ in rows if d > 0 and g > 0]
    slope = None
    if len(finite) >= 2:
        ld = np.log([d for d, _ in finite])
        lg = np.log([g for _, g in finite])
        slope = float(np.polyfit(ld, lg, 1)[0])
    summary = _summary_base(cfg)
    summary["result"] = {
        "loglog_slope": slope,
        "max_ratio": max((r for _, _, r in rows if math.isfinite(r)),
                         default=None),
    }
    records = {
        "eps_gap.csv": ("delta_eps,sup_gap,ratio", rows),
        "summary.json": summary,
    }
    return records, EXIT_OK


_CLOUD_DEFAULTS = {"ensemble_size": 6, "T_transient": 40.0, "T_sample": 10.0,
                   "sample_stride": 20, "init_scale": 1.0}


def _cmd_attractor(cfg):
    opts = _experiment_opts(cfg, _CLOUD_DEFAULTS)
    cloud = analysis.attractor_cloud(
        cfg.grid, cfg.params, cfg.nonlinearity, cfg.forcing,
        ensemble_size=opts["ensemble_size"], T_transient=opts["T_transient"],
        T_sample=opts["T_sample"], sample_stride=opts["sample_stride"],
        seed=cfg.seed, cfg=cfg.step_config, init_scale=opts["init_scale"])
    norms = cloud.norms(cfg.grid, cfg.params)
    envelope = analysis.regularity_envelope(cfg.grid, cloud, cfg.params,
                                            cfg.nonlinearity, cfg.forcing)
    summary = _summary_base(cfg)
    summary["result"] = {
        "n_states": len(cloud.states), "dropped": cloud.dropped,
        "diameter": cloud.diameter(cfg.grid, cfg.params),
        "max_norm": float(np.max(norms)) if len(norms) else 0.0,
        "regularity_envelope": envelope,
    }
    rows = [(i, float(n)) for i, n in enumerate(norms)]
    records = {
        "cloud_norms.csv": ("index,h_norm", rows),
        "summary.json": summary,
    }
    return records, EXIT_OK


def _cmd_sweep(cfg):
    opts = _experiment_opts(cfg, dict(_CLOUD_DEFAULTS, eps0=0.0,
                                      eps_list=[0.5, 0.25, 0.1, 0.05]))
    cloud_kwargs = {k: opts[k] for k in _CLOUD_DEFAULTS}
    cloud_kwargs["seed"] = cfg.seed
    cloud_kwargs["cfg"] = cfg.step_config
    rows, base = analysis.semicontinuity_sweep(
        cfg.grid, cfg.params, cfg.nonlinearity, cfg.forcing,
        eps0=opts["eps0"], eps_list=opts["eps_list"],
        cloud_kwargs=cloud_kwargs)
    summary = _summary_base(cfg)
    summary["result"] = {
        "eps0": opts["eps0"],
        "base_diameter": base.diameter(cfg.grid, cfg.params),
        "semidistances": [{"eps": e, "dist": d} for e, d in rows],
    }
    records = {
        "semidistance.csv": ("eps,dist", rows),
        "summary.json": summary,
    }
    return records, EXIT_OK


def _cmd_eigen(cfg):
    lam = smallest_eigenvalue(cfg.grid)
    analytic = (math.pi / (2.0 * cfg.grid.length)) ** 2
    summary = _summary_base(cfg)
    summary["result"] = {"lambda1": lam, "lambda1_analytic": analytic,
                         "abs_error": abs(lam - analytic)}
    return {"summary.json": summary}, EXIT_OK


_DISPATCH = {
    "simulate": _cmd_simulate,
    "stationary": _cmd_stationary,
    "validate": _cmd_validate,
    "quasi-stability": _cmd_quasi_stability,
    "eps-lipschitz": _cmd_eps_lipschitz,
    "attractor": _cmd_attractor,
    "sweep": _cmd_sweep,
    "eigen": _cmd_eigen,
}


def execute(command: str, cfg: RunConfig, out_dir) -> int:
    """Run one command, write its outputs, return the exit status."""
    out_dir = Path(out_dir)
    try:
        records, status = _DISPATCH[command](cfg)
    except KeyError:
        raise ConfigError(f"unknown command '{command}'")
    except (NewtonDivergedError, BlowUpError, SingularJacobianError) as exc:
        error = {"error": type(exc).__name__, "message": str(exc),
                 "time": getattr(exc, "time", None),
                 "command": command}
        write_outputs({"error.json": error}, out_dir)
        return EXIT_SOLVER
    write_outputs(records, out_dir)
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="piezobeam",
        description="Numerical laboratory for a coupled damped beam system: "
                    "simulation, stationary analysis, and long-time "
                    "dynamics experiments.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON config file (defaults used if omitted)")
    parser.add_argument("--out", type=Path, required=True,
                        help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads (accepted for interface "
                             "stability; execution is serial)")
    args = parser.parse_args(argv)

    try:
        text = args.config.read_text() if args.config else "{}"
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(text)
        if args.seed is not None:
            cfg.data["seed"] = args.seed
            cfg = RunConfig(cfg.data)
        status = execute(args.command, cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PiezobeamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if status == EXIT_SOLVER:
        print("solver failure: see error.json", file=sys.stderr)
    elif status == EXIT_CHECK:
        print("acceptance check failed: see summary.json", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
