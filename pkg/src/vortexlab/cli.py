"""Batch front-end: feasibility checks, solves, and 1D-oracle comparisons.

Usage:
    vortexlab check|solve|oracle-compare --config run.json [--out DIR]
                                         [--emit-fields] [--emit-profiles]

The config is strict JSON (unknown keys rejected).  report.json embeds the
fully resolved configuration; pointing --config at a report reruns it and
reproduces the outputs byte for byte.

Exit codes: 0 success, 1 malformed/invalid config, 2 infeasible domain,
3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import diagnostics
from .background import default_mu, plane_log_u0
from .discretization import Grid2D
from .errors import (
    ConfigError,
    InfeasibleDomain,
    LineSearchStalled,
    MaxIterationsExceeded,
    ConvergenceFailure,
    NotRadiallyReducible,
    VortexLabError,
)
from .model import (
    DomainSpec,
    PhysicalParams,
    VortexSet,
    check_admissibility,
    coupling_from_pq,
    merge_coincident,
    validate_vortex_positions,
)
from .reporting import write_fld, write_json, write_radial_profile
from .solver import (
    LOG2,
    SolveConfig,
    default_plane_half_width,
    newton_solve,
    radial_oracle,
)

MODES = ("check", "solve", "oracle-compare")

_TOP_KEYS = {
    "mode", "p", "q", "rho_bar", "domain", "grid", "vortices", "mu",
    "tol_residual", "max_newton", "cg_tol", "cg_max_iter", "armijo_c",
    "armijo_backtrack", "output_dir", "emit_fields", "emit_profiles",
    "oracle_mesh",
}


def _reject_unknown(d: dict, allowed: set[str], where: str) -> None:
    for key in d:
        if key not in allowed:
            raise ConfigError(f"unknown key '{key}' in {where}")


def _need(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"missing key '{key}' in {where}")
    return d[key]


def _as_number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"key '{key}' must be a number")
    return float(value)


def _as_int(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"key '{key}' must be an integer")
    return value


def _as_bool(value, key: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"key '{key}' must be a boolean")
    return value


def _parse_vortex_list(raw, key: str):
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise ConfigError(f"key '{key}' must be a list of [x, y, multiplicity]")
    out = []
    for entry in raw:
        if not (isinstance(entry, list) and len(entry) == 3):
            raise ConfigError(f"entries of '{key}' must be [x, y, multiplicity]")
        x = _as_number(entry[0], key)
        y = _as_number(entry[1], key)
        m = _as_int(entry[2], key)
        out.append((x, y, m))
    return tuple(out)


def resolve_config(raw: dict, mode: str) -> dict:
    """Validate a raw config dict and fill every default explicitly."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    # a report.json is accepted transparently: rerun its embedded config
    if "config" in raw and "diagnostics" in raw:
        raw = raw["config"]
        if not isinstance(raw, dict):
            raise ConfigError("embedded 'config' must be a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "config")
    if "mode" in raw and raw["mode"] != mode:
        raise ConfigError(f"config key 'mode' is '{raw['mode']}' but the subcommand is '{mode}'")

    p = _as_number(_need(raw, "p", "config"), "p")
    q = _as_number(_need(raw, "q", "config"), "q")
    rho = _as_number(raw.get("rho_bar", 1.0), "rho_bar")
    k = coupling_from_pq(p, q)

    vort_raw = raw.get("vortices", {})
    if not isinstance(vort_raw, dict):
        raise ConfigError("key 'vortices' must be an object with 'up' and 'down'")
    _reject_unknown(vort_raw, {"up", "down"}, "vortices")
    up = merge_coincident(_parse_vortex_list(vort_raw.get("up"), "vortices.up"))
    down = merge_coincident(_parse_vortex_list(vort_raw.get("down"), "vortices.down"))
    vortices = VortexSet(up=up, down=down)

    dom_raw = _need(raw, "domain", "config")
    if not isinstance(dom_raw, dict):
        raise ConfigError("key 'domain' must be an object")
    kind = _need(dom_raw, "kind", "domain")
    if kind == "torus":
        _reject_unknown(dom_raw, {"kind", "L1", "L2"}, "domain")
        l1 = _as_number(_need(dom_raw, "L1", "domain"), "L1")
        l2 = _as_number(_need(dom_raw, "L2", "domain"), "L2")
        domain = {"kind": "torus", "L1": l1, "L2": l2}
        mu = None
        if "mu" in raw and raw["mu"] is not None:
            raise ConfigError("key 'mu' applies only to plane domains")
    elif kind == "plane":
        _reject_unknown(dom_raw, {"kind", "R"}, "domain")
        if "R" in dom_raw and dom_raw["R"] is not None:
            r_half = _as_number(dom_raw["R"], "R")
        else:
            r_half = default_plane_half_width(k, vortices)
        domain = {"kind": "plane", "R": r_half}
        mu = raw.get("mu")
        mu = default_mu(vortices) if mu is None else _as_number(mu, "mu")
    else:
        raise ConfigError(f"domain kind must be 'torus' or 'plane', got '{kind}'")

    grid_raw = _need(raw, "grid", "config")
    if not isinstance(grid_raw, dict):
        raise ConfigError("key 'grid' must be an object")
    _reject_unknown(grid_raw, {"nx", "ny"}, "grid")
    nx = _as_int(_need(grid_raw, "nx", "grid"), "nx")
    ny = _as_int(_need(grid_raw, "ny", "grid"), "ny")

    resolved = {
        "mode": mode,
        "p": p,
        "q": q,
        "rho_bar": rho,
        "domain": domain,
        "grid": {"nx": nx, "ny": ny},
        "vortices": {
            "up": [[x, y, m] for x, y, m in up],
            "down": [[x, y, m] for x, y, m in down],
        },
        "mu": mu,
        "tol_residual": _as_number(raw.get("tol_residual", 1e-10), "tol_residual"),
        "max_newton": _as_int(raw.get("max_newton", 50), "max_newton"),
        "cg_tol": _as_number(raw.get("cg_tol", 1e-3), "cg_tol"),
        "cg_max_iter": _as_int(raw.get("cg_max_iter", 400), "cg_max_iter"),
        "armijo_c": _as_number(raw.get("armijo_c", 1e-4), "armijo_c"),
        "armijo_backtrack": _as_number(raw.get("armijo_backtrack", 0.5), "armijo_backtrack"),
        "output_dir": raw.get("output_dir", "."),
        "emit_fields": _as_bool(raw.get("emit_fields", False), "emit_fields"),
        "emit_profiles": _as_bool(raw.get("emit_profiles", False), "emit_profiles"),
    }
    if mode == "oracle-compare":
        resolved["oracle_mesh"] = _as_int(raw.get("oracle_mesh", 8192), "oracle_mesh")
    return resolved


def _build_problem(resolved: dict):
    params = PhysicalParams(resolved["p"], resolved["q"], resolved["rho_bar"])
    k = coupling_from_pq(resolved["p"], resolved["q"])
    vortices = VortexSet(
        up=tuple(tuple(v) for v in resolved["vortices"]["up"]),
        down=tuple(tuple(v) for v in resolved["vortices"]["down"]),
    )
    dom = resolved["domain"]
    nx, ny = resolved["grid"]["nx"], resolved["grid"]["ny"]
    if dom["kind"] == "torus":
        domain = DomainSpec.torus(dom["L1"], dom["L2"])
        grid = Grid2D.periodic(dom["L1"], dom["L2"], nx, ny)
    else:
        domain = DomainSpec.plane(dom["R"])
        grid = Grid2D.dirichlet(dom["R"], nx, ny)
    try:
        validate_vortex_positions(vortices, domain)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    cfg = SolveConfig(
        coupling=k,
        vortices=vortices,
        domain=domain,
        grid=grid,
        mu=resolved["mu"],
        tol_residual=resolved["tol_residual"],
        max_newton=resolved["max_newton"],
        cg_tol=resolved["cg_tol"],
        cg_max_iter=resolved["cg_max_iter"],
        armijo_c=resolved["armijo_c"],
        armijo_backtrack=resolved["armijo_backtrack"],
    )
    return params, cfg


def _admissibility_dict(cfg: SolveConfig) -> dict:
    rep = check_admissibility(cfg.coupling, cfg.vortices.n1, cfg.vortices.n2, cfg.domain.area)
    return {
        "threshold": rep.threshold,
        "eta1": rep.eta1,
        "eta2": rep.eta2,
        "feasible": rep.feasible,
    }


def run_check(resolved: dict, out_dir: Path) -> int:
    _, cfg = _build_problem(resolved)
    cfg.domain.require_torus()
    adm = _admissibility_dict(cfg)
    write_json(out_dir / "admissibility.json", adm)
    return 0 if adm["feasible"] else 2


def _solution_report(resolved: dict, params, cfg, sol) -> dict:
    diag = diagnostics.build_report(sol, params)
    n1, n2 = cfg.vortices.n1, cfg.vortices.n2
    diag_dict = {
        "flux1": diag.flux1,
        "flux2": diag.flux2,
        "flux_expected": [-math.pi * n1, -math.pi * n2],
        "physical_flux1": diag.physical_flux1,
        "physical_flux2": diag.physical_flux2,
        "physical_flux_expected": [-2.0 * math.pi * params.p * n1, -2.0 * math.pi * params.p * n2],
        "energy_integral": diag.energy_integral,
        "energy_expected": -math.pi * (n1 + n2) / 2.0,
        "residual_inf": diag.residual_inf,
        "eta1_measured": diag.eta1_measured,
        "eta2_measured": diag.eta2_measured,
        "decay_rate": diag.decay_rate,
        "decay_r2": diag.decay_r2,
        "gradient_decay_rate": diag.gradient_decay_rate,
        "gradient_decay_r2": diag.gradient_decay_r2,
    }
    return {
        "config": resolved,
        "admissibility": _admissibility_dict(cfg) if cfg.domain.is_torus else None,
        "solve": {
            "converged": True,
            "newton_iterations": sol.newton_iterations,
            "final_residual": sol.final_residual,
            "functional_value": sol.functional_value,
            "history": [
                {
                    "iteration": s.iteration,
                    "residual_inf": s.residual_inf,
                    "functional": s.functional,
                    "step_size": s.step_size,
                    "cg_iterations": s.cg_iterations,
                }
                for s in sol.history
            ],
        },
        "diagnostics": diag_dict,
    }


def _emit_profiles(out_dir: Path, cfg, sol) -> None:
    grid = cfg.grid
    r_half = cfg.domain.half_width
    radii = np.linspace(0.1 * r_half, 0.95 * r_half, 64)
    u1 = diagnostics.ring_means(grid, sol.u1.values, radii)
    u2 = diagnostics.ring_means(grid, sol.u2.values, radii)
    dev1 = diagnostics.ring_means(grid, (sol.u1.values + LOG2) ** 2, radii)
    dev2 = diagnostics.ring_means(grid, (sol.u2.values + LOG2) ** 2, radii)
    write_radial_profile(out_dir / "radial_profile.csv", radii, u1, u2, dev1 + dev2)


def run_solve(resolved: dict, out_dir: Path) -> int:
    params, cfg = _build_problem(resolved)
    sol = newton_solve(cfg)
    report = _solution_report(resolved, params, cfg, sol)
    write_json(out_dir / "report.json", report)
    if resolved["emit_fields"]:
        write_fld(out_dir / "u1.fld", sol.u1)
        write_fld(out_dir / "u2.fld", sol.u2)
        maps = diagnostics.field_maps(sol, params)
        write_fld(out_dir / "B12.fld", maps["B12"])
    if resolved["emit_profiles"] and not cfg.domain.is_torus:
        _emit_profiles(out_dir, cfg, sol)
    return 0


def run_oracle_compare(resolved: dict, out_dir: Path) -> int:
    params, cfg = _build_problem(resolved)
    cfg.domain.require_plane()
    for x, y, _ in cfg.vortices.up + cfg.vortices.down:
        if math.hypot(x, y) > 1e-9:
            raise NotRadiallyReducible(
                f"vortex at ({x}, {y}) is off the origin; no radial reduction"
            )
    n1, n2 = cfg.vortices.n1, cfg.vortices.n2
    sol = newton_solve(cfg)

    k = cfg.coupling
    rate = math.sqrt(2.0 * min(k.lambda1, k.lambda2))
    r_half = cfg.domain.half_width
    rmax = max(r_half, 20.0 / rate)
    r_oracle, u1_oracle, u2_oracle = radial_oracle(k, n1, n2, rmax, mesh=resolved["oracle_mesh"])

    grid = cfg.grid
    mu = cfg.resolved_mu()
    r_lo = max(0.5, 3.0 * max(grid.hx, grid.hy))
    r_hi = 0.8 * r_half
    radii = np.linspace(r_lo, r_hi, 48)
    theta = (np.arange(720) + 0.5) * (2.0 * np.pi / 720)
    x = radii[:, None] * np.cos(theta)[None, :]
    y = radii[:, None] * np.sin(theta)[None, :]
    # sample u through the analytic background plus the interpolated smooth
    # correction; interpolating u directly would lose accuracy at the core
    v1 = k.sqrt_det * sol.state.w1.values
    v2 = (k.det * sol.state.w2.values + k.k21 * k.sqrt_det * sol.state.w1.values) / k.k11
    u1_rings = (
        plane_log_u0(cfg.vortices.up, mu, x, y)
        + diagnostics.bilinear_sample(grid, v1, x, y)
        - LOG2
    ).mean(axis=1)
    u2_rings = (
        plane_log_u0(cfg.vortices.down, mu, x, y)
        + diagnostics.bilinear_sample(grid, v2, x, y)
        - LOG2
    ).mean(axis=1)
    u1_ref = np.interp(radii, r_oracle, u1_oracle)
    u2_ref = np.interp(radii, r_oracle, u2_oracle)

    d1 = np.abs(u1_rings - u1_ref)
    d2 = np.abs(u2_rings - u2_ref)
    comparison = {
        "config": resolved,
        "window": [float(r_lo), float(r_hi)],
        "radii": [float(r) for r in radii],
        "u1_rings_2d": [float(v) for v in u1_rings],
        "u1_rings_1d": [float(v) for v in u1_ref],
        "u2_rings_2d": [float(v) for v in u2_rings],
        "u2_rings_1d": [float(v) for v in u2_ref],
        "u1_max_abs_diff": float(np.max(d1)),
        "u1_mean_abs_diff": float(np.mean(d1)),
        "u2_max_abs_diff": float(np.max(d2)),
        "u2_mean_abs_diff": float(np.mean(d2)),
    }
    write_json(out_dir / "oracle_compare.json", comparison)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="vortexlab", description=__doc__)
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        sp = sub.add_parser(mode)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--out", type=Path, default=None)
        sp.add_argument("--emit-fields", action="store_true")
        sp.add_argument("--emit-profiles", action="store_true")
    args = parser.parse_args(argv)

    try:
        raw = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1

    try:
        resolved = resolve_config(raw, args.mode)
        if args.emit_fields:
            resolved["emit_fields"] = True
        if args.emit_profiles:
            resolved["emit_profiles"] = True
        if args.out is not None:
            resolved["output_dir"] = str(args.out)
        out_dir = Path(resolved["output_dir"])
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.mode == "check":
            return run_check(resolved, out_dir)
        if args.mode == "solve":
            return run_solve(resolved, out_dir)
        return run_oracle_compare(resolved, out_dir)
    except InfeasibleDomain as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    except (MaxIterationsExceeded, LineSearchStalled, ConvergenceFailure) as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, NotRadiallyReducible, VortexLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
