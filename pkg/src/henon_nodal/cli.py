"""Command-line experiment front end.

Subcommands
-----------
solve           least-energy nodal solve on the configured domain
ground          least-energy one-signed solve
radial          nodal solve restricted to the radial class
sweep           parameter sweep: nodal + radial + ground per (p,q,alpha,beta)
eps-sweep       regularization levels along a decreasing eps list
symmetry-check  symmetry diagnostics of stored field dumps
oracle-compare  system solve vs the independent scalar solver (p=q, alpha=beta)

Configuration comes from built-in defaults, overridden by an optional JSON
(or TOML, when the interpreter ships tomllib) config file, overridden by
explicit flags. The resolved configuration is recorded in every JSON output
for provenance. The output root defaults to $HENON_NODAL_OUTDIR or ./runs.

Exit codes: 0 success, 2 configuration error, 3 convergence failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from henon_nodal.dual import ParamError, Params, exponents
from henon_nodal.greenop import GreenSolver, SolverBreakdown
from henon_nodal.grids import Domain, GridError, build_grid, build_radial_grid, load_field
from henon_nodal.oracle import OracleError, scalar_nodal_solve
from henon_nodal.reporting import (
    eps_figure,
    field_figure,
    sweep_figure,
    write_eps_csv,
    write_json,
    write_solution,
    write_sweep_csv,
)
from henon_nodal.solver import (
    ConvergenceError,
    NodalCollapseError,
    NotInN0Error,
    SolveOptions,
    eps_sweep,
    minimize_ground,
    minimize_nodal,
    minimize_nodal_radial,
)
from henon_nodal.symmetry import component_gap, symmetry_report
from henon_nodal.dual import PrimalPair

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

DEFAULTS = {
    "domain": "disk",
    "outer_radius": 1.0,
    "inner_radius": 0.0,
    "n_r": 64,
    "n_theta": 128,
    "p": 3.0,
    "q": 3.0,
    "alpha": 0.0,
    "beta": 0.0,
    "step": 0.1,
    "max_iterations": 20000,
    "grad_tol": 1e-8,
    "mass_floor": 1e-6,
    "seed_mode": None,
    "seed_file": None,
    "figures": True,
    "workers": 1,
    "fs_samples": 32,
    "p_values": None,
    "q_values": None,
    "alpha_values": None,
    "beta_values": None,
    "eps_values": [1e-1, 1e-2, 1e-3, 1e-4, 0.0],
}


class ConfigError(ValueError):
    pass


def _load_config_file(path: str) -> dict:
    text = Path(path).read_text()
    if path.endswith(".toml"):
        try:
            import tomllib
        except ImportError as exc:
            raise ConfigError(
                "TOML configs need Python >= 3.11 (tomllib); use JSON"
            ) from exc
        return tomllib.loads(text)
    return json.loads(text)


def _resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        file_cfg = _load_config_file(args.config)
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _domain_from_config(cfg: dict) -> Domain:
    kind = cfg["domain"]
    if kind == "interval":
        return Domain.interval(cfg["outer_radius"])
    if kind == "disk":
        return Domain.disk(cfg["outer_radius"])
    if kind == "annulus":
        return Domain.annulus(cfg["inner_radius"], cfg["outer_radius"])
    raise ConfigError(f"unknown domain kind {kind!r}")


def _params_from_config(cfg: dict, dim: int) -> Params:
    params = Params(cfg["p"], cfg["q"], cfg["alpha"], cfg["beta"])
    params.check_hypothesis(dim)
    return params


def _options_from_config(cfg: dict) -> SolveOptions:
    seed = cfg["seed_file"] if cfg["seed_file"] else cfg["seed_mode"]
    return SolveOptions(
        step=cfg["step"],
        max_iterations=int(cfg["max_iterations"]),
        grad_tol=cfg["grad_tol"],
        mass_floor=cfg["mass_floor"],
        seed=seed,
    )


def _outdir(args: argparse.Namespace, command: str) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    root = os.environ.get("HENON_NODAL_OUTDIR", "runs")
    return Path(root) / command


def _values_list(text):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in text.split(",") if v.strip()]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _run_single(args, command: str) -> int:
    cfg = _resolve_config(args)
    dom = _domain_from_config(cfg)
    params = _params_from_config(cfg, dom.dim)
    opts = _options_from_config(cfg)
    if command == "radial":
        grid = build_radial_grid(dom, int(cfg["n_r"]))
    else:
        grid = build_grid(dom, int(cfg["n_r"]), int(cfg["n_theta"]))
    green = GreenSolver.from_grid(grid)
    if command == "solve":
        sol = minimize_nodal(params, grid, opts, green)
    elif command == "ground":
        sol = minimize_ground(params, grid, opts, green)
    else:
        sol = minimize_nodal_radial(params, grid, opts, green)
    symmetry = None
    if grid.n_theta > 1:
        symmetry = symmetry_report(sol.primal, sol.dual.w1, int(cfg["fs_samples"]))
    outdir = _outdir(args, command)
    write_solution(
        outdir,
        sol,
        params,
        exponents(params),
        green,
        cfg,
        symmetry=symmetry,
        figures=bool(cfg["figures"]),
    )
    print(f"{command}: level = {sol.level:.12g} in {sol.iterations} iterations")
    print(f"outputs in {outdir}")
    return EXIT_OK


def _sweep_tuples(cfg: dict) -> list[tuple[float, float, float, float]]:
    ps = _values_list(cfg["p_values"]) or [cfg["p"]]
    qs = _values_list(cfg["q_values"]) or [cfg["q"]]
    alphas = _values_list(cfg["alpha_values"]) or [cfg["alpha"]]
    betas = _values_list(cfg["beta_values"]) or [cfg["beta"]]
    return [
        (p, q, a, b) for p in ps for q in qs for a in alphas for b in betas
    ]


def _sweep_row(task: tuple[dict, float, float, float, float]) -> dict:
    cfg, p, q, alpha, beta = task
    row = {
        "p": p, "q": q, "alpha": alpha, "beta": beta,
        "c_nod": math.nan, "c_nod_radial": math.nan, "c_ground": math.nan,
        "raddev_u": math.nan, "raddev_v": math.nan,
        "component_gap": math.nan, "fs_score": math.nan,
        "converged": False,
    }
    try:
        dom = _domain_from_config(cfg)
        params = Params(p, q, alpha, beta)
        params.check_hypothesis(dom.dim)
        opts = _options_from_config(cfg)
        grid = build_grid(dom, int(cfg["n_r"]), int(cfg["n_theta"]))
        green = GreenSolver.from_grid(grid)
        nodal = minimize_nodal(params, grid, opts, green)
        if dom.dim == 2:
            rgrid = build_radial_grid(dom, int(cfg["n_r"]))
            radial = minimize_nodal_radial(params, rgrid, opts)
        else:
            radial = minimize_nodal_radial(params, grid, opts, green)
        ground = minimize_ground(params, grid, opts, green)
        row["c_nod"] = nodal.level
        row["c_nod_radial"] = radial.level
        row["c_ground"] = ground.level
        row["component_gap"] = component_gap(nodal.primal)
        if grid.n_theta > 1:
            rep = symmetry_report(nodal.primal, nodal.dual.w1, int(cfg["fs_samples"]))
            row["raddev_u"] = rep.radial_deviation_u
            row["raddev_v"] = rep.radial_deviation_v
            row["fs_score"] = rep.foliated_schwarz_score
        row["converged"] = True
    except (
        ParamError, GridError, NotInN0Error, ConvergenceError,
        NodalCollapseError, SolverBreakdown,
    ) as exc:
        logger.warning("sweep row (%g,%g,%g,%g) failed: %s", p, q, alpha, beta, exc)
    return row


def _run_sweep(args) -> int:
    cfg = _resolve_config(args)
    dom = _domain_from_config(cfg)
    tuples = _sweep_tuples(cfg)
    if not tuples:
        raise ConfigError("empty sweep grid")
    for p, q, a, b in tuples:  # (H) must hold for every tuple up front
        Params(p, q, a, b).check_hypothesis(dom.dim)
    tasks = [(cfg, p, q, a, b) for (p, q, a, b) in tuples]
    workers = int(cfg["workers"])
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(t) for t in tasks]

    outdir = _outdir(args, "sweep")
    outdir.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(rows, outdir / "sweep.csv")
    checks = []
    for row in rows:
        if not row["converged"]:
            continue
        checks.append(
            {
                "name": "level_ordering",
                "inequality": "c_ground < c_nod <= c_nod_radial",
                "satisfied": bool(
                    row["c_ground"] < row["c_nod"] <= row["c_nod_radial"]
                ),
                "row": [row["p"], row["q"], row["alpha"], row["beta"]],
            }
        )
        if row["p"] == row["q"] and row["alpha"] == row["beta"]:
            checks.append(
                {
                    "name": "equal_components_on_diagonal",
                    "inequality": "component_gap <= 1e-6",
                    "satisfied": bool(row["component_gap"] <= 1e-6),
                    "row": [row["p"], row["q"], row["alpha"], row["beta"]],
                }
            )
    summary = {"config": cfg, "rows": rows, "checks": checks}
    write_json(summary, outdir / "sweep.json")
    if cfg["figures"]:
        sweep_figure(rows, outdir / "sweep.png")
    n_ok = sum(r["converged"] for r in rows)
    print(f"sweep: {n_ok}/{len(rows)} rows converged; outputs in {outdir}")
    return EXIT_OK if n_ok == len(rows) else EXIT_SOLVER


def _run_eps_sweep(args) -> int:
    cfg = _resolve_config(args)
    dom = _domain_from_config(cfg)
    params = _params_from_config(cfg, dom.dim)
    opts = _options_from_config(cfg)
    eps_values = _values_list(cfg["eps_values"])
    if not eps_values:
        raise ConfigError("empty eps list")
    positive = [e for e in eps_values if e > 0]
    if positive != sorted(positive, reverse=True):
        raise ConfigError("eps values must be decreasing")
    grid = build_grid(dom, int(cfg["n_r"]), int(cfg["n_theta"]))
    green = GreenSolver.from_grid(grid)
    rows = eps_sweep(params, grid, eps_values, opts, green)
    outdir = _outdir(args, "eps-sweep")
    outdir.mkdir(parents=True, exist_ok=True)
    write_eps_csv(rows, outdir / "eps_sweep.csv")
    gaps = [abs(r["gap"]) for r in rows if r["eps"] > 0 and r["converged"]]
    checks = [
        {
            "name": "gap_monotone_decreasing",
            "inequality": "|c_eps - c_nod| decreasing along decreasing eps",
            "satisfied": bool(all(a > b for a, b in zip(gaps, gaps[1:]))),
            "gaps": gaps,
        },
        {
            "name": "regularization_adds_energy",
            "inequality": "c_eps >= c_nod - tol",
            "satisfied": bool(
                all(
                    r["gap"] >= -1e-9 * max(abs(r["level"]), 1.0)
                    for r in rows
                    if r["converged"]
                )
            ),
        },
    ]
    summary = {"config": cfg, "rows": rows, "checks": checks}
    write_json(summary, outdir / "eps_sweep.json")
    if cfg["figures"]:
        eps_figure(rows, outdir / "eps_sweep.png")
    n_ok = sum(r["converged"] for r in rows)
    print(f"eps-sweep: {n_ok}/{len(rows)} rows converged; outputs in {outdir}")
    return EXIT_OK if n_ok == len(rows) else EXIT_SOLVER


def _run_symmetry_check(args) -> int:
    cfg = _resolve_config(args)
    indir = Path(args.input)
    u_path = indir / "u.dat"
    if not u_path.exists():
        raise ConfigError(f"no u.dat in {indir}")
    u = load_field(u_path)
    if u.grid.n_theta == 1:
        raise ConfigError("symmetry diagnostics need a 2D field dump")
    v = load_field(indir / "v.dat") if (indir / "v.dat").exists() else u.copy()
    w1 = load_field(indir / "w1.dat") if (indir / "w1.dat").exists() else u.copy()
    rep = symmetry_report(PrimalPair(u, v), w1, int(cfg["fs_samples"]))
    outdir = _outdir(args, "symmetry-check") if args.out else indir
    outdir.mkdir(parents=True, exist_ok=True)
    payload = {"config": cfg, "input": str(indir), "symmetry": rep.to_dict()}
    write_json(payload, outdir / "symmetry.json")
    if cfg["figures"]:
        field_figure({"u": u, "v": v}, outdir / "symmetry_fields.png")
    print(
        f"symmetry-check: fs_score = {rep.foliated_schwarz_score:.3e}, "
        f"raddev_u = {rep.radial_deviation_u:.3e}; outputs in {outdir}"
    )
    return EXIT_OK


def _run_oracle_compare(args) -> int:
    cfg = _resolve_config(args)
    dom = _domain_from_config(cfg)
    if cfg["p"] != cfg["q"] or cfg["alpha"] != cfg["beta"]:
        raise ConfigError(
            "oracle comparison needs p = q and alpha = beta "
            f"(got p={cfg['p']}, q={cfg['q']}, alpha={cfg['alpha']}, beta={cfg['beta']})"
        )
    params = _params_from_config(cfg, dom.dim)
    opts = _options_from_config(cfg)
    grid = build_grid(dom, int(cfg["n_r"]), int(cfg["n_theta"]))
    green = GreenSolver.from_grid(grid)
    system = minimize_nodal(params, grid, opts, green)
    scalar = scalar_nodal_solve(grid, params.p, params.alpha, green)
    u_sys = system.primal.u.values
    u_orc = scalar.u.values.copy()
    if float(np.dot(u_sys, u_orc)) < 0:
        u_orc = -u_orc
    scale = float(np.max(np.abs(u_sys)))
    max_diff = float(np.max(np.abs(u_sys - u_orc))) / scale
    # E(u, u) = 2 J(u) identically, so system and scalar levels relate by 2
    conversion = 2.0
    level_gap = abs(system.level - conversion * scalar.level) / system.level
    outdir = _outdir(args, "oracle-compare")
    outdir.mkdir(parents=True, exist_ok=True)
    payload = {
        "config": cfg,
        "system_level": system.level,
        "scalar_level": scalar.level,
        "conversion_factor": conversion,
        "converted_scalar_level": conversion * scalar.level,
        "level_gap_rel": level_gap,
        "max_norm_diff_rel": max_diff,
        "system_iterations": system.iterations,
        "scalar_iterations": scalar.iterations,
        "checks": [
            {
                "name": "routes_agree_in_level",
                "inequality": "|c_system - 2 c_scalar| / c_system <= 1e-4",
                "satisfied": bool(level_gap <= 1e-4),
            },
            {
                "name": "routes_agree_in_field",
                "inequality": "max-norm diff <= 1e-4 after orientation alignment",
                "satisfied": bool(max_diff <= 1e-4),
            },
        ],
    }
    write_json(payload, outdir / "oracle_compare.json")
    if cfg["figures"]:
        from henon_nodal.grids import ScalarField

        field_figure(
            {
                "system u": system.primal.u,
                "scalar u": ScalarField(u_orc, grid),
                "difference": ScalarField(u_sys - u_orc, grid),
            },
            outdir / "oracle_compare.png",
        )
    print(
        f"oracle-compare: level gap {level_gap:.3e}, field gap {max_diff:.3e}; "
        f"outputs in {outdir}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser, solver_opts: bool = True) -> None:
    parser.add_argument("--config", help="JSON (or TOML) config file")
    parser.add_argument("--out", help="output directory")
    parser.add_argument(
        "--domain", choices=["interval", "disk", "annulus"], default=None
    )
    parser.add_argument(
        "--R", "--outer-radius", dest="outer_radius", type=float, default=None,
        help="outer radius (interval length in 1D)",
    )
    parser.add_argument("--inner-radius", dest="inner_radius", type=float, default=None)
    parser.add_argument("--nr", dest="n_r", type=int, default=None)
    parser.add_argument("--ntheta", dest="n_theta", type=int, default=None)
    parser.add_argument("--p", type=float, default=None)
    parser.add_argument("--q", type=float, default=None)
    parser.add_argument("--alpha", type=float, default=None)
    parser.add_argument("--beta", type=float, default=None)
    if solver_opts:
        parser.add_argument("--step", type=float, default=None)
        parser.add_argument(
            "--max-iter", dest="max_iterations", type=int, default=None
        )
        parser.add_argument("--tol", dest="grad_tol", type=float, default=None)
        parser.add_argument("--mass-floor", dest="mass_floor", type=float, default=None)
        parser.add_argument("--seed-mode", dest="seed_mode", type=int, default=None)
        parser.add_argument("--seed-file", dest="seed_file", default=None)
    parser.add_argument("--fs-samples", dest="fs_samples", type=int, default=None)
    fig = parser.add_mutually_exclusive_group()
    fig.add_argument(
        "--figures", dest="figures", action="store_const", const=True, default=None
    )
    fig.add_argument("--no-figures", dest="figures", action="store_const", const=False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="henon-nodal",
        description="Least energy nodal solutions of Henon-Lane-Emden systems",
    )
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("solve", "least-energy nodal solve"),
        ("ground", "least-energy one-signed solve"),
        ("radial", "nodal solve in the radial class"),
    ):
        sp = sub.add_parser(name, help=help_text)
        _add_common(sp)

    sp = sub.add_parser("sweep", help="parameter sweep with CSV output")
    _add_common(sp)
    sp.add_argument("--p-values", dest="p_values", default=None)
    sp.add_argument("--q-values", dest="q_values", default=None)
    sp.add_argument("--alpha-values", dest="alpha_values", default=None)
    sp.add_argument("--beta-values", dest="beta_values", default=None)
    sp.add_argument("--workers", type=int, default=None)

    sp = sub.add_parser("eps-sweep", help="regularization level sweep")
    _add_common(sp)
    sp.add_argument(
        "--eps-values", dest="eps_values", default=None,
        help="comma-separated decreasing list; 0 compares against the plain solve",
    )

    sp = sub.add_parser("symmetry-check", help="diagnostics of stored fields")
    sp.add_argument("--input", required=True, help="directory with u.dat [v.dat w1.dat]")
    _add_common(sp, solver_opts=False)

    sp = sub.add_parser("oracle-compare", help="system vs scalar-equation solver")
    _add_common(sp)
    return parser


COMMANDS = {
    "solve": lambda a: _run_single(a, "solve"),
    "ground": lambda a: _run_single(a, "ground"),
    "radial": lambda a: _run_single(a, "radial"),
    "sweep": _run_sweep,
    "eps-sweep": _run_eps_sweep,
    "symmetry-check": _run_symmetry_check,
    "oracle-compare": _run_oracle_compare,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ParamError, GridError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (
        ConvergenceError, NodalCollapseError, NotInN0Error,
        OracleError, SolverBreakdown,
    ) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
