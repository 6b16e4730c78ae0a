"""Solution output: field dumps, JSON sidecars, CSV tables, PNG figures.

Every solve writes its fields in the plain-text dump format next to a JSON
sidecar with params, level, residuals and diagnostics; sweeps write a CSV
with a fixed column schema. Figures are rendered to PNG alongside those
files (suppressible): field plots, convergence traces, sweep and
regularization curves. Nothing here depends on wall-clock time, so reruns
of the same configuration produce byte-identical delimited output. CSV and
JSON files are written to a temporary name and renamed into place, so a
crash never leaves a truncated table behind.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from henon_nodal.dual import Exponents, Params, energy_E
from henon_nodal.greenop import GreenSolver
from henon_nodal.grids import ScalarField, save_field
from henon_nodal.solver import NodalSolution
from henon_nodal.symmetry import SymmetryReport

__all__ = [
    "SWEEP_HEADER",
    "write_solution",
    "write_sweep_csv",
    "write_eps_csv",
    "solution_figure",
    "trace_figure",
    "sweep_figure",
    "eps_figure",
    "field_figure",
    "count_sign_changes",
]

SWEEP_HEADER = [
    "p",
    "q",
    "alpha",
    "beta",
    "c_nod",
    "c_nod_radial",
    "c_ground",
    "raddev_u",
    "raddev_v",
    "component_gap",
    "fs_score",
    "converged",
]


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def atomic_write_text(path: Path, text: str) -> None:
    """Write via a temporary file and rename, so readers never see a
    partially written table."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_json(payload: dict, path: Path) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def count_sign_changes(f: ScalarField) -> int:
    """Interior sign changes of a radial profile (diagnostic only)."""
    vals = f.reshape2()[:, 0] if f.grid.n_theta > 1 else f.values
    signs = np.sign(vals[np.abs(vals) > 1e-12 * np.max(np.abs(vals))])
    return int(np.sum(signs[1:] != signs[:-1]))


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------


def field_figure(fields: dict[str, ScalarField], path: Path, title: str = "") -> None:
    """Line plots in 1D / radial, polar heatmaps in 2D."""
    items = list(fields.items())
    grid = items[0][1].grid
    if grid.n_theta == 1:
        fig, ax = plt.subplots(figsize=(6.0, 3.6))
        for name, f in items:
            ax.plot(grid.r, f.values, label=name)
        ax.axhline(0.0, color="k", lw=0.5)
        ax.set_xlabel("r")
        ax.legend(frameon=False)
        if title:
            ax.set_title(title)
    else:
        fig, axes = plt.subplots(
            1, len(items), figsize=(4.2 * len(items), 3.6), squeeze=False
        )
        r_edges = grid.domain.inner_radius + np.arange(grid.n_r + 1) * grid.dr
        t_edges = np.arange(grid.n_theta + 1) * grid.dtheta
        R, T = np.meshgrid(r_edges, t_edges, indexing="ij")
        X, Y = R * np.cos(T), R * np.sin(T)
        for ax, (name, f) in zip(axes[0], items):
            vals = f.reshape2()
            vmax = float(np.max(np.abs(vals))) or 1.0
            pc = ax.pcolormesh(X, Y, vals, cmap="RdBu_r", vmin=-vmax, vmax=vmax)
            ax.set_aspect("equal")
            ax.set_title(name)
            fig.colorbar(pc, ax=ax, shrink=0.85)
        if title:
            fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def trace_figure(trace: list[tuple[float, float]], path: Path) -> None:
    it = np.arange(len(trace))
    levels = np.array([t[0] for t in trace])
    grads = np.array([t[1] for t in trace])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.4, 3.2))
    ax1.plot(it, levels)
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("projected level")
    ax2.semilogy(it, np.maximum(grads, 1e-300))
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("gradient sup norm")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def sweep_figure(rows: list[dict], path: Path) -> None:
    idx = np.arange(len(rows))
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    for key, marker in (("c_nod", "o"), ("c_nod_radial", "s"), ("c_ground", "^")):
        vals = np.array([row.get(key, math.nan) for row in rows], dtype=float)
        ax.plot(idx, vals, marker=marker, label=key)
    labels = [f"({row['p']:g},{row['q']:g},{row['alpha']:g},{row['beta']:g})"
              for row in rows]
    ax.set_xticks(idx)
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=7)
    ax.set_ylabel("level")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def eps_figure(rows: list[dict], path: Path) -> None:
    pts = [(r["eps"], abs(r["gap"])) for r in rows if r["eps"] > 0 and r["converged"]]
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    if pts:
        e, g = zip(*pts)
        ax.loglog(e, g, "o-")
    ax.set_xlabel("eps")
    ax.set_ylabel("|level(eps) - level(0)|")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------


def write_solution(
    outdir: Path,
    sol: NodalSolution,
    params: Params,
    exps: Exponents,
    green: GreenSolver,
    config: dict,
    symmetry: SymmetryReport | None = None,
    figures: bool = True,
) -> dict:
    """Field dumps + trace.csv + solution.json (+ PNGs); returns the sidecar."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    grid = sol.primal.grid
    files = {}
    for name, f in (
        ("u", sol.primal.u),
        ("v", sol.primal.v),
        ("w1", sol.dual.w1),
        ("w2", sol.dual.w2),
    ):
        save_field(f, outdir / f"{name}.dat")
        files[name] = f"{name}.dat"

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["iteration", "level", "grad_inf"])
    for i, (level, grad) in enumerate(sol.trace):
        writer.writerow([i, _fmt(float(level)), _fmt(float(grad))])
    atomic_write_text(outdir / "trace.csv", buf.getvalue())
    files["trace"] = "trace.csv"

    E_val = energy_E(sol.primal, params, green)
    u = sol.primal.u.values
    ref = (
        (params.p * params.q - 1)
        / ((params.p + 1) * (params.q + 1))
        * float(np.dot(grid.weights, grid.r_flat**params.alpha * np.abs(u) ** (params.p + 1)))
    )
    scale = max(abs(sol.level), 1e-300)
    identity_gap = max(abs(sol.level - E_val), abs(E_val - ref)) / scale

    checks = [
        {
            "name": "level_positive",
            "inequality": "level > 0",
            "satisfied": bool(sol.level > 0),
            "level": sol.level,
        },
        {
            "name": "energy_identity_chain",
            "inequality": "max(|I-E|, |E-ref|)/|I| <= 1e-8",
            "satisfied": bool(identity_gap <= 1e-8),
            "max_rel_gap": identity_gap,
        },
    ]
    if sol.kind != "ground" and not math.isnan(sol.pde_residual):
        checks.append(
            {
                "name": "pde_residual_small",
                "inequality": "residual <= 1e-6 x source scale",
                "satisfied": bool(sol.pde_residual <= 1e-6),
                "residual": sol.pde_residual,
            }
        )

    sidecar = {
        "kind": sol.kind,
        "config": config,
        "params": {
            "p": params.p, "q": params.q,
            "alpha": params.alpha, "beta": params.beta,
        },
        "exponents": {"lam": exps.lam, "mu": exps.mu, "gamma": exps.gamma},
        "domain": {
            "kind": grid.domain.kind,
            "inner_radius": grid.domain.inner_radius,
            "outer_radius": grid.domain.outer_radius,
        },
        "grid": {"n_r": grid.n_r, "n_theta": grid.n_theta},
        "level": sol.level,
        "eps": sol.eps,
        "residuals": {
            "grad_inf": sol.grad_inf,
            "nehari_plus": sol.nehari_residuals[0],
            "nehari_minus": sol.nehari_residuals[1],
            "pde": sol.pde_residual,
        },
        "iterations": sol.iterations,
        "sign_masses": sol.sign_masses,
        "energy": {"I": sol.level, "E": E_val, "nonlinear_reference": ref},
        "checks": checks,
        "files": files,
    }
    if grid.n_theta == 1:
        sidecar["sign_changes_u"] = count_sign_changes(sol.primal.u)
    if symmetry is not None:
        sidecar["symmetry"] = symmetry.to_dict()

    if figures:
        field_figure(
            {"u": sol.primal.u, "v": sol.primal.v},
            outdir / "fields.png",
            title=f"{sol.kind} solution",
        )
        trace_figure(sol.trace, outdir / "trace.png")
        files["fields_figure"] = "fields.png"
        files["trace_figure"] = "trace.png"

    write_json(sidecar, outdir / "solution.json")
    return sidecar


def write_sweep_csv(rows: list[dict], path: Path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(SWEEP_HEADER)
    for row in rows:
        writer.writerow([_fmt(row[k]) for k in SWEEP_HEADER])
    atomic_write_text(path, buf.getvalue())


def write_eps_csv(rows: list[dict], path: Path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["eps", "c_eps", "gap_to_c_nod", "converged"])
    for row in rows:
        writer.writerow(
            [
                _fmt(float(row["eps"])),
                _fmt(float(row["level"])),
                _fmt(float(row["gap"])),
                _fmt(bool(row["converged"])),
            ]
        )
    atomic_write_text(path, buf.getvalue())
