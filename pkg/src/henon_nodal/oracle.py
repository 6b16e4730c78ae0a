"""Independent primal solver for the scalar Henon equation.

Solves -Δu = |x|^α |u|^(p-1) u with zero Dirichlet data by direct
minimization over the primal nodal Nehari set: candidates are scaled as
a u⁺ - b u⁻ to make the energy

    J(u) = 1/2 ∫ |∇u|² - 1/(p+1) ∫ |x|^α |u|^(p+1)

stationary in both scaling directions, then flow along the Sobolev gradient
u - K(|x|^α |u|^(p-1) u), with a strong-form Newton finish. Everything here
is primal and scalar: no dual densities, no fiber exponents, no pairing
coefficients. The dual-method system solver is validated against this
route, so the two must stay algorithmically independent.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from henon_nodal.greenop import GreenSolver, eigenpair
from henon_nodal.grids import Grid, ScalarField

__all__ = ["ScalarSolution", "OracleError", "scalar_nodal_solve", "scalar_ground_solve"]

logger = logging.getLogger(__name__)


class OracleError(RuntimeError):
    """Scalar solve failed to converge."""


@dataclass
class ScalarSolution:
    u: ScalarField
    level: float
    residual: float
    iterations: int

    @property
    def grid(self) -> Grid:
        return self.u.grid


def _energy(u: np.ndarray, p: float, alpha: float, green: GreenSolver) -> float:
    g = green.grid
    quad = float(np.dot(u, green.lap.S @ u))
    pot = float(np.dot(g.weights, g.r_flat**alpha * np.abs(u) ** (p + 1)))
    return 0.5 * quad - pot / (p + 1)


def _project_nodal(u: np.ndarray, p: float, alpha: float, green: GreenSolver):
    """Scale the sign parts (a u⁺ - b u⁻) to make the energy stationary in
    both directions; Newton in log(a), log(b) from the decoupled start."""
    g = green.grid
    S = green.lap.S
    up = np.maximum(u, 0.0)
    um = np.maximum(-u, 0.0)
    if not np.any(up) or not np.any(um):
        raise OracleError("nodal projection needs both sign parts")
    kp = float(np.dot(up, S @ up))
    km = float(np.dot(um, S @ um))
    kx = float(np.dot(up, S @ um))  # <= 0: neighbour coupling across the interface
    wgt = g.weights * g.r_flat**alpha
    pp = float(np.dot(wgt, up ** (p + 1)))
    pm = float(np.dot(wgt, um ** (p + 1)))
    if min(kp, km, pp, pm) <= 0:
        raise OracleError("degenerate sign parts in nodal projection")

    # start from the decoupled closed form a = (K/P)^(1/(p-1))
    x = np.array(
        [math.log(kp / pp) / (p - 1.0), math.log(km / pm) / (p - 1.0)]
    )

    def state(x):
        a, b = math.exp(x[0]), math.exp(x[1])
        phi_a = a * kp - b * kx - a**p * pp
        phi_b = b * km - a * kx - b**p * pm
        G = np.array([a * phi_a, b * phi_b])
        H = np.array(
            [
                [a * phi_a + a * a * (kp - p * a ** (p - 1) * pp), -a * b * kx],
                [-a * b * kx, b * phi_b + b * b * (km - p * b ** (p - 1) * pm)],
            ]
        )
        val = (
            0.5 * a * a * kp + 0.5 * b * b * km - a * b * kx
            - (a ** (p + 1) * pp + b ** (p + 1) * pm) / (p + 1)
        )
        return val, G, H

    scale = max(kp, km, abs(kx), pp, pm)
    val, G, H = state(x)
    for _ in range(60):
        if np.max(np.abs(G)) <= 1e-12 * scale:
            break
        negdef = H[0, 0] < 0 and np.linalg.det(H) > 0
        d = np.linalg.solve(H, -G) if negdef else G / max(np.max(np.abs(G)), 1e-300)
        dn = np.max(np.abs(d))
        if negdef and dn <= 1e-14 * (1 + np.max(np.abs(x))):
            break
        if dn > 2.0:
            d *= 2.0 / dn
        tau = 1.0
        while tau > 1e-12:
            val_new, G_new, H_new = state(x + tau * d)
            if val_new >= val - 1e-13 * max(abs(val), scale):
                x, val, G, H = x + tau * d, val_new, G_new, H_new
                break
            tau *= 0.5
        else:
            break
    a, b = math.exp(x[0]), math.exp(x[1])
    return a * up - b * um, val


def _project_ground(u: np.ndarray, p: float, alpha: float, green: GreenSolver):
    g = green.grid
    k = float(np.dot(u, green.lap.S @ u))
    pot = float(np.dot(g.weights, g.r_flat**alpha * np.abs(u) ** (p + 1)))
    if k <= 0 or pot <= 0:
        raise OracleError("degenerate field in ground projection")
    a = (k / pot) ** (1.0 / (p - 1.0))
    scaled = a * u
    return scaled, _energy(scaled, p, alpha, green)


def _newton_scalar(
    u: np.ndarray, p: float, alpha: float, green: GreenSolver,
    tol: float = 1e-12, stall_tol: float = 1e-9, max_iter: int = 30,
) -> np.ndarray | None:
    g = green.grid
    S = green.lap.S
    W = g.weights
    wr = g.r_flat**alpha

    def resid(u_):
        return S @ u_ - W * (wr * np.sign(u_) * np.abs(u_) ** p)

    F = resid(u)
    fnorm = float(np.max(np.abs(F)))
    scale = max(float(np.max(np.abs(W * wr * np.abs(u) ** p))), 1e-300)
    u = u.copy()
    stalled = False
    for _ in range(max_iter):
        if fnorm <= tol * scale or stalled:
            break
        J = S - sp.diags(W * wr * p * np.abs(u) ** (p - 1))
        try:
            du = spla.splu(J.tocsc()).solve(-F)
        except RuntimeError:
            return None
        tau = 1.0
        while tau > 1e-7:
            u_new = u + tau * du
            Fn = resid(u_new)
            fn = float(np.max(np.abs(Fn)))
            if fn < fnorm * (1 - 0.25 * tau):
                u, F, fnorm = u_new, Fn, fn
                break
            tau *= 0.5
        else:
            stalled = True
    return u if fnorm <= max(tol, stall_tol if stalled else tol) * scale else None


def _default_seed(green: GreenSolver, nodal: bool) -> np.ndarray:
    grid = green.grid
    if not nodal:
        return eigenpair(green, 1)[1].values.copy()
    if grid.n_theta == 1:
        return eigenpair(green, 2)[1].values.copy()
    dom = grid.domain
    r = grid.r_flat
    if dom.has_inner_boundary:
        profile = np.sin(
            math.pi * (r - dom.inner_radius) / (dom.outer_radius - dom.inner_radius)
        )
    else:
        rr = r / dom.outer_radius
        profile = rr * (1 - rr**2)
    return profile * np.cos(grid.theta_flat)


def _solve(
    grid: Grid,
    p: float,
    alpha: float,
    nodal: bool,
    green: GreenSolver | None,
    grad_tol: float,
    max_iterations: int,
) -> ScalarSolution:
    if p <= 1:
        raise OracleError("the primal Nehari projection needs p > 1")
    green = green or GreenSolver.from_grid(grid)
    g = grid
    wr = g.r_flat**alpha
    project = _project_nodal if nodal else _project_ground
    u, level = project(_default_seed(green, nodal), p, alpha, green)
    step = 0.5
    it = 0
    polished = False
    while it < max_iterations:
        it += 1
        f = wr * np.sign(u) * np.abs(u) ** p
        grad = u - green.solve_array(f)
        ginf = float(np.max(np.abs(grad)))
        if ginf <= grad_tol:
            break
        if ginf <= 1e-2 * max(1.0, float(np.max(np.abs(u)))):
            refined = _newton_scalar(u, p, alpha, green)
            if refined is not None and (not nodal or (refined.max() > 0 > refined.min())):
                u = refined
                level = _energy(u, p, alpha, green)
                polished = True
                f = wr * np.sign(u) * np.abs(u) ** p
                ginf = float(np.max(np.abs(u - green.solve_array(f))))
                if ginf <= grad_tol:
                    break
        accepted = False
        while step >= 1e-8:
            trial = u - step * grad
            if not nodal:
                trial = np.maximum(trial, 0.0)
            try:
                u_new, new_level = project(trial, p, alpha, green)
            except OracleError:
                step *= 0.5
                continue
            if new_level <= level:
                u, level = u_new, new_level
                step = min(2 * step, 1.0)
                accepted = True
                break
            step *= 0.5
        if not accepted:
            if polished and ginf <= 100 * grad_tol:
                break
            raise OracleError(
                f"scalar descent stalled at iteration {it} (grad {ginf:.3e})"
            )
    else:
        raise OracleError(f"no convergence in {max_iterations} iterations")

    if u[int(np.argmax(np.abs(u)))] < 0:
        u = -u
    f = wr * np.sign(u) * np.abs(u) ** p
    residual = float(
        np.max(np.abs(green.lap.apply(u) - f)) / max(np.max(np.abs(f)), 1e-300)
    )
    return ScalarSolution(ScalarField(u, g), _energy(u, p, alpha, green), residual, it)


def scalar_nodal_solve(
    grid: Grid,
    p: float,
    alpha: float = 0.0,
    green: GreenSolver | None = None,
    grad_tol: float = 1e-9,
    max_iterations: int = 10_000,
) -> ScalarSolution:
    """Least-energy sign-changing solution of the scalar Henon equation."""
    return _solve(grid, p, alpha, True, green, grad_tol, max_iterations)


def scalar_ground_solve(
    grid: Grid,
    p: float,
    alpha: float = 0.0,
    green: GreenSolver | None = None,
    grad_tol: float = 1e-9,
    max_iterations: int = 10_000,
) -> ScalarSolution:
    """Positive least-energy solution of the scalar Henon equation."""
    return _solve(grid, p, alpha, False, green, grad_tol, max_iterations)
