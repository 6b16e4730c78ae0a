"""Nehari projections and least-energy minimization in the dual framework.

Projection: for a sign-changing dual pair w inside the coercivity set, the
fiber map theta has a unique critical point (t0, s0) with positive
components, which is a nondegenerate maximum. It is found by damped Newton
on the fiber gradient in log(t), log(s) coordinates (positivity for free,
smooth handling of the gamma - 2 < 0 powers), seeded at (1, 1), with a
coarse log-grid search as fallback. The projected pair

    (t0^λ w1⁺ - s0^λ w1⁻,  t0^μ w2⁺ - s0^μ w2⁻)

has vanishing Nehari residuals.

Minimization: project-then-descend. Each iteration projects the iterate,
takes a step against the energy gradient at the projected point (the
stationarity of the fiber map makes this the reduced gradient), and accepts
the step only if the projected energy does not increase, halving the step
otherwise. The step is taken in primal form: the gradient's Riesz
representative is g1 = u - K w2, so u <- u - tau*g1 is the relaxed Picard
map (1-tau) u + tau K w2, which is scale-invariant in the fields (stepping
in w directly would fight the |u|^p amplitude mismatch); this is dual
descent under the positive diagonal metric dw/du. Near a critical point the
iterate is polished by a damped Newton solve of the strong-form system,
which brings the PDE residual down to rounding level; the descent alone
would reach the same point linearly.

The regularized variant adds eps-weighted gradient penalties to the energy;
its projection augments the t^gamma / s^gamma coefficients with the penalty
integrals of the sign parts. Levels converge to the unregularized level as
eps decreases to zero.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field as _dcfield
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from henon_nodal.dual import (
    Coeffs,
    DualPair,
    ParamError,
    Exponents,
    Params,
    PrimalPair,
    coefficients,
    dual_from_primal,
    energy_I,
    energy_I_eps,
    exponents,
    grad_I,
    grad_I_eps,
    gradient_penalty,
    _gradient_penalty_grad,
    n0_margins,
    nehari_residuals,
    odd_power,
    primal_from_dual,
)
from henon_nodal.greenop import GreenSolver
from henon_nodal.grids import Grid, ScalarField, load_field

__all__ = [
    "SolveOptions",
    "ProjectionResult",
    "NodalSolution",
    "NotInN0Error",
    "ConvergenceError",
    "NodalCollapseError",
    "project_nehari",
    "project_nehari_eps",
    "project_ground",
    "minimize_nodal",
    "minimize_ground",
    "minimize_nodal_radial",
    "eps_sweep",
]

logger = logging.getLogger(__name__)

GAMMA_GUARD = 1.95  # projection exponent 1/(2-gamma) blows up as pq -> 1+


class NotInN0Error(ValueError):
    """The pair lies outside the coercivity set; the fiber map has no
    interior maximum there."""

    def __init__(self, m_plus: float, m_minus: float):
        self.margins = (m_plus, m_minus)
        super().__init__(
            f"pair outside the coercivity set: margins "
            f"({m_plus:.6g}, {m_minus:.6g}) must both be positive"
        )


class ConvergenceError(RuntimeError):
    """Iteration budget or step floor exhausted before the tolerance."""


class NodalCollapseError(RuntimeError):
    """A sign part lost almost all mass: the iterate degenerated towards a
    one-signed solution, violating the nodal constraint."""


@dataclass
class SolveOptions:
    """Descent controls. Defaults are plain constants that work across the
    parameter ranges exercised by the experiments."""

    step: float = 0.1
    max_iterations: int = 20_000
    grad_tol: float = 1e-8
    mass_floor: float = 1e-6
    seed: int | str | None = None
    newton_polish: bool = True
    step_floor: float = 1e-8
    step_cap: float = 1.0  # step 1 is the exact Picard map u <- K w2

    def __post_init__(self):
        if self.step <= 0 or self.grad_tol <= 0 or self.mass_floor <= 0:
            raise ValueError("step, grad_tol and mass_floor must be positive")


@dataclass
class ProjectionResult:
    t0: float
    s0: float
    projected: DualPair
    theta_value: float
    newton_iterations: int
    hessian_negdef: bool


@dataclass
class NodalSolution:
    primal: PrimalPair
    dual: DualPair
    level: float
    pde_residual: float
    nehari_residuals: tuple[float, float]
    iterations: int
    trace: list[tuple[float, float]]
    kind: str = "nodal"
    eps: float = 0.0
    grad_inf: float = 0.0
    sign_masses: dict[str, float] = _dcfield(default_factory=dict)

    @property
    def converged(self) -> bool:
        return True  # failed solves raise instead of returning


# --------------------------------------------------------------------------
# fiber-system solve (shared by the plain and regularized projections)
# --------------------------------------------------------------------------


def _theta_poly(coeffs: Coeffs, exps: Exponents, a_extra: tuple[float, float]):
    """Closure evaluating theta with the t^gamma / s^gamma coefficients
    augmented by the penalty integrals (zero for the plain functional)."""
    Ap = coeffs.A_plus + a_extra[0]
    Am = coeffs.A_minus + a_extra[1]
    Bp, Bm, C1, C2 = coeffs.B_plus, coeffs.B_minus, coeffs.C1, coeffs.C2
    lam, mu, gam = exps.lam, exps.mu, exps.gamma

    def eval_all(t: float, s: float):
        value = (
            Ap * t**gam + Am * s**gam - Bp * t**2 - Bm * s**2
            + C1 * t**lam * s**mu + C2 * t**mu * s**lam
        )
        dt = (
            gam * Ap * t ** (gam - 1) - 2 * Bp * t
            + lam * C1 * t ** (lam - 1) * s**mu + mu * C2 * t ** (mu - 1) * s**lam
        )
        ds = (
            gam * Am * s ** (gam - 1) - 2 * Bm * s
            + mu * C1 * t**lam * s ** (mu - 1) + lam * C2 * t**mu * s ** (lam - 1)
        )
        dtt = (
            gam * (gam - 1) * Ap * t ** (gam - 2) - 2 * Bp
            + lam * (lam - 1) * C1 * t ** (lam - 2) * s**mu
            + mu * (mu - 1) * C2 * t ** (mu - 2) * s**lam
        )
        dss = (
            gam * (gam - 1) * Am * s ** (gam - 2) - 2 * Bm
            + mu * (mu - 1) * C1 * t**lam * s ** (mu - 2)
            + lam * (lam - 1) * C2 * t**mu * s ** (lam - 2)
        )
        dts = (
            lam * mu * C1 * t ** (lam - 1) * s ** (mu - 1)
            + lam * mu * C2 * t ** (mu - 1) * s ** (lam - 1)
        )
        return value, np.array([dt, ds]), np.array([[dtt, dts], [dts, dss]])

    return eval_all


def _solve_fiber_system(
    coeffs: Coeffs,
    exps: Exponents,
    a_extra: tuple[float, float] = (0.0, 0.0),
    start: tuple[float, float] = (1.0, 1.0),
    tol_rel: float = 1e-12,
    max_newton: int = 60,
) -> tuple[float, float, int, bool]:
    """Unique positive critical point of the fiber map by damped Newton in
    log coordinates; coarse log-grid fallback on stagnation."""
    eval_all = _theta_poly(coeffs, exps, a_extra)
    scale = max(coeffs.scale, a_extra[0], a_extra[1])
    tol_hard = tol_rel * scale
    lam, mu, gam = exps.lam, exps.mu, exps.gamma
    Ap = coeffs.A_plus + a_extra[0]
    Am = coeffs.A_minus + a_extra[1]

    def log_state(x):
        t, s = math.exp(x[0]), math.exp(x[1])
        val, grad, hess = eval_all(t, s)
        G = np.array([t * grad[0], s * grad[1]])
        H = np.array(
            [
                [t * grad[0] + t * t * hess[0, 0], t * s * hess[0, 1]],
                [t * s * hess[1, 0], s * grad[1] + s * s * hess[1, 1]],
            ]
        )
        # magnitude of the individual gradient terms: cancellation limits
        # the achievable |G| to a few ulp of this sum
        cross1 = lam * coeffs.C1 * t**lam * s**mu + mu * coeffs.C2 * t**mu * s**lam
        cross2 = mu * coeffs.C1 * t**lam * s**mu + lam * coeffs.C2 * t**mu * s**lam
        gscale = max(
            gam * Ap * t**gam + 2 * coeffs.B_plus * t * t + cross1,
            gam * Am * s**gam + 2 * coeffs.B_minus * s * s + cross2,
        )
        return val, G, H, gscale

    def converged(G, gscale):
        return np.max(np.abs(G)) <= max(tol_hard, 1e-14 * gscale)

    def newton_from(x0):
        x = np.array(x0, dtype=float)
        val, G, H, gscale = log_state(x)
        for it in range(1, max_newton + 1):
            if converged(G, gscale):
                return x, it, True
            # ascent direction: Newton if the log-Hessian is negative
            # definite, otherwise plain gradient ascent
            negdef = H[0, 0] < 0 and H[0, 0] * H[1, 1] - H[0, 1] * H[1, 0] > 0
            if negdef:
                d = np.linalg.solve(H, -G)
            else:
                d = G / max(np.max(np.abs(G)), 1e-300)
            dn = np.max(np.abs(d))
            if negdef and dn <= 1e-14 * (1.0 + np.max(np.abs(x))):
                return x, it, True  # step at rounding level: fixed point
            if dn > 2.0:  # trust region in log coordinates
                d *= 2.0 / dn
            tau = 1.0
            for _ in range(40):
                x_new = x + tau * d
                if np.max(np.abs(x_new)) > 60:  # e^60 overflow guard
                    tau *= 0.5
                    continue
                val_new, G_new, H_new, gscale_new = log_state(x_new)
                if val_new >= val - 1e-13 * max(abs(val), gscale):
                    x, val, G, H, gscale = x_new, val_new, G_new, H_new, gscale_new
                    break
                tau *= 0.5
            else:
                return x, it, converged(G, gscale)
        return x, max_newton, converged(G, gscale)

    x, iters, ok = newton_from((math.log(start[0]), math.log(start[1])))
    if not ok:
        # coarse search over [1e-3, 1e3]^2 in log space, then Newton again
        grid = np.log(np.logspace(-3, 3, 121))
        best, best_x = -np.inf, None
        for xi in grid:
            for eta in grid:
                v = log_state((xi, eta))[0]
                if v > best:
                    best, best_x = v, (xi, eta)
        x, extra, ok = newton_from(best_x)
        iters += extra
        if not ok:
            raise ConvergenceError(
                "fiber-system Newton stalled; best grid point "
                f"(t, s) = ({math.exp(best_x[0]):.4g}, {math.exp(best_x[1]):.4g}) "
                f"with theta = {best:.6g}, coefficients {coeffs}"
            )
    t0, s0 = math.exp(x[0]), math.exp(x[1])
    _, _, hess = eval_all(t0, s0)
    negdef = hess[0, 0] < 0 and np.linalg.det(hess) > 0
    return t0, s0, iters, negdef


def _split_parts(w: DualPair):
    w1, w2 = w.w1.values, w.w2.values
    return (
        np.maximum(w1, 0.0),
        np.maximum(-w1, 0.0),
        np.maximum(w2, 0.0),
        np.maximum(-w2, 0.0),
    )


def _scale_signed(w: DualPair, t: float, s: float, exps: Exponents) -> DualPair:
    w1p, w1m, w2p, w2m = _split_parts(w)
    g = w.grid
    w1 = t**exps.lam * w1p - s**exps.lam * w1m
    w2 = t**exps.mu * w2p - s**exps.mu * w2m
    return DualPair(ScalarField(w1, g), ScalarField(w2, g))


def _require_four_sign_parts(w: DualPair) -> None:
    w1p, w1m, w2p, w2m = _split_parts(w)
    for name, part in (("w1+", w1p), ("w1-", w1m), ("w2+", w2p), ("w2-", w2m)):
        if not np.any(part):
            raise ValueError(f"sign part {name} is identically zero")


def _eps_penalty_extras(
    w: DualPair, params: Params, eps: float
) -> tuple[float, float]:
    """Penalty integrals of the sign parts that augment the t^gamma and
    s^gamma coefficients of the regularized fiber system."""
    if eps == 0:
        return 0.0, 0.0
    g = w.grid
    p, q = params.p, params.q
    rho1, rho2 = (p + 1) / p, (q + 1) / q
    w1p, w1m, w2p, w2m = _split_parts(w)
    plus = eps * (
        p / (p + 1) * gradient_penalty(w1p, g, rho1)
        + q / (q + 1) * gradient_penalty(w2p, g, rho2)
    )
    minus = eps * (
        p / (p + 1) * gradient_penalty(w1m, g, rho1)
        + q / (q + 1) * gradient_penalty(w2m, g, rho2)
    )
    return plus, minus


def project_nehari(
    w: DualPair,
    params: Params,
    green: GreenSolver,
    start: tuple[float, float] = (1.0, 1.0),
) -> ProjectionResult:
    """Scale the sign parts of w onto the nodal Nehari set."""
    return project_nehari_eps(w, params, 0.0, green, start=start)


def project_nehari_eps(
    w: DualPair,
    params: Params,
    eps: float,
    green: GreenSolver,
    start: tuple[float, float] = (1.0, 1.0),
) -> ProjectionResult:
    if eps < 0:
        raise ValueError("eps must be >= 0")
    exps = exponents(params)
    _require_four_sign_parts(w)
    coeffs = coefficients(w, params, green)
    m_plus, m_minus = n0_margins(coeffs, exps)
    if m_plus <= 0 or m_minus <= 0:
        raise NotInN0Error(m_plus, m_minus)
    a_extra = _eps_penalty_extras(w, params, eps)
    t0, s0, iters, negdef = _solve_fiber_system(coeffs, exps, a_extra, start=start)
    if not negdef:
        raise ConvergenceError(
            f"fiber Hessian not negative definite at ({t0:.6g}, {s0:.6g})"
        )
    projected = _scale_signed(w, t0, s0, exps)
    theta_value = _theta_poly(coeffs, exps, a_extra)(t0, s0)[0]
    return ProjectionResult(t0, s0, projected, theta_value, iters, negdef)


def _penalty_metric(vals: np.ndarray, grid: Grid, rho: float) -> sp.csr_matrix:
    """SPD curvature proxy of the gradient penalty at the current field.

    Quadratic form sum_cells W_c m_c^(rho-2) |grad_h delta|^2 with m the
    current gradient magnitude (floored where flat), assembled on the same
    forward-difference stencil as the penalty itself. Used to precondition
    the regularized descent: the penalty term is stiff (curvature ~
    eps * m^(rho-2) / h^2) and explicit steps would crawl.
    """
    from henon_nodal.dual import _forward_diffs

    d_r, d_t = _forward_diffs(vals, grid)
    mag = np.hypot(d_r, d_t)
    floor = max(1e-14, 1e-10 * float(mag.max())) if mag.max() > 0 else 1e-14
    kappa = np.maximum(mag, floor) ** (rho - 2.0)
    wgt2 = grid.weights.reshape(grid.shape)
    n_r, n_t = grid.shape
    n = grid.size
    rows, cols, data = [], [], []

    def add(a, b, c):
        rows.append(a)
        cols.append(b)
        data.append(c)

    # radial faces: cell (i,j) couples to (i+1,j); last ring couples to the
    # zero extension (diagonal only)
    c_r = (wgt2 * kappa / grid.dr**2).ravel()
    idx = np.arange(n).reshape(n_r, n_t)
    a = idx[:-1, :].ravel()
    b = idx[1:, :].ravel()
    cf = c_r.reshape(n_r, n_t)[:-1, :].ravel()
    add(a, a, cf)
    add(b, b, cf)
    add(a, b, -cf)
    add(b, a, -cf)
    last = idx[-1, :].ravel()
    add(last, last, c_r.reshape(n_r, n_t)[-1, :].ravel())
    if n_t > 1:
        c_t = (wgt2 * kappa / (grid.r[:, None] * grid.dtheta) ** 2).ravel()
        a = idx.ravel()
        b = np.roll(idx, -1, axis=1).ravel()
        add(a, a, c_t)
        add(b, b, c_t)
        add(a, b, -c_t)
        add(b, a, -c_t)
    return sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()


def _eps_step_directions(
    w: DualPair, g: DualPair, params: Params, eps: float
) -> tuple[np.ndarray, np.ndarray]:
    """Preconditioned descent directions for the regularized flow.

    Solves (W diag(du/dw) + eps L(w)) d = W g per component; at eps = 0
    this is the diagonal primal metric d = (dw/du) g used by the plain
    descent, so the two flows agree in the limit.
    """
    grid = w.grid
    W = grid.weights
    r = grid.r_flat
    p, q = params.p, params.q
    out = []
    for vals, gvals, expo, wexp, rho in (
        (w.w1.values, g.w1.values, p, params.alpha, (p + 1) / p),
        (w.w2.values, g.w2.values, q, params.beta, (q + 1) / q),
    ):
        floor = max(1e-300, 1e-12 * float(np.max(np.abs(vals))))
        uprime = (1.0 / expo) * r ** (-wexp / expo) * np.maximum(
            np.abs(vals), floor
        ) ** (1.0 / expo - 1.0)
        M = sp.diags(W * uprime) + eps * _penalty_metric(vals, grid, rho)
        out.append(spla.splu(M.tocsc()).solve(W * gvals))
    return out[0], out[1]


def _project_eps_exact(
    w: DualPair, params: Params, eps: float, green: GreenSolver
) -> tuple[DualPair, float]:
    """Maximize the exact discrete regularized fiber function.

    The unpenalized part is the coefficient polynomial (exact on the grid:
    sign parts have disjoint supports and K is linear). The penalty of the
    scaled pair does NOT split over sign parts on the grid (forward
    differences straddle the interface), so it is evaluated on the combined
    fields, with the (t, s)-gradient by the chain rule. Keeping the fiber
    stationarity exact preserves the envelope property the outer descent
    relies on; the split-coefficient system of the public projection is
    first-order equivalent but leaves an O(eps) fiber defect.
    """
    exps = exponents(params)
    coeffs = coefficients(w, params, green)
    m_plus, m_minus = n0_margins(coeffs, exps)
    if m_plus <= 0 or m_minus <= 0:
        raise NotInN0Error(m_plus, m_minus)
    poly = _theta_poly(coeffs, exps, (0.0, 0.0))
    grid = w.grid
    p, q = params.p, params.q
    rho1, rho2 = (p + 1) / p, (q + 1) / q
    w1p, w1m, w2p, w2m = _split_parts(w)
    lam, mu = exps.lam, exps.mu
    wgt = grid.weights

    def phi(x):
        t, s = math.exp(x[0]), math.exp(x[1])
        w1 = t**lam * w1p - s**lam * w1m
        w2 = t**mu * w2p - s**mu * w2m
        val0, grad0, _ = poly(t, s)
        pen1 = gradient_penalty(w1, grid, rho1)
        pen2 = gradient_penalty(w2, grid, rho2)
        val = val0 + eps * (p / (p + 1) * pen1 + q / (q + 1) * pen2)
        pg1 = _gradient_penalty_grad(w1, grid, rho1)
        pg2 = _gradient_penalty_grad(w2, grid, rho2)
        dpen_dt = eps * (
            p / (p + 1) * lam * t ** (lam - 1) * float(np.dot(wgt * pg1, w1p))
            + q / (q + 1) * mu * t ** (mu - 1) * float(np.dot(wgt * pg2, w2p))
        )
        dpen_ds = eps * (
            -p / (p + 1) * lam * s ** (lam - 1) * float(np.dot(wgt * pg1, w1m))
            - q / (q + 1) * mu * s ** (mu - 1) * float(np.dot(wgt * pg2, w2m))
        )
        G = np.array([t * (grad0[0] + dpen_dt), s * (grad0[1] + dpen_ds)])
        return val, G

    scale = coeffs.scale
    x = np.zeros(2)
    val, G = phi(x)
    h = 1e-6
    for _ in range(80):
        if np.max(np.abs(G)) <= 1e-10 * max(scale, abs(val)):
            break
        # Hessian of the log-coordinate fiber by central differences
        H = np.zeros((2, 2))
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            H[:, k] = (phi(x + e)[1] - phi(x - e)[1]) / (2 * h)
        H = 0.5 * (H + H.T)
        negdef = H[0, 0] < 0 and np.linalg.det(H) > 0
        if negdef:
            d = np.linalg.solve(H, -G)
        else:
            d = G / max(np.max(np.abs(G)), 1e-300)
        dn = np.max(np.abs(d))
        if negdef and dn <= 1e-14 * (1.0 + np.max(np.abs(x))):
            break
        if dn > 1.0:
            d *= 1.0 / dn
        tau = 1.0
        while tau > 1e-12:
            val_new, G_new = phi(x + tau * d)
            if val_new >= val - 1e-13 * max(abs(val), scale):
                x, val, G = x + tau * d, val_new, G_new
                break
            tau *= 0.5
        else:
            break
    t0, s0 = math.exp(x[0]), math.exp(x[1])
    return _scale_signed(w, t0, s0, exps), val


def project_ground(
    w: DualPair, params: Params, green: GreenSolver
) -> tuple[float, DualPair]:
    """Scalar Nehari projection for one-signed pairs: maximize A t^gamma -
    B t^2, giving t* = (gamma A / 2B)^(1/(2-gamma))."""
    w1, w2 = w.w1.values, w.w2.values
    if np.any(w1 < 0) and np.any(w1 > 0):
        raise ValueError("ground projection needs single-signed w1")
    if np.any(w2 < 0) and np.any(w2 > 0):
        raise ValueError("ground projection needs single-signed w2")
    if not np.any(w1) or not np.any(w2):
        raise ValueError("ground projection needs nontrivial components")
    exps = exponents(params)
    g = w.grid
    uv = primal_from_dual(w, params)
    p, q = params.p, params.q
    a = p / (p + 1) * float(
        np.dot(g.weights, g.r_flat**params.alpha * np.abs(uv.u.values) ** (p + 1))
    ) + q / (q + 1) * float(
        np.dot(g.weights, g.r_flat**params.beta * np.abs(uv.v.values) ** (q + 1))
    )
    b = float(np.dot(g.weights * w1, green.solve_array(w2)))
    if b <= 0:
        raise ValueError(f"nonpositive pairing B = {b:.6g} for one-signed pair")
    t_star = (exps.gamma * a / (2 * b)) ** (1.0 / (2.0 - exps.gamma))
    projected = DualPair(
        ScalarField(t_star**exps.lam * w1, g), ScalarField(t_star**exps.mu * w2, g)
    )
    return t_star, projected


# --------------------------------------------------------------------------
# seeds
# --------------------------------------------------------------------------


def _disk_mode_profile(grid: Grid) -> np.ndarray:
    """A smooth one-sign radial profile vanishing on Dirichlet boundaries."""
    dom = grid.domain
    r = grid.r_flat
    if dom.has_inner_boundary:
        return np.sin(
            math.pi * (r - dom.inner_radius) / (dom.outer_radius - dom.inner_radius)
        )
    rr = r / dom.outer_radius
    return rr * (1.0 - rr**2)


def _nodal_seed_candidates(params: Params, green: GreenSolver):
    """Deterministic seed list; later entries are fallbacks used when a
    seed lands outside the coercivity set."""
    from henon_nodal.greenop import eigenpair

    grid = green.grid
    if grid.n_theta == 1:
        _, phi2 = eigenpair(green, 2)
        yield DualPair(phi2.copy(), phi2.copy())
        _, phi3 = eigenpair(green, 3)
        mix = ScalarField(phi2.values + 0.25 * phi3.values, grid)
        yield DualPair(mix.copy(), mix.copy())
        yield DualPair(phi3.copy(), phi3.copy())
    else:
        profile = _disk_mode_profile(grid)
        mode = profile * np.cos(grid.theta_flat)
        u = ScalarField(mode, grid)
        yield dual_from_primal(PrimalPair(u, u.copy()), params)
        _, phi2 = eigenpair(green, 2)
        yield dual_from_primal(PrimalPair(phi2.copy(), phi2.copy()), params)


def _ground_seed(params: Params, green: GreenSolver) -> DualPair:
    from henon_nodal.greenop import eigenpair

    _, phi1 = eigenpair(green, 1)
    return dual_from_primal(PrimalPair(phi1.copy(), phi1.copy()), params)


def _seed_from_spec(params: Params, green: GreenSolver, seed, kind: str):
    """Resolve a seed spec: None (defaults), eigenmode index, or a
    directory containing w1.dat / w2.dat field dumps."""
    from henon_nodal.greenop import eigenpair

    grid = green.grid
    if seed is None:
        if kind == "ground":
            yield _ground_seed(params, green)
        else:
            yield from _nodal_seed_candidates(params, green)
    elif isinstance(seed, int):
        # direct dual pair: K phi = phi / lambda puts (phi, phi) inside the
        # coercivity set for every eigenfunction, in any dimension
        _, phi = eigenpair(green, seed)
        yield DualPair(phi.copy(), phi.copy())
        if kind != "ground":
            yield from _nodal_seed_candidates(params, green)
    else:
        base = Path(seed)
        w1 = load_field(base / "w1.dat")
        w2 = load_field(base / "w2.dat")
        if w1.grid != grid:
            raise ValueError(f"seed fields in {base} live on a different grid")
        yield DualPair(ScalarField(w1.values, grid), ScalarField(w2.values, grid))
        if kind != "ground":
            yield from _nodal_seed_candidates(params, green)


# --------------------------------------------------------------------------
# strong-form Newton polish
# --------------------------------------------------------------------------


def _pde_residual(uv: PrimalPair, params: Params, green: GreenSolver) -> float:
    """Relative strong-form residual of the system, max over both equations."""
    g = uv.grid
    r = g.r_flat
    f1 = r**params.alpha * odd_power(uv.u.values, params.p)
    f2 = r**params.beta * odd_power(uv.v.values, params.q)
    lap_u = green.lap.apply(uv.u.values)
    lap_v = green.lap.apply(uv.v.values)
    scale = max(np.max(np.abs(f1)), np.max(np.abs(f2)), 1e-300)
    return float(
        max(np.max(np.abs(lap_u - f2)), np.max(np.abs(lap_v - f1))) / scale
    )


def _newton_refine(
    uv: PrimalPair,
    params: Params,
    green: GreenSolver,
    max_iter: int = 30,
    tol: float = 1e-12,
    stall_tol: float = 1e-9,
) -> PrimalPair | None:
    """Damped Newton on the strong-form system; None when it fails.

    Quadratic convergence near a solution brings the residual to rounding
    level within a handful of steps; a line-search stall with the residual
    already below stall_tol counts as success (the rounding floor of the
    weighted residual sits above tol on fine grids). For exponents below
    one the linearized coefficient |u|^(p-1) blows up at the nodal lines;
    flooring |u| keeps the Jacobian finite without moving the solution.
    """
    g = uv.grid
    S = green.lap.S
    W = g.weights
    r = g.r_flat
    p, q, alpha, beta = params.p, params.q, params.alpha, params.beta
    u = uv.u.values.copy()
    v = uv.v.values.copy()

    def resid(u_, v_):
        F1 = S @ u_ - W * (r**beta * odd_power(v_, q))
        F2 = S @ v_ - W * (r**alpha * odd_power(u_, p))
        return F1, F2

    F1, F2 = resid(u, v)
    fnorm = max(np.max(np.abs(F1)), np.max(np.abs(F2)))
    scale = max(
        np.max(np.abs(W * r**beta * np.abs(v) ** q)),
        np.max(np.abs(W * r**alpha * np.abs(u) ** p)),
        1e-300,
    )
    stalled = False
    for _ in range(max_iter):
        if fnorm <= tol * scale or stalled:
            break
        floor_v = 1e-10 * float(np.max(np.abs(v)))
        floor_u = 1e-10 * float(np.max(np.abs(u)))
        D2 = sp.diags(W * q * r**beta * np.maximum(np.abs(v), floor_v) ** (q - 1))
        D1 = sp.diags(W * p * r**alpha * np.maximum(np.abs(u), floor_u) ** (p - 1))
        J = sp.bmat([[S, -D2], [-D1, S]], format="csc")
        try:
            delta = spla.splu(J).solve(-np.concatenate([F1, F2]))
        except RuntimeError:
            return None
        du, dv = delta[: g.size], delta[g.size :]
        tau = 1.0
        for _ in range(25):
            u_new, v_new = u + tau * du, v + tau * dv
            F1n, F2n = resid(u_new, v_new)
            fn = max(np.max(np.abs(F1n)), np.max(np.abs(F2n)))
            if fn < fnorm * (1 - 0.25 * tau):
                u, v, F1, F2, fnorm = u_new, v_new, F1n, F2n, fn
                break
            tau *= 0.5
        else:
            stalled = True  # rounding floor; accept if small enough
    if fnorm <= max(tol, stall_tol if stalled else tol) * scale:
        return PrimalPair(ScalarField(u, g), ScalarField(v, g))
    return None


# --------------------------------------------------------------------------
# descent loops
# --------------------------------------------------------------------------


def _sign_masses(w: DualPair, params: Params) -> dict[str, float]:
    """Dual-norm masses of the four sign parts (evaluated in primal form)."""
    g = w.grid
    uv = primal_from_dual(w, params)
    r = g.r_flat
    out = {}
    for name, vals, power, wexp in (
        ("u+", np.maximum(uv.u.values, 0.0), params.p + 1, params.alpha),
        ("u-", np.maximum(-uv.u.values, 0.0), params.p + 1, params.alpha),
        ("v+", np.maximum(uv.v.values, 0.0), params.q + 1, params.beta),
        ("v-", np.maximum(-uv.v.values, 0.0), params.q + 1, params.beta),
    ):
        out[name] = float(np.dot(g.weights, r**wexp * vals**power))
    return out


def _check_mass_floor(w: DualPair, params: Params, floor: float) -> None:
    m = _sign_masses(w, params)
    for pair in (("u+", "u-"), ("v+", "v-")):
        total = m[pair[0]] + m[pair[1]]
        least = min(m[pair[0]], m[pair[1]])
        if total <= 0 or least < floor * total:
            raise NodalCollapseError(
                f"sign part {pair[0] if m[pair[0]] < m[pair[1]] else pair[1]} "
                f"mass {least:.3e} fell below floor {floor:.1e} x {total:.3e}; "
                "the iterate degenerated to a one-signed solution"
            )


def _orient(uv: PrimalPair, w: DualPair):
    """Fix the sign ambiguity: u positive at its node of maximal |u|."""
    k = int(np.argmax(np.abs(uv.u.values)))
    if uv.u.values[k] < 0:
        return (
            PrimalPair(-uv.u, -uv.v),
            DualPair(-w.w1, -w.w2),
        )
    return uv, w


def _descend(
    params: Params,
    grid: Grid,
    opts: SolveOptions,
    green: GreenSolver,
    kind: str,
    eps: float = 0.0,
    initial: DualPair | None = None,
) -> NodalSolution:
    exps = exponents(params, dim=grid.domain.dim)
    if exps.gamma > GAMMA_GUARD:
        raise ParamError(
            f"gamma = {exps.gamma:.4f} > {GAMMA_GUARD}: the projection exponent "
            "1/(2-gamma) is too large for reliable scaling (p*q too close to 1)"
        )
    ground = kind == "ground"

    def project(pair: DualPair) -> tuple[DualPair, float]:
        if ground:
            _, proj = project_ground(pair, params, green)
            return proj, energy_I(proj, params, green)
        if eps == 0:
            res = project_nehari(pair, params, green)
            # the coefficient polynomial evaluates I on the fiber exactly
            return res.projected, res.theta_value
        return _project_eps_exact(pair, params, eps, green)

    # seed: first candidate that projects successfully
    w = None
    level = math.inf
    seed_errors = []
    candidates = _seed_from_spec(params, green, opts.seed, kind)
    if initial is not None:
        import itertools

        candidates = itertools.chain([initial], candidates)
    for cand in candidates:
        if ground:
            sign = 1.0 if float(np.dot(grid.weights, cand.w1.values)) >= 0 else -1.0
            cand = DualPair(
                ScalarField(np.maximum(sign * cand.w1.values, 0.0), grid),
                ScalarField(np.maximum(sign * cand.w2.values, 0.0), grid),
            )
        try:
            w, level = project(cand)
            break
        except (NotInN0Error, ValueError, ConvergenceError) as exc:
            seed_errors.append(str(exc))
            logger.warning("seed rejected (%s); trying fallback", exc)
    if w is None:
        raise ConvergenceError("no admissible seed: " + "; ".join(seed_errors))

    grad_fn = (
        (lambda pair: grad_I(pair, params, green))
        if eps == 0
        else (lambda pair: grad_I_eps(pair, params, eps, green))
    )

    step = opts.step
    trace: list[tuple[float, float]] = []
    polish_threshold = 1e-2
    polished = False
    stall_retried = False
    tiny_progress = 0
    it = 0
    while it < opts.max_iterations:
        it += 1
        g = grad_fn(w)
        uv_cur = primal_from_dual(w, params)
        grad_inf = max(g.w1.norm_inf(), g.w2.norm_inf())
        field_scale = max(uv_cur.u.norm_inf(), uv_cur.v.norm_inf(), 1.0)
        trace.append((level, grad_inf))
        if grad_inf <= opts.grad_tol:
            break

        if (
            opts.newton_polish
            and eps == 0.0
            and min(params.p, params.q) >= 1
            and grad_inf <= polish_threshold * field_scale
        ):
            refined = _newton_refine(primal_from_dual(w, params), params, green)
            if refined is not None:
                w_ref = dual_from_primal(refined, params)
                ok = True
                if not ground:
                    try:
                        _check_mass_floor(w_ref, params, opts.mass_floor)
                    except NodalCollapseError:
                        ok = False
                if ok:
                    w = w_ref
                    level = energy_I(w, params, green)
                    g = grad_fn(w)
                    grad_inf = max(g.w1.norm_inf(), g.w2.norm_inf())
                    trace.append((level, grad_inf))
                    polished = True
                    if grad_inf <= opts.grad_tol:
                        break
            if not polished:
                polish_threshold *= 0.1  # retry later, closer to the solution

        accepted = False
        if eps > 0:
            d1, d2 = _eps_step_directions(w, g, params, eps)
        r_flat = grid.r_flat
        while step >= opts.step_floor:
            if eps > 0:
                trial = DualPair(
                    ScalarField(w.w1.values - step * d1, grid),
                    ScalarField(w.w2.values - step * d2, grid),
                )
            else:
                # per component: step in primal form when the exponent is
                # >= 1 (the metric dw/du is bounded and the step is the
                # relaxed Picard map); for exponents < 1 that metric blows
                # up at nodal lines, while the raw dual step is well scaled
                if params.p >= 1:
                    u_trial = uv_cur.u.values - step * g.w1.values
                    if ground:
                        u_trial = np.maximum(u_trial, 0.0)
                    w1_trial = r_flat**params.alpha * odd_power(u_trial, params.p)
                else:
                    w1_trial = w.w1.values - step * g.w1.values
                    if ground:
                        w1_trial = np.maximum(w1_trial, 0.0)
                if params.q >= 1:
                    v_trial = uv_cur.v.values - step * g.w2.values
                    if ground:
                        v_trial = np.maximum(v_trial, 0.0)
                    w2_trial = r_flat**params.beta * odd_power(v_trial, params.q)
                else:
                    w2_trial = w.w2.values - step * g.w2.values
                    if ground:
                        w2_trial = np.maximum(w2_trial, 0.0)
                trial = DualPair(
                    ScalarField(w1_trial, grid), ScalarField(w2_trial, grid)
                )
            try:
                proj, new_level = project(trial)
            except (NotInN0Error, ValueError, ConvergenceError):
                step *= 0.5
                continue
            if new_level <= level:
                improvement = level - new_level
                w, level = proj, new_level
                step = min(step * 2.0, opts.step_cap)
                accepted = True
                break
            step *= 0.5
        if accepted:
            stall_retried = False
            if improvement <= 1e-10 * max(abs(level), 1.0):
                tiny_progress += 1
            else:
                tiny_progress = 0
            if eps > 0 and tiny_progress >= 10 and grad_inf <= 1e-3 * field_scale:
                # the regularized flow creeps along nearly energy-neutral
                # directions (the rotational orbit on the disk); the level
                # is already quadratically accurate in this gradient
                break
        else:
            if not stall_retried and step < opts.step:
                stall_retried = True
                step = opts.step  # retry once from the nominal step
                continue
            if grad_inf <= 100 * opts.grad_tol and polished:
                break  # rounding-limited after polish
            if eps > 0 and grad_inf <= 1e-3 * field_scale:
                # level error scales with the squared gradient; the energy
                # comparison is rounding-limited long before that matters
                break
            raise ConvergenceError(
                f"step floor {opts.step_floor} reached at iteration {it} "
                f"with gradient {grad_inf:.3e} (tol {opts.grad_tol:.1e})"
            )
        if not ground:
            _check_mass_floor(w, params, opts.mass_floor)
    else:
        raise ConvergenceError(
            f"no convergence in {opts.max_iterations} iterations "
            f"(last gradient {trace[-1][1]:.3e}, tol {opts.grad_tol:.1e})"
        )

    uv = primal_from_dual(w, params)
    uv, w = _orient(uv, w)
    if ground:
        if np.any(uv.u.values <= 0) or np.any(uv.v.values <= 0):
            raise ConvergenceError("ground state is not strictly positive")
    else:
        _check_mass_floor(w, params, opts.mass_floor)
    g = grad_fn(w)
    grad_inf = max(g.w1.norm_inf(), g.w2.norm_inf())
    res = nehari_residuals(w, params, green) if not ground else (0.0, 0.0)
    level = (
        energy_I(w, params, green)
        if eps == 0
        else energy_I_eps(w, params, eps, green)
    )
    if not level > 0:
        raise ConvergenceError(f"nonpositive level {level:.6g} at convergence")
    return NodalSolution(
        primal=uv,
        dual=w,
        level=level,
        pde_residual=_pde_residual(uv, params, green) if eps == 0 else float("nan"),
        nehari_residuals=res,
        iterations=it,
        trace=trace,
        kind=kind,
        eps=eps,
        grad_inf=grad_inf,
        sign_masses=_sign_masses(w, params),
    )


def minimize_nodal(
    params: Params,
    grid: Grid,
    opts: SolveOptions | None = None,
    green: GreenSolver | None = None,
) -> NodalSolution:
    """Least-energy sign-changing solution on the given grid."""
    opts = opts or SolveOptions()
    green = green or GreenSolver.from_grid(grid)
    return _descend(params, grid, opts, green, kind="nodal")


def minimize_ground(
    params: Params,
    grid: Grid,
    opts: SolveOptions | None = None,
    green: GreenSolver | None = None,
) -> NodalSolution:
    """Least-energy solution among one-signed pairs (positive components)."""
    opts = opts or SolveOptions()
    green = green or GreenSolver.from_grid(grid)
    return _descend(params, grid, opts, green, kind="ground")


def minimize_nodal_radial(
    params: Params,
    radial_grid: Grid,
    opts: SolveOptions | None = None,
    green: GreenSolver | None = None,
) -> NodalSolution:
    """Least-energy nodal solution within the radial (axisymmetric) class."""
    if radial_grid.n_theta != 1:
        raise ValueError(
            "radial solve needs a radial grid (build_radial_grid / interval)"
        )
    opts = opts or SolveOptions()
    green = green or GreenSolver.from_grid(radial_grid)
    sol = _descend(params, radial_grid, opts, green, kind="nodal")
    sol.kind = "nodal-radial"
    return sol


def eps_sweep(
    params: Params,
    grid: Grid,
    eps_list: list[float],
    opts: SolveOptions | None = None,
    green: GreenSolver | None = None,
) -> list[dict]:
    """Levels of the regularized problem along a decreasing eps list.

    Rows carry (eps, level, gap to the eps = 0 level, converged flag); a
    failing eps is reported in its row and the sweep continues. eps = 0
    entries reuse the plain code path exactly. Regularized rows run at a
    gradient tolerance of at most 1e-6: levels are quadratically accurate
    in the gradient norm, and no strong-form polish exists for eps > 0.
    """
    from dataclasses import replace

    if any(e < 0 for e in eps_list):
        raise ValueError("eps values must be >= 0")
    if list(eps_list) != sorted(eps_list, reverse=True):
        raise ValueError("eps_list must be decreasing")
    opts = opts or SolveOptions()
    green = green or GreenSolver.from_grid(grid)
    base = minimize_nodal(params, grid, opts, green)
    eps_opts = replace(opts, grad_tol=max(opts.grad_tol, 1e-6))
    rows = []
    warm = base.dual  # decreasing eps: continue from the previous minimizer
    for eps in eps_list:
        if eps == 0:
            rows.append(
                {"eps": 0.0, "level": base.level, "gap": 0.0, "converged": True}
            )
            continue
        try:
            sol = _descend(
                params, grid, eps_opts, green, kind="nodal", eps=eps, initial=warm
            )
            warm = sol.dual
            rows.append(
                {
                    "eps": eps,
                    "level": sol.level,
                    "gap": sol.level - base.level,
                    "converged": True,
                }
            )
        except (ConvergenceError, NodalCollapseError, NotInN0Error) as exc:
            logger.warning("eps = %g solve failed: %s", eps, exc)
            rows.append(
                {
                    "eps": eps,
                    "level": float("nan"),
                    "gap": float("nan"),
                    "converged": False,
                }
            )
    return rows
