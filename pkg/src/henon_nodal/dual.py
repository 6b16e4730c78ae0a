"""Dual variational objects for the Henon-Lane-Emden system.

The system is recast in the nonlinearity densities

    w1 = |x|^α |u|^(p-1) u,      w2 = |x|^β |v|^(q-1) v,

for which critical points of

    I(w) = p/(p+1) ∫ |w1|^((p+1)/p) |x|^(-α/p)
         + q/(q+1) ∫ |w2|^((q+1)/q) |x|^(-β/q)
         - 1/2 ∫ (w1 K w2 + w2 K w1)

are exactly the strong solutions of the original system. The weighted dual
integrals are always evaluated through the primal identity
∫ |w1|^((p+1)/p) |x|^(-α/p) = ∫ |u|^(p+1) |x|^α, which avoids large negative
powers of |x| near the origin.

Sign-changing candidates are organized by the two-parameter fiber map

    theta(t, s) = I(t^λ w1⁺ - s^λ w1⁻,  t^μ w2⁺ - s^μ w2⁻)
                = A⁺ t^γ + A⁻ s^γ - B⁺ t² - B⁻ s² + C1 t^λ s^μ + C2 t^μ s^λ,

whose unique positive critical point (on the open set where the quadratic
part dominates, tested by ``in_N0``) defines the Nehari projection. The
scaling exponents satisfy λ + μ = 2 and γ = λ(p+1)/p = μ(q+1)/q ∈ (1, 2)
exactly when pq > 1.

All functions are pure; the Green operator enters through an explicit
``GreenSolver`` argument.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from henon_nodal.greenop import GreenSolver
from henon_nodal.grids import Grid, ScalarField

__all__ = [
    "Params",
    "Exponents",
    "DualPair",
    "PrimalPair",
    "Coeffs",
    "ParamError",
    "exponents",
    "dual_from_primal",
    "primal_from_dual",
    "energy_E",
    "energy_I",
    "energy_I_eps",
    "grad_I",
    "grad_I_eps",
    "coefficients",
    "theta_eval",
    "in_N0",
    "n0_margins",
    "nehari_residuals",
    "gradient_penalty",
    "odd_power",
]


class ParamError(ValueError):
    """Exponent/weight parameters outside the admissible range."""


@dataclass(frozen=True)
class Params:
    """Nonlinearity exponents p, q and Henon weight exponents alpha, beta."""

    p: float
    q: float
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if self.p <= 0 or self.q <= 0:
            raise ParamError(f"need p, q > 0, got p={self.p}, q={self.q}")
        if self.alpha < 0 or self.beta < 0:
            raise ParamError(
                f"need alpha, beta >= 0, got alpha={self.alpha}, beta={self.beta}"
            )

    def check_hypothesis(self, dim: int | None = None) -> None:
        """Superlinearity pq > 1 and, given the dimension, subcriticality."""
        if self.p * self.q <= 1.0:
            raise ParamError(
                f"superlinearity fails: p*q = {self.p * self.q:.6g} <= 1 "
                "(need p*q > 1)"
            )
        if dim is not None and dim >= 3:
            lhs = 1.0 / (self.p + 1) + 1.0 / (self.q + 1)
            rhs = (dim - 2) / dim
            if lhs <= rhs:
                raise ParamError(
                    f"subcriticality fails: 1/(p+1) + 1/(q+1) = {lhs:.6g} "
                    f"<= (N-2)/N = {rhs:.6g}"
                )


@dataclass(frozen=True)
class Exponents:
    """Fiber scaling exponents with lam + mu = 2 and gamma in (1, 2)."""

    lam: float
    mu: float
    gamma: float


def exponents(params: Params, dim: int | None = None) -> Exponents:
    params.check_hypothesis(dim)
    p, q = params.p, params.q
    den = p + q + 2 * p * q
    lam = 2 * p * (q + 1) / den
    mu = 2 * q * (p + 1) / den
    gamma = 2 * (p + 1) * (q + 1) / den
    assert abs(lam + mu - 2.0) <= 1e-14
    assert abs(gamma - lam * (p + 1) / p) <= 1e-12
    assert abs(gamma - mu * (q + 1) / q) <= 1e-12
    assert 1.0 < gamma < 2.0
    return Exponents(lam, mu, gamma)


@dataclass
class DualPair:
    """A point (w1, w2) of the dual space."""

    w1: ScalarField
    w2: ScalarField

    def __post_init__(self):
        if self.w1.grid != self.w2.grid:
            raise ValueError("dual pair components must share a grid")

    @property
    def grid(self) -> Grid:
        return self.w1.grid

    def copy(self) -> "DualPair":
        return DualPair(self.w1.copy(), self.w2.copy())


@dataclass
class PrimalPair:
    """A candidate solution pair (u, v)."""

    u: ScalarField
    v: ScalarField

    def __post_init__(self):
        if self.u.grid != self.v.grid:
            raise ValueError("primal pair components must share a grid")

    @property
    def grid(self) -> Grid:
        return self.u.grid


@dataclass(frozen=True)
class Coeffs:
    """Fiber map coefficients; all six are positive when every sign part
    of (w1, w2) is nontrivial."""

    A_plus: float
    A_minus: float
    B_plus: float
    B_minus: float
    C1: float
    C2: float

    @property
    def scale(self) -> float:
        return max(
            abs(self.A_plus), abs(self.A_minus), abs(self.B_plus),
            abs(self.B_minus), abs(self.C1), abs(self.C2), 1e-300,
        )


def odd_power(values: np.ndarray, exponent: float) -> np.ndarray:
    """The odd monotone map t -> |t|^(exponent-1) t."""
    return np.sign(values) * np.abs(values) ** exponent


def dual_from_primal(uv: PrimalPair, params: Params) -> DualPair:
    g = uv.grid
    r = g.r_flat
    w1 = r**params.alpha * odd_power(uv.u.values, params.p)
    w2 = r**params.beta * odd_power(uv.v.values, params.q)
    return DualPair(ScalarField(w1, g), ScalarField(w2, g))


def primal_from_dual(w: DualPair, params: Params) -> PrimalPair:
    g = w.grid
    r = g.r_flat
    u = r ** (-params.alpha / params.p) * odd_power(w.w1.values, 1.0 / params.p)
    v = r ** (-params.beta / params.q) * odd_power(w.w2.values, 1.0 / params.q)
    return PrimalPair(ScalarField(u, g), ScalarField(v, g))


def _weighted_power_integral(grid: Grid, vals: np.ndarray, power: float,
                             weight_exp: float) -> float:
    return float(np.dot(grid.weights, grid.r_flat**weight_exp * np.abs(vals) ** power))


def energy_E(uv: PrimalPair, params: Params, green: GreenSolver) -> float:
    """E(u,v) = ∫∇u·∇v - ∫|x|^α|u|^(p+1)/(p+1) - ∫|x|^β|v|^(q+1)/(q+1).

    The gradient pairing is evaluated as ∫ u (-Δ_h v) so that E, I and K
    are mutually consistent on the grid.
    """
    g = uv.grid
    cross = float(np.dot(uv.u.values, green.lap.S @ uv.v.values))
    a = _weighted_power_integral(g, uv.u.values, params.p + 1, params.alpha)
    b = _weighted_power_integral(g, uv.v.values, params.q + 1, params.beta)
    return cross - a / (params.p + 1) - b / (params.q + 1)


def energy_I(w: DualPair, params: Params, green: GreenSolver) -> float:
    g = w.grid
    uv = primal_from_dual(w, params)
    a = _weighted_power_integral(g, uv.u.values, params.p + 1, params.alpha)
    b = _weighted_power_integral(g, uv.v.values, params.q + 1, params.beta)
    kw2 = green.solve_array(w.w2.values)
    kw1 = green.solve_array(w.w1.values)
    t_term = float(np.dot(g.weights, w.w1.values * kw2 + w.w2.values * kw1))
    p, q = params.p, params.q
    return p / (p + 1) * a + q / (q + 1) * b - 0.5 * t_term


def grad_I(w: DualPair, params: Params, green: GreenSolver) -> DualPair:
    """Riesz representative (g1, g2) of I' in the quadrature inner product:
    g1 = u - K w2 and g2 = v - K w1; both vanish exactly at solutions."""
    uv = primal_from_dual(w, params)
    g1 = uv.u.values - green.solve_array(w.w2.values)
    g2 = uv.v.values - green.solve_array(w.w1.values)
    return DualPair(ScalarField(g1, w.grid), ScalarField(g2, w.grid))


def coefficients(w: DualPair, params: Params, green: GreenSolver) -> Coeffs:
    g = w.grid
    wgt = g.weights
    w1 = w.w1.values
    w2 = w.w2.values
    w1p, w1m = np.maximum(w1, 0.0), np.maximum(-w1, 0.0)
    w2p, w2m = np.maximum(w2, 0.0), np.maximum(-w2, 0.0)

    uv = primal_from_dual(w, params)
    up, um = np.maximum(uv.u.values, 0.0), np.maximum(-uv.u.values, 0.0)
    vp, vm = np.maximum(uv.v.values, 0.0), np.maximum(-uv.v.values, 0.0)
    p, q = params.p, params.q
    a_p = _weighted_power_integral(g, up, p + 1, params.alpha)
    a_m = _weighted_power_integral(g, um, p + 1, params.alpha)
    b_p = _weighted_power_integral(g, vp, q + 1, params.beta)
    b_m = _weighted_power_integral(g, vm, q + 1, params.beta)
    A_plus = p / (p + 1) * a_p + q / (q + 1) * b_p
    A_minus = p / (p + 1) * a_m + q / (q + 1) * b_m

    kw2p = green.solve_array(w2p)
    kw2m = green.solve_array(w2m)
    B_plus = float(np.dot(wgt * w1p, kw2p))
    B_minus = float(np.dot(wgt * w1m, kw2m))
    C1 = float(np.dot(wgt * w1p, kw2m))
    C2 = float(np.dot(wgt * w1m, kw2p))
    return Coeffs(A_plus, A_minus, B_plus, B_minus, C1, C2)


def theta_eval(
    coeffs: Coeffs, exps: Exponents, t: float, s: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """Fiber map value with its analytic gradient and Hessian at (t, s) > 0."""
    if t <= 0 or s <= 0:
        raise ValueError(f"fiber derivatives need t, s > 0, got ({t}, {s})")
    Ap, Am = coeffs.A_plus, coeffs.A_minus
    Bp, Bm = coeffs.B_plus, coeffs.B_minus
    C1, C2 = coeffs.C1, coeffs.C2
    lam, mu, gam = exps.lam, exps.mu, exps.gamma

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
    grad = np.array([dt, ds])
    hess = np.array([[dtt, dts], [dts, dss]])
    return value, grad, hess


def n0_margins(coeffs: Coeffs, exps: Exponents) -> tuple[float, float]:
    """Distances to the coercivity boundary: 2B⁺ - (λC1 + μC2) and
    2B⁻ - (μC1 + λC2); membership needs both strictly positive."""
    m_plus = 2 * coeffs.B_plus - (exps.lam * coeffs.C1 + exps.mu * coeffs.C2)
    m_minus = 2 * coeffs.B_minus - (exps.mu * coeffs.C1 + exps.lam * coeffs.C2)
    return m_plus, m_minus


def in_N0(w: DualPair, params: Params, green: GreenSolver) -> bool:
    exps = exponents(params)
    m_plus, m_minus = n0_margins(coefficients(w, params, green), exps)
    return m_plus > 0 and m_minus > 0


def nehari_residuals(
    w: DualPair, params: Params, green: GreenSolver
) -> tuple[float, float]:
    """Stationarity defects of the fiber map at (1, 1); both vanish exactly
    on the nodal Nehari set (given nontrivial sign parts)."""
    exps = exponents(params)
    g = grad_I(w, params, green)
    wgt = w.grid.weights
    w1p = np.maximum(w.w1.values, 0.0)
    w1m = np.maximum(-w.w1.values, 0.0)
    w2p = np.maximum(w.w2.values, 0.0)
    w2m = np.maximum(-w.w2.values, 0.0)
    r_plus = exps.lam * float(np.dot(wgt * g.w1.values, w1p)) + exps.mu * float(
        np.dot(wgt * g.w2.values, w2p)
    )
    r_minus = exps.lam * float(np.dot(wgt * g.w1.values, -w1m)) + exps.mu * float(
        np.dot(wgt * g.w2.values, -w2m)
    )
    return r_plus, r_minus


# ---------------------------------------------------------------------------
# gradient-penalty regularization
#
# The regularized functional adds eps * p/(p+1) ∫ |∇w1|^((p+1)/p) and the
# analogous w2 term. The discrete gradient uses forward differences with
# zero extension past the outer (and inner Dirichlet) boundary; the theta
# direction is periodic. First-order accuracy of this term is acceptable:
# only its vanishing limit eps -> 0 matters.
# ---------------------------------------------------------------------------


def _forward_diffs(vals: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    f = vals.reshape(grid.shape)
    d_r = (np.vstack([f[1:, :], np.zeros((1, grid.n_theta))]) - f) / grid.dr
    if grid.n_theta > 1:
        d_t = (np.roll(f, -1, axis=1) - f) / (grid.r[:, None] * grid.dtheta)
    else:
        d_t = np.zeros_like(f)
    return d_r, d_t


def gradient_penalty(vals: np.ndarray, grid: Grid, rho: float) -> float:
    """∫ |∇_h f|^rho with forward differences and zero boundary extension."""
    d_r, d_t = _forward_diffs(vals, grid)
    mag = np.hypot(d_r, d_t)
    return float(np.dot(grid.weights, (mag**rho).ravel()))


def _gradient_penalty_grad(vals: np.ndarray, grid: Grid, rho: float) -> np.ndarray:
    """Quadrature-Riesz gradient of gradient_penalty (same pairing as grad_I)."""
    d_r, d_t = _forward_diffs(vals, grid)
    mag = np.hypot(d_r, d_t)
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(mag > 0, rho * mag ** (rho - 2.0), 0.0)
    wgt = grid.weights.reshape(grid.shape)
    F_r = wgt * factor * d_r / grid.dr
    out = np.zeros(grid.shape)
    out += np.vstack([np.zeros((1, grid.n_theta)), F_r[:-1, :]]) - F_r
    if grid.n_theta > 1:
        F_t = wgt * factor * d_t / (grid.r[:, None] * grid.dtheta)
        out += np.roll(F_t, 1, axis=1) - F_t
    return out.ravel() / grid.weights


def energy_I_eps(
    w: DualPair, params: Params, eps: float, green: GreenSolver
) -> float:
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    base = energy_I(w, params, green)
    if eps == 0:
        return base
    p, q = params.p, params.q
    pen1 = gradient_penalty(w.w1.values, w.grid, (p + 1) / p)
    pen2 = gradient_penalty(w.w2.values, w.grid, (q + 1) / q)
    return base + eps * (p / (p + 1) * pen1 + q / (q + 1) * pen2)


def grad_I_eps(
    w: DualPair, params: Params, eps: float, green: GreenSolver
) -> DualPair:
    base = grad_I(w, params, green)
    if eps == 0:
        return base
    p, q = params.p, params.q
    g1 = base.w1.values + eps * p / (p + 1) * _gradient_penalty_grad(
        w.w1.values, w.grid, (p + 1) / p
    )
    g2 = base.w2.values + eps * q / (q + 1) * _gradient_penalty_grad(
        w.w2.values, w.grid, (q + 1) / q
    )
    return DualPair(ScalarField(g1, w.grid), ScalarField(g2, w.grid))
