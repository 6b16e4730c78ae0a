"""Dual framework: exponents, conversions, energies, fiber map, residuals."""

import math

import numpy as np
import pytest

from henon_nodal.dual import (
    Coeffs,
    DualPair,
    Exponents,
    ParamError,
    Params,
    PrimalPair,
    coefficients,
    dual_from_primal,
    energy_E,
    energy_I,
    energy_I_eps,
    exponents,
    grad_I,
    grad_I_eps,
    gradient_penalty,
    in_N0,
    n0_margins,
    nehari_residuals,
    odd_power,
    primal_from_dual,
    theta_eval,
)
from henon_nodal.greenop import GreenSolver, eigenpair
from henon_nodal.grids import Domain, ScalarField, build_grid, integrate


@pytest.fixture(scope="module")
def interval_green():
    return GreenSolver.from_grid(build_grid(Domain.interval(1.0), 128))


@pytest.fixture(scope="module")
def disk_green():
    return GreenSolver.from_grid(build_grid(Domain.disk(1.0), 16, 24))


def _smooth_pair(green, seed=0, clearance=0.0):
    """Sign-changing dual pair; clearance > 0 keeps |w| away from zero
    (the dual integrand has unbounded higher derivatives at w = 0, which
    would pollute finite-difference oracles)."""
    rng = np.random.default_rng(seed)
    g = green.grid
    x = g.r_flat
    if g.domain.dim == 1:
        base1 = np.sin(2 * math.pi * x) + 0.3 * np.sin(3 * math.pi * x)
        base2 = np.sin(2 * math.pi * x) - 0.2 * np.sin(math.pi * x)
    else:
        t = g.theta_flat
        base1 = np.cos(t) * np.sin(math.pi * x) + 0.2 * np.sin(2 * math.pi * x)
        base2 = np.cos(t) * np.sin(math.pi * x) - 0.1 * np.cos(2 * t) * x
    w1 = base1 + 0.05 * rng.standard_normal(g.size)
    w2 = base2 + 0.05 * rng.standard_normal(g.size)
    if clearance:
        w1 += clearance * np.sign(w1)
        w2 += clearance * np.sign(w2)
    return DualPair(ScalarField(w1, g), ScalarField(w2, g))


# ---------------------------------------------------------------------- #
# exponents                                                              #
# ---------------------------------------------------------------------- #


def test_exponents_symmetric_case():
    e = exponents(Params(3.0, 3.0))
    assert e.lam == pytest.approx(1.0, abs=1e-15)
    assert e.mu == pytest.approx(1.0, abs=1e-15)
    assert e.gamma == pytest.approx(4.0 / 3.0, rel=1e-15)


def test_exponents_p2_q3():
    e = exponents(Params(2.0, 3.0))
    assert e.lam == pytest.approx(16.0 / 17.0, rel=1e-15)
    assert e.mu == pytest.approx(18.0 / 17.0, rel=1e-15)
    assert e.gamma == pytest.approx(24.0 / 17.0, rel=1e-15)


def test_exponents_near_superlinearity_boundary():
    # gamma -> 2 as pq -> 1+
    e = exponents(Params(1.1, 1.0))
    assert e.gamma == pytest.approx(2 * 2.1 * 2.0 / (1.1 + 1.0 + 2.2), rel=1e-13)
    assert e.gamma == pytest.approx(1.9535, abs=1e-4)


def test_exponents_reject_sublinear():
    with pytest.raises(ParamError, match="p\\*q"):
        exponents(Params(0.5, 1.5))
    with pytest.raises(ParamError, match="p\\*q"):
        exponents(Params(1.0, 1.0))


def test_exponents_grid_sweep():
    vals = np.linspace(1.2, 6.0, 20)
    for p in vals:
        for q in vals:
            e = exponents(Params(p, q))
            assert abs(e.lam + e.mu - 2.0) <= 1e-15 * 2
            assert 1.0 < e.gamma < 2.0


def test_subcriticality_check_dim3():
    # p = q = 5 violates 1/(p+1)+1/(q+1) > 1/3 in dimension 3
    with pytest.raises(ParamError, match="subcriticality"):
        Params(5.0, 5.0).check_hypothesis(dim=3)
    Params(5.0, 5.0).check_hypothesis(dim=2)  # vacuous in 2D


# ---------------------------------------------------------------------- #
# conversions                                                            #
# ---------------------------------------------------------------------- #


def test_dual_from_primal_zero_and_cube():
    g = build_grid(Domain.interval(1.0), 16)
    params = Params(3.0, 2.0)
    zero = PrimalPair(g.field(), g.field())
    w = dual_from_primal(zero, params)
    assert np.all(w.w1.values == 0)
    two = PrimalPair(g.field(np.full(g.size, 2.0)), g.field())
    w = dual_from_primal(two, params)
    assert np.allclose(w.w1.values, 8.0)


def test_primal_from_dual_inverse_values():
    g = build_grid(Domain.interval(1.0), 16)
    params = Params(3.0, 2.0)
    w = DualPair(g.field(np.full(g.size, 8.0)), g.field())
    uv = primal_from_dual(w, params)
    assert np.allclose(uv.u.values, 2.0)
    assert np.all(uv.v.values == 0)


@pytest.mark.parametrize("alpha,beta", [(0.0, 0.0), (0.7, 0.3)])
def test_round_trip_conversions(alpha, beta):
    rng = np.random.default_rng(2)
    g = build_grid(Domain.disk(1.0), 12, 16)
    params = Params(2.5, 1.8, alpha, beta)
    u = g.field(rng.standard_normal(g.size))
    v = g.field(rng.standard_normal(g.size))
    uv = PrimalPair(u, v)
    back = primal_from_dual(dual_from_primal(uv, params), params)
    assert np.max(np.abs(back.u.values - u.values)) <= 1e-12 * np.max(np.abs(u.values))
    assert np.max(np.abs(back.v.values - v.values)) <= 1e-12 * np.max(np.abs(v.values))
    w = dual_from_primal(uv, params)
    back_w = dual_from_primal(primal_from_dual(w, params), params)
    assert np.max(np.abs(back_w.w1.values - w.w1.values)) <= 1e-12 * np.max(
        np.abs(w.w1.values)
    )


# ---------------------------------------------------------------------- #
# energies                                                               #
# ---------------------------------------------------------------------- #


def test_energy_zero_pairs(interval_green):
    g = interval_green.grid
    params = Params(3.0, 3.0)
    zero_uv = PrimalPair(g.field(), g.field())
    zero_w = DualPair(g.field(), g.field())
    assert energy_E(zero_uv, params, interval_green) == 0.0
    assert energy_I(zero_w, params, interval_green) == 0.0


def test_energy_E_swap_symmetry(interval_green):
    rng = np.random.default_rng(4)
    g = interval_green.grid
    params = Params(3.0, 3.0, 0.5, 0.5)
    u = g.field(rng.standard_normal(g.size))
    v = g.field(rng.standard_normal(g.size))
    e1 = energy_E(PrimalPair(u, v), params, interval_green)
    e2 = energy_E(PrimalPair(v, u), params, interval_green)
    assert e1 == pytest.approx(e2, rel=1e-12)


def test_energy_I_eigenfunction_formula(interval_green):
    lam2, phi2 = eigenpair(interval_green, 2)
    params = Params(3.0, 3.0)
    w = DualPair(phi2.copy(), phi2.copy())
    val = energy_I(w, params, interval_green)
    direct = (3.0 / 4.0) * 2.0 * integrate(
        ScalarField(np.abs(phi2.values) ** (4.0 / 3.0), phi2.grid)
    ) - (1.0 / lam2) * integrate(ScalarField(phi2.values**2, phi2.grid))
    assert val == pytest.approx(direct, rel=1e-8)


def test_T_symmetry(disk_green):
    rng = np.random.default_rng(6)
    g = disk_green.grid
    w1 = rng.standard_normal(g.size)
    w2 = rng.standard_normal(g.size)
    k1 = disk_green.solve_array(w1)
    k2 = disk_green.solve_array(w2)
    lhs = float(np.dot(g.weights, w1 * k2))
    rhs = float(np.dot(g.weights, w2 * k1))
    assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), 1.0)


# ---------------------------------------------------------------------- #
# gradient of I                                                          #
# ---------------------------------------------------------------------- #


def test_grad_I_zero_at_origin(interval_green):
    g = interval_green.grid
    params = Params(3.0, 2.0)
    zero = DualPair(g.field(), g.field())
    gr = grad_I(zero, params, interval_green)
    assert np.all(gr.w1.values == 0) and np.all(gr.w2.values == 0)


@pytest.mark.parametrize("green_name,params", [
    ("interval", Params(3.0, 3.0)),
    ("interval", Params(2.0, 3.0, 0.5, 0.25)),
    ("disk", Params(2.0, 4.0, 0.5, 0.5)),
])
def test_grad_I_matches_finite_differences(green_name, params, interval_green, disk_green):
    green = interval_green if green_name == "interval" else disk_green
    w = _smooth_pair(green, seed=1, clearance=0.5)
    gr = grad_I(w, params, green)
    rng = np.random.default_rng(12)
    g = green.grid
    h = 1e-5
    for _ in range(20):
        phi1 = rng.standard_normal(g.size)
        phi2 = rng.standard_normal(g.size)
        wp = DualPair(
            ScalarField(w.w1.values + h * phi1, g), ScalarField(w.w2.values + h * phi2, g)
        )
        wm = DualPair(
            ScalarField(w.w1.values - h * phi1, g), ScalarField(w.w2.values - h * phi2, g)
        )
        fd = (energy_I(wp, params, green) - energy_I(wm, params, green)) / (2 * h)
        an = float(
            np.dot(g.weights, gr.w1.values * phi1) + np.dot(g.weights, gr.w2.values * phi2)
        )
        assert abs(fd - an) <= 1e-5 * max(abs(fd), abs(an), 1e-8)


# ---------------------------------------------------------------------- #
# coefficients                                                           #
# ---------------------------------------------------------------------- #


def test_coefficients_eigenfunction_relations(interval_green):
    lam2, phi2 = eigenpair(interval_green, 2)
    params = Params(3.0, 3.0)
    w = DualPair(phi2.copy(), phi2.copy())
    c = coefficients(w, params, interval_green)
    phi_p = np.maximum(phi2.values, 0.0)
    phi_m = np.maximum(-phi2.values, 0.0)
    wgt = phi2.grid.weights
    # K phi2 = phi2 / lam2, so B+ = (1/lam2) ∫ (phi2+)^2 - ∫ phi2+ K phi2-
    b_plus_expected = float(np.dot(wgt * phi_p, phi2.values / lam2)) + c.C1
    assert c.B_plus == pytest.approx(b_plus_expected, rel=1e-8)
    assert c.C1 > 0 and c.C2 > 0  # disjoint supports coupled by positive K
    for val in (c.A_plus, c.A_minus, c.B_plus, c.B_minus, c.C1, c.C2):
        assert val > 0


def test_coefficients_scaling_homogeneity(disk_green):
    params = Params(2.5, 1.7, 0.4, 0.2)
    w = _smooth_pair(disk_green, seed=8)
    c1 = coefficients(w, params, disk_green)
    cval = 2.0
    ws = DualPair(cval * w.w1, cval * w.w2)
    c2 = coefficients(ws, params, disk_green)
    for name in ("B_plus", "B_minus", "C1", "C2"):
        assert getattr(c2, name) == pytest.approx(
            cval**2 * getattr(c1, name), rel=1e-12
        )
    # A scales termwise: test each term by zeroing the other component
    g = disk_green.grid
    w_only1 = DualPair(w.w1.copy(), g.field())
    a1 = coefficients(w_only1, params, disk_green).A_plus
    a1s = coefficients(
        DualPair(cval * w.w1, g.field()), params, disk_green
    ).A_plus
    assert a1s == pytest.approx(cval ** ((params.p + 1) / params.p) * a1, rel=1e-12)
    w_only2 = DualPair(g.field(), w.w2.copy())
    a2 = coefficients(w_only2, params, disk_green).A_plus
    a2s = coefficients(
        DualPair(g.field(), cval * w.w2), params, disk_green
    ).A_plus
    assert a2s == pytest.approx(cval ** ((params.q + 1) / params.q) * a2, rel=1e-12)


# ---------------------------------------------------------------------- #
# fiber map                                                              #
# ---------------------------------------------------------------------- #


def test_theta_polynomial_value():
    c = Coeffs(1.0, 1.0, 1.0, 1.0, 0.25, 0.25)
    e = Exponents(1.0, 1.0, 1.5)
    val, _, _ = theta_eval(c, e, 1.0, 1.0)
    assert val == pytest.approx(0.5, abs=1e-15)


def test_theta_gradient_hessian_finite_differences():
    c = Coeffs(1.3, 0.8, 1.1, 0.9, 0.2, 0.15)
    e = exponents(Params(2.0, 3.0))
    t0, s0 = 1.3, 0.7
    val, grad, hess = theta_eval(c, e, t0, s0)
    h = 1e-5
    fd_t = (theta_eval(c, e, t0 + h, s0)[0] - theta_eval(c, e, t0 - h, s0)[0]) / (2 * h)
    fd_s = (theta_eval(c, e, t0, s0 + h)[0] - theta_eval(c, e, t0, s0 - h)[0]) / (2 * h)
    assert fd_t == pytest.approx(grad[0], rel=1e-6)
    assert fd_s == pytest.approx(grad[1], rel=1e-6)
    fd_tt = (theta_eval(c, e, t0 + h, s0)[1][0] - theta_eval(c, e, t0 - h, s0)[1][0]) / (
        2 * h
    )
    fd_ts = (theta_eval(c, e, t0, s0 + h)[1][0] - theta_eval(c, e, t0, s0 - h)[1][0]) / (
        2 * h
    )
    assert fd_tt == pytest.approx(hess[0, 0], rel=1e-6)
    assert fd_ts == pytest.approx(hess[0, 1], rel=1e-6)


def test_theta_rejects_nonpositive_arguments():
    c = Coeffs(1.0, 1.0, 1.0, 1.0, 0.1, 0.1)
    e = Exponents(1.0, 1.0, 1.5)
    with pytest.raises(ValueError):
        theta_eval(c, e, 0.0, 1.0)
    with pytest.raises(ValueError):
        theta_eval(c, e, 1.0, -2.0)


def test_theta_coercive_on_rays(interval_green):
    _, phi2 = eigenpair(interval_green, 2)
    params = Params(3.0, 3.0)
    exps = exponents(params)
    w = DualPair(phi2.copy(), phi2.copy())
    c = coefficients(w, params, interval_green)
    m_plus, m_minus = n0_margins(c, exps)
    assert m_plus > 0 and m_minus > 0
    a = c.A_plus + c.A_minus
    b = 0.5 * (m_plus + m_minus)
    r_star = (a / b) ** (1.0 / (2.0 - exps.gamma))
    val, _, _ = theta_eval(c, exps, 2 * r_star, 2 * r_star)
    assert val < 0


# ---------------------------------------------------------------------- #
# N0 membership and Nehari residuals                                     #
# ---------------------------------------------------------------------- #


def test_in_N0_eigenfunction_pair(interval_green):
    _, phi2 = eigenpair(interval_green, 2)
    params = Params(3.0, 3.0)
    assert in_N0(DualPair(phi2.copy(), phi2.copy()), params, interval_green)


def test_in_N0_fails_for_opposed_pair(interval_green):
    # w2 = -w1 makes the cross terms dominate
    _, phi2 = eigenpair(interval_green, 2)
    params = Params(3.0, 3.0)
    w = DualPair(phi2.copy(), -phi2)
    assert not in_N0(w, params, interval_green)


def test_nehari_residual_matches_theta_gradient(interval_green):
    params = Params(2.0, 3.0, 0.3, 0.1)
    exps = exponents(params)
    w = _smooth_pair(interval_green, seed=21)
    c = coefficients(w, params, interval_green)
    _, grad, _ = theta_eval(c, exps, 1.0, 1.0)
    r_plus, r_minus = nehari_residuals(w, params, interval_green)
    scale = c.scale
    assert abs(r_plus - grad[0]) <= 1e-10 * scale
    assert abs(r_minus - grad[1]) <= 1e-10 * scale


# ---------------------------------------------------------------------- #
# regularized energy                                                     #
# ---------------------------------------------------------------------- #


def test_energy_I_eps_zero_is_exact(interval_green):
    params = Params(3.0, 3.0)
    w = _smooth_pair(interval_green, seed=31)
    assert energy_I_eps(w, params, 0.0, interval_green) == energy_I(
        w, params, interval_green
    )


def test_energy_I_eps_adds_positive_terms(disk_green):
    params = Params(2.0, 3.0, 0.2, 0.4)
    w = _smooth_pair(disk_green, seed=32)
    base = energy_I(w, params, disk_green)
    assert energy_I_eps(w, params, 1e-2, disk_green) > base
    assert energy_I_eps(w, params, 1e-4, disk_green) > base


@pytest.mark.parametrize("green_name", ["interval", "disk"])
def test_grad_I_eps_matches_finite_differences(green_name, interval_green, disk_green):
    green = interval_green if green_name == "interval" else disk_green
    params = Params(2.0, 3.0, 0.1, 0.2)
    eps = 5e-2
    w = _smooth_pair(green, seed=33, clearance=0.5)
    gr = grad_I_eps(w, params, eps, green)
    g = green.grid
    rng = np.random.default_rng(34)
    h = 1e-6
    for _ in range(5):
        phi1 = rng.standard_normal(g.size)
        phi2 = rng.standard_normal(g.size)
        wp = DualPair(
            ScalarField(w.w1.values + h * phi1, g), ScalarField(w.w2.values + h * phi2, g)
        )
        wm = DualPair(
            ScalarField(w.w1.values - h * phi1, g), ScalarField(w.w2.values - h * phi2, g)
        )
        fd = (
            energy_I_eps(wp, params, eps, green) - energy_I_eps(wm, params, eps, green)
        ) / (2 * h)
        an = float(
            np.dot(g.weights, gr.w1.values * phi1) + np.dot(g.weights, gr.w2.values * phi2)
        )
        assert abs(fd - an) <= 2e-5 * max(abs(fd), abs(an), 1e-8)


def test_gradient_penalty_quadratic_1d():
    # f = x on (0,1): forward differences give slope 1 in every interior cell
    # and -x_{n-1}/h in the last cell (zero extension)
    g = build_grid(Domain.interval(1.0), 64)
    pen = gradient_penalty(g.r_flat, g, 2.0)
    h = g.dr
    expected = (64 - 1) * h * 1.0 + h * (g.r[-1] / h) ** 2
    assert pen == pytest.approx(expected, rel=1e-12)


# ---------------------------------------------------------------------- #
# pointwise monotonicity estimates used for strong convergence           #
# ---------------------------------------------------------------------- #


def _lhs(xi, eta, p):
    return (odd_power(xi, 1.0 / p) - odd_power(eta, 1.0 / p)) * (xi - eta)


def test_pointwise_estimate_small_p():
    rng = np.random.default_rng(41)
    for p in (0.3, 0.5, 0.8, 1.0):
        xi = rng.uniform(-10, 10, 500)
        eta = rng.uniform(-10, 10, 500)
        lhs = _lhs(xi, eta, p)
        rhs = 2 ** ((p - 1) / p) * np.abs(xi - eta) ** ((p + 1) / p)
        assert np.all(lhs >= rhs - 1e-12 * np.maximum(np.abs(rhs), 1.0))


def test_pointwise_estimate_large_p():
    rng = np.random.default_rng(42)
    for p in (1.0, 1.5, 3.0, 5.0):
        xi = rng.uniform(-10, 10, 500)
        eta = rng.uniform(-10, 10, 500)
        keep = (np.abs(xi) + np.abs(eta)) > 1e-8
        xi, eta = xi[keep], eta[keep]
        lhs = _lhs(xi, eta, p)
        rhs = (1.0 / p) * np.abs(xi - eta) ** 2 * (np.abs(xi) + np.abs(eta)) ** (
            1.0 / p - 1.0
        )
        assert np.all(lhs >= rhs - 1e-12 * np.maximum(np.abs(rhs), 1.0))


def test_pointwise_estimates_coincide_at_p_one():
    xi, eta = 2.7, -1.3
    lhs = _lhs(np.array([xi]), np.array([eta]), 1.0)[0]
    form1 = 2.0**0 * abs(xi - eta) ** 2
    form2 = 1.0 * abs(xi - eta) ** 2 * (abs(xi) + abs(eta)) ** 0
    assert lhs == pytest.approx(form1, rel=1e-14)
    assert form1 == form2
