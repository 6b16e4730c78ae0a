"""Polarization identities, axis detection, foliated Schwarz diagnostics."""

import math

import numpy as np
import pytest

from henon_nodal.dual import PrimalPair
from henon_nodal.greenop import GreenSolver
from henon_nodal.grids import Domain, ScalarField, build_grid, integrate
from henon_nodal.symmetry import (
    HalfSpace,
    component_gap,
    detect_axis,
    foliated_schwarz_score,
    key_estimate,
    polarize,
    radial_deviation,
)


@pytest.fixture(scope="module")
def disk():
    return build_grid(Domain.disk(1.0), 16, 64)


@pytest.fixture(scope="module")
def disk_green(disk):
    return GreenSolver.from_grid(disk)


def _field(grid, fn):
    r = grid.r_flat
    t = grid.theta_flat
    return ScalarField(fn(r, t), grid)


def _rotate(f, shift):
    """Rotate a field by shift grid cells in theta."""
    return ScalarField(np.roll(f.reshape2(), shift, axis=1).ravel(), f.grid)


# ---------------------------------------------------------------------- #
# polarization                                                           #
# ---------------------------------------------------------------------- #


def test_polarize_fixes_aligned_cosine(disk):
    # g(r) cos(theta - eta) with g >= 0 is already polarized for H with
    # normal eta: the reflection never exceeds the value on H
    half = HalfSpace(0.0).snapped(disk)
    f = _field(disk, lambda r, t: r * (1 - r) * np.cos(t - half.normal_angle))
    fh = polarize(f, half)
    assert np.array_equal(fh.values, f.values)


def test_polarize_idempotent_snapped(disk):
    rng = np.random.default_rng(3)
    f = ScalarField(rng.standard_normal(disk.size), disk)
    half = HalfSpace(0.7).snapped(disk)
    once = polarize(f, half)
    twice = polarize(once, half)
    assert np.max(np.abs(twice.values - once.values)) <= 1e-12


def test_polarize_sign_part_identities_snapped(disk):
    rng = np.random.default_rng(4)
    f = ScalarField(rng.standard_normal(disk.size), disk)
    half = HalfSpace(1.2).snapped(disk)
    fh = polarize(f, half)
    plus_of_h = np.maximum(fh.values, 0.0)
    h_of_plus = polarize(ScalarField(np.maximum(f.values, 0.0), disk), half)
    assert np.max(np.abs(plus_of_h - h_of_plus.values)) <= 1e-12
    # (f_H)^- = -(-f^-)_H
    minus_of_h = np.maximum(-fh.values, 0.0)
    h_of_neg_minus = polarize(ScalarField(-np.maximum(-f.values, 0.0), disk), half)
    assert np.max(np.abs(minus_of_h + h_of_neg_minus.values)) <= 1e-12


def test_polarize_scaling_identity_snapped(disk):
    rng = np.random.default_rng(5)
    f = ScalarField(rng.standard_normal(disk.size), disk)
    half = HalfSpace(2.1).snapped(disk)
    a, b = 1.7, 0.4
    lhs = polarize(
        ScalarField(
            a * np.maximum(f.values, 0.0) - b * np.maximum(-f.values, 0.0), disk
        ),
        half,
    )
    fh = polarize(f, half)
    rhs = a * np.maximum(fh.values, 0.0) - b * np.maximum(-fh.values, 0.0)
    assert np.max(np.abs(lhs.values - rhs)) <= 1e-12


def test_polarize_preserves_radial_integrals_snapped(disk):
    rng = np.random.default_rng(6)
    f = ScalarField(rng.standard_normal(disk.size), disk)
    half = HalfSpace(0.3).snapped(disk)
    fh = polarize(f, half)
    for s, a in ((2.0, 0.0), (4.0, 0.5)):
        before = integrate(ScalarField(disk.r_flat**a * np.abs(f.values) ** s, disk))
        after = integrate(ScalarField(disk.r_flat**a * np.abs(fh.values) ** s, disk))
        assert after == pytest.approx(before, rel=1e-12)


@pytest.fixture(scope="module")
def fine_disk():
    # fine angular grid for interpolated (non-snapped) polarization: the
    # test fields put their sign changes at node angles so the sign-part
    # identities stay exact, while the genuinely rearranged values carry
    # the O(dtheta^2) interpolation error
    return build_grid(Domain.disk(1.0), 6, 5000)


def test_polarize_identities_interpolated(fine_disk):
    grid = fine_disk
    j1 = 101
    theta0 = grid.theta[j1] + 0.5 * math.pi  # zeros of cos at node angles
    f = _field(grid, lambda r, t: (0.5 + r) * np.cos(t - theta0))
    # normal 2.5 rad away from the axis: polarization rearranges everywhere
    half = HalfSpace(theta0 + 2.5)
    fh = polarize(f, half)
    assert np.any(fh.values != f.values)
    scale = np.max(np.abs(f.values))
    plus_of_h = np.maximum(fh.values, 0.0)
    h_of_plus = polarize(ScalarField(np.maximum(f.values, 0.0), grid), half)
    assert np.max(np.abs(plus_of_h - h_of_plus.values)) <= 1e-6 * scale
    a, b = 2.0, 0.7
    lhs = polarize(
        ScalarField(
            a * np.maximum(f.values, 0.0) - b * np.maximum(-f.values, 0.0), grid
        ),
        half,
    )
    rhs = a * plus_of_h - b * np.maximum(-fh.values, 0.0)
    assert np.max(np.abs(lhs.values - rhs)) <= 1e-6 * max(a, b) * scale


def test_polarize_integral_invariance_interpolated(fine_disk):
    grid = fine_disk
    theta0 = grid.theta[7]
    f = _field(grid, lambda r, t: (0.3 + r**2) * np.cos(t - theta0))
    half = HalfSpace(theta0 + 2.5)  # genuine rearrangement
    fh = polarize(f, half)
    assert np.all(fh.values != f.values)
    for s in (2.0, 4.0):
        before = integrate(ScalarField(np.abs(f.values) ** s, grid))
        after = integrate(ScalarField(np.abs(fh.values) ** s, grid))
        assert after == pytest.approx(before, rel=1e-6)


def test_polarize_rejects_1d():
    g = build_grid(Domain.interval(1.0), 32)
    f = ScalarField(np.ones(g.size), g)
    with pytest.raises(ValueError, match="1D"):
        polarize(f, HalfSpace(0.0))


# ---------------------------------------------------------------------- #
# key estimate                                                           #
# ---------------------------------------------------------------------- #


def test_key_estimate_symmetric_fields_equal(disk, disk_green):
    half = HalfSpace(0.9).snapped(disk)
    # fields symmetric about the boundary line are fixed by polarization
    psi = half.boundary_angle
    u = _field(disk, lambda r, t: r * (1 - r) * np.cos(2 * (t - psi)))
    v = _field(disk, lambda r, t: (1 - r**2) * (1 + 0.3 * np.cos(2 * (t - psi))))
    lhs, rhs = key_estimate(u, v, half, disk_green)
    assert rhs == pytest.approx(lhs, abs=1e-10 * max(abs(lhs), 1.0))


def test_key_estimate_randomized_never_violated(disk, disk_green):
    rng = np.random.default_rng(77)
    scale_floor = 1e-8
    for _ in range(200):
        u = ScalarField(rng.standard_normal(disk.size), disk)
        v = ScalarField(rng.standard_normal(disk.size), disk)
        half = HalfSpace(rng.uniform(0, 2 * math.pi)).snapped(disk)
        lhs, rhs = key_estimate(u, v, half, disk_green)
        scale = max(abs(lhs), abs(rhs), 1.0)
        assert rhs - lhs >= -scale_floor * scale


def test_key_estimate_strict_for_antisymmetric_pair(disk, disk_green):
    half = HalfSpace(0.5).snapped(disk)
    psi = half.boundary_angle
    u = _field(disk, lambda r, t: r * (1 - r) * np.sin(t - psi))
    v = ScalarField(-u.values, disk)
    lhs, rhs = key_estimate(u, v, half, disk_green)
    assert rhs - lhs > 0.01 * abs(lhs)


# ---------------------------------------------------------------------- #
# axis detection                                                         #
# ---------------------------------------------------------------------- #


def test_detect_axis_cosine_mode(disk):
    theta0 = disk.theta[13] + 0.3 * disk.dtheta
    f = _field(disk, lambda r, t: r * (1 - r) * np.cos(t - theta0))
    res = detect_axis(f)
    assert not res.degenerate
    err = abs((res.angle - theta0 + math.pi) % (2 * math.pi) - math.pi)
    assert err <= disk.dtheta


def test_detect_axis_flat_field_degenerate(disk):
    f = _field(disk, lambda r, t: 1.0 - r**2)
    res = detect_axis(f)
    assert res.degenerate


def test_detect_axis_rotation_equivariant(disk):
    theta0 = disk.theta[5]
    f = _field(disk, lambda r, t: (1 - r) * r * np.cos(t - theta0))
    base = detect_axis(f)
    for shift in (3, 11, 29):
        rotated = _rotate(f, shift)
        res = detect_axis(rotated)
        expected = base.angle + shift * disk.dtheta
        err = abs((res.angle - expected + math.pi) % (2 * math.pi) - math.pi)
        assert err <= disk.dtheta


# ---------------------------------------------------------------------- #
# foliated Schwarz score                                                 #
# ---------------------------------------------------------------------- #


def test_fs_score_canonical_field(disk):
    theta0 = disk.theta[9]
    f = _field(disk, lambda r, t: r * (1 - r) * np.cos(t - theta0))
    score = foliated_schwarz_score(f, [math.cos(theta0), math.sin(theta0)])
    assert score <= 1e-12


def test_fs_score_two_bump_field_large(disk):
    theta0 = disk.theta[9]
    f = _field(disk, lambda r, t: r * (1 - r) * np.cos(2 * (t - theta0)))
    score = foliated_schwarz_score(f, [math.cos(theta0), math.sin(theta0)])
    assert score >= 0.1


def test_fs_score_rotation_equivariant(disk):
    theta0 = disk.theta[4]
    f = _field(disk, lambda r, t: r * (1 - r) * (np.cos(t - theta0) + 0.2))
    s0 = foliated_schwarz_score(f, [math.cos(theta0), math.sin(theta0)])
    shift = 17
    rotated = _rotate(f, shift)
    t1 = theta0 + shift * disk.dtheta
    s1 = foliated_schwarz_score(rotated, [math.cos(t1), math.sin(t1)])
    assert s1 == pytest.approx(s0, abs=1e-12)


# ---------------------------------------------------------------------- #
# scalar metrics                                                         #
# ---------------------------------------------------------------------- #


def test_radial_deviation_radial_field(disk):
    f = _field(disk, lambda r, t: 1.0 - r**2)
    assert radial_deviation(f) <= 1e-14


def test_radial_deviation_pure_angular_mode(disk):
    f = _field(disk, lambda r, t: np.cos(t))
    assert radial_deviation(f) == pytest.approx(1.0, abs=1e-12)


def test_radial_deviation_zero_field(disk):
    f = disk.field()
    assert radial_deviation(f) == 0.0


def test_component_gap_cases(disk):
    u = _field(disk, lambda r, t: np.cos(t) * r)
    same = PrimalPair(u.copy(), u.copy())
    assert component_gap(same) == 0.0
    v = ScalarField(0.5 * u.values, disk)
    assert component_gap(PrimalPair(u, v)) == pytest.approx(0.5, rel=1e-12)
    zero = PrimalPair(disk.field(), disk.field())
    assert component_gap(zero) == 0.0


def test_annulus_nodal_solution_foliated_schwarz():
    from henon_nodal.dual import Params
    from henon_nodal.solver import SolveOptions, minimize_nodal

    grid = build_grid(Domain.annulus(0.4, 1.0), 20, 48)
    sol = minimize_nodal(Params(3.0, 3.0), grid, SolveOptions())
    axis = detect_axis(sol.dual.w1)
    assert not axis.degenerate
    score = max(
        foliated_schwarz_score(sol.primal.u, axis.p_star),
        foliated_schwarz_score(sol.primal.v, axis.p_star),
    )
    assert score <= 1e-3
    assert radial_deviation(sol.primal.u) >= 0.1
