import math

import numpy as np
import pytest

from stabcert.certificates import compose_certificate, estimate_resolvent_profile
from stabcert.models import PerturbationFactors, build_diagonal_model, build_disk_model, custom_model
from stabcert.presets import diagonal_factors, disk_certificate, disk_factors, disk_model
from stabcert.verification import (
    RegionGrid,
    check_injectivity_at_resonances,
    check_resolvent_growth,
    fit_polynomial_decay,
    generator_matrix,
    rbcr_integral,
    run_verification,
    scan_transfer_norm,
    simulate_semigroup,
    uniform_boundedness_functional,
)

SMALL_GRID = RegionGrid(n_radii=20, n_angles=11, n_x=11, n_y=21)


@pytest.fixture(scope="module")
def inverse100():
    m = build_diagonal_model("inverse", 100)
    cert = compose_certificate(estimate_resolvent_profile(m), 0.5, 0.5, 0.8)
    return m, cert, diagonal_factors(m, cert)


@pytest.fixture(scope="module")
def disk():
    m = disk_model()
    cert = disk_certificate(m)
    return m, cert, disk_factors(m, cert)


def _e1_factors(n, s):
    b = np.zeros((1, n), complex)
    b[0, 0] = s
    return PerturbationFactors(b, b.copy())


# --- transfer scan -------------------------------------------------------------


def test_scan_disk_half_budget(disk):
    m, cert, f = disk
    res = scan_transfer_norm(m, f, cert)
    assert res.max_norm <= 0.8
    assert res.skipped == 0


def test_scan_zero_factors(inverse100):
    m, cert, _ = inverse100
    assert scan_transfer_norm(m, PerturbationFactors.zero(100), cert, SMALL_GRID).max_norm == 0.0


def test_scan_negative_control(inverse100):
    m, cert, _ = inverse100
    res = scan_transfer_norm(m, _e1_factors(100, 2.0), cert, SMALL_GRID)
    assert res.max_norm >= 4.0 - 1e-12
    assert res.resonance_limit == pytest.approx(4.0)


def test_scan_grid_counts():
    m = custom_model([-1.0 + 0j, -0.5 + 0j], closure_points=[0j])
    cert = compose_certificate(estimate_resolvent_profile(m), 0.5, 0.5, 0.8)
    grid = RegionGrid(n_radii=5, n_angles=3, x_max=2.0, n_x=3, y_half=2.0, n_y=5)
    res = scan_transfer_norm(m, _e1_factors(2, 0.1), cert, grid)
    # 15 polar points plus the window points outside the unit half-disk
    xs, ys = np.meshgrid(np.linspace(0, 2, 3), np.linspace(-2, 2, 5))
    outside = int(np.sum(np.abs(xs + 1j * ys) > 1.0))
    assert res.n_points == 15 + outside and res.skipped == 0


@pytest.mark.parametrize("s", [0.5, 3.0, 1j])
def test_scan_invariant_under_reciprocal_scaling(inverse100, s):
    m, cert, f = inverse100
    a = scan_transfer_norm(m, f, cert, SMALL_GRID).max_norm
    b = scan_transfer_norm(m, f.scaled(s, 1 / np.conj(s)), cert, SMALL_GRID).max_norm
    assert b == pytest.approx(a, rel=1e-12)


# --- injectivity ------------------------------------------------------------------


def test_injectivity_half_budget(inverse100):
    m, cert, f = inverse100
    out = check_injectivity_at_resonances(m, f, 0.5, 0.5, 1.0, (0.0,))
    assert out[0.0]["product"] < 0.25
    zero = check_injectivity_at_resonances(m, PerturbationFactors.zero(100), 0.5, 0.5, 1.0, (0.0,))
    assert zero[0.0]["product"] == 0.0
    big = check_injectivity_at_resonances(m, _e1_factors(100, 2.0), 0.5, 0.5, 1.0, (0.0,))
    assert not big[0.0]["passed"] and big[0.0]["product"] == pytest.approx(4.0)


# --- resolvent growth --------------------------------------------------------------


def test_growth_zero_factors_below_m_a(inverse100):
    m, cert, _ = inverse100
    out = check_resolvent_growth(m, PerturbationFactors.zero(100), cert, n_radii=15, n_off=41)
    assert out["near"][0.0]["sup"] <= cert.profile.m_a


def test_growth_disk_certified(disk):
    m, cert, f = disk
    out = check_resolvent_growth(m, f, cert, n_radii=21, n_off=41)
    near = out["near"][0.0]
    assert out["M_D"] == pytest.approx(5.0)
    assert math.isfinite(near["sup"]) and near["sup"] <= near["bound"]
    assert near["bound"] == pytest.approx(cert.profile.m_a + 5.0 * near["M_k"])
    assert near["detector_ratio_alpha_minus_half"] > 10


# --- integrals ------------------------------------------------------------------


def test_poisson_oracle():
    m = build_diagonal_model("inverse", 50)
    xi = np.array([1e-3, 0.1, 1.0, 10.0, 1e3])
    res = uniform_boundedness_functional(m, PerturbationFactors.zero(50), m.basis_vector(2), xi, refine=False)
    np.testing.assert_allclose(res.values, xi * math.pi / (xi + 1 / 3), rtol=1e-6)


def test_zero_vector_gives_zero(inverse100):
    m, _, f = inverse100
    res = uniform_boundedness_functional(m, f, np.zeros(100), np.array([0.1, 1.0]), refine=False)
    assert res.sup == 0.0


def test_perturbed_functional_within_factor_two(inverse100):
    m, _, f = inverse100
    x = m.basis_vector(0)
    xi = np.logspace(-3, 3, 13)
    pert = uniform_boundedness_functional(m, f, x, xi)
    base = uniform_boundedness_functional(m, PerturbationFactors.zero(100), x, xi)
    assert pert.verdict == "finite"
    assert pert.sup <= 2 * base.sup
    adj = uniform_boundedness_functional(m, f, x, xi, adjoint=True)
    assert adj.verdict == "finite"


def test_rbcr_zero_and_homogeneity():
    m = build_diagonal_model("inverse", 60)
    xi = np.logspace(-2, 2, 9)
    assert rbcr_integral(m, PerturbationFactors.zero(60), xi, refine=False).sup == 0.0
    f = _e1_factors(60, 0.1)
    a = rbcr_integral(m, f, xi, refine=False)
    b = rbcr_integral(m, f.scaled(2.0, 3.0), xi, refine=False)
    assert a.converged and math.isfinite(a.sup)
    np.testing.assert_allclose(b.values, 36 * a.values, rtol=1e-6)


def test_rbcr_rank_one_closed_form():
    # b = c = s e_1 on diag(-1, ...): integrand s^4 / ((xi + 1)^2 + eta^2)^2
    m = build_diagonal_model("inverse", 20)
    s = 0.1
    xi = np.array([0.5, 2.0])
    res = rbcr_integral(m, _e1_factors(20, s), xi, refine=False)
    exact = xi * s**4 * math.pi / (2 * (xi + 1) ** 3)
    np.testing.assert_allclose(res.values, exact, rtol=1e-6)


# --- time domain ------------------------------------------------------------------


def test_unperturbed_trajectory():
    m = build_diagonal_model("inverse", 50)
    traj = simulate_semigroup(m, PerturbationFactors.zero(50), m.basis_vector(0), [0.0, 1.0])
    assert traj.norms[1] == pytest.approx(math.exp(-1), rel=1e-12)
    assert not traj.growth


def test_expm_matches_eig(inverse100):
    m, _, f = inverse100
    rng = np.random.default_rng(0)
    x = rng.normal(size=100) + 1j * rng.normal(size=100)
    t = np.linspace(0, 50, 11)
    a = simulate_semigroup(m, f, x, t, method="expm")
    b = simulate_semigroup(m, f, x, t, method="eig")
    np.testing.assert_allclose(a.norms, b.norms, rtol=1e-9)


def test_certified_trajectory_bounded(inverse100):
    m, _, f = inverse100
    rng = np.random.default_rng(1)
    x = rng.normal(size=100) + 0j
    traj = simulate_semigroup(m, f, x, np.linspace(0, 500, 26))
    assert traj.sup <= 2 * m.norm(x)
    assert traj.norms[-1] < traj.norms[0]


def test_unstable_growth_and_eigenvalue_three():
    m = build_diagonal_model("inverse", 30)
    f = _e1_factors(30, 2.0)
    ev = np.linalg.eigvals(generator_matrix(m, f))
    assert np.max(ev.real) == pytest.approx(3.0, abs=1e-8)
    traj = simulate_semigroup(m, f, m.basis_vector(0), [5.0, 6.0])
    assert traj.norms[1] / traj.norms[0] >= math.exp(2.9)
    long = simulate_semigroup(m, f, m.basis_vector(0), [0.0, 400.0])
    assert long.growth


def test_simulation_limits():
    m = build_diagonal_model("inverse", 5)
    with pytest.raises(ValueError):
        simulate_semigroup(m, PerturbationFactors.zero(5), np.ones(5), [1.0, 0.5])
    with pytest.raises(ValueError):
        simulate_semigroup(m, PerturbationFactors.zero(5), np.ones(5), [0.0], max_n=3)


def test_decay_fits():
    m = build_diagonal_model("poly", 200)
    fit = fit_polynomial_decay(m)
    assert fit.verdict == "polynomial"
    assert fit.exponent == pytest.approx(-1.0, rel=0.1)
    # envelope oracle sup_k e^{-t/k} / |lambda_k|
    lam = m.eigenvalues
    env = [np.max(np.exp(t * lam.real) / np.abs(lam)) for t in fit.times]
    np.testing.assert_allclose(fit.norms, env, rtol=1e-6)
    fast = fit_polynomial_decay(build_diagonal_model("linear", 100))
    assert fast.verdict == "faster than polynomial"
    with pytest.raises(ValueError):
        fit_polynomial_decay(build_diagonal_model("inverse", 50))


# --- full report ------------------------------------------------------------------------


def test_report_zero_factors_passes(inverse100):
    m, cert, _ = inverse100
    rep = run_verification(m, PerturbationFactors.zero(100), cert, grid=SMALL_GRID, xi=np.logspace(-3, 3, 9))
    assert rep.passed, [r.line() for r in rep.records if not r.passed]
    assert all(isinstance(r.tolerance, float) for r in rep.records)


def test_report_negative_control_fails(inverse100):
    m, cert, _ = inverse100
    rep = run_verification(m, _e1_factors(100, 2.0), cert, grid=SMALL_GRID, xi=np.logspace(-3, 3, 9))
    assert not rep.passed
    failed = {r.name for r in rep.records if not r.passed}
    assert {"budget", "transfer_norm_scan", "injectivity", "trajectory_uniform_bound"} <= failed


def test_disk_far_from_axis_no_resonance():
    m = build_disk_model(-2, 1, 6, 12)
    cert = compose_certificate(estimate_resolvent_profile(m), 0.0, 0.0, 0.5)
    rep = run_verification(m, PerturbationFactors.zero(m.size), cert, grid=SMALL_GRID, xi=np.logspace(-3, 3, 9))
    names = {r.name for r in rep.records}
    assert "injectivity" not in names
    assert rep.passed
