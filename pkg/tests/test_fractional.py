import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stabcert.fractional import (
    MomentDirection,
    Side,
    apply_fractional_resolvent_power,
    check_moment_inequality,
    graph_norm,
    operator_norm,
    positive_power_norm,
    refinement_stable,
)
from stabcert.models import PerturbationFactors, build_diagonal_model, custom_model


def test_example_powers_scale_basis_vectors():
    m = build_diagonal_model("inverse", 10)
    for beta in (0.3, 1.0, 2.5):
        for k in (1, 4, 10):
            y = apply_fractional_resolvent_power(m, 0.0, beta, m.basis_vector(k - 1))
            assert y[k - 1] == pytest.approx(k**beta, rel=1e-13)
            assert np.count_nonzero(y) == 1


def test_zero_power_identity_and_negative_rejected():
    m = custom_model([-1, -0.5])
    x = np.array([1 + 2j, 3])
    np.testing.assert_array_equal(apply_fractional_resolvent_power(m, 0.0, 0.0, x), x)
    with pytest.raises(ValueError):
        apply_fractional_resolvent_power(m, 0.0, -0.5, x)


def test_first_power_is_resolvent_at_zero():
    m = custom_model([-1, -0.5])
    np.testing.assert_allclose(apply_fractional_resolvent_power(m, 0.0, 1.0, [1, 1]), [1, 2])


def test_c_side_is_conjugate_symbol():
    m = custom_model([-1 + 1j, -0.5 - 2j])
    x = np.ones(2)
    b = apply_fractional_resolvent_power(m, 0.7, 0.5, x, Side.B_SIDE)
    c = apply_fractional_resolvent_power(m, 0.7, 0.5, x, Side.C_SIDE)
    np.testing.assert_allclose(c, np.conj(b), rtol=1e-14)


def test_graph_norm_examples():
    m = build_diagonal_model("inverse", 6)
    e1 = m.basis_vector(0)[None, :]
    f = PerturbationFactors(e1, e1)
    assert graph_norm(m, f, 0.0, 1.0) == pytest.approx(1.0)
    b = np.zeros((1, 6), complex)
    b[0, :2] = [1, 0.5]
    f = PerturbationFactors(b, b)
    assert graph_norm(m, f, 0.0, 1.0) == pytest.approx(math.sqrt(2))
    assert graph_norm(m, f, 0.0, 0.0) == pytest.approx(operator_norm(m, b))


def test_graph_norm_homogeneous():
    rng = np.random.default_rng(3)
    m = build_diagonal_model("inverse", 20)
    f = PerturbationFactors(rng.normal(size=(2, 20)) + 0j, rng.normal(size=(2, 20)) + 0j)
    for s in (0.1, -3.0, 2j):
        g = f.scaled(s, 1.0)
        assert graph_norm(m, g, 0.0, 0.7) == pytest.approx(abs(s) * graph_norm(m, f, 0.0, 0.7), rel=1e-12)


def test_operator_norm_rank_two_weighted():
    m = custom_model([-1, -2, -3], weights=[1.0, 4.0, 0.25])
    cols = np.array([[1, 0, 0], [0, 1, 0]], dtype=complex)
    # orthogonal columns with weighted norms 1 and 2
    assert operator_norm(m, cols) == pytest.approx(2.0)


def test_positive_power_norm():
    m = build_diagonal_model("inverse", 4)
    b = np.array([[1, 1, 1, 1]], dtype=complex)
    f = PerturbationFactors(b, b)
    expected = math.sqrt(sum(k**-1.0 for k in range(1, 5)))
    assert positive_power_norm(m, f, 0.5) == pytest.approx(expected)
    assert positive_power_norm(m, f, 0.5, Side.C_SIDE) == pytest.approx(expected)


def test_power_semigroup_property():
    rng = np.random.default_rng(5)
    m = custom_model(-rng.uniform(0.01, 3, 40) + 1j * rng.normal(size=40))
    x = rng.normal(size=40) + 1j * rng.normal(size=40)
    for b1, b2 in ((0.3, 0.4), (1.0, 0.25), (2.2, 0.8)):
        two = apply_fractional_resolvent_power(m, 0.4, b2, apply_fractional_resolvent_power(m, 0.4, b1, x))
        one = apply_fractional_resolvent_power(m, 0.4, b1 + b2, x)
        np.testing.assert_allclose(two, one, rtol=1e-12)


def test_interpolation_of_graph_norms():
    rng = np.random.default_rng(11)
    m = build_diagonal_model("inverse", 60)
    for _ in range(30):
        f = PerturbationFactors(rng.normal(size=(2, 60)) * np.arange(1, 61) ** -1.5 + 0j, np.ones((2, 60)))
        beta = rng.uniform(0.2, 1.0)
        bt = rng.uniform(0, beta)
        lhs = graph_norm(m, f, 0.0, bt)
        rhs = graph_norm(m, f, 0.0, 0.0) ** (1 - bt / beta) * graph_norm(m, f, 0.0, beta) ** (bt / beta)
        assert lhs <= rhs * (1 + 1e-12)


def test_moment_example():
    m = custom_model([-1, -2])
    r = check_moment_inequality(m, 0.0, 0.5, 1.0, [1, 1])
    assert r.lhs == pytest.approx(math.sqrt(3))
    assert r.rhs == pytest.approx(math.sqrt(math.sqrt(2) * math.sqrt(5)))
    assert r.lhs**2 <= math.sqrt(10)
    assert r.constant_used == 1.0 and r.holds


def test_moment_equality_on_eigenvector():
    m = custom_model([-1 + 0.5j, -0.2 + 3j, -2])
    for j in range(3):
        for d in MomentDirection:
            r = check_moment_inequality(m, 0.3, 0.4, 1.3, m.basis_vector(j), d)
            assert r.lhs == pytest.approx(r.rhs, rel=1e-12)


def test_moment_rejects_bad_exponents():
    m = custom_model([-1])
    with pytest.raises(ValueError):
        check_moment_inequality(m, 0.0, 1.0, 1.0, [1])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(list(MomentDirection)))
def test_moment_random_vectors(seed, direction):
    rng = np.random.default_rng(seed)
    m = custom_model(-rng.uniform(1e-3, 5, 100) + 1j * rng.normal(0, 3, 100), weights=rng.uniform(0.1, 3, 100))
    alpha = rng.uniform(0.2, 4)
    r = check_moment_inequality(m, rng.normal(), rng.uniform(0.01, 0.99) * alpha, alpha, rng.normal(size=100) + 1j * rng.normal(size=100), direction)
    assert r.holds


def test_refinement_stable():
    assert refinement_stable(1.0, 1.005)
    assert not refinement_stable(1.0, 1.5)
    assert not refinement_stable(1.0, math.inf)


def test_domain_refinement_detects_divergence():
    # b_k = k^{-1/2}: ||(-A)^{-1/2} b|| on the inverse model is sqrt(sum 1), divergent.
    norms = []
    for n in (200, 400):
        m = build_diagonal_model("inverse", n)
        b = (np.arange(1, n + 1) ** -0.5 + 0j)[None, :]
        norms.append(graph_norm(m, PerturbationFactors(b, b), 0.0, 0.5))
    assert not refinement_stable(*norms)
    norms = []
    for n in (2000, 4000):
        m = build_diagonal_model("inverse", n)
        b = (np.arange(1, n + 1) ** -1.5 + 0j)[None, :]
        norms.append(graph_norm(m, PerturbationFactors(b, b), 0.0, 0.5))
    assert refinement_stable(*norms)
