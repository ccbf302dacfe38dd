"""Tests for the model coefficient matrices and state utilities."""

import numpy as np
import pytest

import skewform as sk
from skewform.models import (
    check_admissible,
    coeff_matrices,
    coeff_split,
    has_invertible_norm,
    make_model,
    norm_weight,
    sample_state,
    swe_inverse,
    swe_quasilinear,
    swe_transform,
    validate_grid,
    wavespeeds,
    with_params,
)
from skewform.sbp_core import make_grid, position_arrays

ALL_KINDS = ("burgers1d", "euler2d", "euler3d_cyl", "swe2d")


def matvec(M, w):
    return np.einsum("ij...,j...->i...", M, w)


def test_make_model_rejects_unknown_kind_and_stray_params():
    with pytest.raises(ValueError, match="unknown model"):
        make_model("advection")
    with pytest.raises(ValueError, match="does not accept parameters"):
        make_model("burgers1d", alpha=0.5)
    m = make_model("swe2d", alpha=0.25, beta=0.75, f0=1.0, f1=0.5)
    assert (m.alpha, m.beta, m.f0, m.f1) == (0.25, 0.75, 1.0, 0.5)


def test_with_params_swaps_splitting_parameters():
    m = make_model("swe2d", alpha=0.25)
    m2 = with_params(m, alpha=0.5, f0=2.0)
    assert m2.alpha == 0.5 and m2.f0 == 2.0 and m2.beta == m.beta
    with pytest.raises(ValueError):
        with_params(make_model("burgers1d"), alpha=0.5)


def test_burgers_coefficient_is_a_third_of_the_state():
    m = make_model("burgers1d")
    V = np.array([[0.9, -0.3, 0.0]])
    A, C = coeff_matrices(m, V)
    assert A.shape == (1, 1, 1, 3)
    assert np.array_equal(A[0, 0, 0], V[0] / 3.0)
    assert not C.any()


def test_euler2d_pinned_coefficient():
    m = make_model("euler2d")
    V = np.ones((3, 1))
    A, C = coeff_matrices(m, V)
    assert np.array_equal(A[0][..., 0], 0.5 * np.array([[1, 0, 1], [0, 1, 0], [1, 0, 0]]))
    assert np.array_equal(A[1][..., 0], 0.5 * np.array([[1, 0, 0], [0, 1, 1], [0, 1, 0]]))
    assert not C.any()


def test_swe_pinned_coefficient_and_coriolis_skewness():
    m = make_model("swe2d", alpha=1.0, beta=0.0, f0=0.7, f1=0.3)
    V = np.zeros((3, 2, 2))
    V[0] = 1.0
    pos = position_arrays(make_grid(((0.0, 1.0), (0.0, 1.0)), (2, 2)))
    A, C = coeff_matrices(m, V, pos=pos)
    assert np.array_equal(A[0][..., 0, 0], np.array([[0.0, -2.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))
    # C + C^T = 0 exactly, with f = f0 + f1*y entering the (1,2) block
    CT = np.swapaxes(C, 0, 1)
    assert np.array_equal(C + CT, np.zeros_like(C))
    assert np.array_equal(C[2, 1], 0.7 + 0.3 * pos[1])


def test_swe_with_linear_coriolis_needs_positions():
    m = make_model("swe2d", f1=0.5)
    V = np.zeros((3, 2, 2))
    V[0] = 1.0
    with pytest.raises(ValueError, match="needs pos"):
        coeff_matrices(m, V)


def test_cylindrical_coefficients_scale_with_radius():
    m = make_model("euler3d_cyl")
    V = np.array([[1.0], [0.5], [0.2], [0.3]])
    pos = (np.array([0.8]), np.array([0.0]), np.array([0.0]))
    A, C = coeff_matrices(m, V, pos=pos)
    # radial block is r/2 times the constant-coefficient pattern
    r = 0.8
    expected = (r / 2.0) * np.array(
        [[1.0, 0, 0, 1], [0, 1.0, 0, 0], [0, 0, 1.0, 0], [1, 0, 0, 0]]
    )
    assert np.max(np.abs(A[0][..., 0] - expected)) <= 1e-15
    # zero-order term is skew
    CT = np.swapaxes(C, 0, 1)
    assert np.array_equal(C + CT, np.zeros_like(C))
    with pytest.raises(ValueError, match="needs pos"):
        coeff_matrices(m, V)


def test_cylindrical_norm_weight_carries_the_radius():
    m = make_model("euler3d_cyl")
    g = make_grid(((0.3, 1.3), (0.0, 1.0), (0.0, 1.0)), (4, 4, 4),
                  periodic=(False, False, True), axis_names=m.axis_names)
    W = norm_weight(m, g)
    R = position_arrays(g)[0]
    assert W.shape == (4, 4, 4, 4, 4)
    for c in range(3):
        assert np.array_equal(W[c, c], R)
    assert not W[3, 3].any()


def test_norm_weight_identity_and_seminorm():
    gb = make_grid(((0.0, 1.0),), (5,))
    Wb = norm_weight(make_model("burgers1d"), gb)
    assert np.array_equal(Wb[0, 0], np.ones(5))
    ge = make_grid(((0.0, 1.0), (0.0, 1.0)), (4, 4))
    We = norm_weight(make_model("euler2d"), ge)
    assert np.array_equal(We[0, 0], np.ones((4, 4)))
    assert np.array_equal(We[1, 1], np.ones((4, 4)))
    assert not We[2, 2].any()
    assert has_invertible_norm(make_model("burgers1d"))
    assert has_invertible_norm(make_model("swe2d"))
    assert not has_invertible_norm(make_model("euler2d"))
    assert not has_invertible_norm(make_model("euler3d_cyl"))


def test_square_root_transform_round_trip():
    rng = np.random.default_rng(3)
    for trial in range(20):
        phi = 0.5 + rng.uniform(0.0, 2.0, (6, 5))
        u = rng.normal(size=(6, 5))
        v = rng.normal(size=(6, 5))
        U = swe_transform(phi, u, v)
        assert np.array_equal(U[0], phi)
        phi2, u2, v2 = swe_inverse(U)
        assert np.max(np.abs(u2 - u)) <= 1e-14
        assert np.max(np.abs(v2 - v)) <= 1e-14
    with pytest.raises(ValueError):
        swe_transform(np.array([-1.0]), np.array([0.0]), np.array([0.0]))


def test_quasilinear_matrices_match_a_finite_difference_jacobian():
    # the target matrices must satisfy  J_flux(U) w + A_ax(U)^T w = Aq_ax(U) w
    # for every direction w and every choice of the splitting parameters,
    # where J_flux is the Jacobian of U -> A_ax(U) U.
    rng = np.random.default_rng(5)
    eps = 1e-6
    for alpha in (0.0, 0.37, 1.0):
        for beta in (0.0, 0.61, 1.0):
            m = make_model("swe2d", alpha=alpha, beta=beta)
            for trial in range(10):
                U = sample_state(m, (3,), rng)
                w = rng.normal(size=U.shape)
                Aq = swe_quasilinear(U)
                for ax in range(2):
                    def flux(state):
                        A, _ = coeff_matrices(m, state)
                        return matvec(A[ax], state)

                    jw = (flux(U + eps * w) - flux(U - eps * w)) / (2.0 * eps)
                    A, _ = coeff_matrices(m, U)
                    lhs = jw + matvec(np.swapaxes(A[ax], 0, 1), w)
                    rhs = matvec(Aq[ax], w)
                    assert np.max(np.abs(lhs - rhs)) <= 5e-8, (alpha, beta, ax)


def test_quasilinear_matrices_pinned_at_a_hand_checked_state():
    # U = (4, 6, 2): root = 2, u = 3, v = 1.  Entries worked out by hand from
    # the quasilinear form of the square-root variables.
    U = np.array([[4.0], [6.0], [2.0]])
    Aq1, Aq2 = swe_quasilinear(U)
    want1 = np.array([[1.5, 2.0, 0.0], [0.875, 4.5, 0.0], [-0.375, 0.5, 3.0]])
    want2 = np.array([[0.5, 0.0, 2.0], [-0.375, 1.0, 1.5], [1.875, 0.0, 1.5]])
    assert np.max(np.abs(Aq1[..., 0] - want1)) <= 1e-15
    assert np.max(np.abs(Aq2[..., 0] - want2)) <= 1e-15


def test_coefficient_split_burgers_increment_is_analytic():
    m = make_model("burgers1d")
    rng = np.random.default_rng(9)
    Ub = rng.normal(size=(1, 7))
    Up = rng.normal(size=(1, 7))
    cs = coeff_split(m, Ub, Up)
    A_base, _ = coeff_matrices(m, Ub)
    A_prime, _ = coeff_matrices(m, Up)
    assert np.array_equal(cs.A_bar, A_base)
    assert np.array_equal(cs.A_prime, A_prime)


def test_coefficient_split_is_exact_for_the_swe_total():
    # A(total) = A(mean) + increment must hold to roundoff
    m = make_model("swe2d", alpha=0.3, beta=0.8)
    rng = np.random.default_rng(10)
    Ub = sample_state(m, (4, 3), rng)
    Up = 0.05 * rng.normal(size=Ub.shape)
    cs = coeff_split(m, Ub, Up)
    A_tot, _ = coeff_matrices(m, Ub + Up)
    assert np.max(np.abs(cs.A_bar + cs.A_prime - A_tot)) <= 1e-13


def test_wavespeeds_burgers():
    m = make_model("burgers1d")
    s = wavespeeds(m, np.array([[0.9, -0.5]]))
    assert len(s) == 1
    assert abs(s[0] - 0.3) <= 1e-15


def test_admissibility_and_sampling():
    rng = np.random.default_rng(12)
    for kind in ALL_KINDS:
        m = make_model(kind)
        U = sample_state(m, (6,), rng)
        assert U.shape == (m.n_comp, 6)
        check_admissible(m, U)
    ms = make_model("swe2d")
    bad = np.zeros((3, 2))
    with pytest.raises(ValueError, match="depth"):
        check_admissible(ms, bad)
    for trial in range(50):
        U = sample_state(ms, (), rng)
        assert U[0] >= 0.5 and U[0] <= 2.0


def test_validate_grid_checks_dimension_and_cylindrical_radius():
    m2 = make_model("euler2d")
    g1 = make_grid(((0.0, 1.0),), (8,))
    with pytest.raises(ValueError):
        validate_grid(m2, g1)
    mc = make_model("euler3d_cyl")
    gneg = make_grid(((-0.1, 1.0), (0.0, 1.0), (0.0, 1.0)), (4, 4, 4),
                     axis_names=mc.axis_names)
    with pytest.raises(ValueError):
        validate_grid(mc, gneg)
    gok = make_grid(((0.3, 1.3), (0.0, 1.0), (0.0, 1.0)), (4, 4, 4),
                    periodic=(False, False, True), axis_names=mc.axis_names)
    validate_grid(mc, gok)
