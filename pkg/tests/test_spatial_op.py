"""Tests for the discrete spatial operator and its linearisations."""

import numpy as np
import pytest

import skewform as sk
from skewform.models import make_model, sample_state
from skewform.sbp_core import apply_derivative, build_operators, inner_product, make_grid
from skewform.spatial_op import (
    bilinear_face_functional,
    dual,
    eval_dual_residual,
    eval_new_linearised_pair,
    eval_primal_residual,
    eval_remainder_H,
    eval_standard_linearised_residual,
    frozen,
    new_linearised,
    nonlinear,
    standard_linearised,
)

ORDERS = [(2, 1), (4, 2)]


def small_setup(kind, order, seed):
    m = sk.make_model(kind) if kind != "swe2d" else sk.make_model(
        "swe2d", alpha=0.4, beta=0.7, f0=0.7, f1=0.3)
    if kind == "burgers1d":
        g = make_grid(((0.0, 1.0),), (14,))
    elif kind == "euler2d":
        g = make_grid(((0.0, 1.0), (0.0, 1.0)), (9, 8))
    elif kind == "euler3d_cyl":
        g = make_grid(((0.3, 1.3), (0.0, 1.0), (0.0, 1.0)), (8, 8, 8),
                      periodic=(False, False, True), axis_names=m.axis_names)
    else:
        g = make_grid(((0.0, 1.0), (0.0, 1.0)), (8, 9), periodic=(False, True))
    ops = build_operators(g, order)
    rng = np.random.default_rng(seed)
    return m, g, ops, rng


def test_frozen_coefficients_at_the_state_match_nonlinear_bitwise():
    for kind in ("burgers1d", "euler2d", "euler3d_cyl", "swe2d"):
        m, g, ops, rng = small_setup(kind, (4, 2), 21)
        U = sample_state(m, g.shape, rng)
        a = eval_primal_residual(m, g, ops, U, nonlinear())
        b = eval_primal_residual(m, g, ops, U, frozen(U))
        assert np.array_equal(a.spatial, b.spatial), kind
        assert np.array_equal(a.R, b.R), kind


def test_dual_spatial_part_is_the_bitwise_negation_of_the_primal():
    for kind in ("burgers1d", "euler2d", "euler3d_cyl", "swe2d"):
        for order in ORDERS:
            m, g, ops, rng = small_setup(kind, order, 23)
            U = sample_state(m, g.shape, rng)
            V = sample_state(m, g.shape, rng)
            rp = eval_primal_residual(m, g, ops, U, frozen(V))
            rd = eval_dual_residual(m, g, ops, U, mode=dual(V))
            assert np.array_equal(rd.spatial, -rp.spatial), (kind, order)


def test_dual_defaults_to_self_adjoint_coefficients():
    m, g, ops, rng = small_setup("burgers1d", (4, 2), 24)
    U = sample_state(m, g.shape, rng)
    a = eval_dual_residual(m, g, ops, U)
    b = eval_dual_residual(m, g, ops, U, mode=dual(U))
    assert np.array_equal(a.spatial, b.spatial)


def test_duality_gap_equals_the_face_functional():
    for kind in ("burgers1d", "euler2d", "euler3d_cyl", "swe2d"):
        for order in ORDERS:
            m, g, ops, rng = small_setup(kind, order, 25)
            for trial in range(10):
                U = sample_state(m, g.shape, rng)
                Phi = rng.normal(size=U.shape)
                V = sample_state(m, g.shape, rng)
                rp = eval_primal_residual(m, g, ops, U, frozen(V))
                rd = eval_dual_residual(m, g, ops, Phi, mode=dual(V))
                gap = inner_product(g, ops, Phi, rp.spatial) - inner_product(
                    g, ops, U, rd.spatial)
                bf = bilinear_face_functional(m, g, ops, U, Phi, V)
                scale = 1.0 + abs(gap) + abs(bf)
                assert abs(gap - bf) <= 1e-12 * scale, (kind, order, trial)


def test_face_functional_vanishes_on_fully_periodic_grids():
    m = sk.make_model("burgers1d")
    g = make_grid(((0.0, 1.0),), (16,), periodic=(True,))
    ops = build_operators(g, (4, 2))
    rng = np.random.default_rng(27)
    U = rng.normal(size=(1, 16))
    Phi = rng.normal(size=(1, 16))
    assert bilinear_face_functional(m, g, ops, U, Phi, U) == 0.0
    r = eval_primal_residual(m, g, ops, U, nonlinear())
    assert r.face_terms == {}


def test_face_terms_cover_exactly_the_nonperiodic_faces():
    m, g, ops, rng = small_setup("swe2d", (2, 1), 28)
    U = sample_state(m, g.shape, rng)
    r = eval_primal_residual(m, g, ops, U, nonlinear())
    assert sorted(r.face_terms) == ["x_high", "x_low"]


def test_new_linearised_pair_degenerates_bitwise_at_zero_perturbation():
    for kind in ("burgers1d", "swe2d"):
        m, g, ops, rng = small_setup(kind, (4, 2), 29)
        Ub = sample_state(m, g.shape, rng)
        rm, rp = eval_new_linearised_pair(m, g, ops, Ub, np.zeros_like(Ub))
        full = eval_primal_residual(m, g, ops, Ub, nonlinear())
        assert np.array_equal(rm.R, full.R), kind
        assert not rp.R.any(), kind


def test_decomposition_closes_with_the_remainder():
    # total spatial operator at mean+pert = mean part + linearised part + H
    for kind in ("burgers1d", "euler2d", "euler3d_cyl", "swe2d"):
        for order in ORDERS:
            m, g, ops, rng = small_setup(kind, order, 31)
            for trial in range(5):
                Ub = sample_state(m, g.shape, rng)
                Up = 0.1 * sample_state(m, g.shape, rng)
                total = eval_primal_residual(m, g, ops, Ub + Up, nonlinear())
                rm, rp = eval_new_linearised_pair(m, g, ops, Ub, Up)
                H = eval_remainder_H(m, g, ops, Ub, Up)
                defect = total.spatial - (rm.spatial + rp.spatial + H)
                scale = 1.0 + np.max(np.abs(total.spatial))
                assert np.max(np.abs(defect)) <= 1e-12 * scale, (kind, order)


def test_remainder_is_exactly_quadratic_for_burgers():
    # halving the perturbation by a power of two scales H by exactly 1/4
    m, g, ops, rng = small_setup("burgers1d", (4, 2), 33)
    Ub = sample_state(m, g.shape, rng)
    Up = rng.normal(size=Ub.shape)
    H1 = eval_remainder_H(m, g, ops, Ub, Up)
    H2 = eval_remainder_H(m, g, ops, Ub, 0.5 * Up)
    assert np.array_equal(H2, 0.25 * H1)


def test_standard_linearised_burgers_matches_the_textbook_formula():
    m, g, ops, rng = small_setup("burgers1d", (4, 2), 35)
    mean = sample_state(m, g.shape, rng)
    up = rng.normal(size=mean.shape)
    r = eval_standard_linearised_residual(m, g, ops, up, mean)
    manual = mean * apply_derivative(ops[0], up, axis=0) + apply_derivative(
        ops[0], mean, axis=0) * up
    assert np.max(np.abs(r.spatial - manual)) <= 1e-13 * (1 + np.max(np.abs(manual)))


def test_standard_linearised_is_reachable_through_the_mode_object():
    m, g, ops, rng = small_setup("burgers1d", (2, 1), 36)
    mean = sample_state(m, g.shape, rng)
    up = rng.normal(size=mean.shape)
    a = eval_primal_residual(m, g, ops, up, standard_linearised(mean))
    b = eval_standard_linearised_residual(m, g, ops, up, mean)
    assert np.array_equal(a.spatial, b.spatial)


def test_forcing_is_subtracted_from_the_residual():
    m, g, ops, rng = small_setup("burgers1d", (2, 1), 37)
    U = sample_state(m, g.shape, rng)
    F = rng.normal(size=U.shape)
    r0 = eval_primal_residual(m, g, ops, U, nonlinear())
    r1 = eval_primal_residual(m, g, ops, U, nonlinear(), forcing=F)
    assert np.array_equal(r1.R, r0.R - F)
    assert np.array_equal(r1.forcing, F)


def test_mode_objects_validate_their_inputs():
    m, g, ops, rng = small_setup("burgers1d", (2, 1), 38)
    U = sample_state(m, g.shape, rng)
    with pytest.raises(ValueError):
        eval_primal_residual(m, g, ops, U, dual(U))
    with pytest.raises(ValueError):
        eval_primal_residual(m, g, ops, U, frozen(np.ones((1, 3))))


def test_shape_mismatch_is_rejected():
    m, g, ops, rng = small_setup("swe2d", (2, 1), 39)
    with pytest.raises(ValueError):
        eval_primal_residual(m, g, ops, np.ones((2,) + g.shape), nonlinear())
