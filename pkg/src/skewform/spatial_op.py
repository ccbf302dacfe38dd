"""Assembly of primal, dual, linearised, and remainder spatial operators.

The residual convention is

    R = spatial - SAT - forcing,      norm-matrix * u_t = -R,

so SAT penalties and forcing enter the tendency with a plus sign.  One
shared assembler produces every skew-form operator from a (coefficient
state, acted-on state) pair:

    nonlinear            (U, U)
    frozen               (V_fixed, U)
    perturbation eq      (mean, U')          which is the new linearisation
    mean eq              (mean + pert, mean)
    remainder H          increment matrices acting on U'
    dual                 minus the assembler output

Because the paths share code, the coupled mean/perturbation system with a
zero perturbation reproduces the nonlinear evaluation bit for bit.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from . import boundary as _boundary
from .models import ModelSpec, check_admissible, coeff_matrices, coeff_split
from .sbp_core import (
    Grid,
    apply_derivative,
    boundary_quadrature,
    face_label,
    faces,
    position_arrays,
)


@dataclass(frozen=True)
class CoeffMode:
    """How coefficient matrices are evaluated.

    kind is one of 'nonlinear', 'frozen', 'new_linearised',
    'standard_linearised', 'dual'.  field carries the fixed coefficient
    state where one is needed (frozen V, linearisation mean, dual V; a dual
    mode without a field uses the dual state itself, the self-adjoint case).
    """

    kind: str
    field: np.ndarray | None = None


def nonlinear() -> CoeffMode:
    return CoeffMode("nonlinear")


def frozen(v_field) -> CoeffMode:
    return CoeffMode("frozen", np.asarray(v_field, dtype=np.float64))


def new_linearised(mean_field) -> CoeffMode:
    return CoeffMode("new_linearised", np.asarray(mean_field, dtype=np.float64))


def standard_linearised(mean_field) -> CoeffMode:
    return CoeffMode("standard_linearised", np.asarray(mean_field, dtype=np.float64))


def dual(v_field=None) -> CoeffMode:
    if v_field is None:
        return CoeffMode("dual", None)
    return CoeffMode("dual", np.asarray(v_field, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class Residual:
    """Assembled spatial operator with its SAT and forcing parts.

    R = spatial - sat - forcing (missing parts treated as zero).
    face_terms maps face labels to the raw contraction
    boundary_quadrature(S, A_ax S) used by the energy bookkeeping.
    """

    R: np.ndarray
    spatial: np.ndarray
    sat: np.ndarray | None
    forcing: np.ndarray | None
    face_terms: dict


@functools.lru_cache(maxsize=64)
def _cached_positions(grid: Grid):
    return position_arrays(grid)


def _matfield_apply(M: np.ndarray, W: np.ndarray, transpose: bool = False) -> np.ndarray:
    """Pointwise matrix-vector product over the grid, fixed loop order."""
    nc = W.shape[0]
    out = np.zeros_like(W)
    for a in range(nc):
        for b in range(nc):
            m = M[b, a] if transpose else M[a, b]
            out[a] += m * W[b]
    return out


def _assemble(grid: Grid, ops, A: np.ndarray, C: np.ndarray, W: np.ndarray) -> np.ndarray:
    """sum_ax [ D_ax(A_ax W) + A_ax^T D_ax W ] + C W."""
    out = np.zeros_like(W)
    for ax in range(grid.dim):
        out += apply_derivative(ops[ax], _matfield_apply(A[ax], W), ax)
        out += _matfield_apply(A[ax], apply_derivative(ops[ax], W, ax), transpose=True)
    out += _matfield_apply(C, W)
    return out


def _face_terms(grid: Grid, ops, A: np.ndarray, S: np.ndarray) -> dict:
    terms = {}
    for ax in range(grid.dim):
        if grid.periodic[ax]:
            continue
        AS = _matfield_apply(A[ax], S)
        for side in ("low", "high"):
            face = (ax, side)
            terms[face_label(grid, face)] = boundary_quadrature(grid, ops, S, AS, face)
    return terms


def _total(spatial, sat, forcing):
    R = spatial
    if sat is not None:
        R = R - sat
    if forcing is not None:
        R = R - np.asarray(forcing, dtype=np.float64)
    return R


def eval_primal_residual(
    model: ModelSpec,
    grid: Grid,
    ops,
    U: np.ndarray,
    mode: CoeffMode,
    sat=None,
    forcing=None,
) -> Residual:
    """Evaluates the primal residual of the skew form in the given mode.

    Args:
        U: the acted-on state (the perturbation in new_linearised mode).
        mode: coefficient mode; dual is rejected here.
        sat: optional SatConfig of face closures.
        forcing: optional forcing field F.
    """
    U = np.asarray(U, dtype=np.float64)
    if mode.kind == "dual":
        raise ValueError("dual residuals come from eval_dual_residual")
    if mode.kind == "standard_linearised":
        return eval_standard_linearised_residual(model, grid, ops, U, mode.field,
                                                 sat=sat, forcing=forcing)
    if mode.kind == "nonlinear":
        V = U
    elif mode.kind in ("frozen", "new_linearised"):
        if mode.field is None:
            raise ValueError(f"{mode.kind} mode needs a coefficient field")
        V = mode.field
    else:
        raise ValueError(f"unknown coefficient mode '{mode.kind}'")
    check_admissible(model, V)
    pos = _cached_positions(grid)
    A, C = coeff_matrices(model, V, pos)
    spatial = _assemble(grid, ops, A, C, U)
    sat_field = _boundary.build_sat(model, grid, ops, U, sat) if sat is not None else None
    return Residual(
        R=_total(spatial, sat_field, forcing),
        spatial=spatial,
        sat=sat_field,
        forcing=None if forcing is None else np.asarray(forcing, dtype=np.float64),
        face_terms=_face_terms(grid, ops, A, U),
    )


def eval_dual_residual(
    model: ModelSpec,
    grid: Grid,
    ops,
    Phi: np.ndarray,
    mode: CoeffMode | None = None,
    sat=None,
    forcing=None,
) -> Residual:
    """Evaluates the dual residual -[ (A_i Phi)_{x_i} + A_i^T Phi_{x_i} + C Phi ].

    With no coefficient field the coefficients are evaluated at Phi itself
    (the self-adjoint case), and the spatial part is exactly the negated
    primal spatial part at the same state.
    """
    Phi = np.asarray(Phi, dtype=np.float64)
    if mode is None:
        mode = dual()
    if mode.kind not in ("dual", "frozen"):
        raise ValueError("dual residuals take a dual (or frozen) coefficient mode")
    V = Phi if mode.field is None else mode.field
    check_admissible(model, V)
    pos = _cached_positions(grid)
    A, C = coeff_matrices(model, V, pos)
    spatial = -_assemble(grid, ops, A, C, Phi)
    sat_field = _boundary.build_sat(model, grid, ops, Phi, sat) if sat is not None else None
    return Residual(
        R=_total(spatial, sat_field, forcing),
        spatial=spatial,
        sat=sat_field,
        forcing=None if forcing is None else np.asarray(forcing, dtype=np.float64),
        face_terms=_face_terms(grid, ops, A, Phi),
    )


def eval_new_linearised_pair(
    model: ModelSpec,
    grid: Grid,
    ops,
    U_bar: np.ndarray,
    U_prime: np.ndarray,
    sat_mean=None,
    sat_pert=None,
) -> tuple[Residual, Residual]:
    """Mean and perturbation residuals of the non-standard linearisation.

    The mean equation evaluates coefficients at the total state mean + pert
    and applies them to the mean; the perturbation equation evaluates them
    at the mean and applies them to the perturbation.  Together with the
    remainder H these reproduce the full nonlinear residual at the total
    state up to roundoff.
    """
    U_bar = np.asarray(U_bar, dtype=np.float64)
    U_prime = np.asarray(U_prime, dtype=np.float64)
    total = U_bar + U_prime
    check_admissible(model, total)
    check_admissible(model, U_bar)
    pos = _cached_positions(grid)

    A_tot, C_tot = coeff_matrices(model, total, pos)
    spatial_mean = _assemble(grid, ops, A_tot, C_tot, U_bar)
    sat_m = _boundary.build_sat(model, grid, ops, U_bar, sat_mean) if sat_mean is not None else None
    res_mean = Residual(
        R=_total(spatial_mean, sat_m, None),
        spatial=spatial_mean, sat=sat_m, forcing=None,
        face_terms=_face_terms(grid, ops, A_tot, U_bar),
    )

    A_bar, C_bar = coeff_matrices(model, U_bar, pos)
    spatial_pert = _assemble(grid, ops, A_bar, C_bar, U_prime)
    sat_p = _boundary.build_sat(model, grid, ops, U_prime, sat_pert) if sat_pert is not None else None
    res_pert = Residual(
        R=_total(spatial_pert, sat_p, None),
        spatial=spatial_pert, sat=sat_p, forcing=None,
        face_terms=_face_terms(grid, ops, A_bar, U_prime),
    )
    return res_mean, res_pert


def eval_remainder_H(
    model: ModelSpec,
    grid: Grid,
    ops,
    U_bar: np.ndarray,
    U_prime: np.ndarray,
) -> np.ndarray:
    """The linearisation remainder H built from increment matrices.

    H = sum_ax [ D_ax(A'_ax U') + A'_ax^T D_ax U' ] + C' U' with
    A' = A(mean + pert) - A(mean).  full = mean-eq + pert-eq + H up to
    roundoff, and H is quadratic in the perturbation whenever the
    coefficients are linear in the state.
    """
    U_bar = np.asarray(U_bar, dtype=np.float64)
    U_prime = np.asarray(U_prime, dtype=np.float64)
    pos = _cached_positions(grid)
    split = coeff_split(model, U_bar, U_prime, pos)
    return _assemble(grid, ops, split.A_prime, split.C_prime, U_prime)


def eval_standard_linearised_residual(
    model: ModelSpec,
    grid: Grid,
    ops,
    U_prime: np.ndarray,
    mean: np.ndarray,
    sat=None,
    forcing=None,
) -> Residual:
    """The textbook advective linearisation about a frozen mean.

    Supported for burgers1d and swe2d only.  For swe2d both the mean and
    the perturbation are primitive fields (phi, u, v); the operator is
    M1(mean) d_x q' + M2(mean) d_y q' + N q' with N collecting the
    mean-gradient and Coriolis zero-order terms.  This operator is not in
    skew form; its face_terms use the transport matrices M_ax / 2 and are
    bookkeeping only.
    """
    U_prime = np.asarray(U_prime, dtype=np.float64)
    if mean is None:
        raise ValueError("standard linearisation needs a mean field")
    mean = np.asarray(mean, dtype=np.float64)
    if model.kind == "burgers1d":
        du = apply_derivative(ops[0], U_prime, 0)
        dm = apply_derivative(ops[0], mean, 0)
        spatial = mean * du + dm * U_prime
        M = mean[None]  # (1, 1, n) transport matrix field
    elif model.kind == "swe2d":
        M, N = _swe_standard_matrices(model, grid, ops, mean)
        spatial = np.zeros_like(U_prime)
        for ax in range(2):
            spatial += _matfield_apply(M[ax], apply_derivative(ops[ax], U_prime, ax))
        spatial += _matfield_apply(N, U_prime)
    else:
        raise ValueError(
            f"standard linearisation covers burgers1d and swe2d, not '{model.kind}'"
        )
    half_M = 0.5 * M
    sat_field = _boundary.build_sat(model, grid, ops, U_prime, sat) if sat is not None else None
    return Residual(
        R=_total(spatial, sat_field, forcing),
        spatial=spatial,
        sat=sat_field,
        forcing=None if forcing is None else np.asarray(forcing, dtype=np.float64),
        face_terms=_face_terms(grid, ops, half_M if model.kind == "swe2d" else half_M[None],
                               U_prime),
    )


def _swe_standard_matrices(model: ModelSpec, grid: Grid, ops, qbar: np.ndarray):
    """Advective matrices M1, M2 and zero-order N at a primitive mean."""
    phib, ub, vb = qbar[0], qbar[1], qbar[2]
    M = np.zeros((2, 3, 3) + grid.shape)
    M[0, 0, 0] = ub
    M[0, 0, 1] = phib
    M[0, 1, 0] = 1.0
    M[0, 1, 1] = ub
    M[0, 2, 2] = ub
    M[1, 0, 0] = vb
    M[1, 0, 2] = phib
    M[1, 1, 1] = vb
    M[1, 2, 0] = 1.0
    M[1, 2, 2] = vb

    dqx = apply_derivative(ops[0], qbar, 0)
    dqy = apply_derivative(ops[1], qbar, 1)
    f = model.f0
    if model.f1 != 0.0:
        pos = _cached_positions(grid)
        f = model.f0 + model.f1 * pos[1]
    N = np.zeros((3, 3) + grid.shape)
    N[0, 0] = dqx[1] + dqy[2]
    N[0, 1] = dqx[0]
    N[0, 2] = dqy[0]
    N[1, 1] = dqx[1]
    N[1, 2] = dqy[1] - f
    N[2, 1] = dqx[2] + f
    N[2, 2] = dqy[2]
    return M, N


def bilinear_face_functional(
    model: ModelSpec,
    grid: Grid,
    ops,
    U: np.ndarray,
    Phi: np.ndarray,
    V: np.ndarray,
) -> float:
    """Boundary functional pairing primal and dual solutions.

    Returns sum over axes and faces of
    bq(Phi, A_ax U) + bq(A_ax Phi, U) with coefficients at V, which equals
    ip(Phi, R_primal(U; V)) - ip(U, R_dual_spatial(Phi; V)) up to roundoff
    and collapses to twice the energy-identity flux at Phi = U.
    """
    pos = _cached_positions(grid)
    A, _ = coeff_matrices(model, V, pos)
    total = 0.0
    for ax in range(grid.dim):
        if grid.periodic[ax]:
            continue
        AU = _matfield_apply(A[ax], U)
        APhi = _matfield_apply(A[ax], Phi)
        for side in ("low", "high"):
            face = (ax, side)
            total += boundary_quadrature(grid, ops, Phi, AU, face)
            total += boundary_quadrature(grid, ops, APhi, U, face)
    return total
