"""Model catalogue: coefficient matrices of the skew-symmetric first-order form.

Every model writes its governing system as

    P u_t + sum_i [ (A_i(V) u)_{x_i} + A_i(V)^T u_{x_i} ] + C(V) u = F,

with C + C^T = 0, where V is the coefficient state (V = u nonlinear, V fixed
frozen, V = mean for the perturbation equation).  The catalogue:

    burgers1d    u               A = v/3                          P = 1
    euler2d      (u, v, p)       A1 = A/2, A2 = B/2               P = diag(1,1,0)
    euler3d_cyl  (u, v, w, p)    A_r = rA/2, A_th = B/2,          P = r diag(1,1,1,0)
                                 A_z = rC/2, skew zero-order term
    swe2d        (phi, sqrt(phi)u, sqrt(phi)v)
                                 one-parameter families A1(alpha),
                                 A2(beta), Coriolis skew term      P = I

The shallow water model works in transformed variables whose squared norm is
twice the energy density; alpha and beta parametrise valid splittings that
all produce the same boundary contraction.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .sbp_core import Grid

MODEL_KINDS = ("burgers1d", "euler2d", "euler3d_cyl", "swe2d")

_AXIS_NAMES = {
    "burgers1d": ("x",),
    "euler2d": ("x", "y"),
    "euler3d_cyl": ("r", "theta", "z"),
    "swe2d": ("x", "y"),
}

_N_COMP = {"burgers1d": 1, "euler2d": 3, "euler3d_cyl": 4, "swe2d": 3}
_DIM = {"burgers1d": 1, "euler2d": 2, "euler3d_cyl": 3, "swe2d": 2}

# Depth floor for the shallow water transform; sqrt and 1/sqrt must stay
# well conditioned.
_DEPTH_FLOOR = 1e-10


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    n_comp: int
    dim: int
    axis_names: tuple[str, ...]
    alpha: float = 1.0
    beta: float = 1.0
    f0: float = 0.0
    f1: float = 0.0


@dataclass(frozen=True, eq=False)
class CoefficientSplit:
    """Mean and increment coefficient matrices about a mean state."""

    A_bar: np.ndarray
    C_bar: np.ndarray
    A_prime: np.ndarray
    C_prime: np.ndarray


def make_model(kind: str, **params) -> ModelSpec:
    """Builds a model spec.

    Args:
        kind: one of MODEL_KINDS.
        params: swe2d accepts alpha, beta (splitting parameters) and
            f0, f1 for the Coriolis profile f(y) = f0 + f1 y.  Other kinds
            accept no parameters.
    """
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model '{kind}'; try one of {MODEL_KINDS}")
    allowed = {"alpha", "beta", "f0", "f1"} if kind == "swe2d" else set()
    unknown = set(params) - allowed
    if unknown:
        raise ValueError(f"model '{kind}' does not accept parameters {sorted(unknown)}")
    return ModelSpec(
        kind=kind,
        n_comp=_N_COMP[kind],
        dim=_DIM[kind],
        axis_names=_AXIS_NAMES[kind],
        **{k: float(v) for k, v in params.items()},
    )


def with_params(model: ModelSpec, **params) -> ModelSpec:
    if model.kind != "swe2d" and params:
        raise ValueError(f"model '{model.kind}' does not accept parameters")
    return replace(model, **{k: float(v) for k, v in params.items()})


def validate_grid(model: ModelSpec, grid: Grid) -> None:
    if grid.dim != model.dim:
        raise ValueError(
            f"model '{model.kind}' is {model.dim}D but the grid is {grid.dim}D"
        )
    if model.kind == "euler3d_cyl" and grid.extents[0][0] <= 0.0:
        raise ValueError("cylindrical grids need r_min > 0")


def _as_state(model: ModelSpec, V) -> np.ndarray:
    V = np.asarray(V, dtype=np.float64)
    if V.ndim == 0 or V.shape[0] != model.n_comp:
        raise ValueError(
            f"model '{model.kind}' states have {model.n_comp} leading components,"
            f" got shape {V.shape}"
        )
    return V


def check_admissible(model: ModelSpec, V) -> None:
    """Raises if V leaves the model's admissible set (swe2d depth floor)."""
    V = _as_state(model, V)
    if model.kind == "swe2d":
        dmin = float(np.min(V[0]))
        if not dmin > _DEPTH_FLOOR:
            raise ValueError(
                f"shallow water depth variable must exceed {_DEPTH_FLOOR}, min is {dmin}"
            )
    if not np.all(np.isfinite(V)):
        raise ValueError("state contains non-finite entries")


def coeff_matrices(model: ModelSpec, V, pos=None):
    """Coefficient matrices at the state V.

    Args:
        V: coefficient state, shape (n_comp, *s) where s may be empty for a
           single point.
        pos: per-axis coordinate arrays broadcastable to s.  Required for
           euler3d_cyl (radius) and for swe2d when f1 is nonzero.

    Returns:
        (A, C): A of shape (dim, n_comp, n_comp, *s) and C of shape
        (n_comp, n_comp, *s); C is skew per node.
    """
    V = _as_state(model, V)
    s = V.shape[1:]
    nc = model.n_comp
    A = np.zeros((model.dim, nc, nc) + s)
    C = np.zeros((nc, nc) + s)

    if model.kind == "burgers1d":
        A[0, 0, 0] = V[0] / 3.0
        return A, C

    if model.kind == "euler2d":
        u, v = V[0], V[1]
        A[0, 0, 0] = u / 2.0
        A[0, 1, 1] = u / 2.0
        A[0, 0, 2] = 0.5
        A[0, 2, 0] = 0.5
        A[1, 0, 0] = v / 2.0
        A[1, 1, 1] = v / 2.0
        A[1, 1, 2] = 0.5
        A[1, 2, 1] = 0.5
        return A, C

    if model.kind == "euler3d_cyl":
        if pos is None:
            raise ValueError("euler3d_cyl needs pos with the radius array")
        r = np.asarray(pos[0], dtype=np.float64)
        u, v, w = V[0], V[1], V[2]
        hr = r / 2.0
        A[0, 0, 0] = hr * u
        A[0, 1, 1] = hr * u
        A[0, 2, 2] = hr * u
        A[0, 0, 3] = hr
        A[0, 3, 0] = hr
        A[1, 0, 0] = v / 2.0
        A[1, 1, 1] = v / 2.0
        A[1, 2, 2] = v / 2.0
        A[1, 1, 3] = 0.5
        A[1, 3, 1] = 0.5
        A[2, 0, 0] = hr * w
        A[2, 1, 1] = hr * w
        A[2, 2, 2] = hr * w
        A[2, 2, 3] = hr
        A[2, 3, 2] = hr
        C[0, 1] = -v
        C[1, 0] = v
        C[0, 3] = np.broadcast_to(-0.5, s)
        C[3, 0] = np.broadcast_to(0.5, s)
        return A, C

    # swe2d
    check_admissible(model, V)
    root = np.sqrt(V[0])
    a, b = model.alpha, model.beta
    A[0, 0, 0] = a * V[1] / root
    A[0, 0, 1] = (1.0 - 3.0 * a) * root
    A[0, 1, 0] = 2.0 * a * root
    A[0, 1, 1] = V[1] / (2.0 * root)
    A[0, 2, 2] = V[1] / (2.0 * root)
    A[1, 0, 0] = b * V[2] / root
    A[1, 0, 2] = (1.0 - 3.0 * b) * root
    A[1, 2, 0] = 2.0 * b * root
    A[1, 1, 1] = V[2] / (2.0 * root)
    A[1, 2, 2] = V[2] / (2.0 * root)
    f = model.f0
    if model.f1 != 0.0:
        if pos is None:
            raise ValueError("swe2d with f1 != 0 needs pos with the y array")
        f = model.f0 + model.f1 * np.asarray(pos[1], dtype=np.float64)
    C[1, 2] = np.broadcast_to(-np.asarray(f, dtype=np.float64), s)
    C[2, 1] = np.broadcast_to(np.asarray(f, dtype=np.float64), s)
    return A, C


def norm_weight(model: ModelSpec, grid: Grid, pos=None) -> np.ndarray:
    """Per-node norm matrix field P, shape (n_comp, n_comp, *grid.shape).

    Singular for the euler models (pressure carries no norm weight); the
    cylindrical model includes the radius factor.
    """
    validate_grid(model, grid)
    nc = model.n_comp
    W = np.zeros((nc, nc) + grid.shape)
    if model.kind == "burgers1d":
        W[0, 0] = 1.0
    elif model.kind == "euler2d":
        W[0, 0] = 1.0
        W[1, 1] = 1.0
    elif model.kind == "euler3d_cyl":
        if pos is None:
            reshape = (grid.shape[0], 1, 1)
            r = grid.coords[0].reshape(reshape)
        else:
            r = np.asarray(pos[0], dtype=np.float64)
        for c in range(3):
            W[c, c] = np.broadcast_to(r, grid.shape)
    else:
        for c in range(3):
            W[c, c] = 1.0
    return W


def has_invertible_norm(model: ModelSpec) -> bool:
    return model.kind in ("burgers1d", "swe2d")


def swe_transform(phi, u, v) -> np.ndarray:
    """Primitive (phi, u, v) to transformed variables (phi, sqrt(phi)u, sqrt(phi)v)."""
    phi = np.asarray(phi, dtype=np.float64)
    if np.min(phi) <= _DEPTH_FLOOR:
        raise ValueError("phi must be positive for the square-root transform")
    root = np.sqrt(phi)
    return np.stack([phi, root * np.asarray(u, float), root * np.asarray(v, float)])


def swe_inverse(U) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Transformed variables back to primitive (phi, u, v)."""
    U = np.asarray(U, dtype=np.float64)
    if np.min(U[0]) <= _DEPTH_FLOOR:
        raise ValueError("depth variable must be positive")
    root = np.sqrt(U[0])
    return U[0], U[1] / root, U[2] / root


def swe_quasilinear(U) -> tuple[np.ndarray, np.ndarray]:
    """Quasilinear target matrices of the transformed shallow water system.

    For smooth fields, (A1(U) U)_x + A1(U)^T U_x equals calA(U) U_x with the
    first matrix returned here, and likewise in y with the second; this is
    the identity behind the splitting ansatz and holds for every alpha, beta.
    """
    U = np.asarray(U, dtype=np.float64)
    root = np.sqrt(U[0])
    r3 = U[0] * root
    s = U.shape[1:]
    calA = np.zeros((3, 3) + s)
    calB = np.zeros((3, 3) + s)

    calA[0, 0] = U[1] / (2.0 * root)
    calA[0, 1] = root
    calA[1, 0] = root - U[1] ** 2 / (4.0 * r3)
    calA[1, 1] = 3.0 * U[1] / (2.0 * root)
    calA[2, 0] = -U[1] * U[2] / (4.0 * r3)
    calA[2, 1] = U[2] / (2.0 * root)
    calA[2, 2] = U[1] / root

    calB[0, 0] = U[2] / (2.0 * root)
    calB[0, 2] = root
    calB[1, 0] = -U[1] * U[2] / (4.0 * r3)
    calB[1, 1] = U[2] / root
    calB[1, 2] = U[1] / (2.0 * root)
    calB[2, 0] = root - U[2] ** 2 / (4.0 * r3)
    calB[2, 2] = 3.0 * U[2] / (2.0 * root)
    return calA, calB


def coeff_split(model: ModelSpec, U_bar, U_prime, pos=None) -> CoefficientSplit:
    """Coefficients at the mean and their increment to the total state.

    A_prime = A(mean + pert) - A(mean) entry for entry; for burgers1d the
    coefficient is linear in the state, so the increment is evaluated
    directly as A(pert), which scales exactly under scaling of the
    perturbation.
    """
    U_bar = _as_state(model, U_bar)
    U_prime = _as_state(model, U_prime)
    A_bar, C_bar = coeff_matrices(model, U_bar, pos)
    if model.kind == "burgers1d":
        A_prime, C_prime = coeff_matrices(model, U_prime, pos)
    else:
        A_tot, C_tot = coeff_matrices(model, U_bar + U_prime, pos)
        A_prime = A_tot - A_bar
        C_prime = C_tot - C_bar
    return CoefficientSplit(A_bar=A_bar, C_bar=C_bar, A_prime=A_prime, C_prime=C_prime)


def wavespeeds(model: ModelSpec, V, pos=None) -> tuple[float, ...]:
    """Per-axis max spectral radius of A_i(V) over all nodes (CFL estimate)."""
    V = _as_state(model, V)
    A, _ = coeff_matrices(model, V, pos)
    out = []
    for ax in range(model.dim):
        M = A[ax]
        if model.n_comp == 1:
            out.append(float(np.max(np.abs(M[0, 0]))))
            continue
        stacked = np.moveaxis(M.reshape(model.n_comp, model.n_comp, -1), -1, 0)
        eig = np.linalg.eigvals(stacked)
        out.append(float(np.max(np.abs(eig))))
    return tuple(out)


def sample_state(model: ModelSpec, shape, rng) -> np.ndarray:
    """Random admissible state on the given spatial shape.

    Ranges: velocities and pressure uniform in [-1, 1]; the shallow water
    depth variable uniform in [0.5, 2] so the square-root transform stays
    well conditioned.
    """
    shape = tuple(shape)
    nc = model.n_comp
    U = rng.uniform(-1.0, 1.0, size=(nc,) + shape)
    if model.kind == "swe2d":
        U[0] = rng.uniform(0.5, 2.0, size=shape)
    return U
