"""Boundary-condition analysis and SAT penalty construction.

The number of boundary conditions a face needs follows the minimal-count
convention: the negative eigenvalues of the symmetric boundary matrix
S = ((n_i A_i) + (n_i A_i)^T)/2.  Three formulations are supported for the
shallow water model:

    nonlinear            the parameter-free diagonal representative
                         diag(u_n, u_n/2, u_n/2) of the contraction
                         u_n (U1^2 + (U2^2 + U3^2)/2)
    linearised           sym(n . A(mean; alpha, beta)), genuinely
                         alpha/beta dependent
    nonlinear_rewritten  the signature (-1, +1, +1)/(2 U_n sqrt(U1)) on the
                         transformed quantities (U1^2, U_n^2 + U1^2,
                         U_n U_tau); two conditions at inflow, none at
                         outflow, where the formally negative direction is
                         dominated by (U_n^2 + U1^2)^2 >= U1^4

SAT penalties are returned as fields that enter the tendency with a plus
sign (residual convention R = spatial - SAT - forcing).  Counting reports
how many conditions the energy method demands; it does not certify
well-posedness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import ModelSpec, check_admissible, coeff_matrices, with_params
from .sbp_core import Grid

# Non-glancing thresholds for the rewritten formulation and the
# two-condition SAT.
DELTA_N = 1e-8
DELTA_1 = 1e-8


@dataclass(frozen=True)
class FaceClosure:
    """One face's closure: 'none', 'periodic', 'characteristic', or
    'swe_two_condition', with its boundary data and penalty scale."""

    kind: str
    g: float = 0.0
    g2: float = 0.0
    g3: float = 0.0
    scale: float = 1.0


_CLOSURE_KINDS = ("none", "periodic", "characteristic", "swe_two_condition")


@dataclass(frozen=True, eq=False)
class SatConfig:
    """Face label -> FaceClosure mapping (labels like 'x_low')."""

    faces: dict


def make_sat_config(entries: dict) -> SatConfig:
    faces = {}
    for label, closure in entries.items():
        if not isinstance(closure, FaceClosure):
            closure = FaceClosure(**closure)
        if closure.kind not in _CLOSURE_KINDS:
            raise ValueError(
                f"unknown closure '{closure.kind}'; try one of {_CLOSURE_KINDS}"
            )
        if not closure.scale > 0.0:
            raise ValueError(f"penalty scale must be positive, got {closure.scale}")
        for value in (closure.g, closure.g2, closure.g3):
            if not np.isfinite(value):
                raise ValueError("boundary data must be finite")
        faces[str(label)] = closure
    return SatConfig(faces=faces)


def _face_from_label(grid: Grid, label: str):
    name, _, side = label.rpartition("_")
    if name not in grid.axis_names or side not in ("low", "high"):
        known = [f"{n}_{s}" for n in grid.axis_names for s in ("low", "high")]
        raise ValueError(f"bad face label '{label}'; expected one of {known}")
    return grid.axis_names.index(name), side


def validate_sat(grid: Grid, sat: SatConfig) -> None:
    """Checks closure/axis consistency; periodic closures come in pairs."""
    for label in sat.faces:
        _face_from_label(grid, label)
    for ax in range(grid.dim):
        name = grid.axis_names[ax]
        kinds = {}
        for side in ("low", "high"):
            closure = sat.faces.get(f"{name}_{side}")
            kinds[side] = None if closure is None else closure.kind
        periodic_sides = [s for s, k in kinds.items() if k == "periodic"]
        if periodic_sides and len(periodic_sides) != 2:
            raise ValueError(f"axis {name}: periodic closure must cover both faces")
        if periodic_sides and not grid.periodic[ax]:
            raise ValueError(
                f"axis {name}: periodic closure requires a grid built periodic on"
                " that axis (the circulant operator carries the closure)"
            )
        if grid.periodic[ax]:
            bad = [s for s, k in kinds.items() if k not in (None, "periodic")]
            if bad:
                raise ValueError(f"axis {name} is periodic and has no faces to close")


def build_sat(model: ModelSpec, grid: Grid, ops, U: np.ndarray,
              sat: SatConfig | None) -> np.ndarray | None:
    """Assembles the SAT penalty field for the configured faces.

    Periodic closures contribute nothing here (the operator carries them);
    'none' faces are left open.  Returns None when there is no config.
    """
    if sat is None:
        return None
    validate_sat(grid, sat)
    U = np.asarray(U, dtype=np.float64)
    field = np.zeros_like(U)
    for label, closure in sat.faces.items():
        if closure.kind in ("none", "periodic"):
            continue
        ax, side = _face_from_label(grid, label)
        if grid.periodic[ax]:
            raise ValueError(f"axis {grid.axis_names[ax]} is periodic; face '{label}'"
                             " cannot take a penalty closure")
        if closure.kind == "characteristic":
            _sat_characteristic(model, grid, ops, U, field, ax, side, closure)
        else:
            _sat_swe_two_condition(model, grid, ops, U, field, ax, side, closure)
    return field


def _sat_characteristic(model, grid, ops, U, field, ax, side, closure):
    """Burgers inflow penalty sigma (u - g) with sigma = scale * u_n / 3.

    Active only where the face is inflow (u_n < 0).  With the default scale
    the inflow face contributes 2 u^2 g / 3 to the energy rate, zero for
    homogeneous data, so the rate gains no positive boundary term.
    """
    if model.kind != "burgers1d":
        raise ValueError("characteristic closure is a burgers1d face closure")
    idx = 0 if side == "low" else grid.shape[ax] - 1
    sign = -1.0 if side == "low" else 1.0
    w = U[0, idx]
    un = sign * w
    if un < 0.0:
        sigma = closure.scale * un / 3.0
        field[0, idx] += sigma * (w - closure.g) / ops[ax].P[idx]


def _sat_swe_two_condition(model, grid, ops, U, field, ax, side, closure):
    """Two-condition shallow water inflow penalty.

    Penalises the conditions a2 = U_n^2 + U1^2 = g2^2 and a3 = U_n U_tau =
    g3^2 through the state direction, with the scaling that makes the face
    energy rate telescope to the quadrature of
    (-U1^4 + g2^4 + g3^4) / (|U_n| sqrt(U1)), the sign structure of the
    continuous two-condition bound.  Nodes that are not strictly inflow
    (U_n >= -DELTA_N) are left alone.
    """
    if model.kind != "swe2d":
        raise ValueError("swe_two_condition closure is a swe2d face closure")
    if grid.dim != 2:
        raise ValueError("swe_two_condition closure expects a 2D grid")
    check_admissible(model, U)
    idx = 0 if side == "low" else grid.shape[ax] - 1
    outward = -1.0 if side == "low" else 1.0
    normal = (outward, 0.0) if ax == 0 else (0.0, outward)
    take = [slice(None)] * 3
    take[ax + 1] = idx
    Uf = U[tuple(take)]
    un = normal[0] * Uf[1] + normal[1] * Uf[2]
    utau = -normal[1] * Uf[1] + normal[0] * Uf[2]
    root = np.sqrt(Uf[0])
    active = un < -DELTA_N
    safe_un = np.where(active, un, -1.0)
    a2 = un * un + Uf[0] * Uf[0]
    a3 = un * utau
    usq = Uf[0] ** 2 + Uf[1] ** 2 + Uf[2] ** 2
    g2_4 = closure.g2 ** 4
    g3_4 = closure.g3 ** 4
    sigma = -closure.scale * ((a2 * a2 - g2_4) + (a3 * a3 - g3_4)) / (
        2.0 * np.abs(safe_un) * root * usq
    )
    sigma = np.where(active, sigma, 0.0) / ops[ax].P[idx]
    for c in range(3):
        field[(c,) + tuple(take[1:])] += sigma * Uf[c]


def jacobi_eigenvalues(S: np.ndarray, off_tol: float = 1e-14,
                       max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a small symmetric matrix by cyclic Jacobi sweeps.

    Sweeps until the largest off-diagonal entry falls below off_tol times
    the Frobenius norm.  Deterministic: fixed (p, q) sweep order.
    """
    A = np.array(S, dtype=np.float64, copy=True)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("expected a square matrix")
    gap = np.abs(A - A.T).max()
    if gap > 1e-12 * max(1.0, np.abs(A).max()):
        raise ValueError("expected a symmetric matrix")
    A = 0.5 * (A + A.T)
    norm = float(np.sqrt(np.sum(A * A)))
    thresh = off_tol * max(norm, 1e-300)
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off = max(off, abs(A[p, q]))
        if off <= thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = c * akp - s * akq
                    A[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = A[p, k]
                    aqk = A[q, k]
                    A[p, k] = c * apk - s * aqk
                    A[q, k] = s * apk + c * aqk
    return np.sort(np.diagonal(A).copy())


def _signature_counts(eigs: np.ndarray) -> tuple[int, int, int]:
    tol = 1e-12 * max(float(np.max(np.abs(eigs))), 1e-300)
    neg = int(np.sum(eigs < -tol))
    pos = int(np.sum(eigs > tol))
    return neg, eigs.size - neg - pos, pos


@dataclass(frozen=True, eq=False)
class BoundaryAnalysis:
    """Eigen-analysis of one face at one state."""

    formulation: str
    face: str | None
    normal: tuple
    alpha: float | None
    beta: float | None
    S: np.ndarray
    eigenvalues: np.ndarray
    n_negative: int
    n_zero: int
    n_positive: int
    bc_count: int
    contraction: float | None


def swe_normal_tangential(U, normal) -> tuple[np.ndarray, np.ndarray]:
    """Transformed normal and tangential momenta U_n, U_tau."""
    n1, n2 = float(normal[0]), float(normal[1])
    U = np.asarray(U, dtype=np.float64)
    return n1 * U[1] + n2 * U[2], -n2 * U[1] + n1 * U[2]


def swe_rewritten_contraction(U, normal) -> float:
    """The rewritten boundary contraction
    ((U_n^2+U1^2)^2 + (U_n U_tau)^2 - U1^4) / (2 U_n sqrt(U1)).

    Equals the plain contraction u_n (U1^2 + (U2^2+U3^2)/2) identically;
    raises on glancing states |U_n| < DELTA_N.
    """
    U = np.asarray(U, dtype=np.float64)
    un, utau = swe_normal_tangential(U, normal)
    if abs(float(un)) < DELTA_N:
        raise ValueError(f"glancing face state: |U_n| = {abs(float(un))} < {DELTA_N}")
    root = np.sqrt(U[0])
    if root < DELTA_1:
        raise ValueError("degenerate depth at the face")
    a2 = un * un + U[0] * U[0]
    a3 = un * utau
    return float((a2 * a2 + a3 * a3 - U[0] ** 4) / (2.0 * un * root))


def analyze_boundary(
    model: ModelSpec,
    state,
    normal,
    alpha: float | None = None,
    beta: float | None = None,
    formulation: str = "nonlinear",
    face: str | None = None,
    pos=None,
) -> BoundaryAnalysis:
    """Eigen-counts the boundary conditions one face state demands.

    Args:
        state: the face state (the mean state for 'linearised').
        normal: outward unit normal, length model.dim.
        alpha, beta: swe2d splitting overrides.
        formulation: 'nonlinear', 'linearised', or 'nonlinear_rewritten'.
        pos: per-axis coordinates of the face node (euler3d_cyl radius).
    """
    state = np.asarray(state, dtype=np.float64)
    normal = tuple(float(c) for c in normal)
    if len(normal) != model.dim:
        raise ValueError(f"normal has {len(normal)} components, model is {model.dim}D")
    check_admissible(model, state)
    if alpha is not None or beta is not None:
        if model.kind != "swe2d":
            raise ValueError("alpha and beta apply to swe2d only")
        over = {}
        if alpha is not None:
            over["alpha"] = alpha
        if beta is not None:
            over["beta"] = beta
        model = with_params(model, **over)
    a_out = model.alpha if model.kind == "swe2d" else None
    b_out = model.beta if model.kind == "swe2d" else None

    if formulation == "nonlinear_rewritten":
        if model.kind != "swe2d":
            raise ValueError("the rewritten formulation applies to swe2d only")
        un, _ = swe_normal_tangential(state, normal)
        un = float(un)
        root = float(np.sqrt(state[0]))
        if abs(un) < DELTA_N:
            raise ValueError(f"glancing face state: |U_n| = {abs(un)} < {DELTA_N}")
        if root < DELTA_1:
            raise ValueError("degenerate depth at the face")
        c = 1.0 / (2.0 * un * root)
        S = np.diag([-c, c, c])
        eigs = np.sort(np.array([-c, c, c]))
        neg, zero, pos_n = _signature_counts(eigs)
        # Two genuine conditions at inflow; at outflow the negative
        # direction is dominated by (U_n^2 + U1^2)^2 >= U1^4 and no data
        # is required.
        count = 2 if un < 0.0 else 0
        contraction = swe_rewritten_contraction(state, normal)
        return BoundaryAnalysis(
            formulation=formulation, face=face, normal=normal,
            alpha=a_out, beta=b_out, S=S, eigenvalues=eigs,
            n_negative=neg, n_zero=zero, n_positive=pos_n,
            bc_count=count, contraction=contraction,
        )

    if formulation == "nonlinear" and model.kind == "swe2d":
        un, _ = swe_normal_tangential(state, normal)
        root = np.sqrt(state[0])
        vn = float(un / root)
        S = np.diag([vn, vn / 2.0, vn / 2.0])
        contraction = float(
            vn * (state[0] ** 2 + 0.5 * (state[1] ** 2 + state[2] ** 2))
        )
    elif formulation in ("nonlinear", "linearised"):
        A, _ = coeff_matrices(model, state, pos)
        M = np.zeros((model.n_comp, model.n_comp))
        for ax in range(model.dim):
            M += normal[ax] * A[ax]
        S = 0.5 * (M + M.T)
        contraction = float(state @ M @ state) if formulation == "nonlinear" else None
    else:
        raise ValueError(
            "formulation must be 'nonlinear', 'linearised', or 'nonlinear_rewritten'"
        )

    eigs = jacobi_eigenvalues(S)
    neg, zero, pos_n = _signature_counts(eigs)
    return BoundaryAnalysis(
        formulation=formulation, face=face, normal=normal,
        alpha=a_out, beta=b_out, S=S, eigenvalues=eigs,
        n_negative=neg, n_zero=zero, n_positive=pos_n,
        bc_count=neg, contraction=contraction,
    )


def analysis_table(analysis: BoundaryAnalysis) -> str:
    """Human-readable multi-line summary."""
    lines = []
    if analysis.face:
        lines.append(f"face           {analysis.face}")
    lines.append(f"normal         {analysis.normal}")
    lines.append(f"formulation    {analysis.formulation}")
    if analysis.alpha is not None:
        lines.append(f"alpha, beta    {analysis.alpha}, {analysis.beta}")
    eig = ", ".join(f"{v:.6g}" for v in analysis.eigenvalues)
    lines.append(f"eigenvalues    {eig}")
    lines.append(
        "signature      "
        f"{analysis.n_negative} negative, {analysis.n_zero} zero, "
        f"{analysis.n_positive} positive"
    )
    lines.append(f"bc count       {analysis.bc_count}")
    if analysis.contraction is not None:
        lines.append(f"contraction    {analysis.contraction:.12g}")
    return "\n".join(lines)


ANALYSIS_CSV_HEADER = ("face", "formulation", "alpha", "beta", "eigenvalues", "count")


def analysis_csv_row(analysis: BoundaryAnalysis) -> tuple:
    eig = ";".join(repr(float(v)) for v in analysis.eigenvalues)
    return (
        analysis.face or "",
        analysis.formulation,
        "" if analysis.alpha is None else repr(analysis.alpha),
        "" if analysis.beta is None else repr(analysis.beta),
        eig,
        analysis.bc_count,
    )
