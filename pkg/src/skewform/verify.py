"""Seeded batch checks of the structural identities.

Every check draws reproducible random states (one generator per trial,
keyed by seed and trial index), evaluates an identity whose exact value is
known independently of the discretisation under test, and reports the
worst normalised residual.  Tolerances are relative: each check defines a
scale of the form 1 + (magnitudes of the computed terms) so a residual of
1e-12*scale means the identity holds to rounding.

Order-of-accuracy checks encode "observed order >= required" as the
residual (required - observed), with tolerance zero.

Trials are independent; SKEWFORM_THREADS > 1 runs them in a thread pool
and the aggregation is ordered by trial index either way, so reports are
bitwise reproducible per build configuration.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .energy import boundary_contraction, energy_report
from .models import (
    coeff_matrices,
    make_model,
    sample_state,
    swe_quasilinear,
    swe_transform,
)
from .sbp_core import (
    apply_derivative,
    build_operators,
    inner_product,
    make_grid,
    position_arrays,
)
from .spatial_op import (
    _matfield_apply,
    bilinear_face_functional,
    dual,
    eval_dual_residual,
    eval_new_linearised_pair,
    eval_primal_residual,
    eval_remainder_H,
    frozen,
    nonlinear,
)

ORDERS = ((2, 1), (4, 2))
ALL_MODEL_KINDS = ("burgers1d", "euler2d", "euler3d_cyl", "swe2d")

# Desk-scale default grids per model kind: (extents, shape).
_DESK_GRIDS = {
    "burgers1d": (((0.0, 1.0),), (33,)),
    "euler2d": (((0.0, 1.0), (0.0, 1.0)), (17, 17)),
    "euler3d_cyl": (((0.3, 1.3), (0.0, 1.0), (0.0, 1.0)), (9, 9, 9)),
    "swe2d": (((0.0, 1.0), (0.0, 1.0)), (17, 17)),
}


def default_model(kind: str):
    """The model instance the checks run: swe2d gets Coriolis and a
    nontrivial splitting so the skew zero-order terms are exercised."""
    if kind == "swe2d":
        return make_model("swe2d", alpha=0.4, beta=0.7, f0=0.7, f1=0.3)
    return make_model(kind)


def default_setup(kind: str, order):
    if kind not in _DESK_GRIDS:
        raise ValueError(f"unknown model '{kind}'; try one of {ALL_MODEL_KINDS}")
    extents, shape = _DESK_GRIDS[kind]
    model = default_model(kind)
    grid = make_grid(extents, shape, axis_names=model.axis_names)
    return model, grid, build_operators(grid, order)


@dataclass(frozen=True, eq=False)
class CheckReport:
    """Outcome of one batch check; passed iff max_residual <= tolerance."""

    name: str
    trials: int
    seed: int
    max_residual: float
    tolerance: float
    passed: bool
    worst: dict


def _state_hash(U: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(U).tobytes()).hexdigest()[:16]


def _worker_count() -> int:
    raw = os.environ.get("SKEWFORM_THREADS", "").strip()
    if not raw:
        return 1
    count = int(raw)
    if count < 1:
        raise ValueError(f"SKEWFORM_THREADS must be a positive integer, got {raw!r}")
    return count


def _run_trials(n_trials: int, fn):
    """fn(trial) for trial in range, results in trial order."""
    workers = _worker_count()
    if workers > 1 and n_trials > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, range(n_trials)))
    return [fn(k) for k in range(n_trials)]


def _finish(name, trials, seed, tolerance, samples) -> CheckReport:
    """Aggregates (residual, meta) samples; ties keep the earliest."""
    max_residual = -np.inf
    worst = {}
    for residual, meta in samples:
        if residual > max_residual:
            max_residual = residual
            worst = meta
    max_residual = float(max_residual) if samples else 0.0
    return CheckReport(
        name=name,
        trials=trials,
        seed=seed,
        max_residual=max_residual,
        tolerance=tolerance,
        passed=bool(max_residual <= tolerance),
        worst=worst,
    )


def check_energy_identity(kinds=ALL_MODEL_KINDS, trials: int = 100,
                          seed: int = 0, orders=ORDERS) -> CheckReport:
    """volume_residual <= 1e-12*scale for random admissible states, all
    models, both operator orders, nonlinear/frozen/dual coefficients."""
    samples = []
    for mi, kind in enumerate(kinds):
        for oi, order in enumerate(orders):
            model, grid, ops = default_setup(kind, order)

            def one(trial, _ctx=(model, grid, ops, mi, oi, kind, order)):
                model, grid, ops, mi, oi, kind, order = _ctx
                rng = np.random.default_rng((seed, mi, oi, trial))
                U = sample_state(model, grid.shape, rng)
                out = []
                for mode_kind in ("nonlinear", "frozen", "dual"):
                    if mode_kind == "nonlinear":
                        mode = nonlinear()
                    elif mode_kind == "frozen":
                        mode = frozen(sample_state(model, grid.shape, rng))
                    else:
                        mode = dual()
                    rep = energy_report(model, grid, ops, U, mode)
                    scale = 1.0 + abs(rep.rate) + abs(rep.boundary_flux) \
                        + abs(rep.sat_contribution)
                    out.append((
                        abs(rep.volume_residual) / scale,
                        {"model": kind, "order": f"{order[0]},{order[1]}",
                         "mode": mode_kind, "grid": "x".join(map(str, grid.shape)),
                         "state_hash": _state_hash(U)},
                    ))
                return out

            for chunk in _run_trials(trials, one):
                samples.extend(chunk)
    return _finish("energy_identity", trials, seed, 1e-12, samples)


def check_duality(kinds=ALL_MODEL_KINDS, trials: int = 50,
                  seed: int = 0, orders=ORDERS) -> CheckReport:
    """The discrete bilinear boundary identity, exact spatial
    self-adjointness, and the dual energy identity."""
    samples = []
    for mi, kind in enumerate(kinds):
        for oi, order in enumerate(orders):
            model, grid, ops = default_setup(kind, order)

            def one(trial, _ctx=(model, grid, ops, mi, oi, kind, order)):
                model, grid, ops, mi, oi, kind, order = _ctx
                rng = np.random.default_rng((seed, 17 + mi, oi, trial))
                U = sample_state(model, grid.shape, rng)
                Phi = sample_state(model, grid.shape, rng)
                V = sample_state(model, grid.shape, rng)
                meta = {"model": kind, "order": f"{order[0]},{order[1]}",
                        "grid": "x".join(map(str, grid.shape)),
                        "state_hash": _state_hash(U)}
                out = []

                # Bilinear identity at frozen coefficients V (C terms
                # cancel pairwise; Coriolis included for swe2d).
                res_p = eval_primal_residual(model, grid, ops, U, frozen(V))
                res_d = eval_dual_residual(model, grid, ops, Phi, mode=dual(V))
                lhs = inner_product(grid, ops, Phi, res_p.spatial) \
                    - inner_product(grid, ops, U, res_d.spatial)
                rhs = bilinear_face_functional(model, grid, ops, U, Phi, V)
                scale = 1.0 + abs(lhs) + abs(rhs)
                out.append((abs(lhs - rhs) / scale,
                            dict(meta, case="bilinear_frozen")))

                # Specialisation Phi = U halves to the energy identity.
                lhs_e = 2.0 * inner_product(grid, ops, U, res_p.spatial)
                rhs_e = bilinear_face_functional(model, grid, ops, U, U, V)
                scale_e = 1.0 + abs(lhs_e) + abs(rhs_e)
                out.append((abs(lhs_e - rhs_e) / scale_e,
                            dict(meta, case="bilinear_diagonal")))

                # Strict self-adjointness: the dual spatial residual at
                # coefficients Phi is exactly the negated primal one.
                res_sp = eval_primal_residual(model, grid, ops, Phi, nonlinear())
                res_sd = eval_dual_residual(model, grid, ops, Phi)
                exact = float(np.max(np.abs(res_sd.spatial + res_sp.spatial)))
                out.append((exact, dict(meta, case="self_adjoint_exact")))

                # Dual energy identity: the dual volume residual vanishes.
                rep = energy_report(model, grid, ops, Phi, dual())
                scale_d = 1.0 + abs(rep.rate) + abs(rep.boundary_flux)
                out.append((abs(rep.volume_residual) / scale_d,
                            dict(meta, case="dual_energy")))
                return out

            for chunk in _run_trials(trials, one):
                samples.extend(chunk)
    return _finish("duality", trials, seed, 1e-12, samples)


def ansatz_defect(model, grid, ops, U) -> float:
    """sup norm of (A_j U)_xj + A_j^T U_xj - calA_j U_xj over both axes."""
    A, _ = coeff_matrices(model, U, pos=position_arrays(grid))
    cal = swe_quasilinear(U)
    worst = 0.0
    for ax in range(2):
        DU = apply_derivative(ops[ax], U, axis=ax)
        flux = apply_derivative(ops[ax], _matfield_apply(A[ax], U), axis=ax)
        skew = _matfield_apply(A[ax], DU, transpose=True)
        quasi = _matfield_apply(cal[ax], DU)
        worst = max(worst, float(np.max(np.abs(flux + skew - quasi))))
    return worst


def check_swe_ansatz(levels=(16, 32, 64), seed: int = 0,
                     orders=ORDERS) -> CheckReport:
    """The quasilinear target matrices close the ansatz identity: the
    discrete defect converges at the interior order for every alpha, beta.

    Manufactured periodic fields, so the whole grid runs at interior
    accuracy and the observed order on the finest pair must reach
    p - 0.2.
    """
    if len(levels) < 2:
        raise ValueError("need at least two refinement levels")
    extents = ((0.0, 1.0), (0.0, 1.0))
    params = (0.0, 0.5, 1.0)
    samples = []
    combos = 0
    for order in orders:
        p = order[0]
        for alpha in params:
            for beta in params:
                model = make_model("swe2d", alpha=alpha, beta=beta)
                defects = []
                for n in levels:
                    grid = make_grid(extents, (n, n), periodic=(True, True),
                                     axis_names=model.axis_names)
                    ops = build_operators(grid, order)
                    x, y = np.meshgrid(*grid.coords, indexing="ij")
                    phi = 1.0 + 0.3 * np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y)
                    u = np.cos(2 * np.pi * x)
                    v = np.sin(2 * np.pi * y)
                    defects.append(ansatz_defect(model, grid, ops,
                                                  swe_transform(phi, u, v)))
                observed = np.log2(defects[-2] / defects[-1])
                combos += 1
                samples.append((
                    (p - 0.2) - observed,
                    {"model": "swe2d", "order": f"{order[0]},{order[1]}",
                     "alpha": alpha, "beta": beta,
                     "observed_order": round(float(observed), 3),
                     "finest_defect": float(defects[-1])},
                ))
    return _finish("swe_ansatz", combos, seed, 0.0, samples)


# The alpha/beta sweep of the parameter-independence check.
_PARAM_SWEEP = (-2.0, -1.0, 0.0, 1.0, 2.0)


def check_alpha_independence(trials: int = 100, seed: int = 0) -> CheckReport:
    """Nonlinear face contractions are splitting-independent; linearised
    ones are not (witnessed on a fixed nondegenerate mean/perturbation)."""
    base = make_model("swe2d")

    def one(trial):
        rng = np.random.default_rng((seed, 29, trial))
        U = sample_state(base, (), rng)
        theta = rng.uniform(0.0, 2.0 * np.pi)
        normal = (float(np.cos(theta)), float(np.sin(theta)))
        values = [
            boundary_contraction(base, U, normal, alpha=a, beta=b)
            for a in _PARAM_SWEEP for b in _PARAM_SWEEP
        ]
        top = max(abs(v) for v in values)
        spread = (max(values) - min(values)) / (1.0 + top)
        return spread, {"model": "swe2d", "state_hash": _state_hash(U),
                        "normal": f"{normal[0]:.4f},{normal[1]:.4f}",
                        "case": "nonlinear_spread"}

    samples = _run_trials(trials, one)

    # Linearised witness: mean (1,0,0), perturbation (1,1,0), x normal.
    # The contraction is (1-3a) + 2a = 1 - a, so alpha 0 and 1 differ by 1.
    mean = np.array([1.0, 0.0, 0.0])
    pert = np.array([1.0, 1.0, 0.0])
    c0 = boundary_contraction(base, pert, (1.0, 0.0), mean=mean, alpha=0.0)
    c1 = boundary_contraction(base, pert, (1.0, 0.0), mean=mean, alpha=1.0)
    wscale = 1.0 + abs(c0) + abs(c1)
    if abs(c0 - c1) < 1e-6 * wscale:
        samples.append((np.inf, {"case": "linearised_witness",
                                 "c_alpha0": c0, "c_alpha1": c1}))
    return _finish("alpha_independence", trials, seed, 1e-13, samples)


def check_decomposition(kinds=ALL_MODEL_KINDS, trials: int = 50,
                        seed: int = 0, orders=ORDERS) -> CheckReport:
    """full = mean-eq + pert-eq + remainder to 1e-12*scale; the remainder
    is exactly quadratic for burgers1d (linear coefficients, power-of-two
    scaling) and near-quadratic in an epsilon sweep for swe2d."""
    samples = []
    for mi, kind in enumerate(kinds):
        for oi, order in enumerate(orders):
            model, grid, ops = default_setup(kind, order)

            def one(trial, _ctx=(model, grid, ops, mi, oi, kind, order)):
                model, grid, ops, mi, oi, kind, order = _ctx
                rng = np.random.default_rng((seed, 31 + mi, oi, trial))
                U_bar = sample_state(model, grid.shape, rng)
                U_prime = 0.1 * sample_state(model, grid.shape, rng)
                meta = {"model": kind, "order": f"{order[0]},{order[1]}",
                        "state_hash": _state_hash(U_bar)}
                out = []

                full = eval_primal_residual(model, grid, ops, U_bar + U_prime,
                                            nonlinear()).spatial
                res_m, res_p = eval_new_linearised_pair(model, grid, ops,
                                                        U_bar, U_prime)
                H = eval_remainder_H(model, grid, ops, U_bar, U_prime)
                defect = float(np.max(np.abs(
                    full - res_m.spatial - res_p.spatial - H)))
                scale = 1.0 + float(np.max(np.abs(full))) \
                    + float(np.max(np.abs(res_m.spatial))) \
                    + float(np.max(np.abs(res_p.spatial))) \
                    + float(np.max(np.abs(H)))
                out.append((defect / scale, dict(meta, case="decomposition")))

                if kind == "burgers1d":
                    eps = 2.0 ** -3
                    h1 = float(np.max(np.abs(H)))
                    h2 = float(np.max(np.abs(eval_remainder_H(
                        model, grid, ops, U_bar, eps * U_prime))))
                    ratio = h2 / (eps * eps * h1)
                    out.append((abs(ratio - 1.0),
                                dict(meta, case="quadratic_exact",
                                     ratio=repr(ratio))))
                if kind == "swe2d" and order == (4, 2):
                    exps = (-2, -6)
                    hs = [float(np.max(np.abs(eval_remainder_H(
                        model, grid, ops, U_bar, (2.0 ** e) * U_prime))))
                        for e in exps]
                    slope = np.log2(hs[0] / hs[1]) / (exps[0] - exps[1])
                    inside = 1.9 <= slope <= 2.1
                    out.append((0.0 if inside else np.inf,
                                dict(meta, case="quadratic_slope",
                                     slope=round(float(slope), 4))))
                return out

            for chunk in _run_trials(trials, one):
                samples.extend(chunk)
    return _finish("decomposition", trials, seed, 1e-12, samples)


CHECKS = {
    "energy": check_energy_identity,
    "duality": check_duality,
    "ansatz": check_swe_ansatz,
    "alpha": check_alpha_independence,
    "decomposition": check_decomposition,
}


def format_check_line(report: CheckReport) -> str:
    status = "PASS" if report.passed else "FAIL"
    return (
        f"{report.name:<22s} {status}  max residual {report.max_residual:.3e}"
        f"  tolerance {report.tolerance:.1e}  ({report.trials} trials, seed"
        f" {report.seed})"
    )


CHECK_CSV_HEADER = ("name", "trials", "seed", "max_residual", "tolerance",
                    "passed", "worst")


def check_csv_row(report: CheckReport) -> tuple:
    worst = ";".join(f"{k}={v}" for k, v in report.worst.items())
    return (report.name, report.trials, report.seed, repr(report.max_residual),
            repr(report.tolerance), int(report.passed), worst)
