"""Explicit RK4 time marching for the skew-form semi-discretisations.

Marching is defined for the models whose norm matrix is invertible
(burgers1d and swe2d, both of which carry unit norm matrices, so the
tendency is simply the negated residual).  The euler models have singular
norm matrices and are verified statically instead.

Conservation claims are always asserted through the per-step
volume_residual of the energy reports, never through E(T) - E(0): the
semi-discrete identity is exact while RK4 adds an O(dt^4) drift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import EnergyReport, energy_report
from .models import ModelSpec, check_admissible, has_invertible_norm, wavespeeds
from .sbp_core import Grid
from .spatial_op import (
    CoeffMode,
    _cached_positions,
    dual,
    eval_dual_residual,
    eval_new_linearised_pair,
    eval_primal_residual,
    frozen,
    new_linearised,
    nonlinear,
    standard_linearised,
)

MODES = (
    "nonlinear",
    "frozen",
    "new_linearised_coupled",
    "standard_linearised",
    "dual",
)

# Diagnostic guard, not a physical bound: abort when the sup norm grows a
# thousandfold from the start.
BLOWUP_FACTOR = 1e3


def rk4_step(rhs, u, t: float, dt: float):
    """One classical fourth-order Runge-Kutta step of u_t = rhs(u, t)."""
    k1 = rhs(u, t)
    k2 = rhs(u + (0.5 * dt) * k1, t + 0.5 * dt)
    k3 = rhs(u + (0.5 * dt) * k2, t + 0.5 * dt)
    k4 = rhs(u + dt * k3, t + dt)
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True, eq=False)
class Scenario:
    """A complete marching setup.

    initial is the marched state: U for nonlinear/frozen, the perturbation
    for the linearised modes, the dual variable for dual runs.  mean is the
    frozen coefficient field (frozen, standard_linearised, dual with fixed
    coefficients) or the initial mean state of the coupled mode.  forcing
    may be None, a constant field, or a callable t -> field, and applies to
    the marched equation (the mean equation in coupled mode).
    """

    model: ModelSpec
    grid: Grid
    ops: tuple
    mode: str
    initial: np.ndarray
    dt: float
    t_final: float
    mean: np.ndarray | None = None
    forcing: object = None
    sat: object = None
    stride: int = 1
    cfl: float = 0.2


def validate_scenario(sc: Scenario) -> None:
    """Raises ValueError when the scenario is malformed or the model/mode
    pair is unsupported (singular norm matrix, missing mean field)."""
    if sc.mode not in MODES:
        raise ValueError(f"unknown mode '{sc.mode}'; expected one of {MODES}")
    if not has_invertible_norm(sc.model):
        raise ValueError(
            f"model '{sc.model.kind}' has a singular norm matrix; time marching"
            " covers burgers1d and swe2d (verify the euler models statically)"
        )
    if not sc.dt > 0.0:
        raise ValueError("dt must be positive")
    if sc.t_final < sc.dt:
        raise ValueError("t_final must be at least one step long")
    if sc.stride < 1:
        raise ValueError("report stride must be at least 1")
    if not 0.0 < sc.cfl:
        raise ValueError("cfl must be positive")
    if np.asarray(sc.initial).shape != (sc.model.n_comp,) + sc.grid.shape:
        raise ValueError("initial data does not match the model/grid shape")
    if sc.mode in ("frozen", "new_linearised_coupled", "standard_linearised"):
        if sc.mean is None:
            raise ValueError(f"mode '{sc.mode}' needs a mean field")
        if np.asarray(sc.mean).shape != (sc.model.n_comp,) + sc.grid.shape:
            raise ValueError("mean field does not match the model/grid shape")


def _forcing_at(forcing, t: float):
    if forcing is None:
        return None
    if callable(forcing):
        return forcing(t)
    return forcing


def _check_cfl(sc: Scenario, V: np.ndarray, t: float) -> None:
    speeds = wavespeeds(sc.model, V, _cached_positions(sc.grid))
    bound = np.inf
    for ax in range(sc.grid.dim):
        if speeds[ax] > 1e-14:
            bound = min(bound, sc.grid.spacings[ax] / speeds[ax])
    limit = sc.cfl * bound
    if sc.dt > limit:
        raise RuntimeError(
            f"CFL violation at t={t:.6g}: dt={sc.dt} exceeds cfl*min(h/speed)={limit:.6g}"
        )


def _report_mode(sc: Scenario, mean_now: np.ndarray | None) -> CoeffMode:
    if sc.mode == "nonlinear":
        return nonlinear()
    if sc.mode == "frozen":
        return frozen(sc.mean)
    if sc.mode == "new_linearised_coupled":
        return new_linearised(mean_now)
    if sc.mode == "standard_linearised":
        return standard_linearised(sc.mean)
    return dual(sc.mean)


def march(sc: Scenario) -> tuple[list[EnergyReport], np.ndarray | tuple]:
    """Marches the scenario and reports the energy balance every stride.

    Returns (reports, final_state); in coupled mode the final state is the
    (mean, perturbation) pair and the reports track the perturbation
    equation, whose skew structure is the linearisation claim under test.
    Raises on CFL violation, admissibility loss, or the blow-up guard.
    """
    validate_scenario(sc)
    model, grid, ops = sc.model, sc.grid, sc.ops
    coupled = sc.mode == "new_linearised_coupled"
    U = np.array(sc.initial, dtype=np.float64)

    if coupled:
        state = np.stack([np.array(sc.mean, dtype=np.float64), U])

        def rhs(y, t):
            u_bar, u_prime = y[0], y[1]
            res_mean, res_pert = eval_new_linearised_pair(
                model, grid, ops, u_bar, u_prime, sat_mean=sc.sat
            )
            f_t = _forcing_at(sc.forcing, t)
            rm = res_mean.R if f_t is None else res_mean.R - f_t
            return np.stack([-rm, -res_pert.R])

    elif sc.mode == "dual":
        state = U

        def rhs(y, t):
            res = eval_dual_residual(model, grid, ops, y, mode=dual(sc.mean),
                                     sat=sc.sat, forcing=_forcing_at(sc.forcing, t))
            return -res.R

    else:
        state = U
        fixed_mode = _report_mode(sc, None)

        def rhs(y, t):
            res = eval_primal_residual(model, grid, ops, y, fixed_mode,
                                       sat=sc.sat, forcing=_forcing_at(sc.forcing, t))
            return -res.R

    def emit(t, y):
        if coupled:
            reports.append(
                energy_report(model, grid, ops, y[1],
                              _report_mode(sc, y[0]), sat=None, t=t)
            )
        else:
            reports.append(
                energy_report(model, grid, ops, y, _report_mode(sc, None),
                              sat=sc.sat, t=t)
            )

    def speed_state(y):
        if coupled:
            return y[0] + y[1]
        if sc.mode in ("frozen", "standard_linearised"):
            return sc.mean
        if sc.mode == "dual" and sc.mean is not None:
            return sc.mean
        return y

    sup0 = max(float(np.max(np.abs(state))), 1e-12)
    nsteps = max(1, int(round(sc.t_final / sc.dt)))
    refresh = sc.mode in ("nonlinear", "new_linearised_coupled") or (
        sc.mode == "dual" and sc.mean is None
    )
    reports: list[EnergyReport] = []

    _check_cfl(sc, speed_state(state), 0.0)
    emit(0.0, state)
    t = 0.0
    for k in range(1, nsteps + 1):
        if refresh and k > 1:
            _check_cfl(sc, speed_state(state), t)
        state = rk4_step(rhs, state, t, sc.dt)
        t = k * sc.dt
        sup = float(np.max(np.abs(state)))
        if not np.isfinite(sup) or sup > BLOWUP_FACTOR * sup0:
            raise RuntimeError(
                f"blow-up guard tripped at t={t:.6g}: sup norm {sup:.3g} vs"
                f" initial {sup0:.3g}"
            )
        if model.kind == "swe2d" and sc.mode in ("nonlinear", "frozen"):
            check_admissible(model, state)
        if coupled:
            check_admissible(model, state[0] + state[1])
        if k % sc.stride == 0 or k == nsteps:
            emit(t, state)

    final = (state[0], state[1]) if coupled else state
    return reports, final
