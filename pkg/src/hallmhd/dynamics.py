"""
Right-hand-side assembly for the projected incompressible Hall-MHD system,
its mollified variant, pressure recovery, and time integration.

The momentum equation is stepped in projected form: the pressure gradient
never appears and is recoverable on demand.  Linear diffusion is handled by
exact spectral multipliers (integrating factor for if_rk4, Crank-Nicolson
for imex2), so only the nonlinear part is stepped explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .fields import (
    GridSpec,
    ScalarField,
    VectorField,
    _project_div_free,
    _to_physical,
    _to_spectral,
)

SCHEMES = ("if_rk4", "imex2")


@dataclass(frozen=True)
class SolverParams:
    """Physical coefficients and time-integration settings."""

    mu: float
    gamma: float
    dt: float
    t_end: float
    scheme: str = "if_rk4"
    mollifier_level: Optional[int] = None
    hall_on: bool = True

    def __post_init__(self) -> None:
        if self.mu <= 0:
            raise ValueError("mu must be > 0")
        if self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.mollifier_level is not None and self.mollifier_level < 1:
            raise ValueError("mollifier level must be >= 1")


@dataclass(frozen=True)
class State:
    """The pair (u, b) at one time instant."""

    u: VectorField
    b: VectorField
    t: float = 0.0

    def __post_init__(self) -> None:
        if self.u.grid != self.b.grid:
            raise ValueError("u and b must share one grid")

    @property
    def grid(self) -> GridSpec:
        return self.u.grid


@dataclass(frozen=True)
class Tendency:
    """Instantaneous non-diffusive parts of (du/dt, db/dt)."""

    du: VectorField
    db: VectorField


class SolverFailure(RuntimeError):
    """Raised when a step produces non-finite values.

    Carries the failure time and the last finite state as a diagnostic
    snapshot.
    """

    def __init__(self, t: float, state: State):
        super().__init__(f"solver produced non-finite values at t={t:.6g}")
        self.t = t
        self.state = state


def _curl_c(grid: GridSpec, c: np.ndarray) -> np.ndarray:
    kx, ky, kz = grid.kd
    return np.stack(
        [
            1j * (ky * c[2] - kz * c[1]),
            1j * (kz * c[0] - kx * c[2]),
            1j * (kx * c[1] - ky * c[0]),
        ]
    )


def _cross_phys(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.stack(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


def _nonlinear(grid: GridSpec, uc: np.ndarray, bc: np.ndarray, params: SolverParams):
    """Dealiased nonlinear tendencies (du, db) as coefficient arrays."""
    level = params.mollifier_level
    if level is not None:
        smooth = grid.mode_inf <= level
        uc = uc * smooth
        bc = bc * smooth
    mask = grid.dealias_mask

    up = _to_physical(uc).real
    bp = _to_physical(bc).real
    curlb_c = _curl_c(grid, bc)
    jp = _to_physical(curlb_c).real

    # [u.grad]u
    kx, ky, kz = grid.kd
    adv = np.empty_like(up)
    for jcomp in range(3):
        d = _to_physical(
            np.stack([1j * kx * uc[jcomp], 1j * ky * uc[jcomp], 1j * kz * uc[jcomp]])
        ).real
        adv[jcomp] = up[0] * d[0] + up[1] * d[1] + up[2] * d[2]
    adv_c = _to_spectral(adv) * mask

    jxb_c = _to_spectral(_cross_phys(jp, bp)) * mask  # (curl b) x b
    uxb_c = _to_spectral(_cross_phys(up, bp)) * mask

    du = _project_div_free(grid, jxb_c - adv_c)
    if params.hall_on:
        db_inner = uxb_c - jxb_c
    else:
        db_inner = uxb_c
    if level is not None:
        du = du * smooth
        db_inner = db_inner * smooth
    db = _curl_c(grid, db_inner)
    return du, db


def rhs(state: State, params: SolverParams) -> Tendency:
    """
    Non-diffusive tendency of the (optionally mollified) system:
    du = P[-(u.grad)u + (curl b) x b],
    db = curl(u x b) - curl((curl b) x b)    (Hall term switchable).

    Diffusion is excluded here; the integrator applies it exactly.
    """
    grid = state.grid
    du, db = _nonlinear(grid, state.u.c, state.b.c, params)
    return Tendency(du=VectorField(grid, du), db=VectorField(grid, db))


def rhs_regularized(state: State, params: SolverParams) -> Tendency:
    """The mollified tendency; requires params.mollifier_level."""
    if params.mollifier_level is None:
        raise ValueError("rhs_regularized requires a mollifier level")
    return rhs(state, params)


def recover_pressure(state: State, params: SolverParams) -> ScalarField:
    """
    Zero-mean pressure solving -lap p = div((u.grad)u - (curl b) x b)
    spectrally.  The k=0 mode of the source is discarded.
    """
    grid = state.grid
    uc, bc = state.u.c, state.b.c
    mask = grid.dealias_mask
    up = _to_physical(uc).real
    bp = _to_physical(bc).real
    jp = _to_physical(_curl_c(grid, bc)).real
    kx, ky, kz = grid.kd
    adv = np.empty_like(up)
    for jcomp in range(3):
        d = _to_physical(
            np.stack([1j * kx * uc[jcomp], 1j * ky * uc[jcomp], 1j * kz * uc[jcomp]])
        ).real
        adv[jcomp] = up[0] * d[0] + up[1] * d[1] + up[2] * d[2]
    source = _to_spectral(adv) * mask - _to_spectral(_cross_phys(jp, bp)) * mask
    div_src = 1j * (kx * source[0] + ky * source[1] + kz * source[2])
    with np.errstate(divide="ignore", invalid="ignore"):
        pc = np.where(grid.k2 > 0, div_src / grid.k2, 0.0)
    return ScalarField(grid, pc)


@lru_cache(maxsize=16)
def _multipliers(grid: GridSpec, mu: float, gamma: float, dt: float, level):
    """Cached diffusion multipliers for one (grid, params, dt) combination."""
    k2 = grid.k2
    if level is not None:
        k2 = k2 * (grid.mode_inf <= level)  # J_n^2 = J_n for the sharp cutoff
    lu = -mu * k2
    lb = -gamma * k2
    return {
        "Eu_half": np.exp(lu * dt / 2),
        "Eu_full": np.exp(lu * dt),
        "Eb_half": np.exp(lb * dt / 2),
        "Eb_full": np.exp(lb * dt),
        "cn_u_num": 1.0 + lu * dt / 2,
        "cn_u_den": 1.0 / (1.0 - lu * dt / 2),
        "cn_b_num": 1.0 + lb * dt / 2,
        "cn_b_den": 1.0 / (1.0 - lb * dt / 2),
    }


def cfl_report(state: State, params: SolverParams) -> dict:
    """
    Advisory (not enforced) time-step bounds: advective dx/max|u| and the
    whistler-wave bound dx^2/(pi*max|b|) from the Hall term's quadratic
    dispersion.
    """
    grid = state.grid
    dx = grid.dx
    umax = float(np.max(np.abs(state.u.to_physical())))
    bmax = float(np.max(np.abs(state.b.to_physical())))
    advective = 0.5 * dx / umax if umax > 0 else math.inf
    whistler = dx**2 / (math.pi * bmax) if (bmax > 0 and params.hall_on) else math.inf
    bound = min(advective, whistler)
    return {
        "dt": params.dt,
        "advective": advective,
        "whistler": whistler,
        "advisory_bound": bound,
        "within_bound": params.dt <= bound,
    }


def step(state: State, params: SolverParams) -> State:
    """Advance one dt with the configured scheme; raises SolverFailure on NaN/Inf."""
    grid = state.grid
    m = _multipliers(grid, params.mu, params.gamma, params.dt, params.mollifier_level)
    dt = params.dt
    uc, bc = state.u.c, state.b.c

    if params.scheme == "if_rk4":
        eu, eu2 = m["Eu_half"], m["Eu_full"]
        eb, eb2 = m["Eb_half"], m["Eb_full"]
        ku1, kb1 = _nonlinear(grid, uc, bc, params)
        ku2, kb2 = _nonlinear(grid, eu * (uc + dt / 2 * ku1), eb * (bc + dt / 2 * kb1), params)
        ku3, kb3 = _nonlinear(grid, eu * uc + dt / 2 * ku2, eb * bc + dt / 2 * kb2, params)
        ku4, kb4 = _nonlinear(grid, eu2 * uc + dt * eu * ku3, eb2 * bc + dt * eb * kb3, params)
        new_u = eu2 * uc + dt / 6 * (eu2 * ku1 + 2 * eu * (ku2 + ku3) + ku4)
        new_b = eb2 * bc + dt / 6 * (eb2 * kb1 + 2 * eb * (kb2 + kb3) + kb4)
    else:  # imex2: Crank-Nicolson diffusion + Heun nonlinear
        au, du_ = m["cn_u_num"], m["cn_u_den"]
        ab, db_ = m["cn_b_num"], m["cn_b_den"]
        ku1, kb1 = _nonlinear(grid, uc, bc, params)
        u1 = du_ * (au * uc + dt * ku1)
        b1 = db_ * (ab * bc + dt * kb1)
        ku2, kb2 = _nonlinear(grid, u1, b1, params)
        new_u = du_ * (au * uc + dt / 2 * (ku1 + ku2))
        new_b = db_ * (ab * bc + dt / 2 * (kb1 + kb2))

    new_u = _project_div_free(grid, new_u)
    t_next = state.t + dt
    if not (np.isfinite(new_u).all() and np.isfinite(new_b).all()):
        raise SolverFailure(t_next, state)
    return State(u=VectorField(grid, new_u), b=VectorField(grid, new_b), t=t_next)


def run(
    initial: State,
    params: SolverParams,
    observer: Optional[Callable[[State], object]] = None,
    sample_every: int = 1,
):
    """
    Step from t to t + t_end, invoking `observer` on the initial state,
    every `sample_every` accepted steps, and on the final state.

    Returns (final_state, samples) where samples collects the observer's
    return values.  SolverFailure propagates with its failure time.
    """
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    n_steps = int(round(params.t_end / params.dt))
    samples = []
    if observer is not None:
        samples.append(observer(initial))
    state = initial
    for i in range(1, n_steps + 1):
        state = step(state, params)
        if observer is not None and (i % sample_every == 0 or i == n_steps):
            samples.append(observer(state))
    return state, samples


def perturbed(state: State, du: VectorField, db: VectorField, eps: float) -> State:
    """The state (u + eps*du, b + eps*db) at the same time."""
    return replace(state, u=state.u + eps * du, b=state.b + eps * db)
