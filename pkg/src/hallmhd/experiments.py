"""
Diagnostics and experiment harness: exact energy-budget verification,
pairing-cancellation checks, blow-up functional monitoring, the small-data
global-existence probe, the stability sweep, and the mollifier-convergence
study.

Budget residuals test the identities, not the integrator: quadratic
quantities are differenced in time (2nd-order centered), dissipation terms
are added, and every nonlinear pairing is re-evaluated independently by
quadrature, term by term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .calculus import advect, cross, derive, inner, l2_norm, leray_project
from .dynamics import SolverFailure, SolverParams, State, run, step
from .fields import GridSpec, VectorField, random_bandlimited
from .norms import SeminormReport, h2_norm_sq, seminorms


# ---------------------------------------------------------------------------
# Time-series records


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One row of time-series outputs."""

    t: float
    E: float
    D: float
    u_norms: SeminormReport
    b_norms: SeminormReport
    blowup_running: float
    L_running: float
    div_u: float
    div_b: float
    r0: Optional[float] = None
    r1: Optional[float] = None
    r2: Optional[float] = None


def blowup_integrand(u_norms: SeminormReport, b_norms: SeminormReport) -> float:
    """|grad u|^4 + |grad b|^4 + |lap b|^4, the blow-up criterion's integrand."""
    return u_norms.grad_l2**4 + b_norms.grad_l2**4 + b_norms.lap_l2**4


def gronwall_weight(u_norms: SeminormReport, b_norms: SeminormReport) -> float:
    """The weight L(t) controlling perturbation growth in the stability bound."""
    return (
        u_norms.grad_l2**4
        + b_norms.grad_l2**4
        + u_norms.lap_l2**4
        + b_norms.lap_l2**4
        + b_norms.curl_lap_l2**2
        + b_norms.div_lap_l2**2
    )


class DiagnosticsCollector:
    """
    Observer for :func:`hallmhd.dynamics.run` producing DiagnosticsRecords,
    with trapezoidal accumulation of the running time integrals.

    Budget pairings for the requested levels are evaluated at every sample
    and kept in self.budget_samples (states themselves are not retained).
    """

    def __init__(self, params: SolverParams, budget_levels: Sequence[int] = ()):
        self.params = params
        self.budget_levels = tuple(budget_levels)
        self.budget_samples = {lvl: [] for lvl in self.budget_levels}
        self.records: list[DiagnosticsRecord] = []
        self.max_div_u = 0.0
        self.max_div_b_drift = 0.0
        self._prev_t = None
        self._prev_blowup = None
        self._prev_L = None
        self._blowup_running = 0.0
        self._L_running = 0.0
        self._div_b0 = None

    def __call__(self, state: State) -> DiagnosticsRecord:
        p = self.params
        un = seminorms(state.u)
        bn = seminorms(state.b)
        E = 0.5 * (un.l2**2 + bn.l2**2)
        D = p.mu * un.grad_l2**2 + p.gamma * bn.grad_l2**2
        bi = blowup_integrand(un, bn)
        Lt = gronwall_weight(un, bn)
        if self._prev_t is not None:
            h = state.t - self._prev_t
            self._blowup_running += 0.5 * h * (self._prev_blowup + bi)
            self._L_running += 0.5 * h * (self._prev_L + Lt)
        self._prev_t, self._prev_blowup, self._prev_L = state.t, bi, Lt

        div_u = l2_norm(derive(state.u, "div"))
        div_b = l2_norm(derive(state.b, "div"))
        if self._div_b0 is None:
            self._div_b0 = div_b
        self.max_div_u = max(self.max_div_u, div_u)
        self.max_div_b_drift = max(self.max_div_b_drift, abs(div_b - self._div_b0))

        for lvl in self.budget_levels:
            self.budget_samples[lvl].append(budget_sample(state, p, lvl))

        rec = DiagnosticsRecord(
            t=state.t,
            E=E,
            D=D,
            u_norms=un,
            b_norms=bn,
            blowup_running=self._blowup_running,
            L_running=self._L_running,
            div_u=div_u,
            div_b=div_b,
        )
        self.records.append(rec)
        return rec


# ---------------------------------------------------------------------------
# Energy budgets


@dataclass(frozen=True)
class BudgetSample:
    """Quadratic quantity, dissipation, and nonlinear pairing at one instant."""

    t: float
    quad: float
    diss: float
    nonlinear: float


def budget_sample(state: State, params: SolverParams, level: int) -> BudgetSample:
    """
    Evaluate one budget level's ingredients by independent quadrature.

    Level 0 pairs the equations with (u, b); level 1 with (-lap u, -lap b);
    level 2 with the curl/div of the doubly-differentiated equations.  The
    triple-curl Hall pairing at level 2 is assembled through its two-term
    split so the pointwise orthogonality (A x B).A = 0 is exercised.
    """
    u, b = state.u, state.b
    adv_uu = leray_project(advect(u, u))
    curl_b = derive(b, "curl")
    jxb = cross(curl_b, b)
    uxb = cross(u, b)
    un = seminorms(u)
    bn = seminorms(b)
    hall = params.hall_on

    if level == 0:
        quad = 0.5 * (un.l2**2 + bn.l2**2)
        diss = params.mu * un.grad_l2**2 + params.gamma * bn.grad_l2**2
        i1 = inner(adv_uu, u)
        i2 = inner(leray_project(jxb), u)
        i3 = inner(derive(uxb, "curl"), b)
        i4 = inner(derive(jxb, "curl"), b) if hall else 0.0
        nonlinear = -i1 + i2 + i3 - i4
    elif level == 1:
        lap_u = derive(u, "laplacian")
        lap_b = derive(b, "laplacian")
        quad = 0.5 * (un.grad_l2**2 + bn.grad_l2**2)
        diss = params.mu * un.lap_l2**2 + params.gamma * bn.lap_l2**2
        j1 = inner(adv_uu, lap_u)
        j2 = inner(leray_project(jxb), lap_u)
        j3 = inner(derive(uxb, "curl"), lap_b)
        j4 = inner(derive(jxb, "curl"), lap_b) if hall else 0.0
        nonlinear = j1 - j2 - j3 + j4
    elif level == 2:
        curl_lap_u = derive(derive(u, "laplacian"), "curl")
        curl_lap_b = derive(derive(b, "laplacian"), "curl")
        quad = 0.5 * (un.lap_l2**2 + bn.lap_l2**2)
        diss = params.mu * un.curl_lap_l2**2 + params.gamma * (
            bn.curl_lap_l2**2 + bn.div_lap_l2**2
        )
        k1 = inner(derive(adv_uu, "curl"), curl_lap_u)
        k2 = inner(derive(jxb, "curl"), curl_lap_u)
        k3 = inner(derive(derive(uxb, "curl"), "curl"), curl_lap_b)
        if hall:
            ccb = derive(b, "curl_curl")
            ccb_x_b = cross(ccb, b)
            # K4 = K5 + K6, using curl(curl curl b) = -curl(lap b).
            k5 = inner(
                derive(derive(jxb, "curl") - ccb_x_b, "curl"), curl_lap_b
            )
            k6 = inner(derive(ccb_x_b, "curl") + cross(curl_lap_b, b), curl_lap_b)
            k4 = k5 + k6
        else:
            k4 = 0.0
        nonlinear = k1 - k2 - k3 + k4
    else:
        raise ValueError("budget level must be 0, 1 or 2")
    return BudgetSample(t=state.t, quad=quad, diss=diss, nonlinear=nonlinear)


def budget_residuals(samples: Sequence[BudgetSample], stride: int = 1) -> np.ndarray:
    """
    |d(quad)/dt + dissipation - nonlinear| at interior sample times, with a
    centered difference at spacing stride * dt_obs.  Converges at 2nd order
    in the observation interval.
    """
    sub = list(samples[::stride])
    if len(sub) < 3:
        raise ValueError("need at least three samples for a centered difference")
    t = np.array([s.t for s in sub])
    h = np.diff(t)
    if not np.allclose(h, h[0], rtol=1e-8):
        raise ValueError("samples must be uniformly spaced in time")
    q = np.array([s.quad for s in sub])
    d = np.array([s.diss for s in sub])
    nl = np.array([s.nonlinear for s in sub])
    dqdt = (q[2:] - q[:-2]) / (2.0 * h[0])
    return np.abs(dqdt + d[1:-1] - nl[1:-1])


def energy_budget(
    states: Sequence[State], params: SolverParams, level: int, stride: int = 1
) -> np.ndarray:
    """Residual series for a stored list of uniformly spaced states."""
    return budget_residuals([budget_sample(s, params, level) for s in states], stride)


# ---------------------------------------------------------------------------
# Pairing cancellations


def cancellation_checks(state: State) -> dict[str, float]:
    """
    Pairings that vanish identically for one alias-free state: the
    self-advection pairing, the Hall pairing with curl b, and the sum of the
    Lorentz and induction exchange terms.
    """
    u, b = state.u, state.b
    jxb = cross(derive(b, "curl"), b)
    i1 = inner(leray_project(advect(u, u)), u)
    i2 = inner(leray_project(jxb), u)
    i3 = inner(derive(cross(u, b), "curl"), b)
    i4 = inner(jxb, derive(b, "curl"))
    return {"I1": abs(i1), "I4": abs(i4), "I2+I3": abs(i2 + i3)}


def cancellation_checks_pair(base: State, other: State) -> dict[str, float]:
    """
    Difference-system pairings that vanish identically, evaluated for
    (U, B) = (other.u - base.u, other.b - base.b) against (u, b) = base.
    """
    u, b = base.u, base.b
    U = other.u - u
    B = other.b - b
    curl_B = derive(B, "curl")
    l1 = inner(leray_project(advect(U, U)), U)
    l3 = inner(leray_project(advect(u, U)), U)
    l10 = inner(derive(cross(curl_B, B), "curl"), B)
    l11 = inner(derive(cross(curl_B, b), "curl"), B)
    l4 = inner(leray_project(cross(curl_B, B)), U)
    l7 = inner(derive(cross(U, B), "curl"), B)
    return {
        "L1": abs(l1),
        "L3": abs(l3),
        "L10": abs(l10),
        "L11": abs(l11),
        "L4+L7": abs(l4 + l7),
    }


# ---------------------------------------------------------------------------
# Blow-up monitor


def blowup_monitor(records: Sequence[DiagnosticsRecord], window_fraction: float = 0.2) -> dict:
    """
    Trapezoidal total of the blow-up integrand and its rate over the
    trailing window; classifies the run as quiescent (rate decaying) or
    active.
    """
    if not records:
        raise ValueError("empty record series")
    total = records[-1].blowup_running
    t0, t1 = records[0].t, records[-1].t
    span = t1 - t0
    if span <= 0 or len(records) < 3:
        return {"integral_total": total, "window_rate": 0.0, "classification": "quiescent"}
    w = window_fraction * span
    def running_at(t):
        ts = [r.t for r in records]
        vs = [r.blowup_running for r in records]
        return float(np.interp(t, ts, vs))
    tail_rate = (total - running_at(t1 - w)) / w
    prev_rate = (running_at(t1 - w) - running_at(t1 - 2 * w)) / w if t1 - 2 * w >= t0 else tail_rate
    classification = "quiescent" if tail_rate <= prev_rate else "active"
    return {"integral_total": total, "window_rate": tail_rate, "classification": classification}


# ---------------------------------------------------------------------------
# Small-data probe


def smalldata_probe(
    grid: GridSpec,
    amplitude: float,
    params: SolverParams,
    seed: int = 0,
    kmax: int = 4,
    sample_every: int = 10,
    bound_factor: float = 3.0,
) -> dict:
    """
    Run seeded random divergence-free data scaled so the initial squared
    H^2 sum equals amplitude^2, and report whether the squared sum stays
    within bound_factor times its initial value over the horizon.
    """
    if amplitude <= 0:
        raise ValueError("amplitude must be > 0")
    u0 = random_bandlimited(grid, seed, kmax, amplitude=1.0, divergence_free=True)
    b0 = random_bandlimited(grid, seed + 1, kmax, amplitude=1.0, divergence_free=True)
    total = h2_norm_sq(u0) + h2_norm_sq(b0)
    scale = amplitude / math.sqrt(total)
    initial = State(u=scale * u0, b=scale * b0, t=0.0)
    initial_sq = h2_norm_sq(initial.u) + h2_norm_sq(initial.b)

    sup = initial_sq
    try:
        def watch(state: State) -> float:
            return h2_norm_sq(state.u) + h2_norm_sq(state.b)

        _, samples = run(initial, params, observer=watch, sample_every=sample_every)
        sup = max(samples)
        survived = True
    except SolverFailure:
        survived = False
    satisfied = survived and sup <= bound_factor * initial_sq
    return {
        "initial_H2_sq": initial_sq,
        "max_over_time_H2": sup,
        "survived": survived,
        "bound_satisfied": satisfied,
    }


# ---------------------------------------------------------------------------
# Stability sweep


@dataclass(frozen=True)
class StabilityReport:
    delta: float
    sup_distance: float
    final_distance: float
    L_total: float
    survived: bool


def perturbation_direction(grid: GridSpec, seed: int, kmax: int = 2):
    """Seeded divergence-free u-direction and curl-shaped b-direction."""
    pu = random_bandlimited(grid, seed, kmax, amplitude=1.0, divergence_free=True)
    pb = derive(random_bandlimited(grid, seed + 1, kmax, amplitude=1.0), "curl")
    return pu, pb


def stability_sweep(
    base_initial: State,
    params: SolverParams,
    deltas: Sequence[float],
    seed: int = 1,
    kmax: int = 2,
    sample_every: int = 10,
) -> list[StabilityReport]:
    """
    For each delta, perturb the base initial data so the initial squared
    H^2 distance equals delta exactly, co-run both trajectories, and record
    the sup-in-time and final squared H^2 distances plus the base run's
    Gronwall-weight integral.
    """
    grid = base_initial.grid
    pu, pb = perturbation_direction(grid, seed, kmax)
    dir_sq = h2_norm_sq(pu) + h2_norm_sq(pb)
    n_steps = int(round(params.t_end / params.dt))

    reports = []
    for delta in deltas:
        eps = math.sqrt(delta / dir_sq) if delta > 0 else 0.0
        pert = State(u=base_initial.u + eps * pu, b=base_initial.b + eps * pb, t=base_initial.t)

        base = base_initial
        other = pert

        def distance_sq(a: State, c: State) -> float:
            return h2_norm_sq(c.u - a.u) + h2_norm_sq(c.b - a.b)

        sup = distance_sq(base, other)
        final = sup
        L_total = 0.0
        bn = seminorms(base.b)
        un = seminorms(base.u)
        prev_L = gronwall_weight(un, bn)
        prev_t = base.t
        survived = True
        try:
            for i in range(1, n_steps + 1):
                base = step(base, params)
                other = step(other, params)
                if i % sample_every == 0 or i == n_steps:
                    d = distance_sq(base, other)
                    sup = max(sup, d)
                    final = d
                    Lt = gronwall_weight(seminorms(base.u), seminorms(base.b))
                    L_total += 0.5 * (base.t - prev_t) * (prev_L + Lt)
                    prev_L, prev_t = Lt, base.t
        except SolverFailure:
            survived = False
        reports.append(
            StabilityReport(
                delta=delta,
                sup_distance=sup,
                final_distance=final,
                L_total=L_total,
                survived=survived,
            )
        )
    return reports


# ---------------------------------------------------------------------------
# Mollifier convergence


@dataclass(frozen=True)
class MollifierError:
    level: int
    error: float


def mollifier_convergence(
    initial: State,
    params: SolverParams,
    levels: Sequence[int],
) -> list[MollifierError]:
    """
    H^2 distance at the horizon between each regularized run and the
    unregularized one.  Errors are nonincreasing in the level once it
    exceeds the active spectral support, and vanish at the grid cutoff.
    """
    reference, _ = run(initial, replace(params, mollifier_level=None))
    rows = []
    for n in levels:
        final, _ = run(initial, replace(params, mollifier_level=int(n)))
        err = math.sqrt(
            h2_norm_sq(final.u - reference.u) + h2_norm_sq(final.b - reference.b)
        )
        rows.append(MollifierError(level=int(n), error=err))
    return rows


# ---------------------------------------------------------------------------
# Temporal order measurement


def temporal_order(errors: Sequence[float], floor: float = 1e-12) -> float:
    """
    Observed convergence order from errors at successively halved steps.
    Errors all at the rounding floor count as exact integration (inf).
    """
    errors = list(errors)
    if all(e <= floor for e in errors):
        return math.inf
    orders = []
    for a, b in zip(errors, errors[1:]):
        if a <= floor or b <= floor:
            return math.inf
        orders.append(math.log2(a / b))
    return float(np.mean(orders))
