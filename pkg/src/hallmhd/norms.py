"""
Lebesgue norms, Sobolev seminorms, torus-exact seminorm-splitting
residuals, and Gagliardo-Nirenberg ratio monitors.

L^2-based quantities are computed spectrally with exact multipliers;
L^p for p in {3, 6} uses physical-space quadrature at grid resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import ScalarField, VectorField

_SUPPORTED_P = (2, 3, 6, math.inf)


def lp_norm(field, p) -> float:
    """
    L^p norm of the pointwise Euclidean magnitude, p in {2, 3, 6, inf}.

    p=2 is spectral (Parseval); p=inf is the grid max of the magnitude.
    """
    if p not in _SUPPORTED_P:
        raise ValueError(f"unsupported p={p}; choose one of {_SUPPORTED_P}")
    grid = field.grid
    if p == 2:
        return float(np.sqrt(grid.volume * np.sum(np.abs(field.c) ** 2)))
    vals = field.to_physical()
    if isinstance(field, VectorField):
        mag = np.sqrt(np.einsum("i...,i...->...", vals, vals))
    else:
        mag = np.abs(vals)
    if p == math.inf:
        return float(np.max(mag))
    return float((grid.volume * np.mean(mag**p)) ** (1.0 / p))


@dataclass(frozen=True)
class SeminormReport:
    """L^2-based seminorms of one field, all computed spectrally."""

    l2: float
    grad_l2: float
    lap_l2: float
    curl_lap_l2: float
    div_lap_l2: float
    h1: float
    h2: float
    h3: float


def seminorms(field) -> SeminormReport:
    """
    Spectral seminorms; h2^2 = l2^2 + grad^2 + lap^2 and
    h3^2 = h2^2 + div_lap^2 + curl_lap^2 (torus-exact composition).

    For scalar fields the curl entry is 0 and div_lap is |grad lap|.
    """
    grid = field.grid
    V = grid.volume
    a2 = np.abs(field.c) ** 2
    l2s = V * np.sum(a2)
    grad = V * np.sum(grid.k2 * a2)
    lap = V * np.sum(grid.k2**2 * a2)
    grad_lap = V * np.sum(grid.k2**3 * a2)
    if isinstance(field, VectorField):
        kx, ky, kz = grid.kd
        c = -grid.k2 * field.c  # laplacian
        curl = np.stack(
            [
                1j * (ky * c[2] - kz * c[1]),
                1j * (kz * c[0] - kx * c[2]),
                1j * (kx * c[1] - ky * c[0]),
            ]
        )
        div = 1j * (kx * c[0] + ky * c[1] + kz * c[2])
        curl_lap = V * np.sum(np.abs(curl) ** 2)
        div_lap = V * np.sum(np.abs(div) ** 2)
    else:
        curl_lap = 0.0
        div_lap = grad_lap
    h1 = l2s + grad
    h2 = h1 + lap
    h3 = h2 + div_lap + curl_lap
    s = math.sqrt
    return SeminormReport(
        l2=s(l2s),
        grad_l2=s(grad),
        lap_l2=s(lap),
        curl_lap_l2=s(curl_lap),
        div_lap_l2=s(div_lap),
        h1=s(h1),
        h2=s(h2),
        h3=s(h3),
    )


def h2_norm_sq(field) -> float:
    """Squared H^2 norm, the canonical l2^2 + grad^2 + lap^2 composition."""
    grid = field.grid
    a2 = np.abs(field.c) ** 2
    return float(grid.volume * np.sum((1.0 + grid.k2 + grid.k2**2) * a2))


@dataclass(frozen=True)
class EquivalenceResiduals:
    delta_split: float
    h3_split_div_free: float | None


def equivalence_residuals(field: VectorField) -> EquivalenceResiduals:
    """
    Torus-exact seminorm splittings, evaluated term by term.

    delta_split = | |lap f|^2 - |curl curl f|^2 - |grad div f|^2 |;
    h3_split_div_free = | |grad lap f|^2 - |curl lap f|^2 |, evaluated only
    when f is divergence-free (None otherwise).
    """
    from .calculus import derive, l2_norm

    lap = l2_norm(derive(field, "laplacian")) ** 2
    curlcurl = l2_norm(derive(field, "curl_curl")) ** 2
    graddiv = l2_norm(derive(field, "grad_div")) ** 2
    delta_split = abs(lap - curlcurl - graddiv)

    rep = seminorms(field)
    div_norm = l2_norm(derive(field, "div"))
    if div_norm <= 1e-12 * max(rep.h1, 1e-300) + 1e-14:
        curl_lap = l2_norm(derive(derive(field, "laplacian"), "curl")) ** 2
        # |grad lap f|^2 via the exact multiplier |k|^6.
        grid = field.grid
        grad_lap = float(grid.volume * np.sum(grid.k2**3 * np.abs(field.c) ** 2))
        h3_split = abs(grad_lap - curl_lap)
    else:
        h3_split = None
    return EquivalenceResiduals(delta_split=delta_split, h3_split_div_free=h3_split)


@dataclass(frozen=True)
class GNRatios:
    """Interpolation-inequality ratios; None marks an undefined quotient."""

    r6: float | None
    r3: float | None
    rinf: float | None


def gn_ratios(field) -> GNRatios:
    """
    Monitor ratios for the L^6, L^3 and L^inf interpolation inequalities,
    with the spatial mean removed first.  No pass/fail is attached: the
    sharp constants are unknown on the torus.
    """
    c = field.c.copy()
    if isinstance(field, VectorField):
        c[:, 0, 0, 0] = 0.0
    else:
        c[0, 0, 0] = 0.0
    f = type(field)(field.grid, c)
    rep = seminorms(f)

    def ratio(num: float, den: float) -> float | None:
        return num / den if den > 0 else None

    r6 = ratio(lp_norm(f, 6), rep.grad_l2)
    r3 = ratio(lp_norm(f, 3), math.sqrt(rep.l2 * rep.grad_l2) if rep.l2 * rep.grad_l2 > 0 else 0.0)
    rinf = ratio(
        lp_norm(f, math.inf),
        math.sqrt(rep.grad_l2 * rep.lap_l2) if rep.grad_l2 * rep.lap_l2 > 0 else 0.0,
    )
    return GNRatios(r6=r6, r3=r3, rinf=rinf)
