"""
Spectral differential operators, the Helmholtz-Leray projection, the
spectral mollifier, pointwise nonlinear products, and residual evaluators
for the curl-of-cross-product vector identities.

All derivatives are exact Fourier multipliers.  Nonlinear products are
formed pointwise in physical space and dealiased once afterwards.
"""

from __future__ import annotations

import numpy as np

from .fields import (
    GridSpec,
    ScalarField,
    VectorField,
    _check_same_grid,
    _project_div_free,
    _to_physical,
    _to_spectral,
    dealias,
)

DERIV_KINDS = ("grad", "div", "curl", "laplacian", "curl_curl", "grad_div")


def _grad_c(grid: GridSpec, c: np.ndarray) -> np.ndarray:
    kx, ky, kz = grid.kd
    return np.stack([1j * kx * c, 1j * ky * c, 1j * kz * c])


def _div_c(grid: GridSpec, c: np.ndarray) -> np.ndarray:
    kx, ky, kz = grid.kd
    return 1j * (kx * c[0] + ky * c[1] + kz * c[2])


def _curl_c(grid: GridSpec, c: np.ndarray) -> np.ndarray:
    kx, ky, kz = grid.kd
    return np.stack(
        [
            1j * (ky * c[2] - kz * c[1]),
            1j * (kz * c[0] - kx * c[2]),
            1j * (kx * c[1] - ky * c[0]),
        ]
    )


def derive(field, kind: str):
    """
    Apply an exact spectral differential operator.

    grad: scalar -> vector; div: vector -> scalar; curl, curl_curl,
    grad_div, laplacian (vector or scalar) as usual.
    """
    if kind not in DERIV_KINDS:
        raise ValueError(f"unknown derivative kind {kind!r}")
    grid = field.grid
    if kind == "grad":
        if not isinstance(field, ScalarField):
            raise TypeError("grad expects a scalar field")
        return VectorField(grid, _grad_c(grid, field.c))
    if kind == "div":
        if not isinstance(field, VectorField):
            raise TypeError("div expects a vector field")
        return ScalarField(grid, _div_c(grid, field.c))
    if kind == "curl":
        if not isinstance(field, VectorField):
            raise TypeError("curl expects a vector field")
        return VectorField(grid, _curl_c(grid, field.c))
    if kind == "laplacian":
        return type(field)(grid, -grid.k2 * field.c)
    if kind == "curl_curl":
        if not isinstance(field, VectorField):
            raise TypeError("curl_curl expects a vector field")
        return VectorField(grid, _curl_c(grid, _curl_c(grid, field.c)))
    # grad_div
    if not isinstance(field, VectorField):
        raise TypeError("grad_div expects a vector field")
    return VectorField(grid, _grad_c(grid, _div_c(grid, field.c)))


def leray_project(v: VectorField) -> VectorField:
    """
    L^2-orthogonal projection onto divergence-free fields.

    The k=0 mode is left unchanged (constants are trivially solenoidal).
    """
    return VectorField(v.grid, _project_div_free(v.grid, v.c))


def mollify(field, n: int):
    """
    Spectral low-pass retaining modes with |m|_inf <= n.

    A sharp cutoff, hence a projection: idempotent, self-adjoint, and
    commuting with every other Fourier multiplier here.
    """
    if n < 1:
        raise ValueError("mollifier level must be >= 1")
    return type(field)(field.grid, field.c * (field.grid.mode_inf <= n))


def cross(a: VectorField, b: VectorField) -> VectorField:
    """Pointwise cross product a x b, dealiased."""
    _check_same_grid(a, b)
    ap = a.to_physical()
    bp = b.to_physical()
    prod = np.stack(
        [
            ap[1] * bp[2] - ap[2] * bp[1],
            ap[2] * bp[0] - ap[0] * bp[2],
            ap[0] * bp[1] - ap[1] * bp[0],
        ]
    )
    return dealias(VectorField(a.grid, _to_spectral(prod)))


def advect(u: VectorField, f: VectorField) -> VectorField:
    """The advective term [u.grad]f, dealiased."""
    _check_same_grid(u, f)
    grid = u.grid
    up = u.to_physical()
    kx, ky, kz = grid.kd
    out = np.empty_like(up)
    for j in range(3):
        dj = _to_physical(
            np.stack([1j * kx * f.c[j], 1j * ky * f.c[j], 1j * kz * f.c[j]])
        ).real
        out[j] = up[0] * dj[0] + up[1] * dj[1] + up[2] * dj[2]
    return dealias(VectorField(grid, _to_spectral(out)))


def pointwise_dot(a: VectorField, b: VectorField) -> ScalarField:
    """Pointwise scalar product a.b, dealiased."""
    _check_same_grid(a, b)
    ap = a.to_physical()
    bp = b.to_physical()
    return dealias(ScalarField(a.grid, _to_spectral(np.einsum("i...,i...->...", ap, bp))))


def pointwise_scale(s: ScalarField, v: VectorField) -> VectorField:
    """Pointwise product of a scalar field with a vector field, dealiased."""
    _check_same_grid(s, v)
    return dealias(VectorField(v.grid, _to_spectral(s.to_physical() * v.to_physical())))


def inner(a, b) -> float:
    """The L^2 pairing over the box, computed from spectral coefficients."""
    _check_same_grid(a, b)
    return float(a.grid.volume * np.sum(np.conj(a.c) * b.c).real)


def l2_norm(field) -> float:
    """The L^2 norm over the box, computed from spectral coefficients."""
    return float(np.sqrt(field.grid.volume * np.sum(np.abs(field.c) ** 2)))


def hall_identity_residual(A: VectorField, B: VectorField, which: str) -> float:
    """
    L^2 norm of (left - right) for the expansion of
    curl((curl^m A) x B) - (curl^{m+1} A) x B, with m=1 for 'first' and
    m=2 for 'second'.  Both sides are assembled term by term from the
    product and derivative operators above.
    """
    _check_same_grid(A, B)
    if which == "first":
        X = derive(A, "curl")
    elif which == "second":
        X = derive(A, "curl_curl")
    else:
        raise ValueError("which must be 'first' or 'second'")
    lhs = derive(cross(X, B), "curl") - cross(derive(X, "curl"), B)
    rhs = (
        pointwise_scale(derive(B, "div"), X)
        - 2.0 * advect(X, B)
        - cross(X, derive(B, "curl"))
        + derive(pointwise_dot(X, B), "grad")
    )
    return l2_norm(lhs - rhs)
