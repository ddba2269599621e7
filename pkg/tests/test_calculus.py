"""Spectral operators, projection, mollifier, products, and identities.

Derivative oracles are closed-form trigonometric polynomials evaluated on
the grid; product oracles come from an oversampled (alias-free) grid.
"""

import math

import numpy as np
import pytest

from hallmhd.calculus import (
    advect,
    cross,
    derive,
    hall_identity_residual,
    inner,
    l2_norm,
    leray_project,
    mollify,
    pointwise_dot,
    pointwise_scale,
)
from hallmhd.fields import (
    ScalarField,
    VectorField,
    make_grid,
    random_bandlimited,
    single_mode,
)


def _trig_scalar(g):
    x, y, z = g.coords()
    vals = np.sin(x) * np.cos(2 * y) + 0.5 * np.cos(z) + 0.0 * z
    return ScalarField.from_physical(g, np.broadcast_to(vals, (g.n,) * 3).copy())


def test_grad_against_closed_form():
    g = make_grid(16)
    f = _trig_scalar(g)
    x, y, z = g.coords()
    expect = np.stack(
        [
            np.broadcast_to(np.cos(x) * np.cos(2 * y) + 0.0 * z, (g.n,) * 3),
            np.broadcast_to(-2 * np.sin(x) * np.sin(2 * y) + 0.0 * z, (g.n,) * 3),
            np.broadcast_to(-0.5 * np.sin(z) + 0.0 * x + 0.0 * y, (g.n,) * 3),
        ]
    )
    got = derive(f, "grad").to_physical()
    assert np.allclose(got, expect, atol=1e-12)


def test_div_and_curl_against_closed_form():
    g = make_grid(16)
    x, y, z = g.coords()
    shape = (g.n,) * 3
    vals = np.stack(
        [
            np.broadcast_to(np.sin(y) + 0.0 * x + 0.0 * z, shape),
            np.broadcast_to(np.cos(z) + 0.0 * x + 0.0 * y, shape),
            np.broadcast_to(np.sin(x) + 0.0 * y + 0.0 * z, shape),
        ]
    )
    v = VectorField.from_physical(g, vals)
    assert np.allclose(derive(v, "div").to_physical(), 0.0, atol=1e-13)
    expect_curl = np.stack(
        [
            np.broadcast_to(np.sin(z) + 0.0 * x + 0.0 * y, shape),
            np.broadcast_to(-np.cos(x) + 0.0 * y + 0.0 * z, shape),
            np.broadcast_to(-np.cos(y) + 0.0 * x + 0.0 * z, shape),
        ]
    )
    assert np.allclose(derive(v, "curl").to_physical(), expect_curl, atol=1e-13)


def test_vector_calculus_identities():
    g = make_grid(16)
    f = _trig_scalar(g)
    v = random_bandlimited(g, 5, 4, divergence_free=False)
    assert l2_norm(derive(derive(f, "grad"), "curl")) < 1e-13
    assert l2_norm(derive(derive(v, "curl"), "div")) < 1e-13
    lap = derive(v, "laplacian")
    split = derive(v, "grad_div") - derive(v, "curl_curl")
    assert l2_norm(lap - split) < 1e-12 * (l2_norm(lap) + 1)


def test_derive_type_and_kind_errors():
    g = make_grid(8)
    f = _trig_scalar(g)
    v = random_bandlimited(g, 0, 2)
    with pytest.raises(ValueError):
        derive(v, "hessian")
    with pytest.raises(TypeError):
        derive(v, "grad")
    for kind in ("div", "curl", "curl_curl", "grad_div"):
        with pytest.raises(TypeError):
            derive(f, kind)


def test_leray_projection_properties():
    g = make_grid(16)
    v = random_bandlimited(g, 9, 4, divergence_free=False)
    pv = leray_project(v)
    assert l2_norm(derive(pv, "div")) < 1e-13 * (l2_norm(v) + 1)
    assert l2_norm(leray_project(pv) - pv) < 1e-14 * (l2_norm(v) + 1)
    # Orthogonality and invariance on the solenoidal part.
    assert abs(inner(pv, v - pv)) < 1e-13 * l2_norm(v) ** 2
    w = random_bandlimited(g, 10, 4, divergence_free=True)
    assert l2_norm(leray_project(w) - w) < 1e-14


def test_mollifier_is_projection_and_commutes():
    g = make_grid(16)
    a = random_bandlimited(g, 1, 5, divergence_free=False)
    b = random_bandlimited(g, 2, 5, divergence_free=False)
    ja = mollify(a, 3)
    assert np.max(np.abs(ja.c[:, g.mode_inf > 3])) == 0.0
    assert np.allclose(mollify(ja, 3).c, ja.c)
    # Self-adjoint: (Ja, b) = (a, Jb).
    assert inner(ja, b) == pytest.approx(inner(a, mollify(b, 3)), rel=1e-12)
    # Commutes with derivatives and the projection.
    assert l2_norm(mollify(derive(a, "curl"), 3) - derive(ja, "curl")) < 1e-14
    assert l2_norm(mollify(leray_project(a), 3) - leray_project(ja)) < 1e-14
    # At or above the grid cutoff it is the identity.
    assert np.allclose(mollify(a, g.n // 2).c, a.c)
    with pytest.raises(ValueError):
        mollify(a, 0)


def _resample(field, fine_grid):
    """Zero-pad the spectrum onto a finer grid (exact for band-limited data)."""
    n, m = field.grid.n, fine_grid.n
    cf = np.zeros(field.c.shape[:-3] + (m, m, m), dtype=complex)
    h = n // 2
    idx = np.r_[0:h, m - h : m]
    src = np.r_[0:h, n - h : n]
    cf[..., np.ix_(idx, idx, idx)[0], np.ix_(idx, idx, idx)[1], np.ix_(idx, idx, idx)[2]] = (
        field.c[..., np.ix_(src, src, src)[0], np.ix_(src, src, src)[1], np.ix_(src, src, src)[2]]
    )
    return type(field)(fine_grid, cf)


def test_cross_matches_oversampled_oracle():
    g = make_grid(16)
    fine = make_grid(32)
    a = random_bandlimited(g, 3, 3)
    b = random_bandlimited(g, 4, 3)
    got = cross(a, b)
    # On the fine grid the quadratic product is alias-free; truncating its
    # spectrum back to the coarse retained modes is the exact answer.
    ref = cross(_resample(a, fine), _resample(b, fine))
    ref_back = np.zeros_like(got.c)
    for kx in range(-5, 6):
        for ky in range(-5, 6):
            for kz in range(-5, 6):
                ref_back[:, kx, ky, kz] = ref.c[:, kx, ky, kz]
    assert np.max(np.abs(got.c - ref_back)) < 1e-14


def test_cross_antisymmetry_and_orthogonality():
    g = make_grid(16)
    a = random_bandlimited(g, 6, 3)
    b = random_bandlimited(g, 7, 3)
    assert l2_norm(cross(a, b) + cross(b, a)) < 1e-14
    # (a x b) . a integrates to zero (pointwise orthogonality).
    assert abs(inner(cross(a, b), a)) < 1e-15


def test_advect_closed_form():
    g = make_grid(16)
    u = single_mode(g, (0, 1, 0), direction=0)  # (sin y, 0, 0)
    f = single_mode(g, (1, 0, 0), direction=1)  # (0, sin x, 0)
    # [u.grad]f = sin(y) d/dx (0, sin x, 0) = (0, sin y cos x, 0).
    got = advect(u, f).to_physical()
    x, y, z = g.coords()
    expect = np.broadcast_to(np.sin(y) * np.cos(x) + 0.0 * z, (g.n,) * 3)
    assert np.allclose(got[1], expect, atol=1e-13)
    assert np.allclose(got[0], 0.0, atol=1e-13)
    assert np.allclose(got[2], 0.0, atol=1e-13)
    # Self-advection of a shear flow vanishes.
    assert l2_norm(advect(u, u)) < 1e-14


def test_pointwise_products():
    g = make_grid(16)
    a = single_mode(g, (0, 1, 0), direction=0)
    d = pointwise_dot(a, a).to_physical()  # sin^2 y
    x, y, z = g.coords()
    assert np.allclose(d, np.broadcast_to(np.sin(y) ** 2 + 0.0 * x + 0.0 * z, (g.n,) * 3), atol=1e-13)
    s = ScalarField.from_physical(g, np.broadcast_to(np.cos(y) + 0.0 * x + 0.0 * z, (g.n,) * 3).copy())
    sv = pointwise_scale(s, a).to_physical()
    assert np.allclose(sv[0], np.broadcast_to(np.cos(y) * np.sin(y) + 0.0 * x + 0.0 * z, (g.n,) * 3), atol=1e-13)


def test_inner_matches_quadrature():
    g = make_grid(16)
    a = random_bandlimited(g, 1, 4)
    b = random_bandlimited(g, 2, 4)
    quad = g.volume * np.mean(np.einsum("i...,i...->...", a.to_physical(), b.to_physical()))
    assert inner(a, b) == pytest.approx(quad, rel=1e-11, abs=1e-13)
    assert l2_norm(a) == pytest.approx(math.sqrt(inner(a, a)), rel=1e-13)


def test_curl_cross_expansion_identities():
    g = make_grid(32)
    for seed in range(3):
        a = random_bandlimited(g, 2 * seed, 4)
        b = random_bandlimited(g, 2 * seed + 1, 4)
        scale = l2_norm(a) * l2_norm(b) + 1.0
        assert hall_identity_residual(a, b, "first") < 1e-11 * scale
        assert hall_identity_residual(a, b, "second") < 1e-11 * scale
    with pytest.raises(ValueError):
        hall_identity_residual(a, b, "third")
