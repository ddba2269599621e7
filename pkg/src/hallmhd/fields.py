"""
Periodic grid definition, physical/spectral transforms, dealiasing, and
deterministic field construction.

Canonical storage for every field is the array of complex Fourier
coefficients with unitary-average normalization: the coefficient of mode k
is (1/n^3) * sum_x f(x) exp(-i k.x).  Physical values are materialized on
demand.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

TWO_PI = 2.0 * np.pi


def _fft_workers() -> int:
    """Worker-thread cap for the FFT backend (HALLMHD_MAX_THREADS)."""
    try:
        return max(1, int(os.environ.get("HALLMHD_MAX_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class GridSpec:
    """
    Pre-computed spectral quantities for a periodic cubic box.

    Parameters
    ----------
    n : int
        Grid points per axis.  Must be even and at least 8.
    length : float
        Box edge length (default 2*pi, so wavenumbers are integers).
    dealias_fraction : float
        Fraction of retained modes per axis for the dealias mask
        (default 2/3, the standard rule for quadratic products).
    """

    n: int
    length: float = TWO_PI
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self) -> None:
        if self.n % 2 != 0 or self.n < 8:
            raise ValueError("resolution must be even and >= 8")
        if self.length <= 0:
            raise ValueError("box length must be positive")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValueError("dealias fraction must lie in (0, 1]")

        n = self.n
        # Integer mode numbers in FFT order: {0, 1, ..., n/2-1, -n/2, ..., -1}.
        m1 = np.fft.fftfreq(n, 1.0 / n)
        scale = TWO_PI / self.length
        mx = m1[:, None, None]
        my = m1[None, :, None]
        mz = m1[None, None, :]
        object.__setattr__(self, "modes", (mx, my, mz))

        # Physical wavenumbers.  kd_* have the Nyquist mode zeroed: an odd
        # (i*k) multiplier at the unpaired Nyquist mode would break Hermitian
        # symmetry of real fields.
        kd1 = m1.copy()
        kd1[n // 2] = 0.0
        kd = (
            scale * kd1[:, None, None],
            scale * kd1[None, :, None],
            scale * kd1[None, None, :],
        )
        object.__setattr__(self, "kd", kd)
        k2 = (scale * mx) ** 2 + (scale * my) ** 2 + (scale * mz) ** 2
        object.__setattr__(self, "k2", k2)

        kmax_retained = int(np.floor(self.dealias_fraction * (n // 2)))
        object.__setattr__(self, "kmax_retained", kmax_retained)
        if self.dealias_fraction == 1.0:
            mask = np.ones((n, n, n), dtype=bool)
        else:
            mask = (
                (np.abs(mx) <= kmax_retained)
                & (np.abs(my) <= kmax_retained)
                & (np.abs(mz) <= kmax_retained)
            )
        object.__setattr__(self, "dealias_mask", mask)

        # |m|_inf per mode, for the spectral mollifier cutoff.
        minf = np.maximum(np.abs(mx), np.maximum(np.abs(my), np.abs(mz)))
        minf = np.broadcast_to(minf, (n, n, n))
        object.__setattr__(self, "mode_inf", minf)

    @property
    def volume(self) -> float:
        return self.length**3

    @property
    def dx(self) -> float:
        return self.length / self.n

    def coords(self):
        """1D coordinate arrays (x, y, z) as broadcastable 3D views."""
        x1 = np.arange(self.n) * self.dx
        return x1[:, None, None], x1[None, :, None], x1[None, None, :]


def make_grid(n: int, length: float = TWO_PI, dealias_fraction: float = 2.0 / 3.0) -> GridSpec:
    """Construct a :class:`GridSpec` with precomputed wavenumbers and mask."""
    return GridSpec(n=n, length=length, dealias_fraction=dealias_fraction)


def _to_spectral(values: np.ndarray) -> np.ndarray:
    n3 = values.shape[-1] * values.shape[-2] * values.shape[-3]
    return sfft.fftn(values, axes=(-3, -2, -1), workers=_fft_workers()) / n3


def _to_physical(coeffs: np.ndarray) -> np.ndarray:
    n3 = coeffs.shape[-1] * coeffs.shape[-2] * coeffs.shape[-3]
    return sfft.ifftn(coeffs * n3, axes=(-3, -2, -1), workers=_fft_workers())


@dataclass(frozen=True)
class ScalarField:
    """A real scalar field on the periodic grid, stored spectrally."""

    grid: GridSpec
    c: np.ndarray  # complex (n, n, n)

    def __post_init__(self) -> None:
        n = self.grid.n
        if self.c.shape != (n, n, n):
            raise ValueError(f"coefficient shape {self.c.shape} does not match grid n={n}")

    @classmethod
    def from_physical(cls, grid: GridSpec, values: np.ndarray) -> "ScalarField":
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n,) * 3:
            raise ValueError(f"physical shape {values.shape} does not match grid n={grid.n}")
        return cls(grid, _to_spectral(values))

    def to_physical(self) -> np.ndarray:
        return _to_physical(self.c).real

    def __add__(self, other: "ScalarField") -> "ScalarField":
        _check_same_grid(self, other)
        return ScalarField(self.grid, self.c + other.c)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        _check_same_grid(self, other)
        return ScalarField(self.grid, self.c - other.c)

    def __mul__(self, a: float) -> "ScalarField":
        return ScalarField(self.grid, self.c * a)

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.grid, -self.c)


@dataclass(frozen=True)
class VectorField:
    """A 3-component real vector field on the periodic grid, stored spectrally."""

    grid: GridSpec
    c: np.ndarray  # complex (3, n, n, n)

    def __post_init__(self) -> None:
        n = self.grid.n
        if self.c.shape != (3, n, n, n):
            raise ValueError(f"coefficient shape {self.c.shape} does not match grid n={n}")

    @classmethod
    def from_physical(cls, grid: GridSpec, values: np.ndarray) -> "VectorField":
        values = np.asarray(values, dtype=float)
        if values.shape != (3,) + (grid.n,) * 3:
            raise ValueError(f"physical shape {values.shape} does not match grid n={grid.n}")
        return cls(grid, _to_spectral(values))

    def to_physical(self) -> np.ndarray:
        return _to_physical(self.c).real

    @property
    def mean(self) -> np.ndarray:
        """The k=0 mode per component (the spatial average)."""
        return self.c[:, 0, 0, 0].real.copy()

    def __add__(self, other: "VectorField") -> "VectorField":
        _check_same_grid(self, other)
        return VectorField(self.grid, self.c + other.c)

    def __sub__(self, other: "VectorField") -> "VectorField":
        _check_same_grid(self, other)
        return VectorField(self.grid, self.c - other.c)

    def __mul__(self, a: float) -> "VectorField":
        return VectorField(self.grid, self.c * a)

    __rmul__ = __mul__

    def __neg__(self) -> "VectorField":
        return VectorField(self.grid, -self.c)


def _check_same_grid(a, b) -> None:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def imaginary_residue(field) -> float:
    """Max absolute imaginary part of the materialized physical values."""
    return float(np.max(np.abs(_to_physical(field.c).imag)))


def dealias(field):
    """Zero all modes outside the grid's dealias mask (a projection)."""
    cls = type(field)
    return cls(field.grid, field.c * field.grid.dealias_mask)


def zero_field(grid: GridSpec) -> VectorField:
    return VectorField(grid, np.zeros((3, grid.n, grid.n, grid.n), dtype=complex))


def zero_scalar(grid: GridSpec) -> ScalarField:
    return ScalarField(grid, np.zeros((grid.n,) * 3, dtype=complex))


def single_mode(grid: GridSpec, k, direction: int, amplitude: float = 1.0) -> VectorField:
    """
    The field amplitude * sin(k.x) in the given Cartesian component.

    For k orthogonal to the component direction this is divergence-free by
    construction (e.g. k=(0,1,0), direction=0 gives (sin y, 0, 0)).
    """
    k = np.asarray(k, dtype=float)
    if np.max(np.abs(k)) > grid.kmax_retained:
        raise ValueError("mode lies outside the dealias mask")
    x, y, z = grid.coords()
    phase = (TWO_PI / grid.length) * (k[0] * x + k[1] * y + k[2] * z)
    vals = np.zeros((3, grid.n, grid.n, grid.n))
    vals[direction] = amplitude * np.sin(phase)
    return VectorField.from_physical(grid, vals)


def _project_div_free(grid: GridSpec, c: np.ndarray) -> np.ndarray:
    kx, ky, kz = grid.kd
    kdotc = kx * c[0] + ky * c[1] + kz * c[2]
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(grid.k2 > 0, kdotc / grid.k2, 0.0)
    out = c.copy()
    out[0] -= kx * factor
    out[1] -= ky * factor
    out[2] -= kz * factor
    return out


def random_bandlimited(
    grid: GridSpec,
    seed: int,
    kmax: int,
    amplitude: float = 1.0,
    divergence_free: bool = True,
) -> VectorField:
    """
    Seeded random zero-mean field supported on modes |m|_inf <= kmax,
    scaled so the H^1 seminorm (L^2 norm of the gradient) equals `amplitude`.
    """
    if kmax > grid.kmax_retained:
        raise ValueError("kmax lies outside the dealias mask")
    rng = np.random.default_rng(seed)
    # Real white noise in physical space keeps Hermitian symmetry exact.
    noise = rng.standard_normal((3, grid.n, grid.n, grid.n))
    c = _to_spectral(noise)
    keep = (grid.mode_inf <= kmax)
    c *= keep
    c[:, 0, 0, 0] = 0.0
    if divergence_free:
        c = _project_div_free(grid, c)
    grad_sq = grid.volume * np.sum(grid.k2 * np.abs(c) ** 2)
    if grad_sq > 0:
        c *= amplitude / np.sqrt(grad_sq)
    return VectorField(grid, c)
