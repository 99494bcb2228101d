"""
Periodic grids, transforms and Sobolev norms on the 2π-torus.

Conventions
-----------
Analysis carries the 1/2π prefactor, synthesis carries none::

    f̂(k) = (1/2π) ∫_{-π}^{π} f(x) e^{-ikx} dx,      f(x) = Σ_k f̂(k) e^{ikx}

so on a grid of ``n`` points the coefficients are ``fft(f) / n``. Spectral
fields store the retained modes ``k = -K..K`` in centred order, with
``K = n/2 - 1``; the Nyquist mode is always dropped.

Norms reported here are *truncated* norms: sums over retained modes only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

SYMMETRY_RTOL = 1e-10


class GridError(ValueError):
    """Raised for invalid grids or mismatched grids between fields."""


class SymmetryError(ValueError):
    """Raised when coefficients that should describe a real field are not conjugate-symmetric."""


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform collocation grid x_j = -π + 2πj/n on [-π, π)."""

    n_points: int

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise GridError(f"n_points must be an integer, got {n!r}")
        if n < 8 or n & (n - 1):
            raise GridError(f"n_points must be a power of two >= 8, got {n}")

    @property
    def mode_cutoff(self) -> int:
        return self.n_points // 2 - 1

    @property
    def n_modes(self) -> int:
        return 2 * self.mode_cutoff + 1

    @property
    def spacing(self) -> float:
        return 2 * np.pi / self.n_points

    @cached_property
    def points(self) -> np.ndarray:
        return -np.pi + self.spacing * np.arange(self.n_points)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers -K..K in storage order."""
        K = self.mode_cutoff
        return np.arange(-K, K + 1)

    def sobolev_weights(self, s: float) -> np.ndarray:
        """(1+k²)^s per retained mode (read-only, cached)."""
        return _weights(self.n_points, float(s))


@lru_cache(maxsize=256)
def _weights(n_points: int, s: float) -> np.ndarray:
    K = n_points // 2 - 1
    w = (1.0 + np.arange(-K, K + 1, dtype=float) ** 2) ** s
    w.setflags(write=False)
    return w


@dataclass(frozen=True, eq=False)
class RealField:
    """Samples of a real periodic function at the grid points."""

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_points,):
            raise GridError(
                f"expected {self.grid.n_points} samples, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: PeriodicGrid, func) -> "RealField":
        return cls(grid, func(grid.points))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Retained Fourier coefficients η̂(k), k = -K..K, of a field on ``grid``.

    Supports ``+``, ``-`` and scaling by real or complex scalars; all other
    operations live in module-level functions.
    """

    grid: PeriodicGrid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.grid.n_modes,):
            raise GridError(
                f"expected {self.grid.n_modes} coefficients, got shape {c.shape}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: PeriodicGrid) -> "SpectralField":
        return cls(grid, np.zeros(grid.n_modes, dtype=complex))

    @classmethod
    def from_modes(cls, grid: PeriodicGrid, modes: dict[int, complex]) -> "SpectralField":
        """Build a field from a ``{k: coefficient}`` mapping."""
        c = np.zeros(grid.n_modes, dtype=complex)
        K = grid.mode_cutoff
        for k, value in modes.items():
            if abs(k) > K:
                raise GridError(f"mode {k} beyond cutoff {K}")
            c[k + K] = value
        return cls(grid, c)

    def mode(self, k: int) -> complex:
        K = self.grid.mode_cutoff
        if abs(k) > K:
            return 0j
        return complex(self.coeffs[k + K])

    @property
    def mean(self) -> float:
        return float(self.coeffs[self.grid.mode_cutoff].real)

    def symmetry_defect(self) -> float:
        """max |F(-k) - conj F(k)|, zero for fields of real functions."""
        c = self.coeffs
        return float(np.max(np.abs(c[::-1] - np.conj(c)))) if c.size else 0.0

    def is_real(self, rtol: float = SYMMETRY_RTOL) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.coeffs))))
        return self.symmetry_defect() <= rtol * scale

    def _check(self, other: "SpectralField"):
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.grid != self.grid:
            raise GridError("fields live on different grids")

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)


# ---------------------------------------------------------------------------
# Array-level helpers. The evolution loop works on raw centred coefficient
# arrays (possibly stacked along leading axes) and only wraps at the edges.
# ---------------------------------------------------------------------------


def mirror(half: np.ndarray) -> np.ndarray:
    """Centred array from nonnegative modes 0..K, negative modes by conjugation."""
    return np.concatenate([np.conj(half[..., :0:-1]), half], axis=-1)


def positive_half(coeffs: np.ndarray) -> np.ndarray:
    K = coeffs.shape[-1] // 2
    return coeffs[..., K:]


def _synthesize(half: np.ndarray, n: int) -> np.ndarray:
    """Grid values (length n) from nonnegative modes 0..K."""
    spec = np.zeros(half.shape[:-1] + (n // 2 + 1,), dtype=complex)
    spec[..., : half.shape[-1]] = half
    return np.fft.irfft(spec, n=n, axis=-1) * n


def _analyze(values: np.ndarray, K: int) -> np.ndarray:
    """Nonnegative modes 0..K of grid values."""
    n = values.shape[-1]
    return np.fft.rfft(values, axis=-1)[..., : K + 1] / n


def product_coeffs(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Truncated spectrum of the product of two real fields given as centred arrays.

    Both factors are synthesized on a grid of 3(K+1) points, i.e. 3n/2; any
    alias of a product mode |p| <= 2K then lands outside -K..K, so the
    retained modes are exact. Leading axes broadcast.
    """
    K = f.shape[-1] // 2
    m = 3 * (K + 1)
    fv = _synthesize(positive_half(f), m)
    gv = fv if g is f else _synthesize(positive_half(g), m)
    return mirror(_analyze(fv * gv, K))


def square_coeffs(f: np.ndarray) -> np.ndarray:
    return product_coeffs(f, f)


# ---------------------------------------------------------------------------
# Public operations on fields
# ---------------------------------------------------------------------------


def _origin_shift(K: int) -> np.ndarray:
    """(-1)^k for k = 0..K: the grid starts at x = -π, not at 0."""
    return np.where(np.arange(K + 1) % 2, -1.0, 1.0)


def forward_transform(f: RealField) -> SpectralField:
    """Coefficients of ``f`` under the 1/2π analysis convention."""
    K = f.grid.mode_cutoff
    return SpectralField(f.grid, mirror(_analyze(f.values, K) * _origin_shift(K)))


def inverse_transform(F: SpectralField, rtol: float = SYMMETRY_RTOL) -> RealField:
    """Synthesize Σ_k F(k) e^{ikx_j} at the grid points.

    Raises
    ------
    SymmetryError
        If ``F`` is not conjugate-symmetric to within ``rtol`` (relative to its
        largest coefficient), which indicates a corrupted state.
    """
    if not F.is_real(rtol):
        raise SymmetryError(
            f"coefficients are not conjugate-symmetric (defect {F.symmetry_defect():.3e})"
        )
    grid = F.grid
    half = positive_half(F.coeffs) * _origin_shift(grid.mode_cutoff)
    half[0] = half[0].real
    return RealField(grid, _synthesize(half, grid.n_points))


def _same_grid(F: SpectralField, G: SpectralField):
    if F.grid != G.grid:
        raise GridError(
            f"grid mismatch: {F.grid.n_points} vs {G.grid.n_points} points"
        )


def sobolev_norm(F: SpectralField, s: float) -> float:
    """Truncated H^s norm (Σ (1+k²)^s |F(k)|²)^{1/2}."""
    return weighted_norm(F.coeffs, F.grid.sobolev_weights(s))


def weighted_norm(coeffs: np.ndarray, weights: np.ndarray) -> float:
    return float(np.sqrt(np.sum(weights * (coeffs.real**2 + coeffs.imag**2))))


def sobolev_inner(F: SpectralField, G: SpectralField, s: float) -> complex:
    """(F, G)_s = Σ (1+k²)^s F(k) conj(G(k))."""
    _same_grid(F, G)
    return complex(np.sum(F.grid.sobolev_weights(s) * F.coeffs * np.conj(G.coeffs)))


def dealiased_product(F: SpectralField, G: SpectralField) -> SpectralField:
    """Exact projection onto retained modes of the product of two real fields."""
    _same_grid(F, G)
    return SpectralField(F.grid, product_coeffs(F.coeffs, G.coeffs))


def sup_norm(F: SpectralField) -> float:
    """Max of |f| over collocation points; a lower bound on the true sup."""
    return float(np.max(np.abs(inverse_transform(F).values)))
