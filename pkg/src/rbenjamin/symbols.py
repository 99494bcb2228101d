"""Fourier multipliers of the regularized Benjamin family.

The linear part of the model is η̂_t = -i φ(k) η̂ with

    m_H(k) = 1 + b|k| + a k²              (infinite depth, Hilbert operator)
    m_T(k) = 1 + b k coth(hk) + a k²      (finite depth h, strip operator)
    φ(k)   = k / m(k)

All symbol functions accept scalars or arrays of (possibly non-integer) k.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral import PeriodicGrid, SpectralField

# Below this |hk| the strip symbol switches to its Taylor branch.
SERIES_THRESHOLD = 1e-4


class Operator(enum.Enum):
    HILBERT = "hilbert"
    STRIP = "strip"


class ParameterError(ValueError):
    """Raised for model parameters outside the supported regime."""


@dataclass(frozen=True)
class ModelParams:
    """Model constants.

    ``alpha`` may be zero (the linear limit); ``a`` must be positive. ``b = 0``
    is the BBM limit and is only accepted with ``allow_b_zero=True``. ``h`` is
    read only by the strip operator.
    """

    alpha: float = 1.0
    a: float = 1.0
    b: float = 1.0
    h: float = np.inf
    operator: Operator = Operator.HILBERT
    allow_b_zero: bool = False

    def __post_init__(self):
        op = self.operator
        if isinstance(op, str):
            try:
                op = Operator(op.lower())
            except ValueError:
                raise ParameterError(f"operator: unknown operator {op!r}") from None
            object.__setattr__(self, "operator", op)
        for name in ("alpha", "a", "b", "h"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) or np.isnan(value):
                raise ParameterError(f"{name}: expected a real number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if not np.isfinite(self.alpha) or self.alpha < 0:
            raise ParameterError(f"alpha: must be finite and >= 0, got {self.alpha}")
        if not np.isfinite(self.a) or self.a <= 0:
            raise ParameterError(
                f"a: must be a positive constant, got {self.a}"
            )
        if not np.isfinite(self.b) or self.b < 0:
            raise ParameterError(f"b: must be a positive constant, got {self.b}")
        if self.b == 0:
            if not self.allow_b_zero:
                raise ParameterError(
                    "b: must be a positive constant, got 0 (set allow_b_zero to run the BBM limit)"
                )
            warnings.warn("b = 0: running outside the model's positive-b regime", stacklevel=2)
        if op is Operator.STRIP and not (self.h > 0 and np.isfinite(self.h)):
            raise ParameterError(f"h: strip operator needs a finite h > 0, got {self.h}")


def _k_coth_hk(k: np.ndarray, h: float) -> np.ndarray:
    """|k| coth(h|k|), with the k → 0 limit 1/h."""
    ak = np.abs(k)
    hk = h * ak
    small = hk < SERIES_THRESHOLD
    out = np.empty_like(ak)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[~small] = ak[~small] * (1.0 / np.tanh(hk[~small]))
    out[small] = 1.0 / h + h * ak[small] ** 2 / 3.0
    return out


def m_symbol(k, p: ModelParams):
    """Regularization symbol m(k) >= 1, even in k."""
    k = np.asarray(k, dtype=float)
    ak = np.abs(k)
    if p.operator is Operator.HILBERT:
        disp = ak
    else:
        disp = _k_coth_hk(np.atleast_1d(ak), p.h).reshape(ak.shape)
    out = 1.0 + p.b * disp + p.a * ak * ak
    return out if out.ndim else float(out)


def phi_symbol(k, p: ModelParams):
    """Dispersion multiplier φ(k) = k / m(k), odd in k."""
    k = np.asarray(k, dtype=float)
    # sign(k) * (|k|/m) keeps φ exactly odd
    out = np.sign(k) * (np.abs(k) / m_symbol(k, p))
    return out if out.ndim else float(out)


def phi_bound(p: ModelParams) -> float:
    """Uniform bound sup_k |φ(k)| <= 1/(b + 2√a)."""
    return 1.0 / (p.b + 2.0 * np.sqrt(p.a))


@dataclass(frozen=True, eq=False)
class SymbolTable:
    """Per-mode m(k), φ(k) and the generator multiplier -iφ(k) on a grid."""

    grid: PeriodicGrid
    params: ModelParams
    m: np.ndarray
    phi: np.ndarray
    generator: np.ndarray

    def __post_init__(self):
        K = self.grid.mode_cutoff
        m, phi = self.m, self.phi
        if not (np.all(m >= 1.0) and np.array_equal(m, m[::-1])):
            raise AssertionError("m must be even and >= 1")
        if not (np.array_equal(phi, -phi[::-1]) and phi[K] == 0.0):
            raise AssertionError("phi must be odd with phi(0) = 0")
        for arr in (self.m, self.phi, self.generator):
            arr.setflags(write=False)


@lru_cache(maxsize=64)
def symbol_table(grid: PeriodicGrid, params: ModelParams) -> SymbolTable:
    """Build (and cache) the table for ``grid`` and ``params``."""
    k_pos = np.arange(grid.mode_cutoff + 1, dtype=float)
    m_pos = np.atleast_1d(m_symbol(k_pos, params))
    phi_pos = k_pos / m_pos
    m = np.concatenate([m_pos[:0:-1], m_pos])
    phi = np.concatenate([-phi_pos[:0:-1], phi_pos])
    return SymbolTable(grid, params, m, phi, -1j * phi)


def hilbert_transform(F: SpectralField) -> SpectralField:
    """Multiplier i·sgn(k); the k = 0 mode is mapped to zero."""
    k = F.grid.wavenumbers
    return SpectralField(F.grid, 1j * np.sign(k) * F.coeffs)


def strip_multiplier(k, h: float) -> np.ndarray:
    """i·coth(hk) for k != 0 and 0 at k = 0."""
    k = np.asarray(k, dtype=float)
    out = np.zeros(k.shape, dtype=complex)
    nz = k != 0
    out[nz] = 1j * np.sign(k[nz]) / np.tanh(h * np.abs(k[nz]))
    return out


def strip_hilbert_transform(F: SpectralField, p: ModelParams) -> SpectralField:
    """Multiplier i·coth(hk); the k = 0 mode is mapped to zero."""
    if p.operator is not Operator.STRIP:
        raise ParameterError("strip_hilbert_transform needs operator = strip")
    return SpectralField(F.grid, strip_multiplier(F.grid.wavenumbers, p.h) * F.coeffs)


def apply_generator(F: SpectralField, table: SymbolTable) -> SpectralField:
    """A F, i.e. each mode multiplied by -iφ(k)."""
    if F.grid != table.grid:
        raise ValueError("symbol table was built for a different grid")
    return SpectralField(F.grid, table.generator * F.coeffs)


# A_j under its conventional subscripted name
apply_Aj = apply_generator
