"""Exact linear group S(t): η̂(k, t) = η̂₀(k) e^{-iφ(k)t}."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import SpectralField
from .symbols import SymbolTable

_TWO_PI_LD = np.longdouble(2) * np.arccos(np.longdouble(-1))


def phases(phi: np.ndarray, t: float) -> np.ndarray:
    """e^{-iφt} per mode, computed fresh for every t.

    The phase φ·t is formed and reduced mod 2π in extended precision so that
    long horizons keep unit modulus and do not drift. ``phi`` must be odd in
    storage order; the result is then exactly conjugate-symmetric.
    """
    K = phi.shape[-1] // 2
    theta = np.asarray(phi[K:], dtype=np.longdouble) * np.longdouble(t)
    theta = np.fmod(theta, _TWO_PI_LD).astype(float)
    half = np.cos(theta) - 1j * np.sin(theta)
    half[0] = 1.0
    return np.concatenate([np.conj(half[:0:-1]), half])


def propagate_coeffs(coeffs: np.ndarray, phi: np.ndarray, t: float) -> np.ndarray:
    return coeffs * phases(phi, t)


@dataclass(frozen=True, eq=False)
class PropagatorTable:
    """Unit-modulus phases of S(t) for one fixed t."""

    t: float
    values: np.ndarray

    @classmethod
    def build(cls, table: SymbolTable, t: float) -> "PropagatorTable":
        return cls(float(t), phases(table.phi, t))


def linear_propagate(F: SpectralField, t: float, table: SymbolTable) -> SpectralField:
    """Apply S(t) to ``F``. Isometric in every Sobolev norm; mode 0 untouched."""
    if F.grid != table.grid:
        raise ValueError("symbol table was built for a different grid")
    return SpectralField(F.grid, propagate_coeffs(F.coeffs, table.phi, t))


def solve_linear(eta0: SpectralField, times, table: SymbolTable, s: float = 1.0):
    """Exact solution of the linearized problem at each requested time.

    Returns a :class:`~rbenjamin.evolution.Trajectory`; there is no time-step
    error, only rounding in the phases.
    """
    from .diagnostics import diagnostics
    from .evolution import Trajectory

    times = [float(t) for t in times]
    if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
        raise ValueError("times must be strictly increasing")
    snaps = [linear_propagate(eta0, t, table) for t in times]
    records = [diagnostics(F, table.params, s, t=t) for t, F in zip(times, snaps)]
    return Trajectory(times=times, fields=snaps, records=records,
                      params=table.params, grid=eta0.grid, metadata={"method": "exact_linear"})
