"""Per-snapshot monitoring quantities."""

from __future__ import annotations

from dataclasses import astuple, dataclass, fields

import numpy as np

from .spectral import SpectralField, positive_half, _synthesize, weighted_norm
from .symbols import ModelParams, symbol_table

DIAGNOSTIC_COLUMNS = ("t", "mass", "norm0", "norm_half", "norm1", "norm_s", "triple_norm1", "sup_norm")


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    norm0: float
    norm_half: float
    norm1: float
    norm_s: float
    triple_norm1: float
    sup_norm: float

    def as_row(self) -> tuple:
        return astuple(self)


assert tuple(f.name for f in fields(DiagnosticsRecord)) == DIAGNOSTIC_COLUMNS


def triple_norm_coeffs(coeffs: np.ndarray, m: np.ndarray) -> float:
    """(Σ m(k)|ĉ(k)|²)^{1/2}, the conserved H¹-equivalent norm."""
    return weighted_norm(coeffs, m)


def triple_norm(F: SpectralField, p: ModelParams) -> float:
    return triple_norm_coeffs(F.coeffs, symbol_table(F.grid, p).m)


def diagnostics(F: SpectralField, p: ModelParams, s: float = 1.0, t: float = 0.0) -> DiagnosticsRecord:
    """Mass, truncated Sobolev norms, the conserved norm and the collocation max of ``F``."""
    grid = F.grid
    c = F.coeffs
    table = symbol_table(grid, p)
    values = _synthesize(positive_half(c), grid.n_points)
    return DiagnosticsRecord(
        t=float(t),
        mass=float(c[grid.mode_cutoff].real),
        norm0=weighted_norm(c, grid.sobolev_weights(0.0)),
        norm_half=weighted_norm(c, grid.sobolev_weights(0.5)),
        norm1=weighted_norm(c, grid.sobolev_weights(1.0)),
        norm_s=weighted_norm(c, grid.sobolev_weights(s)),
        triple_norm1=triple_norm_coeffs(c, table.m),
        sup_norm=float(np.max(np.abs(values))) if values.size else 0.0,
    )
