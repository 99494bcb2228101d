"""Pseudospectral simulation of regularized Benjamin-type equations on the 2π-torus."""

from .spectral import (
    PeriodicGrid,
    RealField,
    SpectralField,
    dealiased_product,
    forward_transform,
    inverse_transform,
    sobolev_inner,
    sobolev_norm,
)
from .symbols import (
    ModelParams,
    Operator,
    SymbolTable,
    apply_Aj,
    apply_generator,
    hilbert_transform,
    m_symbol,
    phi_bound,
    phi_symbol,
    strip_hilbert_transform,
    symbol_table,
)
from .propagator import linear_propagate, solve_linear
from .evolution import (
    ContractionError,
    ForcingField,
    CoEvolvingForcing,
    Method,
    NumericalError,
    SolverConfig,
    Trajectory,
    estimate_bilinear_constant,
    estimate_local_time,
    rhs_coupled,
    rhs_full,
    solve,
    solve_coupled,
    step_picard_duhamel,
    step_rk4,
)
from .diagnostics import DiagnosticsRecord, diagnostics, triple_norm

__version__ = "0.1.0"

__all__ = [
    "PeriodicGrid",
    "RealField",
    "SpectralField",
    "dealiased_product",
    "forward_transform",
    "inverse_transform",
    "sobolev_inner",
    "sobolev_norm",
    "ModelParams",
    "Operator",
    "SymbolTable",
    "apply_Aj",
    "apply_generator",
    "hilbert_transform",
    "m_symbol",
    "phi_bound",
    "phi_symbol",
    "strip_hilbert_transform",
    "symbol_table",
    "ContractionError",
    "ForcingField",
    "CoEvolvingForcing",
    "Method",
    "NumericalError",
    "SolverConfig",
    "Trajectory",
    "estimate_bilinear_constant",
    "estimate_local_time",
    "rhs_coupled",
    "rhs_full",
    "solve",
    "solve_coupled",
    "step_picard_duhamel",
    "step_rk4",
    "linear_propagate",
    "solve_linear",
    "DiagnosticsRecord",
    "diagnostics",
    "triple_norm",
]
