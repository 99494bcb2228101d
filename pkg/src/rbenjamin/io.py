"""Initial conditions and deterministic CSV/JSON outputs.

Floats are written with 17 significant digits so that every double
round-trips exactly; JSON is written with sorted keys.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .config import ConfigError, InitialConditionSpec
from .diagnostics import DIAGNOSTIC_COLUMNS
from .spectral import PeriodicGrid, SpectralField, mirror, weighted_norm

RANDOM_SOBOLEV_EPS = 0.05


class OutputError(OSError):
    """Failed to read or write an output file; the message names the path."""


def fmt(x: float) -> str:
    return f"{x:.17g}"


# ---------------------------------------------------------------------------
# Initial conditions
# ---------------------------------------------------------------------------


def build_initial_condition(spec: InitialConditionSpec, grid: PeriodicGrid) -> SpectralField:
    """Real, band-limited initial data on ``grid``."""
    K = grid.mode_cutoff
    kind, args = spec.kind, spec.args
    if kind == "cosine":
        amp, k = args
        if k > K:
            raise ConfigError("ic", f"cosine wavenumber {k} exceeds the cutoff {K}")
        if k == 0:
            return SpectralField.from_modes(grid, {0: amp})
        return SpectralField.from_modes(grid, {k: amp / 2, -k: amp / 2})
    if kind == "gaussian":
        # periodized Gaussian amp·Σ_j exp(-(x - 2πj)²/(2w²)), truncated at the cutoff
        amp, width = args
        k = np.arange(K + 1, dtype=float)
        half = amp * width / math.sqrt(2 * math.pi) * np.exp(-0.5 * (k * width) ** 2)
        return SpectralField(grid, mirror(half.astype(complex)))
    if kind == "random_sobolev":
        s, norm, seed = args
        return random_sobolev_field(grid, s, norm, int(seed))
    if kind == "coeff_file":
        return read_coefficients(args[0], grid)
    raise ConfigError("ic", f"unknown kind {kind!r}")


def random_sobolev_field(grid: PeriodicGrid, s: float, norm: float, seed: int) -> SpectralField:
    """Gaussian coefficients with (1+k²)^{-s/2-1/2-ε} decay, scaled to ‖·‖_s = norm."""
    rng = np.random.default_rng(seed)
    K = grid.mode_cutoff
    k = np.arange(K + 1, dtype=float)
    decay = (1.0 + k**2) ** (-s / 2 - 0.5 - RANDOM_SOBOLEV_EPS)
    half = (rng.standard_normal(K + 1) + 1j * rng.standard_normal(K + 1)) * decay
    half[0] = half[0].real
    c = mirror(half)
    current = weighted_norm(c, grid.sobolev_weights(s))
    if current == 0 or norm == 0:
        return SpectralField.zeros(grid)
    return SpectralField(grid, c * (norm / current))


# ---------------------------------------------------------------------------
# Coefficient files (snapshot format)
# ---------------------------------------------------------------------------


def write_coefficients(F: SpectralField, path) -> None:
    """``k,re,im`` rows over the retained modes."""
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            fh.write("k,re,im\n")
            for k, c in zip(F.grid.wavenumbers, F.coeffs):
                fh.write(f"{k},{fmt(c.real)},{fmt(c.imag)}\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None


def read_coefficients(path, grid: PeriodicGrid | None = None, rtol: float = 1e-12) -> SpectralField:
    """Read a ``k,re,im`` file. Without ``grid`` the file must list modes -K..K of a full grid."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError("ic", f"cannot read coefficient file {path}: {exc.strerror}") from None
    try:
        modes = {int(r["k"]): complex(float(r["re"]), float(r["im"])) for r in rows}
    except (KeyError, TypeError, ValueError):
        raise ConfigError("ic", f"{path}: expected columns k,re,im") from None
    if grid is None:
        K = max((abs(k) for k in modes), default=3)
        grid = PeriodicGrid(2 * (K + 1))
    K = grid.mode_cutoff
    if any(abs(k) > K for k in modes):
        raise ConfigError("ic", f"{path}: modes beyond the grid cutoff {K}")
    F = SpectralField.from_modes(grid, modes)
    scale = max(1.0, float(np.max(np.abs(F.coeffs))))
    if F.symmetry_defect() > rtol * scale:
        raise ConfigError("ic", f"{path}: coefficients are not conjugate-symmetric "
                                f"(defect {F.symmetry_defect():.3e})")
    return F


# ---------------------------------------------------------------------------
# Run outputs
# ---------------------------------------------------------------------------


def write_diagnostics(records, path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            fh.write(",".join(DIAGNOSTIC_COLUMNS) + "\n")
            for r in records:
                fh.write(",".join(fmt(v) for v in r.as_row()) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None


def read_diagnostics(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data.reshape(-1, len(DIAGNOSTIC_COLUMNS))


def write_table(path, header, rows) -> None:
    """Generic numeric CSV with 17-digit floats."""
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(v if isinstance(v, str) else (str(v) if isinstance(v, (int, np.integer))
                                                               else fmt(v)) for v in row) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(obj, path) -> None:
    path = Path(path)
    try:
        path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None


def snapshot_name(t: float) -> str:
    return f"snapshot_{fmt(t)}.csv"


def write_outputs(trajectory, directory, summary: dict, snapshot_every: int = 0) -> Path:
    """Write ``diagnostics.csv``, snapshots and ``summary.json`` for a trajectory.

    Snapshots: the first and last, plus every ``snapshot_every``-th recorded
    one. ``trajectory`` may be ``None`` (header-only diagnostics).
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {directory}: {exc.strerror}") from None
    records = trajectory.records if trajectory is not None else []
    write_diagnostics(records, directory / "diagnostics.csv")
    if trajectory is not None and len(trajectory):
        last = len(trajectory) - 1
        for i, (t, F) in enumerate(zip(trajectory.times, trajectory.fields)):
            if i in (0, last) or (snapshot_every and i % snapshot_every == 0):
                write_coefficients(F, directory / snapshot_name(t))
    write_json(summary, directory / "summary.json")
    return directory
