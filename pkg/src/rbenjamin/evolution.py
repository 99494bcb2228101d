"""Nonlinear time integration.

Evolves η_t = A(η − (3α/4)η²) and the forced problem
w_t = A(w − (3α/4)(u w + w²)) with one of two steppers:

* ``RK4``: classical four-stage Runge–Kutta. |φ(k)| <= 1/(b + 2√a) for every k,
  so the semidiscrete system is not stiff and an explicit method is enough.
* ``PICARD_DUHAMEL``: per step, the Duhamel integral equation is solved by
  fixed-point iteration, with exact propagation between quadrature nodes.

Internally the state is a centred coefficient array, optionally stacked along
leading axes (used to step (v, w) jointly).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .diagnostics import diagnostics
from .propagator import phases
from .spectral import (
    PeriodicGrid,
    SpectralField,
    _analyze,
    _synthesize,
    mirror,
    positive_half,
    product_coeffs,
    weighted_norm,
)
from .symbols import ModelParams, SymbolTable, symbol_table

EPS = np.finfo(float).eps


class Method(enum.Enum):
    RK4 = "rk4"
    PICARD_DUHAMEL = "picard_duhamel"


class NumericalError(RuntimeError):
    """The discrete system left the regime where the solver is valid."""


class ContractionError(NumericalError):
    """Picard iteration failed to contract; carries the last measured ratio."""

    def __init__(self, message: str, ratio: float):
        super().__init__(f"{message} (last contraction ratio {ratio:.4g})")
        self.ratio = ratio


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    method: Method = Method.RK4
    picard_tol: float = 1e-12
    picard_max_iter: int = 50
    quad_substeps: int = 4
    diagnostics_every: int = 10
    dealias: bool = True
    sobolev_s: float = 1.0
    # Picard step-size guard: user-supplied C_{s,s}, or estimated from samples
    bilinear_constant: Optional[float] = None
    bilinear_trials: int = 200
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.method, str):
            object.__setattr__(self, "method", Method(self.method.lower()))
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt: must be finite and > 0, got {self.dt}")
        if not math.isfinite(self.t_end):
            raise ValueError(f"t_end: must be finite, got {self.t_end}")
        if not self.picard_tol > 0:
            raise ValueError(f"picard_tol: must be > 0, got {self.picard_tol}")
        if self.picard_max_iter < 1:
            raise ValueError(f"picard_max_iter: must be >= 1, got {self.picard_max_iter}")
        if self.quad_substeps < 2:
            raise ValueError(f"quad_substeps: must be >= 2, got {self.quad_substeps}")
        if self.diagnostics_every < 1:
            raise ValueError(f"diagnostics_every: must be >= 1, got {self.diagnostics_every}")
        if self.bilinear_constant is not None and not self.bilinear_constant > 0:
            raise ValueError(f"bilinear_constant: must be > 0, got {self.bilinear_constant}")


@dataclass
class Trajectory:
    """Snapshots with their diagnostics, in increasing time (decreasing for backward runs)."""

    times: list
    fields: list
    records: list
    params: ModelParams
    grid: PeriodicGrid
    metadata: dict = field(default_factory=dict)
    companion: Optional["Trajectory"] = None

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> SpectralField:
        return self.fields[-1]

    def at(self, t: float) -> SpectralField:
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if not math.isclose(self.times[i], t, rel_tol=1e-12, abs_tol=1e-12):
            raise KeyError(f"no snapshot at t={t}")
        return self.fields[i]


# ---------------------------------------------------------------------------
# Right-hand sides
# ---------------------------------------------------------------------------


def _aliased_product(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    K = f.shape[-1] // 2
    n = 2 * (K + 1)
    fv = _synthesize(positive_half(f), n)
    gv = fv if g is f else _synthesize(positive_half(g), n)
    return mirror(_analyze(fv * gv, K))


def _product(dealias: bool):
    return product_coeffs if dealias else _aliased_product


def rhs_full(F: SpectralField, p: ModelParams, table: SymbolTable, dealias: bool = True) -> SpectralField:
    """A(F − (3α/4) F²) with the square projected onto retained modes."""
    out = _rhs_full_coeffs(F.coeffs, table.generator, 0.75 * p.alpha, _product(dealias))
    _check_finite(out, "rhs_full")
    return SpectralField(F.grid, out)


def rhs_coupled(W: SpectralField, u_t: SpectralField, p: ModelParams, table: SymbolTable,
                dealias: bool = True) -> SpectralField:
    """A(W − (3α/4)(u W + W²))."""
    if W.grid != u_t.grid:
        raise ValueError("forcing and state live on different grids")
    out = _rhs_coupled_coeffs(W.coeffs, u_t.coeffs, table.generator, 0.75 * p.alpha, _product(dealias))
    _check_finite(out, "rhs_coupled")
    return SpectralField(W.grid, out)


def _rhs_full_coeffs(x, gen, c, prod):
    return gen * (x - c * prod(x, x))


def _rhs_coupled_coeffs(w, u, gen, c, prod):
    return gen * (w - c * (prod(u, w) + prod(w, w)))


def _check_finite(x: np.ndarray, where: str, t: Optional[float] = None):
    if not np.all(np.isfinite(x)):
        when = "" if t is None else f" at t={t:.6g}"
        raise NumericalError(f"non-finite values in {where}{when}")


# ---------------------------------------------------------------------------
# Steppers
# ---------------------------------------------------------------------------


def _rk4(x: np.ndarray, t: float, dt: float, f: Callable) -> np.ndarray:
    k1 = f(t, x)
    k2 = f(t + dt / 2, x + (dt / 2) * k1)
    k3 = f(t + dt / 2, x + (dt / 2) * k2)
    k4 = f(t + dt, x + dt * k3)
    return x + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def step_rk4(F: SpectralField, dt: float, rhs: Callable[[SpectralField], SpectralField]) -> SpectralField:
    """One classical RK4 step of the autonomous system F' = rhs(F)."""
    grid = F.grid

    def f(_t, x):
        return rhs(SpectralField(grid, x)).coeffs

    return SpectralField(grid, _rk4(F.coeffs, 0.0, dt, f))


@dataclass
class PicardStats:
    iterations: int = 0
    distances: list = field(default_factory=list)

    @property
    def ratios(self) -> list:
        d = self.distances
        return [d[i + 1] / d[i] for i in range(len(d) - 1) if d[i] > 0]

    @property
    def max_ratio(self) -> float:
        r = self.ratios
        return max(r) if r else 0.0


def _picard(x0: np.ndarray, t0: float, dt: float, table: SymbolTable, c: float,
            quadratic: Callable, weights: np.ndarray, q: int, tol: float, max_iter: int,
            stats: Optional[PicardStats] = None) -> np.ndarray:
    """Fixed point of X(τ) = S(τ)x0 − c ∫₀^τ S(τ−t')A Q(t', X(t'))dt' at τ = dt.

    The unknown is X at q equispaced nodes on [0, dt]; the integral is a
    cumulative composite trapezoid of the interaction-picture integrand
    S(−t')A Q, so S is applied exactly at every node.
    """
    tau = np.linspace(0.0, dt, q)
    E = np.stack([phases(table.phi, s) for s in tau])           # (q, M)
    expand = (slice(None),) + (None,) * (x0.ndim - 1)
    E = E[expand]                                               # (q, 1.., M)
    Einv = np.conj(E)
    gen = table.generator
    X = E * x0
    h = dt / (q - 1)
    stats = stats if stats is not None else PicardStats()
    increases = 0
    prev = None
    for it in range(1, max_iter + 1):
        Q = quadratic(t0 + tau, X)
        g = Einv * (gen * Q)
        integral = np.zeros_like(g)
        integral[1:] = np.cumsum((h / 2) * (g[:-1] + g[1:]), axis=0)
        X_new = E * (x0 - c * integral)
        _check_finite(X_new, "picard iterate", t0)
        diff = X_new - X
        # sup over nodes of the H^1 distance
        per_node = np.sqrt(np.sum((weights * (diff.real**2 + diff.imag**2)).reshape(q, -1), axis=1))
        d = float(np.max(per_node))
        stats.distances.append(d)
        stats.iterations = it
        X = X_new
        scale = float(np.max(np.sqrt(np.sum((weights * (X.real**2 + X.imag**2)).reshape(q, -1), axis=1))))
        if d < tol or d <= 64 * EPS * scale:
            return X[-1]
        if prev is not None and d > prev:
            increases += 1
            if increases >= 3:
                raise ContractionError("Picard iteration diverging; dt too large for the local time", d / prev)
        else:
            increases = 0
        prev = d
    last = stats.ratios[-1] if stats.ratios else float("nan")
    raise ContractionError(f"Picard iteration did not reach tol={tol:g} in {max_iter} iterations", last)


def estimate_local_time(norm_s: float, C: float, alpha: float) -> float:
    """Local existence time T' = 2/(3αC·M) with ball radius M = 2‖η₀‖_s.

    Returns ``inf`` for zero data or α = 0.
    """
    if norm_s < 0 or C <= 0:
        raise ValueError("norm_s must be >= 0 and C > 0")
    if norm_s == 0 or alpha == 0:
        return math.inf
    return 2.0 / (3.0 * alpha * C * (2.0 * norm_s))


def step_picard_duhamel(F: SpectralField, dt: float, p: ModelParams, table: SymbolTable,
                        cfg: SolverConfig, C: Optional[float] = None,
                        stats: Optional[PicardStats] = None) -> SpectralField:
    """One Duhamel/Picard step of length ``dt`` (may be negative).

    ``C`` is the bilinear constant used by the step-size guard |dt| < T'/2;
    by default ``cfg.bilinear_constant`` or a sampled estimate. Pass a
    :class:`PicardStats` to collect iterate distances.
    """
    if C is None:
        C = _guard_constant(F.grid, p, cfg)
    _guard_step(F.coeffs, dt, C, p, F.grid, cfg.sobolev_s)
    w1 = F.grid.sobolev_weights(1.0)
    prod = _product(cfg.dealias)
    out = _picard(F.coeffs, 0.0, dt, table, 0.75 * p.alpha, lambda _t, X: prod(X, X),
                  w1, cfg.quad_substeps, cfg.picard_tol, cfg.picard_max_iter, stats)
    return SpectralField(F.grid, out)


def _guard_constant(grid: PeriodicGrid, p: ModelParams, cfg: SolverConfig) -> float:
    if cfg.bilinear_constant is not None:
        return cfg.bilinear_constant
    s = cfg.sobolev_s
    return estimate_bilinear_constant(s, s, cfg.bilinear_trials, grid, p, seed=cfg.seed)


def _guard_step(x: np.ndarray, dt: float, C: float, p: ModelParams, grid: PeriodicGrid, s: float):
    ws = grid.sobolev_weights(s)
    norm = max(weighted_norm(row, ws) for row in x.reshape(-1, x.shape[-1]))
    T_local = estimate_local_time(norm, C, p.alpha)
    if not abs(dt) < T_local / 2:
        raise ContractionError(
            f"|dt|={abs(dt):g} violates the contraction guard |dt| < T'/2 = {T_local / 2:g}",
            abs(dt) / T_local,
        )


# ---------------------------------------------------------------------------
# Bilinear constant
# ---------------------------------------------------------------------------


def _random_real_field(rng: np.random.Generator, K: int) -> np.ndarray:
    """Random real band-limited coefficients with random bandwidth and decay."""
    band = int(rng.integers(1, K + 1)) if rng.random() < 0.5 else int(2 ** rng.integers(0, int(math.log2(K)) + 1))
    band = min(band, K)
    decay = rng.uniform(0.0, 3.0)
    k = np.arange(band + 1)
    half = np.zeros(K + 1, dtype=complex)
    half[: band + 1] = (rng.standard_normal(band + 1) + 1j * rng.standard_normal(band + 1)) \
        * (1.0 + k**2) ** (-decay / 2)
    half[0] = half[0].real
    return mirror(half)


def sample_bilinear_ratios(s: float, r: float, trials: int, grid: PeriodicGrid, p: ModelParams,
                           seed: int = 0) -> np.ndarray:
    """‖A(uv)‖_r / (‖u‖_s ‖v‖_r) for ``trials`` random band-limited pairs.

    Draws are sequential, so the first n ratios do not depend on ``trials``.
    """
    if not 0 <= r <= s + 1:
        raise ValueError(f"need 0 <= r <= s + 1, got s={s}, r={r}")
    rng = np.random.default_rng(seed)
    table = symbol_table(grid, p)
    ws, wr = grid.sobolev_weights(s), grid.sobolev_weights(r)
    K = grid.mode_cutoff
    out = []
    while len(out) < trials:
        u = _random_real_field(rng, K)
        v = _random_real_field(rng, K)
        nu, nv = weighted_norm(u, ws), weighted_norm(v, wr)
        if nu == 0 or nv == 0:
            continue
        out.append(weighted_norm(table.generator * product_coeffs(u, v), wr) / (nu * nv))
    return np.asarray(out)


def estimate_bilinear_constant(s: float, r: float, trials: int, grid: PeriodicGrid,
                               p: ModelParams, seed: int = 0, safety: float = 2.0) -> float:
    """Empirical C_{s,r} with ‖A(uv)‖_r <= C‖u‖_s‖v‖_r: sampled max times ``safety``.

    A sampled maximum can only under-estimate the true constant; the safety
    factor is what makes it usable as a step-size certificate.
    """
    ratios = sample_bilinear_ratios(s, r, trials, grid, p, seed)
    return safety * float(np.max(ratios))


# ---------------------------------------------------------------------------
# Forcing
# ---------------------------------------------------------------------------


class ForcingField:
    """Time-dependent field u(t) on ``[t_min, t_max]``.

    Either wraps a closed-form evaluator ``t -> SpectralField`` or
    interpolates a stored trajectory with cubic splines per coefficient.
    """

    def __init__(self, grid: PeriodicGrid, evaluator: Callable[[float], np.ndarray],
                 t_min: float = -math.inf, t_max: float = math.inf):
        self.grid = grid
        self._eval = evaluator
        self.t_min, self.t_max = t_min, t_max

    @classmethod
    def from_function(cls, grid, func: Callable[[float], SpectralField], t_min=-math.inf, t_max=math.inf):
        return cls(grid, lambda t: func(t).coeffs, t_min, t_max)

    @classmethod
    def constant(cls, U: SpectralField):
        return cls(U.grid, lambda t: U.coeffs)

    @classmethod
    def from_trajectory(cls, traj: Trajectory):
        times = np.asarray(traj.times, dtype=float)
        data = np.stack([F.coeffs for F in traj.fields])
        if times[0] > times[-1]:
            times, data = times[::-1], data[::-1]
        spline = CubicSpline(times, data, axis=0)
        return cls(traj.grid, lambda t: spline(t), float(times[0]), float(times[-1]))

    def covers(self, t0: float, t1: float) -> bool:
        lo, hi = min(t0, t1), max(t0, t1)
        tol = 1e-12 * max(1.0, abs(lo), abs(hi))
        return self.t_min - tol <= lo and hi <= self.t_max + tol

    def coeffs(self, t: float) -> np.ndarray:
        return np.asarray(self._eval(float(t)), dtype=complex)

    def __call__(self, t: float) -> SpectralField:
        return SpectralField(self.grid, self.coeffs(t))


class CoEvolvingForcing:
    """u = factor·v where v solves the full equation from ``v0``.

    Passed to :func:`solve_coupled`, (v, w) are advanced as one stacked
    state with shared stages, so v + w reproduces the stages of the full
    solver stage by stage.
    """

    def __init__(self, v0: SpectralField, factor: float = 2.0):
        self.v0 = v0
        self.factor = factor


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------


def _step_plan(cfg: SolverConfig):
    """Signed step and the list of step end-times 0 -> t_end, computed as n·dt."""
    T = cfg.t_end
    n = int(math.ceil(abs(T) / cfg.dt - 1e-9))
    sign = 1.0 if T >= 0 else -1.0
    ends = [sign * cfg.dt * (i + 1) for i in range(n)]
    if n:
        ends[-1] = T
    return sign * cfg.dt, ends


def _march(x0: np.ndarray, grid: PeriodicGrid, p: ModelParams, cfg: SolverConfig,
           rhs: Callable, quadratic: Callable):
    """Generic time loop; returns (times, states) at diagnostic steps."""
    table = symbol_table(grid, p)
    dt, ends = _step_plan(cfg)
    x = x0
    times, states = [0.0], [x0]
    t = 0.0
    C = None
    picard_stats = {"max_ratio": 0.0, "max_iterations": 0, "steps": 0}
    if cfg.method is Method.PICARD_DUHAMEL:
        C = _guard_constant(grid, p, cfg)
    w1 = grid.sobolev_weights(1.0)
    for i, t_next in enumerate(ends):
        h = t_next - t
        if cfg.method is Method.RK4:
            x = _rk4(x, t, h, rhs)
        else:
            _guard_step(x, h, C, p, grid, cfg.sobolev_s)
            st = PicardStats()
            x = _picard(x, t, h, table, 0.75 * p.alpha, quadratic, w1, cfg.quad_substeps,
                        cfg.picard_tol, cfg.picard_max_iter, st)
            picard_stats["max_ratio"] = max(picard_stats["max_ratio"], st.max_ratio)
            picard_stats["max_iterations"] = max(picard_stats["max_iterations"], st.iterations)
            picard_stats["steps"] += 1
        _check_finite(x, "state", t_next)
        t = t_next
        if (i + 1) % cfg.diagnostics_every == 0 or i == len(ends) - 1:
            times.append(t)
            states.append(x)
    meta = {"method": cfg.method.value, "steps": len(ends), "dt": dt}
    if C is not None:
        meta["bilinear_constant"] = C
        meta["picard"] = picard_stats
    return times, states, meta


def _to_trajectory(times, states, grid, p, cfg, meta) -> Trajectory:
    fields_ = [SpectralField(grid, x) for x in states]
    records = [diagnostics(F, p, cfg.sobolev_s, t) for t, F in zip(times, fields_)]
    return Trajectory(list(times), fields_, records, p, grid, meta)


def solve(eta0: SpectralField, p: ModelParams, cfg: SolverConfig) -> Trajectory:
    """Evolve ``eta0`` from t = 0 to ``cfg.t_end`` (negative horizons step backwards)."""
    if not eta0.is_real():
        raise ValueError("initial data must be conjugate-symmetric (a real field)")
    grid = eta0.grid
    table = symbol_table(grid, p)
    gen, c, prod = table.generator, 0.75 * p.alpha, _product(cfg.dealias)
    times, states, meta = _march(
        eta0.coeffs, grid, p, cfg,
        rhs=lambda _t, x: _rhs_full_coeffs(x, gen, c, prod),
        quadratic=lambda _t, X: prod(X, X)
    )
    return _to_trajectory(times, states, grid, p, cfg, meta)


def solve_coupled(w0: SpectralField, u, p: ModelParams, cfg: SolverConfig) -> Trajectory:
    """Evolve w_t = A(w − (3α/4)(u w + w²)) from ``w0``.

    ``u`` is a :class:`ForcingField` (evaluated at stage times / quadrature
    nodes) or a :class:`CoEvolvingForcing`, in which case the returned
    trajectory carries the co-evolved v as ``companion``.
    """
    grid = w0.grid
    table = symbol_table(grid, p)
    gen, c, prod = table.generator, 0.75 * p.alpha, _product(cfg.dealias)

    if isinstance(u, CoEvolvingForcing):
        if u.v0.grid != grid:
            raise ValueError("forcing and state live on different grids")
        fac = u.factor

        def rhs(_t, X):
            v, w = X[0], X[1]
            return np.stack([
                gen * (v - c * prod(v, v)),
                gen * (w - c * (prod(fac * v, w) + prod(w, w))),
            ])

        def quadratic(_t, X):
            v, w = X[:, 0], X[:, 1]
            return np.stack([prod(v, v), prod(fac * v, w) + prod(w, w)], axis=1)

        X0 = np.stack([u.v0.coeffs, w0.coeffs])
        times, states, meta = _march(X0, grid, p, cfg, rhs, quadratic)
        meta["forcing"] = f"co-evolving ({fac:g}·v)"
        w_traj = _to_trajectory(times, [X[1] for X in states], grid, p, cfg, meta)
        w_traj.companion = _to_trajectory(times, [X[0] for X in states], grid, p, cfg, dict(meta))
        return w_traj

    if not isinstance(u, ForcingField):
        raise TypeError("u must be a ForcingField or CoEvolvingForcing")
    if u.grid != grid:
        raise ValueError("forcing and state live on different grids")
    if not u.covers(0.0, cfg.t_end):
        raise ValueError(f"forcing valid on [{u.t_min}, {u.t_max}] does not cover [0, {cfg.t_end}]")

    def rhs(t, w):
        return gen * (w - c * (prod(u.coeffs(t), w) + prod(w, w)))

    def quadratic(ts, X):
        U = np.stack([u.coeffs(t) for t in ts])
        return prod(U, X) + prod(X, X)

    times, states, meta = _march(w0.coeffs, grid, p, cfg, rhs, quadratic)
    meta["forcing"] = "field"
    return _to_trajectory(times, states, grid, p, cfg, meta)
