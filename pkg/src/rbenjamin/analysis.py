"""Invariant checks, the frequency-splitting experiment and empirical probes.

Every probe can only *falsify* the inequality it targets: the contraction
ball is sampled, not exhausted, and the proof constants are replaced by
sampled estimates with a safety factor. Reports say so.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .diagnostics import DiagnosticsRecord, diagnostics, triple_norm  # noqa: F401 (re-export)
from .evolution import (
    CoEvolvingForcing,
    Method,
    SolverConfig,
    Trajectory,
    _random_real_field,
    estimate_bilinear_constant,
    estimate_local_time,
    solve,
    solve_coupled,
)
from .propagator import phases
from .spectral import PeriodicGrid, SpectralField, mirror, positive_half, product_coeffs, sobolev_norm, weighted_norm
from .symbols import ModelParams, phi_bound, symbol_table


@dataclass
class Assertion:
    name: str
    value: float
    bound: float
    passed: bool
    note: str = ""


@dataclass
class ProbeReport:
    name: str
    seed: Optional[int] = None
    constants: dict = field(default_factory=dict)
    assertions: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def check(self, name: str, value: float, bound: float, passed: Optional[bool] = None, note: str = ""):
        if passed is None:
            passed = value <= bound
        self.assertions.append(Assertion(name, float(value), float(bound), bool(passed), note))
        return passed

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "constants": self.constants,
            "assertions": [asdict(a) for a in self.assertions],
            "passed": self.passed,
            "notes": self.notes,
        }


# ---------------------------------------------------------------------------
# Norm equivalence
# ---------------------------------------------------------------------------


def norm_equivalence_constants(p: ModelParams, grid: PeriodicGrid) -> tuple[float, float]:
    """(K1, K2) with K1(1+k²) <= m(k) <= K2(1+k²) on every retained mode.

    The scan of m(k)/(1+k²) is combined with the asymptotic bracket
    [a/2, 3a/2], then nudged by ulps until the sandwich holds in floating
    point as well.
    """
    table = symbol_table(grid, p)
    w = 1.0 + grid.wavenumbers.astype(float) ** 2
    ratio = table.m / w
    K1 = min(float(ratio.min()), p.a / 2)
    K2 = max(float(ratio.max()), 1.5 * p.a)
    while np.any(K1 * w > table.m):
        K1 = float(np.nextafter(K1, 0.0))
    while np.any(K2 * w < table.m):
        K2 = float(np.nextafter(K2, np.inf))
    return K1, K2


# ---------------------------------------------------------------------------
# Frequency splitting
# ---------------------------------------------------------------------------


def frequency_split(F: SpectralField, N: int) -> tuple[SpectralField, SpectralField]:
    """(low, high): modes |k| <= N and |k| > N. low + high == F exactly."""
    K = F.grid.mode_cutoff
    if not 0 <= N <= K:
        raise ValueError(f"cutoff N must lie in [0, {K}], got {N}")
    keep = np.abs(F.grid.wavenumbers) <= N
    low = np.where(keep, F.coeffs, 0)
    high = np.where(keep, 0, F.coeffs)
    return SpectralField(F.grid, low), SpectralField(F.grid, high)


def tail_norms(F: SpectralField, s: float) -> np.ndarray:
    """‖high part above N‖_s for N = 0..K."""
    K = F.grid.mode_cutoff
    wts = F.grid.sobolev_weights(s)
    c = F.coeffs
    energy = wts * (c.real**2 + c.imag**2)
    pair = energy[K:].copy()
    pair[1:] += energy[:K][::-1]
    # tail above N = sum of pair[N+1:]
    tails = np.concatenate([np.cumsum(pair[::-1])[::-1][1:], [0.0]])
    return np.sqrt(tails)


@dataclass
class SplitReport:
    cutoff: int
    high_norm: float
    low_norm: float
    times: list
    reconstruction_s: list
    reconstruction_1: list
    low_records: list
    high_records: list
    tail_norms: list
    sobolev_s: float

    @property
    def max_reconstruction_1(self) -> float:
        return max(self.reconstruction_1) if self.reconstruction_1 else 0.0

    def to_dict(self) -> dict:
        return {
            "cutoff": self.cutoff,
            "high_norm": self.high_norm,
            "low_norm": self.low_norm,
            "sobolev_s": self.sobolev_s,
            "max_reconstruction_error_s": max(self.reconstruction_s, default=0.0),
            "max_reconstruction_error_1": self.max_reconstruction_1,
            "tail_norms": self.tail_norms,
        }


def split_experiment(eta0: SpectralField, N: int, p: ModelParams, cfg: SolverConfig,
                     reference: Optional[Trajectory] = None) -> tuple[SplitReport, Trajectory, Trajectory, Trajectory]:
    """Solve with η₀ directly and as v + w, v from the high modes, w from the low ones.

    v solves the full equation from the modes |k| > N; w solves the forced
    problem with u = 2v from the modes |k| <= N; (v, w) are stepped jointly.
    Returns the report and the (reference, v, w) trajectories.
    """
    s = cfg.sobolev_s
    low, high = frequency_split(eta0, N)
    ref = reference if reference is not None else solve(eta0, p, cfg)
    w_traj = solve_coupled(low, CoEvolvingForcing(high, 2.0), p, cfg)
    v_traj = w_traj.companion
    ws, w1 = eta0.grid.sobolev_weights(s), eta0.grid.sobolev_weights(1.0)
    rec_s, rec_1 = [], []
    for E, V, W in zip(ref.fields, v_traj.fields, w_traj.fields):
        d = V.coeffs + W.coeffs - E.coeffs
        rec_s.append(weighted_norm(d, ws))
        rec_1.append(weighted_norm(d, w1))
    report = SplitReport(
        cutoff=N,
        high_norm=sobolev_norm(high, s),
        low_norm=sobolev_norm(low, s),
        times=list(ref.times),
        reconstruction_s=rec_s,
        reconstruction_1=rec_1,
        low_records=w_traj.records,
        high_records=v_traj.records,
        tail_norms=tail_norms(eta0, s).tolist(),
        sobolev_s=s,
    )
    return report, ref, v_traj, w_traj


# ---------------------------------------------------------------------------
# Contraction probe
# ---------------------------------------------------------------------------


def _cumulative_from_zero(g: np.ndarray, t: np.ndarray, centre: int) -> np.ndarray:
    """∫_0^{t_i} g by composite trapezoid, for nodes on both sides of t_centre = 0."""
    out = np.zeros_like(g)
    dt = np.diff(t)[(slice(None),) + (None,) * (g.ndim - 1)]
    trap = dt / 2 * (g[:-1] + g[1:])
    out[centre + 1:] = np.cumsum(trap[centre:], axis=0)
    if centre:
        out[:centre] = -np.cumsum(trap[:centre][::-1], axis=0)[::-1]
    return out


def _sample_path(rng, K: int, radius: float, tn: np.ndarray, ws: np.ndarray, kind: str) -> np.ndarray:
    """Random path t -> u(t) with sup_t ‖u(t)‖_s = radius, on nodes ``tn`` (scaled to [-1, 1])."""
    deg = {"constant": 0, "linear": 1, "quadratic": 2}[kind]
    coeffs = [_random_real_field(rng, K) for _ in range(deg + 1)]
    path = sum(c[None, :] * (tn[:, None] ** j) for j, c in enumerate(coeffs))
    sup = max(weighted_norm(row, ws) for row in path)
    return path * (radius / sup)


def contraction_probe(eta0: SpectralField, T: float, trials: int, p: ModelParams,
                      seed: int = 0, s: float = 1.0, C: Optional[float] = None,
                      bilinear_trials: int = 200, nodes: int = 64,
                      quad_slack: float = 1e-3) -> ProbeReport:
    """Sample pairs in the ball Λ(T, M = 2‖η₀‖_s) and measure the Duhamel map's Lipschitz ratio.

    The map is J v(t) = S(t)η₀ − (3α/4)∫₀ᵗ S(t−t')A v²(t')dt' on [−T, T];
    ratios sup_t‖Ju − Jv‖_s / sup_t‖u − v‖_s are compared against T/T'.
    """
    grid = eta0.grid
    K = grid.mode_cutoff
    table = symbol_table(grid, p)
    if C is None:
        C = estimate_bilinear_constant(s, s, bilinear_trials, grid, p, seed=seed)
    norm0 = sobolev_norm(eta0, s)
    M = 2.0 * norm0
    T_local = estimate_local_time(norm0, C, p.alpha)
    if not T < T_local:
        raise ValueError(f"T={T:g} must be below the local time T'={T_local:g}")
    q_bound = T / T_local if math.isfinite(T_local) else 0.0
    ws = grid.sobolev_weights(s)
    t = np.linspace(-T, T, 2 * nodes + 1)
    centre = nodes
    E = np.stack([phases(table.phi, ti) for ti in t])
    Einv = np.conj(E)
    c = 0.75 * p.alpha
    rng = np.random.default_rng(seed)
    kinds = ("constant", "linear", "quadratic")
    ratios = []
    for i in range(trials):
        ku, kv = kinds[i % 3], kinds[rng.integers(0, 3)]
        u = _sample_path(rng, K, M * rng.uniform(0.05, 1.0), t / T, ws, ku)
        v = _sample_path(rng, K, M * rng.uniform(0.05, 1.0), t / T, ws, kv)
        diff = u - v
        denom = max(weighted_norm(row, ws) for row in diff)
        if denom == 0:
            continue
        g = Einv * (table.generator * product_coeffs(diff, u + v))
        dJ = -c * E * _cumulative_from_zero(g, t, centre)
        ratios.append(max(weighted_norm(row, ws) for row in dJ) / denom)
    report = ProbeReport("contraction", seed=seed)
    report.constants.update({"C_ss": C, "M": M, "T": T, "T_local": T_local, "q_T": q_bound,
                             "sobolev_s": s, "trials": len(ratios)})
    report.series["ratios"] = ratios
    qmax = max(ratios) if ratios else 0.0
    report.check("max_ratio_below_one", qmax, 1.0, passed=qmax < 1.0)
    report.check("max_ratio_within_T_over_Tlocal", qmax, q_bound * (1 + quad_slack))
    report.notes.append("ball sampled with constant/linear/quadratic-in-time paths; a probe can only falsify")
    return report


# ---------------------------------------------------------------------------
# Continuous dependence
# ---------------------------------------------------------------------------


def continuity_envelope(eps: float, t: np.ndarray, K2: float, K3: float) -> np.ndarray:
    """K2 ε e^{K2|t|} / (K2 + K3 ε (1 − e^{K2|t|})); inf where the denominator is not positive."""
    e = np.exp(K2 * np.abs(np.asarray(t, dtype=float)))
    denom = K2 + K3 * eps * (1.0 - e)
    with np.errstate(divide="ignore"):
        return np.where(denom > 0, K2 * eps * e / np.where(denom > 0, denom, 1.0), np.inf)


def random_unit_direction(grid: PeriodicGrid, s: float, seed: int) -> SpectralField:
    rng = np.random.default_rng(seed)
    K = grid.mode_cutoff
    half = (rng.standard_normal(K + 1) + 1j * rng.standard_normal(K + 1)) \
        * (1.0 + np.arange(K + 1) ** 2) ** (-(s + 1.0) / 2)
    half[0] = half[0].real
    d = mirror(half)
    return SpectralField(grid, d / weighted_norm(d, grid.sobolev_weights(s)))


def continuity_probe(eta0: SpectralField, epsilons, t_end: float, p: ModelParams,
                     cfg: SolverConfig, seed: int = 0, C: Optional[float] = None,
                     abs_slack: float = 1e-12) -> ProbeReport:
    """Compare ‖η_ε(t) − η(t)‖_s against the continuous-dependence envelope.

    K2 = 3αC M*/2 and K3 = 3αC/4 with the sampled C_{s,s} and
    M* = max over snapshots of ‖η(t)‖_s. An ε whose envelope blows up
    before ``t_end`` is reported as inconclusive.
    """
    s = cfg.sobolev_s
    grid = eta0.grid
    cfg = replace(cfg, t_end=t_end)
    if C is None:
        C = cfg.bilinear_constant or estimate_bilinear_constant(s, s, cfg.bilinear_trials, grid, p, seed=seed)
    ref = solve(eta0, p, cfg)
    ws = grid.sobolev_weights(s)
    M_star = max(r.norm_s for r in ref.records)
    K2 = 1.5 * p.alpha * C * M_star
    K3 = 0.75 * p.alpha * C
    delta = random_unit_direction(grid, s, seed)
    times = np.asarray(ref.times)
    report = ProbeReport("continuity", seed=seed)
    report.constants.update({"C_ss": C, "M_star": M_star, "K2": K2, "K3": K3, "sobolev_s": s, "t_end": t_end})
    report.series["t"] = times.tolist()
    for eps in epsilons:
        eps = float(eps)
        pert = solve(eta0 + eps * delta, p, cfg)
        div = np.array([weighted_norm(a.coeffs - b.coeffs, ws) for a, b in zip(pert.fields, ref.fields)])
        env = continuity_envelope(eps, times, K2, K3)
        report.series[f"divergence[{eps:g}]"] = div.tolist()
        report.series[f"envelope[{eps:g}]"] = env.tolist()
        report.check(f"initial_divergence[{eps:g}]", abs(div[0] - eps), abs_slack)
        if not np.all(np.isfinite(env)):
            report.notes.append(f"eps={eps:g}: envelope invalid before t_end; inconclusive")
            continue
        excess = float(np.max(div - env))
        # the envelope equals ε at t = 0, so the informative margin is the ratio afterwards
        ratio = float(np.max(div[1:] / env[1:])) if len(div) > 1 and eps > 0 else 0.0
        report.constants[f"max_divergence_over_envelope[{eps:g}]"] = ratio
        report.check(f"under_envelope[{eps:g}]", excess, abs_slack,
                     note=f"max divergence {div.max():.3e}, envelope at t_end {env[-1]:.3e}, "
                          f"worst ratio after t = 0: {ratio:.4f}")
    return report


# ---------------------------------------------------------------------------
# Growth bound and difference quotients
# ---------------------------------------------------------------------------


def sobolev_embedding_constant(grid: PeriodicGrid) -> float:
    """sqrt(Σ_k 1/(1+k²)) over retained modes: ‖f‖_∞ <= this · ‖f‖_1 by Cauchy–Schwarz."""
    return float(np.sqrt(np.sum(1.0 / grid.sobolev_weights(1.0))))


def estimate_product_constant(s: float, trials: int, grid: PeriodicGrid, seed: int = 0,
                              safety: float = 2.0) -> float:
    """Sampled K0 with ‖v²‖_s <= K0 ‖v‖_∞ ‖v‖_s, inflated by ``safety``."""
    rng = np.random.default_rng(seed)
    ws = grid.sobolev_weights(s)
    n = grid.n_points
    best = 0.0
    from .spectral import _synthesize
    for _ in range(trials):
        v = _random_real_field(rng, grid.mode_cutoff)
        vinf = float(np.max(np.abs(_synthesize(positive_half(v), 4 * n))))
        nv = weighted_norm(v, ws)
        if vinf == 0 or nv == 0:
            continue
        best = max(best, weighted_norm(product_coeffs(v, v), ws) / (vinf * nv))
    return safety * best


def norm_growth_check(traj: Trajectory, p: ModelParams, s: float, trials: int = 200, seed: int = 0) -> ProbeReport:
    """‖η(t)‖_s <= ‖η₀‖_s exp(rate·|t|) with rate = 3α C_S K0 ‖η₀‖₁ / (4(b + 2√a))."""
    grid = traj.grid
    K1, K2 = norm_equivalence_constants(p, grid)
    C_S = sobolev_embedding_constant(grid) * math.sqrt(K2 / K1)
    K0 = estimate_product_constant(s, trials, grid, seed)
    eta0 = traj.fields[0]
    n1 = sobolev_norm(eta0, 1.0)
    rate = 3 * p.alpha * C_S * K0 * n1 / 4 * phi_bound(p)
    ns0 = sobolev_norm(eta0, s)
    t = np.abs(np.asarray(traj.times))
    norms = np.array([sobolev_norm(F, s) for F in traj.fields])
    bound = ns0 * np.exp(rate * t)
    report = ProbeReport("norm_growth", seed=seed)
    report.constants.update({"C_S": C_S, "K0": K0, "growth_rate": rate, "sobolev_s": s})
    report.check("norm_below_growth_bound", float(np.max(norms - bound)), 1e-12 * max(ns0, 1.0))
    return report


def quotient_residuals(eta0: SpectralField, p: ModelParams, hs, s: float = 1.0, method: Method = Method.RK4):
    """‖(η(h) − η(0))/h − rhs(η(0))‖_s for each h; should shrink roughly like h."""
    from .evolution import rhs_full
    table = symbol_table(eta0.grid, p)
    r0 = rhs_full(eta0, p, table)
    out = []
    for h in hs:
        cfg = SolverConfig(dt=abs(h) / 4, t_end=h, method=method, diagnostics_every=10**9)
        eta_h = solve(eta0, p, cfg).final
        q = (eta_h.coeffs - eta0.coeffs) / h - r0.coeffs
        out.append(weighted_norm(q, eta0.grid.sobolev_weights(s)))
    return out


# ---------------------------------------------------------------------------
# Convergence
# ---------------------------------------------------------------------------


def restrict(F: SpectralField, grid: PeriodicGrid) -> SpectralField:
    """Project onto (or zero-extend to) the retained modes of ``grid``."""
    K_from, K_to = F.grid.mode_cutoff, grid.mode_cutoff
    out = np.zeros(grid.n_modes, dtype=complex)
    K = min(K_from, K_to)
    out[K_to - K: K_to + K + 1] = F.coeffs[K_from - K: K_from + K + 1]
    return SpectralField(grid, out)


def convergence_study(eta0: SpectralField, p: ModelParams, dts, grids, t_end: float = 1.0,
                      method: Method = Method.RK4, ref_dt: Optional[float] = None,
                      spatial_dt: Optional[float] = None) -> ProbeReport:
    """Temporal self-convergence on ``eta0``'s grid and spatial convergence over ``grids``.

    ``eta0`` lives on the reference grid, which must be at least as fine as
    every entry of ``grids``; the reference step must not exceed any tested dt.
    """
    dts = [float(d) for d in dts]
    grids = [g if isinstance(g, PeriodicGrid) else PeriodicGrid(int(g)) for g in grids]
    ref_dt = ref_dt if ref_dt is not None else min(dts) / 8 if dts else 1e-3
    if dts and ref_dt > min(dts):
        raise ValueError("reference step must be no larger than every tested dt")
    if any(g.n_points > eta0.grid.n_points for g in grids):
        raise ValueError("reference grid must be at least as fine as every tested grid")
    report = ProbeReport("convergence")
    w1 = eta0.grid.sobolev_weights(1.0)

    def final(F, dt):
        cfg = SolverConfig(dt=dt, t_end=t_end, method=method, diagnostics_every=10**9)
        return solve(F, p, cfg).final

    ref = final(eta0, ref_dt)
    errs = [weighted_norm(final(eta0, dt).coeffs - ref.coeffs, w1) for dt in dts]
    orders = [math.log(errs[i] / errs[i + 1]) / math.log(dts[i] / dts[i + 1])
              if errs[i + 1] > 0 and errs[i] > 0 else float("nan") for i in range(len(errs) - 1)]
    report.series.update({"dts": dts, "time_errors": errs, "time_orders": orders})
    report.constants.update({"ref_dt": ref_dt, "ref_grid": eta0.grid.n_points, "t_end": t_end})

    sdt = spatial_dt if spatial_dt is not None else ref_dt
    ref_space = final(eta0, sdt) if sdt != ref_dt else ref
    space_errs = []
    for g in grids:
        sol = final(restrict(eta0, g), sdt)
        back = restrict(sol, eta0.grid)
        space_errs.append(weighted_norm(back.coeffs - ref_space.coeffs, w1))
    report.series.update({"grids": [g.n_points for g in grids], "space_errors": space_errs})
    return report
