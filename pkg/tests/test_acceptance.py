"""Acceptance suite: one PASS/FAIL line per criterion, 1 to 14.

Run with ``pytest tests/test_acceptance.py -v``; the lines are printed as
each criterion finishes and repeated in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from rbenjamin import (
    Method,
    ModelParams,
    PeriodicGrid,
    SolverConfig,
    SpectralField,
    apply_generator,
    hilbert_transform,
    inverse_transform,
    linear_propagate,
    m_symbol,
    phi_symbol,
    solve,
    sobolev_norm,
    strip_hilbert_transform,
    symbol_table,
)
from rbenjamin.analysis import (
    continuity_probe,
    contraction_probe,
    norm_equivalence_constants,
    split_experiment,
    tail_norms,
)
from rbenjamin.cli import main as cli_main
from rbenjamin.evolution import estimate_bilinear_constant, estimate_local_time
from rbenjamin.io import build_initial_condition
from rbenjamin.config import parse_initial_condition
from rbenjamin.spectral import weighted_norm

from conftest import random_field

pytestmark = pytest.mark.acceptance

UNIT = ModelParams(alpha=1.0, a=1.0, b=1.0)
GRID256 = PeriodicGrid(256)
COSINE = SpectralField.from_modes(GRID256, {1: 0.05, -1: 0.05})  # 0.1·cos x


def h1(x, grid):
    return weighted_norm(x, grid.sobolev_weights(1.0))


@pytest.fixture(scope="module")
def conservation_runs():
    """The RK4 runs to t = 10 shared by criteria 5 and 6."""
    out, start = {}, time.perf_counter()
    for dt in (2e-3, 1e-3):
        out[dt] = solve(COSINE, UNIT, SolverConfig(dt=dt, t_end=10.0, diagnostics_every=1000))
    out["seconds"] = time.perf_counter() - start
    return out


def test_01_linear_isometry(acceptance_line):
    start = time.perf_counter()
    g = PeriodicGrid(128)
    rng = np.random.default_rng(1)
    worst = 0.0
    for i in range(50):
        p = ModelParams(a=rng.uniform(0.1, 5), b=rng.uniform(0.1, 5), h=rng.uniform(0.2, 5),
                        operator="strip" if i % 2 else "hilbert")
        table = symbol_table(g, p)
        F = random_field(g, rng, rng.uniform(0, 3))
        for t in (1.0, -1.0, 10.0, -10.0, 100.0, -100.0):
            G = linear_propagate(F, t, table)
            for s in (0, 1, 2):
                ref = sobolev_norm(F, s)
                worst = max(worst, abs(sobolev_norm(G, s) - ref) / ref)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 5
    acceptance_line(1, "linear isometry", ok, f"max rel deviation {worst:.2e} <= 1e-12, {elapsed:.2f}s < 5s")
    assert ok


def test_02_mode_modulus(acceptance_line):
    g = PeriodicGrid(128)
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(50):
        F = random_field(g, rng, 1.0)
        table = symbol_table(g, ModelParams(a=rng.uniform(0.1, 5), b=rng.uniform(0.1, 5)))
        for t in (1.0, -10.0, 100.0, 1e4):
            G = linear_propagate(F, t, table)
            nz = np.abs(F.coeffs) > 0
            dev = np.abs(np.abs(G.coeffs[nz]) - np.abs(F.coeffs[nz])) / np.abs(F.coeffs[nz])
            worst = max(worst, float(dev.max()))
    ok = worst <= 1e-13
    acceptance_line(2, "per-mode modulus preservation", ok, f"max rel deviation {worst:.2e} <= 1e-13")
    assert ok


def test_03_symbol_bounds(acceptance_line):
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    n_params, n_k = 1000, 100
    # floating-point allowance: a few ulps on bounds that hold with equality at |k| = 1/√a
    rel = 1e-15
    raw = slack = 0
    for _ in range(n_params):
        a, b, h = 10 ** rng.uniform(-3, 3), 10 ** rng.uniform(-3, 3), 10 ** rng.uniform(-2, 2)
        k = np.where(rng.random(n_k) < 0.5, rng.integers(-10**4, 10**4 + 1, n_k),
                     rng.choice([-1, 1], n_k) * 10 ** rng.uniform(-3, 4, n_k)).astype(float)
        p1, p2 = ModelParams(a=a, b=b), ModelParams(a=a, b=b, h=h, operator="strip")
        phi1, phi2 = np.abs(phi_symbol(k, p1)), np.abs(phi_symbol(k, p2))
        m1, m2 = m_symbol(k, p1), m_symbol(k, p2)
        bound = 1.0 / (b + 2 * math.sqrt(a))
        lower = (b + 2 * math.sqrt(a)) * np.abs(k)
        checks_raw = [phi2 <= phi1, phi1 <= bound, m2 >= m1, m1 >= lower]
        checks_slack = [phi2 <= phi1 * (1 + rel), phi1 <= bound * (1 + rel),
                        m2 >= m1 * (1 - rel), m1 >= lower * (1 - rel)]
        raw += sum(int(np.count_nonzero(~c)) for c in checks_raw)
        slack += sum(int(np.count_nonzero(~c)) for c in checks_slack)
    elapsed = time.perf_counter() - start
    ok = slack == 0 and elapsed < 2
    acceptance_line(3, "symbol bounds", ok,
                    f"{n_params * n_k} samples, {slack} violations at 1e-15 rel ({raw} exact-compare), {elapsed:.2f}s < 2s")
    assert ok


def test_04_smoothing_bound(acceptance_line):
    rng = np.random.default_rng(4)
    g = PeriodicGrid(64)
    violations = 0
    worst = 0.0
    for i in range(1000):
        a, b = 10 ** rng.uniform(-2, 2), 10 ** rng.uniform(-2, 2)
        p = ModelParams(a=a, b=b, h=10 ** rng.uniform(-1, 1), operator="strip" if i % 2 else "hilbert")
        table = symbol_table(g, p)
        F = random_field(g, rng, rng.uniform(-1, 3))
        AF = apply_generator(F, table)
        for l in (0, 1):
            lhs, rhs = sobolev_norm(AF, l + 1), sobolev_norm(F, l) / min(a, 1.0)
            worst = max(worst, lhs / rhs)
            violations += lhs > rhs * (1 + 1e-12)
    ok = violations == 0
    acceptance_line(4, "smoothing bound", ok, f"{violations} violations in 2000 checks, max ratio {worst:.3f}")
    assert ok


def test_05a_conservation_drift(conservation_runs, acceptance_line):
    traj = conservation_runs[1e-3]
    r0, r1 = traj.records[0], traj.records[-1]
    drift = abs(r1.triple_norm1 / r0.triple_norm1 - 1)
    ok = drift <= 1e-6 and r1.t == 10.0 and conservation_runs["seconds"] < 30
    acceptance_line(5, "conservation, drift at dt=1e-3", ok,
                    f"drift {drift:.2e} <= 1e-6, runs took {conservation_runs['seconds']:.1f}s < 30s")
    assert ok


def test_05b_conservation_order_signature(conservation_runs, acceptance_line):
    d = {}
    for dt in (2e-3, 1e-3):
        r0, r1 = conservation_runs[dt].records[0], conservation_runs[dt].records[-1]
        d[dt] = abs(r1.triple_norm1 / r0.triple_norm1 - 1)
    ratio = d[2e-3] / d[1e-3] if d[1e-3] > 0 else math.inf
    ok = 8 <= ratio <= 32
    acceptance_line(5, "conservation, drift ratio dt=2e-3 / dt=1e-3 in [8, 32]", ok,
                    f"drifts {d[2e-3]:.2e} / {d[1e-3]:.2e} = {ratio:.3g}; both at double-precision roundoff")
    assert ok, "drift is at roundoff for both steps; see the decisions ledger"


def test_06_mass_conservation(conservation_runs, acceptance_line):
    traj = conservation_runs[1e-3]
    m0 = traj.records[0].mass
    scale = max(abs(m0), traj.records[0].norm0)
    drift = max(abs(r.mass - m0) for r in traj.records) / scale
    # a run with nonzero mean, where the relative drift is meaningful on its own
    G = COSINE + SpectralField.from_modes(GRID256, {0: 0.03})
    t2 = solve(G, UNIT, SolverConfig(dt=1e-3, t_end=10.0, diagnostics_every=1000))
    drift2 = max(abs(r.mass - 0.03) for r in t2.records) / 0.03
    ok = drift <= 1e-13 and drift2 <= 1e-13
    acceptance_line(6, "mass conservation", ok, f"zero-mean run {drift:.1e}, mean 0.03 run {drift2:.1e} <= 1e-13")
    assert ok


def test_07_cross_method(acceptance_line):
    start = time.perf_counter()
    ref = solve(COSINE, UNIT, SolverConfig(dt=1e-4, t_end=1.0, diagnostics_every=10**9)).final
    pd = solve(COSINE, UNIT, SolverConfig(dt=1e-3, t_end=1.0, method=Method.PICARD_DUHAMEL, picard_tol=1e-12,
                                          quad_substeps=4, diagnostics_every=10**9))
    err = h1(pd.final.coeffs - ref.coeffs, GRID256)
    elapsed = time.perf_counter() - start
    ok = err <= 1e-8 and elapsed < 60
    acceptance_line(7, "Picard-Duhamel vs RK4", ok, f"H1 difference {err:.2e} <= 1e-8, {elapsed:.1f}s < 60s")
    assert ok


def test_08_contraction(acceptance_line):
    start = time.perf_counter()
    C = estimate_bilinear_constant(1.0, 1.0, 200, GRID256, UNIT, seed=0)
    T_local = estimate_local_time(sobolev_norm(COSINE, 1.0), C, UNIT.alpha)
    report = contraction_probe(COSINE, T_local / 4, 100, UNIT, seed=0, C=C)
    qmax = max(report.series["ratios"])
    elapsed = time.perf_counter() - start
    ok = qmax < 1 and report.constants["trials"] == 100 and elapsed < 60
    acceptance_line(8, "contraction", ok,
                    f"max ratio {qmax:.4f} < 1, T/T' = {report.constants['q_T']:.2f}, C = {C:.4f}, {elapsed:.1f}s < 60s")
    assert ok


def test_09_split_reconstruction(acceptance_line):
    start = time.perf_counter()
    eta0 = build_initial_condition(parse_initial_condition("random_sobolev(1, 0.5, 9)"), GRID256)
    cfg = SolverConfig(dt=1e-3, t_end=1.0, diagnostics_every=100)
    ref = solve(eta0, UNIT, cfg)
    errs = {}
    for N in (2, 8, 32):
        report, _, _, _ = split_experiment(eta0, N, UNIT, cfg, reference=ref)
        errs[N] = report.reconstruction_1[-1]
    tails = tail_norms(eta0, 1.0)
    monotone = bool(np.all(np.diff(tails) <= 0))
    elapsed = time.perf_counter() - start
    ok = max(errs.values()) <= 1e-12 and monotone and elapsed < 60
    detail = ", ".join(f"N={N}: {e:.1e}" for N, e in errs.items())
    acceptance_line(9, "split reconstruction", ok, f"{detail}; tails monotone={monotone}; {elapsed:.1f}s < 60s")
    assert ok


def test_10_continuity_envelope(acceptance_line):
    start = time.perf_counter()
    report = continuity_probe(COSINE, [1e-2, 1e-4], 1.0, UNIT, SolverConfig(dt=1e-3, t_end=1.0), seed=0)
    elapsed = time.perf_counter() - start
    inconclusive = [n for n in report.notes if "inconclusive" in n]
    names = {a.name for a in report.assertions}
    ok = report.passed and not inconclusive and len(names) == 4 and elapsed < 60
    d = ", ".join(f"eps={eps:g}: |div(0) - eps| {report.assertions[2 * i].value:.1e}, "
                  f"max div/envelope {report.constants[f'max_divergence_over_envelope[{eps:g}]']:.3f}"
                  for i, eps in enumerate((1e-2, 1e-4)))
    acceptance_line(10, "continuity envelope", ok, f"{d}; {elapsed:.1f}s < 60s")
    assert ok


def test_11_norm_equivalence(acceptance_line):
    rng = np.random.default_rng(11)
    failures = 0
    for i in range(20):
        p = ModelParams(a=10 ** rng.uniform(-2, 2), b=10 ** rng.uniform(-2, 2), h=10 ** rng.uniform(-1, 1),
                        operator="strip" if i % 2 else "hilbert")
        K1, K2 = norm_equivalence_constants(p, GRID256)
        m = symbol_table(GRID256, p).m
        w = 1.0 + GRID256.wavenumbers.astype(float) ** 2
        failures += int(np.any(K1 * w > m) or np.any(m > K2 * w))
    ok = failures == 0
    acceptance_line(11, "norm equivalence", ok, f"{failures} of 20 parameter sets break the sandwich")
    assert ok


def test_12_strip_to_hilbert(acceptance_line):
    rng = np.random.default_rng(12)
    g = PeriodicGrid(128)
    p_strip = ModelParams(h=20.0, operator="strip")
    worst = 0.0
    for _ in range(20):
        F = random_field(g, rng, rng.uniform(0, 2), mean=False)
        d = strip_hilbert_transform(F, p_strip) - hilbert_transform(F)
        worst = max(worst, sobolev_norm(d, 0) / sobolev_norm(F, 0))
    ok = worst <= 1e-12
    acceptance_line(12, "strip to Hilbert limit at h=20", ok, f"max rel L2 difference {worst:.1e} <= 1e-12")
    assert ok


def test_13_operator_transforms(acceptance_line):
    g = GRID256
    x = g.points
    cos = SpectralField.from_modes(g, {1: 0.5, -1: 0.5})
    errs = [float(np.max(np.abs(inverse_transform(hilbert_transform(cos)).values + np.sin(x))))]
    for h in (0.3, 1.0, 5.0):
        T = inverse_transform(strip_hilbert_transform(cos, ModelParams(h=h, operator="strip"))).values
        errs.append(float(np.max(np.abs(T + np.sin(x) / math.tanh(h)))))
    ok = max(errs) <= 1e-13
    acceptance_line(13, "operator transforms", ok, f"max pointwise error {max(errs):.1e} <= 1e-13")
    assert ok


ACCEPTANCE_CONFIG = """\
alpha = 1
a = 1
b = 1
operator = hilbert
n_points = 256
dt = 1e-3
t_end = 1
ic = cosine(0.1, 1)
"""


def test_14_determinism(tmp_path, acceptance_line):
    cfg = tmp_path / "acceptance.cfg"
    cfg.write_text(ACCEPTANCE_CONFIG)
    mismatched = []
    for command in ("simulate", "probe-contraction", "probe-continuity"):
        outs = [tmp_path / f"{command}_{i}" for i in (1, 2)]
        for out in outs:
            assert cli_main([command, str(cfg), "--out", str(out)]) == 0
        for name in ("diagnostics.csv", "summary.json"):
            if (outs[0] / name).read_bytes() != (outs[1] / name).read_bytes():
                mismatched.append(f"{command}/{name}")
    ok = not mismatched
    acceptance_line(14, "determinism", ok,
                    "byte-identical diagnostics.csv and summary.json" if ok else f"differs: {mismatched}")
    assert ok
