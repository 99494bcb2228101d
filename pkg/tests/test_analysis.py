import math

import numpy as np
import pytest

from rbenjamin import ModelParams, PeriodicGrid, SolverConfig, SpectralField, solve, sobolev_norm, triple_norm
from rbenjamin.analysis import (
    continuity_envelope,
    continuity_probe,
    contraction_probe,
    convergence_study,
    frequency_split,
    norm_equivalence_constants,
    norm_growth_check,
    quotient_residuals,
    restrict,
    split_experiment,
    tail_norms,
)

from conftest import random_field


class TestNormEquivalence:
    def test_hilbert_unit_params(self):
        assert norm_equivalence_constants(ModelParams(), PeriodicGrid(64)) == (0.5, 1.5)

    def test_bbm_limit(self):
        with pytest.warns(UserWarning):
            p = ModelParams(a=2.0, b=0.0, allow_b_zero=True)
        assert norm_equivalence_constants(p, PeriodicGrid(64)) == (1.0, 3.0)

    def test_sandwich_on_random_fields(self, rng):
        g = PeriodicGrid(64)
        for _ in range(100):
            p = ModelParams(a=rng.uniform(0.01, 10), b=rng.uniform(0.01, 10), h=rng.uniform(0.1, 5),
                            operator=rng.choice(["hilbert", "strip"]))
            K1, K2 = norm_equivalence_constants(p, g)
            F = random_field(g, rng)
            n1, tn = sobolev_norm(F, 1), triple_norm(F, p)
            assert math.sqrt(K1) * n1 <= tn * (1 + 1e-15) and tn <= math.sqrt(K2) * n1 * (1 + 1e-15)


class TestFrequencySplit:
    def test_exact_partition(self, rng):
        F = random_field(PeriodicGrid(32), rng)
        low, high = frequency_split(F, 5)
        assert np.array_equal((low + high).coeffs, F.coeffs)
        assert high.mode(5) == 0 and low.mode(6) == 0 and low.mode(-5) == F.mode(-5)

    def test_bad_cutoff(self):
        with pytest.raises(ValueError):
            frequency_split(SpectralField.zeros(PeriodicGrid(16)), 8)

    def test_tail_norms(self, rng):
        F = random_field(PeriodicGrid(32), rng)
        tails = tail_norms(F, 0.5)
        assert np.all(np.diff(tails) <= 0) and tails[-1] == 0
        for N in (0, 3, 10):
            assert tails[N] == pytest.approx(sobolev_norm(frequency_split(F, N)[1], 0.5), rel=1e-14)

    def test_split_experiment(self, rng):
        g = PeriodicGrid(64)
        F = random_field(g, rng, 1.5, scale=0.3)
        report, ref, v, w = split_experiment(F, 4, ModelParams(), SolverConfig(dt=0.01, t_end=0.5))
        assert report.max_reconstruction_1 < 1e-13
        assert report.high_norm < report.low_norm
        assert report.to_dict()["cutoff"] == 4
        assert len(v) == len(w) == len(ref)


class TestContractionProbe:
    def test_ratios_below_q(self, rng):
        g = PeriodicGrid(32)
        F = random_field(g, rng, 2.0, scale=0.2)
        p = ModelParams()
        report = contraction_probe(F, 0.05, 30, p, C=1.0, nodes=16)
        T_local = report.constants["T_local"]
        assert report.passed, report.assertions
        assert report.constants["q_T"] == pytest.approx(0.05 / T_local)
        assert max(report.series["ratios"]) < report.constants["q_T"]

    def test_rejects_T_past_local_time(self, rng):
        F = random_field(PeriodicGrid(16), rng)
        with pytest.raises(ValueError, match="local time"):
            contraction_probe(F, 100.0, 5, ModelParams(), C=1.0)

    def test_seeded(self, rng):
        F = random_field(PeriodicGrid(16), rng, scale=0.1)
        a = contraction_probe(F, 0.1, 5, ModelParams(), seed=4, C=1.0, nodes=8).series["ratios"]
        b = contraction_probe(F, 0.1, 5, ModelParams(), seed=4, C=1.0, nodes=8).series["ratios"]
        assert a == b


class TestContinuity:
    def test_envelope_formula(self):
        t = np.array([0.0, 0.5])
        env = continuity_envelope(1e-3, t, 2.0, 1.0)
        assert env[0] == pytest.approx(1e-3)
        e = math.exp(1.0)
        assert env[1] == pytest.approx(2 * 1e-3 * e / (2 + 1e-3 * (1 - e)))

    def test_envelope_blows_up(self):
        assert np.isinf(continuity_envelope(10.0, np.array([5.0]), 1.0, 1.0))[0]

    def test_probe(self, rng):
        g = PeriodicGrid(32)
        F = random_field(g, rng, 2.0, scale=0.1)
        report = continuity_probe(F, [1e-2, 1e-5], 0.5, ModelParams(), SolverConfig(dt=0.01, t_end=0.5), C=1.0)
        assert report.passed, report.assertions
        assert len(report.series["t"]) == len(report.series["divergence[0.01]"])


class TestGrowthAndQuotients:
    def test_norm_growth(self, rng):
        g = PeriodicGrid(32)
        F = random_field(g, rng, 2.0, scale=0.2)
        traj = solve(F, ModelParams(), SolverConfig(dt=0.05, t_end=2.0, diagnostics_every=1))
        report = norm_growth_check(traj, ModelParams(), 1.0, trials=50)
        assert report.passed
        assert report.constants["growth_rate"] > 0

    def test_quotients_shrink_linearly(self, rng):
        g = PeriodicGrid(32)
        F = random_field(g, rng, 2.0, scale=0.3)
        res = quotient_residuals(F, ModelParams(), [1e-2, 5e-3, 2.5e-3])
        assert 1.6 < res[0] / res[1] < 2.4 and 1.6 < res[1] / res[2] < 2.4


class TestConvergence:
    def test_restrict_round_trip(self, rng):
        F = random_field(PeriodicGrid(16), rng)
        assert np.array_equal(restrict(restrict(F, PeriodicGrid(64)), PeriodicGrid(16)).coeffs, F.coeffs)

    def test_study(self):
        g = PeriodicGrid(64)
        p = ModelParams(a=0.01, b=0.01)
        F = SpectralField.from_modes(g, {1: 0.5, -1: 0.5, 2: 0.3j, -2: -0.3j})
        report = convergence_study(F, p, [0.04, 0.02], [16, 32], t_end=0.5)
        assert 3.7 < report.series["time_orders"][0] < 4.3
        errs = report.series["space_errors"]
        assert errs[1] < errs[0]

    def test_reference_checks(self):
        F = SpectralField.zeros(PeriodicGrid(16))
        with pytest.raises(ValueError):
            convergence_study(F, ModelParams(), [0.1], [16], ref_dt=0.2)
        with pytest.raises(ValueError):
            convergence_study(F, ModelParams(), [0.1], [32])


class TestEdgeCases:
    def test_split_at_full_cutoff_is_exact(self, rng):
        g = PeriodicGrid(32)
        F = random_field(g, rng, 1.5, scale=0.3)
        report, ref, v, w = split_experiment(F, g.mode_cutoff, ModelParams(), SolverConfig(dt=0.01, t_end=0.3))
        assert all(np.array_equal(a.coeffs, b.coeffs) for a, b in zip(w.fields, ref.fields))
        assert all(not np.any(V.coeffs) for V in v.fields)

    def test_split_at_zero_with_zero_mean(self, rng):
        g = PeriodicGrid(32)
        F = random_field(g, rng, 1.5, scale=0.3, mean=False)
        report, ref, v, w = split_experiment(F, 0, ModelParams(), SolverConfig(dt=0.01, t_end=0.3))
        assert all(not np.any(W.coeffs) for W in w.fields)
        assert all(np.array_equal(a.coeffs, b.coeffs) for a, b in zip(v.fields, ref.fields))

    def test_linear_limit_contracts_trivially(self, rng):
        F = random_field(PeriodicGrid(16), rng)
        report = contraction_probe(F, 1.0, 5, ModelParams(alpha=0.0), C=1.0, nodes=8)
        assert max(report.series["ratios"]) == 0.0 and report.passed

    def test_zero_perturbation(self, rng):
        F = random_field(PeriodicGrid(16), rng, 2.0, scale=0.1)
        report = continuity_probe(F, [0.0], 0.2, ModelParams(), SolverConfig(dt=0.01, t_end=0.2), C=1.0)
        assert max(report.series["divergence[0]"]) == 0.0 and report.passed

    def test_identical_configs_give_zero_error(self):
        g = PeriodicGrid(16)
        F = SpectralField.from_modes(g, {1: 0.1, -1: 0.1})
        report = convergence_study(F, ModelParams(), [0.05], [16], t_end=0.2, ref_dt=0.05)
        assert report.series["time_errors"] == [0.0] and report.series["space_errors"] == [0.0]
