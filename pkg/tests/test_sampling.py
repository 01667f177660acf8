"""Samplers for the three observation frames.

Monte Carlo checks run against closed-form or quadrature oracles with
3-sigma (or distance) tolerances at fixed seeds.
"""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from gapest import (
    EquilibriumPair,
    EstimationError,
    Exponential,
    SegmentKind,
    UniformInterval,
    WindowKind,
    parse_distribution,
    sample_equilibrium,
    apply_right_censoring,
    sample_renewal_path,
    sample_segment_replicates,
    sample_segments,
    sample_window,
    sample_window_replicates,
)

EXP1 = Exponential(1.0)


def pair_arrays(pairs):
    r = np.array([p.r for p in pairs])
    s = np.array([p.s for p in pairs])
    return r, s


class TestEquilibriumSampling:
    def test_length_biased_mean(self):
        # size-biased exponential(1) is Gamma(2, 1): mean 2, variance 2
        n = 100_000
        pairs = sample_equilibrium(EXP1, n, seed=101)
        q = np.array([p.q for p in pairs])
        se = math.sqrt(2.0 / n)
        assert abs(q.mean() - 2.0) < 3 * se

    def test_backward_marginal_is_exponential(self):
        pairs = sample_equilibrium(EXP1, 100_000, seed=102)
        r, _ = pair_arrays(pairs)
        assert stats.kstest(r, "expon").statistic < 0.01

    def test_forward_equals_backward_in_law(self):
        pairs = sample_equilibrium(EXP1, 100_000, seed=103)
        r, s = pair_arrays(pairs)
        assert stats.ks_2samp(r, s).statistic < 0.01

    def test_determinism(self):
        a = sample_equilibrium(EXP1, 50, seed=7)
        b = sample_equilibrium(EXP1, 50, seed=7)
        assert a == b
        assert sample_equilibrium(EXP1, 1, seed=9) == sample_equilibrium(EXP1, 1, seed=9)

    @pytest.mark.parametrize("spec", ["weibull:2:1", "uniform:0.5:2"])
    def test_size_biased_law(self, spec):
        # weibull draws through the exact incomplete-gamma inverse, uniform
        # through the generic dense-grid inversion
        dist = parse_distribution(spec)
        pairs = sample_equilibrium(dist, 50_000, seed=104)
        q = np.array([p.q for p in pairs])
        mu = dist.mean()

        def lb_cdf(x):
            val, _ = integrate.quad(lambda u: u * float(dist.pdf(u)) / mu, 0.0, x)
            return val

        grid = np.linspace(1e-6, float(dist.ppf(1 - 1e-9)), 400)
        cdf_vals = np.array([lb_cdf(x) for x in grid])
        assert stats.kstest(q, lambda x: np.interp(x, grid, cdf_vals)).statistic < 0.01

    def test_equilibrium_recurrence_law(self):
        # generic grid path for a continuous family and the exact piecewise
        # linear inverse for a discrete one
        for spec, seed in (("weibull:2:1", 106), ("atoms:1=0.4,2.5=0.6", 107)):
            dist = parse_distribution(spec)
            draws = dist.sample_equilibrium_recurrence(
                np.random.default_rng(seed), 50_000
            )
            mu = dist.mean()
            grid = np.linspace(0.0, float(dist.support_upper()), 3000)
            surv = np.asarray(dist.survival(grid), dtype=float)
            cdf_vals = integrate.cumulative_trapezoid(surv / mu, grid, initial=0.0)
            stat = stats.kstest(draws, lambda x: np.interp(x, grid, cdf_vals)).statistic
            assert stat < 0.01, spec

    def test_discrete_gaps(self):
        dist = parse_distribution("atoms:1=0.5,3=0.5")
        pairs = sample_equilibrium(dist, 20_000, seed=105)
        q = np.array([p.q for p in pairs])
        assert set(np.unique(q)) == {1.0, 3.0}
        # size-biased masses 1*0.5 : 3*0.5 -> 0.25, 0.75
        frac3 = np.mean(q == 3.0)
        assert abs(frac3 - 0.75) < 3 * math.sqrt(0.75 * 0.25 / q.size)

    def test_rejects_bad_n(self):
        with pytest.raises(ValueError):
            sample_equilibrium(EXP1, 0, seed=1)


class TestRightCensoring:
    def test_noop_with_huge_bound(self):
        pairs = sample_equilibrium(EXP1, 200, seed=11)
        out = apply_right_censoring(pairs, parse_distribution("atoms:1e9=1"), seed=1)
        assert out == pairs

    def test_min_rule(self):
        out = apply_right_censoring(
            [EquilibriumPair(1.0, 2.0)], parse_distribution("atoms:1.5=1"), seed=1
        )
        assert out == [EquilibriumPair(1.0, 1.5, True)]

    def test_censored_fraction(self):
        # independent exp(1) censoring of an exp(1) forward time: P(C < S) = 1/2
        n = 100_000
        pairs = sample_equilibrium(EXP1, n, seed=12)
        out = apply_right_censoring(pairs, EXP1, seed=13)
        frac = np.mean([p.s_censored for p in out])
        assert abs(frac - 0.5) < 3 * math.sqrt(0.25 / n)

    def test_rejects_already_censored(self):
        with pytest.raises(EstimationError):
            apply_right_censoring([EquilibriumPair(1.0, 1.0, True)], EXP1, seed=1)


class TestWindowSampling:
    def test_empty_window_frequency(self):
        n = 20_000
        reps = sample_window_replicates(EXP1, 0.0, 1.0, n, seed=21)
        freq = np.mean([rep[0].kind is WindowKind.EMPTY for rep in reps])
        p = math.exp(-1.0)
        assert abs(freq - p) < 3 * math.sqrt(p * (1 - p) / n)

    def test_renewal_count_matches_rate(self):
        # renewals in a window of length 10 at rate 1: complete + censored
        # records count them; for exponential gaps the count is Poisson(10)
        n = 10_000
        reps = sample_window_replicates(EXP1, 0.0, 10.0, n, seed=22)
        counts = np.array(
            [
                sum(1 for o in rep if o.kind in (WindowKind.COMPLETE, WindowKind.CENSORED))
                for rep in reps
            ]
        )
        assert abs(counts.mean() - 10.0) < 3 * math.sqrt(10.0 / n)

    def test_gap_larger_than_window_never_complete(self):
        dist = parse_distribution("atoms:5=1")
        reps = sample_window_replicates(dist, 0.0, 1.0, 500, seed=23)
        kinds = {o.kind for rep in reps for o in rep}
        assert WindowKind.COMPLETE not in kinds

    def test_record_structure(self):
        reps = sample_window_replicates(EXP1, 2.0, 5.0, 300, seed=24)
        for rep in reps:
            if rep[0].kind is WindowKind.EMPTY:
                assert len(rep) == 1
                assert rep[0].value == 3.0
            else:
                assert rep[0].kind is WindowKind.FORWARD
                assert rep[-1].kind is WindowKind.CENSORED
                assert all(o.kind is WindowKind.COMPLETE for o in rep[1:-1])
                total = sum(o.value for o in rep)
                assert total == pytest.approx(3.0, abs=1e-9)

    def test_determinism_and_preconditions(self):
        assert sample_window(EXP1, 0.0, 2.0, seed=5) == sample_window(EXP1, 0.0, 2.0, seed=5)
        with pytest.raises(ValueError):
            sample_window(EXP1, 1.0, 1.0, seed=5)

    def test_stationarity_forward_from_interior_point(self):
        # with gaps in [0.2, 1] every window of length 3 contains a renewal
        # after t* = 1, so the forward time from t* is reconstructible and
        # must again follow the equilibrium recurrence law
        dist = UniformInterval(0.2, 1.0)
        n = 100_000
        t_star = 1.0
        reps = sample_window_replicates(dist, 0.0, 3.0, n, seed=25)
        fwd = np.empty(n)
        for i, rep in enumerate(reps):
            assert rep[0].kind is WindowKind.FORWARD
            pos = rep[0].value
            renewals = [pos]
            for o in rep[1:-1]:
                pos += o.value
                renewals.append(pos)
            after = [u for u in renewals if u > t_star]
            fwd[i] = min(after) - t_star

        mu = dist.mean()
        grid = np.linspace(0.0, 1.0, 2001)
        surv = np.asarray(dist.survival(grid), dtype=float)
        cdf_vals = integrate.cumulative_trapezoid(surv / mu, grid, initial=0.0)
        assert stats.kstest(fwd, lambda x: np.interp(x, grid, cdf_vals)).statistic < 0.01


class TestSegmentSampling:
    def test_observed_count_mean(self):
        # expected observed count is rate * (window + mean lifetime)
        n = 2_000
        reps = sample_segment_replicates(2.0, EXP1, 0.0, 3.0, n, seed=31)
        counts = np.array([len(r) for r in reps])
        assert abs(counts.mean() - 8.0) < 3 * math.sqrt(8.0 / n)

    def test_count_is_poisson(self):
        n = 10_000
        reps = sample_segment_replicates(2.0, EXP1, 0.0, 3.0, n, seed=32)
        counts = np.array([len(r) for r in reps])
        assert abs(counts.var() / counts.mean() - 1.0) < 0.05

    def test_long_lifetime_never_proper_complete(self):
        dist = parse_distribution("atoms:5=1")
        reps = sample_segment_replicates(1.0, dist, 0.0, 1.0, 300, seed=33)
        kinds = {s.kind for rep in reps for s in rep}
        assert SegmentKind.PROPER_COMPLETE not in kinds

    def test_geometry_invariants(self):
        w = 2.0
        reps = sample_segment_replicates(3.0, EXP1, 1.0, 3.0, 400, seed=34)
        for rep in reps:
            for s in rep:
                assert s.length > 0
                if s.kind is SegmentKind.RESIDUAL_CENSORED:
                    assert s.length == w
                else:
                    assert s.length <= w + 1e-12

    def test_proper_complete_length_law(self):
        # a complete proper lifetime of length x needs its birth in a
        # sub-window of length (w - x)+, so pooled pc lengths follow the
        # density proportional to f(x) (w - x)+
        w = 2.0
        reps = sample_segment_replicates(100.0, EXP1, 0.0, w, 400, seed=35)
        pc = np.array(
            [s.length for rep in reps for s in rep if s.kind is SegmentKind.PROPER_COMPLETE]
        )
        assert pc.size > 20_000
        grid = np.linspace(0.0, w, 2001)
        dens = np.asarray(EXP1.pdf(grid)) * (w - grid)
        cdf_vals = integrate.cumulative_trapezoid(dens, grid, initial=0.0)
        cdf_vals /= cdf_vals[-1]
        assert stats.kstest(pc, lambda x: np.interp(x, grid, cdf_vals)).statistic < 0.015

    def test_determinism_and_preconditions(self):
        a = sample_segments(2.0, EXP1, 0.0, 3.0, seed=36)
        b = sample_segments(2.0, EXP1, 0.0, 3.0, seed=36)
        assert a == b
        with pytest.raises(ValueError):
            sample_segments(0.0, EXP1, 0.0, 3.0, seed=1)
        with pytest.raises(ValueError):
            sample_segments(1.0, EXP1, 3.0, 3.0, seed=1)


class TestRenewalPath:
    def test_path_consistent_with_window_records(self):
        v, gaps = sample_renewal_path(EXP1, 4.0, seed=41)
        obs = sample_window(EXP1, 0.0, 4.0, seed=41)
        if v > 4.0:
            assert obs[0].kind is WindowKind.EMPTY
        else:
            assert obs[0].value == v
            assert [o.value for o in obs[1:-1]] == gaps[:-1]
