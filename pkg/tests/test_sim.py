"""
Stochastic simulation and the exact semigroup action.
Monte Carlo assertions use fixed seeds and generous standard-error bands.
"""
import math
import sys
from collections import Counter
from pathlib import Path

import numpy as np
import pytest
from scipy.sparse.linalg import expm_multiply

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from engines.algebra import Algebra, config_index, content, physical_configs
from engines.duality import Variant, duality_value
from engines.markov import FloatRates, float_reference_generator, reference_rates
from engines.reports import DualityEstimate
from engines.sim import (SimConfig, algebra_rates, current_moment_demo, dual_configuration, enabled_moves,
                         exact_duality_sides, expm_action, first_event_times, mc_duality_check, mean_stderr,
                         process_rates, run_ensemble, simulate, waiting_time_ks)
from utils.errors import ConfigError, ConvergenceError, DomainError

RATES = FloatRates(L10=1.0, R10=0.25, L20=1.0, R20=0.25, L12=1.5, R12=0.5)


class TestSimConfig:
    """Parameter validation."""

    def test_bad_time(self):
        with pytest.raises(ConfigError):
            SimConfig(3, RATES, (1, 0, 0), -1.0)
        with pytest.raises(ConfigError):
            SimConfig(3, RATES, (1, 0, 0), float("inf"))

    def test_bad_initial(self):
        with pytest.raises(ConfigError):
            SimConfig(3, RATES, (1, 3, 0), 1.0)
        with pytest.raises(ConfigError):
            SimConfig(3, RATES, (1, 0), 1.0)

    def test_bad_seed_and_traj(self):
        with pytest.raises(ConfigError):
            SimConfig(2, RATES, (1, 0), 1.0, seed=-1)
        with pytest.raises(ConfigError):
            SimConfig(2, RATES, (1, 0), 1.0, traj=0)


class TestTrajectories:
    """Single Gillespie runs."""

    def test_zero_time(self):
        final, events = simulate(SimConfig(4, RATES, (1, 2, 0, 1), 0.0), record=True)
        assert final == (1, 2, 0, 1)
        assert events == []

    def test_frozen_state(self):
        final, events = simulate(SimConfig(3, RATES, (0, 0, 0), 5.0), record=True)
        assert final == (0, 0, 0) and not events

    def test_conservation(self):
        cfg = SimConfig(6, RATES, (1, 2, 0, 1, 0, 2), 3.0, seed=11, traj=50)
        for final in run_ensemble(cfg):
            assert content(final) == (2, 2)

    def test_recorded_events(self):
        cfg = SimConfig(5, RATES, (1, 2, 0, 0, 1), 2.0, seed=3)
        final, events = simulate(cfg, record=True)
        assert len(events) % 2 == 0
        times = [e[0] for e in events]
        assert times == sorted(times) and all(0 < t <= 2.0 for t in times)
        state = list(cfg.initial)
        for _, site, old, new in events:
            assert state[site - 1] == old
            state[site - 1] = new
        assert tuple(state) == final

    def test_enabled_moves(self):
        moves = enabled_moves((0, 1, 2, 0), RATES)
        assert sorted((b, na, nb) for b, na, nb, _ in moves) == [(0, 1, 0), (1, 2, 1), (2, 0, 2)]

    def test_zero_rate_disables_move(self):
        rates = FloatRates(L10=0.0, R10=0.0, L20=1.0, R20=1.0, L12=1.0, R12=1.0)
        assert enabled_moves((0, 1), rates) == []


class TestLaw:
    """End-state frequencies of seeded ensembles against the exact semigroup on two sites."""

    N = 20000
    T = 0.8

    def _frequencies_match(self, rates, start, seed):
        counts = Counter(run_ensemble(SimConfig(2, rates, start, self.T, seed=seed, traj=self.N)))
        v = np.zeros(9)
        v[config_index(start, 3)] = 1.0
        p = expm_action(float_reference_generator(rates, 2), v, self.T)
        for z in physical_configs(2):
            pz = float(p[config_index(z, 3)])
            se = math.sqrt(max(pz * (1.0 - pz), 0.0) / self.N)
            freq = counts[z] / self.N
            assert abs(freq - pz) <= 4.0 * se + 1e-12, f"{start} -> {z}: {freq} vs {pz} (se {se:.2g})"
        return counts, p

    @pytest.mark.parametrize("alg", list(Algebra))
    @pytest.mark.parametrize("start", [(0, 2), (1, 0), (1, 2), (2, 1)])
    def test_end_state_frequencies(self, alg, start):
        self._frequencies_match(algebra_rates(alg, 0.5), start, seed=31)

    def test_one_type_two_particle(self):
        rates = algebra_rates(Algebra.A2, 0.5)
        assert (rates.L20, rates.R20) == pytest.approx((1.0, 4.0))
        counts, p = self._frequencies_match(rates, (0, 2), seed=2)
        want = 1.0 / 5.0 * (1.0 - math.exp(-5.0 * self.T))
        assert p[config_index((2, 0), 3)] == pytest.approx(want, abs=1e-12)
        assert want == pytest.approx(0.19634, abs=1e-5)
        assert counts[(0, 2)] + counts[(2, 0)] == self.N


class TestEnsembles:
    """Seeded ensembles are reproducible."""

    def test_same_seed_same_result(self):
        cfg = SimConfig(5, RATES, (1, 2, 1, 0, 0), 1.0, seed=5, traj=30)
        assert run_ensemble(cfg) == run_ensemble(cfg)

    def test_process_pool_matches_serial(self):
        cfg = SimConfig(4, RATES, (1, 2, 0, 0), 1.0, seed=9, traj=40)
        assert run_ensemble(cfg, jobs=2) == run_ensemble(cfg, jobs=1)

    def test_mean_stderr(self):
        mean, err = mean_stderr([1.0, 2.0, 3.0])
        assert mean == pytest.approx(2.0)
        assert err == pytest.approx(math.sqrt(1.0 / 3.0))
        assert mean_stderr([4.0]) == (4.0, 0.0)
        with pytest.raises(ValueError):
            mean_stderr([])


class TestSemigroup:
    """e^{tQ^T} v by uniformization."""

    def test_two_state_closed_form(self):
        a, b, t = 1.0, 0.25, 0.8
        Q = float_reference_generator(RATES, 2)
        start = np.zeros(9)
        start[config_index((0, 2), 3)] = 1.0
        p = expm_action(Q, start, t)
        want = a / (a + b) * (1.0 - math.exp(-(a + b) * t))
        assert p[config_index((2, 0), 3)] == pytest.approx(want, abs=1e-12)
        assert p.sum() == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("t", [0.3, 2.0, 40.0])
    def test_matches_scipy(self, t):
        Q = float_reference_generator(RATES, 4)
        v = np.zeros(81)
        v[config_index((1, 2, 0, 2), 3)] = 1.0
        ours = expm_action(Q, v, t)
        ref = expm_multiply(Q.T.tocsc() * t, v)
        np.testing.assert_allclose(ours, ref, atol=1e-10)

    def test_zero_time_is_identity(self):
        v = np.arange(9.0)
        assert np.array_equal(expm_action(float_reference_generator(RATES, 2), v, 0.0), v)

    def test_negative_time(self):
        with pytest.raises(ValueError):
            expm_action(float_reference_generator(RATES, 2), np.ones(9), -1.0)


class TestWaitingTimes:
    """First-event times are exponential with the total enabled rate."""

    def test_ks(self):
        cfg = SimConfig(3, RATES, (1, 0, 2), 100.0, seed=7)
        assert waiting_time_ks(cfg, 2000) > 1e-3

    def test_no_move(self):
        with pytest.raises(DomainError):
            first_event_times(SimConfig(2, RATES, (0, 0), 1.0), 5)

    def test_horizon_too_short(self):
        with pytest.raises(ConvergenceError):
            first_event_times(SimConfig(2, RATES, (0, 1), 1e-12), 5)


class TestDualityEstimates:
    """Both sides of the duality relation."""

    @pytest.mark.parametrize("variant,x,y", [
        (Variant.C2_TO_ASEP, (1, 2, 0, 1), (0, 2, 2, 0)),
        (Variant.C2_SELF, (1, 1, 2, 0), (2, 0, 1, 0)),
        (Variant.A2_SELF, (2, 1, 0, 1), (1, 0, 2, 0)),
    ])
    def test_exact_sides_agree(self, variant, x, y):
        lhs, rhs = exact_duality_sides(variant, x, y, 0.7, 0.5)
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)

    def test_algebra_rates(self):
        r = algebra_rates(Algebra.A2, 0.5)
        assert r.L10 == pytest.approx(1.0) and r.R10 == pytest.approx(4.0)
        got = process_rates(Variant.C2_SELF, 0.5).as_dict()
        assert got == pytest.approx(reference_rates(Algebra.C2).at(0.5).as_dict())

    @pytest.mark.slow
    def test_monte_carlo(self):
        est = mc_duality_check(Variant.C2_TO_ASEP, (1, 2, 0, 1), (0, 2, 0, 0), 0.5, 4000, seed=2024)
        assert est.exact_lhs is not None
        assert est.agrees(4.0), est.model_dump()

    def test_outside_domain(self):
        with pytest.raises(DomainError):
            mc_duality_check(Variant.C2_TO_ASEP, (1, 2), (1, 0), 0.5, 10, seed=1)

    @pytest.mark.slow
    def test_moment_demo(self):
        rep = current_moment_demo(Variant.A2_SELF, (1, 2, 1, 0), [1, 3], 0.5, 0.6, 2000, seed=77, types=[1, 2])
        assert rep.r == 2 and rep.xi == "1020"
        assert rep.estimate.agrees(4.0)

    def test_dual_configuration(self):
        assert dual_configuration(4, [2, 4]) == (0, 2, 0, 2)
        with pytest.raises(ConfigError):
            dual_configuration(3, [1, 1])
        with pytest.raises(ConfigError):
            dual_configuration(3, [4])
        with pytest.raises(ConfigError):
            dual_configuration(3, [1], [3])

    def test_agreement_uses_combined_errors(self):
        est = DualityEstimate(variant="A2_self", x="12", y="10", t=1.0, q=0.5, lhs_mean=1.0, lhs_stderr=0.01,
                              rhs_mean=1.05, rhs_stderr=0.01, n_lhs=10, n_rhs=10, exact_lhs=1.04, exact_rhs=1.04)
        assert est.agrees(3.0)
        assert not est.agrees(2.0)
        assert not est.model_copy(update={"exact_lhs": 1.2}).agrees(3.0)

    def test_zero_time_has_no_variance(self):
        x, y = (1, 2, 0, 0), (2, 2, 0, 0)
        want = duality_value(Variant.C2_SELF, x, y).evaluate(0.7)
        assert want > 0
        est = mc_duality_check(Variant.C2_SELF, x, y, 0.0, 200, seed=5, q_value=0.7)
        assert est.lhs_mean == pytest.approx(want) and est.rhs_mean == pytest.approx(want)
        assert est.lhs_stderr == 0.0 and est.rhs_stderr == 0.0
        assert est.exact_lhs == pytest.approx(want) and est.exact_rhs == pytest.approx(want)
        assert est.agrees()

    @pytest.mark.slow
    def test_moment_demo_single_dual_particle(self):
        rep = current_moment_demo(Variant.C2_TO_ASEP, (1, 2, 0, 1), [2], 0.5, 0.5, 3000, seed=19)
        assert rep.r == 1 and rep.xi == "0200"
        assert rep.estimate.agrees(4.0), rep.estimate.model_dump()

    @pytest.mark.parametrize("variant", [Variant.A2_SELF, Variant.C2_TO_ASEP])
    def test_moment_demo_empty_dual(self, variant):
        rep = current_moment_demo(variant, (1, 2, 0, 1), [], 0.5, 0.5, 50, seed=3)
        assert rep.r == 0 and rep.xi == "0000"
        assert rep.estimate.lhs_mean == 1.0 and rep.estimate.rhs_mean == 1.0
        assert rep.estimate.lhs_stderr == 0.0 and rep.estimate.rhs_stderr == 0.0
        assert rep.agreement

    def test_moment_demo_empty_dual_c2_self(self):
        with pytest.raises(ConfigError):
            current_moment_demo(Variant.C2_SELF, (1, 2, 0, 1), [], 0.5, 0.5, 50, seed=3)


def _random_pair(variant, rng, L=6):
    """x with one to three particles on sites 3..L and a dual y with D(x, y) != 0."""
    k = int(rng.integers(1, 4))
    occupied = sorted(int(s) for s in rng.choice(np.arange(2, L), size=k, replace=False))
    x = [0] * L
    y = [0] * L
    for s in occupied:
        x[s] = int(rng.integers(1, 3))
    if variant is Variant.C2_SELF:
        keep = occupied
    else:
        keep = [s for s in occupied if rng.random() < 0.7] or occupied[:1]
    for s in keep:
        if variant is Variant.C2_TO_ASEP or x[s] == 2:
            y[s] = 2
        else:
            y[s] = int(rng.integers(1, 3))
    return tuple(x), tuple(y)


class TestStochasticConsistency:
    """Monte Carlo duality on six sites, ten seeded pairs per variant."""

    @pytest.mark.slow
    @pytest.mark.parametrize("variant", list(Variant))
    @pytest.mark.parametrize("k", range(10))
    def test_randomized_pairs(self, variant, k):
        rng = np.random.default_rng([list(Variant).index(variant), k])
        x, y = _random_pair(variant, rng)
        assert duality_value(variant, x, y).evaluate(0.5) > 0
        est = mc_duality_check(variant, x, y, 1.0, 20000, seed=1000 + k, q_value=0.5, jobs=2)
        assert est.exact_lhs == pytest.approx(est.exact_rhs, rel=1e-8, abs=1e-15)
        assert est.agrees(3.0), est.model_dump()
