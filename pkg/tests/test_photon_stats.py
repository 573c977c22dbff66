"""
Tests de la simulation HBT, de l'intercorrélation et de l'estimation de g²(0).

Les runs Monte Carlo longs (≥ 10^7 impulsions) sont marqués `slow`.
"""

import math

import numpy as np
import pytest

from qdphot import kernels
from qdphot.errors import DomainError
from qdphot.models import (
    CoincidenceHistogram,
    DetectorModel,
    EmitterModel,
    TimestampStream,
    drive_probability,
)
from qdphot.photon_stats import (
    background_from_rates,
    correlate,
    emitted_g2,
    estimate_g2,
    fit_histogram,
    histogram_model,
    p_multi_for_g2,
    purity,
    side_peak_chi2,
    simulate_streams,
)

PERIOD = 12.5
BIN = 0.128
TAU_MAX = 75.0


def _stream(name, times, duration_s=1e-6, period=None):
    return TimestampStream(name, np.asarray(times, dtype=float), duration_s, 0.0, period)


def _naive_histogram(ta, tb, bin_width, tau_max):
    k_min = math.floor(-tau_max / bin_width)
    n_bins = math.floor(tau_max / bin_width) - k_min + 1
    dt = (tb[None, :] - ta[:, None]).ravel()
    dt = dt[np.abs(dt) <= tau_max]
    k = np.clip(np.floor(dt / bin_width).astype(np.int64) - k_min, 0, n_bins - 1)
    return np.bincount(k, minlength=n_bins)


def _synthetic_histogram(amplitudes, tau_d, background=0.0, **meta):
    """Histogramme exact (arrondi à l'entier) de pics exponentiels d'amplitudes données par k."""
    k_min = math.floor(-TAU_MAX / BIN)
    n_bins = math.floor(TAU_MAX / BIN) - k_min + 1
    centers = (k_min + np.arange(n_bins) + 0.5) * BIN
    mean = np.full(n_bins, background)
    for k, amp in amplitudes.items():
        mean += amp * np.exp(-np.abs(centers - k * PERIOD) / tau_d)
    return CoincidenceHistogram(
        bin_width_ns=BIN,
        tau_max_ns=TAU_MAX,
        k_min=k_min,
        counts=np.round(mean).astype(np.int64),
        pulse_period_ns=PERIOD,
        **meta,
    )


def _amplitudes(a_side, a_zero, n=6):
    return {k: (a_zero if k == 0 else a_side) for k in range(-n, n + 1)}


# ─────────────────────────────────────────────────────────────
# Modèle d'émetteur
# ─────────────────────────────────────────────────────────────


class TestEmitterModel:
    """Tests pour p_multi_for_g2(), emitted_g2() et la loi de saturation."""

    def test_reference_target(self):
        assert p_multi_for_g2(0.3, 0.5) == pytest.approx(0.0563, abs=1e-4)

    @pytest.mark.parametrize("target", [0.01, 0.1, 0.3, 0.5])
    @pytest.mark.parametrize("pe", [0.2, 0.5, 0.8])
    def test_inverse(self, target, pe):
        pm = p_multi_for_g2(target, pe)
        assert 2.0 * pm / (pe + 2.0 * pm) ** 2 == pytest.approx(target, rel=1e-9)

    def test_zero_target(self):
        assert p_multi_for_g2(0.0, 0.5) == 0.0

    def test_unreachable_target(self):
        with pytest.raises(DomainError):
            p_multi_for_g2(1.0, 1.0)

    def test_emitted_g2_counts_pairs(self):
        assert emitted_g2(np.array([1, 1, 0, 2])) == pytest.approx(0.5)

    def test_emitted_g2_without_photons(self):
        with pytest.raises(DomainError):
            emitted_g2(np.zeros(10))

    def test_saturation_law(self):
        assert drive_probability(5.0, 10.0) == pytest.approx(1.0 / 3.0)
        assert drive_probability(10.0, 10.0, "exponential") == pytest.approx(1.0 - math.exp(-1.0))
        em = EmitterModel(saturation_power_nw=10.0, drive_power_nw=5.0)
        assert em.p_excite == pytest.approx(1.0 / 3.0)

    def test_drive_without_saturation(self):
        with pytest.raises(DomainError):
            EmitterModel(drive_power_nw=5.0)

    def test_probabilities_exceed_one(self):
        with pytest.raises(DomainError):
            EmitterModel(p_excite=0.8, p_multi=0.3)


# ─────────────────────────────────────────────────────────────
# Intercorrélation
# ─────────────────────────────────────────────────────────────


class TestCorrelate:
    """Tests pour correlate() et le noyau numba de comptage de paires."""

    def test_single_pair(self):
        h = correlate(_stream("A", [0.0]), _stream("B", [5.0]), bin_width_ns=1.0, tau_max_ns=10.0)
        assert h.total == 1
        (idx,) = np.nonzero(h.counts)
        assert h.tau_ns[idx[0]] == pytest.approx(5.0)

    def test_negative_delay(self):
        h = correlate(_stream("A", [5.0]), _stream("B", [0.0]), bin_width_ns=1.0, tau_max_ns=10.0)
        (idx,) = np.nonzero(h.counts)
        assert h.tau_ns[idx[0]] == pytest.approx(-5.0)

    def test_pair_outside_window(self):
        h = correlate(_stream("A", [0.0]), _stream("B", [10.5]), bin_width_ns=1.0, tau_max_ns=10.0)
        assert h.total == 0

    @pytest.mark.parametrize("seed", range(50))
    def test_matches_naive_count(self, seed):
        rng = np.random.default_rng(seed)
        ta = np.unique(rng.uniform(0.0, 1000.0, rng.integers(1, 501)))
        tb = np.unique(rng.uniform(0.0, 1000.0, rng.integers(1, 501)))
        h = correlate(_stream("A", ta), _stream("B", tb), bin_width_ns=0.7, tau_max_ns=20.0)
        np.testing.assert_array_equal(h.counts, _naive_histogram(ta, tb, 0.7, 20.0))

    def test_exclude_zero_delay(self):
        s = _stream("A", [0.0, 1.0, 2.0])
        with_self = correlate(s, s, bin_width_ns=1.0, tau_max_ns=5.0)
        without = correlate(s, s, bin_width_ns=1.0, tau_max_ns=5.0, exclude_zero_delay=True)
        assert with_self.total == 9
        assert without.total == 6

    def test_default_window_from_period(self):
        a = _stream("A", [0.0], period=PERIOD)
        h = correlate(a, _stream("B", [1.0], period=PERIOD))
        assert h.tau_max_ns == pytest.approx(6 * PERIOD)
        assert h.pulse_period_ns == PERIOD

    def test_window_needs_period(self):
        with pytest.raises(DomainError):
            correlate(_stream("A", [0.0]), _stream("B", [1.0]))

    def test_unsorted_rejected(self):
        with pytest.raises(DomainError):
            correlate(_stream("A", [2.0, 1.0]), _stream("B", [1.0]), tau_max_ns=5.0)

    def test_repeated_instant_rejected(self):
        with pytest.raises(DomainError, match="strictement croissants"):
            correlate(_stream("A", [1.0, 1.0]), _stream("B", [1.0]), tau_max_ns=5.0)

    def test_window_must_be_period_multiple(self):
        with pytest.raises(DomainError):
            correlate(_stream("A", [0.0]), _stream("B", [1.0]), tau_max_ns=70.0, pulse_period_ns=PERIOD)

    def test_dead_time_mask(self):
        keep = kernels.dead_time_mask(np.array([0.0, 1.0, 5.0, 5.5, 20.0]), 3.0)
        np.testing.assert_array_equal(keep, [True, False, True, False, True])

    def test_dead_time_drops_duplicates(self):
        keep = kernels.dead_time_mask(np.array([0.0, 0.0, 1.0]), 0.0)
        np.testing.assert_array_equal(keep, [True, False, True])

    def test_unknown_detector(self):
        with pytest.raises(DomainError):
            TimestampStream("C", np.zeros(1), 1.0)


# ─────────────────────────────────────────────────────────────
# Estimation de g²(0)
# ─────────────────────────────────────────────────────────────


class TestEstimateG2:
    """Tests pour estimate_g2() sur des histogrammes synthétiques exacts."""

    def test_ratio_of_areas(self):
        h = _synthetic_histogram(_amplitudes(1000.0, 250.0), 1.0)
        res = estimate_g2(h, 4, "none")
        assert res.g2_zero == pytest.approx(0.25, abs=0.01)
        assert len(res.side_peak_areas) == 8
        assert res.purity == pytest.approx(math.sqrt(1.0 - res.g2_zero))

    def test_baseline_background(self):
        h = _synthetic_histogram(_amplitudes(1000.0, 250.0), 0.3, background=5.0)
        res = estimate_g2(h, 4, "baseline")
        assert res.background_per_bin == pytest.approx(5.0)
        assert res.g2_zero == pytest.approx(0.25, abs=0.01)

    def test_garwood_bound_with_empty_zero_peak(self):
        h = _synthetic_histogram(_amplitudes(1000.0, 0.0), 0.3)
        res = estimate_g2(h, 4, "none")
        mean_side = float(np.mean(res.side_peak_areas))
        assert res.g2_zero == 0.0
        assert res.upper_bound == pytest.approx(-math.log(0.05) / mean_side, rel=1e-6)

    def test_upper_bound_above_estimate(self):
        h = _synthetic_histogram(_amplitudes(1000.0, 100.0), 1.0)
        res = estimate_g2(h, 4, "none")
        assert res.upper_bound > res.g2_zero
        assert res.g2_err > 0

    def test_negative_zero_area_clamped(self):
        h = _synthetic_histogram(
            _amplitudes(1000.0, 0.0), 0.3,
            duration_s=1.0, clicks_a=100000, clicks_b=100000,
            dark_rate_a_cps=100000.0, dark_rate_b_cps=100000.0,
        )
        res = estimate_g2(h, 4, "rates")
        assert res.background_per_bin == pytest.approx(1e10 * BIN * 1e-9)
        assert res.g2_zero == 0.0
        assert any("négative" in w for w in res.warnings)

    def test_side_peak_spread_warning(self):
        amps = _amplitudes(1000.0, 100.0)
        amps[4] = 2000.0
        res = estimate_g2(_synthetic_histogram(amps, 1.0), 4, "none")
        assert any("dispersées" in w for w in res.warnings)

    def test_uniform_side_peaks_chi2(self):
        h = _synthetic_histogram(_amplitudes(1000.0, 100.0), 1.0)
        chi2, p = side_peak_chi2(estimate_g2(h, 4, "none"))
        assert chi2 < 1.0
        assert p > 0.9

    def test_window_too_short(self):
        h = CoincidenceHistogram(BIN, 50.0, math.floor(-50.0 / BIN), np.zeros(782, dtype=np.int64), PERIOD)
        with pytest.raises(DomainError):
            estimate_g2(h, 4, "none")

    def test_too_few_side_peaks(self):
        h = _synthetic_histogram(_amplitudes(1000.0, 100.0), 1.0)
        with pytest.raises(DomainError):
            estimate_g2(h, 1, "none")

    def test_unknown_background(self):
        h = _synthetic_histogram(_amplitudes(1000.0, 100.0), 1.0)
        with pytest.raises(DomainError):
            estimate_g2(h, 4, "median")

    def test_rates_need_duration(self):
        h = _synthetic_histogram(_amplitudes(1000.0, 100.0), 1.0)
        with pytest.raises(DomainError):
            estimate_g2(h, 4, "rates")

    def test_background_from_rates(self):
        h = _synthetic_histogram(
            _amplitudes(1000.0, 100.0), 1.0,
            duration_s=1.0, clicks_a=2000, clicks_b=3000,
            dark_rate_a_cps=100.0, dark_rate_b_cps=200.0,
        )
        assert background_from_rates(h) == pytest.approx(680000.0 * BIN * 1e-9)
        assert background_from_rates(h, (0.0, 0.0)) == 0.0

    def test_purity(self):
        assert purity(0.02) == pytest.approx(0.98995, abs=1e-5)
        assert purity(0.3) == pytest.approx(0.837, abs=1e-3)
        with pytest.raises(DomainError):
            purity(1.5)


class TestFitHistogram:
    """Tests pour fit_histogram()."""

    def test_recovers_parameters(self):
        h = _synthetic_histogram(_amplitudes(1000.0, 250.0), 1.0, background=5.0)
        fit = fit_histogram(h, 4)
        assert fit.g2_zero == pytest.approx(0.25, abs=0.01)
        assert fit.tau_d_ns == pytest.approx(1.0, rel=0.05)
        assert fit.background == pytest.approx(5.0, abs=0.5)
        assert set(fit.to_dict()["errors"]) == {"background", "a_side", "a_zero", "tau_d_ns"}

    def test_simulated_streams(self, perfect_detector):
        emitter = EmitterModel(pulse_period_ns=PERIOD, lifetime_ns=1.0, p_excite=0.5, p_multi=p_multi_for_g2(0.3, 0.5))
        sim = simulate_streams(emitter, (perfect_detector, perfect_detector), 1e-2, seed=8)
        h = correlate(sim.stream_a, sim.stream_b, BIN)
        fit = fit_histogram(h, 4)
        assert fit.tau_d_ns == pytest.approx(1.0, rel=0.1)
        assert fit.g2_zero == pytest.approx(estimate_g2(h, 4, "rates").g2_zero, abs=0.03)

    def test_model_shape(self):
        centers = np.array([0.0, PERIOD, 0.5 * PERIOD])
        out = histogram_model(centers, PERIOD, 2, np.array([1.0, 10.0, 2.0, 1.0]))
        assert out[0] > 2.0 + 1.0 and out[0] < 3.5
        assert out[1] == pytest.approx(1.0 + 10.0, abs=0.1)
        assert out[2] < 1.1


# ─────────────────────────────────────────────────────────────
# Simulation Monte Carlo
# ─────────────────────────────────────────────────────────────


class TestSimulateStreams:
    """Tests pour simulate_streams() (+ correlate/estimate_g2 de bout en bout)."""

    def test_same_seed_same_streams(self, ideal_emitter):
        det = DetectorModel()
        a = simulate_streams(ideal_emitter, (det, det), 1e-3, seed=7)
        b = simulate_streams(ideal_emitter, (det, det), 1e-3, seed=7)
        np.testing.assert_array_equal(a.stream_a.times_ns, b.stream_a.times_ns)
        np.testing.assert_array_equal(a.stream_b.times_ns, b.stream_b.times_ns)

    def test_worker_count_does_not_change_result(self, ideal_emitter):
        det = DetectorModel()
        one = simulate_streams(ideal_emitter, (det, det), 1e-3, seed=3, workers=1, block_pulses=10_000)
        two = simulate_streams(ideal_emitter, (det, det), 1e-3, seed=3, workers=2, block_pulses=10_000)
        np.testing.assert_array_equal(one.stream_a.times_ns, two.stream_a.times_ns)
        np.testing.assert_array_equal(one.stream_b.times_ns, two.stream_b.times_ns)
        np.testing.assert_array_equal(one.photons_per_pulse, two.photons_per_pulse)

    def test_streams_strictly_increasing(self, ideal_emitter):
        det = DetectorModel(dark_rate_cps=1e5)
        sim = simulate_streams(ideal_emitter, (det, det), 1e-3, seed=1)
        for s in sim.streams:
            assert np.all(np.diff(s.times_ns) > 0)

    def test_dead_time_respected(self, ideal_emitter):
        det = DetectorModel(efficiency=1.0, dead_time_ns=20.0)
        sim = simulate_streams(ideal_emitter, (det, det), 1e-3, seed=2)
        for s in sim.streams:
            assert np.all(np.diff(s.times_ns) >= 20.0)

    def test_splitter_routes_everything_to_a(self, ideal_emitter):
        det_a = DetectorModel(efficiency=1.0, dark_rate_cps=0.0, splitter_ratio=1.0)
        det_b = DetectorModel(efficiency=1.0, dark_rate_cps=0.0)
        sim = simulate_streams(ideal_emitter, (det_a, det_b), 1e-4, seed=0)
        assert sim.stream_b.n_clicks == 0
        assert sim.stream_a.n_clicks == int(sim.photons_per_pulse.sum())

    def test_pulse_count_and_duration(self, ideal_emitter):
        sim = simulate_streams(ideal_emitter, (DetectorModel(), DetectorModel()), 1e-3, seed=0)
        assert sim.n_pulses == 80_000
        assert sim.stream_a.duration_s == pytest.approx(1e-3)
        assert sim.to_dict()["n_pulses"] == 80_000

    def test_invalid_arguments(self, ideal_emitter):
        det = DetectorModel()
        with pytest.raises(DomainError):
            simulate_streams(ideal_emitter, (det,), 1e-3, seed=0)
        with pytest.raises(DomainError):
            simulate_streams(ideal_emitter, (det, det), 0.0, seed=0)
        with pytest.raises(DomainError):
            simulate_streams(ideal_emitter, (det, det), 1e-3, seed=0, workers=0)

    def test_no_multiphoton_no_zero_delay_coincidence(self, perfect_detector):
        emitter = EmitterModel(pulse_period_ns=PERIOD, lifetime_ns=0.1, p_excite=0.5, p_multi=0.0)
        sim = simulate_streams(emitter, (perfect_detector, perfect_detector), 1e-3, seed=4)
        h = correlate(sim.stream_a, sim.stream_b, BIN)
        res = estimate_g2(h, 4, "rates")
        assert res.zero_peak_area == 0.0
        assert res.g2_zero == 0.0
        assert res.upper_bound < 0.01

    def test_poissonian_reference(self, poissonian_emitter):
        det = DetectorModel(efficiency=0.6, dark_rate_cps=0.0)
        sim = simulate_streams(poissonian_emitter, (det, det), 1e-2, seed=5)
        res = estimate_g2(correlate(sim.stream_a, sim.stream_b, BIN), 4, "rates")
        assert res.g2_zero == pytest.approx(1.0, abs=0.05)
        assert emitted_g2(sim.photons_per_pulse) == pytest.approx(1.0, abs=0.02)

    def test_multiphoton_target(self, perfect_detector):
        pm = p_multi_for_g2(0.3, 0.5)
        emitter = EmitterModel(pulse_period_ns=PERIOD, lifetime_ns=0.1, p_excite=0.5, p_multi=pm)
        sim = simulate_streams(emitter, (perfect_detector, perfect_detector), 1e-2, seed=6)
        assert emitted_g2(sim.photons_per_pulse) == pytest.approx(0.3, abs=0.01)
        res = estimate_g2(correlate(sim.stream_a, sim.stream_b, BIN), 4, "rates")
        assert res.g2_zero == pytest.approx(0.3, abs=0.02)
        assert purity(res.g2_zero) == pytest.approx(0.837, abs=0.02)

    @pytest.mark.slow
    def test_ideal_emitter_with_dark_counts(self, ideal_emitter):
        det = DetectorModel(efficiency=0.3, dark_rate_cps=250.0)
        sim = simulate_streams(ideal_emitter, (det, det), 1e7 * PERIOD * 1e-9, seed=42, workers=2)
        res = estimate_g2(correlate(sim.stream_a, sim.stream_b, BIN), 4, "rates")
        assert res.g2_zero < 0.02
        assert res.upper_bound < 0.02
        assert purity(res.g2_zero) >= 0.99
