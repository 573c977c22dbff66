#!/usr/bin/env python3
"""
Tests de synthèse, d'ajustement, de convolution et de déconvolution lorentziennes.

Scénario de référence : P1 (919.108 nm, 21 μeV) et P2 (918.891 nm, 34 μeV),
réponse instrumentale lorentzienne de 15 μeV.
"""

import math

import numpy as np
import pytest
from scipy import integrate

from qdphot.errors import DomainError, FitConvergenceError
from qdphot.lineshape import (
    acceptance_window,
    convolve,
    deconvolve,
    fit_peaks,
    lorentzian_density,
    scenario_model,
    synthesize,
)
from qdphot.models import InstrumentResponse, LorentzianPeak, PeakModel, Spectrum

E0 = 1.349  # eV, ~919 nm


def _single(fwhm_ev, area=40000.0, background=0.0, center=E0):
    return PeakModel((LorentzianPeak(center, fwhm_ev, area),), background)


class TestSynthesize:
    """Tests pour synthesize()."""

    def test_total_counts_equal_area(self, uniform_axis):
        axis = uniform_axis(E0, 2e-3, 1e-6)
        s = synthesize(_single(21e-6, area=60000.0), axis)
        assert s.total_counts() == pytest.approx(60000.0, rel=1e-2)

    def test_noise_none_is_exact_model(self, two_peak_model, two_peak_axis):
        s = synthesize(two_peak_model, two_peak_axis, noise="none")
        np.testing.assert_array_equal(s.counts, two_peak_model.evaluate(two_peak_axis))
        assert s.metadata["noise"] == "none"

    def test_same_seed_same_spectrum(self, two_peak_model, two_peak_axis):
        a = synthesize(two_peak_model, two_peak_axis, noise="poisson", seed=11)
        b = synthesize(two_peak_model, two_peak_axis, noise="poisson", seed=11)
        c = synthesize(two_peak_model, two_peak_axis, noise="poisson", seed=12)
        np.testing.assert_array_equal(a.counts, b.counts)
        assert not np.array_equal(a.counts, c.counts)

    def test_two_resolved_peaks_320uev_apart(self, two_peak_model):
        (split,) = two_peak_model.splitting()
        assert split * 1e6 == pytest.approx(320.0, abs=2.0)
        p1, p2 = sorted(two_peak_model.peaks, key=lambda p: -p.area)
        assert p1.area > p2.area
        assert p1.center_ev < p2.center_ev  # P1 à plus grande longueur d'onde

    def test_unknown_noise_rejected(self, two_peak_model, two_peak_axis):
        with pytest.raises(DomainError):
            synthesize(two_peak_model, two_peak_axis, noise="gaussian")

    def test_density_unit_area(self):
        e = np.linspace(E0 - 0.05, E0 + 0.05, 200001)
        d = lorentzian_density(e, E0, 20e-6)
        assert integrate.trapezoid(d, e) == pytest.approx(1.0, rel=1e-3)


class TestFitPeaks:
    """Tests pour fit_peaks()."""

    def test_noiseless_single_peak(self, uniform_axis):
        axis = uniform_axis(E0, 400e-6, 2e-6)
        s = synthesize(_single(21e-6, area=60000.0, background=20.0), axis)
        res = fit_peaks(s, 1)
        (peak,) = res.model.peaks
        assert peak.fwhm_ev == pytest.approx(21e-6, rel=1e-3)
        assert peak.center_ev == pytest.approx(E0, abs=1e-8)
        assert res.model.background == pytest.approx(20.0, rel=1e-3)

    @pytest.mark.parametrize("seed", range(20))
    def test_two_peak_round_trip(self, two_peak_model, two_peak_axis, seed):
        s = synthesize(two_peak_model, two_peak_axis, noise="poisson", seed=seed)
        res = fit_peaks(s, 2)
        for fitted, true in zip(res.model.peaks, two_peak_model.peaks):
            assert abs(fitted.center_ev - true.center_ev) < 3e-6
            assert fitted.fwhm_ev == pytest.approx(true.fwhm_ev, rel=0.10)

    def test_fitted_splitting(self, two_peak_model, two_peak_axis):
        s = synthesize(two_peak_model, two_peak_axis, noise="poisson", seed=3)
        res = fit_peaks(s, 2)
        (split,) = res.model.splitting()
        assert split * 1e6 == pytest.approx(320.0, abs=5.0)
        assert res.to_dict()["splitting_ev"][0] == pytest.approx(split)

    def test_scale_equivariance(self, two_peak_model, two_peak_axis):
        s = synthesize(two_peak_model, two_peak_axis, noise="poisson", seed=5)
        base = fit_peaks(s, 2)
        scaled = fit_peaks(s.scaled(3.0), 2)
        assert scaled.model.background == pytest.approx(3.0 * base.model.background, rel=1e-3)
        for a, b in zip(base.model.peaks, scaled.model.peaks):
            assert b.area == pytest.approx(3.0 * a.area, rel=1e-3)
            assert b.center_ev == pytest.approx(a.center_ev, abs=5e-8)
            assert b.fwhm_ev == pytest.approx(a.fwhm_ev, rel=1e-3)

    def test_uncertainties_reported(self, two_peak_model, two_peak_axis):
        s = synthesize(two_peak_model, two_peak_axis, noise="poisson", seed=1)
        res = fit_peaks(s, 2)
        d = res.to_dict()
        assert len(d["peaks"]) == 2
        for peak in d["peaks"]:
            assert set(peak) >= {"center_ev", "fwhm_ev", "area", "center_err", "fwhm_err"}
            assert peak["fwhm_err"] > 0

    def test_non_convergence_carries_best(self, two_peak_model, two_peak_axis):
        s = synthesize(two_peak_model, two_peak_axis, noise="poisson", seed=2)
        with pytest.raises(FitConvergenceError) as exc:
            fit_peaks(s, 2, max_nfev=1)
        assert len(exc.value.best.model.peaks) == 2

    def test_init_model_used(self, two_peak_model, two_peak_axis):
        s = synthesize(two_peak_model, two_peak_axis, noise="none")
        res = fit_peaks(s, 2, init=two_peak_model)
        for fitted, true in zip(res.model.peaks, two_peak_model.peaks):
            assert fitted.fwhm_ev == pytest.approx(true.fwhm_ev, rel=1e-4)

    def test_too_few_points(self):
        s = Spectrum(np.linspace(1.0, 1.001, 15), np.ones(15))
        with pytest.raises(DomainError):
            fit_peaks(s, 1)

    def test_zero_peaks_rejected(self, two_peak_model, two_peak_axis):
        with pytest.raises(DomainError):
            fit_peaks(synthesize(two_peak_model, two_peak_axis), 0)


class TestConvolve:
    """Tests pour convolve()."""

    def test_width_additivity_reference(self, uniform_axis):
        axis = uniform_axis(E0, 1000e-6, 1e-6)
        out = convolve(_single(10e-6), InstrumentResponse(15e-6), axis)
        (peak,) = fit_peaks(out, 1).model.peaks
        assert peak.fwhm_ev * 1e6 == pytest.approx(25.0, abs=0.25)

    @pytest.mark.parametrize("g1", [5.0, 10.0, 24.0, 50.0, 100.0])
    @pytest.mark.parametrize("g2", [5.0, 10.0, 24.0, 50.0, 100.0])
    def test_width_additivity_grid(self, uniform_axis, g1, g2):
        h = min(g1, g2) / 5.0 * 1e-6
        axis = uniform_axis(E0, 40.0 * (g1 + g2) * 1e-6, h)
        out = convolve(_single(g1 * 1e-6), InstrumentResponse(g2 * 1e-6), axis)
        (peak,) = fit_peaks(out, 1).model.peaks
        assert peak.fwhm_ev * 1e6 == pytest.approx(g1 + g2, rel=1e-2)

    def test_identity_kernel(self, uniform_axis):
        axis = uniform_axis(E0, 400e-6, 2e-6)
        model = _single(21e-6, background=20.0)
        out = convolve(model, InstrumentResponse(2e-7), axis)
        np.testing.assert_allclose(out.counts, model.evaluate(axis), rtol=1e-2)

    def test_linearity(self, two_peak_model, two_peak_axis, irf):
        once = convolve(two_peak_model, irf, two_peak_axis).counts
        twice = convolve(two_peak_model.scaled(2.0), irf, two_peak_axis).counts
        np.testing.assert_allclose(twice, 2.0 * once, rtol=1e-9)

    def test_total_counts_preserved(self, uniform_axis, irf):
        axis = uniform_axis(E0, 2e-3, 1e-6)
        model = _single(21e-6, area=60000.0)
        out = convolve(model, irf, axis)
        assert out.total_counts() == pytest.approx(model.evaluate(axis).sum(), rel=1e-2)

    def test_non_uniform_axis_rejected(self, irf):
        axis = np.array([1.0, 1.000001, 1.000003, 1.000004])
        with pytest.raises(DomainError):
            convolve(_single(10e-6, center=1.000002), irf, axis)


def _measured(uniform_axis, fwhm_ev, seed, irf_fwhm=15e-6):
    axis = uniform_axis(E0, 300e-6, 2e-6)
    mean = convolve(_single(fwhm_ev, area=40000.0, background=5.0), InstrumentResponse(irf_fwhm), axis)
    counts = np.random.default_rng(seed).poisson(mean.counts).astype(float)
    return Spectrum(axis, counts)


class TestDeconvolve:
    """Tests pour deconvolve() (Tikhonov non négatif + reconvolution)."""

    @pytest.mark.parametrize("seed", [0, 1])
    def test_round_trip_10uev(self, uniform_axis, irf, seed):
        res = deconvolve(_measured(uniform_axis, 10e-6, seed), irf)
        (peak,) = res.fit.model.peaks
        assert peak.fwhm_ev * 1e6 == pytest.approx(10.0, abs=1.0)

    @pytest.mark.parametrize("seed", [0, 1])
    def test_round_trip_24uev(self, uniform_axis, irf, seed):
        res = deconvolve(_measured(uniform_axis, 24e-6, seed), irf)
        (peak,) = res.fit.model.peaks
        assert peak.fwhm_ev * 1e6 == pytest.approx(24.0, abs=2.0)

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(20))
    def test_round_trip_20_seeds(self, uniform_axis, irf, seed):
        for fwhm, tol in ((10e-6, 1e-6), (24e-6, 2e-6)):
            res = deconvolve(_measured(uniform_axis, fwhm, 100 + seed), irf)
            assert abs(res.fit.model.peaks[0].fwhm_ev - fwhm) <= tol

    def test_objective_non_increasing_and_non_negative(self, uniform_axis, irf):
        res = deconvolve(_measured(uniform_axis, 10e-6, 4), irf, n_peaks=None)
        assert np.all(np.diff(res.objective_history) <= 0.0)
        assert np.all(res.intrinsic.counts >= 0.0)
        assert res.background >= 0.0
        assert res.lam > 0.0
        assert res.fit is None

    def test_identity_irf(self, uniform_axis):
        h = 2e-6
        axis = uniform_axis(E0, 200e-6, h)
        y = _single(21e-6, area=40000.0, background=20.0).evaluate(axis)
        res = deconvolve(Spectrum(axis, y), InstrumentResponse(h * 1e-6), lam=0.0, n_peaks=None)
        np.testing.assert_allclose(res.intrinsic.counts, y, rtol=1e-3, atol=1e-3 * y.max())

    def test_negative_lambda_rejected(self, uniform_axis, irf):
        with pytest.raises(DomainError):
            deconvolve(_measured(uniform_axis, 10e-6, 0), irf, lam=-1.0)

    def test_ill_conditioned_warning(self, uniform_axis, irf):
        axis = uniform_axis(E0, 50e-6, 0.5e-6)
        y = _single(10e-6, area=1000.0, background=1.0).evaluate(axis)
        res = deconvolve(Spectrum(axis, y), irf, lam=0.0, n_peaks=None, max_iter=20)
        assert any("conditionné" in w for w in res.warnings)

    def test_non_uniform_without_resample(self, irf):
        wl = np.linspace(918.8, 919.2, 201)
        s = Spectrum.from_wavelength(wl, np.full(wl.size, 10.0))
        with pytest.raises(DomainError):
            deconvolve(s, irf, resample=False)

    def test_report_layout(self, uniform_axis, irf):
        res = deconvolve(_measured(uniform_axis, 10e-6, 7), irf)
        d = res.to_dict()
        assert d["lambda"] == pytest.approx(res.lam)
        assert d["intrinsic_fit"]["lambda"] == pytest.approx(res.lam)
        assert len(d["intrinsic_fit"]["peaks"]) == 1


class TestAcceptanceWindow:
    """Tests pour acceptance_window() (filtre de ~70 μeV devant le HBT)."""

    def test_fraction_of_centered_peak(self, two_peak_model, two_peak_axis):
        s = synthesize(two_peak_model, two_peak_axis)
        p1 = max(two_peak_model.peaks, key=lambda p: p.area)
        w = acceptance_window(s, two_peak_model, p1.center_ev, 70e-6)
        idx = two_peak_model.peaks.index(p1)
        expected = 2.0 / math.pi * math.atan(35e-6 / (0.5 * p1.fwhm_ev))
        assert w.peak_fractions[idx] == pytest.approx(expected, rel=1e-9)
        assert w.peak_fractions[1 - idx] < 0.05
        assert w.counts_in_window > w.background_in_window

    def test_zero_width_rejected(self, two_peak_model, two_peak_axis):
        s = synthesize(two_peak_model, two_peak_axis)
        with pytest.raises(DomainError):
            acceptance_window(s, two_peak_model, E0, 0.0)

    def test_scenario_model_length_mismatch(self):
        with pytest.raises(DomainError):
            scenario_model([E0], [1e-5, 2e-5], [1.0])
