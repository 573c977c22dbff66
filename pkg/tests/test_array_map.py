"""
Tests des statistiques d'uniformité et de la recherche de paires d'une matrice de QDs.
"""

import math
from itertools import combinations

import numpy as np
import pytest

from qdphot.array_map import find_pairs, pairs_by_wavelength, synthetic_array, uniformity_stats
from qdphot.errors import DomainError
from qdphot.models import PAIR_THRESHOLD_EV, QdArrayEntry, QdArrayMap
from qdphot.spectral import wavelength_to_energy


def _map(wavelengths, cols=None):
    cols = cols or len(wavelengths)
    entries = tuple(
        QdArrayEntry(i // cols, i % cols, float(w)) for i, w in enumerate(wavelengths)
    )
    rows = (len(wavelengths) + cols - 1) // cols
    return QdArrayMap(entries, rows, cols)


class TestSyntheticArray:
    """Tests pour synthetic_array()."""

    def test_shape_and_determinism(self):
        a = synthetic_array(5, 8, 919.0, 8.0, seed=42)
        b = synthetic_array(5, 8, 919.0, 8.0, seed=42)
        assert len(a) == 40
        assert (a.rows, a.cols) == (5, 8)
        np.testing.assert_array_equal(a.wavelengths(), b.wavelengths())

    def test_sample_statistics(self):
        m = synthetic_array(20, 20, 919.0, 8.0, seed=1)
        stats = uniformity_stats(m)
        assert stats.mean_nm == pytest.approx(919.0, abs=1.5)
        assert stats.std_nm == pytest.approx(8.0, rel=0.15)

    def test_invalid_dimensions(self):
        with pytest.raises(DomainError):
            synthetic_array(0, 8)


class TestUniformityStats:
    """Tests pour uniformity_stats()."""

    def test_two_dots(self):
        stats = uniformity_stats(_map([918.0, 920.0]))
        assert stats.n == 2
        assert stats.mean_nm == pytest.approx(919.0)
        assert stats.std_nm == pytest.approx(math.sqrt(2.0))
        assert stats.min_nm == 918.0
        assert stats.max_nm == 920.0
        assert stats.max_ev == pytest.approx(wavelength_to_energy(918.0))

    def test_all_equal(self):
        stats = uniformity_stats(_map([919.0] * 6, cols=3))
        assert stats.std_nm == 0.0
        assert stats.std_ev == pytest.approx(0.0, abs=1e-15)

    def test_single_dot_rejected(self):
        with pytest.raises(DomainError):
            uniformity_stats(_map([919.0]))

    def test_energy_spread_matches_first_order(self):
        m = synthetic_array(5, 8, 919.0, 2.0, seed=3)
        stats = uniformity_stats(m)
        first_order = stats.std_nm * stats.mean_ev / stats.mean_nm
        assert stats.std_ev == pytest.approx(first_order, rel=1e-2)


class TestFindPairs:
    """Tests pour find_pairs() (seuil par défaut 300 μeV)."""

    def test_all_equal_gives_every_pair(self):
        m = _map([919.0] * 6, cols=3)
        report = find_pairs(m, PAIR_THRESHOLD_EV)
        assert len(report) == math.comb(6, 2)
        assert all(p.delta_ev == 0.0 for p in report.pairs)

    def test_scenario_peaks_straddle_threshold(self):
        m = _map([919.108, 918.891])
        assert len(find_pairs(m, 300e-6)) == 0
        report = find_pairs(m, 320e-6)
        assert len(report) == 1
        assert report.pairs[0].delta_ev * 1e6 == pytest.approx(318.56, abs=0.05)

    def test_threshold_inclusive(self):
        m = _map([919.0, 920.0])
        delta = abs(wavelength_to_energy(919.0) - wavelength_to_energy(920.0))
        assert len(find_pairs(m, delta)) == 1

    def test_zero_threshold(self):
        m = _map([919.0, 919.0, 920.0])
        report = find_pairs(m, 0.0)
        assert len(report) == 1
        assert report.pairs[0].first == (0, 0)
        assert report.pairs[0].second == (0, 1)

    def test_negative_threshold(self):
        with pytest.raises(DomainError):
            find_pairs(_map([919.0, 920.0]), -1e-6)

    def test_independent_of_entry_order(self):
        m = synthetic_array(5, 8, 919.0, 1.0, seed=9)
        shuffled = QdArrayMap(tuple(reversed(m.entries)), m.rows, m.cols)
        assert find_pairs(m, PAIR_THRESHOLD_EV) == find_pairs(shuffled, PAIR_THRESHOLD_EV)

    def test_matches_brute_force(self):
        m = synthetic_array(5, 8, 919.0, 1.0, seed=11)
        energies = {e.position(): wavelength_to_energy(e.wavelength_nm) for e in m.entries}
        expected = sorted(
            tuple(sorted((p, q)))
            for p, q in combinations(energies, 2)
            if abs(energies[p] - energies[q]) <= PAIR_THRESHOLD_EV
        )
        got = sorted((p.first, p.second) for p in find_pairs(m, PAIR_THRESHOLD_EV).pairs)
        assert got == expected

    def test_sorted_by_delta(self):
        m = synthetic_array(5, 8, 919.0, 1.0, seed=12)
        deltas = [p.delta_ev for p in find_pairs(m, PAIR_THRESHOLD_EV).pairs]
        assert deltas == sorted(deltas)

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_wavelength_domain_agrees(self, seed):
        m = synthetic_array(5, 8, 919.0, 1.0, seed=seed)
        by_energy = sorted((p.first, p.second) for p in find_pairs(m, PAIR_THRESHOLD_EV).pairs)
        assert pairs_by_wavelength(m, PAIR_THRESHOLD_EV) == by_energy

    def test_report_layout(self):
        d = find_pairs(_map([919.0, 919.1]), PAIR_THRESHOLD_EV).to_dict()
        assert d["n_pairs"] == 1
        assert d["pairs"][0]["first"] == [0, 0]
        assert d["threshold_ev"] == PAIR_THRESHOLD_EV
