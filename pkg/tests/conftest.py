import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.append(str(Path(__file__).resolve().parents[1] / "src"))

from qdphot.lineshape import scenario_model  # noqa: E402
from qdphot.models import (  # noqa: E402
    SCENARIO_BACKGROUND,
    SCENARIO_P1_AREA,
    SCENARIO_P1_FWHM_EV,
    SCENARIO_P1_NM,
    SCENARIO_P2_AREA,
    SCENARIO_P2_FWHM_EV,
    SCENARIO_P2_NM,
    DetectorModel,
    EmitterModel,
    InstrumentResponse,
)
from qdphot.spectral import wavelength_to_energy  # noqa: E402


def pytest_addoption(parser):
    """
    Ajoute le flag --run-slow pour les runs Monte Carlo longs.
    Usage :
      pytest --run-slow
    Sans ce flag, les tests marqués @pytest.mark.slow seront ignorés.
    """
    parser.addoption(
        "--run-slow",
        action="store_true",
        default=False,
        help="run long Monte Carlo acceptance tests",
    )


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "slow: long Monte Carlo run (10^6-10^7 pulses, multi-seed sweeps)"
    )


def pytest_collection_modifyitems(config, items):
    """Skip slow tests unless --run-slow is passed."""
    if config.getoption("--run-slow"):
        return  # on exécute tout
    skip_slow = pytest.mark.skip(reason="slow tests skipped (add --run-slow)")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


# ---------------------------------------------------------------------------
# Spectres
# ---------------------------------------------------------------------------


@pytest.fixture
def uniform_axis():
    """Fabrique d'axes uniformes en énergie : centre ± demi-étendue, pas donné (eV)."""

    def make(center_ev: float, half_span_ev: float, spacing_ev: float) -> np.ndarray:
        n = int(round(2.0 * half_span_ev / spacing_ev))
        return center_ev + spacing_ev * (np.arange(n + 1) - 0.5 * n)

    return make


@pytest.fixture
def scenario_centers():
    return (float(wavelength_to_energy(SCENARIO_P1_NM)), float(wavelength_to_energy(SCENARIO_P2_NM)))


@pytest.fixture
def two_peak_model(scenario_centers):
    """P1 brillant (919.108 nm) et P2 plus faible (918.891 nm) sur fond constant."""
    return scenario_model(
        scenario_centers,
        (SCENARIO_P1_FWHM_EV, SCENARIO_P2_FWHM_EV),
        (SCENARIO_P1_AREA, SCENARIO_P2_AREA),
        SCENARIO_BACKGROUND,
    )


@pytest.fixture
def two_peak_axis(uniform_axis, scenario_centers):
    mid = 0.5 * sum(scenario_centers)
    return uniform_axis(mid, 600e-6, 2e-6)


@pytest.fixture
def irf():
    return InstrumentResponse(15e-6)


# ---------------------------------------------------------------------------
# Émetteurs / détecteurs
# ---------------------------------------------------------------------------


@pytest.fixture
def ideal_emitter():
    return EmitterModel(pulse_period_ns=12.5, lifetime_ns=1.0, p_excite=0.5, p_multi=0.0)


@pytest.fixture
def poissonian_emitter():
    return EmitterModel(pulse_period_ns=12.5, lifetime_ns=1.0, poissonian_mean=0.5)


@pytest.fixture
def perfect_detector():
    return DetectorModel(efficiency=1.0, dark_rate_cps=0.0)
