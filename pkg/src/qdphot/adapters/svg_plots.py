"""
Figures SVG statiques (spectre, diagramme polaire, histogramme g², carte).

Backend Agg, sans état pyplot global ; sortie déterministe (sel de hachage
fixe, pas de date dans les métadonnées SVG).
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import numpy as np  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from qdphot.finestructure import PolarFitResult, dipoles_from_mixing, polar_pattern  # noqa: E402
from qdphot.lineshape import PeakFitResult  # noqa: E402
from qdphot.models import CoincidenceHistogram, PolarPattern, QdArrayMap, Spectrum  # noqa: E402
from qdphot.photon_stats import HistogramFit, histogram_model  # noqa: E402

logger = logging.getLogger(__name__)

SVG_RC = {"svg.hashsalt": "qdphot", "svg.fonttype": "none", "font.size": 9}


def _save(fig: Figure, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context(SVG_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})
    logger.debug("SVG écrit: %s", path.name)
    return path


def plot_spectrum(
    spectrum: Spectrum,
    path: Path,
    fit: Optional[PeakFitResult] = None,
    title: str = "",
) -> Path:
    """Spectre (μeV relatifs au centre de l'axe) et modèle ajusté éventuel."""
    with matplotlib.rc_context(SVG_RC):
        fig = Figure(figsize=(5.0, 3.4))
        ax = fig.add_subplot()
        e0 = 0.5 * (spectrum.energy_ev[0] + spectrum.energy_ev[-1])
        x = (spectrum.energy_ev - e0) * 1e6
        ax.plot(x, spectrum.counts, ".", ms=2.5, color="k", label="données")
        if fit is not None:
            ax.plot(x, fit.model.evaluate(spectrum.energy_ev), "-", lw=1.0, color="tab:red", label="ajustement")
            ax.legend(frameon=False)
        ax.set_xlabel(f"E - {e0:.6f} eV (μeV)")
        ax.set_ylabel("comptes")
        if title:
            ax.set_title(title)
        fig.tight_layout()
    return _save(fig, path)


def plot_polar(data: PolarPattern, path: Path, fit: Optional[PolarFitResult] = None) -> Path:
    """Diagramme polaire mesuré et courbe ajustée (0-360°)."""
    with matplotlib.rc_context(SVG_RC):
        fig = Figure(figsize=(4.0, 4.0))
        ax = fig.add_subplot(projection="polar")
        ax.plot(np.radians(data.angles_deg), data.intensities, "o", ms=3, color="k")
        if fit is not None:
            grid = np.arange(0.0, 360.0, 1.0)
            pattern = polar_pattern(dipoles_from_mixing(fit.params), grid)
            curve = pattern.intensities / pattern.intensities.mean() * fit.scale
            ax.plot(np.radians(np.append(grid, 360.0)), np.append(curve, curve[0]), "-", color="tab:red")
            ax.set_title(f"e = {fit.ellipticity:.2f}, axe {fit.major_axis_deg:.1f}°")
        fig.tight_layout()
    return _save(fig, path)


def plot_histogram(hist: CoincidenceHistogram, path: Path, fit: Optional[HistogramFit] = None) -> Path:
    """Histogramme de coïncidences (points) et modèle ajusté."""
    with matplotlib.rc_context(SVG_RC):
        fig = Figure(figsize=(5.5, 3.2))
        ax = fig.add_subplot()
        centers = hist.bin_centers_ns
        ax.plot(centers, hist.counts, ".", ms=2, color="k")
        if fit is not None and hist.pulse_period_ns is not None:
            n_peaks = int(np.ceil(hist.tau_max_ns / hist.pulse_period_ns)) + 1
            p = np.array([fit.background, fit.a_side, fit.a_zero, fit.tau_d_ns])
            ax.plot(centers, histogram_model(centers, hist.pulse_period_ns, n_peaks, p), "-", lw=0.8,
                    color="tab:red")
        ax.set_xlabel("τ (ns)")
        ax.set_ylabel("coïncidences")
        fig.tight_layout()
    return _save(fig, path)


def plot_array_map(m: QdArrayMap, path: Path) -> Path:
    """Carte colorée des longueurs d'onde d'émission."""
    grid = np.full((m.rows, m.cols), np.nan)
    for e in m.entries:
        grid[e.row, e.col] = e.wavelength_nm
    with matplotlib.rc_context(SVG_RC):
        fig = Figure(figsize=(5.0, 3.4))
        ax = fig.add_subplot()
        im = ax.imshow(grid, cmap="viridis", origin="upper")
        fig.colorbar(im, ax=ax, label="λ (nm)")
        ax.set_xlabel("colonne")
        ax.set_ylabel("ligne")
        fig.tight_layout()
    return _save(fig, path)
