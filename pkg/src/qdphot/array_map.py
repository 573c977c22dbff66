"""Statistiques d'uniformité d'une matrice de QDs et recherche de paires proches en énergie."""

from __future__ import annotations

import logging
from typing import List, Optional, Tuple

import numpy as np

from qdphot.errors import DomainError
from qdphot.models import QdArrayEntry, QdArrayMap, QdPair, PairReport, UniformityStats
from qdphot.spectral import energy_window_to_wavelength_window_exact, wavelength_to_energy

logger = logging.getLogger(__name__)


def synthetic_array(
    rows: int = 5,
    cols: int = 8,
    mean_nm: float = 919.0,
    std_nm: float = 8.0,
    seed: Optional[int] = None,
) -> QdArrayMap:
    """Carte synthétique : longueurs d'onde tirées selon Normal(mean_nm, std_nm)."""
    if rows < 1 or cols < 1:
        raise DomainError("dimensions de la carte invalides")
    if std_nm < 0 or mean_nm <= 0:
        raise DomainError("moyenne ≤ 0 ou écart-type < 0")
    rng = np.random.default_rng(seed)
    wl = rng.normal(mean_nm, std_nm, rows * cols)
    if np.any(wl <= 0):
        raise DomainError("tirage de longueur d'onde non positive : réduire std_nm")
    entries = tuple(
        QdArrayEntry(r, c, float(wl[r * cols + c])) for r in range(rows) for c in range(cols)
    )
    return QdArrayMap(entries, rows, cols)


def uniformity_stats(m: QdArrayMap) -> UniformityStats:
    """Moyenne et écart-type échantillon (n-1) en longueur d'onde et en énergie."""
    if len(m) < 2:
        raise DomainError("au moins 2 QDs requis")
    wl = m.wavelengths()
    ev = np.asarray(wavelength_to_energy(wl))
    stats = UniformityStats(
        n=len(m),
        mean_nm=float(wl.mean()),
        std_nm=float(wl.std(ddof=1)),
        mean_ev=float(ev.mean()),
        std_ev=float(ev.std(ddof=1)),
        min_nm=float(wl.min()),
        max_nm=float(wl.max()),
        min_ev=float(ev.min()),
        max_ev=float(ev.max()),
    )
    logger.info("Uniformité: %d QDs, λ = %.3f ± %.3f nm", stats.n, stats.mean_nm, stats.std_nm)
    return stats


def _ordered(p: Tuple[int, int], q: Tuple[int, int]) -> Tuple[Tuple[int, int], Tuple[int, int]]:
    return (p, q) if p <= q else (q, p)


def find_pairs(m: QdArrayMap, threshold_ev: float) -> PairReport:
    """
    Toutes les paires non ordonnées avec |E_i - E_j| ≤ seuil, triées par ΔE
    puis par positions : le résultat ne dépend pas de l'ordre des entrées.
    """
    if not np.isfinite(threshold_ev) or threshold_ev < 0:
        raise DomainError(f"seuil négatif : {threshold_ev!r}")
    if len(m) == 0:
        return PairReport((), float(threshold_ev))

    positions = [e.position() for e in m.entries]
    energies = np.asarray(wavelength_to_energy(m.wavelengths()), dtype=float).reshape(-1)
    order = np.lexsort((np.array([p[1] for p in positions]), np.array([p[0] for p in positions]), energies))
    e_sorted = energies[order]

    found: List[QdPair] = []
    n = len(order)
    for i in range(n):
        j = i + 1
        while j < n and e_sorted[j] - e_sorted[i] <= threshold_ev:
            first, second = _ordered(positions[order[i]], positions[order[j]])
            found.append(QdPair(first, second, float(e_sorted[j] - e_sorted[i])))
            j += 1

    found.sort(key=lambda p: (p.delta_ev, p.first, p.second))
    logger.info("Paires à ≤ %.1f μeV: %d", threshold_ev * 1e6, len(found))
    return PairReport(tuple(found), float(threshold_ev))


def pairs_by_wavelength(m: QdArrayMap, threshold_ev: float) -> List[Tuple[Tuple[int, int], Tuple[int, int]]]:
    """
    Décision équivalente dans le domaine des longueurs d'onde : fenêtre Δλ
    exacte calculée pour chaque paire autour de sa longueur d'onde moyenne.
    """
    if threshold_ev < 0:
        raise DomainError(f"seuil négatif : {threshold_ev!r}")
    out = []
    entries = m.entries
    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            a, b = entries[i], entries[j]
            center = 0.5 * (a.wavelength_nm + b.wavelength_nm)
            window = energy_window_to_wavelength_window_exact(center, threshold_ev)
            if abs(a.wavelength_nm - b.wavelength_nm) <= window:
                out.append(_ordered(a.position(), b.position()))
    return sorted(out)
