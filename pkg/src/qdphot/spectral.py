"""
Conversions d'unités énergie ⟷ longueur d'onde.

hc est fixé à 1239.841984 eV·nm (voir ``models.HC_EV_NM``) ; longueurs
d'onde dans le vide uniquement.
"""

from __future__ import annotations

from typing import Union

import numpy as np

from qdphot.errors import DomainError
from qdphot.models import HC_EV_NM

ArrayLike = Union[float, np.ndarray]


def _positive(name: str, value: ArrayLike) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"{name} doit être > 0 (reçu {value!r})")
    return arr


def _scalar_or_array(arr: np.ndarray) -> ArrayLike:
    return float(arr) if arr.ndim == 0 else arr


def wavelength_to_energy(wavelength_nm: ArrayLike) -> ArrayLike:
    """E = hc/λ (eV), scalaire ou tableau."""
    wl = _positive("wavelength_nm", wavelength_nm)
    return _scalar_or_array(HC_EV_NM / wl)


def energy_to_wavelength(energy_ev: ArrayLike) -> ArrayLike:
    """λ = hc/E (nm), scalaire ou tableau."""
    e = _positive("energy_ev", energy_ev)
    return _scalar_or_array(HC_EV_NM / e)


def ev_to_uev(value: ArrayLike) -> ArrayLike:
    return _scalar_or_array(np.asarray(value, dtype=float) * 1e6)


def uev_to_ev(value: ArrayLike) -> ArrayLike:
    return _scalar_or_array(np.asarray(value, dtype=float) * 1e-6)


def energy_window_to_wavelength_window(center_nm: float, delta_ev: float) -> float:
    """Largeur en λ d'une fenêtre en énergie, au premier ordre : Δλ = λ²·ΔE/hc."""
    center = float(_positive("center_nm", center_nm))
    if not np.isfinite(delta_ev) or delta_ev < 0:
        raise DomainError(f"delta_ev doit être ≥ 0 (reçu {delta_ev!r})")
    return center * center * float(delta_ev) / HC_EV_NM


def energy_window_to_wavelength_window_exact(center_nm: float, delta_ev: float) -> float:
    """
    Conversion exacte à deux points : hc/E₁ - hc/E₂ avec E₁,₂ = E_c ∓ ΔE/2.

    Sert de référence pour la version au premier ordre.
    """
    center = float(_positive("center_nm", center_nm))
    if not np.isfinite(delta_ev) or delta_ev < 0:
        raise DomainError(f"delta_ev doit être ≥ 0 (reçu {delta_ev!r})")
    e_c = HC_EV_NM / center
    half = 0.5 * float(delta_ev)
    if half >= e_c:
        raise DomainError("fenêtre en énergie plus large que l'énergie centrale")
    return HC_EV_NM / (e_c - half) - HC_EV_NM / (e_c + half)
