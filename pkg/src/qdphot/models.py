#!/usr/bin/env python3
"""
Dataclasses métier : spectres, pics lorentziens, mélange de trous,
flux d'horodatage HBT, histogrammes de coïncidences, carte de QDs.

Unités internes :
    énergie   -> eV          (μeV et nm uniquement aux frontières I/O)
    temps     -> ns          (durées totales d'acquisition en s)
    angles    -> degrés pour les polariseurs, radians pour les phases de mélange

Toutes les instances sont immuables ; les tableaux numpy sont copiés et
passés en lecture seule à la construction.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np

from qdphot.errors import DomainError
from qdphot.utils import frozen_array, require_fraction, require_positive


# ────────────────────────── Texte source ──────────────────────────
@dataclass(frozen=True)
class SourceText:
    """
    Contenu exact d'un fichier lu, avec ses métadonnées dans l'ordre du fichier.

    Attaché par les lecteurs de `adapters.csv_formats` ; les écrivains le
    recopient tel quel tant que l'objet et ses métadonnées n'ont pas changé.
    """

    text: str
    metadata: Tuple[Tuple[str, str], ...] = ()


# ────────────────────────── Spectres ──────────────────────────
@dataclass(frozen=True, eq=False)
class Spectrum:
    """
    Intensité échantillonnée sur une grille d'énergie strictement croissante.

    `wavelength_nm` conserve la grille source (ordre croissant en λ) quand le
    spectre vient d'un fichier ; `source` garde le texte lu pour une
    réécriture identique octet pour octet.
    """

    energy_ev: np.ndarray
    counts: np.ndarray
    metadata: Mapping[str, str] = field(default_factory=dict)
    wavelength_nm: Optional[np.ndarray] = None
    source: Optional[SourceText] = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        energy = frozen_array(self.energy_ev)
        counts = frozen_array(self.counts)
        if energy.size < 2:
            raise DomainError("un spectre doit contenir au moins 2 points")
        if energy.size != counts.size:
            raise DomainError(f"axe ({energy.size}) et comptes ({counts.size}) de tailles différentes")
        if not (np.all(np.isfinite(energy)) and np.all(np.isfinite(counts))):
            raise DomainError("valeurs non finies dans le spectre")
        if energy[0] <= 0 or np.any(np.diff(energy) <= 0):
            raise DomainError("l'axe en énergie doit être positif et strictement croissant")
        if np.any(counts < 0):
            raise DomainError("comptes négatifs dans le spectre")
        object.__setattr__(self, "energy_ev", energy)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "metadata", {str(k): str(v) for k, v in dict(self.metadata).items()})

        if self.wavelength_nm is not None:
            wl = frozen_array(self.wavelength_nm)
            if wl.size != energy.size:
                raise DomainError("grille de longueurs d'onde de taille incohérente")
            object.__setattr__(self, "wavelength_nm", wl)

    # --- construction -----------------------------------
    @classmethod
    def from_wavelength(
        cls,
        wavelength_nm: Any,
        counts: Any,
        metadata: Optional[Mapping[str, str]] = None,
        source: Optional[SourceText] = None,
    ) -> "Spectrum":
        """Construit un spectre depuis une grille croissante en λ (ordre fichier)."""
        wl = np.asarray(wavelength_nm, dtype=float).reshape(-1)
        c = np.asarray(counts, dtype=float).reshape(-1)
        if wl.size != c.size:
            raise DomainError(f"longueurs d'onde ({wl.size}) et comptes ({c.size}) de tailles différentes")
        if wl.size >= 2 and np.any(np.diff(wl) <= 0):
            raise DomainError("les longueurs d'onde doivent être strictement croissantes")
        if wl.size and wl[0] <= 0:
            raise DomainError("longueur d'onde non positive")
        energy = HC_EV_NM / wl[::-1]
        return cls(energy, c[::-1], metadata or {}, wavelength_nm=wl, source=source)

    # --- accès -----------------------------------
    @property
    def n_points(self) -> int:
        return int(self.energy_ev.size)

    @property
    def spacing_ev(self) -> np.ndarray:
        """Largeur d'échantillonnage locale ΔE_i (numpy.gradient de l'axe)."""
        return np.gradient(self.energy_ev)

    def wavelengths(self) -> np.ndarray:
        """Grille en λ croissante (source si connue, sinon hc/E)."""
        if self.wavelength_nm is not None:
            return self.wavelength_nm
        return HC_EV_NM / self.energy_ev[::-1]

    def counts_by_wavelength(self) -> np.ndarray:
        return self.counts[::-1]

    def is_uniform(self, rtol: float = 1e-6) -> bool:
        steps = np.diff(self.energy_ev)
        return bool(np.allclose(steps, steps.mean(), rtol=rtol, atol=0.0))

    def total_counts(self) -> float:
        return float(self.counts.sum())

    @property
    def excitation_power_nw(self) -> Optional[float]:
        return _optional_float(self.metadata.get("excitation_power_nw"))

    @property
    def temperature_k(self) -> Optional[float]:
        return _optional_float(self.metadata.get("temperature_k"))

    @property
    def integration(self) -> Optional[str]:
        return self.metadata.get("integration")

    # --- transformations -----------------------------------
    def with_counts(self, counts: Any) -> "Spectrum":
        """Même axe (et même grille source), nouveaux comptes."""
        return Spectrum(self.energy_ev, counts, self.metadata, wavelength_nm=self.wavelength_nm)

    def scaled(self, factor: float) -> "Spectrum":
        if factor < 0:
            raise DomainError("facteur d'échelle négatif")
        return self.with_counts(self.counts * factor)

    def resample_uniform(self, spacing_ev: Optional[float] = None) -> "Spectrum":
        """
        Rééchantillonne par interpolation linéaire sur une grille uniforme en énergie.

        Pas par défaut : le plus petit pas de la grille d'origine.
        """
        e = self.energy_ev
        step = float(np.min(np.diff(e))) if spacing_ev is None else require_positive("spacing_ev", spacing_ev)
        n = int(math.floor((e[-1] - e[0]) / step + 1e-9)) + 1
        axis = e[0] + step * np.arange(n)
        counts = np.interp(axis, e, self.counts)
        meta = dict(self.metadata)
        meta["resampled"] = "uniform-energy"
        return Spectrum(axis, counts, meta)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_points": self.n_points,
            "energy_min_ev": float(self.energy_ev[0]),
            "energy_max_ev": float(self.energy_ev[-1]),
            "total_counts": self.total_counts(),
            "metadata": dict(self.metadata),
        }


# ────────────────────────── Pics lorentziens ──────────────────────────
@dataclass(frozen=True)
class LorentzianPeak:
    center_ev: float
    fwhm_ev: float
    area: float

    def __post_init__(self) -> None:
        require_positive("center_ev", self.center_ev)
        require_positive("fwhm_ev", self.fwhm_ev)
        if not math.isfinite(self.area) or self.area < 0:
            raise DomainError(f"aire négative ou non finie : {self.area!r}")

    def density(self, energy_ev: Any) -> np.ndarray:
        """Densité lorentzienne d'aire unité (1/eV)."""
        hw = 0.5 * self.fwhm_ev
        de = np.asarray(energy_ev, dtype=float) - self.center_ev
        return (hw / np.pi) / (de * de + hw * hw)

    def counts_on(self, axis_ev: Any) -> np.ndarray:
        """Comptes par point : aire · L(E_i) · ΔE_i."""
        axis = np.asarray(axis_ev, dtype=float)
        return self.area * self.density(axis) * np.gradient(axis)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class PeakModel:
    """Somme de pics lorentziens + fond constant (comptes d'obscurité de l'APD)."""

    peaks: Tuple[LorentzianPeak, ...] = ()
    background: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.background) or self.background < 0:
            raise DomainError(f"fond négatif ou non fini : {self.background!r}")
        ordered = tuple(sorted(self.peaks, key=lambda p: p.center_ev))
        object.__setattr__(self, "peaks", ordered)

    def peak_counts(self, axis_ev: Any) -> np.ndarray:
        axis = np.asarray(axis_ev, dtype=float)
        total = np.zeros_like(axis)
        for p in self.peaks:
            total += p.counts_on(axis)
        return total

    def evaluate(self, axis_ev: Any) -> np.ndarray:
        return self.background + self.peak_counts(axis_ev)

    def splitting(self) -> Tuple[float, ...]:
        """Écarts en énergie entre pics consécutifs (eV)."""
        return tuple(b.center_ev - a.center_ev for a, b in zip(self.peaks, self.peaks[1:]))

    def scaled(self, factor: float) -> "PeakModel":
        return PeakModel(
            tuple(LorentzianPeak(p.center_ev, p.fwhm_ev, p.area * factor) for p in self.peaks),
            self.background * factor,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"peaks": [p.to_dict() for p in self.peaks], "background": self.background}


@dataclass(frozen=True)
class InstrumentResponse:
    """Réponse du spectromètre : lorentzienne d'aire unité."""

    fwhm_ev: float = 15e-6

    def __post_init__(self) -> None:
        require_positive("fwhm_ev", self.fwhm_ev)

    def kernel(self, spacing_ev: float, half_length: int) -> np.ndarray:
        """Noyau discret de longueur 2·half_length+1, centré, de somme unité."""
        offsets = spacing_ev * np.arange(-half_length, half_length + 1)
        hw = 0.5 * self.fwhm_ev
        k = (hw / np.pi) / (offsets * offsets + hw * hw)
        return k / k.sum()


# ────────────────────────── Structure fine ──────────────────────────
@dataclass(frozen=True)
class HoleMixingParams:
    """Mélange trou lourd / trou léger : amplitudes β, γ et phases θ, φ (rad)."""

    beta: float
    gamma: float = 0.0
    theta_mix: float = 0.0
    phi_mix: float = 0.0

    def __post_init__(self) -> None:
        for name in ("beta", "gamma"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0 or v >= 1:
                raise DomainError(f"{name} doit être dans [0, 1) (reçu {v!r})")
        if self.beta**2 + self.gamma**2 > 1.0:
            raise DomainError("β² + γ² > 1 : état de trou non normalisable")

    @property
    def theta_deg(self) -> float:
        return math.degrees(self.theta_mix)

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["theta_deg"] = self.theta_deg
        return d


@dataclass(frozen=True, eq=False)
class FssDipolePair:
    """Dipôles de transition des deux états FSS (vecteurs complexes x, y, z)."""

    d_plus: np.ndarray
    d_minus: np.ndarray

    def __post_init__(self) -> None:
        dp = np.array(self.d_plus, dtype=complex).reshape(3)
        dm = np.array(self.d_minus, dtype=complex).reshape(3)
        if not (np.any(dp) or np.any(dm)):
            raise DomainError("les deux dipôles sont nuls")
        dp.setflags(write=False)
        dm.setflags(write=False)
        object.__setattr__(self, "d_plus", dp)
        object.__setattr__(self, "d_minus", dm)


@dataclass(frozen=True, eq=False)
class PolarPattern:
    """Intensité en fonction de l'angle du polariseur (degrés depuis [-1 1 0])."""

    angles_deg: np.ndarray
    intensities: np.ndarray
    uncertainties: Optional[np.ndarray] = None
    source: Optional[SourceText] = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        angles = frozen_array(self.angles_deg)
        values = frozen_array(self.intensities)
        if angles.size != values.size:
            raise DomainError("angles et intensités de tailles différentes")
        if np.any((angles < 0) | (angles >= 360)):
            raise DomainError("angles hors de [0°, 360°)")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise DomainError("intensités négatives ou non finies")
        object.__setattr__(self, "angles_deg", angles)
        object.__setattr__(self, "intensities", values)
        if self.uncertainties is not None:
            sig = frozen_array(self.uncertainties)
            if sig.size != angles.size:
                raise DomainError("incertitudes de taille incohérente")
            object.__setattr__(self, "uncertainties", sig)

    def __len__(self) -> int:
        return int(self.angles_deg.size)


@dataclass(frozen=True)
class CollectionGeometry:
    numerical_aperture: float = 0.65
    medium_index: float = 1.0

    def __post_init__(self) -> None:
        require_positive("medium_index", self.medium_index)
        if not (0 < self.numerical_aperture < self.medium_index):
            raise DomainError(
                f"ouverture numérique {self.numerical_aperture} hors de ]0, {self.medium_index}["
            )

    @property
    def half_angle_rad(self) -> float:
        return math.asin(self.numerical_aperture / self.medium_index)


# ────────────────────────── Émetteur / HBT ──────────────────────────
def drive_probability(power_nw: float, saturation_power_nw: float, law: str = "hyperbolic") -> float:
    """
    Probabilité d'excitation par impulsion selon la puissance de pompe.

    hyperbolic  : P / (P + Psat)    (50 % de Psat -> 1/3)
    exponential : 1 - exp(-P / Psat)
    """
    p_sat = require_positive("saturation_power_nw", saturation_power_nw)
    p = float(power_nw)
    if not math.isfinite(p) or p < 0:
        raise DomainError(f"puissance de pompe invalide : {power_nw!r}")
    if law == "hyperbolic":
        return p / (p + p_sat)
    if law == "exponential":
        return 1.0 - math.exp(-p / p_sat)
    raise DomainError(f"loi de saturation inconnue : {law!r}")


@dataclass(frozen=True)
class EmitterModel:
    """
    Source pulsée : 0, 1 ou 2 excitations par impulsion.

    Si `drive_power_nw` est fourni, `p_excite` est recalculé depuis la loi
    de saturation. `poissonian_mean` bascule en source de référence
    poissonienne (g² = 1).
    """

    pulse_period_ns: float = 12.5
    lifetime_ns: float = 1.0
    p_excite: float = 0.5
    p_multi: float = 0.0
    saturation_power_nw: Optional[float] = None
    drive_power_nw: Optional[float] = None
    drive_law: str = "hyperbolic"
    poissonian_mean: Optional[float] = None

    def __post_init__(self) -> None:
        require_positive("pulse_period_ns", self.pulse_period_ns)
        require_positive("lifetime_ns", self.lifetime_ns)
        if self.drive_power_nw is not None:
            if self.saturation_power_nw is None:
                raise DomainError("drive_power_nw fourni sans saturation_power_nw")
            object.__setattr__(
                self, "p_excite",
                drive_probability(self.drive_power_nw, self.saturation_power_nw, self.drive_law),
            )
        require_fraction("p_excite", self.p_excite)
        require_fraction("p_multi", self.p_multi)
        if self.p_excite + self.p_multi > 1.0 + 1e-12:
            raise DomainError("p_excite + p_multi > 1")
        if self.poissonian_mean is not None:
            require_positive("poissonian_mean", self.poissonian_mean)

    @property
    def mean_photons_per_pulse(self) -> float:
        if self.poissonian_mean is not None:
            return self.poissonian_mean
        return self.p_excite + 2.0 * self.p_multi

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float = 0.3
    dark_rate_cps: float = 100.0
    dead_time_ns: float = 0.0
    splitter_ratio: float = 0.5          # fraction routée vers A (lue sur le détecteur A)
    jitter_ns: float = 0.0

    def __post_init__(self) -> None:
        require_fraction("efficiency", self.efficiency)
        require_fraction("splitter_ratio", self.splitter_ratio)
        for name in ("dark_rate_cps", "dead_time_ns", "jitter_ns"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"{name} doit être ≥ 0 (reçu {v!r})")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class TimestampStream:
    """Instants de clics (ns) d'un détecteur, avec la durée totale d'acquisition."""

    detector: str
    times_ns: np.ndarray
    duration_s: float
    dark_rate_cps: float = 0.0
    pulse_period_ns: Optional[float] = None
    source: Optional[SourceText] = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.detector not in DETECTOR_IDS:
            raise DomainError(f"détecteur inconnu : {self.detector!r}")
        require_positive("duration_s", self.duration_s)
        times = frozen_array(self.times_ns)
        if not np.all(np.isfinite(times)):
            raise DomainError("instants non finis")
        if np.any(np.diff(times) <= 0):
            raise DomainError(f"instants du détecteur {self.detector} non strictement croissants")
        object.__setattr__(self, "times_ns", times)

    @property
    def n_clicks(self) -> int:
        return int(self.times_ns.size)

    @property
    def rate_cps(self) -> float:
        return self.n_clicks / self.duration_s


@dataclass(frozen=True, eq=False)
class CoincidenceHistogram:
    """
    Histogramme des écarts t_B - t_A ; le bin i couvre [(k_min+i)·Δ, (k_min+i+1)·Δ).

    Les métadonnées (clics, taux d'obscurité, durée) servent à la
    soustraction du fond dans estimate_g2.
    """

    bin_width_ns: float
    tau_max_ns: float
    k_min: int
    counts: np.ndarray
    pulse_period_ns: Optional[float] = None
    duration_s: Optional[float] = None
    clicks_a: int = 0
    clicks_b: int = 0
    dark_rate_a_cps: float = 0.0
    dark_rate_b_cps: float = 0.0
    source: Optional[SourceText] = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        require_positive("bin_width_ns", self.bin_width_ns)
        require_positive("tau_max_ns", self.tau_max_ns)
        counts = frozen_array(self.counts, dtype=np.int64)
        if np.any(counts < 0):
            raise DomainError("comptes négatifs dans l'histogramme")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "k_min", int(self.k_min))
        if self.pulse_period_ns is not None:
            ratio = self.tau_max_ns / self.pulse_period_ns
            if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
                raise DomainError(
                    f"tau_max ({self.tau_max_ns} ns) doit être un multiple entier de la période "
                    f"({self.pulse_period_ns} ns)"
                )

    @property
    def n_bins(self) -> int:
        return int(self.counts.size)

    @property
    def tau_ns(self) -> np.ndarray:
        """Bord gauche de chaque bin."""
        return (self.k_min + np.arange(self.n_bins)) * self.bin_width_ns

    @property
    def bin_centers_ns(self) -> np.ndarray:
        return (self.k_min + np.arange(self.n_bins) + 0.5) * self.bin_width_ns

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class G2Result:
    g2_zero: float
    upper_bound: float
    side_peak_areas: Tuple[float, ...]
    background_per_bin: float
    purity: Optional[float]
    zero_peak_area: float = 0.0
    g2_err: float = 0.0
    warnings: Tuple[str, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["side_peak_areas"] = list(self.side_peak_areas)
        d["warnings"] = list(self.warnings)
        return d


# ────────────────────────── Carte de QDs ──────────────────────────
@dataclass(frozen=True)
class QdArrayEntry:
    row: int
    col: int
    wavelength_nm: float
    label: Optional[str] = None

    def position(self) -> Tuple[int, int]:
        return (self.row, self.col)


@dataclass(frozen=True)
class QdArrayMap:
    entries: Tuple[QdArrayEntry, ...]
    rows: int
    cols: int
    source: Optional[SourceText] = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        if self.rows < 1 or self.cols < 1:
            raise DomainError("dimensions de la carte invalides")
        seen = set()
        for e in self.entries:
            if not (0 <= e.row < self.rows and 0 <= e.col < self.cols):
                raise DomainError(f"position ({e.row},{e.col}) hors de la carte {self.rows}x{self.cols}")
            if e.position() in seen:
                raise DomainError(f"position ({e.row},{e.col}) dupliquée")
            seen.add(e.position())
            require_positive("wavelength_nm", e.wavelength_nm)

    def __len__(self) -> int:
        return len(self.entries)

    def wavelengths(self) -> np.ndarray:
        return np.array([e.wavelength_nm for e in self.entries], dtype=float)


@dataclass(frozen=True)
class QdPair:
    first: Tuple[int, int]
    second: Tuple[int, int]
    delta_ev: float

    def to_dict(self) -> Dict[str, Any]:
        return {"first": list(self.first), "second": list(self.second), "delta_ev": self.delta_ev}


@dataclass(frozen=True)
class PairReport:
    pairs: Tuple[QdPair, ...]
    threshold_ev: float

    def __len__(self) -> int:
        return len(self.pairs)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "threshold_ev": self.threshold_ev,
            "n_pairs": len(self.pairs),
            "pairs": [p.to_dict() for p in self.pairs],
        }


@dataclass(frozen=True)
class UniformityStats:
    n: int
    mean_nm: float
    std_nm: float
    mean_ev: float
    std_ev: float
    min_nm: float
    max_nm: float
    min_ev: float
    max_ev: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _optional_float(value: Optional[str]) -> Optional[float]:
    if value is None or value == "":
        return None
    try:
        return float(value)
    except ValueError:
        return None


# ───────────────────────── Constantes ────────────────────────
HC_EV_NM = 1239.841984                  # hc en eV·nm
DETECTOR_IDS = ("A", "B")

DEFAULT_IRF_FWHM_EV = 15e-6
DEFAULT_PULSE_PERIOD_NS = 12.5          # laser 80 MHz
DEFAULT_BIN_WIDTH_NS = 0.128
DEFAULT_WINDOW_PERIODS = 6
DEFAULT_NUMERICAL_APERTURE = 0.65
ACCEPTANCE_WINDOW_EV = 70e-6            # filtre spectral devant le HBT
PAIR_THRESHOLD_EV = 300e-6

# Scénario spectre à deux pics (P1 brillant, P2 plus faible)
SCENARIO_P1_NM = 919.108
SCENARIO_P2_NM = 918.891
SCENARIO_P1_FWHM_EV = 21e-6
SCENARIO_P2_FWHM_EV = 34e-6
SCENARIO_P1_AREA = 60000.0
SCENARIO_P2_AREA = 20000.0
SCENARIO_BACKGROUND = 20.0
