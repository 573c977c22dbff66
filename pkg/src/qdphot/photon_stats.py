"""
Statistique de photons : simulation Monte Carlo d'un émetteur pulsé devant
un interféromètre HBT, histogramme de coïncidences, g²(0) et pureté.

Simulation par blocs de BLOCK_PULSES impulsions ; chaque bloc a son propre
flux aléatoire dérivé du seed maître (SeedSequence.spawn), donc le résultat
ne dépend pas du nombre de workers.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize, stats

from qdphot import kernels
from qdphot.errors import DomainError, FitConvergenceError
from qdphot.logging_config import dump
from qdphot.models import (
    DEFAULT_BIN_WIDTH_NS,
    DEFAULT_WINDOW_PERIODS,
    CoincidenceHistogram,
    DetectorModel,
    EmitterModel,
    G2Result,
    TimestampStream,
    drive_probability,  # noqa: F401  (réexporté)
)

logger = logging.getLogger(__name__)

BLOCK_PULSES = 1_000_000
SIDE_PEAK_SPREAD_WARN = 0.20
UPPER_BOUND_CL = 0.95
BASELINE_MIN_DISTANCE = 0.4         # en fraction de période, depuis le pic le plus proche


# ═══════════════════════════════════════════════════════════════
# Résultats
# ═══════════════════════════════════════════════════════════════


@dataclass(frozen=True, eq=False)
class SimulationResult:
    stream_a: TimestampStream
    stream_b: TimestampStream
    photons_per_pulse: np.ndarray
    n_pulses: int

    @property
    def streams(self) -> Tuple[TimestampStream, TimestampStream]:
        return self.stream_a, self.stream_b

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_pulses": self.n_pulses,
            "duration_s": self.stream_a.duration_s,
            "clicks_a": self.stream_a.n_clicks,
            "clicks_b": self.stream_b.n_clicks,
            "emitted_photons": int(self.photons_per_pulse.sum()),
            "emitted_g2": emitted_g2(self.photons_per_pulse),
        }


@dataclass(frozen=True)
class HistogramFit:
    """c(τ) = B + Σ_k A_k exp(-|τ - kT| / τ_d), A_k = A_side (k ≠ 0), A_zero (k = 0)."""

    background: float
    a_side: float
    a_zero: float
    tau_d_ns: float
    errors: Dict[str, float]
    g2_zero: float
    g2_err: float
    residual: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "background": self.background,
            "a_side": self.a_side,
            "a_zero": self.a_zero,
            "tau_d_ns": self.tau_d_ns,
            "errors": dict(self.errors),
            "g2_zero": self.g2_zero,
            "g2_err": self.g2_err,
            "residual": self.residual,
        }


# ═══════════════════════════════════════════════════════════════
# Modèle d'émetteur
# ═══════════════════════════════════════════════════════════════


def p_multi_for_g2(target_g2: float, p_excite: float) -> float:
    """
    p_multi tel que g²(0) = 2·p_multi / (p_excite + 2·p_multi)² = target.

    Plus petite racine de 4g·x² + (4g·p_e - 2)·x + g·p_e² = 0.
    """
    g, pe = float(target_g2), float(p_excite)
    if g < 0 or not (0 < pe <= 1):
        raise DomainError("g² cible < 0 ou p_excite hors de ]0, 1]")
    if g == 0:
        return 0.0
    b = 2.0 - 4.0 * g * pe
    disc = b * b - 16.0 * g * g * pe * pe
    if disc < 0 or b <= 0:
        raise DomainError(f"g²={g} inatteignable avec p_excite={pe}")
    pm = (b - math.sqrt(disc)) / (8.0 * g)
    if pe + pm > 1.0:
        raise DomainError(f"p_excite + p_multi = {pe + pm:.4f} > 1")
    return pm


def emitted_g2(photons_per_pulse: np.ndarray) -> float:
    """Référence par comptage de paires : ⟨N(N-1)⟩ / ⟨N⟩² sur les photons émis."""
    n = np.asarray(photons_per_pulse, dtype=float)
    mean = n.mean() if n.size else 0.0
    if mean <= 0:
        raise DomainError("aucun photon émis")
    return float(np.mean(n * (n - 1.0)) / (mean * mean))


# ═══════════════════════════════════════════════════════════════
# Simulation
# ═══════════════════════════════════════════════════════════════


def _simulate_block(
    emitter: EmitterModel,
    det_a: DetectorModel,
    det_b: DetectorModel,
    start: int,
    stop: int,
    seed_seq: np.random.SeedSequence,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed_seq)
    n = stop - start
    period = emitter.pulse_period_ns

    if emitter.poissonian_mean is not None:
        n_ph = rng.poisson(emitter.poissonian_mean, n)
    else:
        u = rng.random(n)
        pe, pm = emitter.p_excite, emitter.p_multi
        n_ph = (u < pe).astype(np.int64) + 2 * ((u >= pe) & (u < pe + pm)).astype(np.int64)

    total = int(n_ph.sum())
    pulse = np.repeat(np.arange(start, stop, dtype=np.int64), n_ph)
    delays = rng.exponential(emitter.lifetime_ns, total)
    if emitter.poissonian_mean is None and total:
        # Deuxième photon émis après le premier, avec son propre délai
        first = np.repeat(np.cumsum(n_ph) - n_ph, n_ph)
        second = np.nonzero(np.arange(total) - first == 1)[0]
        delays[second] += delays[second - 1]
    emission = pulse * period + delays

    to_a = rng.random(total) < det_a.splitter_ratio
    detected = rng.random(total)
    clicks: List[np.ndarray] = []
    window_ns = n * period
    for det, routed in ((det_a, to_a), (det_b, ~to_a)):
        photons = emission[routed & (detected < det.efficiency)]
        n_dark = rng.poisson(det.dark_rate_cps * window_ns * 1e-9)
        darks = start * period + rng.random(n_dark) * window_ns
        t = np.concatenate([photons, darks])
        if det.jitter_ns > 0:
            t = t + rng.normal(0.0, det.jitter_ns, t.size)
        clicks.append(t)

    return clicks[0], clicks[1], n_ph.astype(np.uint16)


def simulate_streams(
    emitter: EmitterModel,
    detectors: Sequence[DetectorModel],
    duration_s: float,
    seed: int,
    *,
    workers: int = 1,
    block_pulses: int = BLOCK_PULSES,
) -> SimulationResult:
    """
    Simule les clics des détecteurs A et B pendant `duration_s`.

    Le ratio de séparation est lu sur le détecteur A. Temps mort appliqué
    après fusion ; les flux sont strictement croissants.
    """
    if len(detectors) != 2:
        raise DomainError("deux détecteurs attendus (A, B)")
    if not math.isfinite(duration_s) or duration_s <= 0:
        raise DomainError(f"durée ≤ 0 : {duration_s!r}")
    if workers < 1 or block_pulses < 1:
        raise DomainError("workers et block_pulses doivent être ≥ 1")
    det_a, det_b = detectors
    n_pulses = int(round(duration_s * 1e9 / emitter.pulse_period_ns))
    if n_pulses < 1:
        raise DomainError("durée plus courte qu'une période")

    starts = list(range(0, n_pulses, block_pulses))
    children = np.random.SeedSequence(seed).spawn(len(starts))
    jobs = [(s, min(s + block_pulses, n_pulses), c) for s, c in zip(starts, children)]
    logger.info(
        "Simulation HBT: %d impulsions en %d bloc(s), %d worker(s)", n_pulses, len(jobs), workers,
    )
    dump("Émetteur", emitter.to_dict(), logger=logger)

    def run(job: Tuple[int, int, np.random.SeedSequence]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return _simulate_block(emitter, det_a, det_b, *job)

    if workers == 1:
        blocks = [run(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(run, jobs))

    duration = n_pulses * emitter.pulse_period_ns * 1e-9
    streams = []
    for idx, (det, name) in enumerate(((det_a, "A"), (det_b, "B"))):
        t = np.sort(np.concatenate([b[idx] for b in blocks]), kind="stable")
        t = t[kernels.dead_time_mask(t, float(det.dead_time_ns))]
        streams.append(TimestampStream(name, t, duration, det.dark_rate_cps, emitter.pulse_period_ns))

    photons = np.concatenate([b[2] for b in blocks])
    result = SimulationResult(streams[0], streams[1], photons, n_pulses)
    logger.info("Clics: A=%d, B=%d", result.stream_a.n_clicks, result.stream_b.n_clicks)
    return result


# ═══════════════════════════════════════════════════════════════
# Corrélation
# ═══════════════════════════════════════════════════════════════


def correlate(
    a: TimestampStream,
    b: TimestampStream,
    bin_width_ns: float = DEFAULT_BIN_WIDTH_NS,
    tau_max_ns: Optional[float] = None,
    *,
    pulse_period_ns: Optional[float] = None,
    exclude_zero_delay: bool = False,
) -> CoincidenceHistogram:
    """
    Intercorrélation complète (toutes les paires A-B, pas start-stop).

    Le bin k couvre [k·Δ, (k+1)·Δ). `exclude_zero_delay` retire les paires
    d'écart exactement nul, c.-à-d. les auto-paires quand a et b sont le même flux.
    Les flux sont strictement croissants (vérifié à la construction de TimestampStream).
    """
    if bin_width_ns <= 0:
        raise DomainError("largeur de bin ≤ 0")
    period = pulse_period_ns if pulse_period_ns is not None else (a.pulse_period_ns or b.pulse_period_ns)
    if tau_max_ns is None:
        if period is None:
            raise DomainError("tau_max requis quand la période est inconnue")
        tau_max_ns = DEFAULT_WINDOW_PERIODS * period

    k_min = math.floor(-tau_max_ns / bin_width_ns)
    k_max = math.floor(tau_max_ns / bin_width_ns)
    n_bins = k_max - k_min + 1
    counts = kernels.pair_histogram(
        np.ascontiguousarray(a.times_ns, dtype=np.float64),
        np.ascontiguousarray(b.times_ns, dtype=np.float64),
        float(bin_width_ns), float(tau_max_ns), int(k_min), int(n_bins), bool(exclude_zero_delay),
    )
    hist = CoincidenceHistogram(
        bin_width_ns=bin_width_ns,
        tau_max_ns=tau_max_ns,
        k_min=k_min,
        counts=counts,
        pulse_period_ns=period,
        duration_s=a.duration_s,
        clicks_a=a.n_clicks,
        clicks_b=b.n_clicks,
        dark_rate_a_cps=a.dark_rate_cps,
        dark_rate_b_cps=b.dark_rate_cps,
    )
    logger.info("Histogramme: %d bins, %d coïncidences", hist.n_bins, hist.total)
    return hist


# ═══════════════════════════════════════════════════════════════
# Estimation de g²(0)
# ═══════════════════════════════════════════════════════════════


def _require_period(h: CoincidenceHistogram, n_side_peaks: int) -> float:
    if h.pulse_period_ns is None:
        raise DomainError("période d'impulsion absente des métadonnées de l'histogramme")
    if n_side_peaks < 2:
        raise DomainError("n_side_peaks doit être ≥ 2")
    period = h.pulse_period_ns
    if h.tau_max_ns < (n_side_peaks + 0.5) * period - 1e-9:
        raise DomainError(
            f"fenêtre ±{h.tau_max_ns} ns insuffisante pour {n_side_peaks} pics latéraux "
            f"(≥ ±{(n_side_peaks + 0.5) * period} ns)"
        )
    return period


def _peak_masks(h: CoincidenceHistogram, period: float, n_side_peaks: int) -> Dict[int, np.ndarray]:
    centers = h.bin_centers_ns
    masks = {}
    for k in range(-n_side_peaks, n_side_peaks + 1):
        masks[k] = (centers >= k * period - 0.5 * period) & (centers < k * period + 0.5 * period)
    return masks


def _baseline_median(h: CoincidenceHistogram, period: float) -> float:
    centers = h.bin_centers_ns
    distance = np.abs(centers - np.round(centers / period) * period)
    far = distance >= BASELINE_MIN_DISTANCE * period
    if not np.any(far):
        raise DomainError("aucun bin entre les pics pour estimer la ligne de base")
    return float(np.median(h.counts[far]))


def background_from_rates(
    h: CoincidenceHistogram,
    dark_rates_cps: Optional[Tuple[float, float]] = None,
) -> float:
    """
    Coïncidences par bin impliquant au moins un clic d'obscurité :
    (R_A·R_B - S_A·S_B)·Δ·D, avec R les taux de clics et S = R - obscurité.
    """
    if h.duration_s is None or h.duration_s <= 0:
        raise DomainError("durée d'acquisition absente : fond par les taux impossible")
    d_a, d_b = dark_rates_cps if dark_rates_cps is not None else (h.dark_rate_a_cps, h.dark_rate_b_cps)
    r_a = h.clicks_a / h.duration_s
    r_b = h.clicks_b / h.duration_s
    s_a = max(r_a - d_a, 0.0)
    s_b = max(r_b - d_b, 0.0)
    return (r_a * r_b - s_a * s_b) * h.bin_width_ns * 1e-9 * h.duration_s


def estimate_g2(
    h: CoincidenceHistogram,
    n_side_peaks: int = 4,
    background: str = "rates",
    *,
    dark_rates_cps: Optional[Tuple[float, float]] = None,
) -> G2Result:
    """
    g²(0) = aire₀ / moyenne(aire_k, k ≠ 0), fenêtres d'une période centrées sur kT.

    background : "rates" (taux d'obscurité), "baseline" (médiane entre les pics)
    ou "none".
    """
    period = _require_period(h, n_side_peaks)
    if background == "rates":
        bkg = background_from_rates(h, dark_rates_cps)
    elif background == "baseline":
        bkg = _baseline_median(h, period)
    elif background == "none":
        bkg = 0.0
    else:
        raise DomainError(f"méthode de fond inconnue : {background!r}")

    warnings: List[str] = []
    masks = _peak_masks(h, period, n_side_peaks)
    raw = {k: float(h.counts[m].sum()) for k, m in masks.items()}
    net = {k: raw[k] - bkg * float(np.count_nonzero(m)) for k, m in masks.items()}
    side = [net[k] for k in sorted(masks) if k != 0]
    mean_side = float(np.mean(side))
    if mean_side <= 0:
        raise DomainError("aires des pics latéraux nulles après soustraction du fond")

    area0 = net[0]
    if area0 < 0:
        msg = f"aire à τ=0 négative après soustraction ({area0:.3g}) : ramenée à 0"
        logger.warning(msg)
        warnings.append(msg)
        area0 = 0.0

    spread = (max(side) - min(side)) / mean_side
    if spread > SIDE_PEAK_SPREAD_WARN:
        msg = f"aires latérales dispersées de {spread:.0%} (dérive ou photoblanchiment ?)"
        logger.warning(msg)
        warnings.append(msg)

    g2 = area0 / mean_side
    # Borne de Poisson unilatérale (Garwood) sur les comptes bruts à τ=0
    n0 = raw[0]
    upper_counts = 0.5 * stats.chi2.ppf(UPPER_BOUND_CL, 2.0 * (n0 + 1.0))
    upper = max(upper_counts - bkg * float(np.count_nonzero(masks[0])), 0.0) / mean_side
    upper = max(upper, g2)

    var_side = sum(raw[k] for k in masks if k != 0) / (len(side) ** 2)
    g2_err = math.sqrt(raw[0] / mean_side**2 + (g2**2) * var_side / mean_side**2)

    result = G2Result(
        g2_zero=g2,
        upper_bound=upper,
        side_peak_areas=tuple(side),
        background_per_bin=bkg,
        purity=purity(g2) if g2 <= 1.0 else None,
        zero_peak_area=area0,
        g2_err=g2_err,
        warnings=tuple(warnings),
    )
    logger.info(
        "g²(0) = %.4f ± %.4f (borne sup. %.4f), fond %.3g/bin", g2, g2_err, upper, bkg,
    )
    return result


def side_peak_chi2(result: G2Result) -> Tuple[float, float]:
    """χ² d'homogénéité des aires latérales (Poisson) et sa p-valeur."""
    areas = np.asarray(result.side_peak_areas, dtype=float)
    mean = areas.mean()
    chi2 = float(np.sum((areas - mean) ** 2) / mean)
    return chi2, float(stats.chi2.sf(chi2, areas.size - 1))


# ═══════════════════════════════════════════════════════════════
# Ajustement de l'histogramme
# ═══════════════════════════════════════════════════════════════


def histogram_model(centers: np.ndarray, period: float, n_peaks: int, p: np.ndarray) -> np.ndarray:
    b, a_side, a_zero, tau = p
    out = np.full_like(centers, b)
    for k in range(-n_peaks, n_peaks + 1):
        amp = a_zero if k == 0 else a_side
        out += amp * np.exp(-np.abs(centers - k * period) / tau)
    return out


def fit_histogram(h: CoincidenceHistogram, n_side_peaks: int = 4, *, max_nfev: int = 2000) -> HistogramFit:
    """Ajustement pondéré (Poisson) du modèle de pics exponentiels bilatéraux."""
    period = _require_period(h, n_side_peaks)
    centers = h.bin_centers_ns
    y = h.counts.astype(float)
    sigma = np.sqrt(np.maximum(y, 1.0))
    n_peaks = int(math.ceil(h.tau_max_ns / period)) + 1

    masks = _peak_masks(h, period, n_side_peaks)
    far = np.abs(centers - np.round(centers / period) * period) >= BASELINE_MIN_DISTANCE * period
    b0 = float(np.median(y[far])) if np.any(far) else 0.0
    side_max = [float(y[m].max()) - b0 for k, m in masks.items() if k != 0 and np.any(m)]
    a_side0 = max(float(np.mean(side_max)), 1.0)
    a_zero0 = max(float(y[masks[0]].max()) - b0, 0.0) if np.any(masks[0]) else 0.0
    side_area = np.mean([float(y[m].sum()) - b0 * np.count_nonzero(m) for k, m in masks.items() if k != 0])
    tau0 = float(np.clip(side_area * h.bin_width_ns / (2.0 * a_side0), h.bin_width_ns, 0.5 * period))
    p0 = np.array([max(b0, 0.0), a_side0, a_zero0, tau0])
    dump("fit_histogram p0", p0.tolist(), logger=logger)

    def residual(p: np.ndarray) -> np.ndarray:
        return (histogram_model(centers, period, n_peaks, p) - y) / sigma

    lower = np.array([0.0, 0.0, 0.0, 0.1 * h.bin_width_ns])
    upper = np.array([np.inf, np.inf, np.inf, period])
    res = optimize.least_squares(
        residual, np.clip(p0, lower, upper), bounds=(lower, upper), method="trf",
        x_scale="jac", max_nfev=max_nfev,
    )
    b, a_side, a_zero, tau = (float(v) for v in res.x)
    dof = max(y.size - 4, 1)
    chi2 = float(2.0 * res.cost)
    cov = np.linalg.pinv(res.jac.T @ res.jac) * max(chi2 / dof, 1.0)
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    if a_side > 0:
        g2 = a_zero / a_side
        g2_err = math.hypot(err[2] / a_side, g2 * err[1] / a_side)
    else:
        g2 = g2_err = math.inf

    result = HistogramFit(
        background=b,
        a_side=a_side,
        a_zero=a_zero,
        tau_d_ns=tau,
        errors={"background": float(err[0]), "a_side": float(err[1]), "a_zero": float(err[2]),
                "tau_d_ns": float(err[3])},
        g2_zero=g2,
        g2_err=float(g2_err),
        residual=chi2,
    )
    if res.status == 0:
        raise FitConvergenceError(f"fit_histogram non convergé après {res.nfev} évaluations", best=result)
    logger.info("Ajustement histogramme: g²(0)=%.4f, τ_d=%.3f ns", g2, tau)
    return result


def purity(g2_zero: float) -> float:
    """Pureté d'émission √(1 - g²(0))."""
    g = float(g2_zero)
    if not math.isfinite(g) or g < 0 or g > 1:
        raise DomainError(f"g²(0) hors de [0, 1] : {g2_zero!r}")
    return math.sqrt(1.0 - g)
