"""
Structure fine de l'exciton : états de trou mélangés, dipôles FSS,
diagrammes polaires et ajustement des mesures au polariseur.

Base de Bloch retenue (composantes sur {X, Y, Z} ⊗ {↑, ↓}) :

    |3/2,+3/2⟩ = -(X + iY)↑ / √2
    |3/2,+1/2⟩ = -[(X + iY)↓ - 2Z↑] / √6
    |3/2,-1/2⟩ =  [(X - iY)↑ + 2Z↓] / √6
    |3/2,-3/2⟩ =  (X - iY)↓ / √2

X et Y sont orientés le long de [-1 1 0] et [1 1 0], Z le long de [001].
Éléments de matrice : ⟨S|x|X⟩ = ⟨S|y|Y⟩ = ⟨S|z|Z⟩ = 1 (élément de Kane = 1).

Avec cette table, le rapport max/min du diagramme polaire égale la formule
fermée de l'ellipticité pour γ = 0 et toute phase θ ; l'axe majeur est
à 90° + θ (mod 180°). Pour γ > 0, la formule fermée garde √((1-β²)/3)
alors que le calcul direct donne √((1-β²-γ²)/3) : le calcul direct fait foi.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import integrate, optimize

from qdphot.errors import DomainError, FitConvergenceError
from qdphot.logging_config import dump
from qdphot.models import CollectionGeometry, FssDipolePair, HoleMixingParams, PolarPattern

logger = logging.getLogger(__name__)

_S2 = math.sqrt(2.0)
_S6 = math.sqrt(6.0)

# Lignes : spin ↑, ↓ ; colonnes : X, Y, Z
J32_P32 = np.array([[-1.0, -1.0j, 0.0], [0.0, 0.0, 0.0]]) / _S2
J32_P12 = np.array([[0.0, 0.0, 2.0], [-1.0, -1.0j, 0.0]]) / _S6
J32_M12 = np.array([[1.0, -1.0j, 0.0], [0.0, 0.0, 2.0]]) / _S6
J32_M32 = np.array([[0.0, 0.0, 0.0], [1.0, -1.0j, 0.0]]) / _S2

MIN_ELLIPTICITY_FOR_FIT = 1.05
MIN_FIT_ANGLES = 8
MIN_FIT_SPAN_DEG = 150.0


# ═══════════════════════════════════════════════════════════════
# États et dipôles
# ═══════════════════════════════════════════════════════════════


def hole_state(beta: float, gamma: float, theta: float, phi: float, sign: int = 1) -> np.ndarray:
    """
    |u_H±⟩ = √(1-β²-γ²)|3/2,±3/2⟩ + βe^{±2iθ}|3/2,∓1/2⟩ ± γe^{±2iφ}|3/2,±1/2⟩

    Retourne un tableau complexe (2, 3) : spin × {X, Y, Z}.
    """
    params = HoleMixingParams(beta, gamma, theta, phi)
    a = math.sqrt(max(1.0 - params.beta**2 - params.gamma**2, 0.0))
    if sign == 1:
        return (
            a * J32_P32
            + params.beta * np.exp(2j * theta) * J32_M12
            + params.gamma * np.exp(2j * phi) * J32_P12
        )
    if sign == -1:
        return (
            a * J32_M32
            + params.beta * np.exp(-2j * theta) * J32_P12
            - params.gamma * np.exp(-2j * phi) * J32_M12
        )
    raise DomainError(f"sign doit valoir ±1 (reçu {sign!r})")


def dipoles_from_mixing(params: HoleMixingParams) -> FssDipolePair:
    """d± = ⟨S↑|r|u_H+⟩ ± ⟨S↓|r|u_H-⟩."""
    h_plus = hole_state(params.beta, params.gamma, params.theta_mix, params.phi_mix, +1)
    h_minus = hole_state(params.beta, params.gamma, params.theta_mix, params.phi_mix, -1)
    d1 = h_plus[0]      # électron ↑ couplé aux composantes ↑
    d2 = h_minus[1]     # électron ↓ couplé aux composantes ↓
    return FssDipolePair(d_plus=d1 + d2, d_minus=d1 - d2)


# ═══════════════════════════════════════════════════════════════
# Diagramme polaire
# ═══════════════════════════════════════════════════════════════


def polar_pattern(pair: FssDipolePair, angles_deg: Any) -> PolarPattern:
    """I(φ) = |ε̂·d₊|² + |ε̂·d₋|² (somme incohérente des deux raies FSS)."""
    angles = np.asarray(angles_deg, dtype=float)
    return PolarPattern(angles, _intensity(pair, angles))


def _intensity(pair: FssDipolePair, angles_deg: np.ndarray) -> np.ndarray:
    phi = np.radians(angles_deg)
    c, s = np.cos(phi), np.sin(phi)
    ip = c * pair.d_plus[0] + s * pair.d_plus[1]
    im = c * pair.d_minus[0] + s * pair.d_minus[1]
    return np.abs(ip) ** 2 + np.abs(im) ** 2


def _coherency(pair: FssDipolePair) -> np.ndarray:
    m = np.zeros((2, 2))
    for d in (pair.d_plus, pair.d_minus):
        xy = d[:2]
        m += np.real(np.outer(xy, np.conj(xy)))
    return m


def pattern_extrema(pair: FssDipolePair) -> Tuple[float, float, float]:
    """(max, min, angle de l'axe majeur en degrés dans [0, 180)) via le tenseur 2×2."""
    w, v = np.linalg.eigh(_coherency(pair))
    major = math.degrees(math.atan2(v[1, 1], v[0, 1])) % 180.0
    return float(w[1]), float(w[0]), major


def brute_force_ellipticity(beta: float, gamma: float = 0.0, theta: float = 0.0) -> float:
    i_max, i_min, _ = pattern_extrema(dipoles_from_mixing(HoleMixingParams(beta, gamma, theta)))
    if i_min <= 0:
        return math.inf
    return i_max / i_min


# ═══════════════════════════════════════════════════════════════
# Formule fermée
# ═══════════════════════════════════════════════════════════════


def _closed_form_parts(beta: float, gamma: float) -> Tuple[float, float]:
    if beta < 0 or gamma < 0 or beta**2 + gamma**2 > 1.0:
        raise DomainError("β² + γ² > 1 ou amplitude négative")
    base = 1.0 - (2.0 / 3.0) * beta**2 - gamma**2
    cross = 2.0 * beta * math.sqrt((1.0 - beta**2) / 3.0)
    return base + cross, base - cross


def closed_form_ellipticity(beta: float, gamma: float = 0.0) -> float:
    """e = [1 - ⅔β² - γ² + 2β√((1-β²)/3)] / [1 - ⅔β² - γ² - 2β√((1-β²)/3)]."""
    num, den = _closed_form_parts(beta, gamma)
    if den <= 0:
        raise DomainError("mixing outside formula's validity (dénominateur ≤ 0)")
    return num / den


def beta_from_ellipticity(ellipticity: float, gamma: float = 0.0) -> float:
    """Inverse numérique de la formule fermée sur sa branche croissante."""
    if not math.isfinite(ellipticity) or ellipticity < 1.0:
        raise DomainError(f"ellipticité {ellipticity!r} < 1")
    if ellipticity == 1.0:
        return 0.0
    top = math.sqrt(max(1.0 - gamma**2, 0.0))

    def value(b: float) -> float:
        num, den = _closed_form_parts(b, gamma)
        return num / den if den > 0 else 1e300

    grid = np.linspace(0.0, top * (1.0 - 1e-12), 4001)
    vals = np.array([value(b) for b in grid])
    above = np.nonzero(vals >= ellipticity)[0]
    if above.size == 0 or above[0] == 0:
        raise DomainError(f"ellipticité {ellipticity} hors de portée pour γ={gamma}")
    i = int(above[0])
    return float(optimize.brentq(lambda b: value(b) - ellipticity, grid[i - 1], grid[i], xtol=1e-14))


def closed_form_discrepancy(beta: float, gamma: float) -> Dict[str, float]:
    """Compare la formule fermée au calcul direct (écart attendu pour γ > 0)."""
    closed = closed_form_ellipticity(beta, gamma)
    brute = brute_force_ellipticity(beta, gamma)
    rel = abs(brute - closed) / closed
    if rel > 1e-9:
        logger.warning(
            "Formule fermée (%.6f) ≠ calcul direct (%.6f) pour β=%.3f, γ=%.3f (écart %.2e)",
            closed, brute, beta, gamma, rel,
        )
    return {"closed_form": closed, "brute_force": brute, "relative_difference": rel}


def _beta_limit(gamma: float) -> float:
    """β au-delà duquel le dipôle mineur s'annule puis change de signe."""
    return math.sqrt(0.75 * (1.0 - gamma**2))


# ═══════════════════════════════════════════════════════════════
# Données au polariseur
# ═══════════════════════════════════════════════════════════════


def extend_polarizer_data(half: PolarPattern) -> PolarPattern:
    """
    Complète [0°, 180°) en [0°, 360°) par I(φ + 180°) = I(φ).

    Déjà étendu (chaque angle ≥ 180° est le miroir d'un angle mesuré) :
    renvoyé tel quel, trié.
    """
    if len(half) == 0:
        return half
    angles = half.angles_deg
    keys = np.round(angles, 9)
    if np.unique(keys).size != keys.size:
        raise DomainError("angles dupliqués dans les données polaires")

    low = angles < 180.0
    if not np.all(low):
        mirrored = dict(zip(np.round(angles[low] + 180.0, 9), half.intensities[low]))
        for a, v in zip(np.round(angles[~low], 9), half.intensities[~low]):
            if a not in mirrored or mirrored[a] != v:
                raise DomainError(f"angle {a}° ≥ 180° sans point miroir cohérent")
        if np.count_nonzero(~low) != np.count_nonzero(low):
            raise DomainError("données partiellement étendues")
        order = np.argsort(angles, kind="stable")
        sig = None if half.uncertainties is None else half.uncertainties[order]
        return PolarPattern(angles[order], half.intensities[order], sig)

    new_angles = np.concatenate([angles, angles + 180.0])
    new_values = np.concatenate([half.intensities, half.intensities])
    order = np.argsort(new_angles, kind="stable")
    sig = None
    if half.uncertainties is not None:
        sig = np.concatenate([half.uncertainties, half.uncertainties])[order]
    logger.debug("Données polaires étendues : %d -> %d points", len(half), new_angles.size)
    return PolarPattern(new_angles[order], new_values[order], sig)


def synthesize_polar(
    params: HoleMixingParams,
    angles_deg: Any,
    mean_intensity: float,
    noise: str = "poisson",
    seed: Optional[int] = None,
) -> PolarPattern:
    """Diagramme modèle normalisé à une intensité moyenne donnée, bruit de Poisson optionnel."""
    angles = np.asarray(angles_deg, dtype=float)
    pair = dipoles_from_mixing(params)
    mean = mean_intensity * _intensity(pair, angles) / (0.5 * np.trace(_coherency(pair)))
    if noise == "none":
        return PolarPattern(angles, mean)
    if noise == "poisson":
        rng = np.random.default_rng(seed)
        counts = rng.poisson(mean).astype(float)
        return PolarPattern(angles, counts, np.sqrt(np.maximum(counts, 1.0)))
    raise DomainError(f"modèle de bruit inconnu : {noise!r}")


# ═══════════════════════════════════════════════════════════════
# Ajustement
# ═══════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class PolarFitResult:
    params: HoleMixingParams
    scale: float
    ellipticity: float
    major_axis_deg: float
    residual: float
    beta_err: float
    theta_err_deg: float
    beta_upper_bound: float
    n_points: int
    warnings: Tuple[str, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "beta": self.params.beta,
            "gamma": self.params.gamma,
            "theta_deg": self.params.theta_deg,
            "scale": self.scale,
            "ellipticity": self.ellipticity,
            "major_axis_deg": self.major_axis_deg,
            "residual": self.residual,
            "beta_err": self.beta_err,
            "theta_err_deg": self.theta_err_deg,
            "beta_upper_bound": self.beta_upper_bound,
            "n_points": self.n_points,
            "warnings": list(self.warnings),
        }


def _wrap_theta(theta: float) -> float:
    """Phase ramenée dans [-π/2, π/2) (elle n'intervient que via e^{2iθ})."""
    return (theta + 0.5 * math.pi) % math.pi - 0.5 * math.pi


def _harmonic_estimate(angles: np.ndarray, values: np.ndarray, sigma: np.ndarray) -> Dict[str, float]:
    """I ≈ A0 + C cos 2φ + S sin 2φ par moindres carrés linéaires pondérés."""
    phi = np.radians(angles)
    design = np.column_stack([np.ones_like(phi), np.cos(2 * phi), np.sin(2 * phi)])
    w = 1.0 / sigma
    coef, *_ = np.linalg.lstsq(design * w[:, None], values * w, rcond=None)
    a0, c, s = (float(v) for v in coef)
    cov = np.linalg.pinv((design * w[:, None]).T @ (design * w[:, None]))
    amp = math.hypot(c, s)
    mod = amp / a0 if a0 > 0 else 0.0
    # Incertitude sur la modulation (propagation au premier ordre)
    if amp > 0 and a0 > 0:
        g = np.array([-amp / a0**2, c / (amp * a0), s / (amp * a0)])
        mod_err = math.sqrt(max(float(g @ cov @ g), 0.0))
    else:
        mod_err = math.sqrt(max(float(cov[1, 1] + cov[2, 2]), 0.0)) / max(a0, 1e-300)
    return {
        "mean": a0,
        "modulation": mod,
        "modulation_err": mod_err,
        "axis_deg": math.degrees(0.5 * math.atan2(s, c)) % 180.0,
    }


def _ellipticity_from_modulation(m: float) -> float:
    m = min(max(m, 0.0), 0.999999)
    return (1.0 + m) / (1.0 - m)


def fit_polar(
    data: PolarPattern,
    fixed_gamma: float = 0.0,
    init: Optional[HoleMixingParams] = None,
    *,
    max_nfev: int = 2000,
) -> PolarFitResult:
    """
    Moindres carrés pondérés de polar_pattern(dipoles_from_mixing(β, θ)) × échelle.

    γ reste fixé (non identifiable dans le plan x-y), φ est inerte.
    `scale` est l'intensité moyenne du diagramme ajusté.
    """
    angles = data.angles_deg
    distinct = np.unique(np.round(angles, 9))
    if distinct.size < MIN_FIT_ANGLES:
        raise DomainError(f"{distinct.size} angles distincts < {MIN_FIT_ANGLES}")
    if distinct[-1] - distinct[0] < MIN_FIT_SPAN_DEG:
        raise DomainError(f"étendue angulaire {distinct[-1] - distinct[0]:.1f}° < {MIN_FIT_SPAN_DEG}°")
    if not (0.0 <= fixed_gamma < 1.0):
        raise DomainError(f"γ fixé hors de [0, 1) : {fixed_gamma!r}")

    y = data.intensities
    sigma = data.uncertainties if data.uncertainties is not None else np.sqrt(np.maximum(y, 1.0))
    sigma = np.where(sigma > 0, sigma, 1.0)
    harm = _harmonic_estimate(angles, y, sigma)
    e_hat = _ellipticity_from_modulation(harm["modulation"])
    beta_max = _beta_limit(fixed_gamma) * (1.0 - 1e-6)

    if init is None and e_hat < MIN_ELLIPTICITY_FOR_FIT:
        e_ub = _ellipticity_from_modulation(harm["modulation"] + 2.0 * harm["modulation_err"])
        beta_ub = min(beta_from_ellipticity(e_ub, fixed_gamma), beta_max) if e_ub > 1.0 else 0.0
        params = HoleMixingParams(0.0, fixed_gamma, 0.0, 0.0)
        model = np.full_like(y, harm["mean"])
        residual = float(np.sum(((model - y) / sigma) ** 2))
        msg = f"diagramme quasi circulaire (max/min ≈ {e_hat:.3f}) : β=0, borne sup {beta_ub:.3f}"
        logger.info(msg)
        return PolarFitResult(
            params=params,
            scale=harm["mean"],
            ellipticity=brute_force_ellipticity(0.0, fixed_gamma),
            major_axis_deg=pattern_extrema(dipoles_from_mixing(params))[2],
            residual=residual,
            beta_err=beta_ub / 2.0,
            theta_err_deg=math.nan,
            beta_upper_bound=beta_ub,
            n_points=int(y.size),
            warnings=(msg,),
        )

    if init is not None:
        beta0, theta0 = init.beta, init.theta_mix
    else:
        try:
            beta0 = min(beta_from_ellipticity(e_hat, fixed_gamma), beta_max * 0.99)
        except DomainError:
            beta0 = 0.5 * beta_max
        theta0 = math.radians(harm["axis_deg"] - 90.0)
    p0 = np.array([beta0, _wrap_theta(theta0), max(harm["mean"], 1e-12)])
    dump("fit_polar p0", {"beta": p0[0], "theta_deg": math.degrees(p0[1]), "scale": p0[2]}, logger=logger)

    def model_of(p: np.ndarray) -> np.ndarray:
        pair = dipoles_from_mixing(HoleMixingParams(p[0], fixed_gamma, p[1], 0.0))
        return p[2] * _intensity(pair, angles) / (0.5 * np.trace(_coherency(pair)))

    def residual(p: np.ndarray) -> np.ndarray:
        return (model_of(p) - y) / sigma

    lower = np.array([0.0, -np.inf, 0.0])
    upper = np.array([beta_max, np.inf, np.inf])
    res = optimize.least_squares(
        residual, np.clip(p0, lower, upper), bounds=(lower, upper), method="trf",
        x_scale="jac", ftol=1e-12, xtol=1e-12, gtol=1e-12, max_nfev=max_nfev,
    )

    beta, theta, scale = float(res.x[0]), _wrap_theta(float(res.x[1])), float(res.x[2])
    params = HoleMixingParams(beta, fixed_gamma, theta, 0.0)
    i_max, i_min, major = pattern_extrema(dipoles_from_mixing(params))

    dof = max(y.size - 3, 1)
    chi2 = float(2.0 * res.cost)
    cov = np.linalg.pinv(res.jac.T @ res.jac) * max(chi2 / dof, 1.0)
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    warnings: List[str] = []
    if fixed_gamma > 0:
        disc = closed_form_discrepancy(max(beta, 0.0), fixed_gamma)
        if disc["relative_difference"] > 1e-9:
            warnings.append(
                f"γ={fixed_gamma} : formule fermée et calcul direct diffèrent de "
                f"{disc['relative_difference']:.2e} (relatif)"
            )

    result = PolarFitResult(
        params=params,
        scale=scale,
        ellipticity=i_max / i_min if i_min > 0 else math.inf,
        major_axis_deg=major,
        residual=chi2,
        beta_err=float(err[0]),
        theta_err_deg=math.degrees(float(err[1])),
        beta_upper_bound=min(beta + 2.0 * float(err[0]), beta_max),
        n_points=int(y.size),
        warnings=tuple(warnings),
    )
    if res.status == 0:
        raise FitConvergenceError(f"fit_polar non convergé après {res.nfev} évaluations", best=result)

    logger.info(
        "Ajustement polaire: β=%.4f ± %.4f, θ=%.2f°, ellipticité %.3f, axe majeur %.1f°",
        beta, result.beta_err, params.theta_deg, result.ellipticity, major,
    )
    return result


# ═══════════════════════════════════════════════════════════════
# Fraction collectée
# ═══════════════════════════════════════════════════════════════


def _dipole_vector(dipole: Any) -> np.ndarray:
    d = np.asarray(dipole, dtype=complex).reshape(-1)
    if d.size != 3:
        raise DomainError("un dipôle est un vecteur complexe à 3 composantes")
    if not np.any(d):
        raise DomainError("dipôle nul")
    return d


def cone_fraction(dipole: Any, half_angle_rad: float) -> float:
    """
    Fraction de la puissance rayonnée dans le cône supérieur de demi-angle α
    (milieu homogène) :

        dipôle dans le plan : (4 - 3cos α - cos³α) / 8
        dipôle selon z      : (2 - 3cos α + cos³α) / 4
    """
    d = _dipole_vector(dipole)
    if not (0.0 <= half_angle_rad <= 0.5 * math.pi):
        raise DomainError("demi-angle hors de [0, π/2]")
    c = math.cos(half_angle_rad)
    f_inplane = (4.0 - 3.0 * c - c**3) / 8.0
    f_z = (2.0 - 3.0 * c + c**3) / 4.0
    p = np.abs(d) ** 2
    return float(((p[0] + p[1]) * f_inplane + p[2] * f_z) / p.sum())


def _cone_fraction_quad(d: np.ndarray, half_angle_rad: float) -> float:
    norm2 = float(np.sum(np.abs(d) ** 2))

    def integrand(theta: float, phi: float) -> float:
        st = math.sin(theta)
        n = np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])
        return (norm2 - abs(n @ d) ** 2) * st

    total, _ = integrate.dblquad(
        integrand, 0.0, 2.0 * math.pi, 0.0, half_angle_rad, epsabs=1e-13, epsrel=1e-11,
    )
    return total / (8.0 * math.pi / 3.0 * norm2)


def collection_fraction(dipole: Any, geometry: CollectionGeometry, method: str = "closed") -> float:
    """Fraction collectée par l'objectif (cône de demi-angle asin(NA/n))."""
    d = _dipole_vector(dipole)
    alpha = geometry.half_angle_rad
    if method == "closed":
        return cone_fraction(d, alpha)
    if method == "quad":
        return _cone_fraction_quad(d, alpha)
    raise DomainError(f"méthode inconnue : {method!r}")
