"""
Synthèse, ajustement, convolution et déconvolution de raies lorentziennes.

Conventions :
    - comptes au point i = aire · L(E_i) · ΔE_i, L densité lorentzienne d'aire
      unité, ΔE_i = numpy.gradient(axe) ;
    - la réponse instrumentale est échantillonnée au pas de la grille et
      normalisée à somme unité ;
    - bords : extension à zéro de 10 × FWHM de la réponse de chaque côté.

Les ajustements travaillent en coordonnées réduites u = (E - E_mid) / pas,
ce qui garde tous les paramètres d'ordre 1 pour least_squares.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, optimize, signal

from qdphot.errors import DomainError, FitConvergenceError
from qdphot.logging_config import dump
from qdphot.models import (
    ACCEPTANCE_WINDOW_EV,
    InstrumentResponse,
    LorentzianPeak,
    PeakModel,
    Spectrum,
)

logger = logging.getLogger(__name__)

IRF_EXTENSION_FWHM = 10.0
COLLAPSE_FRACTION = 1e-3
ILL_CONDITIONED = 1e8
UNIFORM_RTOL = 1e-6


# ═══════════════════════════════════════════════════════════════
# Résultats
# ═══════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class PeakUncertainty:
    center_err_ev: float
    fwhm_err_ev: float
    area_err: float


@dataclass(frozen=True)
class PeakFitResult:
    """Modèle ajusté + incertitudes (approximation quadratique locale)."""

    model: PeakModel
    uncertainties: Tuple[PeakUncertainty, ...]
    background_err: float
    residual: float
    n_points: int
    nfev: int
    warnings: Tuple[str, ...] = ()

    def to_dict(self, lam: Optional[float] = None) -> Dict[str, Any]:
        peaks = []
        for p, u in zip(self.model.peaks, self.uncertainties):
            peaks.append({
                "center_ev": p.center_ev,
                "fwhm_ev": p.fwhm_ev,
                "area": p.area,
                "center_err": u.center_err_ev,
                "fwhm_err": u.fwhm_err_ev,
                "area_err": u.area_err,
            })
        return {
            "peaks": peaks,
            "background": self.model.background,
            "background_err": self.background_err,
            "lambda": lam,
            "residual": self.residual,
            "splitting_ev": list(self.model.splitting()),
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True, eq=False)
class DeconvolutionResult:
    """
    Spectre intrinsèque x (+ fond) et modèle lorentzien intrinsèque.

    `fit` : ajustement par reconvolution (modèle ⊛ IRF contre les mesures),
    initialisé par `direct_fit`, l'ajustement lorentzien direct de x.
    """

    intrinsic: Spectrum
    fit: Optional[PeakFitResult]
    direct_fit: Optional[PeakFitResult]
    lam: float
    background: float
    objective_history: np.ndarray
    iterations: int
    converged: bool
    warnings: Tuple[str, ...] = field(default=())

    def to_dict(self) -> Dict[str, Any]:
        d: Dict[str, Any] = {
            "lambda": self.lam,
            "background": self.background,
            "iterations": self.iterations,
            "converged": self.converged,
            "objective_initial": float(self.objective_history[0]),
            "objective_final": float(self.objective_history[-1]),
            "warnings": list(self.warnings),
        }
        if self.fit is not None:
            d["intrinsic_fit"] = self.fit.to_dict(lam=self.lam)
        if self.direct_fit is not None:
            d["direct_fit"] = self.direct_fit.to_dict(lam=self.lam)
        return d


@dataclass(frozen=True)
class WindowReport:
    """Fenêtre d'acceptation spectrale centrée sur un pic."""

    center_ev: float
    width_ev: float
    counts_in_window: float
    background_in_window: float
    peak_fractions: Tuple[float, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "center_ev": self.center_ev,
            "width_ev": self.width_ev,
            "counts_in_window": self.counts_in_window,
            "background_in_window": self.background_in_window,
            "peak_fractions": list(self.peak_fractions),
        }


# ═══════════════════════════════════════════════════════════════
# Synthèse
# ═══════════════════════════════════════════════════════════════


def lorentzian_density(energy_ev: Any, center_ev: float, fwhm_ev: float) -> np.ndarray:
    """Densité lorentzienne d'aire unité."""
    return LorentzianPeak(center_ev, fwhm_ev, 1.0).density(energy_ev)


def synthesize(
    model: PeakModel,
    axis_ev: Any,
    noise: str = "none",
    seed: Optional[int] = None,
    metadata: Optional[Dict[str, str]] = None,
) -> Spectrum:
    """
    Spectre modèle : fond + Σ pics, avec bruit de Poisson optionnel.

    noise : "none" (courbe exacte) ou "poisson" (déterministe pour un seed donné).
    """
    axis = np.asarray(axis_ev, dtype=float)
    mean = model.evaluate(axis)
    meta = dict(metadata or {})
    meta["noise"] = noise

    if noise == "none":
        counts = mean
    elif noise == "poisson":
        rng = np.random.default_rng(seed)
        counts = rng.poisson(mean).astype(float)
        meta["seed"] = str(seed)
    else:
        raise DomainError(f"modèle de bruit inconnu : {noise!r}")

    return Spectrum(axis, counts, meta)


# ═══════════════════════════════════════════════════════════════
# Ajustement multi-pics
# ═══════════════════════════════════════════════════════════════


def _reduced_axis(axis: np.ndarray) -> Tuple[np.ndarray, float, float]:
    e0 = 0.5 * (axis[0] + axis[-1])
    h = float(np.median(np.diff(axis)))
    return (axis - e0) / h, e0, h


def _peak_sum(u: np.ndarray, du: np.ndarray, p: np.ndarray, n_peaks: int) -> np.ndarray:
    total = np.zeros_like(u)
    for i in range(n_peaks):
        c, w, a = p[1 + 3 * i: 4 + 3 * i]
        hw = 0.5 * w
        total += a * (hw / np.pi) / ((u - c) ** 2 + hw * hw) * du
    return total


def _initial_guess(u: np.ndarray, y: np.ndarray, n_peaks: int) -> np.ndarray:
    """Maxima locaux au-dessus de fond + 5·√fond, par proéminence décroissante."""
    du = np.gradient(u)
    bg0 = max(float(np.percentile(y, 10)), 0.0)
    threshold = bg0 + 5.0 * math.sqrt(bg0)

    idx, props = signal.find_peaks(y, height=threshold, prominence=0.0)
    if idx.size:
        keep = np.argsort(props["prominences"], kind="stable")[::-1][:n_peaks]
        idx = np.sort(idx[keep])
    else:
        idx = np.array([int(np.argmax(y))])

    widths = signal.peak_widths(y, idx, rel_height=0.5)[0] * du[idx]
    widths = np.maximum(widths, 3.0 * du[idx])

    seeds: List[Tuple[float, float, float]] = []
    for i, w in zip(idx, widths):
        height = max(float(y[i]) - bg0, 0.0)
        seeds.append((float(u[i]), float(w), height * math.pi * w / (2.0 * du[i])))

    # Pics manquants : de part et d'autre du plus intense
    strongest = max(seeds, key=lambda s: s[2])
    k = 0
    while len(seeds) < n_peaks:
        side = 1 if k % 2 == 0 else -1
        offset = (k // 2 + 1) * 2.0 * strongest[1] * side
        c = float(np.clip(strongest[0] + offset, u[0], u[-1]))
        seeds.append((c, strongest[1], 0.1 * strongest[2]))
        k += 1
    logger.debug("Initialisation: %d maxima retenus, fond %.3g", idx.size, bg0)

    seeds.sort(key=lambda s: s[0])
    p0 = [bg0]
    for s in seeds:
        p0.extend(s)
    return np.asarray(p0, dtype=float)


def _params_from_model(model: PeakModel, e0: float, h: float) -> np.ndarray:
    p = [model.background]
    for pk in model.peaks:
        p.extend([(pk.center_ev - e0) / h, pk.fwhm_ev / h, pk.area])
    return np.asarray(p, dtype=float)


def _bounds(u: np.ndarray, n_peaks: int) -> Tuple[np.ndarray, np.ndarray]:
    span = float(u[-1] - u[0])
    lower = [0.0] + [u[0], 1e-3, 0.0] * n_peaks
    upper = [np.inf] + [u[-1], 10.0 * span, np.inf] * n_peaks
    return np.asarray(lower), np.asarray(upper)


def _least_squares(
    residual: Callable[[np.ndarray], np.ndarray],
    p0: np.ndarray,
    bounds: Tuple[np.ndarray, np.ndarray],
    max_nfev: int,
) -> optimize.OptimizeResult:
    lower, upper = bounds
    p0 = np.clip(p0, lower, upper)
    return optimize.least_squares(
        residual, p0, bounds=(lower, upper), method="trf", x_scale="jac", max_nfev=max_nfev,
    )


def _build_fit(
    res: optimize.OptimizeResult,
    e0: float,
    h: float,
    n_peaks: int,
    n_points: int,
) -> PeakFitResult:
    p = res.x
    n_par = p.size
    dof = max(n_points - n_par, 1)
    rss = float(2.0 * res.cost)
    jtj = res.jac.T @ res.jac
    cov = np.linalg.pinv(jtj) * (rss / dof)
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    peaks = []
    uncertainties = []
    for i in range(n_peaks):
        c, w, a = p[1 + 3 * i: 4 + 3 * i]
        ec, ew, ea = err[1 + 3 * i: 4 + 3 * i]
        peaks.append((LorentzianPeak(e0 + c * h, w * h, a), PeakUncertainty(ec * h, ew * h, ea)))
    peaks.sort(key=lambda t: t[0].center_ev)
    model = PeakModel(tuple(pk for pk, _ in peaks), float(p[0]))

    warnings: List[str] = []
    for a, b in zip(model.peaks, model.peaks[1:]):
        if b.center_ev - a.center_ev < COLLAPSE_FRACTION * min(a.fwhm_ev, b.fwhm_ev):
            msg = (
                f"pics confondus : centres {a.center_ev:.9f} et {b.center_ev:.9f} eV "
                f"à moins de {COLLAPSE_FRACTION}·Γ"
            )
            logger.warning(msg)
            warnings.append(msg)

    return PeakFitResult(
        model=model,
        uncertainties=tuple(u for _, u in peaks),
        background_err=float(err[0]),
        residual=rss,
        n_points=n_points,
        nfev=int(res.nfev),
        warnings=tuple(warnings),
    )


def fit_peaks(
    spectrum: Spectrum,
    n_peaks: int,
    init: Optional[PeakModel] = None,
    *,
    max_nfev: int = 2000,
) -> PeakFitResult:
    """
    Moindres carrés non linéaires : {centre, FWHM, aire} × n + fond constant.

    Lève FitConvergenceError (avec le meilleur modèle) si le budget
    d'évaluations est épuisé.
    """
    if n_peaks < 1:
        raise DomainError("n_peaks doit être ≥ 1")
    min_points = 5 * (3 * n_peaks + 1)
    if spectrum.n_points < min_points:
        raise DomainError(f"{spectrum.n_points} points < {min_points} requis pour {n_peaks} pic(s)")
    if init is not None and len(init.peaks) != n_peaks:
        raise DomainError(f"init contient {len(init.peaks)} pic(s), {n_peaks} attendu(s)")

    u, e0, h = _reduced_axis(spectrum.energy_ev)
    du = np.gradient(u)
    y = spectrum.counts
    p0 = _params_from_model(init, e0, h) if init is not None else _initial_guess(u, y, n_peaks)
    dump("fit_peaks p0 (unités réduites)", p0.tolist(), logger=logger)

    def residual(p: np.ndarray) -> np.ndarray:
        return p[0] + _peak_sum(u, du, p, n_peaks) - y

    res = _least_squares(residual, p0, _bounds(u, n_peaks), max_nfev)
    result = _build_fit(res, e0, h, n_peaks, y.size)
    if res.status == 0:
        raise FitConvergenceError(f"fit_peaks non convergé après {res.nfev} évaluations", best=result)

    logger.info(
        "Ajustement %d pic(s): FWHM %s μeV, résidu %.4g",
        n_peaks, ", ".join(f"{p.fwhm_ev * 1e6:.2f}" for p in result.model.peaks), result.residual,
    )
    return result


# ═══════════════════════════════════════════════════════════════
# Convolution par la réponse instrumentale
# ═══════════════════════════════════════════════════════════════


def _uniform_spacing(axis: np.ndarray) -> float:
    if axis.size < 2:
        raise DomainError("axe trop court")
    steps = np.diff(axis)
    h = float(steps.mean())
    if h <= 0 or not np.allclose(steps, h, rtol=UNIFORM_RTOL, atol=0.0):
        raise DomainError("axe non uniforme en énergie : rééchantillonner d'abord")
    return h


class _IrfOperator:
    """
    Opérateur de convolution discret sur la grille étendue.

    La grille étendue compte n_ext points de plus de chaque côté ; la sortie
    est restreinte aux n points observés.
    """

    def __init__(self, irf: InstrumentResponse, spacing_ev: float, n_points: int) -> None:
        self.irf = irf
        self.h = spacing_ev
        self.n = n_points
        self.n_ext = int(math.ceil(IRF_EXTENSION_FWHM * irf.fwhm_ev / spacing_ev))
        self.m = n_points + 2 * self.n_ext
        self.kernel = irf.kernel(spacing_ev, self.m - 1)
        if spacing_ev > irf.fwhm_ev / 5.0:
            logger.warning(
                "Pas %.3g μeV > FWHM(IRF)/5 = %.3g μeV : réponse sous-échantillonnée",
                spacing_ev * 1e6, irf.fwhm_ev * 0.2e6,
            )

    def extended_axis(self, axis: np.ndarray) -> np.ndarray:
        return axis[0] + self.h * np.arange(-self.n_ext, self.n + self.n_ext)

    def apply(self, x_ext: np.ndarray) -> np.ndarray:
        full = signal.fftconvolve(x_ext, self.kernel, mode="same")
        return full[self.n_ext: self.n_ext + self.n]

    def matrix(self) -> np.ndarray:
        """K (n × m), Toeplitz symétrique restreinte aux lignes observées."""
        half = self.kernel[self.m - 1:]
        return linalg.toeplitz(half)[self.n_ext: self.n_ext + self.n, :]


def convolve(model: PeakModel, irf: InstrumentResponse, axis_ev: Any) -> Spectrum:
    """Spectre modèle convolué par la réponse instrumentale (fond ajouté après)."""
    axis = np.asarray(axis_ev, dtype=float)
    h = _uniform_spacing(axis)
    op = _IrfOperator(irf, h, axis.size)
    x_ext = model.peak_counts(op.extended_axis(axis))
    y = np.clip(op.apply(x_ext), 0.0, None) + model.background
    return Spectrum(axis, y, {"irf_fwhm_ev": repr(irf.fwhm_ev)})


# ═══════════════════════════════════════════════════════════════
# Déconvolution
# ═══════════════════════════════════════════════════════════════


def discrepancy_lambda(K: np.ndarray, y: np.ndarray, background: float = 0.0) -> float:
    """
    λ par le principe de Morozov sur la solution de Tikhonov non contrainte.

    Cible : ‖Kx_λ - (y - fond)‖² = Σ max(y_i, 1) (variance de Poisson).
    """
    U, s, _ = np.linalg.svd(K, full_matrices=False)
    r = np.asarray(y, dtype=float) - background
    coef = U.T @ r
    perp = max(float(r @ r - coef @ coef), 0.0)
    target = float(np.sum(np.maximum(y, 1.0)))
    s2 = s * s

    def excess(log_lam: float) -> float:
        lam = math.exp(log_lam)
        f = lam / (s2 + lam)
        return float(np.sum((f * coef) ** 2)) + perp - target

    smax2 = float(s2[0])
    lo, hi = math.log(1e-12 * smax2), math.log(1e2 * smax2)
    if excess(lo) >= 0:
        return math.exp(lo)
    if excess(hi) <= 0:
        return math.exp(hi)
    return math.exp(optimize.brentq(excess, lo, hi, xtol=1e-6))


def _mfista(
    A: np.ndarray,
    y: np.ndarray,
    lam: float,
    reg_mask: np.ndarray,
    z0: np.ndarray,
    max_iter: int,
    tol: float,
) -> Tuple[np.ndarray, np.ndarray, bool]:
    """
    FISTA monotone projeté sur z ≥ 0 pour ‖Az - y‖² + λ‖mask·z‖².

    Retourne (z, historique de l'objectif, convergé).
    """
    lip = 2.0 * (np.linalg.norm(A, 2) ** 2 + lam)

    def objective(z: np.ndarray) -> float:
        r = A @ z - y
        zr = z * reg_mask
        return float(r @ r + lam * (zr @ zr))

    def gradient(z: np.ndarray) -> np.ndarray:
        return 2.0 * (A.T @ (A @ z - y)) + 2.0 * lam * reg_mask * z

    x_prev = np.maximum(z0, 0.0)
    f_prev = objective(x_prev)
    history = [f_prev]
    yk = x_prev.copy()
    t = 1.0
    stalls = 0

    for _ in range(max_iter):
        zk = np.maximum(yk - gradient(yk) / lip, 0.0)
        fz = objective(zk)
        if fz <= f_prev:
            x_new, f_new = zk, fz
        else:
            x_new, f_new = x_prev, f_prev
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        yk = x_new + (t / t_new) * (zk - x_new) + ((t - 1.0) / t_new) * (x_new - x_prev)
        history.append(f_new)

        if x_new is zk and (f_prev - f_new) <= tol * max(f_new, 1e-300):
            stalls += 1
        else:
            stalls = 0
        x_prev, f_prev, t = x_new, f_new, t_new
        if stalls >= 5:
            return x_prev, np.asarray(history), True

    return x_prev, np.asarray(history), False


def deconvolve(
    spectrum: Spectrum,
    irf: InstrumentResponse,
    lam: Optional[float] = None,
    *,
    n_peaks: Optional[int] = 1,
    max_iter: int = 5000,
    tol: float = 1e-10,
    resample: bool = True,
) -> DeconvolutionResult:
    """
    Résout min ‖K·x + b - y‖² + λ‖x‖², x ≥ 0, b ≥ 0 (fond non régularisé).

    λ=None : règle de Morozov (discrepancy_lambda). Si n_peaks est fourni,
    ajuste ensuite n_peaks lorentziennes intrinsèques (reconvolution).
    """
    if lam is not None and (not math.isfinite(lam) or lam < 0):
        raise DomainError(f"λ doit être ≥ 0 (reçu {lam!r})")

    if not spectrum.is_uniform(UNIFORM_RTOL):
        if not resample:
            raise DomainError("axe non uniforme en énergie")
        logger.info("Rééchantillonnage uniforme en énergie avant déconvolution")
        spectrum = spectrum.resample_uniform()

    axis = spectrum.energy_ev
    y = spectrum.counts
    h = _uniform_spacing(axis)
    op = _IrfOperator(irf, h, axis.size)
    K = op.matrix()
    n, m = K.shape
    warnings: List[str] = []

    b0 = max(float(np.percentile(y, 10)), 0.0)
    if lam is None:
        lam = discrepancy_lambda(K, y, b0)
        logger.info("λ (Morozov) = %.4g", lam)
    elif lam == 0.0:
        cond = float(np.linalg.cond(K))
        if cond > ILL_CONDITIONED:
            msg = f"opérateur mal conditionné (cond={cond:.3g}) avec λ=0"
            logger.warning(msg)
            warnings.append(msg)

    # Colonne de fond normalisée pour garder un pas de gradient équilibré
    scale_b = 1.0 / math.sqrt(n)
    A = np.hstack([K, np.full((n, 1), scale_b)])
    reg_mask = np.ones(m + 1)
    reg_mask[-1] = 0.0

    z0 = np.zeros(m + 1)
    z0[op.n_ext: op.n_ext + n] = np.maximum(y - b0, 0.0)
    z0[-1] = b0 / scale_b

    z, history, converged = _mfista(A, y, lam, reg_mask, z0, max_iter, tol)
    if not converged:
        msg = f"déconvolution : tolérance non atteinte après {max_iter} itérations"
        logger.warning(msg)
        warnings.append(msg)
    logger.debug("Objectif: %.6g -> %.6g en %d itérations", history[0], history[-1], history.size - 1)

    background = float(z[-1] * scale_b)
    x_obs = z[op.n_ext: op.n_ext + n]
    meta = dict(spectrum.metadata)
    meta.update({"deconvolved": "true", "irf_fwhm_ev": repr(irf.fwhm_ev), "lambda": repr(float(lam))})
    intrinsic = Spectrum(axis, x_obs + background, meta)

    direct_fit = fit = None
    if n_peaks is not None:
        try:
            direct_fit = fit_peaks(intrinsic, n_peaks)
            seed_model = direct_fit.model
        except FitConvergenceError as exc:
            logger.warning("Ajustement direct de x non convergé, poursuite avec le meilleur modèle")
            direct_fit = exc.best
            seed_model = exc.best.model
        fit = reconvolution_fit(spectrum, irf, n_peaks, seed_model)
        warnings.extend(fit.warnings)

    return DeconvolutionResult(
        intrinsic=intrinsic,
        fit=fit,
        direct_fit=direct_fit,
        lam=float(lam),
        background=background,
        objective_history=history,
        iterations=int(history.size - 1),
        converged=converged,
        warnings=tuple(warnings),
    )


def reconvolution_fit(
    spectrum: Spectrum,
    irf: InstrumentResponse,
    n_peaks: int,
    init: PeakModel,
    *,
    max_nfev: int = 2000,
) -> PeakFitResult:
    """
    Paramètres intrinsèques : ajuste (modèle ⊛ IRF + fond) aux comptes mesurés.

    L'axe doit être uniforme.
    """
    if len(init.peaks) != n_peaks:
        raise DomainError(f"init contient {len(init.peaks)} pic(s), {n_peaks} attendu(s)")
    axis = spectrum.energy_ev
    y = spectrum.counts
    h = _uniform_spacing(axis)
    op = _IrfOperator(irf, h, axis.size)

    ext = op.extended_axis(axis)
    e0 = 0.5 * (axis[0] + axis[-1])
    u_ext = (ext - e0) / h
    du = np.ones_like(u_ext)
    u_obs = u_ext[op.n_ext: op.n_ext + axis.size]

    p0 = _params_from_model(init, e0, h)
    min_w = irf.fwhm_ev / h * 1e-3
    lower, upper = _bounds(u_obs, n_peaks)
    lower[2::3] = min_w

    def residual(p: np.ndarray) -> np.ndarray:
        return p[0] + op.apply(_peak_sum(u_ext, du, p, n_peaks)) - y

    res = _least_squares(residual, p0, (lower, upper), max_nfev)
    result = _build_fit(res, e0, h, n_peaks, y.size)
    if res.status == 0:
        raise FitConvergenceError(f"reconvolution non convergée après {res.nfev} évaluations", best=result)

    logger.info(
        "Largeurs intrinsèques (IRF %.1f μeV): %s μeV",
        irf.fwhm_ev * 1e6, ", ".join(f"{p.fwhm_ev * 1e6:.2f}" for p in result.model.peaks),
    )
    return result


# ═══════════════════════════════════════════════════════════════
# Fenêtre d'acceptation spectrale
# ═══════════════════════════════════════════════════════════════


def acceptance_window(
    spectrum: Spectrum,
    model: PeakModel,
    center_ev: float,
    width_ev: float = ACCEPTANCE_WINDOW_EV,
) -> WindowReport:
    """
    Comptes dans ±width/2 autour de center, et fraction de l'aire de chaque pic
    du modèle transmise par cette fenêtre.
    """
    if width_ev <= 0:
        raise DomainError("largeur de fenêtre ≤ 0")
    lo, hi = center_ev - 0.5 * width_ev, center_ev + 0.5 * width_ev
    mask = (spectrum.energy_ev >= lo) & (spectrum.energy_ev <= hi)
    fractions = []
    for p in model.peaks:
        hw = 0.5 * p.fwhm_ev
        fractions.append(
            float((math.atan((hi - p.center_ev) / hw) - math.atan((lo - p.center_ev) / hw)) / math.pi)
        )
    return WindowReport(
        center_ev=float(center_ev),
        width_ev=float(width_ev),
        counts_in_window=float(spectrum.counts[mask].sum()),
        background_in_window=float(model.background * mask.sum()),
        peak_fractions=tuple(fractions),
    )


def scenario_model(
    centers_ev: Sequence[float],
    fwhms_ev: Sequence[float],
    areas: Sequence[float],
    background: float = 0.0,
) -> PeakModel:
    """Raccourci de construction d'un PeakModel à partir de listes parallèles."""
    if not (len(centers_ev) == len(fwhms_ev) == len(areas)):
        raise DomainError("listes de pics de longueurs différentes")
    return PeakModel(
        tuple(LorentzianPeak(c, w, a) for c, w, a in zip(centers_ev, fwhms_ev, areas)),
        background,
    )
