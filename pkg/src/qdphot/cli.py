#!/usr/bin/env python3
"""
qdphot.cli
==========

CLI principal de qdphot : spectres, structure fine, statistique de photons
et cartes de QDs.

Usage:
    qdphot synth           # Génère un spectre / diagramme polaire / carte synthétique
    qdphot fit             # Ajuste n lorentziennes sur un spectre
    qdphot deconv          # Déconvolue un spectre de la réponse instrumentale
    qdphot polar-fit       # Ajuste β, θ sur un diagramme de polarisation
    qdphot hbt-sim         # Simule un montage HBT (horodatages + histogramme)
    qdphot g2              # Estime g²(0) et la pureté depuis tags ou histogramme
    qdphot array-stats     # Uniformité d'une carte de QDs et paires proches

Options communes (après la sous-commande):
    --seed N      seed maître (enregistré dans chaque rapport)
    --out DIR     dossier de sortie (rapports, CSV, SVG, logs/)
    --format F    liste parmi csv,json,svg (défaut : csv,json)
    --config F    fichier clé=valeur (voir qdphot.config)
    --workers N   threads de simulation (hbt-sim ; sans effet sur les résultats)

Codes de sortie:
    0    succès
    1    erreur d'usage ou paramètre hors domaine
    2    erreur d'entrée/sortie ou fichier mal formé
    3    ajustement non convergé
    130  interruption (Ctrl+C)
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from typing import Any, Dict, Optional, Sequence

import numpy as np
from dotenv import load_dotenv

from qdphot.config import (
    CHOICES,
    COMMANDS_WITH_INPUT,
    PARAMS,
    RunConfig,
    build_config,
    load_config,
)
from qdphot.errors import DomainError, FitConvergenceError, ParseError
from qdphot.logging_config import setup_logging
from qdphot.utils import write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NOT_CONVERGED = 3
EXIT_INTERRUPTED = 130


def _banner(title: str) -> None:
    logger.info("=" * 70)
    logger.info("COMMANDE: %s", title)
    logger.info("=" * 70)


def _report(cfg: RunConfig, payload: Dict[str, Any]) -> None:
    """Écrit <out>/<commande>.json si le format json est demandé."""
    if not cfg.wants("json"):
        return
    payload = dict(payload)
    payload["config"] = cfg.report_config()
    path = write_json(cfg.output(f"{cfg.command}.json"), payload)
    logger.info("Rapport: %s", path)


# ═══════════════════════════════════════════════════════════════════════════════
# COMMANDES INDIVIDUELLES
# ═══════════════════════════════════════════════════════════════════════════════


def _spectrum_axis(p: Dict[str, Any], centers_ev: Sequence[float]) -> np.ndarray:
    spacing = p["spacing_uev"] * 1e-6
    half = p["half_span_uev"] * 1e-6
    if spacing <= 0 or half <= spacing:
        raise DomainError("spacing_uev > 0 et half_span_uev > spacing_uev requis")
    mid = 0.5 * (min(centers_ev) + max(centers_ev))
    n = int(round(2.0 * half / spacing))
    return mid + spacing * (np.arange(n + 1) - 0.5 * n)


def cmd_synth(cfg: RunConfig) -> int:
    """
    Génère des données synthétiques.

    - kind=spectrum : spectre à deux pics (P1 brillant, P2 plus faible),
      optionnellement convolué par l'IRF
    - kind=polar    : diagramme de polarisation pour (β, γ, θ), pas du polariseur
    - kind=array    : carte de QDs à longueurs d'onde gaussiennes
    """
    p = cfg.params
    _banner(f"synth (kind={p['kind']}, noise={p['noise']}, seed={cfg.master_seed})")
    seed = cfg.master_seed
    payload: Dict[str, Any] = {"kind": p["kind"]}

    if p["kind"] == "spectrum":
        from qdphot.adapters.csv_formats import write_spectrum
        from qdphot.lineshape import convolve, scenario_model, synthesize
        from qdphot.models import InstrumentResponse, Spectrum
        from qdphot.spectral import ev_to_uev, wavelength_to_energy

        centers = [float(wavelength_to_energy(p["p1_nm"])), float(wavelength_to_energy(p["p2_nm"]))]
        model = scenario_model(
            centers,
            [p["p1_fwhm_uev"] * 1e-6, p["p2_fwhm_uev"] * 1e-6],
            [p["p1_area"], p["p2_area"]],
            p["background"],
        )
        axis = _spectrum_axis(p, centers)
        meta = {"seed": str(seed), "noise": p["noise"]}
        if p["irf_fwhm_uev"] > 0:
            mean = convolve(model, InstrumentResponse(p["irf_fwhm_uev"] * 1e-6), axis).counts
            meta["irf_fwhm_ev"] = repr(p["irf_fwhm_uev"] * 1e-6)
            if p["noise"] == "poisson":
                mean = np.random.default_rng(seed).poisson(mean).astype(float)
            spectrum = Spectrum(axis, mean, meta)
        else:
            spectrum = synthesize(model, axis, noise=p["noise"], seed=seed, metadata=meta)

        write_spectrum(cfg.output("spectrum.csv"), spectrum)
        payload.update({
            "model": model.to_dict(),
            "splitting_uev": float(ev_to_uev(model.splitting()[0])),
            "n_points": spectrum.n_points,
            "total_counts": spectrum.total_counts(),
        })
        if cfg.wants("svg"):
            from qdphot.adapters.svg_plots import plot_spectrum
            plot_spectrum(spectrum, cfg.output("synth.svg"), title="spectre synthétique")

    elif p["kind"] == "polar":
        from qdphot.adapters.csv_formats import write_polar
        from qdphot.finestructure import dipoles_from_mixing, pattern_extrema, synthesize_polar
        from qdphot.models import HoleMixingParams

        if not (0 < p["step_deg"] <= 90):
            raise DomainError(f"step_deg hors de ]0, 90] : {p['step_deg']}")
        params = HoleMixingParams(p["beta"], p["gamma"], math.radians(p["theta_deg"]), 0.0)
        angles = np.arange(0.0, 360.0, p["step_deg"])
        pattern = synthesize_polar(params, angles, p["mean_intensity"], noise=p["noise"], seed=seed)
        write_polar(cfg.output("polar.csv"), pattern, {
            "beta": repr(p["beta"]), "gamma": repr(p["gamma"]), "theta_deg": repr(p["theta_deg"]),
            "seed": str(seed), "noise": p["noise"],
        })
        i_max, i_min, major = pattern_extrema(dipoles_from_mixing(params))
        payload.update({
            "mixing": params.to_dict(),
            "ellipticity": i_max / i_min if i_min > 0 else None,
            "major_axis_deg": major,
            "n_points": len(pattern),
        })
        if cfg.wants("svg"):
            from qdphot.adapters.svg_plots import plot_polar
            plot_polar(pattern, cfg.output("synth.svg"))

    else:
        from qdphot.adapters.csv_formats import write_array
        from qdphot.array_map import synthetic_array

        m = synthetic_array(p["rows"], p["cols"], p["mean_nm"], p["std_nm"], seed=seed)
        write_array(cfg.output("array.csv"), m, {"seed": str(seed)})
        payload.update({"rows": m.rows, "cols": m.cols, "n": len(m)})
        if cfg.wants("svg"):
            from qdphot.adapters.svg_plots import plot_array_map
            plot_array_map(m, cfg.output("synth.svg"))

    _report(cfg, payload)
    return EXIT_OK


def cmd_fit(cfg: RunConfig) -> int:
    """Ajuste n_peaks lorentziennes + fond, puis la fenêtre d'acceptation du pic principal."""
    from qdphot.adapters.csv_formats import read_spectrum
    from qdphot.lineshape import acceptance_window, fit_peaks

    p = cfg.params
    _banner(f"fit ({cfg.input_path.name}, {p['n_peaks']} pic(s))")
    spectrum = read_spectrum(cfg.input_path)
    result = fit_peaks(spectrum, p["n_peaks"])

    brightest = max(result.model.peaks, key=lambda pk: pk.area)
    window = acceptance_window(spectrum, result.model, brightest.center_ev, p["window_uev"] * 1e-6)
    logger.info(
        "Fenêtre ±%.0f μeV: %.1f %% du pic principal transmis",
        0.5 * p["window_uev"], 100.0 * window.peak_fractions[result.model.peaks.index(brightest)],
    )

    _report(cfg, {"fit": result.to_dict(), "acceptance_window": window.to_dict()})
    if cfg.wants("svg"):
        from qdphot.adapters.svg_plots import plot_spectrum
        plot_spectrum(spectrum, cfg.output("fit.svg"), fit=result)
    return EXIT_OK


def cmd_deconv(cfg: RunConfig) -> int:
    """Déconvolution régularisée puis largeurs intrinsèques par reconvolution."""
    from qdphot.adapters.csv_formats import read_spectrum, write_spectrum
    from qdphot.lineshape import deconvolve
    from qdphot.models import InstrumentResponse

    p = cfg.params
    _banner(f"deconv ({cfg.input_path.name}, IRF {p['irf_fwhm_uev']} μeV)")
    spectrum = read_spectrum(cfg.input_path)
    irf = InstrumentResponse(p["irf_fwhm_uev"] * 1e-6)
    result = deconvolve(spectrum, irf, p["lam"], n_peaks=p["n_peaks"], max_iter=p["max_iter"])

    _report(cfg, {"deconvolution": result.to_dict(), "irf_fwhm_ev": irf.fwhm_ev})
    if cfg.wants("csv"):
        write_spectrum(cfg.output("deconv_intrinsic.csv"), result.intrinsic)
    if cfg.wants("svg"):
        from qdphot.adapters.svg_plots import plot_spectrum
        plot_spectrum(result.intrinsic, cfg.output("deconv.svg"), fit=result.direct_fit, title="spectre intrinsèque")
    return EXIT_OK


def cmd_polar_fit(cfg: RunConfig) -> int:
    """Ajuste (β, θ) à γ fixé ; ajoute l'inversion de la formule fermée et la fraction collectée."""
    from qdphot.adapters.csv_formats import read_polar
    from qdphot.finestructure import (
        beta_from_ellipticity,
        collection_fraction,
        dipoles_from_mixing,
        extend_polarizer_data,
        fit_polar,
    )
    from qdphot.models import CollectionGeometry

    p = cfg.params
    _banner(f"polar-fit ({cfg.input_path.name}, γ={p['gamma']})")
    pattern, _ = read_polar(cfg.input_path)
    if p["extend"]:
        pattern = extend_polarizer_data(pattern)
    result = fit_polar(pattern, fixed_gamma=p["gamma"])

    closed_beta: Optional[float] = None
    if math.isfinite(result.ellipticity) and result.ellipticity > 1.0:
        try:
            closed_beta = beta_from_ellipticity(result.ellipticity, p["gamma"])
        except DomainError as exc:
            logger.warning("Inversion de la formule fermée impossible: %s", exc)

    geometry = CollectionGeometry()
    pair = dipoles_from_mixing(result.params)
    fractions: Dict[str, Optional[float]] = {}
    for name, d in (("plus", pair.d_plus), ("minus", pair.d_minus)):
        fractions[name] = collection_fraction(d, geometry) if np.any(d) else None

    _report(cfg, {
        "fit": result.to_dict(),
        "beta_closed_form": closed_beta,
        "collection_fraction": fractions,
        "numerical_aperture": geometry.numerical_aperture,
    })
    if cfg.wants("svg"):
        from qdphot.adapters.svg_plots import plot_polar
        plot_polar(pattern, cfg.output("polar-fit.svg"), fit=result)
    return EXIT_OK


def cmd_hbt_sim(cfg: RunConfig) -> int:
    """
    Simule l'émetteur pulsé devant le HBT.

    Sorties : histogram.csv (toujours), tags.csv (format csv), rapport avec
    g²(0) estimé et g²(0) de référence sur les photons émis.
    """
    from qdphot.adapters.csv_formats import write_histogram, write_tags
    from qdphot.models import DetectorModel, EmitterModel
    from qdphot.photon_stats import correlate, estimate_g2, p_multi_for_g2, simulate_streams

    p = cfg.params
    _banner(f"hbt-sim ({p['duration_s']} s, seed={cfg.master_seed}, {cfg.workers} worker(s))")

    p_multi = p["p_multi"]
    if p["target_g2"] is not None:
        p_multi = p_multi_for_g2(p["target_g2"], p["p_excite"])
        logger.info("p_multi = %.5f pour g²(0) = %.3f", p_multi, p["target_g2"])
    emitter = EmitterModel(
        pulse_period_ns=p["pulse_period_ns"],
        lifetime_ns=p["lifetime_ns"],
        p_excite=p["p_excite"],
        p_multi=p_multi,
        saturation_power_nw=p["saturation_power_nw"],
        drive_power_nw=p["drive_power_nw"],
        poissonian_mean=p["poissonian_mean"],
    )
    detector = DetectorModel(
        efficiency=p["efficiency"],
        dark_rate_cps=p["dark_rate_cps"],
        dead_time_ns=p["dead_time_ns"],
        splitter_ratio=p["splitter_ratio"],
        jitter_ns=p["jitter_ns"],
    )
    sim = simulate_streams(emitter, (detector, detector), p["duration_s"], cfg.master_seed, workers=cfg.workers)
    hist = correlate(sim.stream_a, sim.stream_b, p["bin_width_ns"], p["tau_max_ns"])
    g2 = estimate_g2(hist)

    meta = {"seed": str(cfg.master_seed)}
    write_histogram(cfg.output("histogram.csv"), hist, meta)
    if cfg.wants("csv"):
        write_tags(cfg.output("tags.csv"), sim.stream_a, sim.stream_b, meta)

    _report(cfg, {
        "emitter": emitter.to_dict(),
        "detector": detector.to_dict(),
        "simulation": sim.to_dict(),
        "histogram": {"n_bins": hist.n_bins, "total": hist.total, "bin_width_ns": hist.bin_width_ns},
        "g2": g2.to_dict(),
    })
    if cfg.wants("svg"):
        from qdphot.adapters.svg_plots import plot_histogram
        plot_histogram(hist, cfg.output("hbt-sim.svg"))
    return EXIT_OK


def cmd_g2(cfg: RunConfig) -> int:
    """g²(0), borne supérieure et pureté, depuis un fichier d'horodatages ou un histogramme."""
    from qdphot.adapters.csv_formats import detect_kind, read_histogram, read_tags, write_histogram
    from qdphot.photon_stats import correlate, estimate_g2, fit_histogram, side_peak_chi2

    p = cfg.params
    kind = detect_kind(cfg.input_path)
    _banner(f"g2 ({cfg.input_path.name}, entrée {kind})")
    if kind == "tags":
        a, b, _ = read_tags(cfg.input_path)
        hist = correlate(a, b, p["bin_width_ns"], p["tau_max_ns"])
        if cfg.wants("csv"):
            write_histogram(cfg.output("g2_histogram.csv"), hist)
    elif kind == "g2":
        hist, _ = read_histogram(cfg.input_path)
    else:
        raise ParseError(f"horodatages ou histogramme attendus, fichier de type {kind!r}", cfg.input_path, 1)

    result = estimate_g2(hist, p["n_side_peaks"], p["background"])
    chi2, p_value = side_peak_chi2(result)
    payload: Dict[str, Any] = {
        "g2": result.to_dict(),
        "side_peak_homogeneity": {"chi2": chi2, "p_value": p_value},
    }

    fit = None
    if p["fit"]:
        try:
            fit = fit_histogram(hist, p["n_side_peaks"])
            payload["fit"] = dict(fit.to_dict(), converged=True)
        except FitConvergenceError as exc:
            logger.warning("Ajustement de l'histogramme non convergé: %s", exc)
            fit = exc.best
            payload["fit"] = dict(fit.to_dict(), converged=False)

    if result.purity is not None:
        logger.info("Pureté: %.4f", result.purity)
    _report(cfg, payload)
    if cfg.wants("svg"):
        from qdphot.adapters.svg_plots import plot_histogram
        plot_histogram(hist, cfg.output("g2.svg"), fit=fit)
    return EXIT_OK


def cmd_array_stats(cfg: RunConfig) -> int:
    """Uniformité (moyenne, écart-type) et paires de QDs à moins du seuil en énergie."""
    from qdphot.adapters.csv_formats import read_array
    from qdphot.array_map import find_pairs, uniformity_stats

    p = cfg.params
    _banner(f"array-stats ({cfg.input_path.name}, seuil {p['threshold_uev']} μeV)")
    m, _ = read_array(cfg.input_path)
    stats = uniformity_stats(m)
    pairs = find_pairs(m, p["threshold_uev"] * 1e-6)
    logger.info("%d paire(s) à moins de %.0f μeV", len(pairs), p["threshold_uev"])

    _report(cfg, {"stats": stats.to_dict(), "pairs": pairs.to_dict()})
    if cfg.wants("svg"):
        from qdphot.adapters.svg_plots import plot_array_map
        plot_array_map(m, cfg.output("array-stats.svg"))
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "fit": cmd_fit,
    "deconv": cmd_deconv,
    "polar-fit": cmd_polar_fit,
    "hbt-sim": cmd_hbt_sim,
    "g2": cmd_g2,
    "array-stats": cmd_array_stats,
}


# ═══════════════════════════════════════════════════════════════════════════════
# PARSER
# ═══════════════════════════════════════════════════════════════════════════════


class _Parser(argparse.ArgumentParser):
    """Erreur d'usage -> code 1 (argparse utilise 2, réservé ici aux erreurs d'E/S)."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: erreur: {message}\n")


def _add_params(sub: argparse.ArgumentParser, command: str) -> None:
    """Une option --nom-du-parametre par paramètre ; None = non fourni."""
    for name, (_, default, help_text) in PARAMS[command].items():
        sub.add_argument(
            "--" + name.replace("_", "-"),
            dest=name,
            default=None,
            choices=CHOICES.get(f"{command}.{name}"),
            help=f"{help_text} (défaut : {default})",
        )


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", default=None, help="seed maître 64 bits (défaut : 0)")
    common.add_argument("--out", default=None, help="dossier de sortie (défaut : out)")
    common.add_argument("--format", default=None, help="csv,json,svg (défaut : csv,json)")
    common.add_argument("--config", default=None, help="fichier de configuration clé=valeur")
    common.add_argument("--workers", default=None, help="threads pour hbt-sim (défaut : 1)")
    common.add_argument("-v", "--verbose", action="store_true", help="console en DEBUG")

    parser = _Parser(
        prog="qdphot",
        description="Boîte à outils pour sources de photons uniques à boîte quantique",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Exemples:
  qdphot synth --out data                       # spectre à deux pics bruité
  qdphot deconv data/spectrum.csv --out res     # largeurs intrinsèques
  qdphot synth --kind polar --out data --seed 7
  qdphot polar-fit data/polar.csv --out res --format json,svg
  qdphot hbt-sim --duration-s 0.125 --workers 4 --out hbt
  qdphot g2 hbt/histogram.csv --out res
        """,
    )
    subparsers = parser.add_subparsers(dest="command", help="Commande à exécuter")

    helps = {
        "synth": "Génère des données synthétiques (spectre, polaire, carte)",
        "fit": "Ajuste des lorentziennes sur un spectre",
        "deconv": "Déconvolue un spectre de la réponse instrumentale",
        "polar-fit": "Ajuste le mélange HH-LH sur un diagramme de polarisation",
        "hbt-sim": "Simule des horodatages HBT et leur histogramme",
        "g2": "Estime g²(0) et la pureté",
        "array-stats": "Statistiques d'uniformité et paires d'une carte de QDs",
    }
    inputs = {
        "fit": "spectre (# qdot-spectrum v1)",
        "deconv": "spectre (# qdot-spectrum v1)",
        "polar-fit": "données polaires (# qdot-polar v1)",
        "g2": "horodatages (# qdot-tags v1) ou histogramme (# qdot-g2 v1)",
        "array-stats": "carte de QDs (# qdot-array v1)",
    }

    # ─────────────────────────────────────────────────────────────
    # Sous-commandes (une option par paramètre de qdphot.config.PARAMS)
    # ─────────────────────────────────────────────────────────────
    for command, func in COMMANDS.items():
        sub = subparsers.add_parser(command, parents=[common], help=helps[command])
        if command in COMMANDS_WITH_INPUT:
            sub.add_argument("input", help=inputs[command])
        _add_params(sub, command)
        sub.set_defaults(func=func)

    return parser


# ═══════════════════════════════════════════════════════════════════════════════
# POINT D'ENTRÉE
# ═══════════════════════════════════════════════════════════════════════════════


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Exécute une commande et retourne le code de sortie (sans sys.exit)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    if not args.command:
        parser.print_help()
        return EXIT_OK

    console_level = logging.DEBUG if args.verbose else logging.INFO
    setup_logging(console_level=console_level)

    try:
        cfg = build_config(args.command, vars(args), load_config(args.config))
        setup_logging(cfg.output_dir / "logs", console_level=console_level)
        return args.func(cfg)
    except KeyboardInterrupt:
        logger.warning("Interruption utilisateur (Ctrl+C)")
        return EXIT_INTERRUPTED
    except FitConvergenceError as e:
        logger.error("Non-convergence: %s", e)
        return EXIT_NOT_CONVERGED
    except ParseError as e:
        logger.error("Fichier mal formé: %s", e)
        return EXIT_IO
    except DomainError as e:
        logger.error("Paramètre invalide: %s", e)
        return EXIT_USAGE
    except OSError as e:
        logger.error("Erreur d'entrée/sortie: %s", e)
        return EXIT_IO


def main() -> None:
    """Point d'entrée console (`qdphot`)."""
    load_dotenv()
    sys.exit(run())


if __name__ == "__main__":
    main()
