#!/usr/bin/env python3
"""
Rejoue le scénario de référence complet avec le CLI qdphot.

Point d'entrée principal :
  poetry run python scripts/reproduce_figures.py [dossier] [--seed N] [--long]

Le script :
1. Synthétise le spectre à deux pics (P1 919.108 nm, P2 918.891 nm), convolué
   par une IRF de 25 μeV, puis l'ajuste et le déconvolue
2. Synthétise un diagramme polaire (β = 0.25, θ = 10°) et l'ajuste
3. Simule le HBT (source à g²(0) visé 0.3) et estime g²(0)
4. Synthétise une carte 5×8 de QDs et cherche les paires < 300 μeV
5. Affiche un résumé des valeurs clés

Toutes les sorties (csv, json, svg) sont écrites sous <dossier>/<étape>.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List

# Ajouter le projet au path pour accéder à qdphot
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from qdphot.cli import run
from qdphot.logging_config import setup_logging

logger = logging.getLogger(__name__)

FORMATS = "csv,json,svg"


def _step(name: str, argv: List[str]) -> None:
    logger.info("─" * 60)
    logger.info("[%s] qdphot %s", name, " ".join(argv))
    code = run(argv)
    if code != 0:
        logger.error("[%s] échec (code %d)", name, code)
        sys.exit(code)


def _load(path: Path) -> Dict[str, Any]:
    return json.loads(path.read_text(encoding="utf-8"))


def main() -> None:
    parser = argparse.ArgumentParser(description="Scénario de référence qdphot")
    parser.add_argument("out", nargs="?", default="scenario", help="dossier de sortie")
    parser.add_argument("--seed", default="42")
    parser.add_argument("--long", action="store_true", help="HBT sur 10^7 impulsions (0.125 s)")
    args = parser.parse_args()

    setup_logging()
    logger.info("=" * 60)
    logger.info("SCÉNARIO DE RÉFÉRENCE")
    logger.info("=" * 60)

    root = Path(args.out)
    common = ["--seed", args.seed, "--format", FORMATS]
    duration = "0.125" if args.long else "0.0125"

    # 1. Spectre
    spectra = root / "spectrum"
    _step("synth", ["synth", "--irf-fwhm-uev", "25", "--out", str(spectra), *common])
    _step("fit", ["fit", str(spectra / "spectrum.csv"), "--out", str(root / "fit"), *common])
    _step("deconv", [
        "deconv", str(spectra / "spectrum.csv"), "--irf-fwhm-uev", "25",
        "--out", str(root / "deconv"), *common,
    ])

    # 2. Polarisation
    polar = root / "polar"
    _step("synth polar", ["synth", "--kind", "polar", "--theta-deg", "10", "--out", str(polar), *common])
    _step("polar-fit", ["polar-fit", str(polar / "polar.csv"), "--out", str(root / "polar-fit"), *common])

    # 3. HBT
    hbt = root / "hbt"
    _step("hbt-sim", [
        "hbt-sim", "--duration-s", duration, "--target-g2", "0.3",
        "--workers", str(os.cpu_count() or 1), "--out", str(hbt), *common,
    ])
    _step("g2", ["g2", str(hbt / "histogram.csv"), "--out", str(root / "g2"), *common])

    # 4. Carte de QDs
    array = root / "array"
    _step("synth array", ["synth", "--kind", "array", "--out", str(array), *common])
    _step("array-stats", ["array-stats", str(array / "array.csv"), "--out", str(root / "array-stats"), *common])

    # 5. Résumé
    fit = _load(root / "fit" / "fit.json")["fit"]
    deconv = _load(root / "deconv" / "deconv.json")["deconvolution"]
    polar_fit = _load(root / "polar-fit" / "polar-fit.json")["fit"]
    g2 = _load(root / "g2" / "g2.json")["g2"]
    stats = _load(root / "array-stats" / "array-stats.json")

    logger.info("=" * 60)
    logger.info("RÉSUMÉ")
    logger.info("=" * 60)
    intrinsic = deconv.get("intrinsic_fit", {}).get("peaks", [])
    for label, peaks in (("fit direct", fit["peaks"]), ("déconvolution", intrinsic)):
        widths = ", ".join(f"{pk['fwhm_ev'] * 1e6:.1f}" for pk in peaks)
        logger.info("FWHM %s : %s μeV", label, widths)
    logger.info("Séparation P1-P2 : %.1f μeV", fit["splitting_ev"][0] * 1e6)
    logger.info(
        "Polarisation : β = %.3f ± %.3f, axe majeur %.1f°",
        polar_fit["beta"], polar_fit["beta_err"], polar_fit["major_axis_deg"],
    )
    logger.info("g²(0) = %.4f (borne sup. %.4f)", g2["g2_zero"], g2["upper_bound"])
    logger.info(
        "Carte : %.2f ± %.2f nm, %d paire(s) < %.0f μeV",
        stats["stats"]["mean_nm"], stats["stats"]["std_nm"],
        stats["pairs"]["n_pairs"], stats["pairs"]["threshold_ev"] * 1e6,
    )


if __name__ == "__main__":
    main()
