#!/usr/bin/env python3
"""
Configuration centralisée du logging pour qdphot.

Structure :
    <out>/logs/
    └── qdphot_YYYYMMDD_HHMMSS.log   # Log d'exécution (INFO par défaut)

Niveaux :
    - Console : INFO (messages importants, avertissements d'ajustement)
    - Fichier : INFO par défaut, DEBUG si LOG_LEVEL=DEBUG
      (en DEBUG : historique de l'objectif de déconvolution, paramètres initiaux)

Usage :
    qdphot fit spectrum.csv --out results
    LOG_LEVEL=DEBUG qdphot deconv spectrum.csv --out results

Les rapports JSON ne contiennent jamais d'horodatage : seuls les logs en ont.
Nettoyage automatique des logs > 7 jours au démarrage.
"""

import os
import json
import logging
from pathlib import Path
from datetime import datetime, timedelta
from typing import Optional

# ══════════════════════════════════════════════════════════════════════════════
# CONFIGURATION
# ══════════════════════════════════════════════════════════════════════════════

LOG_RETENTION_DAYS = 7
LOG_PREFIX = "qdphot"

# Niveau par défaut, LOG_LEVEL=DEBUG (environnement ou .env) le remplace
DEFAULT_LEVEL = "INFO"

# Formats
CONSOLE_FORMAT = "%(levelname)s | %(message)s"
FILE_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"


# ══════════════════════════════════════════════════════════════════════════════
# NETTOYAGE AUTOMATIQUE
# ══════════════════════════════════════════════════════════════════════════════


def _cleanup_old_files(directory: Path, pattern: str, days: int = LOG_RETENTION_DAYS) -> int:
    """Supprime les fichiers correspondant au pattern plus anciens que `days` jours."""
    if not directory.exists():
        return 0

    cutoff = datetime.now() - timedelta(days=days)
    deleted = 0

    for f in directory.glob(pattern):
        if f.is_file() and datetime.fromtimestamp(f.stat().st_mtime) < cutoff:
            try:
                f.unlink()
                deleted += 1
            except OSError:
                pass

    return deleted


# ══════════════════════════════════════════════════════════════════════════════
# CONFIGURATION DU LOGGING
# ══════════════════════════════════════════════════════════════════════════════


def setup_logging(log_dir: Optional[Path] = None, *, console_level: int = logging.INFO) -> Optional[Path]:
    """
    Configure le système de logging.

    - Console toujours active (niveau `console_level`)
    - Fichier `qdphot_*.log` dans `log_dir` si fourni (INFO ou DEBUG selon LOG_LEVEL)
    - Nettoie les logs > 7 jours

    Retourne le chemin du fichier de log, ou None si pas de fichier.
    """
    level = getattr(logging, os.environ.get("LOG_LEVEL", DEFAULT_LEVEL).upper(), logging.INFO)

    root = logging.getLogger()
    root.setLevel(logging.DEBUG)  # Capture tout, filtrage par handlers
    for h in list(root.handlers):
        root.removeHandler(h)
        h.close()

    # Réduire le bruit des libs tierces
    for lib in ("matplotlib", "numba", "PIL", "fontTools"):
        logging.getLogger(lib).setLevel(logging.WARNING)

    console = logging.StreamHandler()
    console.setLevel(console_level)
    console.setFormatter(logging.Formatter(CONSOLE_FORMAT))
    root.addHandler(console)

    if log_dir is None:
        return None

    log_dir = Path(log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)
    cleaned = _cleanup_old_files(log_dir, f"{LOG_PREFIX}_*.log")

    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    log_file = log_dir / f"{LOG_PREFIX}_{timestamp}.log"
    file_handler = logging.FileHandler(log_file, encoding="utf-8")
    file_handler.setLevel(level)
    file_handler.setFormatter(logging.Formatter(FILE_FORMAT))
    root.addHandler(file_handler)

    mode = "DEBUG" if level == logging.DEBUG else "INFO"
    clean_msg = f", {cleaned} ancien(s) supprimé(s)" if cleaned else ""
    logging.getLogger(__name__).info(f"Logs: {log_file.name} (mode={mode}{clean_msg})")
    return log_file


# ══════════════════════════════════════════════════════════════════════════════
# HELPER DEBUG
# ══════════════════════════════════════════════════════════════════════════════


def dump(label: str, obj, *, logger: logging.Logger | None = None) -> None:
    """
    Affiche un objet en JSON formaté au niveau DEBUG.

    Ne fait rien si DEBUG n'est pas activé.

    Exemple:
        dump("Paramètres initiaux", {"beta": 0.2, "theta_deg": 4.0})
    """
    log = logger or logging.getLogger()
    if not log.isEnabledFor(logging.DEBUG):
        return
    log.debug("%s\n%s", label, json.dumps(obj, default=str, indent=2))
