"""Hiérarchie d'exceptions de qdphot.

Le CLI traduit chaque famille en code de sortie (voir ``qdphot.cli``).
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Optional


class QdotError(Exception):
    """Erreur générique qdphot."""


class DomainError(QdotError, ValueError):
    """Paramètre hors domaine ou précondition violée."""


class FitConvergenceError(QdotError):
    """Ajustement non convergé ; ``best`` contient le meilleur résultat obtenu."""

    def __init__(self, message: str, best: Any = None) -> None:
        super().__init__(message)
        self.best = best


class ParseError(QdotError):
    """Fichier d'entrée mal formé (le message nomme le fichier et la ligne)."""

    def __init__(self, message: str, path: Optional[Path] = None, line: Optional[int] = None) -> None:
        self.path = path
        self.line = line
        where = f"{path}" if path is not None else "<input>"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}")
