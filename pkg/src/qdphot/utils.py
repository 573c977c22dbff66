"""Fonctions utilitaires partagées par les modules qdphot."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Any

import numpy as np

from qdphot.errors import DomainError


def fmt_number(x: float) -> str:
    """Forme canonique d'un nombre : entier si entier, sinon repr() du float (aller-retour exact)."""
    v = float(x)
    if math.isfinite(v) and v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def require_positive(name: str, value: float) -> float:
    """Vérifie value > 0 (et fini), sinon DomainError."""
    v = float(value)
    if not math.isfinite(v) or v <= 0:
        raise DomainError(f"{name} doit être > 0 (reçu {value!r})")
    return v


def require_fraction(name: str, value: float, *, closed_low: bool = True) -> float:
    """Vérifie value dans [0, 1] (ou ]0, 1] si closed_low=False)."""
    v = float(value)
    low_ok = v >= 0 if closed_low else v > 0
    if not (math.isfinite(v) and low_ok and v <= 1):
        raise DomainError(f"{name} doit être dans {'[' if closed_low else ']'}0, 1] (reçu {value!r})")
    return v


def frozen_array(values: Any, dtype: Any = float) -> np.ndarray:
    """Copie en ndarray 1-D en lecture seule."""
    arr = np.array(values, dtype=dtype, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


def to_jsonable(obj: Any) -> Any:
    """Convertit récursivement dataclasses / numpy en types JSON natifs."""
    if is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return to_jsonable(obj.to_dict())
        return to_jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return obj.as_posix()
    return obj


def write_json(path: Path, payload: Any) -> Path:
    """Écrit un rapport JSON déterministe (clés triées, pas d'horodatage)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(to_jsonable(payload), indent=2, sort_keys=True, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path
