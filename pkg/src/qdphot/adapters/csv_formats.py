#!/usr/bin/env python3
"""
Lecture / écriture des cinq formats texte de qdphot.

Tous les formats partagent la même structure :
    # qdot-<type> v1          ← ligne d'en-tête obligatoire
    # clé=valeur              ← métadonnées (ordre conservé)
    v1,v2,...                 ← lignes de données

- "# qdot-spectrum v1"  : wavelength_nm,counts         (λ croissante)
- "# qdot-polar v1"     : angle_deg,intensity[,uncertainty]
- "# qdot-tags v1"      : detector,time_ns             (trié en temps)
- "# qdot-g2 v1"        : tau_ns,counts                (bord gauche des bins)
- "# qdot-array v1"     : row,col,wavelength_nm[,label]

Un objet lu puis réécrit sans modification (mêmes métadonnées) redonne
le texte du fichier octet pour octet, y compris les nombres non canoniques
("919.0", "120.50"). Tout objet construit ou transformé en mémoire est
écrit sous forme canonique (`utils.fmt_number`).
Toute erreur de format lève ParseError avec le numéro de ligne.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from qdphot.errors import DomainError, ParseError
from qdphot.models import (
    CoincidenceHistogram,
    PolarPattern,
    QdArrayEntry,
    QdArrayMap,
    SourceText,
    Spectrum,
    TimestampStream,
)
from qdphot.utils import fmt_number

SPECTRUM_HEADER = "# qdot-spectrum v1"
POLAR_HEADER = "# qdot-polar v1"
TAGS_HEADER = "# qdot-tags v1"
G2_HEADER = "# qdot-g2 v1"
ARRAY_HEADER = "# qdot-array v1"


# ═══════════════════════════════════════════════════════════════
# Structure commune
# ═══════════════════════════════════════════════════════════════


@dataclass
class _RawFile:
    path: Path
    text: str = ""
    metadata: Dict[str, str] = field(default_factory=dict)
    rows: List[Tuple[int, List[str]]] = field(default_factory=list)

    def source(self) -> SourceText:
        return SourceText(self.text, tuple(self.metadata.items()))


def _read_raw(path: Path, header: str, max_fields: int = -1) -> _RawFile:
    path = Path(path)
    text = path.read_bytes().decode("utf-8")
    lines = text.splitlines()
    if not lines or lines[0].rstrip() != header:
        raise ParseError(f"en-tête attendu {header!r}", path, 1)

    raw = _RawFile(path, text)
    for no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if line.startswith("#"):
            if raw.rows:
                raise ParseError("métadonnée après les données", path, no)
            body = line[2:] if line.startswith("# ") else ""
            key, sep, value = body.partition("=")
            if not sep or not key:
                raise ParseError("métadonnée attendue sous la forme '# clé=valeur'", path, no)
            if key in raw.metadata:
                raise ParseError(f"métadonnée {key!r} dupliquée", path, no)
            raw.metadata[key] = value
            continue
        raw.rows.append((no, line.split(",", max_fields) if max_fields > 0 else line.split(",")))
    return raw


def _float(text: str, raw: _RawFile, line: int, name: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"{name} non numérique : {text!r}", raw.path, line) from None
    if not math.isfinite(v):
        raise ParseError(f"{name} non fini : {text!r}", raw.path, line)
    return v


def _int(text: str, raw: _RawFile, line: int, name: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"{name} entier attendu : {text!r}", raw.path, line) from None


def _meta_float(raw: _RawFile, key: str, required: bool = False) -> Optional[float]:
    if key not in raw.metadata:
        if required:
            raise ParseError(f"métadonnée {key!r} manquante", raw.path, None)
        return None
    try:
        return float(raw.metadata[key])
    except ValueError:
        raise ParseError(f"métadonnée {key!r} non numérique", raw.path, None) from None


def _columns(raw: _RawFile, line: int, fields: List[str], allowed: Tuple[int, ...]) -> None:
    if len(fields) not in allowed:
        expected = " ou ".join(str(n) for n in allowed)
        raise ParseError(f"{len(fields)} colonne(s), {expected} attendue(s)", raw.path, line)


def _write(path: Path, header: str, metadata: Mapping[str, str], rows: List[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [header]
    for k, v in metadata.items():
        lines.append(f"# {k}={str(v).replace(chr(10), ' ')}")
    lines.extend(rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _write_source(path: Path, source: Optional[SourceText], metadata: Mapping[str, str]) -> Optional[Path]:
    """Recopie le texte lu si les métadonnées à écrire sont celles du fichier, sinon None."""
    if source is None or tuple((str(k), str(v)) for k, v in metadata.items()) != source.metadata:
        return None
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(source.text.encode("utf-8"))
    return path


# ═══════════════════════════════════════════════════════════════
# Spectres
# ═══════════════════════════════════════════════════════════════


def read_spectrum(path: Path) -> Spectrum:
    raw = _read_raw(path, SPECTRUM_HEADER)
    wl: List[float] = []
    counts: List[float] = []
    for line, fields in raw.rows:
        _columns(raw, line, fields, (2,))
        w = _float(fields[0], raw, line, "wavelength_nm")
        c = _float(fields[1], raw, line, "counts")
        if w <= 0:
            raise ParseError("longueur d'onde ≤ 0", raw.path, line)
        if wl and w <= wl[-1]:
            raise ParseError("longueurs d'onde non strictement croissantes", raw.path, line)
        if c < 0:
            raise ParseError("comptes négatifs", raw.path, line)
        wl.append(w)
        counts.append(c)
    if len(wl) < 2:
        raise ParseError("au moins 2 lignes de données requises", raw.path, None)
    try:
        return Spectrum.from_wavelength(wl, counts, raw.metadata, source=raw.source())
    except DomainError as exc:
        raise ParseError(str(exc), raw.path, None) from exc


def write_spectrum(path: Path, spectrum: Spectrum) -> Path:
    verbatim = _write_source(path, spectrum.source, spectrum.metadata)
    if verbatim is not None:
        return verbatim
    rows = [
        f"{fmt_number(w)},{fmt_number(c)}"
        for w, c in zip(spectrum.wavelengths(), spectrum.counts_by_wavelength())
    ]
    return _write(path, SPECTRUM_HEADER, spectrum.metadata, rows)


# ═══════════════════════════════════════════════════════════════
# Données polaires
# ═══════════════════════════════════════════════════════════════


def read_polar(path: Path) -> Tuple[PolarPattern, Dict[str, str]]:
    raw = _read_raw(path, POLAR_HEADER)
    angles: List[float] = []
    values: List[float] = []
    sigmas: List[float] = []
    width = None
    for line, fields in raw.rows:
        _columns(raw, line, fields, (2, 3))
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise ParseError("nombre de colonnes incohérent", raw.path, line)
        a = _float(fields[0], raw, line, "angle_deg")
        v = _float(fields[1], raw, line, "intensity")
        if not 0 <= a < 360:
            raise ParseError("angle hors de [0, 360)", raw.path, line)
        if v < 0:
            raise ParseError("intensité négative", raw.path, line)
        angles.append(a)
        values.append(v)
        if width == 3:
            s = _float(fields[2], raw, line, "uncertainty")
            if s < 0:
                raise ParseError("incertitude négative", raw.path, line)
            sigmas.append(s)
    pattern = PolarPattern(angles, values, sigmas if width == 3 else None, source=raw.source())
    return pattern, raw.metadata


def write_polar(path: Path, pattern: PolarPattern, metadata: Optional[Mapping[str, str]] = None) -> Path:
    verbatim = _write_source(path, pattern.source, metadata or {})
    if verbatim is not None:
        return verbatim
    rows = []
    for i in range(len(pattern)):
        cols = [fmt_number(pattern.angles_deg[i]), fmt_number(pattern.intensities[i])]
        if pattern.uncertainties is not None:
            cols.append(fmt_number(pattern.uncertainties[i]))
        rows.append(",".join(cols))
    return _write(path, POLAR_HEADER, metadata or {}, rows)


# ═══════════════════════════════════════════════════════════════
# Horodatages
# ═══════════════════════════════════════════════════════════════


def read_tags(path: Path) -> Tuple[TimestampStream, TimestampStream, Dict[str, str]]:
    raw = _read_raw(path, TAGS_HEADER)
    duration = _meta_float(raw, "duration_s", required=True)
    period = _meta_float(raw, "pulse_period_ns")
    dark_a = _meta_float(raw, "dark_rate_a_cps") or 0.0
    dark_b = _meta_float(raw, "dark_rate_b_cps") or 0.0

    times: Dict[str, List[float]] = {"A": [], "B": []}
    last = -math.inf
    for line, fields in raw.rows:
        _columns(raw, line, fields, (2,))
        det = fields[0]
        if det not in times:
            raise ParseError(f"détecteur inconnu {det!r}", raw.path, line)
        t = _float(fields[1], raw, line, "time_ns")
        if t < last:
            raise ParseError("horodatages non triés", raw.path, line)
        last = t
        times[det].append(t)
    source = raw.source()
    try:
        a = TimestampStream("A", times["A"], duration, dark_a, period, source=source)
        b = TimestampStream("B", times["B"], duration, dark_b, period, source=source)
    except DomainError as exc:
        raise ParseError(str(exc), raw.path, None) from exc
    return a, b, raw.metadata


def write_tags(
    path: Path,
    a: TimestampStream,
    b: TimestampStream,
    metadata: Optional[Mapping[str, str]] = None,
) -> Path:
    meta = dict(metadata or {})
    meta.setdefault("duration_s", fmt_number(a.duration_s))
    if a.pulse_period_ns is not None:
        meta.setdefault("pulse_period_ns", fmt_number(a.pulse_period_ns))
    meta.setdefault("dark_rate_a_cps", fmt_number(a.dark_rate_cps))
    meta.setdefault("dark_rate_b_cps", fmt_number(b.dark_rate_cps))
    if a.source is b.source:
        verbatim = _write_source(path, a.source, meta)
        if verbatim is not None:
            return verbatim

    t = np.concatenate([a.times_ns, b.times_ns])
    labels = np.array(["A"] * a.n_clicks + ["B"] * b.n_clicks)
    order = np.argsort(t, kind="stable")
    rows = [f"{labels[i]},{fmt_number(t[i])}" for i in order]
    return _write(path, TAGS_HEADER, meta, rows)


# ═══════════════════════════════════════════════════════════════
# Histogrammes de coïncidences
# ═══════════════════════════════════════════════════════════════

_G2_META_FLOAT = ("pulse_period_ns", "duration_s", "dark_rate_a_cps", "dark_rate_b_cps")


def read_histogram(path: Path) -> Tuple[CoincidenceHistogram, Dict[str, str]]:
    raw = _read_raw(path, G2_HEADER)
    width = _meta_float(raw, "bin_width_ns", required=True)
    tau_max = _meta_float(raw, "tau_max_ns", required=True)
    if not raw.rows:
        raise ParseError("histogramme vide", raw.path, None)

    k_min = None
    counts: List[int] = []
    for i, (line, fields) in enumerate(raw.rows):
        _columns(raw, line, fields, (2,))
        tau = _float(fields[0], raw, line, "tau_ns")
        if k_min is None:
            k_min = int(round(tau / width))
        if not math.isclose(tau, (k_min + i) * width, rel_tol=1e-9, abs_tol=1e-9 * width):
            raise ParseError(f"tau {tau} hors de la grille des bins", raw.path, line)
        c = _int(fields[1], raw, line, "counts")
        if c < 0:
            raise ParseError("comptes négatifs", raw.path, line)
        counts.append(c)

    extra = {k: _meta_float(raw, k) for k in _G2_META_FLOAT}
    try:
        hist = CoincidenceHistogram(
            bin_width_ns=width,
            tau_max_ns=tau_max,
            k_min=k_min,
            counts=counts,
            pulse_period_ns=extra["pulse_period_ns"],
            duration_s=extra["duration_s"],
            clicks_a=int(_meta_float(raw, "clicks_a") or 0),
            clicks_b=int(_meta_float(raw, "clicks_b") or 0),
            dark_rate_a_cps=extra["dark_rate_a_cps"] or 0.0,
            dark_rate_b_cps=extra["dark_rate_b_cps"] or 0.0,
            source=raw.source(),
        )
    except DomainError as exc:
        raise ParseError(str(exc), raw.path, None) from exc
    return hist, raw.metadata


def write_histogram(
    path: Path,
    hist: CoincidenceHistogram,
    metadata: Optional[Mapping[str, str]] = None,
) -> Path:
    meta = dict(metadata or {})
    meta.setdefault("bin_width_ns", fmt_number(hist.bin_width_ns))
    meta.setdefault("tau_max_ns", fmt_number(hist.tau_max_ns))
    if hist.pulse_period_ns is not None:
        meta.setdefault("pulse_period_ns", fmt_number(hist.pulse_period_ns))
    if hist.duration_s is not None:
        meta.setdefault("duration_s", fmt_number(hist.duration_s))
    meta.setdefault("clicks_a", str(hist.clicks_a))
    meta.setdefault("clicks_b", str(hist.clicks_b))
    meta.setdefault("dark_rate_a_cps", fmt_number(hist.dark_rate_a_cps))
    meta.setdefault("dark_rate_b_cps", fmt_number(hist.dark_rate_b_cps))
    verbatim = _write_source(path, hist.source, meta)
    if verbatim is not None:
        return verbatim
    rows = [f"{fmt_number(t)},{int(c)}" for t, c in zip(hist.tau_ns, hist.counts)]
    return _write(path, G2_HEADER, meta, rows)


# ═══════════════════════════════════════════════════════════════
# Cartes de QDs
# ═══════════════════════════════════════════════════════════════


def read_array(path: Path) -> Tuple[QdArrayMap, Dict[str, str]]:
    raw = _read_raw(path, ARRAY_HEADER, max_fields=3)
    entries: List[QdArrayEntry] = []
    for line, fields in raw.rows:
        _columns(raw, line, fields, (3, 4))
        row = _int(fields[0], raw, line, "row")
        col = _int(fields[1], raw, line, "col")
        wl = _float(fields[2], raw, line, "wavelength_nm")
        if row < 0 or col < 0:
            raise ParseError("indice négatif", raw.path, line)
        if wl <= 0:
            raise ParseError("longueur d'onde ≤ 0", raw.path, line)
        entries.append(QdArrayEntry(row, col, wl, fields[3] if len(fields) == 4 else None))

    rows = _meta_float(raw, "rows")
    cols = _meta_float(raw, "cols")
    n_rows = int(rows) if rows is not None else max((e.row for e in entries), default=0) + 1
    n_cols = int(cols) if cols is not None else max((e.col for e in entries), default=0) + 1
    try:
        return QdArrayMap(tuple(entries), n_rows, n_cols, source=raw.source()), raw.metadata
    except DomainError as exc:
        raise ParseError(str(exc), raw.path, None) from exc


def write_array(path: Path, m: QdArrayMap, metadata: Optional[Mapping[str, str]] = None) -> Path:
    meta = dict(metadata or {})
    meta.setdefault("rows", str(m.rows))
    meta.setdefault("cols", str(m.cols))
    verbatim = _write_source(path, m.source, meta)
    if verbatim is not None:
        return verbatim
    rows = []
    for e in m.entries:
        cols = [str(e.row), str(e.col), fmt_number(e.wavelength_nm)]
        if e.label is not None:
            cols.append(e.label)
        rows.append(",".join(cols))
    return _write(path, ARRAY_HEADER, meta, rows)


# ═══════════════════════════════════════════════════════════════
# Détection du format
# ═══════════════════════════════════════════════════════════════

_KINDS = {
    SPECTRUM_HEADER: "spectrum",
    POLAR_HEADER: "polar",
    TAGS_HEADER: "tags",
    G2_HEADER: "g2",
    ARRAY_HEADER: "array",
}


def detect_kind(path: Path) -> str:
    """Type de fichier d'après la ligne d'en-tête ("spectrum", "tags", ...)."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        first = fh.readline().rstrip()
    kind = _KINDS.get(first)
    if kind is None:
        raise ParseError(f"en-tête inconnu {first!r}", path, 1)
    return kind
