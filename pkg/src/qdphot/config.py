"""
Configuration d'exécution du CLI.

Précédence : valeurs par défaut < fichier de configuration < options de la
ligne de commande.

Fichier de configuration (format dotenv, lu par python-dotenv) :

    seed=42
    out=results
    format=json,svg
    workers=4
    hbt-sim.duration_s=0.125
    g2.n_side_peaks=4

Les clés globales sont `seed`, `out`, `format`, `workers` ; les paramètres
d'une sous-commande s'écrivent `<sous-commande>.<clé>`. Les clés des autres
sous-commandes sont ignorées.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

from dotenv import dotenv_values

from qdphot.errors import DomainError
from qdphot.models import (
    ACCEPTANCE_WINDOW_EV,
    DEFAULT_BIN_WIDTH_NS,
    DEFAULT_IRF_FWHM_EV,
    DEFAULT_PULSE_PERIOD_NS,
    DEFAULT_WINDOW_PERIODS,
    PAIR_THRESHOLD_EV,
    SCENARIO_BACKGROUND,
    SCENARIO_P1_AREA,
    SCENARIO_P1_FWHM_EV,
    SCENARIO_P1_NM,
    SCENARIO_P2_AREA,
    SCENARIO_P2_FWHM_EV,
    SCENARIO_P2_NM,
)

logger = logging.getLogger(__name__)

SEED_LIMIT = 2**64
FORMATS = ("csv", "json", "svg")
DEFAULT_FORMATS = ("csv", "json")
DEFAULT_OUT = "out"


def parse_bool(text: Any) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "oui", "on"):
        return True
    if value in ("0", "false", "no", "non", "off"):
        return False
    raise DomainError(f"booléen attendu : {text!r}")


def _optional_float(text: Any) -> Optional[float]:
    if text is None or str(text).strip().lower() in ("", "none", "auto"):
        return None
    return float(text)


# ═══════════════════════════════════════════════════════════════════════════════
# PARAMÈTRES PAR SOUS-COMMANDE
# ═══════════════════════════════════════════════════════════════════════════════

# nom -> (conversion, valeur par défaut, aide)
ParamSpec = Tuple[Callable[[Any], Any], Any, str]

PARAMS: Dict[str, Dict[str, ParamSpec]] = {
    "synth": {
        "kind": (str, "spectrum", "spectrum | polar | array"),
        "noise": (str, "poisson", "none | poisson"),
        # ───── spectre à deux pics ─────
        "p1_nm": (float, SCENARIO_P1_NM, "longueur d'onde du pic P1 (nm)"),
        "p2_nm": (float, SCENARIO_P2_NM, "longueur d'onde du pic P2 (nm)"),
        "p1_fwhm_uev": (float, SCENARIO_P1_FWHM_EV * 1e6, "FWHM de P1 (μeV)"),
        "p2_fwhm_uev": (float, SCENARIO_P2_FWHM_EV * 1e6, "FWHM de P2 (μeV)"),
        "p1_area": (float, SCENARIO_P1_AREA, "aire de P1 (comptes)"),
        "p2_area": (float, SCENARIO_P2_AREA, "aire de P2 (comptes)"),
        "background": (float, SCENARIO_BACKGROUND, "fond constant (comptes/point)"),
        "spacing_uev": (float, 2.0, "pas de la grille en énergie (μeV)"),
        "half_span_uev": (float, 600.0, "demi-étendue de la grille autour des pics (μeV)"),
        "irf_fwhm_uev": (float, 0.0, "FWHM de la réponse instrumentale appliquée (0 = aucune)"),
        # ───── diagramme polaire ─────
        "beta": (float, 0.25, "amplitude de mélange HH-LH β"),
        "gamma": (float, 0.0, "amplitude de mélange γ"),
        "theta_deg": (float, 5.0, "phase de mélange θ (degrés)"),
        "step_deg": (float, 10.0, "pas du polariseur (degrés)"),
        "mean_intensity": (float, 2000.0, "intensité moyenne (comptes)"),
        # ───── carte de QDs ─────
        "rows": (int, 5, "lignes de la carte"),
        "cols": (int, 8, "colonnes de la carte"),
        "mean_nm": (float, 919.0, "longueur d'onde moyenne (nm)"),
        "std_nm": (float, 8.0, "écart-type (nm)"),
    },
    "fit": {
        "n_peaks": (int, 2, "nombre de lorentziennes"),
        "window_uev": (float, ACCEPTANCE_WINDOW_EV * 1e6, "fenêtre d'acceptation autour du pic le plus intense (μeV)"),
    },
    "deconv": {
        "n_peaks": (int, 2, "nombre de lorentziennes intrinsèques"),
        "irf_fwhm_uev": (float, DEFAULT_IRF_FWHM_EV * 1e6, "FWHM de la réponse instrumentale (μeV)"),
        "lam": (_optional_float, None, "régularisation λ (vide = règle de Morozov)"),
        "max_iter": (int, 5000, "itérations maximales du solveur"),
    },
    "polar-fit": {
        "gamma": (float, 0.0, "γ fixé pendant l'ajustement"),
        "extend": (parse_bool, False, "compléter 0-180° en 0-360° par symétrie"),
    },
    "hbt-sim": {
        "duration_s": (float, 0.0125, "durée simulée (s)"),
        "pulse_period_ns": (float, DEFAULT_PULSE_PERIOD_NS, "période du laser (ns)"),
        "lifetime_ns": (float, 1.0, "durée de vie radiative (ns)"),
        "p_excite": (float, 0.5, "probabilité d'une excitation par impulsion"),
        "p_multi": (float, 0.0, "probabilité de deux excitations par impulsion"),
        "target_g2": (_optional_float, None, "g²(0) visé (calcule p_multi)"),
        "poissonian_mean": (_optional_float, None, "source poissonienne de moyenne donnée"),
        "saturation_power_nw": (_optional_float, None, "puissance de saturation (nW)"),
        "drive_power_nw": (_optional_float, None, "puissance d'excitation (nW)"),
        "efficiency": (float, 0.3, "efficacité des détecteurs"),
        "dark_rate_cps": (float, 100.0, "taux d'obscurité (cps)"),
        "dead_time_ns": (float, 0.0, "temps mort (ns)"),
        "jitter_ns": (float, 0.0, "gigue temporelle (ns)"),
        "splitter_ratio": (float, 0.5, "fraction routée vers A"),
        "bin_width_ns": (float, DEFAULT_BIN_WIDTH_NS, "largeur de bin (ns)"),
        "tau_max_ns": (_optional_float, None, f"fenêtre ±τ (ns, vide = {DEFAULT_WINDOW_PERIODS} périodes)"),
    },
    "g2": {
        "n_side_peaks": (int, 4, "pics latéraux de chaque côté"),
        "background": (str, "rates", "rates | baseline | none"),
        "bin_width_ns": (float, DEFAULT_BIN_WIDTH_NS, "largeur de bin si entrée horodatée (ns)"),
        "tau_max_ns": (_optional_float, None, "fenêtre ±τ si entrée horodatée (ns)"),
        "fit": (parse_bool, True, "ajuster aussi le modèle de pics exponentiels"),
    },
    "array-stats": {
        "threshold_uev": (float, PAIR_THRESHOLD_EV * 1e6, "seuil d'appariement (μeV)"),
    },
}

CHOICES: Dict[str, Tuple[str, ...]] = {
    "synth.kind": ("spectrum", "polar", "array"),
    "synth.noise": ("none", "poisson"),
    "g2.background": ("rates", "baseline", "none"),
}

COMMANDS_WITH_INPUT = ("fit", "deconv", "polar-fit", "g2", "array-stats")


# ═══════════════════════════════════════════════════════════════════════════════
# RUNCONFIG
# ═══════════════════════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class RunConfig:
    command: str
    master_seed: int = 0
    output_dir: Path = field(default_factory=lambda: Path(DEFAULT_OUT).resolve())
    formats: Tuple[str, ...] = DEFAULT_FORMATS
    params: Dict[str, Any] = field(default_factory=dict)
    workers: int = 1
    input_path: Optional[Path] = None
    config_path: Optional[Path] = None

    def wants(self, fmt: str) -> bool:
        return fmt in self.formats

    def output(self, name: str) -> Path:
        return self.output_dir / name

    def report_config(self) -> Dict[str, Any]:
        """
        Bloc "config" des rapports JSON.

        Pas de chemins absolus ni de nombre de workers : le rapport ne doit
        dépendre que des entrées, des paramètres et du seed.
        """
        return {
            "command": self.command,
            "seed": self.master_seed,
            "params": dict(self.params),
            "input": self.input_path.name if self.input_path is not None else None,
        }


def load_config(path: Optional[Path]) -> Dict[str, str]:
    """Lit un fichier clé=valeur (dotenv). Fichier absent -> FileNotFoundError."""
    if path is None:
        return {}
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"fichier de configuration introuvable : {path}")
    values = {k: v for k, v in dotenv_values(path).items() if v is not None}
    logger.debug("Configuration %s : %d clé(s)", path.name, len(values))
    return values


def _convert(command: str, name: str, raw: Any) -> Any:
    conv, _, _ = PARAMS[command][name]
    try:
        value = conv(raw)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"{command}.{name} : valeur invalide {raw!r}") from exc
    if isinstance(value, float) and not math.isfinite(value):
        raise DomainError(f"{command}.{name} : valeur non finie")
    choices = CHOICES.get(f"{command}.{name}")
    if choices is not None and value not in choices:
        raise DomainError(f"{command}.{name} doit valoir {' | '.join(choices)} (reçu {value!r})")
    return value


def _parse_formats(text: str) -> Tuple[str, ...]:
    items = tuple(sorted({s.strip().lower() for s in str(text).split(",") if s.strip()}))
    unknown = [s for s in items if s not in FORMATS]
    if unknown or not items:
        raise DomainError(f"format(s) invalide(s) : {text!r} (choix : {', '.join(FORMATS)})")
    return items


def _parse_seed(value: Any) -> int:
    try:
        seed = int(value)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"seed entier attendu : {value!r}") from exc
    if not (0 <= seed < SEED_LIMIT):
        raise DomainError(f"seed hors de [0, 2^64) : {seed}")
    return seed


def build_config(
    command: str,
    flags: Mapping[str, Any],
    file_values: Optional[Mapping[str, str]] = None,
) -> RunConfig:
    """
    Fusionne défauts, fichier et options.

    `flags` : options de la ligne de commande, None = non fourni. Clés
    globales `seed`, `out`, `format`, `workers`, `input`, `config` ; les
    autres sont les paramètres de la sous-commande.
    """
    if command not in PARAMS:
        raise DomainError(f"sous-commande inconnue : {command!r}")
    file_values = dict(file_values or {})
    specs = PARAMS[command]

    params = {name: default for name, (_, default, _) in specs.items()}
    prefix = f"{command}."
    for key, raw in sorted(file_values.items()):
        if key.startswith(prefix):
            name = key[len(prefix):]
            if name not in specs:
                raise DomainError(f"clé de configuration inconnue : {key}")
            params[name] = _convert(command, name, raw)
    for name in specs:
        if flags.get(name) is not None:
            params[name] = _convert(command, name, flags[name])

    def pick(key: str, default: Any) -> Any:
        if flags.get(key) is not None:
            return flags[key]
        return file_values.get(key, default)

    seed = _parse_seed(pick("seed", 0))
    formats = _parse_formats(pick("format", ",".join(DEFAULT_FORMATS)))
    try:
        workers = int(pick("workers", 1))
    except (TypeError, ValueError) as exc:
        raise DomainError("workers entier attendu") from exc
    if workers < 1:
        raise DomainError(f"workers doit être ≥ 1 (reçu {workers})")
    output_dir = Path(pick("out", DEFAULT_OUT)).expanduser().resolve()

    input_path = None
    if command in COMMANDS_WITH_INPUT:
        raw_input = flags.get("input")
        if not raw_input:
            raise DomainError(f"{command} : fichier d'entrée requis")
        input_path = Path(raw_input).expanduser().resolve()
        if not input_path.is_file():
            raise FileNotFoundError(f"fichier d'entrée introuvable : {raw_input}")

    config_path = Path(flags["config"]).resolve() if flags.get("config") else None

    return RunConfig(
        command=command,
        master_seed=seed,
        output_dir=output_dir,
        formats=formats,
        params=params,
        workers=workers,
        input_path=input_path,
        config_path=config_path,
    )
