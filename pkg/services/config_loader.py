"""
Carga de configuración

Orden de precedencia (de menor a mayor):
1. Valores por defecto de este módulo
2. config/hamiltonian_config.json (o la ruta de HAMILTONIAN_CONFIG)
3. Variables de entorno HAMILTONIAN_* (tras load_dotenv)
4. Flags de la CLI (los aplica main.py)
"""

import copy
import json
import logging
import os
from pathlib import Path
from typing import Dict, Optional

from dotenv import load_dotenv

from services.errors import InvalidRequestError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / "config" / "hamiltonian_config.json"

PROFILES = ("quick", "full")

DEFAULTS: Dict = {
    "seed": 0,
    "radius": 3,
    "workers": 4,
    "profile": "quick",
    "log_level": "INFO",
    "profiles": {
        "quick": {
            "jacobi": {"n_values": [2, 4], "triples": 40, "radius": 5, "max_terms": 5, "bound": 9},
            "automorphisms": {"n_values": [2, 4], "cases": 6, "radius": {"2": 3, "4": 3}, "conjugation": 10},
            "transitivity": {"n_values": [2, 4, 6], "vectors": 50, "bound": 20},
            "generation": {"n_values": [2, 4], "radius": {"2": 4, "4": 2}},
            "simplicity": {"n_values": [2, 4], "cases": 20, "radius": 3, "max_terms": 4, "target_radius": 4},
            "derivations": {"n_values": [2, 4], "radius": {"2": 3, "4": 3}, "degree_radius": {"2": 1, "4": 1}},
            "roundtrip": {"n_values": [2, 4], "cases": 20},
            "structure": {"n_values": [2, 4], "radius": {"2": 4, "4": 2}, "cases": 10},
        },
        "full": {
            "jacobi": {"n_values": [2, 4], "triples": 500, "radius": 5, "max_terms": 5, "bound": 9},
            "automorphisms": {"n_values": [2, 4], "cases": 100, "radius": {"2": 3, "4": 3}, "conjugation": 50},
            "transitivity": {"n_values": [2, 4, 6], "vectors": 200, "bound": 20},
            "generation": {"n_values": [2, 4], "radius": {"2": 4, "4": 4}},
            "simplicity": {"n_values": [2, 4], "cases": 100, "radius": 3, "max_terms": 4, "target_radius": 4},
            "derivations": {"n_values": [2, 4], "radius": {"2": 3, "4": 3}, "degree_radius": {"2": 2, "4": 2}},
            "roundtrip": {"n_values": [2, 4], "cases": 100},
            "structure": {"n_values": [2, 4], "radius": {"2": 6, "4": 3}, "cases": 50},
        },
    },
}

_ENV_INT = {
    "HAMILTONIAN_SEED": "seed",
    "HAMILTONIAN_RADIUS": "radius",
    "HAMILTONIAN_WORKERS": "workers",
}


def _deep_merge(base: Dict, extra: Dict) -> Dict:
    for clave, valor in extra.items():
        if isinstance(valor, dict) and isinstance(base.get(clave), dict):
            _deep_merge(base[clave], valor)
        else:
            base[clave] = valor
    return base


def load_config(config_path: Optional[str] = None) -> Dict:
    """
    Devuelve la configuración efectiva

    Args:
        config_path: ruta a un JSON de configuración; si es None se usa
            HAMILTONIAN_CONFIG o config/hamiltonian_config.json

    Raises:
        InvalidRequestError: si el archivo no es JSON legible o una variable
            de entorno no es válida
    """
    load_dotenv()
    config = copy.deepcopy(DEFAULTS)

    ruta = Path(config_path or os.getenv("HAMILTONIAN_CONFIG") or DEFAULT_CONFIG_PATH)
    if ruta.exists():
        try:
            with open(ruta, "r", encoding="utf-8") as f:
                extra = json.load(f)
        except json.JSONDecodeError as e:
            raise InvalidRequestError(f"Configuración mal formada en {ruta}: {e}")
        except OSError as e:
            raise InvalidRequestError(f"No se puede leer la configuración {ruta}: {e}")
        if not isinstance(extra, dict):
            raise InvalidRequestError(f"La configuración de {ruta} debe ser un objeto JSON")
        _deep_merge(config, extra)
        logger.debug(f"✅ Configuración cargada desde {ruta}")
    elif config_path:
        raise InvalidRequestError(f"No existe el archivo de configuración {ruta}")

    for variable, clave in _ENV_INT.items():
        valor = os.getenv(variable)
        if valor is None:
            continue
        try:
            config[clave] = int(valor)
        except ValueError:
            raise InvalidRequestError(f"{variable} debe ser un entero (recibido {valor!r})")

    perfil = os.getenv("HAMILTONIAN_PROFILE")
    if perfil:
        config["profile"] = perfil
    nivel = os.getenv("HAMILTONIAN_LOG_LEVEL")
    if nivel:
        config["log_level"] = nivel.upper()

    if config["profile"] not in PROFILES:
        raise InvalidRequestError(f"Perfil desconocido: {config['profile']!r} (opciones: {', '.join(PROFILES)})")
    return config


def profile_settings(config: Dict, profile: Optional[str] = None) -> Dict:
    """Tamaños de las suites del perfil indicado (o del configurado)"""
    nombre = profile or config["profile"]
    if nombre not in config["profiles"]:
        raise InvalidRequestError(f"Perfil desconocido: {nombre!r}")
    return config["profiles"][nombre]
