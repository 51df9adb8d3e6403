"""
Configuration

Numeric defaults for every analysis. Values come from the dataclass defaults,
then `config/hyperreal.yaml` (or the file named by HYPERREAL_CONFIG), then the
HYPERREAL_TOL environment variable.
"""

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path

import dotenv
import yaml

from hyperreal.utils import get_logger

logger = get_logger(__name__)
dotenv.load_dotenv()

ROOT = Path(os.getcwd())
DEFAULT_CONFIG_PATH = ROOT / "config" / "hyperreal.yaml"


@dataclass(frozen=True)
class Tolerances:
    tol_herm: float = 1e-12
    tol_psd: float = 1e-10
    tol_eq: float = 1e-9
    rank_tol: float = 1e-9
    gcd_tol: float = 1e-10


@dataclass(frozen=True)
class SweepOptions:
    omega_min: float = 1e-6
    omega_max: float = 1e6
    points: int = 4096
    gamma_tol: float = 1e-8
    golden_tol: float = 1e-10
    max_bisection: int = 200


@dataclass(frozen=True)
class Settings:
    tolerances: Tolerances = field(default_factory=Tolerances)
    sweep: SweepOptions = field(default_factory=SweepOptions)
    max_degree: int = 64
    # relative regularization tried in turn by the Riccati certificate search
    search_eps_ladder: tuple[float, ...] = (1e-6, 1e-8, 1e-10, 1e-12, 0.0)


def parse_tolerance_override(text: str) -> dict[str, float]:
    """
    Parses the HYPERREAL_TOL value.

    A bare float applies to tol_psd and tol_eq; otherwise the value is a comma
    separated list of `name=value` pairs naming Tolerances fields.
    """
    text = text.strip()
    if not text:
        return {}
    try:
        value = float(text)
        return {"tol_psd": value, "tol_eq": value}
    except ValueError:
        pass

    known = {f.name for f in dataclasses.fields(Tolerances)}
    overrides = {}
    for item in text.split(","):
        if "=" not in item:
            raise ValueError(f"HYPERREAL_TOL entry must look like name=value: {item!r}")
        key, raw = (part.strip() for part in item.split("=", 1))
        if key not in known:
            raise ValueError(f"Unknown tolerance in HYPERREAL_TOL: {key}")
        overrides[key] = float(raw)
    return overrides


def _coerce(name: str, current, value):
    """Converts a YAML or environment value to the type of the field it replaces."""
    try:
        if isinstance(current, bool):
            return bool(value)
        if isinstance(current, int):
            return int(value)
        if isinstance(current, float):
            return float(value)
        if isinstance(current, tuple):
            return tuple(float(x) for x in value)
    except (TypeError, ValueError) as e:
        raise ValueError(f"Configuration value {name}={value!r} has the wrong type: {e}") from e
    return value


def _merge(instance, values: dict):
    known = {f.name for f in dataclasses.fields(instance)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"Unknown configuration keys for {type(instance).__name__}: {sorted(unknown)}")
    values = {k: _coerce(k, getattr(instance, k), v) for k, v in values.items()}
    return dataclasses.replace(instance, **values)


def load_settings(path: str | Path | None = None) -> Settings:
    """Builds Settings from defaults, the YAML file and the environment."""
    settings = Settings()

    if path is None:
        env_path = os.getenv("HYPERREAL_CONFIG")
        if env_path:
            path = Path(env_path)
        elif DEFAULT_CONFIG_PATH.exists():
            path = DEFAULT_CONFIG_PATH

    if path is not None:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Configuration file not found: {path}")
        with open(path) as f:
            data = yaml.safe_load(f) or {}
        logger.debug(f"Loaded configuration from {path}")

        tolerances = _merge(settings.tolerances, data.get("tolerances", {}))
        sweep = _merge(settings.sweep, data.get("sweep", {}))
        top = {k: v for k, v in data.items() if k not in ("tolerances", "sweep")}
        settings = _merge(dataclasses.replace(settings, tolerances=tolerances, sweep=sweep), top)

    override = os.getenv("HYPERREAL_TOL")
    if override:
        settings = dataclasses.replace(
            settings,
            tolerances=_merge(settings.tolerances, parse_tolerance_override(override)),
        )
        logger.info(f"Tolerances overridden from HYPERREAL_TOL: {settings.tolerances}")

    return settings


_settings: Settings | None = None


def get_settings() -> Settings:
    global _settings
    if _settings is None:
        _settings = load_settings()
    return _settings


def reset_settings() -> None:
    global _settings
    _settings = None
