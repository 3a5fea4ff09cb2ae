"""
Run-configuration loading, serialization and hashing.

Configs come from a profile, then an INI or JSON file, then dotted
``section.key=value`` overrides, and are validated once at the end.
"""
import configparser
import copy
import hashlib
import io
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

from pydantic import ValidationError

from src.app.exceptions import ConfigError
from src.app.logging_config import get_logger
from src.schemas.config import RunConfig
from src.settings import settings

logger = get_logger(__name__)

RUN_SECTION = "run"
_TOP_LEVEL_KEYS = ("profile", "scaling_rho", "master_seed", "seeds")

PROFILES: Dict[str, Dict[str, Any]] = {
    "desk": {
        "profile": "desk",
        "optimizer": {"max_steps": 20000},
        "eval": {"every_steps": 2000, "n_generate": 2000, "wd_subsample": 1000},
        "sampler": {"n_samples": 2000},
        "seeds": [0, 1, 2],
    },
    "paper": {
        "profile": "paper",
        "optimizer": {"max_steps": 200000},
        "eval": {"every_steps": 5000, "n_generate": 5000, "wd_subsample": 1000},
        "sampler": {"n_samples": 5000},
        "seeds": [0, 1, 2, 3, 4, 5],
    },
}

# Each entry is a set of overrides; the sweep crosses it with the profile seeds.
SWEEP_GRIDS: Dict[str, List[Dict[str, Any]]] = {
    "desk": [
        {"dataset.dim": 2, "model.variant": "base"},
        {"dataset.dim": 2, "model.variant": "proposed", "xi.sigma_c_sq": 1.0},
        {"dataset.dim": 50, "model.variant": "base"},
        {"dataset.dim": 50, "model.variant": "proposed", "xi.sigma_c_sq": 1.0},
        {"dataset.dim": 200, "model.variant": "base"},
        {"dataset.dim": 200, "model.variant": "base", "scaling_rho": 0.9},
        {"dataset.dim": 200, "model.variant": "base", "scaling_rho": 1.1},
        {"dataset.dim": 200, "model.variant": "offset", "xi.sigma_c_sq": 0.1},
        {"dataset.dim": 200, "model.variant": "proposed", "xi.sigma_c_sq": 1.0},
        {"dataset.dim": 200, "model.variant": "proposed", "model.prediction": "v", "xi.sigma_c_sq": 1.0},
        {"dataset.dim": 200, "model.variant": "zero_snr"},
    ],
    "paper": (
        [{"dataset.dim": n, "model.variant": "base"} for n in (2, 50, 100, 200)]
        + [
            {"dataset.dim": n, "model.variant": "offset", "xi.sigma_c_sq": s}
            for n in (2, 50, 100, 200) for s in (0.01, 0.05, 0.1, 0.5, 1.0)
        ]
        + [
            {"dataset.dim": n, "model.variant": "proposed", "xi.sigma_c_sq": s}
            for n in (2, 50, 100, 200) for s in (0.1, 0.5, 1.0)
        ]
        + [
            {"dataset.dim": 200, "model.variant": v, "model.prediction": "v", **extra}
            for v, extra in (
                ("base", {}),
                ("offset", {"xi.sigma_c_sq": 0.1}),
                ("zero_snr", {}),
                ("proposed", {"xi.sigma_c_sq": 1.0}),
            )
        ]
        + [
            {"dataset.dim": 200, "model.variant": "base", "scaling_rho": rho}
            for rho in (0.7, 0.8, 0.9, 1.1, 1.2, 1.3)
        ]
    ),
}


def _deep_merge(base: Dict[str, Any], extra: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def parse_override(item: str) -> Tuple[str, str]:
    """Split ``section.key=value``."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, value = item.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"override {item!r} has an empty key")
    return key, value.strip()


def apply_overrides(data: Dict[str, Any], overrides: Iterable) -> Dict[str, Any]:
    """
    Set dotted keys on a nested dict.

    Args:
        data: Nested config dict
        overrides: ``"a.b=c"`` strings or (key, value) pairs

    Returns:
        A new dict with the overrides applied
    """
    data = copy.deepcopy(data)
    for item in overrides:
        key, value = parse_override(item) if isinstance(item, str) else item
        parts = key.split(".")
        if len(parts) > 2:
            raise ConfigError(f"override key {key!r} is nested too deeply")
        if len(parts) == 1:
            if parts[0] not in _TOP_LEVEL_KEYS:
                raise ConfigError(f"unknown top-level key {key!r}")
            data[parts[0]] = value
            continue
        section, name = parts
        if section not in RunConfig.sections():
            raise ConfigError(f"unknown config section {section!r}")
        target = data.setdefault(section, {})
        target[name] = value
    return data


def _parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    return parser


def _read_ini(text: str) -> Dict[str, Any]:
    parser = _parser()
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"invalid INI config: {e}")
    data: Dict[str, Any] = {}
    for section in parser.sections():
        values = dict(parser.items(section))
        if section == RUN_SECTION:
            data.update(values)
        elif section in RunConfig.sections():
            data[section] = values
        else:
            raise ConfigError(f"unknown config section [{section}]")
    return data


def read_config_file(path: Path) -> Dict[str, Any]:
    """Raw nested dict from an INI or JSON file (by extension)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON config {path}: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"JSON config {path} must hold an object")
        return data
    return _read_ini(text)


def build_config(data: Dict[str, Any]) -> RunConfig:
    """
    Validate a nested dict into a RunConfig.

    Raises:
        ConfigError: With pydantic's messages when validation fails
    """
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        messages = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"invalid run config: {messages}") from e


def load_config(path: Optional[Path] = None, profile: Optional[str] = None,
                overrides: Iterable = ()) -> RunConfig:
    """
    Profile defaults, then the file, then overrides.

    Raises:
        ConfigError: Unknown profile, unreadable syntax or failed validation
    """
    file_data = read_config_file(path) if path else {}
    name = profile or file_data.get("profile") or settings.DEFAULT_PROFILE
    if name not in PROFILES:
        raise ConfigError(f"unknown profile {name!r}; expected one of {sorted(PROFILES)}")

    data = _deep_merge(PROFILES[name], file_data)
    data["profile"] = name
    data = apply_overrides(data, overrides)
    cfg = build_config(data)
    logger.debug(
        "Run config loaded",
        extra={"path": str(path) if path else None, "profile": name, "config_hash": config_hash(cfg)},
    )
    return cfg


def _ini_value(value: Any) -> str:
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def dump_ini(cfg: RunConfig) -> str:
    """Serialize to INI text that ``load_config`` reads back to an equal config."""
    dumped = cfg.model_dump(mode="json")
    parser = _parser()
    parser[RUN_SECTION] = {key: _ini_value(dumped[key]) for key in _TOP_LEVEL_KEYS}
    for section in RunConfig.sections():
        parser[section] = {key: _ini_value(value) for key, value in dumped[section].items()}
    buffer = io.StringIO()
    parser.write(buffer)
    return buffer.getvalue()


def dump_json(cfg: RunConfig) -> str:
    return cfg.model_dump_json(indent=2)


def parse_config_text(text: str, fmt: str = "ini") -> RunConfig:
    """Inverse of ``dump_ini`` / ``dump_json``."""
    if fmt == "json":
        try:
            return RunConfig.model_validate_json(text)
        except ValidationError as e:
            raise ConfigError(f"invalid run config: {e}") from e
    return build_config(_read_ini(text))


def write_config(cfg: RunConfig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = dump_json(cfg) if path.suffix.lower() == ".json" else dump_ini(cfg)
    path.write_text(text, encoding="utf-8")
    return path


def config_hash(cfg: RunConfig) -> str:
    """First 16 hex chars of SHA-256 over the canonical sorted JSON dump."""
    canonical = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def sweep_configs(base: RunConfig, grid: Optional[List[Dict[str, Any]]] = None) -> List[RunConfig]:
    """
    One config per grid entry and seed.

    The seed sets the dataset seed, the master seed and the sampler seed.
    Variant-implied switches are re-derived for every entry.
    """
    grid = SWEEP_GRIDS[base.profile] if grid is None else grid
    start = base.model_dump(mode="json")
    # variant-implied keys are dropped so each grid entry gets its own defaults
    for section, key in (("schedule", "balanced"), ("schedule", "zero_snr"), ("xi", "kind"),
                         ("model", "prediction"), ("sampler", "variant"), ("sampler", "prediction")):
        start[section].pop(key, None)
    start["xi"]["sigma_c_sq"] = 0.0

    configs = []
    for entry in grid:
        for seed in base.seeds:
            seeded = {
                **entry,
                "dataset.seed": seed,
                "master_seed": seed,
                "sampler.seed": seed,
            }
            configs.append(build_config(apply_overrides(start, seeded.items())))
    return configs
