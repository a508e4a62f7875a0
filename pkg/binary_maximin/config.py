"""Experiment files and process settings for the benchmark runner."""

from __future__ import annotations

import configparser
from dataclasses import dataclass
import logging
import os
from pathlib import Path
import re
from typing import Any, Mapping

from jsonschema import ValidationError, validate
from pydantic import ValidationError as PydanticValidationError

from .const import DEFAULT_WORKERS, ENV_LOG_LEVEL, ENV_OUTPUT_DIR, ENV_WORKERS
from .models import ExperimentConfig, SolveConfig

LOGGER = logging.getLogger(__name__)

__all__ = [
    "ConfigError",
    "Settings",
    "load_settings",
    "parse_experiment",
    "load_experiment",
    "EXPERIMENT_SCHEMA",
]

EXPERIMENT_SCHEMA = ExperimentConfig.model_json_schema(mode="validation")
METHOD_PREFIX = "method:"
_STRING_KEYS = frozenset(
    {"name", "output", "path", "kind", "loss", "method", "timescale", "x_scale", "noise", "sweep"}
)
_LIST_KEYS = frozenset({"sweep_values"})
_INTEGER = re.compile(r"[+-]?\d+")
_TRUE = frozenset({"true", "yes", "on"})
_FALSE = frozenset({"false", "no", "off"})


class ConfigError(ValueError):
    """Raised when an experiment file cannot be parsed or validated."""


@dataclass(frozen=True)
class Settings:
    """Process configuration derived from environment variables."""

    output_dir: Path | None
    workers: int
    log_level: str


def _parse_int(value: str | None, default: int) -> int:
    if value is None:
        return default
    try:
        parsed = int(value)
    except ValueError:
        return default
    return parsed if parsed > 0 else default


def load_settings(env: Mapping[str, str] | None = None) -> Settings:
    """Load process settings from ``env`` (defaults to ``os.environ``)."""

    env = os.environ if env is None else env
    output_dir = env.get(ENV_OUTPUT_DIR) or None
    return Settings(
        output_dir=Path(output_dir) if output_dir else None,
        workers=_parse_int(env.get(ENV_WORKERS), DEFAULT_WORKERS),
        log_level=(env.get(ENV_LOG_LEVEL) or "INFO").upper(),
    )


def _coerce(key: str, raw: str) -> Any:
    text = raw.strip()
    if key in _LIST_KEYS:
        return [_coerce("", item) for item in text.split(",") if item.strip()]
    if key in _STRING_KEYS:
        return text
    lowered = text.lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    if lowered in {"none", "null", ""}:
        return None
    if _INTEGER.fullmatch(text):
        return int(text)
    try:
        return float(text)
    except ValueError:
        return text


def _section(parser: configparser.ConfigParser, name: str) -> dict[str, Any]:
    return {key: _coerce(key, value) for key, value in parser.items(name)}


def _method_entry(label: str, options: dict[str, Any]) -> dict[str, Any]:
    solver_keys = set(SolveConfig.model_fields)
    solver = {key: options.pop(key) for key in list(options) if key in solver_keys}
    entry: dict[str, Any] = {"label": label, **options}
    if solver:
        entry["solver"] = solver
    return entry


def parse_experiment(text: str, *, source: str = "<string>") -> ExperimentConfig:
    """Parse an INI experiment description and validate it against the experiment schema."""

    parser = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    if not parser.has_section("experiment"):
        raise ConfigError(f"{source}: missing [experiment] section")
    payload: dict[str, Any] = _section(parser, "experiment")
    methods = []
    for name in parser.sections():
        if name == "experiment":
            continue
        if name in {"generator", "dataset"}:
            payload[name] = _section(parser, name)
        elif name.startswith(METHOD_PREFIX):
            label = name[len(METHOD_PREFIX) :].strip()
            methods.append(_method_entry(label, _section(parser, name)))
        else:
            raise ConfigError(f"{source}: unknown section [{name}]")
    payload["methods"] = methods

    try:
        validate(instance=payload, schema=EXPERIMENT_SCHEMA)
    except ValidationError as exc:
        location = ".".join(str(part) for part in exc.absolute_path) or "<root>"
        raise ConfigError(f"{source}: {location}: {exc.message}") from exc
    try:
        config = ExperimentConfig.model_validate(payload)
    except PydanticValidationError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    LOGGER.debug("experiment_parsed source=%s methods=%d", source, len(config.methods))
    return config


def load_experiment(path: str | Path) -> ExperimentConfig:
    """Read an experiment file; a relative dataset path resolves against the file's directory."""

    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
    config = parse_experiment(text, source=str(path))
    if config.dataset is not None and not Path(config.dataset.path).is_absolute():
        resolved = (path.parent / config.dataset.path).resolve()
        config = config.model_copy(
            update={"dataset": config.dataset.model_copy(update={"path": str(resolved)})}
        )
    return config
