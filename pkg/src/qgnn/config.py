"""``key = value`` run configuration files.

Blank lines and ``#`` comments are ignored. Every key must appear in
``SCHEMA``; values are converted with the schema type.
"""

from dataclasses import fields
from pathlib import Path

from .errors import ConfigurationError
from .graph import SelectionCuts
from .trainer import TrainConfig

GENERATOR_KEYS = {
    "n_events": int,
    "n_tracks": int,
    "noise": float,
    "pt_lo": float,
    "pt_hi": float,
}

CUT_KEYS = {f.name: float for f in fields(SelectionCuts)}
TRAIN_KEYS = {f.name: f.type for f in fields(TrainConfig)}
SCHEMA = {**GENERATOR_KEYS, **CUT_KEYS, **TRAIN_KEYS}


def _convert(key, raw, kind, where):
    try:
        return kind(raw)
    except ValueError:
        raise ConfigurationError(f"{where}: bad value {raw!r} for {key} "
                                 f"(expected {kind.__name__})") from None


def parse_config(text, schema=SCHEMA, source="<config>"):
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in schema:
            raise ConfigurationError(f"{source}:{lineno}: unknown config key {key!r}")
        values[key] = _convert(key, raw, schema[key], f"{source}:{lineno}")
    return values


def load_config(path, schema=SCHEMA):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, schema, str(path))


def cuts_from(values) -> SelectionCuts:
    return SelectionCuts(**{k: v for k, v in values.items() if k in CUT_KEYS})


def train_config_from(values) -> TrainConfig:
    return TrainConfig(**{k: v for k, v in values.items() if k in TRAIN_KEYS})
