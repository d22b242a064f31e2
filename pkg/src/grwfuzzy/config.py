"""Scenario configuration files.

The format is INI text with one section per layer::

    [scenario]
    n_marbles = 10
    a_sq = 0.95
    order = individual_first

    [fuzzy]
    p = 0.1

    [grw]
    lambda_hit = 1e-15

Missing keys take the dataclass defaults. ``none`` stands for an unset
optional value. Floats are written with ``repr`` so a file emitted by
:func:`emit_config` parses back to an equal config.
"""

from __future__ import annotations

import configparser
import io
import typing
from collections.abc import Mapping
from dataclasses import fields
from pathlib import Path

from .dynamics import GrwParams
from .errors import ValidationError
from .scenarios import Order, ScenarioConfig
from .semantics import FuzzyConfig

SECTIONS = {"scenario": ScenarioConfig, "fuzzy": FuzzyConfig, "grw": GrwParams}

# short flag names -> (section, key)
FLAG_KEYS = {
    "n": ("scenario", "n_marbles"),
    "a2": ("scenario", "a_sq"),
    "p": ("fuzzy", "p"),
    "epsilon": ("grw", "epsilon_leak"),
    "seed": ("scenario", "seed"),
    "trials": ("scenario", "trials"),
    "order": ("scenario", "order"),
    "duration": ("scenario", "duration"),
}

ORDER_ALIASES = {
    "individual": Order.INDIVIDUAL_FIRST,
    "collective": Order.COLLECTIVE_FIRST,
    "individual_first": Order.INDIVIDUAL_FIRST,
    "collective_first": Order.COLLECTIVE_FIRST,
}

_NESTED = {"fuzzy", "grw"}


def _field_types(cls) -> dict[str, object]:
    hints = typing.get_type_hints(cls)
    return {f.name: hints[f.name] for f in fields(cls) if f.name not in _NESTED}


def _coerce(section: str, key: str, raw, typ):
    """Turn a text or Python value into the field's type."""
    where = f"[{section}] {key}"
    optional = False
    args = typing.get_args(typ)
    if type(None) in args:
        optional = True
        typ = next(a for a in args if a is not type(None))
    if isinstance(raw, str):
        text = raw.strip()
        if optional and text.lower() in ("none", ""):
            return None
    else:
        if raw is None:
            if optional:
                return None
            raise ValidationError(f"{where} may not be empty")
        text = raw
    try:
        if typ is Order:
            return ORDER_ALIASES[str(text.value if isinstance(text, Order) else text).lower()]
        if typ is bool:
            if isinstance(text, bool):
                return text
            low = str(text).lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if typ is int:
            if isinstance(text, float) and not text.is_integer():
                raise ValueError(text)
            return int(text)
        if typ is float:
            return float(text)
        return str(text)
    except (KeyError, ValueError, TypeError):
        raise ValidationError(f"{where}: cannot read {raw!r} as {getattr(typ, '__name__', typ)}") from None


def _build(values: dict[str, dict]) -> ScenarioConfig:
    fuzzy = FuzzyConfig(**values["fuzzy"])
    grw = GrwParams(**values["grw"])
    return ScenarioConfig(fuzzy=fuzzy, grw=grw, **values["scenario"])


def parse_config(path=None, overrides: Mapping | None = None, text: str | None = None) -> ScenarioConfig:
    """Read a config file (or ``text``) and apply overrides on top.

    ``overrides`` maps either short flag names (``n``, ``p``, ``a2``,
    ``epsilon``, ``seed``, ``trials``, ``order``, ``duration``) or
    ``"section.key"`` to values; ``None`` values are ignored so an argparse
    namespace can be passed through directly.
    """
    parser = configparser.ConfigParser(interpolation=None)
    if path is not None:
        p = Path(path)
        try:
            with p.open(encoding="utf-8") as fh:
                parser.read_file(fh, source=str(p))
        except OSError as exc:
            raise OSError(f"cannot read config {p}: {exc.strerror or exc}") from exc
        except configparser.Error as exc:
            raise ValidationError(f"malformed config {p}: {exc}") from None
    elif text is not None:
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ValidationError(f"malformed config: {exc}") from None

    types = {name: _field_types(cls) for name, cls in SECTIONS.items()}
    values: dict[str, dict] = {name: {} for name in SECTIONS}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ValidationError(f"unknown section [{section}]; expected one of {sorted(SECTIONS)}")
        for key, raw in parser.items(section):
            if key not in types[section]:
                raise ValidationError(f"unknown key [{section}] {key}")
            values[section][key] = _coerce(section, key, raw, types[section][key])

    for name, val in (overrides or {}).items():
        if val is None:
            continue
        if name in FLAG_KEYS:
            section, key = FLAG_KEYS[name]
        elif "." in name:
            section, key = name.split(".", 1)
        else:
            raise ValidationError(f"unknown override {name!r}")
        if section not in types or key not in types[section]:
            raise ValidationError(f"unknown override {name!r}")
        values[section][key] = _coerce(section, key, val, types[section][key])
    return _build(values)


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, Order):
        return value.value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_sections(cfg: ScenarioConfig) -> dict[str, dict[str, str]]:
    out = {}
    for name, obj in (("scenario", cfg), ("fuzzy", cfg.fuzzy), ("grw", cfg.grw)):
        out[name] = {k: _format(getattr(obj, k)) for k in _field_types(type(obj))}
    return out


def emit_config(cfg: ScenarioConfig) -> str:
    """Config text that :func:`parse_config` reads back to ``cfg``."""
    parser = configparser.ConfigParser(interpolation=None)
    for name, items in config_sections(cfg).items():
        parser[name] = items
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
