"""Experiment config files: sectioned ``key = value`` text, parsed fail-closed.

::

    [experiment]
    experiment_id = demo
    problem = trapzeros
    n = 100
    N = 1
    trials = 1000
    seed = 42
    # optional: eval_budget (default 20 n^2), epsilon (default 5/5.1), early_abort

    [output]
    dir = results/demo

Keys are case sensitive (``n`` and ``N`` differ) and must be unique across
sections, so an override may name a key bare (``N=5``) or qualified
(``experiment.N=5``).
"""

import configparser
import json
import os
from dataclasses import fields

from .errors import ConfigurationError
from .trials import ExperimentConfig

SECTIONS = {
    "experiment": ("experiment_id", "problem", "n", "N", "trials", "seed", "eval_budget", "epsilon", "early_abort"),
    "output": ("dir",),
}
_FIELD_OF = {"dir": "output_dir"}
_INT_KEYS = {"n", "N", "trials", "seed", "eval_budget"}
_RANGES = {
    "problem": "one of trapzeros, onemax",
    "n": "integer >= 3 (trapzeros) or >= 1 (onemax)",
    "N": "integer >= 1",
    "trials": "integer >= 1",
    "seed": "integer in [0, 2^64)",
    "eval_budget": "integer >= N",
    "epsilon": "real in (0, 1]",
    "early_abort": "true or false",
}


def format_float(x):
    """Locale-independent float text with 17 significant digits."""
    return format(float(x), ".17g")


def _section_of(key):
    for section, keys in SECTIONS.items():
        if key in keys:
            return section
    return None


def _convert(key, text):
    text = text.strip()
    try:
        if key in _INT_KEYS:
            return int(text)
        if key == "epsilon":
            return float(text)
        if key == "early_abort":
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
    except ValueError:
        raise ConfigurationError(f"{key}: cannot parse '{text}'; expected {_RANGES[key]}") from None
    return text


def _read_pairs(path):
    if not os.path.isfile(path):
        raise ConfigurationError(f"config file not found: {path}")
    if path.endswith(".json"):
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if "config" not in data:
            raise ConfigurationError(f"{path}: manifest has no 'config' entry")
        return {k: ("" if v is None else str(v)) for k, v in data["config"].items() if v is not None}
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    pairs = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigurationError(f"unknown section [{section}]; accepted: {', '.join(SECTIONS)}")
        for key, value in parser.items(section):
            if key not in SECTIONS[section]:
                raise ConfigurationError(f"unknown key '{key}' in [{section}]; accepted: {', '.join(SECTIONS[section])}")
            pairs[key] = value
    return pairs


def parse_overrides(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigurationError(f"override '{item}' is not key=value")
        key, value = item.split("=", 1)
        key = key.strip()
        if "." in key:
            section, key = key.split(".", 1)
            if section not in SECTIONS or key not in SECTIONS[section]:
                raise ConfigurationError(f"unknown key '{section}.{key}'")
        elif _section_of(key) is None:
            raise ConfigurationError(f"unknown key '{key}'")
        out[key] = value
    return out


def parse_config(path, overrides=()) -> ExperimentConfig:
    """Read ``path`` (config text or a run manifest) and apply ``overrides``."""
    pairs = _read_pairs(path)
    for key in pairs:
        if _section_of(key) is None:
            raise ConfigurationError(f"unknown key '{key}'")
    pairs.update(parse_overrides(overrides))
    kwargs = {}
    for key, text in pairs.items():
        if key == "eval_budget" and text.strip() == "":
            continue
        kwargs[_FIELD_OF.get(key, key)] = _convert(key, text)
    for required in ("problem", "n", "N", "trials", "seed"):
        if required not in kwargs:
            raise ConfigurationError(f"missing required key '{required}' ({_RANGES[required]})")
    try:
        return ExperimentConfig(**kwargs)
    except ConfigurationError as exc:
        key = str(exc).split(":", 1)[0]
        hint = f" (accepted: {_RANGES[key]})" if key in _RANGES else ""
        raise ConfigurationError(f"{exc}{hint}") from None


def config_items(config: ExperimentConfig):
    """(key, text) pairs in file order; floats at 17 significant digits."""
    values = {f.name: getattr(config, f.name) for f in fields(config)}
    for section, keys in SECTIONS.items():
        for key in keys:
            v = values[_FIELD_OF.get(key, key)]
            if v is None:
                continue
            if isinstance(v, bool):
                text = "true" if v else "false"
            elif isinstance(v, float):
                text = format_float(v)
            else:
                text = str(v)
            yield section, key, text


def config_text(config: ExperimentConfig):
    lines, current = [], None
    for section, key, text in config_items(config):
        if section != current:
            if current is not None:
                lines.append("")
            lines.append(f"[{section}]")
            current = section
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def write_config(config: ExperimentConfig, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(config_text(config))
