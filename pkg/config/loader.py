"""
Load a JSON experiment config and merge it onto the defaults in config/settings.py
"""

import copy
import json
import logging

from config import settings
from src.errors import ConfigError

logger = logging.getLogger(__name__)

SECTIONS = {
    'grid_world': 'GRID_WORLD',
    'bellman': 'BELLMAN',
    'beta_sweep': 'BETA_SWEEP',
    'audit': 'AUDIT',
    'rate_distortion': 'RATE_DISTORTION',
    'miracle': 'MIRACLE',
    'environments': 'ENVIRONMENTS',
    'training': 'TRAINING',
    'output': 'OUTPUT'
}


def default_config():
    """Return a deep copy of all default sections"""
    return {section: copy.deepcopy(getattr(settings, name)) for section, name in SECTIONS.items()}


def _check_type(path, default, value):
    # None defaults accept anything numeric or None
    if default is None:
        if value is not None and not isinstance(value, (int, float)):
            raise ConfigError(f"'{path}' must be a number or null, got {value!r}")
        return
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"'{path}' must be true/false, got {value!r}")
    elif isinstance(default, (int, float)):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"'{path}' must be a number, got {value!r}")
    elif isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"'{path}' must be a string, got {value!r}")
    elif isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"'{path}' must be a list, got {value!r}")


def _merge(path, defaults, overrides):
    if not isinstance(overrides, dict):
        raise ConfigError(f"'{path}' must be an object")
    for key, value in overrides.items():
        key_path = f"{path}.{key}"
        if key not in defaults:
            raise ConfigError(f"unknown config key '{key_path}'")
        if isinstance(defaults[key], dict):
            _merge(key_path, defaults[key], value)
        else:
            _check_type(key_path, defaults[key], value)
            defaults[key] = value


def merge_config(overrides):
    """Merge an override mapping onto the defaults, rejecting unknown keys"""
    config = default_config()
    if not isinstance(overrides, dict):
        raise ConfigError("config root must be an object")
    for section, values in overrides.items():
        if section not in config:
            raise ConfigError(f"unknown config section '{section}'")
        _merge(section, config[section], values)
    return config


def load_config(path=None):
    """Load the config file at path (or only the defaults when path is None)"""
    if path is None:
        return default_config()
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            overrides = json.load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    logger.debug("loaded config overrides from %s: %s", path, sorted(overrides))
    return merge_config(overrides)
