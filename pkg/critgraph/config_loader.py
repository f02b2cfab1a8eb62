"""Settings and experiment-spec loading.

JSON and TOML are both accepted, chosen by file suffix. Library defaults live in
``configs/lab_settings.json``; a user override file can be named through the
``CRITGRAPH_SETTINGS`` environment variable.

Usage:
    settings = load_settings()
    raw = ConfigLoader("configs/example_experiment.toml").load()
"""
from __future__ import annotations

import json
import os
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - Python 3.10 backport
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, Optional

from .error_handling import LabConfigError

SETTINGS_ENV_VAR = 'CRITGRAPH_SETTINGS'
DEFAULT_SETTINGS_PATH = Path(__file__).resolve().parent.parent / 'configs' / 'lab_settings.json'

# Used when configs/ is not shipped alongside the package.
BUILTIN_SETTINGS: Dict[str, Any] = {
    'truncation_K': 200,
    'quad_rel_tol': 1e-8,
    'theta_cutoff': 1e-12,
    'diameter_exact_max': 100000,
    'tilt_enumerate_max_m': 8,
    'uniform_simple_max_tries': 1000,
    'sandwich_eps_factor': 4.0,
    'excursion_pilot_paths': 20,
    'excursion_pilot_quantile': 0.99,
    'failure_history_limit': 100,
}


class ConfigLoader:
    """Load a JSON or TOML mapping from disk.

    Missing files load as an empty mapping only when ``required`` is false;
    malformed files always raise ``LabConfigError``.
    """

    def __init__(self, path: Optional[str | os.PathLike] = None, required: bool = False):
        self.path = Path(path) if path else None
        self.required = required

    def load(self) -> Dict[str, Any]:
        if not self.path or not self.path.exists():
            if self.required:
                raise LabConfigError('configuration file not found',
                                     context={'path': str(self.path)})
            return {}
        try:
            if self.path.suffix == '.toml':
                with self.path.open('rb') as fh:
                    data = tomllib.load(fh)
            else:
                with self.path.open('r', encoding='utf-8') as fh:
                    data = json.load(fh)
        except (OSError, json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
            raise LabConfigError('could not parse configuration file',
                                 context={'path': str(self.path)},
                                 original_exception=exc) from exc
        if not isinstance(data, dict):
            raise LabConfigError('configuration root must be a mapping',
                                 context={'path': str(self.path), 'type': type(data).__name__})
        return data


def load_settings(override_path: Optional[str | os.PathLike] = None) -> Dict[str, Any]:
    """Built-in defaults, then configs/lab_settings.json, then the override file."""
    settings = dict(BUILTIN_SETTINGS)
    settings.update(ConfigLoader(DEFAULT_SETTINGS_PATH).load())
    override = override_path or os.environ.get(SETTINGS_ENV_VAR)
    if override:
        extra = ConfigLoader(override, required=True).load()
        unknown = sorted(set(extra) - set(BUILTIN_SETTINGS))
        if unknown:
            raise LabConfigError('unknown settings keys', context={'keys': unknown})
        settings.update(extra)
    return settings


def get_setting(key: str, settings: Optional[Dict[str, Any]] = None) -> Any:
    source = settings if settings is not None else load_settings()
    if key not in source:
        raise LabConfigError('unknown setting', context={'key': key})
    return source[key]
