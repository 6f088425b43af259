"""Run configuration: defaults < TOML file < command-line flags."""
from __future__ import annotations

import copy
from pathlib import Path

import toml

from ..net import NetConfig
from ..synthgen import SynthSpec


class ConfigError(ValueError):
    pass


def _defaults() -> dict:
    synth = SynthSpec().to_dict()
    synth["node_count_weights"] = []   # empty means uniform over node_counts
    del synth["seed"]                  # the cohort uses run.seed
    return {
        "run": {"seed": 0, "repeat": 10, "out": "runs"},
        "paths": {"manifest": "", "checkpoint": "", "annotation_dir": "", "subject_csv": "",
                  "precomputed_csv": "", "spec": ""},
        "net": NetConfig().to_dict(),
        "train": {"steps": 2000, "batch_size": 64, "learning_rate": 1e-3, "beta1": 0.9,
                  "beta2": 0.999, "epsilon": 1e-8},
        "split": {"template_frac": 0.10, "train_frac": 0.80},
        "eval": {"theta": 0.5, "protocol": False},
        "explain": {"theta": 0.8, "k_list": list(range(5, 131, 5))},
        "graph": {"method": "knn", "k": 2, "threshold": 40.0, "levels": 32, "unknown_labels": "error"},
        "synth": synth,
        "sweep": {"M": [1, 2, 3, 4], "L": [2, 3, 4, 5], "d": [32, 64, 128, 256], "edge_compare": False},
    }


DEFAULTS = _defaults()


def _coerce(section: str, key: str, value, default):
    where = f"{section}.{key}"
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "1", "0"):
            return value.lower() in ("true", "1")
        raise ConfigError(f"{where} must be a boolean, got {value!r}")
    if isinstance(default, int):
        if isinstance(value, str):
            try:
                return int(value)
            except ValueError:
                raise ConfigError(f"{where} must be an integer, got {value!r}") from None
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool):
            raise ConfigError(f"{where} must be a number, got {value!r}")
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{where} must be a number, got {value!r}") from None
    if isinstance(default, list):
        if isinstance(value, str):
            value = toml.loads(f"v = {value}")["v"] if value.strip().startswith("[") else \
                [v.strip() for v in value.split(",") if v.strip()]
        if not isinstance(value, list):
            raise ConfigError(f"{where} must be a list, got {value!r}")
        if default and isinstance(default[0], (int, float)) and not isinstance(default[0], bool):
            kind = type(default[0])
            try:
                return [kind(v) for v in value]
            except (TypeError, ValueError):
                raise ConfigError(f"{where} must be a list of numbers") from None
        return list(value)
    if isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError(f"{where} must be a table, got {value!r}")
        return dict(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string, got {value!r}")
        return value
    return value


def merge(base: dict, overrides: dict, source: str) -> dict:
    """Overlay ``overrides`` on ``base``; unknown sections or keys are errors."""
    out = copy.deepcopy(base)
    for section, values in overrides.items():
        if section not in DEFAULTS:
            raise ConfigError(f"{source}: unknown section [{section}]")
        if not isinstance(values, dict):
            raise ConfigError(f"{source}: [{section}] must be a table")
        for key, value in values.items():
            if key not in DEFAULTS[section]:
                raise ConfigError(f"{source}: unknown key {section}.{key}")
            out[section][key] = _coerce(section, key, value, DEFAULTS[section][key])
    return out


def load_file(path) -> dict:
    try:
        return toml.load(str(path))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except toml.TomlDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def parse_set(items) -> dict:
    """``section.key=value`` strings -> nested override dict."""
    out: dict = {}
    for item in items or ():
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        dotted, value = item.split("=", 1)
        section, key = dotted.split(".", 1)
        out.setdefault(section, {})[key] = value
    return out


def resolve(config_path=None, flag_overrides: dict | None = None) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if config_path:
        cfg = merge(cfg, load_file(config_path), str(config_path))
    if flag_overrides:
        cfg = merge(cfg, flag_overrides, "command line")
    return cfg


def write_snapshot(cfg: dict, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(toml.dumps(cfg))
    tmp.replace(path)


def synth_spec(cfg: dict) -> SynthSpec:
    d = dict(cfg["synth"], seed=cfg["run"]["seed"])
    d["node_count_weights"] = d["node_count_weights"] or None
    return SynthSpec.from_dict(d)
