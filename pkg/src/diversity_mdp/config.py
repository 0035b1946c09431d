"""Run configuration files: parsing, schema checks and object construction.

Configs are YAML (JSON is accepted as a subset).  Every block rejects
unknown keys by name, because a misspelt ``rho`` or ``gamma`` silently
falling back to a default would invalidate an experiment.

Example::

    distribution: {kind: zeta, s: 2}
    index: {alpha: 2, gamma: 0, transform: none}
    scale: {form: power, c: 1, rho: 0.1}
    n_grid: [1000, 10000, 100000]
    r_grid: [1.0]
    replicates: 200000
    master_seed: 20240501
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml

from .distributions import (
    CountableDistribution,
    Finite,
    Geometric,
    TriangularFamily,
    TwoPointPerturbed,
    Zeta,
    load_weights_csv,
    shrinking_geometric_family,
    two_point_family,
)
from .indices import IndexFamily
from .mdp import MdpScale, log_power_scale, power_scale

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "build_distribution", "build_index", "build_scale"]


class ConfigError(ValueError):
    pass


_DIST_KEYS = {
    "finite": ({"kind"}, {"weights", "csv"}),
    "geometric": ({"kind", "q"}, set()),
    "zeta": ({"kind", "s"}, set()),
    "two_point_perturbed": ({"kind", "gamma"}, {"n"}),
    "shrinking_geometric": ({"kind", "alpha"}, set()),
}
_TOP_REQUIRED = {
    "validate": {"distribution", "index", "scale", "n_grid"},
    "simulate": {"distribution", "index", "scale", "n_grid", "replicates"},
    "rate": {"distribution", "index", "scale", "n_grid", "replicates", "r_grid"},
}
# master_seed may instead come from --seed; keys used by other commands are
# tolerated so that one file can drive validate, simulate and rate
_TOP_OPTIONAL = {
    "validate": {"tol", "master_seed", "replicates", "r_grid"},
    "simulate": {"tol", "master_seed", "r_grid"},
    "rate": {"tol", "master_seed"},
}


def _check_keys(block, required, optional, where):
    if not isinstance(block, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(block).__name__}")
    for key in block:
        if key not in required and key not in optional:
            raise ConfigError(f"{where}: unknown key {key!r}")
    for key in sorted(required):
        if key not in block:
            raise ConfigError(f"{where}: missing required key {key!r}")


def _number(block, key, where):
    v = block[key]
    # YAML 1.1 reads 1e-3 (no dot) as a string
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    try:
        return float(v)
    except ValueError:
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}") from None


def build_distribution(block, base_dir: Path | None = None) -> CountableDistribution | TriangularFamily:
    where = "distribution"
    if not isinstance(block, dict) or "kind" not in block:
        raise ConfigError(f"{where}: missing required key 'kind'")
    kind = block["kind"]
    if kind not in _DIST_KEYS:
        raise ConfigError(f"{where}.kind: unknown kind {kind!r}; expected one of {sorted(_DIST_KEYS)}")
    required, optional = _DIST_KEYS[kind]
    _check_keys(block, required, optional, where)
    try:
        if kind == "finite":
            if ("weights" in block) == ("csv" in block):
                raise ConfigError(f"{where}: finite needs exactly one of 'weights' or 'csv'")
            if "csv" in block:
                path = Path(block["csv"])
                if base_dir is not None and not path.is_absolute():
                    path = base_dir / path
                return load_weights_csv(path)[0]
            return Finite([float(w) for w in block["weights"]])
        if kind == "geometric":
            return Geometric(_number(block, "q", where))
        if kind == "zeta":
            return Zeta(_number(block, "s", where))
        if kind == "two_point_perturbed":
            gamma = _number(block, "gamma", where)
            if "n" in block:
                return TwoPointPerturbed(gamma, int(block["n"]))
            return two_point_family(gamma)
        return shrinking_geometric_family(_number(block, "alpha", where))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def build_index(block) -> IndexFamily:
    where = "index"
    _check_keys(block, {"alpha"}, {"gamma", "transform"}, where)
    alpha = _number(block, "alpha", where)
    gamma = _number(block, "gamma", where) if "gamma" in block else 0.0
    transform = str(block.get("transform", "none"))
    try:
        return IndexFamily(alpha, gamma, transform)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def build_scale(block) -> MdpScale:
    where = "scale"
    if not isinstance(block, dict) or "form" not in block:
        raise ConfigError(f"{where}: missing required key 'form'")
    form = block["form"]
    if form == "power":
        _check_keys(block, {"form", "rho"}, {"c"}, where)
        make, key = power_scale, "rho"
    elif form == "log_power":
        _check_keys(block, {"form", "kappa"}, {"c"}, where)
        make, key = log_power_scale, "kappa"
    else:
        raise ConfigError(f"{where}.form: unknown form {form!r}; expected 'power' or 'log_power'")
    c = _number(block, "c", where) if "c" in block else 1.0
    try:
        return make(c, _number(block, key, where))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass
class RunConfig:
    command: str
    source: CountableDistribution | TriangularFamily
    family: IndexFamily
    scale: MdpScale
    n_grid: list[int]
    r_grid: list[float]
    replicates: int | None
    master_seed: int | None
    tol: float
    raw: dict


def _int_list(value, where):
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{where}: expected a non-empty list")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v or v < 1:
            raise ConfigError(f"{where}: expected positive integers, got {v!r}")
        out.append(int(v))
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ConfigError(f"{where}: must be strictly increasing")
    return out


def parse_config(raw: dict, command: str, base_dir: Path | None = None) -> RunConfig:
    if command not in _TOP_REQUIRED:
        raise ConfigError(f"no config schema for command {command!r}")
    _check_keys(raw, _TOP_REQUIRED[command], _TOP_OPTIONAL[command], "config")
    r_grid = []
    if "r_grid" in raw:
        if not isinstance(raw["r_grid"], list) or not raw["r_grid"]:
            raise ConfigError("r_grid: expected a non-empty list")
        r_grid = [_number({"r": r}, "r", "r_grid") for r in raw["r_grid"]]
        if any(not r > 0 for r in r_grid):
            raise ConfigError("r_grid: values must be positive")
    replicates = None
    if "replicates" in raw:
        replicates = raw["replicates"]
        if isinstance(replicates, bool) or not isinstance(replicates, int) or replicates < 1:
            raise ConfigError(f"replicates: expected a positive integer, got {replicates!r}")
    seed = None
    if "master_seed" in raw:
        seed = raw["master_seed"]
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigError(f"master_seed: expected a nonnegative integer, got {seed!r}")
    tol = _number(raw, "tol", "config") if "tol" in raw else 1e-10
    if not tol > 0:
        raise ConfigError("tol: must be positive")
    return RunConfig(
        command=command,
        source=build_distribution(raw["distribution"], base_dir),
        family=build_index(raw["index"]),
        scale=build_scale(raw["scale"]),
        n_grid=_int_list(raw["n_grid"], "n_grid"),
        r_grid=r_grid,
        replicates=replicates,
        master_seed=seed,
        tol=tol,
        raw=raw,
    )


def load_config(path, command: str) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML/JSON: {exc}") from None
    if raw is None:
        raw = {}
    return parse_config(raw, command, path.parent)
