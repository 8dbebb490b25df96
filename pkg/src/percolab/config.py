"""Flat ``key = value`` experiment configs.

Lengths are in meters and densities in km^-2, as a user would write them;
:meth:`RunConfig.params`, :meth:`RunConfig.density` and friends convert to
the internal m^-2. Lists are comma separated.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from percolab.units import from_per_km2


class ConfigError(ValueError):
    """Bad config; ``line`` is 1-based or None when the problem is not tied to a line."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = f"{path or '<config>'}:{line}: " if line else f"{path or '<config>'}: "
        super().__init__(where + message)


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (parser, default)
SCHEMA = {
    "R_p": (float, None),
    "R_I": (float, None),
    "r_p": (float, None),
    "r_I": (float, None),
    "lambda_S": (float, 0.0),
    "lambda_PT": (float, 0.0),
    "width": (float, 2000.0),
    "height": (float, None),
    "realizations": (int, 200),
    "seed": (int, 0),
    "crossing_threshold": (float, 0.5),
    "margin": (float, None),
    "interior_margin": (float, None),
    "direction": (str, "LR"),
    "export_index": (int, 0),
    "lambda_S_grid": (_floats, ()),
    "r_p_grid": (_floats, ()),
    "r_I_ratio": (float, 0.8),
    "beta": (float, None),
    "r_I_min": (float, None),
    "r_I_max": (float, None),
    "n_points": (int, 200),
    "lambda_c_unit": (float, 1.44),
    "n_configs": (int, 50),
    "mc_samples": (int, 10_000_000),
    "include_bounds": (_bool, True),
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)
    path: str | None = None

    def __getitem__(self, key):
        if key in self.values:
            return self.values[key]
        return SCHEMA[key][1]

    def require(self, *keys):
        missing = [k for k in keys if self[k] is None]
        if missing:
            raise ConfigError(f"missing required key(s): {', '.join(missing)}", path=self.path)

    def resolved(self):
        """Every schema key with its effective value, for manifests."""
        out = {}
        for key in SCHEMA:
            v = self[key]
            out[key] = list(v) if isinstance(v, tuple) else v
        return out

    # conversions -------------------------------------------------------
    def params(self):
        from percolab.pointprocess import RadioParams
        self.require("R_p", "R_I", "r_p", "r_I")
        try:
            return RadioParams(self["R_p"], self["R_I"], self["r_p"], self["r_I"])
        except ValueError as exc:
            raise ConfigError(str(exc), path=self.path) from None

    def density(self):
        from percolab.pointprocess import DensityPair
        try:
            return DensityPair.per_km2(self["lambda_S"], self["lambda_PT"])
        except ValueError as exc:
            raise ConfigError(str(exc), path=self.path) from None

    def experiment(self, params=None, threads=None):
        from percolab.percolation import ExperimentConfig
        from percolab.pointprocess import Window
        params = params or self.params()
        height = self["height"] if self["height"] is not None else self["width"]
        try:
            return ExperimentConfig(
                params, Window.for_params(self["width"], height, params),
                realizations=self["realizations"], master_seed=self["seed"],
                crossing_threshold=self["crossing_threshold"], margin=self["margin"],
                direction=self["direction"], threads=threads,
                interior_margin=self["interior_margin"])
        except ValueError as exc:
            raise ConfigError(str(exc), path=self.path) from None

    def lambda_S_grid(self):
        return tuple(from_per_km2(v) for v in self["lambda_S_grid"])


def parse_config(text, path=None) -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, path)
        key, _, value = (s.strip() for s in line.partition("="))
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno, path)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno, path)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno, path)
        parser = SCHEMA[key][0]
        try:
            values[key] = parser(value)
        except ValueError:
            raise ConfigError(f"cannot parse {key} = {value!r} as {parser.__name__.lstrip('_')}",
                              lineno, path) from None
    return RunConfig(values, path)


def from_mapping(mapping, path=None) -> RunConfig:
    """Config from a manifest's resolved ``config`` dict (None means default)."""
    values = {}
    for key, value in mapping.items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", path=path)
        if value is None:
            continue
        parser = SCHEMA[key][0]
        try:
            if parser is _floats:
                values[key] = tuple(float(v) for v in value)
            elif parser is _bool:
                values[key] = bool(value)
            else:
                values[key] = parser(value)
        except (TypeError, ValueError):
            raise ConfigError(f"bad value for {key!r}: {value!r}", path=path) from None
    return RunConfig(values, path)


def load_config(path):
    """Read a ``key = value`` file, or a run manifest (JSON) to replay it.

    Returns ``(config, command)``; ``command`` is None for plain configs.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path=path) from None
    if text.lstrip().startswith("{"):
        try:
            manifest = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid manifest JSON: {exc.msg}", exc.lineno, path) from None
        if not isinstance(manifest, dict) or "config" not in manifest:
            raise ConfigError("manifest lacks a 'config' object", path=path)
        return from_mapping(manifest["config"], path), manifest.get("command")
    return parse_config(text, path), None
