"""Run configuration: JSON schema validation and typed access."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources

import jsonschema
import numpy as np

from ..errors import ConfigError
from ..lindblad import ModelParams

STRATEGIES = ("ambiguous_theoretical", "ambiguous_numerical", "unambiguous")


def load_schema():
    return json.loads(resources.files("qamem.harness").joinpath("schema.json").read_text())


def validate(data):
    """Raise ``ConfigError`` naming the offending key if ``data`` breaks the schema."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {err.message}")


def canonical_json(data):
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(data):
    return hashlib.sha256(canonical_json(data).encode()).hexdigest()


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    experiment: str | None = None
    seed: int = 0
    output_dir: str = "out"
    form: str = "general"
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    def section(self, name):
        return self.raw.get(name, {})

    def get(self, name, default=None):
        return self.raw.get(name, default)

    @property
    def hash(self):
        return config_hash(self.raw)

    def times(self, default_max=None, default_points=80):
        """Time grid from the ``times`` entry (explicit list or generator spec)."""
        spec = self.raw.get("times")
        if spec is None:
            if default_max is None:
                raise ConfigError("config error at times: a time grid is required")
            spec = {"t_max": default_max}
        if isinstance(spec, list):
            return np.asarray(spec, dtype=float)
        t_max = spec["t_max"]
        pts = spec.get("points", default_points)
        scale = spec.get("scale", "log")
        if scale == "log":
            t_min = spec.get("t_min", t_max * 1e-4)
            if t_min >= t_max:
                raise ConfigError("config error at times: t_min must be below t_max")
            grid = np.geomspace(t_min, t_max, pts)
        else:
            grid = np.linspace(spec.get("t_min", 0.0), t_max, pts)
        if spec.get("include_zero", True) and grid[0] > 0:
            grid = np.concatenate([[0.0], grid])
        return grid


def from_dict(data):
    validate(data)
    try:
        params = ModelParams.from_dict(data.get("params", {}))
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"config error at params: {exc}") from exc
    return RunConfig(
        params=params,
        experiment=data.get("experiment"),
        seed=int(data.get("seed", 0)),
        output_dir=data.get("output_dir", "out"),
        form=data.get("form", "general"),
        raw=data,
    )


def load(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config error: malformed JSON in {path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"config error: cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config error at <root>: top level must be an object")
    return from_dict(data)
