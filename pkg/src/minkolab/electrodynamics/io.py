"""Run configuration (JSON) and trajectory output (CSV) for the dynamics engine.

Configuration schema::

    {"particles": [{"mass": 1, "charge": 1,
                    "history": {"type": "uniform", "position": [x, y, z],
                                "beta": b or [bx, by, bz], "depth": T, "spacing": 0.05}}
                   | {..., "history": {"type": "file", "path": "hist.json"}}],
     "dtau": 0.01, "tau_end": 10, "min_separation": 1e-3}

``depth`` is the coordinate-time span of the generated straight history, which
ends at tau = 0, t = 0.  File paths are resolved against the config's folder.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DomainError
from ..minkowski import lorentz_factor, load_worldline, minkowski_dot, uniform_worldline
from .fields import Particle
from .integrator import IntegrationConfig, IntegrationResult

TRAJECTORY_COLUMNS = ("particle_id", "tau", "x", "y", "z", "t", "vx", "vy", "vz", "vt",
                      "|v.v-1|", "min_sep")


def _number(block: dict, key: str, default=None) -> float:
    if key not in block:
        if default is None:
            raise ConfigError(f"missing required field {key!r}")
        return default
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"field {key!r} must be a finite number, got {value!r}")
    return float(value)


def _vector(value, key: str, length: int = 3) -> list:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value] + [0.0] * (length - 1)
    if (not isinstance(value, list) or len(value) != length
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise ConfigError(f"field {key!r} must be a number or a list of {length} numbers")
    return [float(v) for v in value]


def _history(block, base: Path):
    if not isinstance(block, dict) or "type" not in block:
        raise ConfigError("each particle needs a history object with a 'type'")
    kind = block["type"]
    if kind == "uniform":
        beta = _vector(block.get("beta", 0.0), "beta")
        depth = _number(block, "depth")
        spacing = _number(block, "spacing", 0.05)
        if not (depth > 0 and spacing > 0):
            raise ConfigError("history depth and spacing must be positive")
        tau_depth = depth / lorentz_factor(np.array(beta))
        return uniform_worldline(_vector(block.get("position", [0, 0, 0]), "position"), beta,
                                 -tau_depth, 0.0, spacing)
    if kind == "file":
        if not isinstance(block.get("path"), str):
            raise ConfigError("file history needs a 'path' string")
        path = Path(block["path"])
        try:
            return load_worldline(path if path.is_absolute() else base / path,
                                  order=int(block.get("order", 3)))
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ConfigError(f"cannot read history file {path}: {exc}") from exc
    raise ConfigError(f"unknown history type {kind!r}")


def parse_config(data: dict, base: Path = Path(".")):
    """Particles and integration settings from an already-decoded config object."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    raw = data.get("particles")
    if not isinstance(raw, list) or not raw:
        raise ConfigError("config needs a non-empty 'particles' list")
    particles = []
    try:
        for i, block in enumerate(raw):
            if not isinstance(block, dict):
                raise ConfigError(f"particle {i} must be an object")
            particles.append(Particle(_number(block, "mass"), _number(block, "charge"),
                                      _history(block.get("history"), base)))
        config = IntegrationConfig(
            dtau=_number(data, "dtau", 0.01),
            tau_end=_number(data, "tau_end", 1.0),
            min_separation=_number(data, "min_separation", 1e-3),
            lightcone_tolerance=_number(data, "lightcone_tolerance", 1e-10),
            renormalize_velocity=bool(data.get("renormalize_velocity", False)),
        )
    except (DomainError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return particles, config


def load_config(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    return parse_config(data, path.parent)


def fmt(value) -> str:
    return f"{float(value):.12g}"


def trajectory_rows(result: IntegrationResult, tau_from: float):
    """Integrated samples only (tau >= tau_from); of a repeated knot the later copy is kept."""
    for pid, h in enumerate(result.trajectories):
        taus = h.tau
        keep = taus >= tau_from
        keep[:-1] &= taus[:-1] != taus[1:]
        for i in np.flatnonzero(keep):
            p, v = h.position[i], h.velocity[i]
            drift = abs(minkowski_dot(v, v) - 1.0)
            yield [str(pid), fmt(taus[i]), fmt(p[1]), fmt(p[2]), fmt(p[3]), fmt(p[0]),
                   fmt(v[1]), fmt(v[2]), fmt(v[3]), fmt(v[0]), fmt(drift), fmt(h.separation[i])]


def write_trajectories(path, result: IntegrationResult, tau_from: float):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_COLUMNS)
        writer.writerows(trajectory_rows(result, tau_from))
