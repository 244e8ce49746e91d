"""Scenario files: TOML in reduced units, validated before any computation.

Schema (all tables optional except ``cutoff`` and ``suspension``)::

    name = "desk-default"
    [params]      m0, tau, hbar
    [cutoff]      model = "lorentzian" | "rational4" | "gaussian", omega_cut, strength
    [suspension]  kind = "harmonic" (omega0) | "discrete" (levels = [[w, |q|^2], ...])
    [grid]        preset = "standard" | "fine" | "coarse", per_decade, file
    [time]        t = [...] or tmin, tmax, points
    [quadrature]  rtol, limit
    [limits]      band = [center, half_width], plateau = [lo, hi]
    [montecarlo]  n_samples, dt, n_traj, seed
    [output]      dir
"""
from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .exceptions import ConfigError
from .moments import Budget
from .response import Discrete, Harmonic
from .scattering import Gaussian, Lorentzian, MirrorParams, Rational4

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

BUILTIN = ("desk-default", "unbound", "rational-4", "anharmonic-3level")
GRID_PRESETS = {"coarse": 10, "standard": 40, "fine": 120}
_MODELS = {"lorentzian": Lorentzian, "rational4": Rational4, "gaussian": Gaussian}
_SCHEMA = {
    "name": None,
    "params": {"m0", "tau", "hbar"},
    "cutoff": {"model", "omega_cut", "strength"},
    "suspension": {"kind", "omega0", "levels"},
    "grid": {"preset", "per_decade", "file"},
    "time": {"t", "tmin", "tmax", "points"},
    "quadrature": {"rtol", "limit"},
    "limits": {"band", "plateau"},
    "montecarlo": {"n_samples", "dt", "n_traj", "seed"},
    "output": {"dir"},
}


@dataclass(frozen=True)
class Scenario:
    name: str
    params: MirrorParams
    model: object
    suspension: object
    grid: dict
    time: dict
    budget: Budget
    limits: dict
    montecarlo: dict
    output_dir: str | None
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def hash(self):
        """Digest of the canonical JSON form of the raw scenario."""
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _number(table, key, default, positive=True, integer=False):
    v = table.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key} must be a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{key} must be an integer")
    if positive and not v > 0:
        raise ConfigError(f"{key} must be positive, got {v!r}")
    return int(v) if integer else float(v)


def _check_keys(raw):
    for key, value in raw.items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown table or key {key!r}")
        allowed = _SCHEMA[key]
        if allowed is None:
            continue
        if not isinstance(value, dict):
            raise ConfigError(f"[{key}] must be a table")
        extra = set(value) - allowed
        if extra:
            raise ConfigError(f"unknown keys in [{key}]: {sorted(extra)}")


def from_dict(raw, name=None):
    _check_keys(raw)
    name = raw.get("name", name)
    if not isinstance(name, str) or not name:
        raise ConfigError("scenario needs a name")
    p = raw.get("params", {})
    try:
        params = MirrorParams(_number(p, "m0", 1.0), _number(p, "tau", 1e-6), _number(p, "hbar", 1.0))
        c = raw.get("cutoff")
        if c is None:
            raise ConfigError("missing [cutoff]")
        kind = c.get("model")
        if kind not in _MODELS:
            raise ConfigError(f"cutoff model must be one of {sorted(_MODELS)}, got {kind!r}")
        model = _MODELS[kind](_number(c, "omega_cut", None), _number(c, "strength", 1.0, positive=False))
        sp = raw.get("suspension")
        if sp is None:
            raise ConfigError("missing [suspension]")
        if sp.get("kind") == "harmonic":
            s = Harmonic(_number(sp, "omega0", None, positive=False))
        elif sp.get("kind") == "discrete":
            levels = sp.get("levels")
            if not isinstance(levels, list) or not all(isinstance(l, list) and len(l) == 2 for l in levels):
                raise ConfigError("levels must be a list of [frequency, weight] pairs")
            s = Discrete(tuple(tuple(l) for l in levels))
        else:
            raise ConfigError(f"suspension kind must be 'harmonic' or 'discrete', got {sp.get('kind')!r}")
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    g = dict(raw.get("grid", {}))
    preset = g.get("preset", "standard")
    if preset not in GRID_PRESETS:
        raise ConfigError(f"grid preset must be one of {sorted(GRID_PRESETS)}")
    g.setdefault("per_decade", GRID_PRESETS[preset])
    _number(g, "per_decade", None, integer=True)
    q = raw.get("quadrature", {})
    budget = Budget(_number(q, "rtol", 1e-10), _number(q, "limit", 200, integer=True))
    lim = dict(raw.get("limits", {}))
    for key in ("band", "plateau"):
        if key in lim and (not isinstance(lim[key], list) or len(lim[key]) != 2):
            raise ConfigError(f"limits.{key} must be a two-element list")
    mc = dict(raw.get("montecarlo", {}))
    for key, default in (("n_samples", 4096), ("n_traj", 256), ("seed", 0)):
        mc[key] = _number(mc, key, default, positive=key != "seed", integer=True)
    mc["dt"] = _number(mc, "dt", 0.05)
    out = raw.get("output", {}).get("dir")
    return Scenario(name, params, model, s, g, dict(raw.get("time", {})), budget, lim, mc, out, raw)


def load(path_or_name):
    """Load a scenario from a file path or a built-in name."""
    path = Path(path_or_name)
    try:
        if path.suffix == ".toml" or path.exists():
            text = path.read_text()
            default = path.stem
        elif str(path_or_name) in BUILTIN:
            text = resources.files("vacmirror").joinpath("scenarios", f"{path_or_name}.toml").read_text()
            default = str(path_or_name)
        else:
            raise ConfigError(f"no scenario file or built-in named {path_or_name!r}")
        raw = tomllib.loads(text)
    except FileNotFoundError as exc:
        raise ConfigError(str(exc)) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path_or_name}: {exc}") from exc
    return from_dict(raw, default)
