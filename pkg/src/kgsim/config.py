"""Run configuration: defaults, strict JSON loading, validation.

A config file is a JSON object mirroring DEFAULTS below; sections merge
key-by-key over the defaults and unknown keys are rejected with their
dotted path, so typos never pass silently.  The reference schema ships in
docs/config_schema.json.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass

from .fem import Mesh1D, PotentialProfile, build_mesh
from .solvers import CgOptions
from .trend import SmoothingSpec
from .wavepacket import WavePacketSpec

__all__ = ["ConfigError", "RunConfig", "DEFAULTS", "load_config_file", "merge_config"]


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "label": "run",
    "c": 1.0,
    "half_length": 60.0,
    "n_cells": 2400,
    "dt": 0.01,
    "t_final": 15.0,
    "beta": 0.25,
    "gamma": 0.5,
    "potential": {"kind": "step", "a1": 0.0, "a2": 150.0},
    "initial": {"kind": "packet", "amplitude": None, "center": -3.0, "width": 1.0},
    "cg": {"rel_tolerance": 1e-10, "max_iterations": None, "jacobi": False},
    "solver": "cg",
    "ic_mode": "interpolate",
    "stride": 10,
    "snapshot_times": [0.0, 5.0, 10.0, 15.0],
    "smoothing": {"kernel": "epanechnikov", "bandwidth": None},
    "fit_window": {"mode": "auto", "t_lo": None, "t_hi": None, "factor": 5.0,
                   "pre_window": 1.0, "post_margin": 1.0, "detect_bandwidth": None},
    "oracle_check": {"threshold": 0.01, "times": None},
    "output_dir": None,
}

_POTENTIAL_KEYS = {
    "step": {"kind", "a1", "a2"},
    "constant": {"kind", "value"},
    "barrier": {"kind", "a1", "height", "x_start", "x_end"},
    "piecewise": {"kind", "breakpoints", "values"},
}
_INITIAL_KEYS = {
    "packet": {"kind", "amplitude", "center", "width"},
    "narrowband": {"kind", "carrier", "band_std", "center", "age", "span_factor"},
}


def _check_keys(section: dict, allowed, path: str):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown config key '{path}.{key}'" if path else
                              f"unknown config key '{key}'")


def merge_config(base: dict, override: dict) -> dict:
    """Key-by-key merge of one config dict over another (one level deep).

    A section whose 'kind' changes is replaced wholesale so parameters of
    the previous kind cannot leak through.
    """
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            if "kind" in val and val["kind"] != out[key].get("kind"):
                out[key] = copy.deepcopy(val)
            else:
                out[key] = {**out[key], **val}
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config_file(path: str) -> dict:
    """Read a JSON config; a run manifest is accepted and yields its config."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    if data.get("kind") == "kgsim-run-manifest":
        data = data.get("config", {})
    return data


def _positive(value, name):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
        raise ConfigError(f"'{name}' must be a positive number, got {value!r}")
    return float(value)


@dataclass
class RunConfig:
    """Validated run parameters with builders for the solver objects."""

    raw: dict

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        merged = merge_config(DEFAULTS, data)
        _check_keys(merged, DEFAULTS.keys(), "")
        for section, defaults in (("cg", DEFAULTS["cg"]),
                                  ("smoothing", DEFAULTS["smoothing"]),
                                  ("fit_window", DEFAULTS["fit_window"]),
                                  ("oracle_check", DEFAULTS["oracle_check"])):
            if not isinstance(merged[section], dict):
                raise ConfigError(f"'{section}' must be an object")
            _check_keys(merged[section], defaults.keys(), section)
        cfg = cls(merged)
        cfg.validate()
        return cfg

    # -- validation ---------------------------------------------------------

    def validate(self):
        d = self.raw
        _positive(d["c"], "c")
        _positive(d["half_length"], "half_length")
        _positive(d["dt"], "dt")
        _positive(d["t_final"], "t_final")
        n = d["n_cells"]
        if not isinstance(n, int) or n < 2 or n % 2:
            raise ConfigError(f"'n_cells' must be an even integer >= 2, got {n!r}")
        if not isinstance(d["stride"], int) or d["stride"] < 1:
            raise ConfigError("'stride' must be a positive integer")
        steps = d["t_final"] / d["dt"]
        if abs(round(steps) * d["dt"] - d["t_final"]) > 1e-9 * max(1.0, d["t_final"]):
            raise ConfigError(f"t_final = {d['t_final']} is not an integer number of steps dt = {d['dt']}")
        if d["solver"] not in ("cg", "direct"):
            raise ConfigError(f"'solver' must be 'cg' or 'direct', got {d['solver']!r}")
        if d["ic_mode"] not in ("interpolate", "l2_project"):
            raise ConfigError(f"'ic_mode' must be 'interpolate' or 'l2_project', got {d['ic_mode']!r}")
        self._validate_potential(d["potential"])
        self._validate_initial(d["initial"])
        for t in d["snapshot_times"]:
            if t < 0.0:
                raise ConfigError(f"snapshot time {t} is negative")
            if t > d["t_final"]:
                continue  # beyond the run; dropped at run time
            k = round(t / d["dt"])
            if abs(k * d["dt"] - t) > 1e-9 * max(1.0, d["t_final"]):
                raise ConfigError(f"snapshot time {t} does not land on a step of dt = {d['dt']}")
        fw = d["fit_window"]
        if fw["mode"] not in ("auto", "explicit", "full"):
            raise ConfigError(f"fit_window.mode must be auto/explicit/full, got {fw['mode']!r}")
        if fw["mode"] == "explicit" and (fw["t_lo"] is None or fw["t_hi"] is None
                                         or not fw["t_lo"] < fw["t_hi"]):
            raise ConfigError("explicit fit window needs t_lo < t_hi")
        if d["smoothing"]["kernel"] not in ("epanechnikov", "gaussian", "moving_average"):
            raise ConfigError(f"unknown smoothing kernel {d['smoothing']['kernel']!r}")
        try:
            self.cg_options()
        except ValueError as exc:
            raise ConfigError(f"cg: {exc}") from exc

    def _validate_potential(self, pot):
        if not isinstance(pot, dict) or "kind" not in pot:
            raise ConfigError("'potential' must be an object with a 'kind'")
        kind = pot["kind"]
        if kind not in _POTENTIAL_KEYS:
            raise ConfigError(f"unknown potential kind {kind!r}")
        _check_keys(pot, _POTENTIAL_KEYS[kind], "potential")
        try:
            self.potential_profile()
        except ValueError as exc:
            raise ConfigError(f"potential: {exc}") from exc

    def _validate_initial(self, ini):
        if not isinstance(ini, dict) or "kind" not in ini:
            raise ConfigError("'initial' must be an object with a 'kind'")
        kind = ini["kind"]
        if kind not in _INITIAL_KEYS:
            raise ConfigError(f"unknown initial kind {kind!r}")
        _check_keys(ini, _INITIAL_KEYS[kind], "initial")
        if kind == "narrowband":
            if self.raw["potential"]["kind"] != "constant":
                raise ConfigError("narrowband initial data requires a constant potential")
            if self.raw["ic_mode"] != "interpolate":
                raise ConfigError("narrowband initial data only supports ic_mode 'interpolate'")
            for key in ("carrier", "band_std"):
                _positive(ini.get(key, 0), f"initial.{key}")

    # -- derived quantities -------------------------------------------------

    @property
    def n_steps(self) -> int:
        return int(round(self.raw["t_final"] / self.raw["dt"]))

    @property
    def record_spacing(self) -> float:
        return self.raw["stride"] * self.raw["dt"]

    def mesh(self) -> Mesh1D:
        return build_mesh(self.raw["half_length"], self.raw["n_cells"])

    def potential_profile(self) -> PotentialProfile:
        pot = self.raw["potential"]
        kind = pot["kind"]
        if kind == "constant":
            return PotentialProfile.constant(float(pot.get("value", 0.0)))
        if kind == "step":
            return PotentialProfile.step(float(pot.get("a1", 0.0)), float(pot["a2"]))
        if kind == "barrier":
            return PotentialProfile.barrier(float(pot.get("a1", 0.0)), float(pot["height"]),
                                            float(pot["x_start"]), float(pot["x_end"]))
        return PotentialProfile(pot["breakpoints"], pot["values"])

    def packet_spec(self) -> WavePacketSpec:
        ini = self.raw["initial"]
        if ini["kind"] != "packet":
            raise ConfigError("packet_spec requested for non-packet initial data")
        kwargs = {"center": float(ini.get("center", -3.0)),
                  "width": float(ini.get("width", 1.0)),
                  "wave_speed": float(self.raw["c"])}
        if ini.get("amplitude") is not None:
            kwargs["amplitude"] = float(ini["amplitude"])
        return WavePacketSpec(**kwargs)

    def cg_options(self) -> CgOptions:
        cg = self.raw["cg"]
        return CgOptions(rel_tolerance=float(cg["rel_tolerance"]),
                         max_iterations=cg["max_iterations"],
                         jacobi=bool(cg["jacobi"]))

    def smoothing_spec(self) -> SmoothingSpec:
        sm = self.raw["smoothing"]
        bw = sm["bandwidth"]
        if bw is None:
            bw = 20.0 * self.record_spacing
        return SmoothingSpec(kernel=sm["kernel"], bandwidth=float(bw))

    def detect_spec(self) -> SmoothingSpec:
        """Light smoothing used only to locate the impact transient."""
        bw = self.raw["fit_window"]["detect_bandwidth"]
        if bw is None:
            bw = 5.0 * self.record_spacing
        return SmoothingSpec(kernel="epanechnikov", bandwidth=float(bw))

    def constant_m_sq(self):
        """Potential value if constant, else None."""
        pot = self.raw["potential"]
        if pot["kind"] == "constant":
            return float(pot.get("value", 0.0))
        if pot["kind"] == "piecewise" and len(set(pot["values"])) == 1:
            return float(pot["values"][0])
        if pot["kind"] == "step" and math.isclose(pot.get("a1", 0.0), pot["a2"]):
            return float(pot["a2"])
        return None

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)
