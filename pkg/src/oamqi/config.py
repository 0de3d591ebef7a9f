"""Experiment configuration: loading, validation, override precedence and hashing.

A configuration is one JSON document validated against
``data/config.schema.json``. Values resolve as flag > file > packaged
default. Keys starting with ``_`` carry provenance notes and are ignored
by the builders.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import jsonschema

from .conversion import CrystalParams
from .errors import ConfigError
from .imaging import IccdConfig
from .overlap import FocusGeometry
from .statistics import ApdCalibration, LossChain, SourceModel, post_conversion_source, input_source

__all__ = [
    "SCHEMA_VERSION",
    "ExperimentConfig",
    "default_config",
    "load_config",
    "merge",
    "set_path",
    "canonical_json",
    "config_hash",
    "validate",
]

SCHEMA_VERSION = 1


def _load_json_resource(name: str) -> dict:
    return json.loads(resources.files("oamqi").joinpath("data", name).read_text(encoding="utf-8"))


def default_config() -> dict:
    return _load_json_resource("default_config.json")


def _schema() -> dict:
    return _load_json_resource("config.schema.json")


def validate(cfg: Mapping) -> None:
    """Raise :class:`~oamqi.errors.ConfigError` if ``cfg`` violates the schema."""
    try:
        jsonschema.validate(cfg, _schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None


def merge(base: Mapping, override: Mapping) -> dict:
    """Recursive dict merge; lists and scalars in ``override`` replace."""
    out = copy.deepcopy(dict(base))
    for k, v in override.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), Mapping):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def set_path(cfg: dict, dotted: str, value: Any) -> None:
    node = cfg
    *parents, leaf = dotted.split(".")
    for p in parents:
        node = node.setdefault(p, {})
    node[leaf] = value


def load_config(path=None, overrides: Mapping[str, Any] | None = None) -> dict:
    """Resolve default <- file <- overrides and validate.

    ``overrides`` maps dotted paths (``"geometry.xi"``) to values; ``None``
    values are skipped. A file holding a run record (a ``"config"`` key) is
    accepted, so outputs can be re-run from their embedded config.
    """
    cfg = default_config()
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        if "config" in doc and isinstance(doc["config"], dict):
            doc = doc["config"]
        cfg = merge(cfg, doc)
    for key, value in (overrides or {}).items():
        if value is not None:
            set_path(cfg, key, value)
    validate(cfg)
    return cfg


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True, allow_nan=False)


def config_hash(cfg: Mapping) -> str:
    """sha256 of the canonical JSON encoding."""
    return hashlib.sha256(canonical_json(cfg).encode("utf-8")).hexdigest()


def _public(d: Mapping) -> dict:
    return {k: v for k, v in d.items() if not k.startswith("_")}


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Typed view of a resolved configuration."""

    raw: dict

    @classmethod
    def from_dict(cls, cfg: Mapping) -> "ExperimentConfig":
        validate(cfg)
        return cls(copy.deepcopy(dict(cfg)))

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    @property
    def crystal(self) -> CrystalParams:
        return CrystalParams(**_public(self.raw["crystal"]))

    @property
    def wavelengths(self) -> tuple:
        w = self.raw["wavelengths"]
        return (w["pump"], w["signal"], w["sfg"])

    @property
    def geometry(self) -> FocusGeometry:
        g, c = self.raw["geometry"], self.crystal
        lp, ls, _ = self.wavelengths
        return FocusGeometry(g["xi"], g["alpha"], lp, ls, c.n_pump, c.n_signal)

    def beams(self, l: int = 0):
        """Pump and signal beams realizing the configured geometry."""
        from .conversion import beams_for_geometry

        p = self.raw["powers"]
        return beams_for_geometry(self.geometry, self.crystal, p["circulating_pump"], p["signal"], l)

    @property
    def iccd(self) -> IccdConfig:
        i = self.raw["iccd"]
        return IccdConfig(self.seed, i["frames_per_image"], i["dark_count_mean"], i["exposure"],
                          i["mean_signal_photons_per_frame"])

    @property
    def losses(self) -> LossChain:
        return LossChain(tuple((str(a), float(t)) for a, t in self.raw["losses"]["chain"]))

    @property
    def apd(self) -> ApdCalibration:
        a = self.raw["apd"]
        return ApdCalibration(a["trigger_rate"], a["gate_window"], a["det_eff_per_gate"])

    def source(self, seed: int | None = None):
        """``(SourceModel, channel_efficiency)`` for the configured preset."""
        s = self.raw["source"]
        seed = self.seed if seed is None else seed
        if s["preset"] == "input":
            return input_source(seed, s["duration"], s.get("input_g2", 162.0), s["window"]), 1.0
        if s["preset"] == "post_conversion":
            return post_conversion_source(seed, s["duration"], s.get("target_g2", 25.0),
                                          s.get("internal_efficiency", 0.061), self.losses,
                                          s.get("idler_det_eff", 0.2), s["window"], s.get("input_g2", 162.0))
        src = SourceModel(s.get("pair_rate", 0.0), seed, s["duration"], s.get("signal_noise_rate", 0.0),
                          s.get("idler_noise_rate", 0.0), s.get("signal_det_eff", 1.0),
                          s.get("idler_det_eff", 1.0), s["window"])
        return src, s.get("channel_efficiency", 1.0)
