"""Run configuration as a flat JSON object with dotted keys.

Example::

    {
      "seed": 7,
      "session.n_pulses": 1000000,
      "source.intensities.signal": 0.1,
      "source.probabilities.signal": 1.0,
      "channel.distance_km": 20.0,
      "attack.variant": "passive"
    }

Keys not listed in :data:`DEFAULTS` are rejected, except for intensity labels
under ``source.intensities.*`` / ``source.probabilities.*``. A layer that sets
any ``source.probabilities.*`` key replaces the whole source, so labels are
never merged across layers; a layer with intensities only (``--mu``) edits
them in place. ``seed`` is required in every config file.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import jsonschema

from .adversary import VARIANTS, AttackStrategy
from .keyrate.formulas import RateModelParams
from .keyrate.sweep import MODES, SweepTemplate
from .photonics import DOUBLE_CLICK_POLICIES, ChannelConfig, DetectorConfig, SourceConfig
from .protocol.session import SessionParams


class ConfigError(ValueError):
    """Invalid configuration; the message lists every offending key."""


DEFAULTS: dict[str, Any] = {
    "session.n_pulses": 1_000_000,
    "session.test_fraction": 0.5,
    "session.qber_abort_threshold": 0.11,
    "session.abort_margin": 0.0,
    "session.preshared_key_bits": 1024,
    "session.security_margin": 100,
    "session.ec_passes": 6,
    "session.auth_security_bits": 64,
    "source.intensities.signal": 0.1,
    "source.probabilities.signal": 1.0,
    "channel.distance_km": 20.0,
    "channel.attenuation_db_per_km": 0.2,
    "channel.misalignment_prob": 0.01,
    "detector.efficiency": 0.1,
    "detector.dark_count_prob": 1e-5,
    "detector.double_click_policy": "random-bit",
    "attack.variant": "passive",
    "attack.fraction": 1.0,
    "attack.target_gain": None,
    "rate.f_ec": 1.22,
    "rate.q": 0.5,
    "sweep.start_km": 0.0,
    "sweep.stop_km": 100.0,
    "sweep.step_km": 1.0,
    "sweep.mode": "nondecoy",
    "sweep.decoy_nu": 0.1,
    "sweep.workers": 1,
}

_prob = {"type": "number", "minimum": 0, "maximum": 1}
_count = {"type": "integer", "minimum": 0}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "bb84sim run configuration",
    "type": "object",
    "properties": {
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "session.n_pulses": _count,
        "session.test_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "session.qber_abort_threshold": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
        "session.abort_margin": {"type": "number", "minimum": 0},
        "session.preshared_key_bits": _count,
        "session.security_margin": _count,
        "session.ec_passes": {"type": "integer", "minimum": 1},
        "session.auth_security_bits": {"type": "integer", "minimum": 1},
        "channel.distance_km": {"type": "number", "minimum": 0},
        "channel.attenuation_db_per_km": {"type": "number", "minimum": 0},
        "channel.misalignment_prob": {"type": "number", "minimum": 0, "maximum": 0.5},
        "detector.efficiency": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "detector.dark_count_prob": _prob,
        "detector.double_click_policy": {"enum": list(DOUBLE_CLICK_POLICIES)},
        "attack.variant": {"enum": list(VARIANTS)},
        "attack.fraction": _prob,
        "attack.target_gain": {"type": ["number", "null"], "exclusiveMinimum": 0, "maximum": 1},
        "rate.f_ec": {"type": "number", "minimum": 1},
        "rate.q": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "sweep.start_km": {"type": "number", "minimum": 0},
        "sweep.stop_km": {"type": "number", "minimum": 0},
        "sweep.step_km": {"type": "number", "exclusiveMinimum": 0},
        "sweep.mode": {"enum": list(MODES)},
        "sweep.decoy_nu": {"type": "number", "exclusiveMinimum": 0},
        "sweep.workers": {"type": "integer", "minimum": 1},
    },
    "patternProperties": {
        r"^source\.intensities\.[A-Za-z_][A-Za-z0-9_-]*$": {"type": "number", "minimum": 0},
        r"^source\.probabilities\.[A-Za-z_][A-Za-z0-9_-]*$": _prob,
    },
    "additionalProperties": False,
}

_SOURCE_PREFIXES = ("source.intensities.", "source.probabilities.")


def _describe(error: jsonschema.ValidationError) -> str:
    if error.validator == "additionalProperties":
        patterns = [re.compile(p) for p in SCHEMA["patternProperties"]]
        unexpected = sorted(
            k for k in error.instance
            if k not in SCHEMA["properties"] and not any(p.search(k) for p in patterns)
        )
        return "; ".join(f"{k}: unknown key" for k in unexpected)
    path = "/".join(str(p) for p in error.absolute_path) or "<root>"
    return f"{path}: {error.message}"


def validate_flat(doc: Any, *, require_seed: bool) -> None:
    """Schema-check a flat config mapping; raise :class:`ConfigError` listing every problem."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    problems = sorted(_describe(e) for e in validator.iter_errors(doc))
    if isinstance(doc, dict) and require_seed and "seed" not in doc:
        problems.append("seed: required (no default seed exists)")
    if problems:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(problems))


def _merge(base: Mapping[str, Any], layer: Mapping[str, Any]) -> dict[str, Any]:
    out = dict(base)
    if any(k.startswith("source.probabilities.") for k in layer):
        out = {k: v for k, v in out.items() if not k.startswith(_SOURCE_PREFIXES)}
    out.update(layer)
    return out


@dataclass(frozen=True)
class RunConfig:
    """Effective configuration: defaults, then a config file, then CLI overrides."""

    values: Mapping[str, Any] = field(default_factory=lambda: dict(DEFAULTS))

    @classmethod
    def from_flat(cls, doc: Mapping[str, Any], *, require_seed: bool = True) -> "RunConfig":
        validate_flat(doc, require_seed=require_seed)
        cfg = cls(_merge(DEFAULTS, doc))
        cfg.check()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_flat(doc)

    def with_overrides(self, layer: Mapping[str, Any]) -> "RunConfig":
        merged = _merge(self.values, layer)
        validate_flat(merged, require_seed=False)
        cfg = RunConfig(merged)
        cfg.check()
        return cfg

    @property
    def seed(self) -> int | None:
        return self.values.get("seed")

    def get(self, key: str) -> Any:
        return self.values[key]

    def to_json(self) -> str:
        return json.dumps(dict(self.values), sort_keys=True, indent=2) + "\n"

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    # typed views -----------------------------------------------------------

    def source(self) -> SourceConfig:
        intens = {k.split(".", 2)[2]: v for k, v in self.values.items() if k.startswith("source.intensities.")}
        probs = {k.split(".", 2)[2]: v for k, v in self.values.items() if k.startswith("source.probabilities.")}
        return SourceConfig(intens, probs)

    def channel(self) -> ChannelConfig:
        v = self.values
        return ChannelConfig(v["channel.distance_km"], v["channel.attenuation_db_per_km"],
                             v["channel.misalignment_prob"])

    def detector(self) -> DetectorConfig:
        v = self.values
        return DetectorConfig(v["detector.efficiency"], v["detector.dark_count_prob"],
                              v["detector.double_click_policy"])

    def session(self) -> SessionParams:
        v = self.values
        return SessionParams(
            n_pulses=v["session.n_pulses"],
            test_fraction=v["session.test_fraction"],
            qber_abort_threshold=v["session.qber_abort_threshold"],
            abort_margin=v["session.abort_margin"],
            source=self.source(),
            channel=self.channel(),
            detector=self.detector(),
            seed=self.seed if self.seed is not None else 0,
            preshared_key_bits=v["session.preshared_key_bits"],
            security_margin=v["session.security_margin"],
            ec_passes=v["session.ec_passes"],
            auth_security_bits=v["session.auth_security_bits"],
        )

    def attack(self) -> AttackStrategy:
        v = self.values
        return AttackStrategy(v["attack.variant"], v["attack.fraction"], v["attack.target_gain"])

    def rate_params(self) -> RateModelParams:
        return RateModelParams(
            mu=self.source().signal_mu,
            eta=self.channel().transmittance * self.values["detector.efficiency"],
            dark_count_prob=self.values["detector.dark_count_prob"],
            misalignment=self.values["channel.misalignment_prob"],
            f_ec=self.values["rate.f_ec"],
            q=self.values["rate.q"],
        )

    def sweep_template(self) -> SweepTemplate:
        return SweepTemplate(
            params=self.rate_params(),
            attenuation_db_per_km=self.values["channel.attenuation_db_per_km"],
            detector_efficiency=self.values["detector.efficiency"],
            decoy_nu=self.values["sweep.decoy_nu"],
        )

    def check(self) -> None:
        """Cross-field validation through the typed constructors."""
        for name, build in [("source", self.source), ("channel", self.channel),
                            ("detector", self.detector), ("session", self.session),
                            ("attack", self.attack)]:
            try:
                build()
            except ValueError as exc:
                raise ConfigError(f"invalid configuration:\n  {name}: {exc}") from exc
