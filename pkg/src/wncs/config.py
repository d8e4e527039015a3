"""Scenario configuration: plant, sensors, channel and experiment settings.

Scenario files are TOML with four sections::

    [system]              a, b, sigma_p2, q_weight, r_weight
    [channel]             t_d
    [[sensor]]            sigma_o2, p_obs          (one table per sensor)
    [experiment]          horizon, x0, init_estimate, gain_mode, gain,
                          gain_form, zero_age, policy, window, age_cap,
                          dp_age_cap, seeds

Unknown keys are rejected so that a typo never silently falls back to a
default.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

POLICY_NAMES = ("random", "age-min", "var-min", "greedy", "sliding")
GAIN_MODES = ("constant", "minimizing")
_POLICY_RE = re.compile(r"^(random|age-min|var-min|greedy|sliding)(?::(\d+))?$")


class ScenarioError(ValueError):
    """Raised by :func:`validate_scenario`; ``errors`` lists every violation."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class SystemParams:
    """Scalar plant x(t+1) = a x(t) + b u(t) + w(t) with LQ weights."""

    a: float
    b: float
    sigma_p2: float
    q_weight: float = 1.0
    r_weight: float = 1.0


@dataclass(frozen=True)
class SensorSpec:
    sigma_o2: float
    p_obs: float = 1.0


@dataclass(frozen=True)
class ChannelSpec:
    t_d: int = 1


@dataclass(frozen=True)
class ScenarioConfig:
    system: SystemParams
    sensors: tuple[SensorSpec, ...]
    channel: ChannelSpec = ChannelSpec()
    horizon: int = 10_000
    x0: float = 1.0
    # "true": x_hat(0) = x(0); "zero": x_hat(0) = 0
    init_estimate: str = "true"
    gain_mode: str = "constant"
    gain: float = 0.5
    # which weight appears in the gain denominator, see lqg.control_gain
    gain_form: str = "R"
    # "plain": coefficient 1 on w(t-1) at tau = 0; "exact": (1-k) factor on w(t-1)
    zero_age: str = "plain"
    policy: str = "sliding:4"
    window: int = 4
    age_cap: int = 64
    dp_age_cap: int = 16
    seeds: tuple[int, ...] = field(default_factory=lambda: tuple(range(200)))

    @property
    def n_sensors(self) -> int:
        return len(self.sensors)

    @property
    def sigma_o2(self) -> tuple[float, ...]:
        return tuple(s.sigma_o2 for s in self.sensors)

    @property
    def p_obs(self) -> tuple[float, ...]:
        return tuple(s.p_obs for s in self.sensors)

    def policy_spec(self) -> tuple[str, int]:
        return parse_policy(self.policy, self.window)

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


def parse_policy(name: str, default_window: int = 4) -> tuple[str, int]:
    """Split ``"sliding:3"`` into ``("sliding", 3)``; other names get N=1."""
    m = _POLICY_RE.match(name.strip())
    if m is None:
        raise ValueError(f"unknown policy {name!r}; expected one of {POLICY_NAMES} (sliding:N)")
    kind, n = m.group(1), m.group(2)
    if kind == "sliding":
        return kind, int(n) if n is not None else default_window
    if n is not None:
        raise ValueError(f"policy {kind!r} takes no window size")
    return kind, 1


def scenario_problems(cfg: ScenarioConfig) -> list[str]:
    """Every invariant violation of ``cfg`` (empty when valid)."""
    errs: list[str] = []
    s = cfg.system

    def finite(name, v):
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            errs.append(f"{name} must be a finite number")
            return False
        return True

    finite("a", s.a)
    finite("b", s.b)
    if finite("sigma_p2", s.sigma_p2) and s.sigma_p2 <= 0:
        errs.append("process-noise variance must be positive")
    if finite("q_weight", s.q_weight) and s.q_weight < 0:
        errs.append("state weight q_weight must be nonnegative")
    if finite("r_weight", s.r_weight) and s.r_weight <= 0:
        errs.append("input weight r_weight must be positive")

    if not cfg.sensors:
        errs.append("sensor list must not be empty")
    for i, sen in enumerate(cfg.sensors, start=1):
        if finite(f"sensor {i} sigma_o2", sen.sigma_o2) and sen.sigma_o2 < 0:
            errs.append(f"sensor {i}: observation-noise variance must be nonnegative")
        if finite(f"sensor {i} p_obs", sen.p_obs) and not 0 < sen.p_obs <= 1:
            errs.append(f"sensor {i}: probability must be in (0,1]")

    t_d = cfg.channel.t_d
    if not isinstance(t_d, int) or t_d < 0:
        errs.append("channel delay t_d must be a nonnegative integer")
        t_d = 0
    if not isinstance(cfg.horizon, int) or cfg.horizon <= 0:
        errs.append("horizon must be a positive integer")
    finite("x0", cfg.x0)
    if cfg.init_estimate not in ("true", "zero"):
        errs.append("init_estimate must be 'true' or 'zero'")
    if cfg.gain_mode not in GAIN_MODES:
        errs.append(f"gain_mode must be one of {GAIN_MODES}")
    if finite("gain", cfg.gain) and not 0 <= cfg.gain <= 1:
        errs.append("gain must be in [0,1]")
    if cfg.gain_form not in ("R", "Q"):
        errs.append("gain_form must be 'R' or 'Q'")
    if cfg.zero_age not in ("plain", "exact"):
        errs.append("zero_age must be 'plain' or 'exact'")
    if not isinstance(cfg.window, int) or cfg.window < 1:
        errs.append("window size N must be >= 1")
    try:
        _, n = parse_policy(cfg.policy, cfg.window if isinstance(cfg.window, int) else 1)
        if n < 1:
            errs.append("window size N must be >= 1")
    except ValueError as exc:
        errs.append(str(exc))
    for name in ("age_cap", "dp_age_cap"):
        cap = getattr(cfg, name)
        if not isinstance(cap, int) or cap < t_d + 1:
            errs.append(f"{name} too small: must be >= t_d + 1 = {t_d + 1}")
    if cfg.dp_age_cap > cfg.age_cap:
        errs.append("dp_age_cap must not exceed age_cap")
    if not cfg.seeds:
        errs.append("seed list must not be empty")
    elif any(not isinstance(x, int) or x < 0 for x in cfg.seeds):
        errs.append("seeds must be nonnegative integers")
    return errs


def validate_scenario(cfg: ScenarioConfig) -> ScenarioConfig:
    """Return ``cfg`` unchanged if valid, else raise :class:`ScenarioError`."""
    errs = scenario_problems(cfg)
    if errs:
        raise ScenarioError(errs)
    return cfg


_SYSTEM_KEYS = {"a", "b", "sigma_p2", "q_weight", "r_weight"}
_SENSOR_KEYS = {"sigma_o2", "p_obs"}
_CHANNEL_KEYS = {"t_d"}
_EXPERIMENT_KEYS = {
    "horizon", "x0", "init_estimate", "gain_mode", "gain", "gain_form", "zero_age",
    "policy", "window", "age_cap", "dp_age_cap", "seeds",
}


def scenario_from_dict(doc: Mapping[str, Any]) -> ScenarioConfig:
    """Build (and validate) a scenario from the parsed file layout."""
    errs = []
    unknown = set(doc) - {"system", "channel", "sensor", "experiment"}
    errs += [f"unknown section [{k}]" for k in sorted(unknown)]
    system = dict(doc.get("system", {}))
    channel = dict(doc.get("channel", {}))
    sensors = [dict(s) for s in doc.get("sensor", [])]
    exp = dict(doc.get("experiment", {}))
    errs += [f"unknown key system.{k}" for k in sorted(set(system) - _SYSTEM_KEYS)]
    errs += [f"unknown key channel.{k}" for k in sorted(set(channel) - _CHANNEL_KEYS)]
    for i, s in enumerate(sensors, start=1):
        errs += [f"unknown key sensor[{i}].{k}" for k in sorted(set(s) - _SENSOR_KEYS)]
    errs += [f"unknown key experiment.{k}" for k in sorted(set(exp) - _EXPERIMENT_KEYS)]
    missing = [f"system.{k}" for k in ("a", "b", "sigma_p2") if k not in system]
    missing += [f"sensor[{i}].sigma_o2" for i, s in enumerate(sensors, 1) if "sigma_o2" not in s]
    errs += [f"missing key {m}" for m in missing]
    if errs:
        raise ScenarioError(errs)

    if "seeds" in exp:
        exp["seeds"] = tuple(exp["seeds"])
    cfg = ScenarioConfig(
        system=SystemParams(**{k: float(v) for k, v in system.items()}),
        sensors=tuple(SensorSpec(**{k: float(v) for k, v in s.items()}) for s in sensors),
        channel=ChannelSpec(**channel),
        **exp,
    )
    return validate_scenario(cfg)


def load_scenario(path: str | Path) -> ScenarioConfig:
    with open(path, "rb") as fh:
        return scenario_from_dict(tomllib.load(fh))


def scenario_to_dict(cfg: ScenarioConfig) -> dict[str, Any]:
    d = asdict(cfg)
    exp = {k: v for k, v in d.items() if k not in ("system", "sensors", "channel")}
    exp["seeds"] = list(exp["seeds"])
    return {
        "system": d["system"],
        "channel": d["channel"],
        "sensor": [dict(s) for s in d["sensors"]],
        "experiment": exp,
    }


def dump_scenario(cfg: ScenarioConfig) -> str:
    """TOML text accepted by :func:`load_scenario`."""
    doc = scenario_to_dict(cfg)
    lines = []

    def fmt(v):
        if isinstance(v, str):
            return json.dumps(v)
        if isinstance(v, list):
            return "[" + ", ".join(fmt(x) for x in v) + "]"
        return repr(v)

    for sec in ("system", "channel"):
        lines.append(f"[{sec}]")
        lines += [f"{k} = {fmt(v)}" for k, v in doc[sec].items()]
        lines.append("")
    for s in doc["sensor"]:
        lines.append("[[sensor]]")
        lines += [f"{k} = {fmt(v)}" for k, v in s.items()]
        lines.append("")
    lines.append("[experiment]")
    lines += [f"{k} = {fmt(v)}" for k, v in doc["experiment"].items()]
    return "\n".join(lines) + "\n"


def config_hash(cfg: ScenarioConfig) -> str:
    """Short stable digest of the scenario (seed list included)."""
    blob = json.dumps(scenario_to_dict(cfg), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def fig2_system() -> SystemParams:
    return SystemParams(a=1.3, b=1.0, sigma_p2=0.1, q_weight=1.0, r_weight=1.0)


def fig2b_scenario(sigma_o2_1: float = 0.05, p: float = 0.4, **kw) -> ScenarioConfig:
    """Four sensors; sensor 1 always observes, the rest share probability ``p``."""
    variances = (sigma_o2_1, 0.02, 0.05, 0.2)
    sensors = tuple(SensorSpec(v, 1.0 if i == 0 else p) for i, v in enumerate(variances))
    return ScenarioConfig(system=fig2_system(), sensors=sensors, channel=ChannelSpec(1), **kw)


def fig2c_scenario(p: float = 0.4, **kw) -> ScenarioConfig:
    variances = (0.8, 0.02, 0.05, 0.2)
    sensors = tuple(SensorSpec(v, 1.0 if i == 0 else p) for i, v in enumerate(variances))
    return ScenarioConfig(system=fig2_system(), sensors=sensors, channel=ChannelSpec(1), **kw)
