"""YAML experiment configuration with unit-aware power fields."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

from .channel import DEFAULT_PATHS, path_loss
from .genetic import GaConfig
from .mars import MarsConfig
from .metrics import SystemParams, dbm_to_watt

ALGORITHMS = ("mars_s", "mars_p", "bm1", "bm2", "bm3", "bm4", "bm5", "oracle", "joint")
POWER_FIELDS = ("p_t", "n0", "p_bb", "p_rf", "p_adc", "p_lna", "p_ps", "p_o", "p_max")
COUNT_FIELDS = ("n_t", "n_ant", "n_rf", "n_s")
TOPOLOGY_FIELDS = ("n_conn", "n_rf_per_group", "n_ant_per_group")
SWEEP_ALIASES = {"eta": ("eta_r", "eta_a"), "group_size": ("n_rf_per_group", "n_ant_per_group"),
                 "qos": ("r_req",)}

_POWER_RE = re.compile(r"^\s*([-+]?\d*\.?\d+(?:[eE][-+]?\d+)?)\s*(dBm|dBW|mW|W)?\s*$")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


def parse_power(value, name: str = "power") -> float:
    """Watts from a number (already watts) or a string like '20dBm', '100mW', '0.1W'."""
    if isinstance(value, bool):
        raise ConfigError(f"{name}: expected a power, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    m = _POWER_RE.match(str(value))
    if not m:
        raise ConfigError(f"{name}: cannot parse power {value!r}")
    x, unit = float(m.group(1)), m.group(2) or "W"
    if unit == "dBm":
        return dbm_to_watt(x)
    if unit == "dBW":
        return 10.0 ** (x / 10.0)
    return x / 1000.0 if unit == "mW" else x


@dataclass(frozen=True)
class Qos:
    """Rate target: absolute bits/s/Hz, or a fraction of the all-on rate."""

    value: float
    relative: bool = False

    @classmethod
    def parse(cls, raw, name: str = "r_req") -> "Qos":
        if isinstance(raw, str) and raw.strip().endswith("%"):
            try:
                frac = float(raw.strip()[:-1]) / 100.0
            except ValueError:
                raise ConfigError(f"{name}: cannot parse percentage {raw!r}") from None
            if not 0.0 <= frac <= 1.0:
                raise ConfigError(f"{name}: percentage must lie in [0%, 100%], got {raw!r}")
            return cls(frac, True)
        try:
            v = float(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"{name}: expected a number or a percentage, got {raw!r}") from None
        if v < 0:
            raise ConfigError(f"{name}: must be non-negative, got {v}")
        return cls(v, False)

    def resolve(self, all_on_rate: float) -> float:
        return self.value * all_on_rate if self.relative else self.value

    def __str__(self) -> str:
        return f"{self.value * 100:g}%" if self.relative else repr(self.value)


@dataclass(frozen=True)
class TopologyConfig:
    n_conn: int = 8
    n_rf_per_group: int = 4
    n_ant_per_group: int = 4


@dataclass(frozen=True)
class Sweep:
    name: str
    values: tuple


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemParams = field(default_factory=SystemParams)
    qos: Qos = Qos(3.0)
    topology: TopologyConfig = TopologyConfig()
    mars: MarsConfig = MarsConfig()
    ga: GaConfig = GaConfig()
    bm1: GaConfig = GaConfig(n_g=40, n_e=8, n_crx=40, n_mu=40, max_generations=40)
    paths: int = DEFAULT_PATHS
    sweep: Sweep = Sweep("none", (0,))
    trials: int = 50
    seed: int = 0
    algorithms: tuple[str, ...] = ("mars_s", "mars_p")
    output: str = "results"
    oracle_cap: int = 16
    bm4_cap: int = 20_000
    joint_rounds: int = 3

    def with_sweep_value(self, value) -> "ExperimentConfig":
        """Config with the sweep field set to ``value``."""
        return apply_setting(self, self.sweep.name, value)


def _known(cls) -> set[str]:
    return {f.name for f in fields(cls)}


def _block(raw: dict, key: str) -> dict:
    blk = raw.get(key) or {}
    if not isinstance(blk, dict):
        raise ConfigError(f"{key}: expected a mapping, got {type(blk).__name__}")
    return blk


def _checked(name: str, build):
    try:
        return build()
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _system(blk: dict, channel: dict) -> tuple[SystemParams, Qos]:
    allowed = _known(SystemParams) - {"rho"}
    kw: dict[str, Any] = {}
    for key, val in blk.items():
        if key not in allowed and key != "rho":
            raise ConfigError(f"system.{key}: unknown field")
        if key in POWER_FIELDS:
            kw[key] = parse_power(val, f"system.{key}")
        elif key in COUNT_FIELDS:
            if isinstance(val, bool) or not isinstance(val, int):
                raise ConfigError(f"system.{key}: expected an integer, got {val!r}")
            kw[key] = val
        elif key == "r_req":
            continue
        else:
            kw[key] = val
    if "rho" not in kw:
        fc = channel.get("fc_ghz", 28.0)
        d = channel.get("distance_m", 100.0)
        kw["rho"] = _checked("channel", lambda: path_loss(float(fc), float(d)).rho)
    qos = Qos.parse(blk.get("r_req", 3.0), "system.r_req")
    kw["r_req"] = qos.value if not qos.relative else 0.0
    return _checked("system", lambda: SystemParams(**kw)), qos


def _dataclass_block(cls, blk: dict, name: str, base=None):
    allowed = _known(cls)
    for key in blk:
        if key not in allowed:
            raise ConfigError(f"{name}.{key}: unknown field")
    if base is None:
        return _checked(name, lambda: cls(**blk))
    return _checked(name, lambda: replace(base, **blk))


def apply_setting(cfg: ExperimentConfig, name: str, value) -> ExperimentConfig:
    """Set one sweepable field by name (system, topology, mars or qos)."""
    for target in SWEEP_ALIASES.get(name, (name,)):
        if target == "r_req":
            qos = Qos.parse(value, "sweep")
            sysp = cfg.system.with_(r_req=0.0 if qos.relative else qos.value)
            cfg = replace(cfg, qos=qos, system=sysp)
        elif target in _known(SystemParams):
            val = parse_power(value, target) if target in POWER_FIELDS else value
            cfg = replace(cfg, system=_checked(f"sweep {target}", lambda: cfg.system.with_(**{target: val})))
        elif target in TOPOLOGY_FIELDS:
            cfg = replace(cfg, topology=replace(cfg.topology, **{target: int(value)}))
        elif target in _known(MarsConfig):
            cfg = replace(cfg, mars=_checked(f"sweep {target}", lambda: replace(cfg.mars, **{target: value})))
        elif target == "none":
            pass
        else:
            raise ConfigError(f"sweep.name: {name!r} is not a sweepable field")
    return cfg


def config_from_dict(raw: dict | None) -> ExperimentConfig:
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected a mapping")
    known = {"system", "channel", "topology", "mars", "ga", "bm1", "sweep", "trials", "seed",
             "algorithms", "output", "oracle_cap", "bm4_cap", "joint_rounds"}
    for key in raw:
        if key not in known:
            raise ConfigError(f"{key}: unknown top-level field")
    channel = _block(raw, "channel")
    for key in channel:
        if key not in ("fc_ghz", "distance_m", "paths"):
            raise ConfigError(f"channel.{key}: unknown field")
    system, qos = _system(_block(raw, "system"), channel)
    cfg = ExperimentConfig(
        system=system,
        qos=qos,
        topology=_dataclass_block(TopologyConfig, _block(raw, "topology"), "topology"),
        mars=_dataclass_block(MarsConfig, _block(raw, "mars"), "mars"),
        ga=_dataclass_block(GaConfig, _block(raw, "ga"), "ga"),
        bm1=_dataclass_block(GaConfig, _block(raw, "bm1"), "bm1", ExperimentConfig.bm1),
        paths=channel.get("paths", DEFAULT_PATHS),
    )

    def positive_int(key, default):
        v = raw.get(key, default)
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ConfigError(f"{key}: expected a positive integer, got {v!r}")
        return v

    trials = positive_int("trials", cfg.trials)
    seed = raw.get("seed", cfg.seed)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError(f"seed: expected an integer in [0, 2^64), got {seed!r}")
    algs = raw.get("algorithms", list(cfg.algorithms))
    if isinstance(algs, str):
        algs = [algs]
    if not algs:
        raise ConfigError("algorithms: at least one algorithm is required")
    for a in algs:
        if a not in ALGORITHMS:
            raise ConfigError(f"algorithms: unknown algorithm {a!r}; choose from {', '.join(ALGORITHMS)}")

    sweep_raw = _block(raw, "sweep")
    if sweep_raw:
        for key in sweep_raw:
            if key not in ("name", "values"):
                raise ConfigError(f"sweep.{key}: unknown field (exactly one axis: name + values)")
        name = sweep_raw.get("name")
        values = sweep_raw.get("values")
        if not isinstance(name, str):
            raise ConfigError("sweep.name: expected a field name")
        if not isinstance(values, list) or not values:
            raise ConfigError("sweep.values: expected a non-empty list")
        sweep = Sweep(name, tuple(values))
    else:
        sweep = cfg.sweep

    if not isinstance(cfg.paths, int) or cfg.paths < 1:
        raise ConfigError(f"channel.paths: expected a positive integer, got {cfg.paths!r}")
    cfg = replace(cfg, trials=trials, seed=seed, algorithms=tuple(algs), sweep=sweep,
                  output=str(raw.get("output", cfg.output)),
                  oracle_cap=positive_int("oracle_cap", cfg.oracle_cap),
                  bm4_cap=positive_int("bm4_cap", cfg.bm4_cap),
                  joint_rounds=positive_int("joint_rounds", cfg.joint_rounds))
    # every sweep value must produce a valid configuration
    for v in sweep.values:
        cfg.with_sweep_value(v)
    return cfg


def load_config(path) -> ExperimentConfig:
    """Parse and validate a YAML experiment file; absent keys take the defaults."""
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError(f"{path}: YAML parse error at {where}: {exc.problem}") from None
    return config_from_dict(raw)
