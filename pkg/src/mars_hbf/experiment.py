"""Seeded Monte-Carlo sweeps over the selection algorithms, with CSV output."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import benchmarks as bm
from .channel import gen_channel
from .config import ALGORITHMS, ExperimentConfig
from .genetic import JointConfig, run_joint
from .mars import PARALLEL, SEQUENTIAL, run_mars
from .metrics import Beamformers, Scenario
from .topology import build_ldpc_connection, partition_controllers

log = logging.getLogger(__name__)

TRIAL_HEADER = ["algorithm", "sweep_name", "sweep_value", "trial", "power_w", "rate_bpshz",
                "ee", "iters", "feasible"]
AGG_HEADER = ["algorithm", "sweep_name", "sweep_value", "n", "n_feasible", "power_mean",
              "power_std", "rate_mean", "rate_std", "ee_mean", "ee_std", "iters_mean",
              "power_feasible_mean"]


@dataclass
class TrialRow:
    algorithm: str
    sweep_name: str
    sweep_value: str
    trial: int
    power_w: float
    rate_bpshz: float
    ee: float
    iters: int
    feasible: bool
    error: str = ""


@dataclass
class Aggregate:
    algorithm: str
    sweep_name: str
    sweep_value: str
    n: int
    n_feasible: int
    power_mean: float
    power_std: float
    rate_mean: float
    rate_std: float
    ee_mean: float
    ee_std: float
    iters_mean: float
    power_feasible_mean: float


@dataclass
class ExperimentResult:
    rows: list[TrialRow] = field(default_factory=list)

    @property
    def errors(self) -> list[TrialRow]:
        return [r for r in self.rows if r.error]

    def aggregates(self) -> list[Aggregate]:
        groups: dict[tuple[str, str, str], list[TrialRow]] = {}
        for r in self.rows:
            groups.setdefault((r.algorithm, r.sweep_name, r.sweep_value), []).append(r)
        return [aggregate(k, v) for k, v in groups.items()]


def _mean_std(xs: list[float]) -> tuple[float, float]:
    xs = [x for x in xs if math.isfinite(x)]
    if not xs:
        return math.nan, math.nan
    a = np.array(xs)
    return float(a.mean()), float(a.std(ddof=1)) if len(a) > 1 else 0.0


def aggregate(key: tuple[str, str, str], rows: list[TrialRow]) -> Aggregate:
    """Mean and sample standard deviation over the finite trial values."""
    pm, ps = _mean_std([r.power_w for r in rows])
    rm, rs = _mean_std([r.rate_bpshz for r in rows])
    em, es = _mean_std([r.ee for r in rows])
    im, _ = _mean_std([float(r.iters) for r in rows])
    pf, _ = _mean_std([r.power_w for r in rows if r.feasible])
    return Aggregate(*key, len(rows), sum(r.feasible for r in rows), pm, ps, rm, rs, em, es, im, pf)


def trial_seed(master: int, sweep_idx: int, trial_idx: int, stream: int = 0) -> np.random.SeedSequence:
    """Independent stream per (sweep value, trial, consumer); stream 0 draws the environment."""
    return np.random.SeedSequence(master, spawn_key=(sweep_idx, trial_idx, stream))


def _stream_id(alg: str) -> int:
    return 1 + ALGORITHMS.index(alg)


def build_scenario(cfg: ExperimentConfig, rng: np.random.Generator) -> Scenario:
    """Channel, LDPC pattern and random combiners for one trial, QoS resolved."""
    p = cfg.system
    h = gen_channel(p.n_ant, p.n_t, cfg.paths, rng)
    conn = build_ldpc_connection(p.n_rf, p.n_ant, cfg.topology.n_conn, rng)
    bf = Beamformers.random(p.n_s, p.n_rf, p.n_ant, rng)
    sc = Scenario(p, bf, conn, h)
    if cfg.qos.relative:
        full = sc.rate(np.ones(p.n_rf), np.ones(p.n_ant))
        sc = sc.replace(params=p.with_(r_req=cfg.qos.resolve(full)))
    return sc


def run_algorithm(alg: str, cfg: ExperimentConfig, sc: Scenario,
                  rng: np.random.Generator) -> tuple[float, float, int, bool]:
    """(power, rate, iterations, feasible) of one algorithm on one scenario."""
    if alg in ("mars_s", "mars_p"):
        part = partition_controllers(sc.connection, cfg.topology.n_rf_per_group,
                                     cfg.topology.n_ant_per_group)
        mcfg = replace(cfg.mars, schedule=SEQUENTIAL if alg == "mars_s" else PARALLEL)
        res = run_mars(mcfg, sc, part, rng)
        last = res.trace[-1]
        return last.power_w, last.rate_bpshz, res.iterations, last.feasible
    if alg == "joint":
        jcfg = JointConfig(cfg.topology.n_conn, cfg.topology.n_rf_per_group,
                           cfg.topology.n_ant_per_group, cfg.mars, cfg.ga, cfg.joint_rounds)
        res = run_joint(jcfg, sc.params, sc.channel, rng, beamformers=sc.beamformers)
        return res.power, res.rate, len(res.rounds), res.feasible
    if alg == "oracle":
        out = bm.exhaustive_oracle(sc, cap=cfg.oracle_cap)
        if out is None:
            return math.nan, math.nan, 2 ** (sc.params.n_rf + sc.params.n_ant), False
    elif alg == "bm1":
        out = bm.bm1_genetic_selection(sc, rng, cfg.bm1)
    elif alg == "bm2":
        out = bm.bm2_round_robin(sc, rng)
    elif alg == "bm3":
        out = bm.bm3_greedy(sc, rng)
    elif alg == "bm4":
        out = bm.bm4_dynamic_partial(sc, cap=cfg.bm4_cap)
    elif alg == "bm5":
        out = bm.bm5_full_connection(sc)
    else:
        raise ValueError(f"unknown algorithm {alg!r}")
    return out.power, out.rate, out.iterations, out.feasible


def _fmt_value(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Every (sweep value, trial) cell shares one environment across algorithms.

    A failure inside one algorithm is logged and recorded as a NaN row; the
    sweep carries on.
    """
    result = ExperimentResult()
    for si, value in enumerate(cfg.sweep.values):
        vcfg = cfg.with_sweep_value(value)
        label = _fmt_value(value)
        for ti in range(cfg.trials):
            env_rng = np.random.default_rng(trial_seed(cfg.seed, si, ti))
            try:
                sc = build_scenario(vcfg, env_rng)
            except (ValueError, RuntimeError) as exc:
                log.warning("sweep %s=%s trial %d: scenario failed: %s", cfg.sweep.name, label, ti, exc)
                for alg in cfg.algorithms:
                    result.rows.append(TrialRow(alg, cfg.sweep.name, label, ti, math.nan,
                                                math.nan, math.nan, 0, False, str(exc)))
                continue
            for alg in cfg.algorithms:
                rng = np.random.default_rng(trial_seed(cfg.seed, si, ti, _stream_id(alg)))
                try:
                    power, rate, iters, feas = run_algorithm(alg, vcfg, sc, rng)
                    ee = rate / power if power > 0 else math.nan
                    result.rows.append(TrialRow(alg, cfg.sweep.name, label, ti, float(power),
                                                float(rate), float(ee), int(iters), bool(feas)))
                except (ValueError, RuntimeError, ArithmeticError) as exc:
                    log.warning("%s at %s=%s trial %d failed: %s", alg, cfg.sweep.name, label, ti, exc)
                    result.rows.append(TrialRow(alg, cfg.sweep.name, label, ti, math.nan,
                                                math.nan, math.nan, 0, False, str(exc)))
    return result


def _num(x: float) -> str:
    return repr(float(x))


def write_csv(res: ExperimentResult, path) -> tuple[Path, Path]:
    """Trial rows to ``path`` and per-cell aggregates to ``<stem>_aggregate.csv``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    agg_path = path.with_name(path.stem + "_aggregate" + path.suffix)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRIAL_HEADER)
        for r in res.rows:
            w.writerow([r.algorithm, r.sweep_name, r.sweep_value, r.trial, _num(r.power_w),
                        _num(r.rate_bpshz), _num(r.ee), r.iters, int(r.feasible)])
    with agg_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGG_HEADER)
        for a in res.aggregates():
            w.writerow([a.algorithm, a.sweep_name, a.sweep_value, a.n, a.n_feasible,
                        _num(a.power_mean), _num(a.power_std), _num(a.rate_mean), _num(a.rate_std),
                        _num(a.ee_mean), _num(a.ee_std), _num(a.iters_mean),
                        _num(a.power_feasible_mean)])
    return path, agg_path


def read_trials(path) -> list[TrialRow]:
    rows = []
    with Path(path).open(newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(TrialRow(rec["algorithm"], rec["sweep_name"], rec["sweep_value"],
                                 int(rec["trial"]), float(rec["power_w"]), float(rec["rate_bpshz"]),
                                 float(rec["ee"]), int(rec["iters"]), rec["feasible"] == "1"))
    return rows
