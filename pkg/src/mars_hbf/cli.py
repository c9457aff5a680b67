"""Command-line entry point: run, validate, oracle."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .benchmarks import exhaustive_oracle
from .channel import gen_channel
from .config import ConfigError, Qos, load_config
from .experiment import run_experiment, write_csv
from .mars import MarsConfig, run_mars
from .metrics import Beamformers, Scenario, SystemParams
from .topology import build_ldpc_connection, partition_controllers

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError(f"--seed: expected an integer in [0, 2^64), got {args.seed}")
        cfg = replace(cfg, seed=args.seed)
    out_dir = Path(args.out) if args.out else Path(cfg.output)
    res = run_experiment(cfg)
    trials, agg = write_csv(res, out_dir / f"{Path(args.config).stem}.csv")
    print(f"wrote {trials} ({len(res.rows)} rows) and {agg}")
    if res.errors:
        print(f"{len(res.errors)} cells failed; see log", file=sys.stderr)
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(f"{args.config}: ok ({cfg.sweep.name} x {len(cfg.sweep.values)} values, "
          f"{cfg.trials} trials, algorithms {', '.join(cfg.algorithms)})")
    return EXIT_OK


def oracle_check(seeds: int, qos: Qos, n_conn: int = 3, tol: float = 0.10,
                 master: int = 0) -> tuple[int, int, list[tuple[int, float, float, bool]]]:
    """MARS-S against the exhaustive optimum on the 2-chain, 4-antenna instance.

    Returns (hits, feasible seeds, per-seed (seed, oracle power, MARS power,
    MARS feasible)).
    """
    hits = feasible = 0
    rows = []
    for s in range(seeds):
        rng = np.random.default_rng(np.random.SeedSequence(master, spawn_key=(s,)))
        p = SystemParams(n_rf=2, n_ant=4, n_s=1)
        h = gen_channel(p.n_ant, p.n_t, rng=rng)
        conn = build_ldpc_connection(p.n_rf, p.n_ant, n_conn, rng)
        bf = Beamformers.random(p.n_s, p.n_rf, p.n_ant, rng)
        sc = Scenario(p, bf, conn, h)
        sc = sc.replace(params=p.with_(r_req=qos.resolve(sc.rate(np.ones(2), np.ones(4)))))
        best = exhaustive_oracle(sc)
        if best is None:
            continue
        feasible += 1
        res = run_mars(MarsConfig(eta_r=1.0, eta_a=1.0, kappa=1e-6), sc,
                       partition_controllers(conn, 1, 1), rng)
        hits += res.feasible and res.power <= (1 + tol) * best.power
        rows.append((s, best.power, res.power, res.feasible))
    return hits, feasible, rows


def _cmd_oracle(args) -> int:
    hits, feasible, rows = oracle_check(args.seeds, Qos.parse(args.qos, "--qos"), master=args.seed)
    for s, o, m, f in rows:
        print(f"seed {s:3d}  oracle {o:.4f} W  mars_s {m:.4f} W{'' if f else '  (infeasible)'}")
    frac = hits / feasible if feasible else float("nan")
    print(f"within 10% of the optimum on {hits}/{feasible} feasible seeds ({frac:.0%})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mars-hbf", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress and cell failures")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment described by a config file")
    run.add_argument("config")
    run.add_argument("--seed", type=int, help="override the master seed")
    run.add_argument("--out", help="output directory (default: the config's output field)")
    run.set_defaults(func=_cmd_run)

    val = sub.add_parser("validate", help="parse and check a config file")
    val.add_argument("config")
    val.set_defaults(func=_cmd_validate)

    orc = sub.add_parser("oracle", help="compare MARS-S with the exhaustive optimum on tiny instances")
    orc.add_argument("--seeds", type=int, default=50)
    orc.add_argument("--qos", default="50%", help="rate target, absolute or a share of the all-on rate")
    orc.add_argument("--seed", type=int, default=0, help="master seed")
    orc.set_defaults(func=_cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any failure past config loading is a runtime error
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
