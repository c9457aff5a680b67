"""Comparison baselines and the exhaustive selection oracle."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .genetic import GaConfig, evolve
from .mars import random_selection, selection_order_key
from .metrics import LITERAL, ConstraintReport, Scenario, SelectionState
from .topology import ConnectionMatrix

ORACLE_CAP = 16
BM4_CAP = 20_000
BM1_DEFAULTS = GaConfig(n_g=40, n_e=8, n_crx=40, n_mu=40, max_generations=40)


class EnumerationTooLarge(ValueError):
    """Instance is too big for an exhaustive enumeration."""


@dataclass
class BenchmarkResult:
    name: str
    selection: SelectionState
    connection: ConnectionMatrix
    report: ConstraintReport
    iterations: int = 1

    @property
    def power(self) -> float:
        return self.report.power_value

    @property
    def rate(self) -> float:
        return self.report.rate_value

    @property
    def ee(self) -> float:
        return self.rate / self.power

    @property
    def feasible(self) -> bool:
        return self.report.feasible


def _result(name: str, scenario: Scenario, delta, theta, iterations: int = 1) -> BenchmarkResult:
    sel = SelectionState(delta, theta)
    return BenchmarkResult(name, sel, scenario.connection,
                           scenario.report(sel.delta, sel.theta), iterations)


def exhaustive_oracle(scenario: Scenario, cap: int = ORACLE_CAP) -> BenchmarkResult | None:
    """Minimum-power feasible joint selection by full enumeration.

    Patterns are visited in tie-break order and the first feasible one is
    returned; ``None`` means no selection satisfies the constraints.
    """
    p = scenario.params
    n = p.n_rf + p.n_ant
    if n > cap:
        raise EnumerationTooLarge(f"{n} elements exceed the oracle cap of {cap}")
    pats = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int8)
    d, t = pats[:, :p.n_rf].astype(float), pats[:, p.n_rf:].astype(float)
    cf = scenario.connection.c.astype(float)
    lna = t.sum(1) * p.p_lna * (p.n_rf if p.lna_mode == LITERAL else 1)
    power = (p.p_bb + d.sum(1) * (p.p_rf + p.p_adc) + lna
             + np.einsum("in,nm,im->i", d, cf, t) * p.p_ps)
    order = sorted(range(len(pats)), key=lambda j: selection_order_key(power[j], pats[j]))
    for j in order:
        delta, theta = pats[j, :p.n_rf], pats[j, p.n_rf:]
        if scenario.report(delta, theta).feasible:
            return _result("oracle", scenario, delta, theta, len(pats))
    return None


def _penalized_power(scenario: Scenario, delta, theta, xi: float) -> float:
    rep = scenario.report(delta, theta)
    return -rep.power_value if rep.feasible else -xi - rep.power_value


def bm1_genetic_selection(scenario: Scenario, rng: np.random.Generator,
                          config: GaConfig = BM1_DEFAULTS, patience: int = 10) -> BenchmarkResult:
    """Binary GA over the antennas with every RF chain on.

    Genome: one bit per antenna.  Uniform crossover, bit-flip mutation and
    elitism; fitness is minus the power, minus ``xi`` more when infeasible.
    The initial population holds the all-on pattern plus random ones.  Stops
    after ``patience`` generations without improvement.
    """
    p = scenario.params
    delta = np.ones(p.n_rf, dtype=np.int8)
    pop = [np.ones(p.n_ant, dtype=np.int8)]
    pop += [rng.integers(0, 2, p.n_ant, dtype=np.int8) for _ in range(config.n_g - 1)]

    def score(g):
        return _penalized_power(scenario, delta, g, config.xi)

    def breed(a, b, r):
        m = r.random(a.shape) < 0.5
        return np.where(m, a, b).astype(np.int8), np.where(m, b, a).astype(np.int8)

    def vary(g, n, r):
        out = g.copy()
        if n:
            pos = r.choice(g.size, size=min(n, g.size), replace=False)
            out[pos] ^= 1
        return out

    stale = 0

    def stop(best, prev):
        nonlocal stale
        stale = stale + 1 if best <= prev else 0
        return stale >= patience

    res = evolve(pop, score, breed, vary, config, rng, stop)
    return _result("bm1", scenario, delta, res.best, res.generations)


def _acceptable(scenario: Scenario, delta, theta) -> bool:
    if not delta.any() or not theta.any():
        return False
    return scenario.report(delta, theta).feasible


def bm2_round_robin(scenario: Scenario, rng: np.random.Generator,
                    max_sweeps: int = 100) -> BenchmarkResult:
    """Round-robin flips from a random feasible start.

    Each sweep visits every RF chain then every antenna in index order and
    keeps a flip only if power drops and all constraints still hold.  States
    with every RF chain or every antenna off are never accepted.
    """
    p = scenario.params
    sel = random_selection(scenario, rng)
    delta, theta = sel.delta.copy(), sel.theta.copy()
    power = scenario.power(delta, theta)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        changed = False
        for which, idx in [(0, n) for n in range(p.n_rf)] + [(1, m) for m in range(p.n_ant)]:
            vec = delta if which == 0 else theta
            vec[idx] ^= 1
            new = scenario.power(delta, theta)
            if new < power and _acceptable(scenario, delta, theta):
                power = new
                changed = True
            else:
                vec[idx] ^= 1
        if not changed:
            break
    return _result("bm2", scenario, delta, theta, sweeps)


def bm3_greedy(scenario: Scenario, rng: np.random.Generator) -> BenchmarkResult:
    """Single selfish pass over the antennas with every RF chain on.

    The array starts all-on or all-off with equal probability.  Each antenna
    in turn takes the cheaper of its two states among those that satisfy
    the constraints with everything else fixed; if neither does, it stays on.
    """
    p = scenario.params
    delta = np.ones(p.n_rf, dtype=np.int8)
    theta = np.full(p.n_ant, rng.integers(0, 2), dtype=np.int8)
    for m in range(p.n_ant):
        options = []
        for bit in (0, 1):
            theta[m] = bit
            if scenario.report(delta, theta).feasible:
                options.append((scenario.power(delta, theta), bit))
        theta[m] = min(options)[1] if options else 1
    return _result("bm3", scenario, delta, theta)


def subarray_connection(sizes, n_ant: int) -> ConnectionMatrix:
    """Block-diagonal pattern: chain n owns the next ``sizes[n]`` antennas."""
    sizes = [int(s) for s in sizes]
    if sum(sizes) != n_ant or min(sizes) < 1:
        raise ValueError(f"subarray sizes {sizes} do not partition {n_ant} antennas")
    c = np.zeros((len(sizes), n_ant), dtype=np.int8)
    start = 0
    for n, s in enumerate(sizes):
        c[n, start:start + s] = 1
        start += s
    return ConnectionMatrix(c, max(sizes))


def compositions(total: int, parts: int):
    """Ordered splits of ``total`` into ``parts`` positive integers."""
    for cuts in itertools.combinations(range(1, total), parts - 1):
        bounds = (0,) + cuts + (total,)
        yield tuple(bounds[i + 1] - bounds[i] for i in range(parts))


def bm4_dynamic_partial(scenario: Scenario, cap: int = BM4_CAP) -> BenchmarkResult:
    """Best contiguous-subarray partial connection, everything on.

    Every composition of the array into one subarray per RF chain is tried
    and the most energy-efficient one is kept (first found on ties).
    """
    p = scenario.params
    count = comb(p.n_ant - 1, p.n_rf - 1)
    if count > cap:
        raise EnumerationTooLarge(
            f"{count} subarray patterns exceed the cap of {cap}; use fewer RF chains or antennas")
    delta = np.ones(p.n_rf, dtype=np.int8)
    theta = np.ones(p.n_ant, dtype=np.int8)
    best = None
    for sizes in compositions(p.n_ant, p.n_rf):
        sc = scenario.replace(connection=subarray_connection(sizes, p.n_ant))
        ee = sc.rate(delta, theta) / sc.power(delta, theta)
        if best is None or ee > best[0]:
            best = (ee, sc)
    return _result("bm4", best[1], delta, theta, count)


def bm5_full_connection(scenario: Scenario) -> BenchmarkResult:
    p = scenario.params
    sc = scenario.replace(connection=ConnectionMatrix.full(p.n_rf, p.n_ant))
    return _result("bm5", sc, np.ones(p.n_rf, dtype=np.int8), np.ones(p.n_ant, dtype=np.int8))


def bm5_power_closed_form(p) -> float:
    """Full connection, all on, one LNA per antenna."""
    return p.p_bb + p.n_rf * (p.p_rf + p.p_adc) + p.n_ant * p.p_lna + p.n_rf * p.n_ant * p.p_ps
