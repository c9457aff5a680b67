"""Continuous genetic search for the hybrid combiners and the joint outer loop."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channel import ChannelRealization
from .mars import MarsConfig, MarsResult, run_mars
from .metrics import Beamformers, Scenario, SelectionState, SystemParams
from .topology import ConnectionMatrix, build_ldpc_connection, partition_controllers

FEASIBILITY = "feasibility"
DUAL = "dual"
PROJECTION_FLOOR = 1e-12


@dataclass(frozen=True)
class GaConfig:
    """Population sizes and stopping thresholds.

    ``n_mu`` is the total number of mutated elements per generation, spread
    over the offspring; ``None`` means 0.1 * n_g * n_crx.  ``termination``
    is ``feasibility`` (best >= 0 and a best-fitness change <= iota2) or
    ``dual`` (best <= iota1 and a change <= iota2).
    """

    n_g: int = 100
    n_e: int = 10
    n_crx: int = 100
    n_mu: int | None = None
    xi: float = 1e3
    iota1: float = 0.1
    iota2: float = 0.1
    max_generations: int = 50
    termination: str = FEASIBILITY

    def __post_init__(self):
        if self.n_g < 2 or self.n_crx < 0:
            raise ValueError("need n_g >= 2 and n_crx >= 0")
        if not 2 <= self.n_e <= self.n_g:
            raise ValueError(f"n_e must lie in [2, n_g], got {self.n_e}")
        if self.iota1 <= 0 or self.iota2 <= 0:
            raise ValueError("termination thresholds must be positive")
        if self.max_generations < 1:
            raise ValueError("max_generations must be >= 1")
        if self.n_mu is not None and self.n_mu < 0:
            raise ValueError("n_mu must be non-negative")
        if self.termination not in (FEASIBILITY, DUAL):
            raise ValueError(f"unknown termination mode {self.termination!r}")

    @property
    def mutation_budget(self) -> int:
        return int(round(0.1 * self.n_g * self.n_crx)) if self.n_mu is None else self.n_mu


@dataclass(frozen=True)
class GeneLayout:
    """Positions of [Re W_RF, Im W_RF, Re W_BB, Im W_BB] inside a gene."""

    n_s: int
    n_rf: int
    n_ant: int

    @property
    def rf_size(self) -> int:
        return self.n_rf * self.n_ant

    @property
    def bb_size(self) -> int:
        return self.n_s * self.n_rf

    @property
    def length(self) -> int:
        return 2 * (self.rf_size + self.bb_size)

    @property
    def rf_slice(self) -> slice:
        return slice(0, 2 * self.rf_size)

    @property
    def bb_slice(self) -> slice:
        return slice(2 * self.rf_size, self.length)

    @classmethod
    def for_params(cls, p: SystemParams) -> "GeneLayout":
        return cls(p.n_s, p.n_rf, p.n_ant)


def encode(bf: Beamformers) -> np.ndarray:
    w_rf, w_bb = bf.w_rf.ravel(), bf.w_bb.ravel()
    return np.concatenate([w_rf.real, w_rf.imag, w_bb.real, w_bb.imag])


def _check_length(g: np.ndarray, layout: GeneLayout) -> None:
    if g.ndim != 1 or g.size != layout.length:
        raise ValueError(f"gene length {g.size} does not match layout length {layout.length}")


def _unit_modulus(z: np.ndarray) -> np.ndarray:
    mag = np.abs(z)
    out = np.ones_like(z)
    ok = mag >= PROJECTION_FLOOR
    out[ok] = z[ok] / mag[ok]
    return out


def decode(g, layout: GeneLayout) -> Beamformers:
    """Gene back to beamformers, projecting each W_RF entry onto the unit circle."""
    g = np.asarray(g, dtype=float)
    _check_length(g, layout)
    rf, bb = layout.rf_size, layout.bb_size
    w_rf = g[:rf] + 1j * g[rf:2 * rf]
    off = 2 * rf
    w_bb = g[off:off + bb] + 1j * g[off + bb:off + 2 * bb]
    return Beamformers(_unit_modulus(w_rf).reshape(layout.n_rf, layout.n_ant),
                       w_bb.reshape(layout.n_s, layout.n_rf))


def repair(g, layout: GeneLayout) -> np.ndarray:
    """Project the W_RF part of a gene in place of its raw blend."""
    return encode(decode(g, layout))


def random_gene(layout: GeneLayout, rng: np.random.Generator) -> np.ndarray:
    return encode(Beamformers.random(layout.n_s, layout.n_rf, layout.n_ant, rng))


def fitness_from_rate(rate: float, r_req: float, xi: float) -> float:
    return rate - r_req if rate >= r_req else -xi


def fitness(g, sel: SelectionState, scenario: Scenario, xi: float = 1e3) -> float:
    """Rate margin over the QoS target, or ``-xi`` when the target is missed."""
    bf = decode(g, GeneLayout.for_params(scenario.params))
    rate = scenario.replace(beamformers=bf).rate(sel.delta, sel.theta)
    return fitness_from_rate(rate, scenario.params.r_req, xi)


def crossover(g, g_prime, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Blend two parents with a uniform random weight per element.

    The raw blends are returned, so the two children always sum to the two
    parents; unit modulus is restored when a child is decoded or repaired.
    """
    g = np.asarray(g, dtype=float)
    g_prime = np.asarray(g_prime, dtype=float)
    if g.shape != g_prime.shape:
        raise ValueError(f"parent lengths differ: {g.shape} vs {g_prime.shape}")
    s = rng.random(g.shape)
    return g * s + g_prime * (1.0 - s), g * (1.0 - s) + g_prime * s


def mutate(g, n_mu: int, layout: GeneLayout, rng: np.random.Generator) -> np.ndarray:
    """Redraw ``n_mu`` distinct positions inside their segment's current range."""
    g = np.asarray(g, dtype=float)
    _check_length(g, layout)
    if not 0 <= n_mu <= g.size:
        raise ValueError(f"n_mu must lie in [0, {g.size}], got {n_mu}")
    out = g.copy()
    if n_mu == 0:
        return out
    pos = rng.choice(g.size, size=n_mu, replace=False)
    for seg in (layout.rf_slice, layout.bb_slice):
        lo, hi = float(g[seg].min()), float(g[seg].max())
        hit = pos[(pos >= seg.start) & (pos < seg.stop)]
        out[hit] = rng.uniform(lo, hi, hit.size)
    return out


@dataclass
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    feasible_count: int


@dataclass
class EvolveResult:
    best: np.ndarray
    best_fitness: float
    generations: int
    trace: list[GenerationStats]
    stopped: bool


def evolve(population: list[np.ndarray], score: Callable[[np.ndarray], float],
           breed: Callable[[np.ndarray, np.ndarray, np.random.Generator], tuple[np.ndarray, np.ndarray]],
           vary: Callable[[np.ndarray, int, np.random.Generator], np.ndarray],
           config: GaConfig, rng: np.random.Generator,
           stop: Callable[[float, float], bool]) -> EvolveResult:
    """Elitist generational loop shared by the combiner search and BM1.

    Each generation keeps the top ``n_e`` individuals, breeds ``n_crx``
    children from random distinct elite pairs, spreads the mutation budget
    over the children, and keeps the best ``n_g`` of elites plus children.
    ``stop(best, previous_best)`` is checked from the first generation on.
    """
    pop = [np.asarray(x) for x in population]
    fit = np.array([score(x) for x in pop])

    def stats(gen: int) -> GenerationStats:
        return GenerationStats(gen, float(fit.max()), float(fit.mean()), int(np.sum(fit >= 0)))

    trace = [stats(0)]
    stopped = False
    gen = 0
    budget = config.mutation_budget
    for gen in range(1, config.max_generations + 1):
        order = np.argsort(-fit, kind="stable")
        n_e = min(config.n_e, len(pop))
        elites = [pop[j] for j in order[:n_e]]
        elite_fit = fit[order[:n_e]]

        children: list[np.ndarray] = []
        while len(children) < config.n_crx:
            a, b = rng.choice(n_e, size=2, replace=False)
            children.extend(breed(elites[a], elites[b], rng))
        children = children[:config.n_crx]
        if children:
            per, extra = divmod(budget, len(children))
            children = [vary(ch, per + (j < extra), rng) for j, ch in enumerate(children)]

        child_fit = np.array([score(ch) for ch in children])
        pool = elites + children
        pool_fit = np.concatenate([elite_fit, child_fit])
        keep = np.argsort(-pool_fit, kind="stable")[:config.n_g]
        prev_best = float(fit.max())
        pop = [pool[j] for j in keep]
        fit = pool_fit[keep]
        trace.append(stats(gen))
        if stop(float(fit.max()), prev_best):
            stopped = True
            break
    best = int(np.argmax(fit))
    return EvolveResult(pop[best], float(fit[best]), gen, trace, stopped)


@dataclass
class GaResult:
    beamformers: Beamformers
    best_fitness: float
    feasible: bool
    generations: int
    converged: bool
    trace: list[GenerationStats] = field(default_factory=list)


def fitness_trace_to_csv(trace: list[GenerationStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["generation", "best_fitness", "mean_fitness", "feasible_count"])
    for r in trace:
        w.writerow([r.generation, repr(r.best_fitness), repr(r.mean_fitness), r.feasible_count])
    return buf.getvalue()


def _stop_rule(config: GaConfig) -> Callable[[float, float], bool]:
    if config.termination == DUAL:
        return lambda best, prev: best <= config.iota1 and abs(best - prev) <= config.iota2
    return lambda best, prev: best >= 0 and abs(best - prev) <= config.iota2


def run_genetic(config: GaConfig, sel: SelectionState, scenario: Scenario,
                rng: np.random.Generator, seed_genes: list[np.ndarray] | None = None) -> GaResult:
    """Search W_RF, W_BB maximizing the rate margin for a fixed selection.

    The population starts from ``seed_genes`` (if any) topped up with random
    genes: W_RF phases uniform on [0, 2*pi), W_BB entries complex normal.
    """
    layout = GeneLayout.for_params(scenario.params)
    pop = [repair(g, layout) for g in (seed_genes or [])][:config.n_g]
    while len(pop) < config.n_g:
        pop.append(random_gene(layout, rng))

    def score(g):
        return fitness(g, sel, scenario, config.xi)

    def breed(a, b, r):
        return crossover(a, b, r)

    def vary(g, n, r):
        return repair(mutate(g, min(n, layout.length), layout, r), layout)

    res = evolve(pop, score, breed, vary, config, rng, _stop_rule(config))
    return GaResult(decode(res.best, layout), res.best_fitness, res.best_fitness >= 0,
                    res.generations, res.stopped, res.trace)


@dataclass(frozen=True)
class JointConfig:
    n_conn: int
    n_rf_per_group: int = 4
    n_ant_per_group: int = 4
    mars: MarsConfig = MarsConfig()
    ga: GaConfig = GaConfig()
    max_rounds: int = 3
    ee_tol: float = 1e-3

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.ee_tol < 0:
            raise ValueError("ee_tol must be non-negative")


@dataclass
class JointRound:
    """``best_ee`` is the best feasible EE so far, 0 until one is found."""

    round: int
    ee: float
    feasible: bool
    best_ee: float


@dataclass
class JointResult:
    """Best (C, delta, theta, W_RF, W_BB) seen over all outer rounds."""

    connection: ConnectionMatrix
    selection: SelectionState
    beamformers: Beamformers
    rate: float
    power: float
    ee: float
    feasible: bool
    rounds: list[JointRound]
    violations: list[str]
    mars: MarsResult
    ga: GaResult


def run_joint(config: JointConfig, params: SystemParams, channel: ChannelRealization,
              rng: np.random.Generator, beamformers: Beamformers | None = None) -> JointResult:
    """Alternate connection building, selection and combiner search.

    Each round draws a fresh LDPC pattern, runs MARS with the current
    combiners, then the genetic search on the resulting selection.  The
    best-so-far tuple is kept, feasible before infeasible and then by EE.
    Stops after ``max_rounds`` or once EE moves by less than ``ee_tol``.
    """
    bf = beamformers or Beamformers.random(params.n_s, params.n_rf, params.n_ant, rng)
    best: JointResult | None = None
    rounds: list[JointRound] = []
    prev_ee = None
    for r in range(1, config.max_rounds + 1):
        conn = build_ldpc_connection(params.n_rf, params.n_ant, config.n_conn, rng)
        part = partition_controllers(conn, config.n_rf_per_group, config.n_ant_per_group)
        scenario = Scenario(params, bf, conn, channel)
        mres = run_mars(config.mars, scenario, part, rng)
        gres = run_genetic(config.ga, mres.selection, scenario, rng, seed_genes=[encode(bf)])
        final = scenario.replace(beamformers=gres.beamformers)
        rep = final.report(mres.selection.delta, mres.selection.theta)
        ee = rep.rate_value / rep.power_value
        cand = JointResult(conn, mres.selection, gres.beamformers, rep.rate_value,
                           rep.power_value, ee, rep.feasible, [],
                           [k for k, v in rep.flags().items() if not v], mres, gres)
        if best is None or (cand.feasible, cand.ee) > (best.feasible, best.ee):
            best = cand
        rounds.append(JointRound(r, ee, rep.feasible, best.ee if best.feasible else 0.0))
        bf = gres.beamformers
        if prev_ee is not None and abs(ee - prev_ee) < config.ee_tol:
            break
        prev_ee = ee
    best.rounds = rounds
    return best
