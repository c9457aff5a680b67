"""Message-passing RF-chain / antenna selection (sequential and parallel)."""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .metrics import Scenario, SelectionState
from .topology import ControllerPartition, is_bipartite_connected

RETENTIVE = "retentive"
LITERAL = "literal"
SEQUENTIAL = "sequential"
PARALLEL = "parallel"
KEEP = "keep"
RESTORE = "restore"


class TopologyError(ValueError):
    """Controller graph is not connected, so messages cannot reach everyone."""


@dataclass(frozen=True)
class MarsConfig:
    eta_r: float = 0.7
    eta_a: float = 0.7
    kappa: float = 1e-6
    max_iters: int = 100
    update_rule: str = RETENTIVE
    schedule: str = SEQUENTIAL
    fallback: str = RESTORE

    def __post_init__(self):
        for name in ("eta_r", "eta_a"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.update_rule not in (RETENTIVE, LITERAL):
            raise ValueError(f"unknown update rule {self.update_rule!r}")
        if self.schedule not in (SEQUENTIAL, PARALLEL):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.fallback not in (KEEP, RESTORE):
            raise ValueError(f"unknown fallback {self.fallback!r}")


def merge_beliefs(stored, incoming, mode: str = RETENTIVE) -> np.ndarray:
    """Combine a stored bit vector with the copies received from neighbours.

    With x_l = incoming_l XOR stored, a bit can be raised when some neighbour
    reports 1 against a stored 0, and is vetoed when some neighbour reports 0
    against a stored 1::

        up   = OR_l (x_l AND incoming_l)
        veto = OR_l (x_l AND stored)

    ``literal`` returns ``up AND NOT veto``; ``retentive`` returns
    ``(stored OR up) AND NOT veto`` so bits every neighbour agrees on survive.
    """
    s = np.asarray(stored, dtype=bool)
    inc = [np.asarray(v, dtype=bool) for v in incoming]
    for v in inc:
        if v.shape != s.shape:
            raise ValueError(f"belief length mismatch: {v.shape} vs {s.shape}")
    if not inc:
        return s.astype(np.int8) if mode == RETENTIVE else np.zeros_like(s, dtype=np.int8)
    stack = np.stack(inc)
    xi = stack ^ s[None, :]
    up = np.any(xi & stack, axis=0)
    veto = np.any(xi & s[None, :], axis=0)
    if mode == LITERAL:
        out = up & ~veto
    elif mode == RETENTIVE:
        out = (s | up) & ~veto
    else:
        raise ValueError(f"unknown update rule {mode!r}")
    return out.astype(np.int8)


@dataclass
class ControllerBeliefs:
    """Every controller's view of the whole selection.

    Row i of ``delta``/``theta`` is controller i's picture; RF controllers
    come first (0..K-1), antenna controllers after (K..K+L-1).  The block a
    controller owns is its own decision, the rest are copies.
    """

    partition: ControllerPartition
    delta: np.ndarray
    theta: np.ndarray

    @classmethod
    def broadcast(cls, partition: ControllerPartition, sel: SelectionState) -> "ControllerBeliefs":
        n = partition.n_rf_controllers + partition.n_ant_controllers
        return cls(partition, np.tile(sel.delta, (n, 1)).astype(np.int8),
                   np.tile(sel.theta, (n, 1)).astype(np.int8))

    @property
    def n_rf_ctrl(self) -> int:
        return self.partition.n_rf_controllers

    def is_rf(self, i: int) -> bool:
        return i < self.n_rf_ctrl

    def own(self, i: int) -> np.ndarray:
        if self.is_rf(i):
            return self.delta[i, self.partition.rf_groups[i]]
        return self.theta[i, self.partition.ant_groups[i - self.n_rf_ctrl]]

    def set_own(self, i: int, bits) -> None:
        if self.is_rf(i):
            self.delta[i, self.partition.rf_groups[i]] = bits
        else:
            self.theta[i, self.partition.ant_groups[i - self.n_rf_ctrl]] = bits

    def neighbors(self, i: int) -> list[int]:
        k = self.n_rf_ctrl
        if self.is_rf(i):
            return [k + l for l in self.partition.rf_neighbors[i]]
        return list(self.partition.ant_neighbors[i - k])

    def assembled(self) -> SelectionState:
        delta = np.zeros(self.delta.shape[1], dtype=np.int8)
        theta = np.zeros(self.theta.shape[1], dtype=np.int8)
        for k, grp in enumerate(self.partition.rf_groups):
            delta[grp] = self.delta[k, grp]
        for l, grp in enumerate(self.partition.ant_groups):
            theta[grp] = self.theta[self.n_rf_ctrl + l, grp]
        return SelectionState(delta, theta)


@dataclass(frozen=True)
class Message:
    """Sender's own decision plus its current copies of everyone else's."""

    source: int
    dest: int
    delta: np.ndarray
    theta: np.ndarray


class LocalDecision(NamedTuple):
    bits: np.ndarray
    feasible: bool


def selection_order_key(power: float, bits) -> tuple:
    """Tie-break shared by every enumerator: power, then fewer active bits, then pattern."""
    bits = tuple(int(b) for b in bits)
    return (round(power, 12), sum(bits), bits)


def _patterns(size: int) -> np.ndarray:
    return np.array(list(itertools.product((0, 1), repeat=size)), dtype=np.int8).reshape(-1, size)


def _search(scenario: Scenario, delta: np.ndarray, theta: np.ndarray, idx: np.ndarray,
            on_rf: bool, previous: np.ndarray, insertion: bool) -> LocalDecision:
    """Exhaustive argmin of power over the bits at ``idx``; first feasible wins.

    Candidates are ordered by (power, active count, pattern) so the scan can
    stop at the first one that passes the constraint set.
    """
    cands = _patterns(len(idx))
    d = np.array(delta, dtype=np.int8)
    t = np.array(theta, dtype=np.int8)
    target = d if on_rf else t
    powers = []
    for bits in cands:
        target[idx] = bits
        powers.append(scenario.power(d, t))
    order = sorted(range(len(cands)), key=lambda j: selection_order_key(powers[j], cands[j]))
    p = scenario.params
    for j in order:
        if powers[j] > p.p_max:
            continue
        target[idx] = cands[j]
        if not scenario.streams_ok(d, t):
            continue
        if insertion and scenario.overloaded(d, t):
            continue
        if scenario.rate(d, t) >= p.r_req:
            return LocalDecision(cands[j].copy(), True)
    return LocalDecision(np.array(previous, dtype=np.int8), False)


def local_optimize_rf(k: int, beliefs: ControllerBeliefs, scenario: Scenario) -> LocalDecision:
    """Best RF pattern for controller k given its copies of everything else.

    Constraint set: binary, stream count, rate and power cap.  When nothing
    is feasible the previous own decision comes back with ``feasible=False``.
    """
    idx = beliefs.partition.rf_groups[k]
    return _search(scenario, beliefs.delta[k], beliefs.theta[k], idx, True,
                   beliefs.own(k), insertion=False)


def local_optimize_ant(l: int, beliefs: ControllerBeliefs, scenario: Scenario) -> LocalDecision:
    """As :func:`local_optimize_rf` for antenna controller l, adding the per-chain load limit."""
    i = beliefs.n_rf_ctrl + l
    idx = beliefs.partition.ant_groups[l]
    return _search(scenario, beliefs.delta[i], beliefs.theta[i], idx, False,
                   beliefs.own(i), insertion=True)


@dataclass
class TraceRow:
    iteration: int
    power_w: float
    rate_bpshz: float
    ee: float
    feasible: bool


@dataclass
class MarsResult:
    selection: SelectionState
    converged: bool
    iterations: int
    trace: list[TraceRow]
    beliefs: ControllerBeliefs
    schedule: str
    fallbacks: int = 0

    @property
    def power(self) -> float:
        return self.trace[-1].power_w

    @property
    def feasible(self) -> bool:
        return self.trace[-1].feasible


def trace_to_csv(result: MarsResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "power_W", "rate_bpsHz", "ee", "feasible", "schedule"])
    for r in result.trace:
        w.writerow([r.iteration, repr(r.power_w), repr(r.rate_bpshz), repr(r.ee),
                    int(r.feasible), result.schedule])
    return buf.getvalue()


def random_selection(scenario: Scenario, rng: np.random.Generator,
                     max_draws: int = 10_000) -> SelectionState:
    """Fair coin flips per element, redrawn until every constraint holds.

    Falls back to the all-on selection if ``max_draws`` draws all fail.
    """
    p = scenario.params
    for _ in range(max_draws):
        d = rng.integers(0, 2, p.n_rf, dtype=np.int8)
        t = rng.integers(0, 2, p.n_ant, dtype=np.int8)
        if scenario.streams_ok(d, t) and scenario.report(d, t).feasible:
            return SelectionState(d, t)
    return SelectionState.all_on(p.n_rf, p.n_ant)


def _trace_row(t: int, scenario: Scenario, sel: SelectionState) -> TraceRow:
    rep = scenario.report(sel.delta, sel.theta)
    ee = rep.rate_value / rep.power_value if rep.power_value > 0 else 0.0
    return TraceRow(t, rep.power_value, rep.rate_value, ee, rep.feasible)


class MessagePassing:
    """Controller state, inboxes and one-iteration stepping for MARS.

    Sequential: controllers act one by one (RF ascending, then antennas),
    each merging its inbox, optimizing with probability eta and sending its
    beliefs to its neighbours straight away.  Parallel: everyone merges the
    previous round's messages and optimizes, then all messages are delivered
    at once.
    """

    def __init__(self, config: MarsConfig, scenario: Scenario, partition: ControllerPartition,
                 rng: np.random.Generator, initial: SelectionState):
        self.config, self.scenario, self.rng = config, scenario, rng
        self.beliefs = ControllerBeliefs.broadcast(partition, initial)
        self.n_ctrl = partition.n_rf_controllers + partition.n_ant_controllers
        self.inbox: list[dict[int, Message]] = [dict() for _ in range(self.n_ctrl)]
        self.fallbacks = 0

    def act(self, i: int) -> None:
        cfg, beliefs = self.config, self.beliefs
        msgs = list(self.inbox[i].values())
        self.inbox[i] = {}
        if msgs:
            own = beliefs.own(i).copy()
            beliefs.delta[i] = merge_beliefs(beliefs.delta[i], [m.delta for m in msgs], cfg.update_rule)
            beliefs.theta[i] = merge_beliefs(beliefs.theta[i], [m.theta for m in msgs], cfg.update_rule)
            beliefs.set_own(i, own)
        rf = beliefs.is_rf(i)
        x = self.rng.random()
        if x <= (cfg.eta_r if rf else cfg.eta_a):
            if rf:
                dec = local_optimize_rf(i, beliefs, self.scenario)
            else:
                dec = local_optimize_ant(i - beliefs.n_rf_ctrl, beliefs, self.scenario)
            if dec.feasible:
                beliefs.set_own(i, dec.bits)
            else:
                self.fallbacks += 1
                if cfg.fallback == RESTORE:
                    # reselect: nothing local satisfies the constraints, so
                    # switch the whole block back on to recover rate
                    beliefs.set_own(i, np.ones_like(dec.bits))

    def send(self, i: int) -> None:
        d, t = self.beliefs.delta[i].copy(), self.beliefs.theta[i].copy()
        for j in self.beliefs.neighbors(i):
            self.inbox[j][i] = Message(i, j, d, t)

    def step(self) -> SelectionState:
        """One full iteration; returns the assembled selection."""
        if self.config.schedule == SEQUENTIAL:
            for i in range(self.n_ctrl):
                self.act(i)
                self.send(i)
        else:
            for i in range(self.n_ctrl):
                self.act(i)
            for i in range(self.n_ctrl):
                self.send(i)
        return self.beliefs.assembled()


def run_mars(config: MarsConfig, scenario: Scenario, partition: ControllerPartition,
             rng: np.random.Generator, initial: SelectionState | None = None) -> MarsResult:
    """Run MARS-S (``schedule='sequential'``) or MARS-P (``'parallel'``).

    See :class:`MessagePassing` for the schedules.  Stops when the assembled
    power moves by at most kappa between consecutive iterations, or after
    ``max_iters``.
    """
    if not is_bipartite_connected(scenario.connection):
        raise TopologyError("connection graph is not connected")
    sel = initial if initial is not None else random_selection(scenario, rng)
    mp = MessagePassing(config, scenario, partition, rng, sel)
    trace = [_trace_row(0, scenario, sel)]
    converged = False
    t = 0
    for t in range(1, config.max_iters + 1):
        sel = mp.step()
        trace.append(_trace_row(t, scenario, sel))
        if t >= 2 and abs(trace[-2].power_w - trace[-1].power_w) <= config.kappa:
            converged = True
            break
    return MarsResult(sel, converged, t, trace, mp.beliefs, config.schedule, mp.fallbacks)
