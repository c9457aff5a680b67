"""Rate, power, energy efficiency and feasibility of a receiver configuration."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .channel import ChannelRealization, path_loss
from .numerics import (DimensionError, log2_det_hermitian_psd, psd_pinv_factor)
from .topology import ConnectionMatrix

PER_ELEMENT = "per_element"
LITERAL = "literal"
UNIT_MODULUS_TOL = 1e-9


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


@dataclass(frozen=True)
class SystemParams:
    """Scalar system settings, all powers in watts.

    Defaults follow the 28 GHz / 100 m evaluation setup; ``n_t`` and
    ``beta`` are not fixed there and default to 4 and 0.3.
    """

    n_t: int = 4
    n_ant: int = 128
    n_rf: int = 32
    n_s: int = 4
    p_t: float = dbm_to_watt(20.0)
    n0: float = dbm_to_watt(-85.0)
    beta: float = 0.3
    p_bb: float = 0.8
    p_rf: float = 0.04
    p_adc: float = 0.1
    p_lna: float = 0.01
    p_ps: float = 0.01
    p_o: float = dbm_to_watt(25.0)
    p_max: float = dbm_to_watt(44.0)
    r_req: float = 3.0
    rho: float = path_loss(28.0, 100.0).rho
    lna_mode: str = PER_ELEMENT

    def __post_init__(self):
        for name in ("p_t", "n0", "p_bb", "p_rf", "p_adc", "p_lna", "p_ps", "p_o", "p_max", "rho"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if not 1 <= self.n_s <= self.n_rf <= self.n_ant:
            raise ValueError(
                f"need 1 <= n_s <= n_rf <= n_ant, got {self.n_s}, {self.n_rf}, {self.n_ant}")
        if self.n_t < 1:
            raise ValueError("n_t must be >= 1")
        if self.lna_mode not in (PER_ELEMENT, LITERAL):
            raise ValueError(f"unknown lna_mode {self.lna_mode!r}")

    def with_(self, **kw) -> "SystemParams":
        return replace(self, **kw)

    @property
    def snr_scale(self) -> float:
        return self.p_t * self.rho * (1.0 - self.beta) / (self.n0 * self.n_t)


@dataclass(frozen=True)
class SelectionState:
    delta: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        for name in ("delta", "theta"):
            v = np.asarray(getattr(self, name))
            if v.ndim != 1 or not np.all((v == 0) | (v == 1)):
                raise ValueError(f"{name} must be a 0/1 vector")
            v = v.astype(np.int8)
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def all_on(cls, n_rf: int, n_ant: int) -> "SelectionState":
        return cls(np.ones(n_rf, dtype=np.int8), np.ones(n_ant, dtype=np.int8))

    def key(self) -> tuple[int, ...]:
        return tuple(int(v) for v in np.concatenate([self.delta, self.theta]))


@dataclass(frozen=True)
class Beamformers:
    """Analog combiner w_rf (n_rf x n_ant, unit modulus) and baseband w_bb (n_s x n_rf)."""

    w_rf: np.ndarray
    w_bb: np.ndarray

    def __post_init__(self):
        w_rf = np.asarray(self.w_rf, dtype=np.complex128)
        w_bb = np.asarray(self.w_bb, dtype=np.complex128)
        if w_rf.ndim != 2 or w_bb.ndim != 2:
            raise DimensionError("beamformers must be 2-D")
        if w_bb.shape[1] != w_rf.shape[0]:
            raise DimensionError(f"w_bb {w_bb.shape} does not match w_rf {w_rf.shape}")
        if np.any(np.abs(np.abs(w_rf) - 1.0) > UNIT_MODULUS_TOL):
            raise ValueError("w_rf entries must have unit modulus")
        object.__setattr__(self, "w_rf", w_rf)
        object.__setattr__(self, "w_bb", w_bb)

    @classmethod
    def random(cls, n_s: int, n_rf: int, n_ant: int, rng: np.random.Generator) -> "Beamformers":
        phases = rng.uniform(0.0, 2 * np.pi, (n_rf, n_ant))
        w_bb = rng.standard_normal((n_s, n_rf)) + 1j * rng.standard_normal((n_s, n_rf))
        return cls(np.exp(1j * phases), w_bb)


def _check_dims(p: SystemParams, sel: SelectionState, bf: Beamformers | None,
                c: ConnectionMatrix, h: ChannelRealization | None) -> None:
    shapes = {"delta": (len(sel.delta), p.n_rf), "theta": (len(sel.theta), p.n_ant),
              "C rows": (c.n_rf, p.n_rf), "C cols": (c.n_ant, p.n_ant)}
    if bf is not None:
        shapes["w_rf"] = (bf.w_rf.shape, (p.n_rf, p.n_ant))
        shapes["w_bb"] = (bf.w_bb.shape, (p.n_s, p.n_rf))
    if h is not None:
        shapes["H"] = (h.H.shape, (p.n_ant, p.n_t))
    for name, (got, want) in shapes.items():
        if got != want:
            raise DimensionError(f"{name}: got {got}, expected {want}")


def achievable_rate(p: SystemParams, sel: SelectionState, bf: Beamformers,
                    c: ConnectionMatrix, h: ChannelRealization) -> float:
    """Achievable rate in bits/s/Hz.

    The combiner mask ``C o W_RF`` is applied in both the signal and the
    noise-covariance term.  With Q = W_BB (C o W_RF)(C o W_RF)^H W_BB^H and
    Q^+ = V V^H, log2 det(I + s G Q^+) is evaluated as the Hermitian form
    log2 det(I + s V^H G V).
    """
    _check_dims(p, sel, bf, c, h)
    return Scenario(p, bf, c, h).rate(sel.delta, sel.theta)


def power_consumption(p: SystemParams, sel: SelectionState, c: ConnectionMatrix,
                      mode: str | None = None) -> float:
    """Receiver circuit power in watts.

    ``per_element`` counts one LNA per active antenna; ``literal`` nests the
    LNA sum inside the RF-chain sum, charging every active antenna's LNA once
    per RF chain.
    """
    mode = p.lna_mode if mode is None else mode
    d = np.asarray(sel.delta, dtype=float)
    t = np.asarray(sel.theta, dtype=float)
    links = float(d @ c.c @ t)
    lna = t.sum() * p.p_lna
    if mode == LITERAL:
        lna *= len(d)
    elif mode != PER_ELEMENT:
        raise ValueError(f"unknown lna mode {mode!r}")
    return float(p.p_bb + d.sum() * (p.p_rf + p.p_adc) + lna + links * p.p_ps)


def energy_efficiency(rate: float, power: float) -> float:
    if power <= 0:
        raise ValueError("power must be positive to compute energy efficiency")
    return rate / power


@dataclass
class ConstraintReport:
    """Per-constraint verdicts for problem (5); ``feasible`` is their conjunction."""

    binary: bool
    streams: bool
    rate: bool
    power: bool
    insertion: bool
    unit_modulus: bool
    rate_value: float = float("nan")
    power_value: float = float("nan")
    overloaded_chains: list[int] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return all((self.binary, self.streams, self.rate, self.power,
                    self.insertion, self.unit_modulus))

    def flags(self) -> dict[str, bool]:
        return {"binary": self.binary, "streams": self.streams, "rate": self.rate,
                "power": self.power, "insertion": self.insertion,
                "unit_modulus": self.unit_modulus}


def check_constraints(p: SystemParams, sel: SelectionState, bf: Beamformers,
                      c: ConnectionMatrix, h: ChannelRealization) -> ConstraintReport:
    return Scenario(p, bf, c, h).report(sel.delta, sel.theta)


class Scenario:
    """One fixed (params, beamformers, connection, channel) tuple.

    Caches the quantities that do not depend on the selection, so the
    selection search can evaluate many (delta, theta) pairs cheaply.
    """

    def __init__(self, params: SystemParams, beamformers: Beamformers,
                 connection: ConnectionMatrix, channel: ChannelRealization):
        self.params = params
        self.beamformers = beamformers
        self.connection = connection
        self.channel = channel
        _check_dims(params, SelectionState.all_on(params.n_rf, params.n_ant),
                    beamformers, connection, channel)
        self._cf = connection.c.astype(float)

    def replace(self, **kw) -> "Scenario":
        args = dict(params=self.params, beamformers=self.beamformers,
                    connection=self.connection, channel=self.channel)
        args.update(kw)
        return Scenario(**args)

    @cached_property
    def masked_rf(self) -> np.ndarray:
        return self.connection.c * self.beamformers.w_rf

    @cached_property
    def noise_whitener(self) -> np.ndarray:
        w = self.beamformers.w_bb @ self.masked_rf
        return psd_pinv_factor(w @ w.conj().T)

    def rate(self, delta, theta) -> float:
        p = self.params
        scale = p.snr_scale
        if scale == 0.0:
            return 0.0
        d = np.asarray(delta, dtype=float)
        t = np.asarray(theta, dtype=float)
        a = (self.beamformers.w_bb * d[None, :]) @ (self.masked_rf * t[None, :]) @ self.channel.H
        b = self.noise_whitener.conj().T @ a
        if b.shape[0] <= b.shape[1]:
            gram = b @ b.conj().T
        else:
            gram = b.conj().T @ b
        return max(0.0, log2_det_hermitian_psd(np.eye(gram.shape[0]) + scale * gram))

    def power(self, delta, theta) -> float:
        p = self.params
        d = np.asarray(delta, dtype=float)
        t = np.asarray(theta, dtype=float)
        lna = t.sum() * p.p_lna * (len(d) if p.lna_mode == LITERAL else 1)
        return float(p.p_bb + d.sum() * (p.p_rf + p.p_adc) + lna
                     + float(d @ self._cf @ t) * p.p_ps)

    def streams_ok(self, delta, theta) -> bool:
        nd = int(np.sum(delta))
        return self.params.n_s <= nd <= int(np.sum(theta))

    def overloaded(self, delta, theta) -> list[int]:
        p = self.params
        load = p.p_ps * (self._cf @ np.asarray(theta, dtype=float))
        bad = (load > (1.0 - p.beta) * p.p_o + 1e-15) & (np.asarray(delta) == 1)
        return [int(n) for n in np.flatnonzero(bad)]

    def report(self, delta, theta) -> ConstraintReport:
        delta = np.asarray(delta)
        theta = np.asarray(theta)
        binary = bool(np.all((delta == 0) | (delta == 1)) and np.all((theta == 0) | (theta == 1)))
        rate = self.rate(delta, theta)
        power = self.power(delta, theta)
        over = self.overloaded(delta, theta)
        unit = bool(np.all(np.abs(np.abs(self.beamformers.w_rf) - 1.0) <= UNIT_MODULUS_TOL))
        return ConstraintReport(
            binary=binary,
            streams=self.streams_ok(delta, theta),
            rate=rate >= self.params.r_req,
            power=power <= self.params.p_max,
            insertion=not over,
            unit_modulus=unit,
            rate_value=rate,
            power_value=power,
            overloaded_chains=over,
        )
