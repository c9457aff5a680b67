"""Saleh-Valenzuela narrowband channel and distance-based path loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_PATHS = 10


@dataclass(frozen=True)
class ChannelRealization:
    """Small-scale channel H (n_ant x n_t) plus the rays that built it.

    Attributes:
        H: complex receive-by-transmit gain matrix.
        gains: complex path gains, one per ray.
        aoa: arrival angles in radians.
        aod: departure angles in radians.
    """

    H: np.ndarray
    gains: np.ndarray
    aoa: np.ndarray
    aod: np.ndarray

    @property
    def L(self) -> int:
        return len(self.gains)

    @property
    def paths(self) -> list[tuple[complex, float, float]]:
        return [(complex(g), float(r), float(t))
                for g, r, t in zip(self.gains, self.aoa, self.aod)]


@dataclass(frozen=True)
class LargeScale:
    fc_ghz: float
    d_m: float
    pl_db: float
    rho: float


def array_response(n_elems: int, phi: float) -> np.ndarray:
    """Unit-norm half-wavelength ULA steering vector, shape (n_elems, 1)."""
    if n_elems < 1:
        raise ValueError(f"n_elems must be >= 1, got {n_elems}")
    k = np.arange(n_elems)
    return (np.exp(1j * np.pi * k * np.sin(phi)) / np.sqrt(n_elems)).reshape(-1, 1)


def gen_channel(n_ant: int, n_t: int, L: int = DEFAULT_PATHS,
                rng: np.random.Generator | None = None, *,
                gains=None, aoa=None, aod=None) -> ChannelRealization:
    """Draw one Saleh-Valenzuela channel.

    H = sqrt(n_t * n_ant / L) * sum_l g_l a_r(aoa_l) a_t(aod_l)^H with
    g_l ~ CN(0, 1) and both angle sets uniform on [-pi/2, pi/2].  Any of
    ``gains``, ``aoa`` or ``aod`` may be passed to pin those draws; the
    random stream is consumed in the same order regardless.
    """
    if min(n_ant, n_t, L) < 1:
        raise ValueError("n_ant, n_t and L must all be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    g = (rng.standard_normal(L) + 1j * rng.standard_normal(L)) / np.sqrt(2.0)
    r = rng.uniform(-np.pi / 2, np.pi / 2, L)
    t = rng.uniform(-np.pi / 2, np.pi / 2, L)
    if gains is not None:
        g = np.asarray(gains, dtype=np.complex128).reshape(L)
    if aoa is not None:
        r = np.asarray(aoa, dtype=float).reshape(L)
    if aod is not None:
        t = np.asarray(aod, dtype=float).reshape(L)

    kr = np.arange(n_ant)[:, None]
    kt = np.arange(n_t)[:, None]
    ar = np.exp(1j * np.pi * kr * np.sin(r)[None, :]) / np.sqrt(n_ant)
    at = np.exp(1j * np.pi * kt * np.sin(t)[None, :]) / np.sqrt(n_t)
    H = np.sqrt(n_t * n_ant / L) * (ar * g[None, :]) @ at.conj().T
    return ChannelRealization(H=H, gains=g, aoa=r, aod=t)


def path_loss(fc_ghz: float, d_m: float) -> LargeScale:
    """PL = 32.4 + 20 log10(fc[GHz]) + 30 log10(d[m]); rho = 10^(-PL/10)."""
    if fc_ghz <= 0:
        raise ValueError(f"carrier frequency must be positive, got {fc_ghz}")
    if d_m < 1:
        raise ValueError(f"distance must be >= 1 m, got {d_m}")
    pl = 32.4 + 20.0 * np.log10(fc_ghz) + 30.0 * np.log10(d_m)
    return LargeScale(fc_ghz=fc_ghz, d_m=d_m, pl_db=float(pl), rho=float(10.0 ** (-pl / 10.0)))
