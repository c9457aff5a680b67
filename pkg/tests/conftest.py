import numpy as np
import pytest

from mars_hbf.channel import gen_channel
from mars_hbf.metrics import Beamformers, Scenario, SystemParams
from mars_hbf.topology import build_ldpc_connection


def tiny_scenario(seed: int, qos_fraction: float = 0.5, n_conn: int = 3) -> Scenario:
    """2 chains, 4 antennas, one stream; rate target a share of the all-on rate."""
    rng = np.random.default_rng(seed)
    p = SystemParams(n_rf=2, n_ant=4, n_s=1)
    h = gen_channel(4, p.n_t, rng=rng)
    c = build_ldpc_connection(2, 4, n_conn, rng)
    bf = Beamformers.random(1, 2, 4, rng)
    sc = Scenario(p, bf, c, h)
    full = sc.rate(np.ones(2), np.ones(4))
    return sc.replace(params=p.with_(r_req=qos_fraction * full))


def medium_scenario(seed: int, qos_fraction: float = 0.5) -> Scenario:
    """8 chains, 32 antennas, four streams, n_conn = 8."""
    rng = np.random.default_rng(seed)
    p = SystemParams(n_rf=8, n_ant=32, n_s=4)
    h = gen_channel(32, p.n_t, rng=rng)
    c = build_ldpc_connection(8, 32, 8, rng)
    bf = Beamformers.random(4, 8, 32, rng)
    sc = Scenario(p, bf, c, h)
    full = sc.rate(np.ones(8), np.ones(32))
    return sc.replace(params=p.with_(r_req=qos_fraction * full))


@pytest.fixture
def tiny():
    return tiny_scenario(0)
