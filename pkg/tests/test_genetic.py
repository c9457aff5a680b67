import numpy as np
import pytest

from conftest import tiny_scenario
from mars_hbf.channel import ChannelRealization, gen_channel
from mars_hbf.genetic import (DUAL, GaConfig, GeneLayout, JointConfig, crossover, decode, encode,
                              evolve, fitness, fitness_from_rate, fitness_trace_to_csv, mutate,
                              random_gene, repair, run_genetic, run_joint)
from mars_hbf.mars import MarsConfig
from mars_hbf.metrics import Beamformers, Scenario, SelectionState, SystemParams
from mars_hbf.topology import ConnectionMatrix


def test_gene_length():
    assert GeneLayout(4, 32, 64).length == 4352
    bf = Beamformers.random(4, 32, 64, np.random.default_rng(0))
    assert encode(bf).size == 4352


def test_encode_decode_round_trip():
    layout = GeneLayout(2, 3, 5)
    bf = Beamformers.random(2, 3, 5, np.random.default_rng(1))
    out = decode(encode(bf), layout)
    assert np.allclose(out.w_rf, bf.w_rf, atol=1e-15) and np.array_equal(out.w_bb, bf.w_bb)
    w = np.full((1, 1), np.exp(1j * np.pi / 4))
    one = decode(encode(Beamformers(w, np.ones((1, 1)))), GeneLayout(1, 1, 1))
    assert one.w_rf[0, 0] == w[0, 0]


def test_decode_projects_and_handles_zero():
    layout = GeneLayout(1, 1, 2)
    g = np.array([2.0, 0.0, 0.0, 0.0, 0.5, -0.5])  # Re W_RF, Im W_RF, Re W_BB, Im W_BB
    bf = decode(g, layout)
    assert bf.w_rf.tolist() == [[1 + 0j, 1 + 0j]]
    assert bf.w_bb.tolist() == [[0.5 - 0.5j]]
    with pytest.raises(ValueError):
        decode(g[:-1], layout)


def test_decode_is_scale_invariant_on_rf():
    layout = GeneLayout(2, 3, 4)
    rng = np.random.default_rng(2)
    g = random_gene(layout, rng)
    scaled = g.copy()
    scale = rng.uniform(0.1, 10.0, layout.rf_size)
    scaled[:layout.rf_size] *= scale
    scaled[layout.rf_size:2 * layout.rf_size] *= scale
    assert np.allclose(decode(g, layout).w_rf, decode(scaled, layout).w_rf, atol=1e-12)


def test_fitness_examples():
    assert fitness_from_rate(3.0, 3.0, 1e3) == 0.0
    assert fitness_from_rate(5.0, 3.0, 1e3) == 2.0
    assert fitness_from_rate(2.0, 3.0, 1e3) == -1000.0


def test_fitness_uses_the_scenario_rate(tiny):
    sel = SelectionState([1, 1], [1, 1, 1, 1])
    g = encode(tiny.beamformers)
    want = tiny.rate(sel.delta, sel.theta) - tiny.params.r_req
    assert fitness(g, sel, tiny) == pytest.approx(want, abs=1e-12)


def test_crossover_degenerate_weights():
    class Fixed:
        def __init__(self, v):
            self.v = v

        def random(self, shape):
            return np.full(shape, self.v)

    g, h = np.arange(6.0), -np.arange(6.0) + 1
    a, b = crossover(g, h, Fixed(1.0))
    assert np.array_equal(a, g) and np.array_equal(b, h)
    a, b = crossover(g, h, Fixed(0.5))
    assert np.array_equal(a, (g + h) / 2) and np.array_equal(b, (g + h) / 2)
    with pytest.raises(ValueError):
        crossover(g, h[:-1], Fixed(0.5))


def test_crossover_conservation():
    rng = np.random.default_rng(3)
    for _ in range(50):
        g, h = rng.normal(size=40), rng.normal(size=40)
        a, b = crossover(g, h, rng)
        assert np.max(np.abs(a + b - g - h)) <= 1e-12


def test_mutate_counts_and_bounds():
    layout = GeneLayout(2, 3, 4)
    rng = np.random.default_rng(4)
    g = random_gene(layout, rng)
    assert np.array_equal(mutate(g, 0, layout, rng), g)
    full = mutate(g, layout.length, layout, rng)
    for seg in (layout.rf_slice, layout.bb_slice):
        assert g[seg].min() <= full[seg].min() and full[seg].max() <= g[seg].max()
    for n in (1, 5, 17):
        out = mutate(g, n, layout, rng)
        # continuous redraws land on the old value with probability zero
        assert np.count_nonzero(out != g) == n
    with pytest.raises(ValueError):
        mutate(g, layout.length + 1, layout, rng)


def test_unit_modulus_after_many_rounds():
    layout = GeneLayout(2, 4, 8)
    rng = np.random.default_rng(5)
    pop = [random_gene(layout, rng) for _ in range(6)]
    for _ in range(100):
        i, j = rng.choice(len(pop), 2, replace=False)
        a, b = crossover(pop[i], pop[j], rng)
        pop[i] = repair(mutate(a, 7, layout, rng), layout)
        pop[j] = mutate(b, 3, layout, rng)
        for g in pop:
            assert np.max(np.abs(np.abs(decode(g, layout).w_rf) - 1.0)) <= 1e-9


def test_config_defaults_and_validation():
    c = GaConfig()
    assert (c.n_g, c.n_crx, c.xi, c.iota1, c.iota2) == (100, 100, 1e3, 0.1, 0.1)
    assert c.mutation_budget == 1000
    with pytest.raises(ValueError):
        GaConfig(n_e=200)
    with pytest.raises(ValueError):
        GaConfig(iota1=0.0)
    with pytest.raises(ValueError):
        GaConfig(termination="x")


def test_evolve_elitism_and_budget_spread():
    rng = np.random.default_rng(6)
    seen = []

    def vary(g, n, r):
        seen.append(n)
        return g + r.normal(size=g.shape)

    cfg = GaConfig(n_g=10, n_e=3, n_crx=7, n_mu=16, max_generations=15)
    pop = [rng.normal(size=3) for _ in range(10)]
    res = evolve(pop, lambda g: -float(np.sum(g ** 2)), crossover, vary, cfg, rng,
                 lambda best, prev: False)
    bests = [s.best_fitness for s in res.trace]
    assert all(b2 >= b1 for b1, b2 in zip(bests, bests[1:]))
    assert seen[:7] == [3, 3, 2, 2, 2, 2, 2] and sum(seen[:7]) == 16
    assert res.generations == 15 and not res.stopped


def test_seeded_gene_is_never_lost(tiny):
    sel = SelectionState([1, 1], [1, 1, 1, 1])
    seed_gene = encode(tiny.beamformers)
    floor = fitness(seed_gene, sel, tiny)
    assert floor >= 0
    res = run_genetic(GaConfig(n_g=12, n_e=3, n_crx=12, max_generations=10, termination=DUAL),
                      sel, tiny, np.random.default_rng(7), seed_genes=[seed_gene])
    assert all(s.best_fitness >= floor for s in res.trace)
    assert res.best_fitness >= floor and res.feasible


def test_siso_converges_quickly():
    p = SystemParams(n_t=1, n_ant=1, n_rf=1, n_s=1, rho=1e-9, r_req=0.5)
    ch = ChannelRealization(np.array([[0.8 + 0.1j]]), np.array([1.0]), np.zeros(1), np.zeros(1))
    sc = Scenario(p, Beamformers(np.ones((1, 1)), np.ones((1, 1))), ConnectionMatrix.full(1, 1), ch)
    res = run_genetic(GaConfig(), SelectionState([1], [1]), sc, np.random.default_rng(8))
    assert res.converged and res.generations <= 5 and res.feasible


def test_table_defaults_run():
    rng = np.random.default_rng(9)
    p = SystemParams(n_rf=4, n_ant=8, n_s=2, r_req=0.0)
    sc = Scenario(p, Beamformers.random(2, 4, 8, rng), ConnectionMatrix.full(4, 8),
                  gen_channel(8, 4, rng=rng))
    res = run_genetic(GaConfig(max_generations=3), SelectionState.all_on(4, 8), sc, rng)
    assert res.generations >= 1 and len(res.trace) == res.generations + 1
    assert np.allclose(np.abs(res.beamformers.w_rf), 1.0, atol=1e-9)
    assert fitness_trace_to_csv(res.trace).splitlines()[0] == \
        "generation,best_fitness,mean_fitness,feasible_count"


SMALL_GA = GaConfig(n_g=10, n_e=3, n_crx=10, max_generations=5)


def joint_inputs(seed):
    sc = tiny_scenario(seed)
    return sc.params, sc.channel, sc.beamformers


def test_joint_single_round():
    p, h, bf = joint_inputs(1)
    cfg = JointConfig(n_conn=3, n_rf_per_group=1, n_ant_per_group=1, ga=SMALL_GA, max_rounds=1)
    res = run_joint(cfg, p, h, np.random.default_rng(1), beamformers=bf)
    assert len(res.rounds) == 1
    assert res.feasible or res.violations
    rep = Scenario(p, res.beamformers, res.connection, h).report(res.selection.delta,
                                                                 res.selection.theta)
    assert rep.feasible == res.feasible
    assert res.ee == pytest.approx(res.rate / res.power)


def test_joint_best_ee_monotone():
    for seed in range(5):
        p, h, bf = joint_inputs(seed)
        cfg = JointConfig(n_conn=3, n_rf_per_group=1, n_ant_per_group=1,
                          mars=MarsConfig(eta_r=1.0, eta_a=1.0), ga=SMALL_GA,
                          max_rounds=4, ee_tol=0.0)
        res = run_joint(cfg, p, h, np.random.default_rng(seed), beamformers=bf)
        best = [r.best_ee for r in res.rounds]
        assert all(b2 >= b1 for b1, b2 in zip(best, best[1:]))
        if res.feasible:
            assert res.ee == pytest.approx(best[-1])


def test_joint_config_validation():
    with pytest.raises(ValueError):
        JointConfig(n_conn=3, max_rounds=0)
