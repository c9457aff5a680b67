import numpy as np
import pytest

from mars_hbf.topology import (ConnectionMatrix, InfeasibleConnection, build_ldpc_connection,
                               check_ldpc_feasible, common_antennas, contiguous_groups,
                               is_bipartite_connected, partition_controllers, validate_ldpc)

# 3 chains over 5 antennas with chi_12 = 2, chi_23 = 1, chi_13 = 1
FIG_A = np.array([[1, 1, 0, 1, 0],
                  [1, 1, 1, 0, 0],
                  [0, 0, 1, 1, 1]])
# 3 chains over 6 antennas: disjoint pairs plus dependency links
FIG_B_PHASE1 = np.array([[1, 1, 0, 0, 0, 0],
                         [0, 0, 1, 1, 0, 0],
                         [0, 0, 0, 0, 1, 1]])
FIG_B = np.array([[1, 1, 1, 0, 0, 0],
                  [0, 0, 1, 1, 1, 0],
                  [1, 0, 0, 0, 1, 1]])


def bfs_components(c):
    """Independent union-find count over RF and antenna nodes."""
    n_rf, n_ant = c.shape
    parent = list(range(n_rf + n_ant))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for n in range(n_rf):
        for m in range(n_ant):
            if c[n, m]:
                parent[find(n)] = find(n_rf + m)
    return len({find(x) for x in range(n_rf + n_ant)})


def test_fig_a_pattern():
    conn = ConnectionMatrix(FIG_A, 3)
    chi = common_antennas(FIG_A)
    assert (chi[0, 1], chi[1, 2], chi[0, 2]) == (2, 1, 1)
    assert validate_ldpc(conn).ok
    assert is_bipartite_connected(conn)


def test_fig_b_dependency_links_connect():
    assert not is_bipartite_connected(FIG_B_PHASE1)
    rep = validate_ldpc(ConnectionMatrix(FIG_B_PHASE1, 2))
    assert not rep.ok and rep.linked_pairs == 0
    assert validate_ldpc(ConnectionMatrix(FIG_B, 3)).ok
    assert is_bipartite_connected(FIG_B)


def test_validate_reports_violations():
    rep = validate_ldpc(ConnectionMatrix(np.eye(3, dtype=int), 1))
    assert not rep and rep.unlinked_pairs == [(0, 1), (0, 2), (1, 2)]
    assert not is_bipartite_connected(np.eye(3, dtype=int))
    assert bfs_components(np.eye(3, dtype=int)) == 3
    assert validate_ldpc(ConnectionMatrix.full(2, 4)).ok
    bad = ConnectionMatrix(np.array([[1, 1, 0, 0], [1, 0, 0, 0]]), 2)
    rep = validate_ldpc(bad)
    assert rep.bad_rows == [1] and rep.uncovered_cols == [2, 3]


def test_forced_single_row():
    c = build_ldpc_connection(1, 4, 4, np.random.default_rng(0))
    assert np.array_equal(c.c, np.ones((1, 4)))


def test_full_connection_when_n_conn_equals_n_ant():
    c = build_ldpc_connection(3, 7, 7, np.random.default_rng(1))
    assert np.array_equal(c.c, np.ones((3, 7)))


def test_random_builds_pass_validator_and_union_find():
    rng = np.random.default_rng(2)
    built = 0
    while built < 200:
        n_rf = int(rng.integers(2, 9))
        n_ant = int(rng.integers(max(4, n_rf), 33))
        n_conn = int(rng.integers(-(-n_ant // n_rf), n_ant + 1))
        try:
            c = build_ldpc_connection(n_rf, n_ant, n_conn, rng)
        except InfeasibleConnection:
            continue
        built += 1
        assert validate_ldpc(c).ok
        assert c.c.sum(axis=1).tolist() == [n_conn] * n_rf
        assert bfs_components(c.c) == 1


def test_builder_is_deterministic():
    a = build_ldpc_connection(5, 17, 6, np.random.default_rng(7))
    b = build_ldpc_connection(5, 17, 6, np.random.default_rng(7))
    assert np.array_equal(a.c, b.c)


@pytest.mark.parametrize("args", [(3, 5, 1), (2, 4, 5), (5, 4, 4), (0, 4, 2), (2, 4, 2), (4, 8, 2)])
def test_infeasible_requests_raise(args):
    with pytest.raises(InfeasibleConnection):
        check_ldpc_feasible(*args)
    with pytest.raises(InfeasibleConnection):
        build_ldpc_connection(*args, np.random.default_rng(0))


def test_refusals_match_edge_count_bound():
    # a connected bipartite graph needs n_rf + n_ant - 1 edges
    for n_rf in range(2, 9):
        for n_ant in range(n_rf, 33):
            for n_conn in range(-(-n_ant // n_rf), n_ant + 1):
                try:
                    check_ldpc_feasible(n_rf, n_ant, n_conn)
                except InfeasibleConnection:
                    assert n_rf * n_conn < n_rf + n_ant - 1


def test_text_round_trip_and_errors():
    conn = ConnectionMatrix(FIG_A, 3)
    text = conn.to_text()
    assert text.splitlines()[0] == "11010" and text.endswith("\n")
    back = ConnectionMatrix.from_text(text)
    assert np.array_equal(back.c, FIG_A) and back.n_conn == 3
    with pytest.raises(ValueError, match="ragged"):
        ConnectionMatrix.from_text("101\n11\n")
    with pytest.raises(ValueError):
        ConnectionMatrix.from_text("102\n")
    with pytest.raises(ValueError):
        ConnectionMatrix.from_text("\n")


def test_connection_matrix_validation():
    with pytest.raises(ValueError):
        ConnectionMatrix(np.array([[0, 2]]), 1)
    with pytest.raises(ValueError):
        ConnectionMatrix(np.array([1, 0]), 1)
    c = ConnectionMatrix(FIG_A, 3)
    with pytest.raises(ValueError):
        c.c[0, 0] = 0


def test_partition_examples():
    conn = build_ldpc_connection(32, 128, 8, np.random.default_rng(3))
    part = partition_controllers(conn, 4, 4)
    assert part.n_rf_controllers == 8 and part.n_ant_controllers == 32
    one = partition_controllers(ConnectionMatrix.full(2, 4), 1, 4)
    assert one.n_ant_controllers == 1 and one.ant_groups[0].tolist() == [0, 1, 2, 3]


def test_partition_remainder_and_errors():
    assert [g.tolist() for g in contiguous_groups(7, 3)] == [[0, 1, 2], [3, 4, 5, 6]]
    with pytest.raises(ValueError):
        contiguous_groups(3, 4)
    with pytest.raises(ValueError):
        contiguous_groups(3, 0)


def test_partition_neighbors_symmetric_and_exhaustive():
    rng = np.random.default_rng(4)
    for _ in range(20):
        conn = build_ldpc_connection(6, 20, 5, rng)
        g_rf, g_ant = int(rng.integers(1, 4)), int(rng.integers(1, 6))
        part = partition_controllers(conn, g_rf, g_ant)
        rf_all = np.concatenate(part.rf_groups)
        ant_all = np.concatenate(part.ant_groups)
        assert sorted(rf_all.tolist()) == list(range(6))
        assert sorted(ant_all.tolist()) == list(range(20))
        for k, grp_r in enumerate(part.rf_groups):
            for l, grp_a in enumerate(part.ant_groups):
                linked = bool(conn.c[np.ix_(grp_r, grp_a)].any())
                assert (l in part.rf_neighbors[k]) == linked
                assert (k in part.ant_neighbors[l]) == linked
