"""LDPC-style RF-chain/antenna connection patterns and controller groups."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from math import ceil

import numpy as np


class InfeasibleConnection(ValueError):
    """Requested connection pattern cannot satisfy the LDPC properties."""


@dataclass(frozen=True)
class ConnectionMatrix:
    """Binary n_rf x n_ant link pattern; ``c[n, m] == 1`` links chain n to antenna m."""

    c: np.ndarray
    n_conn: int

    def __post_init__(self):
        c = np.asarray(self.c)
        if c.ndim != 2:
            raise ValueError(f"connection matrix must be 2-D, got shape {c.shape}")
        if not np.all((c == 0) | (c == 1)):
            raise ValueError("connection matrix entries must be 0 or 1")
        c = c.astype(np.int8)
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @property
    def n_rf(self) -> int:
        return self.c.shape[0]

    @property
    def n_ant(self) -> int:
        return self.c.shape[1]

    @classmethod
    def from_array(cls, c) -> "ConnectionMatrix":
        c = np.asarray(c)
        sums = c.sum(axis=1)
        return cls(c, int(sums.max()) if sums.size else 0)

    @classmethod
    def full(cls, n_rf: int, n_ant: int) -> "ConnectionMatrix":
        return cls(np.ones((n_rf, n_ant), dtype=np.int8), n_ant)

    def to_text(self) -> str:
        return "\n".join("".join(str(int(v)) for v in row) for row in self.c) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ConnectionMatrix":
        rows = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not rows:
            raise ValueError("empty connection grid")
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise ValueError(f"ragged connection grid, row widths {sorted(widths)}")
        if any(ch not in "01" for r in rows for ch in r):
            raise ValueError("connection grid may only contain 0 and 1")
        return cls.from_array(np.array([[int(ch) for ch in r] for r in rows]))


@dataclass
class LdpcReport:
    ok: bool
    bad_rows: list[int] = field(default_factory=list)
    uncovered_cols: list[int] = field(default_factory=list)
    linked_pairs: int = 0
    required_pairs: int = 0
    unlinked_pairs: list[tuple[int, int]] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def common_antennas(c: np.ndarray) -> np.ndarray:
    """chi[n, n'] = number of antennas shared by chains n and n'."""
    c = np.asarray(c, dtype=np.int64)
    return c @ c.T


def validate_ldpc(conn: ConnectionMatrix) -> LdpcReport:
    """Check the row-sum, column-cover and pairing properties.

    Rows must each hold exactly ``n_conn`` links, every antenna must be linked
    at least once, and at least n_rf - 1 chain pairs must share an antenna.
    """
    c = conn.c
    n_rf = c.shape[0]
    bad_rows = [int(n) for n in np.flatnonzero(c.sum(axis=1) != conn.n_conn)]
    uncovered = [int(m) for m in np.flatnonzero(c.sum(axis=0) < 1)]
    chi = common_antennas(c)
    pairs = [(i, j) for i in range(n_rf) for j in range(i + 1, n_rf)]
    unlinked = [(i, j) for i, j in pairs if chi[i, j] < 1]
    linked = len(pairs) - len(unlinked)
    ok = not bad_rows and not uncovered and linked >= n_rf - 1
    return LdpcReport(ok, bad_rows, uncovered, linked, n_rf - 1,
                      unlinked if linked < n_rf - 1 else [])


def is_bipartite_connected(conn: ConnectionMatrix | np.ndarray) -> bool:
    """True iff RF and antenna nodes form a single connected component (BFS)."""
    c = conn.c if isinstance(conn, ConnectionMatrix) else np.asarray(conn)
    n_rf, n_ant = c.shape
    if n_rf + n_ant == 0:
        return True
    rf_adj = [np.flatnonzero(c[n]) for n in range(n_rf)]
    ant_adj = [np.flatnonzero(c[:, m]) for m in range(n_ant)]
    # node ids: RF chains 0..n_rf-1, antennas n_rf..n_rf+n_ant-1
    seen = np.zeros(n_rf + n_ant, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        u = queue.popleft()
        nbrs = rf_adj[u] + n_rf if u < n_rf else ant_adj[u - n_rf]
        for v in nbrs:
            if not seen[v]:
                seen[v] = True
                queue.append(int(v))
    return bool(seen.all())


def _phase_one_sizes(n_rf: int, n_ant: int) -> list[int]:
    base = ceil(n_ant / n_rf)
    rem = n_ant % n_rf
    if rem == 0:
        return [base] * n_rf
    # first `rem` chains take the ceiling, the rest one fewer, so every
    # antenna is covered exactly once
    return [base] * rem + [base - 1] * (n_rf - rem)


def check_ldpc_feasible(n_rf: int, n_ant: int, n_conn: int) -> None:
    if n_rf < 1 or n_ant < 1:
        raise InfeasibleConnection("n_rf and n_ant must be positive")
    if n_rf > n_ant:
        raise InfeasibleConnection(f"need n_rf <= n_ant, got {n_rf} > {n_ant}")
    lo = ceil(n_ant / n_rf)
    if not lo <= n_conn <= n_ant:
        raise InfeasibleConnection(f"n_conn must lie in [{lo}, {n_ant}], got {n_conn}")
    full_rows = sum(1 for s in _phase_one_sizes(n_rf, n_ant) if s >= n_conn)
    if n_rf > 1 and full_rows > 1:
        # a connected bipartite graph on n_rf + n_ant nodes needs
        # n_rf + n_ant - 1 edges; n_rf * n_conn falls short here
        raise InfeasibleConnection(
            f"n_conn={n_conn} leaves {n_rf * n_conn} links, fewer than the "
            f"{n_rf + n_ant - 1} needed to connect {n_rf} chains and {n_ant} antennas")


def build_ldpc_connection(n_rf: int, n_ant: int, n_conn: int,
                          rng: np.random.Generator) -> ConnectionMatrix:
    """Random LDPC-style connection pattern.

    Phase 1 hands each chain a disjoint random block of antennas covering the
    whole array.  Phase 2 walks the chains in random order and links each one
    to an antenna owned by the next, so consecutive chains share a node.
    Remaining links are then placed uniformly per row until every row holds
    ``n_conn`` links.
    """
    check_ldpc_feasible(n_rf, n_ant, n_conn)
    c = np.zeros((n_rf, n_ant), dtype=np.int8)

    pool = rng.permutation(n_ant)
    start = 0
    for n, size in enumerate(_phase_one_sizes(n_rf, n_ant)):
        c[n, pool[start:start + size]] = 1
        start += size

    if n_rf > 1:
        order = list(rng.permutation(n_rf))
        # a chain that is already at n_conn cannot accept the dependency
        # link, so it must close the walk (at most one such chain exists)
        full = [n for n in order if c[n].sum() >= n_conn]
        order = [n for n in order if n not in full] + full
        for n, n_next in zip(order[:-1], order[1:]):
            choices = np.flatnonzero((c[n_next] == 1) & (c[n] == 0))
            c[n, rng.choice(choices)] = 1

    for n in range(n_rf):
        need = n_conn - int(c[n].sum())
        if need > 0:
            absent = np.flatnonzero(c[n] == 0)
            c[n, rng.choice(absent, size=need, replace=False)] = 1
    return ConnectionMatrix(c, n_conn)


@dataclass(frozen=True)
class ControllerPartition:
    """Disjoint RF and antenna controller groups with their bipartite links.

    ``rf_neighbors[k]`` lists the antenna controllers reachable from RF
    controller k through at least one link, and ``ant_neighbors[l]`` the
    reverse.
    """

    rf_groups: tuple[np.ndarray, ...]
    ant_groups: tuple[np.ndarray, ...]
    rf_neighbors: tuple[tuple[int, ...], ...]
    ant_neighbors: tuple[tuple[int, ...], ...]

    @property
    def n_rf_controllers(self) -> int:
        return len(self.rf_groups)

    @property
    def n_ant_controllers(self) -> int:
        return len(self.ant_groups)


def contiguous_groups(total: int, size: int) -> list[np.ndarray]:
    if size < 1:
        raise ValueError(f"group size must be >= 1, got {size}")
    if size > total:
        raise ValueError(f"group size {size} exceeds total {total}")
    count = total // size
    bounds = [k * size for k in range(count)] + [total]
    return [np.arange(bounds[k], bounds[k + 1]) for k in range(count)]


def partition_controllers(conn: ConnectionMatrix, n_rf_per_group: int,
                          n_ant_per_group: int) -> ControllerPartition:
    """Contiguous controller blocks; a remainder is folded into the last block."""
    rf_groups = contiguous_groups(conn.n_rf, n_rf_per_group)
    ant_groups = contiguous_groups(conn.n_ant, n_ant_per_group)
    link = np.array([[conn.c[np.ix_(r, a)].any() for a in ant_groups] for r in rf_groups])
    rf_nb = tuple(tuple(int(l) for l in np.flatnonzero(link[k])) for k in range(len(rf_groups)))
    ant_nb = tuple(tuple(int(k) for k in np.flatnonzero(link[:, l])) for l in range(len(ant_groups)))
    return ControllerPartition(tuple(rf_groups), tuple(ant_groups), rf_nb, ant_nb)
