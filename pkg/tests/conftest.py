"""Shared fixtures: the four-agent two-component system and graph builders."""

from __future__ import annotations

import numpy as np
import pytest

import latent_consensus as lc

# Four agents in two strongly connected pairs; no spanning in-tree, so the
# latent-consensus methods genuinely differ from ordinary consensus here.
TWO_BLOCK_JSON = '{"n": 4, "arcs": [[1, 2, 1.0], [2, 1, 3.0], [3, 4, 1.0], [4, 3, 4.0]]}'

TWO_BLOCK_JBAR = np.array(
    [
        [0.75, 0.25, 0.0, 0.0],
        [0.75, 0.25, 0.0, 0.0],
        [0.0, 0.0, 0.8, 0.2],
        [0.0, 0.0, 0.8, 0.2],
    ]
)

# Orthogonal projector onto the consensus subspace, published to 4 decimals.
TWO_BLOCK_S = np.array(
    [
        [0.5690, -0.1437, 0.4598, 0.1149],
        [-0.1437, 0.9521, 0.1533, 0.0383],
        [0.4598, 0.1533, 0.5096, -0.1226],
        [0.1149, 0.0383, -0.1226, 0.9693],
    ]
)

TWO_BLOCK_ORTHO_ROW = np.array([0.3908, 0.1303, 0.3831, 0.0958])
TWO_BLOCK_MEAN_ROW = np.array([0.375, 0.125, 0.4, 0.1])


@pytest.fixture
def two_block_graph() -> lc.WeightedDigraph:
    return lc.parse_digraph(TWO_BLOCK_JSON)


@pytest.fixture
def two_block_L(two_block_graph) -> np.ndarray:
    return lc.laplacian(two_block_graph)


def strongly_connected_digraph(n: int, seed: int) -> lc.WeightedDigraph:
    """Directed cycle (guaranteeing strong connectivity) plus random extras."""
    rng = np.random.default_rng(seed)
    arcs = {}
    for i in range(1, n + 1):
        j = i % n + 1
        arcs[(i, j)] = float(2.0 * (1.0 - rng.random()))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i != j and (i, j) not in arcs and rng.random() < 0.3:
                arcs[(i, j)] = float(2.0 * (1.0 - rng.random()))
    return lc.WeightedDigraph(n=n, arcs=tuple((i, j, w) for (i, j), w in sorted(arcs.items())))


def hub_pair(L: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The (A, C) pair behind the hub closed form: A has the agents' links
    plus the agents->hub row, C routes every agent to the hub."""
    n = L.shape[0]
    a = np.zeros((n + 1, n + 1))
    a[:n, :n] = L
    a[n, :n] = -v
    a[n, n] = v.sum()
    c = np.zeros((n + 1, n + 1))
    c[:n, :n] = np.eye(n)
    c[:n, n] = -1.0
    return a, c


def background_pair(L: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The (A, C) pair behind the background closed form."""
    n = L.shape[0]
    return L, np.eye(n) - np.outer(np.ones(n), v)
