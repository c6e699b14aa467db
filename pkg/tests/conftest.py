import random

import pytest

from pasv import OrderedPartition, build_poset

# N-shaped DAG with players labelled 1..4 stored as indices 0..3:
# 1 -> 2, 3 -> 2, 3 -> 4.
N_EDGES = [(0, 1), (2, 1), (2, 3)]


@pytest.fixture
def n_poset():
    return build_poset(4, N_EDGES)


def random_dag(rng: random.Random, n: int, edge_prob: float = 0.4):
    """Random DAG: edges i -> j (i < j) w.p. edge_prob, then relabelled."""
    relabel = list(range(n))
    rng.shuffle(relabel)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < edge_prob:
                edges.append((relabel[i], relabel[j]))
    return edges


def random_weights(rng: random.Random, n: int, lo: float = -8, hi: float = 8):
    return [2.0 ** rng.uniform(lo, hi) for _ in range(n)]


def random_partition(rng: random.Random, n: int):
    players = list(range(n))
    rng.shuffle(players)
    cuts = sorted(rng.sample(range(1, n), rng.randint(0, n - 1))) if n > 1 else []
    layers, prev = [], 0
    for c in cuts + [n]:
        layers.append(frozenset(players[prev:c]))
        prev = c
    return OrderedPartition(tuple(layers))
