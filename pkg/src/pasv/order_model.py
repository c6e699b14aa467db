"""Order distributions over linear extensions.

The priority-aware weight of a linear extension ``pi`` is

    prod_t  lam[pi_t] * |M_t| / sum(lam[k] for k in M_t),   M_t = max(S_t),

where ``S_t`` is the prefix ``{pi_1, ..., pi_t}``. With ``|M_t|`` dropped the
same product is the weighted (ordered-partition) Shapley probability, and with
equal weights every factor is 1. All products are carried in log space.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ._errors import InfeasibleSet, NotLinearExtension, NotMaximalInSet
from ._validation import as_mask, check_permutation, check_weights, members
from .poset import (
    DEFAULT_CAP,
    OrderedPartition,
    Poset,
    _max_mask,
    enumerate_linear_extensions,
    is_feasible,
)


@dataclass
class OrderDistribution:
    """Finite distribution over permutations; ``prob[k]`` belongs to ``support[k]``."""

    support: list[tuple[int, ...]]
    prob: np.ndarray

    def __post_init__(self):
        self.prob = np.asarray(self.prob, dtype=np.float64)
        if len(self.support) != len(self.prob):
            raise ValueError("support and prob must have equal length")
        if np.any(self.prob < 0) or abs(math.fsum(self.prob) - 1.0) > 1e-12:
            raise ValueError("probabilities must be nonnegative and sum to 1")

    @property
    def n(self) -> int:
        return len(self.support[0]) if self.support else 0

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return dict(zip(self.support, self.prob.tolist()))

    def __len__(self):
        return len(self.support)


def _frontier_terms(p: Poset, lam: np.ndarray, order: Sequence[int]):
    """Yield ``(chosen, |M_t|, sum of lam over M_t)`` while scanning the prefix.

    Adding ``x`` to a feasible prefix only evicts frontier members below ``x``.
    """
    pred = p.pred
    placed = 0
    frontier = 0
    size = 0
    total = 0.0
    for x in order:
        if pred[x] & ~placed:
            raise NotLinearExtension(f"{tuple(order)} violates the precedence of {x}")
        evicted = frontier & pred[x]
        if evicted:
            frontier &= ~evicted
            size -= evicted.bit_count()
            # recompute rather than subtract: avoids cancellation under extreme weights
            total = math.fsum(lam[i] for i in members(frontier))
        frontier |= 1 << x
        size += 1
        total += lam[x]
        placed |= 1 << x
        yield x, size, total


def pasv_log_weight(p: Poset, weights, order: Sequence[int]) -> float:
    """Natural log of the unnormalized priority-aware weight of ``order``."""
    lam = check_weights(weights, p.n)
    order = check_permutation(order, p.n)
    return _log_weight(p, lam, order, with_size=True)


def _log_weight(p: Poset, lam: np.ndarray, order, with_size: bool) -> float:
    lam_list = lam.tolist()
    out = 0.0
    for x, size, total in _frontier_terms(p, lam_list, order):
        if size == 1:
            continue
        if with_size:
            out += math.log(lam_list[x] * size / total)
        else:
            out += math.log(lam_list[x] / total)
    return out


def _normalize(support, logw) -> OrderDistribution:
    logw = np.asarray(logw, dtype=np.float64)
    shifted = np.exp(logw - logw.max())
    # fixed-order summation keeps results reproducible
    prob = shifted / math.fsum(shifted)
    return OrderDistribution(list(support), prob)


def exact_pasv_distribution(p: Poset, weights, cap: int = DEFAULT_CAP) -> OrderDistribution:
    lam = check_weights(weights, p.n)
    support = enumerate_linear_extensions(p, cap)
    return _normalize(support, [_log_weight(p, lam, pi, True) for pi in support])


def psv_distribution(p: Poset, cap: int = DEFAULT_CAP) -> OrderDistribution:
    support = enumerate_linear_extensions(p, cap)
    return OrderDistribution(support, np.full(len(support), 1.0 / len(support)))


def wsv_probability(op: OrderedPartition, weights, order: Sequence[int]) -> float:
    """Weighted Shapley probability of ``order`` under an ordered partition."""
    p = op.poset()
    lam = check_weights(weights, p.n)
    order = check_permutation(order, p.n)
    return math.exp(_log_weight(p, lam, order, with_size=False))


def choice_factor(p: Poset, weights, i: int, subset) -> float:
    """Probability ``lam_i / sum(lam over max(S))`` of picking ``i`` last from ``S``."""
    lam = check_weights(weights, p.n)
    s = as_mask(subset, p.n)
    if not is_feasible(p, s):
        raise InfeasibleSet(f"{members(s)} is not downward closed")
    top = _max_mask(p, s)
    if not top >> i & 1:
        raise NotMaximalInSet(f"player {i} is not maximal in {members(s)}")
    return float(lam[i] / math.fsum(lam[members(top)]))
