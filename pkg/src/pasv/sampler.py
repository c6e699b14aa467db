"""Samplers for the priority-aware order distribution.

``mh_sample`` is the adjacent-swap Metropolis-Hastings chain over linear
extensions. It keeps, for every prefix length ``t``, the frontier ``max(S_t)``
as a bitmask together with its weight sum, so a proposed swap at position
``k`` costs O(|frontier|) and an accepted swap only rewrites prefix ``k + 1``.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ._errors import ComparablePair, InvalidInit, NotLinearExtension
from ._rng import make_rng
from ._validation import check_permutation, check_weights, members
from .order_model import OrderDistribution
from .poset import OrderedPartition, Poset, _max_mask, initial_linear_extension, is_linear_extension

_BLOCK = 65536


@dataclass
class MhConfig:
    """Chain settings: ``n_mc`` recorded samples, ``burn_in`` steps, stride ``thinning``.

    ``index_probs`` optionally gives the proposal distribution over swap
    positions ``0..n-2`` (uniform when None).
    """

    n_mc: int = 3000
    burn_in: int = 10_000
    thinning: int = 1000
    seed: int = 0
    index_probs: Sequence[float] | None = None

    def __post_init__(self):
        if self.n_mc < 1:
            raise ValueError("n_mc must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.index_probs is not None:
            f = np.asarray(self.index_probs, dtype=np.float64)
            if f.ndim != 1 or np.any(f <= 0) or abs(f.sum() - 1.0) > 1e-9:
                raise ValueError("index_probs must be positive and sum to 1")

    @property
    def total_steps(self) -> int:
        return self.burn_in + self.thinning * (self.n_mc - 1) + 1


def default_mh_config(n: int, seed: int = 0) -> MhConfig:
    """Small problems (n <= 32): 3000 samples, burn-in 1e4, thinning 1e3.
    Larger: 1e4 samples, burn-in 1e5, thinning 1e4."""
    if n <= 32:
        return MhConfig(n_mc=3000, burn_in=10_000, thinning=1000, seed=seed)
    return MhConfig(n_mc=10_000, burn_in=100_000, thinning=10_000, seed=seed)


@dataclass
class ChainStats:
    steps_total: int = 0
    proposals: int = 0
    accepts: int = 0
    acceptance_rate: float = field(init=False, default=0.0)

    def __post_init__(self):
        self.acceptance_rate = self.accepts / max(self.proposals, 1)


def _mean_weight(lam, mask: int) -> float:
    idx = members(mask)
    return math.fsum(lam[i] for i in idx) / len(idx)


def local_ratio(p: Poset, weights, order: Sequence[int], k: int) -> float:
    """Weight ratio p(order') / p(order) for swapping positions ``k`` and ``k+1``.

    ``k`` is 0-based. Only the prefix sets of length ``k`` and ``k+1`` enter.
    """
    lam = check_weights(weights, p.n).tolist()
    order = check_permutation(order, p.n)
    if not 0 <= k < p.n - 1:
        raise IndexError(f"swap position {k} outside [0, {p.n - 1})")
    if not is_linear_extension(p, order):
        raise NotLinearExtension(f"{order} is not a linear extension")
    a, b = order[k], order[k + 1]
    if p.precedes(a, b) or p.precedes(b, a):
        raise ComparablePair(f"players {a} and {b} are comparable")
    before = 0
    for x in order[:k]:
        before |= 1 << x
    m_cur = _max_mask(p, before | 1 << a)
    m_new = _max_mask(p, before | 1 << b)
    return _mean_weight(lam, m_cur) / _mean_weight(lam, m_new)


def mh_sample(
    p: Poset,
    weights,
    cfg: MhConfig,
    init: Sequence[int] | None = None,
) -> tuple[list[tuple[int, ...]], ChainStats]:
    """Run the adjacent-swap chain and return the recorded permutations.

    Samples are recorded at steps ``B+1, B+1+tau, ...`` (1-based), ``n_mc`` in
    total. A draw hitting a comparable pair counts as a step, not a proposal.
    """
    n = p.n
    lam = check_weights(weights, n).tolist()
    if init is None:
        order = list(initial_linear_extension(p))
    else:
        try:
            order = list(check_permutation(init, n))
        except ValueError as exc:
            raise InvalidInit(str(exc)) from exc
        if not is_linear_extension(p, order):
            raise InvalidInit(f"{tuple(order)} is not a linear extension")

    total_steps = cfg.total_steps
    if n == 1:
        return [tuple(order)] * cfg.n_mc, ChainStats(steps_total=total_steps)

    pred, succ = p.pred, p.succ
    # frontier[t], fsum[t], fcnt[t]: max(S_t) for the prefix of length t
    frontier = [0] * (n + 1)
    fsum = [0.0] * (n + 1)
    fcnt = [0] * (n + 1)
    cur = 0
    placed = 0
    for t, x in enumerate(order, start=1):
        cur = (cur & ~pred[x]) | 1 << x
        placed |= 1 << x
        frontier[t] = cur
        fsum[t] = math.fsum(lam[i] for i in members(cur))
        fcnt[t] = cur.bit_count()

    rng = make_rng(cfg.seed)
    probs = None if cfg.index_probs is None else np.asarray(cfg.index_probs, dtype=np.float64)
    if probs is not None and probs.shape[0] != n - 1:
        raise ValueError(f"index_probs needs {n - 1} entries, got {probs.shape[0]}")

    samples = []
    proposals = accepts = 0
    burn, tau = cfg.burn_in, cfg.thinning
    t = 0
    while t < total_steps:
        # fixed block size keeps the draw stream independent of the run length
        size = _BLOCK
        if probs is None:
            ks = rng.integers(0, n - 1, size=size).tolist()
        else:
            ks = rng.choice(n - 1, size=size, p=probs).tolist()
        us = rng.random(size).tolist()
        for k, u in zip(ks, us):
            if t == total_steps:
                break
            t += 1
            a = order[k]
            b = order[k + 1]
            if not succ[a] >> b & 1:
                proposals += 1
                # frontier after placing b instead of a on top of prefix k
                base = frontier[k]
                evicted = base & pred[b]
                if evicted:
                    rest = base & ~evicted
                    new_sum = math.fsum(lam[i] for i in members(rest)) + lam[b]
                    new_cnt = rest.bit_count() + 1
                else:
                    new_sum = fsum[k] + lam[b]
                    new_cnt = fcnt[k] + 1
                ratio = (fsum[k + 1] * new_cnt) / (fcnt[k + 1] * new_sum)
                if ratio >= 1.0 or u < ratio:
                    accepts += 1
                    order[k] = b
                    order[k + 1] = a
                    frontier[k + 1] = (base & ~pred[b]) | 1 << b
                    fsum[k + 1] = new_sum
                    fcnt[k + 1] = new_cnt
            if t > burn and (t - burn - 1) % tau == 0:
                samples.append(tuple(order))
    return samples, ChainStats(steps_total=total_steps, proposals=proposals, accepts=accepts)


def exact_sample(d: OrderDistribution, n_draws: int, seed: int = 0) -> list[tuple[int, ...]]:
    """I.i.d. draws by inverse CDF."""
    rng = make_rng(seed)
    cdf = np.cumsum(d.prob)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(n_draws), side="right")
    idx = np.minimum(idx, len(d.support) - 1)
    return [d.support[i] for i in idx.tolist()]


def backward_sequential_sample(
    op: OrderedPartition, weights, n_draws: int, seed: int = 0
) -> list[tuple[int, ...]]:
    """Exact draws for an ordered partition, filling the last slot first.

    Each slot picks among the current maximal players with probability
    proportional to their weights.
    """
    p = op.poset()
    n = p.n
    lam = check_weights(weights, n)
    rng = make_rng(seed)
    out = []
    for _ in range(n_draws):
        remaining = p.full_mask
        order = [0] * n
        for slot in range(n - 1, -1, -1):
            cand = members(_max_mask(p, remaining))
            if len(cand) == 1:
                pick = cand[0]
            else:
                w = lam[cand]
                pick = cand[int(rng.choice(len(cand), p=w / w.sum()))]
            order[slot] = pick
            remaining &= ~(1 << pick)
        out.append(tuple(order))
    return out
