"""Random-order values from permutation samples or exact order distributions."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from ._errors import EmptySamples, IncompleteGrouping
from .order_model import OrderDistribution, exact_pasv_distribution
from .poset import DEFAULT_CAP, Poset
from .utility import UtilityFn, cached


@dataclass
class ValueReport:
    values: np.ndarray
    std_errors: np.ndarray
    n_samples: int
    total_utility: float  # U(all) - U(empty)
    value_sum: float
    method: str = "mc"
    # per-sample marginal gains (n_samples x n); None for exact values
    marginals: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def efficiency_gap(self) -> float:
        return abs(self.value_sum - self.total_utility)


def _marginal_row(order: Sequence[int], u: UtilityFn, empty_value: float, n: int) -> np.ndarray:
    row = np.empty(n)
    mask = 0
    prev = empty_value
    for x in order:
        mask |= 1 << x
        val = u._evaluate(mask)
        row[x] = val - prev
        prev = val
    return row


def _check_samples(samples) -> int:
    if not samples:
        raise EmptySamples("at least one permutation is required")
    n = len(samples[0])
    full = set(range(n))
    for s in samples:
        if len(s) != n or set(s) != full:
            raise ValueError(f"sample {tuple(s)} is not a permutation of 0..{n - 1}")
    return n


def rov_estimate(samples: Sequence[Sequence[int]], u: UtilityFn) -> ValueReport:
    """Monte Carlo average of each player's marginal gain at its sampled position."""
    n = _check_samples(samples)
    u = cached(u)
    empty = u._evaluate(0)
    full = u._evaluate((1 << n) - 1)
    marg = np.vstack([_marginal_row(s, u, empty, n) for s in samples])
    values = marg.mean(axis=0)
    m = len(samples)
    se = marg.std(axis=0, ddof=1) / math.sqrt(m) if m > 1 else np.zeros(n)
    return ValueReport(values, se, m, full - empty, math.fsum(values), "mc", marg)


def distribution_value(d: OrderDistribution, u: UtilityFn) -> ValueReport:
    """Exact expectation of marginal gains under a finite order distribution."""
    n = _check_samples(d.support)
    u = cached(u)
    empty = u._evaluate(0)
    full = u._evaluate((1 << n) - 1)
    marg = np.vstack([_marginal_row(s, u, empty, n) for s in d.support])
    values = np.array([math.fsum(col) for col in (marg * d.prob[:, None]).T])
    return ValueReport(values, np.zeros(n), len(d.support), full - empty, math.fsum(values), "exact")


def exact_value(p: Poset, weights, u: UtilityFn, cap: int = DEFAULT_CAP) -> ValueReport:
    return distribution_value(exact_pasv_distribution(p, weights, cap), u)


@dataclass
class PositionCurve:
    """Mean marginal gain per (group, entry position), position = |predecessors|."""

    means: dict[object, np.ndarray]
    counts: dict[object, np.ndarray]

    def rows(self):
        for g in self.means:
            for s, (mu, c) in enumerate(zip(self.means[g], self.counts[g])):
                yield g, s, (float(mu) if c else float("nan")), int(c)


def _check_groups(groups: Mapping[int, object] | None, n: int) -> dict[int, object]:
    if groups is None:
        return {i: i for i in range(n)}
    missing = [i for i in range(n) if i not in groups]
    if missing:
        raise IncompleteGrouping(f"players {missing} have no group")
    return dict(groups)


def marginal_by_position(samples, u: UtilityFn, groups: Mapping[int, object] | None = None) -> PositionCurve:
    n = _check_samples(samples)
    groups = _check_groups(groups, n)
    u = cached(u)
    empty = u._evaluate(0)
    labels = list(dict.fromkeys(groups[i] for i in range(n)))
    sums = {g: np.zeros(n) for g in labels}
    counts = {g: np.zeros(n, dtype=np.int64) for g in labels}
    for s in samples:
        row = _marginal_row(s, u, empty, n)
        for pos, x in enumerate(s):
            g = groups[x]
            sums[g][pos] += row[x]
            counts[g][pos] += 1
    means = {g: np.divide(sums[g], counts[g], out=np.zeros(n), where=counts[g] > 0) for g in labels}
    return PositionCurve(means, counts)


def group_values(report: ValueReport, groups: Mapping[int, object]) -> dict[object, tuple[float, float]]:
    """Summed values per group; errors come from per-sample group sums."""
    groups = _check_groups(groups, report.n)
    out = {}
    for g in dict.fromkeys(groups[i] for i in range(report.n)):
        idx = [i for i in range(report.n) if groups[i] == g]
        value = math.fsum(report.values[idx])
        if report.marginals is not None and report.n_samples > 1:
            per_sample = report.marginals[:, idx].sum(axis=1)
            se = float(per_sample.std(ddof=1) / math.sqrt(report.n_samples))
        else:
            se = 0.0
        out[g] = (value, se)
    return out
