"""Priority sweeping and extreme-weight reference values."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from ._errors import DimensionMismatch
from ._rng import derive_seed
from ._validation import as_mask, check_weights, members
from .order_model import OrderDistribution, exact_pasv_distribution
from .poset import (
    DEFAULT_CAP,
    Poset,
    build_poset,
    detect_ordered_partition,
    extension_lower_bound,
    iter_linear_extensions,
    limit_poset_maximal,
)
from .sampler import MhConfig, default_mh_config, mh_sample
from .utility import UtilityFn, cached
from .valuation import ValueReport, distribution_value, rov_estimate

DEFAULT_GRID = tuple(2.0**k for k in range(-8, 9))
LIMIT_LADDER = (1e2, 1e4, 1e6)


def count_extensions(p: Poset, cap: int) -> int | None:
    """Number of linear extensions, or None once it exceeds ``cap``."""
    if extension_lower_bound(p) > cap:
        return None
    count = 0
    for _ in iter_linear_extensions(p):
        count += 1
        if count > cap:
            return None
    return count


def point_seed(seed: int, index: int) -> int:
    return derive_seed(seed, f"sweep:{index}")


def estimate_values(p: Poset, weights, u: UtilityFn, method: str = "auto", cap: int = DEFAULT_CAP,
                    mh: MhConfig | None = None) -> tuple[ValueReport, str]:
    """Exact values when affordable (or requested), MH Monte Carlo otherwise."""
    if method not in ("auto", "exact", "mh"):
        raise ValueError(f"unknown method {method!r}")
    if method == "exact" or (method == "auto" and count_extensions(p, cap) is not None):
        return distribution_value(exact_pasv_distribution(p, weights, cap), u), "exact"
    cfg = mh if mh is not None else default_mh_config(p.n)
    samples, _ = mh_sample(p, weights, cfg)
    return rov_estimate(samples, u), "mh"


@dataclass
class SweepSpec:
    """Sweep ``target``'s weight over ``grid``.

    At grid value ``b`` the weights are ``baseline * b ** exponents``; the
    default exponent pattern is 1 on the target and 0 elsewhere, so group
    members are scaled together.
    """

    target: Sequence[int]
    grid: Sequence[float] = DEFAULT_GRID
    baseline: Sequence[float] | None = None
    exponents: Sequence[float] | None = None
    method: str = "auto"
    cap: int = DEFAULT_CAP
    mh: MhConfig | None = None
    seed: int = 0

    def __post_init__(self):
        self.target = sorted({int(i) for i in self.target})
        if not self.target:
            raise ValueError("sweep target must be nonempty")
        grid = [float(b) for b in self.grid]
        if not grid or any(b <= 0 for b in grid) or any(a >= b for a, b in zip(grid, grid[1:])):
            raise ValueError("grid must be positive and strictly increasing")
        self.grid = grid

    def weights_at(self, n: int, b: float) -> np.ndarray:
        base = np.ones(n) if self.baseline is None else check_weights(self.baseline, n)
        if self.exponents is None:
            c = np.zeros(n)
            c[self.target] = 1.0
        else:
            c = np.asarray(self.exponents, dtype=np.float64)
            if c.shape != (n,):
                raise DimensionMismatch(f"exponents need {n} entries")
        # rebuilt from the baseline at every point, never compounded
        return base * np.power(b, c)


@dataclass
class SweepReport:
    target: list[int]
    grid: list[float]
    reports: list[ValueReport]
    methods: list[str]
    references: dict[str, ValueReport] = field(default_factory=dict)

    def values(self) -> np.ndarray:
        """Grid x players matrix of values."""
        return np.vstack([r.values for r in self.reports])


def run_sweep(p: Poset, spec: SweepSpec, u: UtilityFn) -> SweepReport:
    u = cached(u)
    reports, methods = [], []
    for k, b in enumerate(spec.grid):
        w = spec.weights_at(p.n, b)
        mh = spec.mh if spec.mh is not None else default_mh_config(p.n)
        mh = replace(mh, seed=point_seed(spec.seed, k))
        report, method = estimate_values(p, w, u, spec.method, spec.cap, mh)
        reports.append(report)
        methods.append(method)
    return SweepReport(list(spec.target), list(spec.grid), reports, methods)


def limit_poset(p: Poset, target, mode: str) -> tuple[Poset, list[int]]:
    """Modified poset for an extreme-weight target and the players whose weight is reset.

    ``mode='maximal'``: ``target`` is a globally maximal player.
    ``mode='refine'``: ``target`` is ``(layer_index, G)`` on an ordered partition.
    """
    if mode == "maximal":
        i = int(target)
        return limit_poset_maximal(p, i), [i]
    if mode == "refine":
        layer_index, g = target
        op = detect_ordered_partition(p)
        if op is None:
            raise ValueError("refine mode needs an ordered-partition poset")
        g = members(as_mask(g, p.n))
        return op.refine(int(layer_index), g).poset(), g
    raise ValueError(f"unknown limit mode {mode!r}")


def limit_reference(p: Poset, weights, target, u: UtilityFn, mode: str = "maximal",
                    cap: int = DEFAULT_CAP, mh: MhConfig | None = None) -> ValueReport:
    """Values under the limiting poset, target weights set to 1."""
    q, reset = limit_poset(p, target, mode)
    w = check_weights(weights, p.n).copy()
    w[reset] = 1.0
    report, _ = estimate_values(q, w, u, "auto", cap, mh)
    return report


def tv_distance(d1: OrderDistribution, d2: OrderDistribution) -> float:
    if d1.n != d2.n:
        raise DimensionMismatch(f"distributions over n={d1.n} and n={d2.n}")
    a, b = d1.as_dict(), d2.as_dict()
    return 0.5 * math.fsum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in a.keys() | b.keys())


def limit_tv_ladder(p: Poset, weights, target, mode: str = "maximal", ladder=LIMIT_LADDER,
                    cap: int = DEFAULT_CAP) -> list[float]:
    """TV between PASV at extreme target weights and PASV on the limiting poset."""
    q, reset = limit_poset(p, target, mode)
    base = check_weights(weights, p.n)
    ref_w = base.copy()
    ref_w[reset] = 1.0
    ref = exact_pasv_distribution(q, ref_w, cap)
    out = []
    for big in ladder:
        w = base.copy()
        w[reset] = big
        out.append(tv_distance(exact_pasv_distribution(p, w, cap), ref))
    return out


def limit_mismatch_demo(p: Poset, weights, target: int, candidate_edges, big: float = 1e8,
                        cap: int = DEFAULT_CAP) -> float:
    """TV between PASV with ``target``'s weight at ``big`` and PASV after adding edges.

    A clearly positive value shows that the extreme weight is not equivalent
    to the candidate edges.
    """
    q = build_poset(p.n, p.strict_pairs() + [tuple(e) for e in candidate_edges])
    base = check_weights(weights, p.n)
    w = base.copy()
    w[target] = big
    ref_w = base.copy()
    ref_w[target] = 1.0
    return tv_distance(exact_pasv_distribution(p, w, cap), exact_pasv_distribution(q, ref_w, cap))
