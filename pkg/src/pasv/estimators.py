"""Scikit-learn style front end.

>>> from pasv import PriorityShapley, build_poset, elementary_game
>>> est = PriorityShapley(poset=build_poset(4, [(0, 1), (2, 1), (2, 3)]))
>>> est.fit(elementary_game([0, 2])).values_.round(3).tolist()
[0.6, 0.0, 0.4, 0.0]
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_weights
from .poset import DEFAULT_CAP, Poset, antichain, detect_ordered_partition
from .sampler import MhConfig, default_mh_config, mh_sample
from .sweep import SweepSpec, count_extensions, limit_reference, run_sweep
from .utility import UtilityFn, cached
from .order_model import exact_pasv_distribution
from .valuation import distribution_value, group_values, rov_estimate


def _resolve_poset(poset: Poset | None, utility: UtilityFn) -> Poset:
    if poset is not None:
        return poset
    n = getattr(utility, "n_players", None)
    if n is None:
        raise ValueError("poset=None needs a utility with n_players set")
    return antichain(n)


def _mh_config(n, n_mc, burn_in, thinning, seed, index_probs) -> MhConfig:
    cfg = default_mh_config(n, seed)
    return MhConfig(
        n_mc=cfg.n_mc if n_mc is None else n_mc,
        burn_in=cfg.burn_in if burn_in is None else burn_in,
        thinning=cfg.thinning if thinning is None else thinning,
        seed=seed,
        index_probs=index_probs,
    )


class PriorityShapley(BaseEstimator):
    """Priority-aware Shapley values of a utility.

    Parameters
    ----------
    poset : Poset or None
        Hard precedence. None means no constraints (classical Shapley).
    weights : array-like of shape (n,) or None
        Positive soft priorities; larger weights push a player later in the
        order. None means equal weights (precedence Shapley).
    method : {"auto", "exact", "mh"}
        "auto" enumerates linear extensions when there are at most ``cap``.
    n_mc, burn_in, thinning, index_probs
        Metropolis-Hastings settings; None picks size-dependent defaults.
    random_state : int
        Seed of the chain.

    Attributes
    ----------
    values_, std_errors_ : ndarray of shape (n,)
    report_ : ValueReport
    method_ : str
    samples_ : list of tuples or None
    chain_stats_ : ChainStats or None
    """

    def __init__(self, poset=None, weights=None, method="auto", cap=DEFAULT_CAP, n_mc=None,
                 burn_in=None, thinning=None, index_probs=None, random_state=0):
        self.poset = poset
        self.weights = weights
        self.method = method
        self.cap = cap
        self.n_mc = n_mc
        self.burn_in = burn_in
        self.thinning = thinning
        self.index_probs = index_probs
        self.random_state = random_state

    def fit(self, utility: UtilityFn, y=None):
        if self.method not in ("auto", "exact", "mh"):
            raise ValueError(f"unknown method {self.method!r}")
        p = _resolve_poset(self.poset, utility)
        w = np.ones(p.n) if self.weights is None else check_weights(self.weights, p.n)
        u = cached(utility)
        self.samples_ = None
        self.chain_stats_ = None
        self.distribution_ = None
        exact = self.method == "exact" or (
            self.method == "auto" and count_extensions(p, self.cap) is not None
        )
        if exact:
            self.distribution_ = exact_pasv_distribution(p, w, self.cap)
            self.report_ = distribution_value(self.distribution_, u)
            self.method_ = "exact"
        else:
            cfg = _mh_config(p.n, self.n_mc, self.burn_in, self.thinning, self.random_state,
                             self.index_probs)
            self.samples_, self.chain_stats_ = mh_sample(p, w, cfg)
            self.report_ = rov_estimate(self.samples_, u)
            self.method_ = "mh"
        self.n_players_ = p.n
        self.values_ = self.report_.values
        self.std_errors_ = self.report_.std_errors
        return self

    def group_values(self, groups):
        check_is_fitted(self, "report_")
        return group_values(self.report_, groups)


class PrioritySweep(BaseEstimator):
    """Values as one player's (or group's) weight runs over a grid.

    ``limit`` optionally adds the extreme-weight reference: "maximal" for a
    single globally maximal target, "refine" for a target that is a subset of
    one layer of an ordered partition.

    Attributes
    ----------
    grid_ : list of float
    values_ : ndarray of shape (len(grid), n)
    std_errors_ : ndarray of shape (len(grid), n)
    report_ : SweepReport
    reference_ : ValueReport or None
    """

    def __init__(self, poset=None, target=(0,), weights=None, grid=None, exponents=None,
                 method="auto", cap=DEFAULT_CAP, n_mc=None, burn_in=None, thinning=None,
                 limit=None, random_state=0):
        self.poset = poset
        self.target = target
        self.weights = weights
        self.grid = grid
        self.exponents = exponents
        self.method = method
        self.cap = cap
        self.n_mc = n_mc
        self.burn_in = burn_in
        self.thinning = thinning
        self.limit = limit
        self.random_state = random_state

    def fit(self, utility: UtilityFn, y=None):
        p = _resolve_poset(self.poset, utility)
        target = [int(self.target)] if np.isscalar(self.target) else list(self.target)
        spec_kwargs = {} if self.grid is None else {"grid": self.grid}
        spec = SweepSpec(
            target=target,
            baseline=self.weights,
            exponents=self.exponents,
            method=self.method,
            cap=self.cap,
            mh=_mh_config(p.n, self.n_mc, self.burn_in, self.thinning, self.random_state, None),
            seed=self.random_state,
            **spec_kwargs,
        )
        u = cached(utility)
        self.report_ = run_sweep(p, spec, u)
        self.reference_ = None
        if self.limit is not None:
            w = np.ones(p.n) if self.weights is None else self.weights
            if self.limit == "maximal":
                if len(spec.target) != 1:
                    raise ValueError("maximal limit needs a single target player")
                ref_target = spec.target[0]
            elif self.limit == "refine":
                op = detect_ordered_partition(p)
                if op is None:
                    raise ValueError("refine limit needs an ordered-partition poset")
                ref_target = (op.layer_of(spec.target[0]), spec.target)
            else:
                raise ValueError(f"unknown limit mode {self.limit!r}")
            self.reference_ = limit_reference(p, w, ref_target, u, self.limit, self.cap, spec.mh)
            self.report_.references["limit"] = self.reference_
        self.grid_ = list(spec.grid)
        self.values_ = self.report_.values()
        self.std_errors_ = np.vstack([r.std_errors for r in self.report_.reports])
        return self
