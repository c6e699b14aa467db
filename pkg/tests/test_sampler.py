import math
import random
from collections import Counter

import pytest
from scipy import stats

from pasv import (
    ComparablePair,
    InvalidInit,
    MhConfig,
    NotLinearExtension,
    OrderedPartition,
    antichain,
    backward_sequential_sample,
    build_poset,
    chain,
    enumerate_linear_extensions,
    exact_pasv_distribution,
    exact_sample,
    incomparable,
    is_linear_extension,
    local_ratio,
    mh_sample,
    pasv_log_weight,
    psv_distribution,
)
from pasv.sampler import default_mh_config

from conftest import random_dag, random_weights

LAM = [1, 1, 1, 2]


def freq(samples):
    c = Counter(samples)
    return {k: v / len(samples) for k, v in c.items()}


def tv(emp, exact):
    keys = emp.keys() | exact.keys()
    return 0.5 * sum(abs(emp.get(k, 0.0) - exact.get(k, 0.0)) for k in keys)


# --- local ratio -----------------------------------------------------------

def test_local_ratio_examples(n_poset):
    # 0-based swap position 2 swaps the third and fourth entries
    assert local_ratio(n_poset, LAM, (0, 2, 1, 3), 2) == pytest.approx(2 / 3, rel=1e-14)
    assert local_ratio(n_poset, LAM, (0, 2, 1, 3), 0) == 1.0
    assert local_ratio(n_poset, [5] * 4, (2, 3, 0, 1), 1) == 1.0


def test_local_ratio_errors(n_poset):
    with pytest.raises(ComparablePair):
        local_ratio(n_poset, LAM, (0, 2, 1, 3), 1)
    with pytest.raises(NotLinearExtension):
        local_ratio(n_poset, LAM, (1, 0, 2, 3), 2)


@pytest.mark.parametrize("seed", range(15))
def test_local_ratio_matches_global_and_detailed_balance(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 7)
    p = build_poset(n, random_dag(rng, n))
    lam = random_weights(rng, n)
    for e in enumerate_linear_extensions(p):
        for k in range(n - 1):
            if not incomparable(p, e[k], e[k + 1]):
                continue
            e2 = list(e)
            e2[k], e2[k + 1] = e2[k + 1], e2[k]
            r = local_ratio(p, lam, e, k)
            glob = math.exp(pasv_log_weight(p, lam, e2) - pasv_log_weight(p, lam, e))
            assert r == pytest.approx(glob, rel=1e-10)
            assert r * local_ratio(p, lam, e2, k) == pytest.approx(1.0, abs=1e-10)


# --- MH chain --------------------------------------------------------------

def test_mh_even_thinning_parity_lock():
    samples, _ = mh_sample(antichain(4), [1] * 4, MhConfig(n_mc=2000, burn_in=10, thinning=10, seed=0))
    assert len(set(samples)) == 12


def test_mh_chain_poset_trivial():
    samples, st = mh_sample(chain(4), [1, 2, 3, 4], MhConfig(n_mc=50, burn_in=10, thinning=3))
    assert samples == [(0, 1, 2, 3)] * 50
    assert st.proposals == 0 and st.accepts == 0 and st.acceptance_rate == 0.0
    assert st.steps_total == 10 + 3 * 49 + 1


def test_mh_records_requested_count_and_valid(n_poset):
    cfg = MhConfig(n_mc=37, burn_in=5, thinning=4, seed=3)
    samples, st = mh_sample(n_poset, LAM, cfg)
    assert len(samples) == 37
    assert all(is_linear_extension(n_poset, s) for s in samples)
    assert st.accepts <= st.proposals <= st.steps_total


def test_mh_recording_schedule(n_poset):
    # thinning 1 and no burn-in records every step: the chain with n_mc = T
    # is a prefix-extension of the chain with n_mc = T' > T.
    short, _ = mh_sample(n_poset, LAM, MhConfig(n_mc=100, burn_in=0, thinning=1, seed=9))
    long, _ = mh_sample(n_poset, LAM, MhConfig(n_mc=300, burn_in=0, thinning=1, seed=9))
    assert long[:100] == short
    # burn-in B, thinning tau: sample j is step B + 1 + j*tau of the raw chain
    thin, _ = mh_sample(n_poset, LAM, MhConfig(n_mc=20, burn_in=7, thinning=5, seed=9))
    raw, _ = mh_sample(n_poset, LAM, MhConfig(n_mc=7 + 5 * 19 + 1, burn_in=0, thinning=1, seed=9))
    assert thin == [raw[7 + 5 * j] for j in range(20)]


def test_mh_reproducible(n_poset):
    cfg = MhConfig(n_mc=500, burn_in=20, thinning=2, seed=42)
    assert mh_sample(n_poset, LAM, cfg) == mh_sample(n_poset, LAM, cfg)
    other, _ = mh_sample(n_poset, LAM, MhConfig(n_mc=500, burn_in=20, thinning=2, seed=43))
    assert other != mh_sample(n_poset, LAM, cfg)[0]


def test_mh_invalid_init(n_poset):
    with pytest.raises(InvalidInit):
        mh_sample(n_poset, LAM, MhConfig(n_mc=2), init=(1, 0, 2, 3))
    with pytest.raises(InvalidInit):
        mh_sample(n_poset, LAM, MhConfig(n_mc=2), init=(0, 1, 2))


def test_mh_n_poset_distribution(n_poset):
    samples, _ = mh_sample(n_poset, LAM, MhConfig(n_mc=200_000, burn_in=1000, thinning=1, seed=0))
    exact = exact_pasv_distribution(n_poset, LAM).as_dict()
    assert tv(freq(samples), exact) < 0.01


def test_mh_antichain_uniform():
    # equal weights on an antichain accept every proposal, so each step flips
    # the permutation parity; an odd thinning interval is needed to see both classes
    n_mc = 120_000
    samples, _ = mh_sample(antichain(5), [1] * 5, MhConfig(n_mc=n_mc, burn_in=1000, thinning=11, seed=0))
    counts = Counter(samples)
    assert len(counts) == 120
    p = 1 / 120
    se = math.sqrt(p * (1 - p) / n_mc)
    for c in counts.values():
        assert abs(c / n_mc - p) < 3 * se


def test_mh_nonuniform_index_sampler(n_poset):
    f = [0.2, 0.5, 0.3]
    samples, _ = mh_sample(n_poset, LAM, MhConfig(n_mc=100_000, burn_in=1000, thinning=1, seed=5,
                                                index_probs=f))
    assert tv(freq(samples), exact_pasv_distribution(n_poset, LAM).as_dict()) < 0.01


def test_mh_visits_every_extension():
    rng = random.Random(11)
    for _ in range(5):
        n = rng.randint(3, 6)
        p = build_poset(n, random_dag(rng, n))
        samples, _ = mh_sample(p, random_weights(rng, n, -2, 2),
                               MhConfig(n_mc=20_000, burn_in=100, thinning=1, seed=1))
        assert set(samples) == set(enumerate_linear_extensions(p))


def test_mh_single_player():
    samples, st = mh_sample(build_poset(1, []), [2.0], MhConfig(n_mc=4, burn_in=0, thinning=1))
    assert samples == [(0,)] * 4


def test_mh_config_validation():
    with pytest.raises(ValueError):
        MhConfig(n_mc=0)
    with pytest.raises(ValueError):
        MhConfig(thinning=0)
    with pytest.raises(ValueError):
        MhConfig(index_probs=[0.5, 0.6])


def test_default_configs():
    small, large = default_mh_config(12), default_mh_config(800)
    assert (small.n_mc, small.burn_in, small.thinning) == (3000, 10_000, 1000)
    assert (large.n_mc, large.burn_in, large.thinning) == (10_000, 100_000, 10_000)


# --- exact samplers --------------------------------------------------------

def test_exact_sample_point_mass():
    d = psv_distribution(chain(3))
    assert exact_sample(d, 10, seed=1) == [(0, 1, 2)] * 10


def test_exact_sample_uniform(n_poset):
    n = 50_000
    counts = Counter(exact_sample(psv_distribution(n_poset), n, seed=2))
    se = math.sqrt(0.2 * 0.8 / n)
    assert all(abs(c / n - 0.2) < 3 * se for c in counts.values())


def test_exact_sample_chi_square(n_poset):
    d = exact_pasv_distribution(n_poset, LAM)
    draws = exact_sample(d, 110_000, seed=7)
    counts = Counter(draws)
    observed = [counts[e] for e in d.support]
    assert stats.chisquare(observed, d.prob * len(draws)).pvalue > 0.001
    assert exact_sample(d, 100, seed=7) == draws[:100]


def test_backward_sampler_examples():
    two = OrderedPartition((frozenset({0}), frozenset({1})))
    assert backward_sequential_sample(two, [1, 9], 20, seed=0) == [(0, 1)] * 20

    op = OrderedPartition((frozenset({0, 1}), frozenset({2, 3, 4})))
    n = 60_000
    draws = backward_sequential_sample(op, [1] * 5, n, seed=1)
    hit = sum(d == (0, 1, 2, 4, 3) for d in draws) / n
    assert abs(hit - 1 / 12) < 3 * math.sqrt((1 / 12) * (11 / 12) / n)

    single = OrderedPartition((frozenset({0, 1}),))
    draws = backward_sequential_sample(single, [1, 3], n, seed=2)
    hit = sum(d == (0, 1) for d in draws) / n
    assert abs(hit - 0.75) < 3 * math.sqrt(0.75 * 0.25 / n)


def test_backward_sampler_matches_pasv():
    op = OrderedPartition((frozenset({1, 3}), frozenset({0, 2, 4})))
    lam = [0.5, 2.0, 1.0, 3.0, 1.5]
    draws = backward_sequential_sample(op, lam, 40_000, seed=3)
    d = exact_pasv_distribution(op.poset(), lam)
    counts = Counter(draws)
    observed = [counts[e] for e in d.support]
    assert sum(observed) == len(draws)
    assert stats.chisquare(observed, d.prob * len(draws)).pvalue > 0.001
