from __future__ import annotations

import numpy as np
import pytest

from agswap.embedding import EmbeddingBundle, ExchangeVector
from agswap.errors import BiasUnresolvable, OracleFailure, WidthTooLarge
from agswap.metrics import balance_score
from agswap.optimizer import (
    BiasSpec,
    OptimizerParams,
    brute_force_search,
    run_fusion,
    schedule_size,
    update_vector,
)
from agswap.oracle import SyntheticOracle, SyntheticOracleSpec
from agswap.rng import derive_seed

from helpers import ExplicitLinearOracle, ScriptedOracle, make_bundle


def synthetic(seed: int, k: int = 32) -> SyntheticOracle:
    return SyntheticOracle(SyntheticOracleSpec(projection_seed=seed, k=k))


# -- update_vector ------------------------------------------------------------

def test_update_positive_score_clears_a_one():
    f = ExchangeVector.from_list([1, 1, 0, 0])
    out, flipped = update_vector(f, +0.5, 1, np.random.default_rng(0))
    assert out.hamming_weight == 1
    assert flipped <= {1, 2} and len(flipped) == 1
    assert out.bits[list(flipped)[0] - 1] == 0


def test_update_negative_score_clamps_to_available():
    f = ExchangeVector.from_list([1, 1, 0, 0])
    out, flipped = update_vector(f, -0.5, 3, np.random.default_rng(0))
    assert out.to_list() == [1, 1, 1, 1]
    assert flipped == {3, 4}


def test_update_selection_is_uniform():
    # chi-square against the uniform without-replacement sampling model:
    # 1000 draws of 2 from 10 ones -> expected count 200 per position
    bits = [1] * 10 + [0] * 10
    f = ExchangeVector.from_list(bits)
    counts = np.zeros(10)
    for seed in range(1000):
        _, flipped = update_vector(f, +1.0, 2, np.random.default_rng(seed))
        assert flipped <= set(range(1, 11)) and len(flipped) == 2
        for i in flipped:
            counts[i - 1] += 1
    expected = 1000 * 2 / 10
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < 27.877  # chi-square df=9 critical value at alpha=0.001


def test_update_bias_unresolvable():
    all_zero = ExchangeVector.from_list([0, 0, 0])
    with pytest.raises(BiasUnresolvable):
        update_vector(all_zero, +0.5, 1, np.random.default_rng(0))
    all_one = ExchangeVector.from_list([1, 1, 1])
    with pytest.raises(BiasUnresolvable):
        update_vector(all_one, -0.5, 1, np.random.default_rng(0))


def test_update_inverted_direction_flips_other_side():
    f = ExchangeVector.from_list([1, 1, 0, 0])
    out, flipped = update_vector(f, +0.5, 1, np.random.default_rng(3), invert=True)
    assert out.hamming_weight == 3
    assert flipped <= {3, 4}


def test_update_rejects_zero_score():
    with pytest.raises(ValueError):
        update_vector(ExchangeVector.from_list([1, 0]), 0.0, 1, np.random.default_rng(0))


# -- schedule_size -------------------------------------------------------------

def test_schedule_reduces_at_threshold():
    params = OptimizerParams()
    assert schedule_size(10, 4, params) == (8, 0)


def test_schedule_resets_at_l_min():
    params = OptimizerParams()
    assert schedule_size(2, 4, params) == (10, 0)


def test_schedule_below_threshold_unchanged():
    params = OptimizerParams()
    assert schedule_size(10, 3, params) == (10, 3)


def test_schedule_stops_exactly_at_l_min():
    params = OptimizerParams()
    assert schedule_size(4, 4, params) == (2, 0)


def test_schedule_full_cycle():
    params = OptimizerParams()
    l, sizes = 10, []
    for _ in range(6):
        l, _ = schedule_size(l, params.flip_threshold, params)
        sizes.append(l)
    assert sizes == [8, 6, 4, 2, 10, 8]


# -- run_fusion ----------------------------------------------------------------

def test_run_fusion_converges_on_synthetic():
    e1, e2 = make_bundle(0, 8, 64, q=16, label="a"), make_bundle(0, 8, 64, q=16, label="b")
    oracle = synthetic(0)
    result = run_fusion(e1, e2, oracle, OptimizerParams(rng_seed=0))
    assert result.converged
    assert result.best_abs_s < 0.01
    assert result.iterations <= 500
    # certify the terminal vector by re-scoring it independently of the run
    from agswap.embedding import swap

    ref1, ref2 = oracle.generate(e1), oracle.generate(e2)
    s = balance_score(oracle.generate(swap(e1, e2, result.final_f)), ref1, ref2).s
    assert abs(s) < 0.01


def test_run_fusion_identical_bundles_converges_immediately():
    e1 = make_bundle(1, 4, 16, label="a")
    result = run_fusion(e1, e1, synthetic(1, k=8), OptimizerParams(rng_seed=1))
    assert result.converged
    assert result.iterations == 1
    assert result.trace[0].t == 0
    assert result.trace[0].score.s == 0.0
    assert result.final_f == result.trace[0].f


def test_run_fusion_deterministic_trace():
    e1, e2 = make_bundle(2, 6, 32, label="a"), make_bundle(2, 6, 32, label="b")
    r1 = run_fusion(e1, e2, synthetic(2), OptimizerParams(rng_seed=7))
    r2 = run_fusion(e1, e2, synthetic(2), OptimizerParams(rng_seed=7))
    assert len(r1.trace) == len(r2.trace)
    for a, b in zip(r1.trace, r2.trace):
        assert a.to_trace_dict() == b.to_trace_dict()


def test_run_fusion_trace_bookkeeping():
    e1, e2 = make_bundle(3, 6, 48, label="a"), make_bundle(3, 6, 48, label="b")
    params = OptimizerParams(rng_seed=3)
    result = run_fusion(e1, e2, synthetic(3), params)
    running = np.inf
    for t, record in enumerate(result.trace):
        assert record.t == t
        running = min(running, abs(record.score.s))
        assert params.l_min <= record.group_size <= params.l_init
    assert running == result.best_abs_s
    assert result.converged == (result.best_abs_s < params.epsilon)


def test_run_fusion_flips_match_direction_and_size():
    e1, e2 = make_bundle(4, 6, 40, label="a"), make_bundle(4, 6, 40, label="b")
    result = run_fusion(e1, e2, synthetic(4), OptimizerParams(rng_seed=4))
    assert result.trace[0].flipped_indices == frozenset()
    for prev, cur in zip(result.trace, result.trace[1:]):
        changed = {
            i + 1 for i in range(prev.f.width) if prev.f.bits[i] != cur.f.bits[i]
        }
        assert changed == cur.flipped_indices
        if prev.score.s > 0:
            side = {i + 1 for i in np.flatnonzero(prev.f.bits == 1)}
        else:
            side = {i + 1 for i in np.flatnonzero(prev.f.bits == 0)}
        assert changed <= side
        assert len(changed) == min(cur.group_size, len(side))


def test_run_fusion_scheduler_integration():
    # strictly alternating signs: flips at t=1..4 shrink l for the t=4 update
    scores = [0.5 if t % 2 == 0 else -0.5 for t in range(22)]
    oracle = ScriptedOracle(scores)
    e1, e2 = make_bundle(5, 4, 64, label="a"), make_bundle(5, 4, 64, label="b")
    result = run_fusion(e1, e2, oracle, OptimizerParams(rng_seed=5, max_iters=22))
    sizes = [r.group_size for r in result.trace]
    assert sizes == [10] * 5 + [8] * 4 + [6] * 4 + [4] * 4 + [2] * 4 + [10]
    assert not result.converged
    flips = [r.sign_flip for r in result.trace]
    assert flips == [False] + [True] * 21


def test_run_fusion_biased_target():
    e1, e2 = make_bundle(6, 8, 64, q=16, label="a"), make_bundle(6, 8, 64, q=16, label="b")
    params = OptimizerParams(rng_seed=6, bias=BiasSpec(alpha_left=1.0, alpha_right=0.0, s_beta=0.05))
    result = run_fusion(e1, e2, synthetic(6), params)
    assert result.converged
    terminal = result.trace[-1].score
    assert abs(terminal.d1 - terminal.d2 + 0.05) < 0.01


def test_run_fusion_gives_up_at_max_iters():
    # a score script that never enters the epsilon band
    oracle = ScriptedOracle([0.5, -0.5] * 10)
    e1, e2 = make_bundle(7, 4, 32, label="a"), make_bundle(7, 4, 32, label="b")
    result = run_fusion(e1, e2, oracle, OptimizerParams(rng_seed=7, max_iters=20))
    assert not result.converged
    assert result.iterations == 20
    assert result.best_abs_s == 0.5


def test_run_fusion_propagates_oracle_failure_with_partial_trace():
    class FlakyOracle(ScriptedOracle):
        def generate(self, bundle):
            if self.calls == 2 + 3:  # refs + three fused evaluations
                raise OracleFailure("backend exploded")
            return super().generate(bundle)

    oracle = FlakyOracle([0.5, -0.5] * 5)
    e1, e2 = make_bundle(8, 4, 32, label="a"), make_bundle(8, 4, 32, label="b")
    with pytest.raises(OracleFailure) as err:
        run_fusion(e1, e2, oracle, OptimizerParams(rng_seed=8, max_iters=20))
    assert len(err.value.trace) == 3


def test_run_fusion_stops_on_bias_unresolvable():
    # constant positive score at l=w drains every one-bit, then has nothing to flip
    oracle = ScriptedOracle([0.9] * 10)
    e1, e2 = make_bundle(9, 4, 8, label="a"), make_bundle(9, 4, 8, label="b")
    params = OptimizerParams(rng_seed=9, l_init=8, l_min=2, max_iters=10)
    result = run_fusion(e1, e2, oracle, params)
    assert not result.converged
    assert result.trace[-1].f.hamming_weight == 0


def test_run_fusion_refresh_refs_flag_is_noop_for_deterministic_oracle():
    e1, e2 = make_bundle(10, 6, 32, label="a"), make_bundle(10, 6, 32, label="b")
    base = run_fusion(e1, e2, synthetic(10), OptimizerParams(rng_seed=10))
    refreshed = run_fusion(e1, e2, synthetic(10),
                           OptimizerParams(rng_seed=10, refresh_refs_each_iter=True))
    assert [r.to_trace_dict() for r in base.trace] == [r.to_trace_dict() for r in refreshed.trace]


# -- brute force ----------------------------------------------------------------

def test_brute_force_width_guard():
    e1, e2 = make_bundle(0, 2, 17, label="a"), make_bundle(0, 2, 17, label="b")
    with pytest.raises(WidthTooLarge):
        brute_force_search(e1, e2, synthetic(0, k=4))


def test_brute_force_identical_bundles():
    e1 = make_bundle(1, 2, 1, label="a")
    f_opt, min_abs = brute_force_search(e1, e1, synthetic(1, k=4))
    assert min_abs == 0.0
    # ties resolve to the smallest binary value: all zeros
    assert f_opt.to_list() == [0]


def test_brute_force_antisymmetric_two_columns():
    # hand enumeration: u=[2,1], v=[1,-2] orthogonal; the four vectors score
    # |s| = 1, 2/sqrt(10), 4/sqrt(10), 1 and (1,0) is the unique minimizer
    oracle = ExplicitLinearOracle(np.eye(2))
    e1 = EmbeddingBundle(base=np.array([[2.0, 1.0]]), pooled=np.zeros(1), label="a")
    e2 = EmbeddingBundle(base=np.array([[1.0, -2.0]]), pooled=np.zeros(1), label="b")
    f_opt, min_abs = brute_force_search(e1, e2, oracle)
    assert f_opt.to_list() == [1, 0]
    assert min_abs == pytest.approx(2.0 / np.sqrt(10.0), abs=1e-12)


def test_brute_force_bounds_search_quality():
    seed = 3
    rng_seed = derive_seed(seed, "bf")
    e1, e2 = make_bundle(rng_seed, 4, 12, label="a"), make_bundle(rng_seed, 4, 12, label="b")
    oracle = synthetic(seed, k=16)
    result = run_fusion(e1, e2, oracle, OptimizerParams(rng_seed=seed))
    _, min_abs = brute_force_search(e1, e2, oracle)
    assert result.best_abs_s <= max(0.01, 2.0 * min_abs)


def test_params_validation():
    with pytest.raises(ValueError):
        OptimizerParams(epsilon=0.0)
    with pytest.raises(ValueError):
        OptimizerParams(l_min=12, l_init=10)
    with pytest.raises(ValueError):
        OptimizerParams(delta_l=0)
