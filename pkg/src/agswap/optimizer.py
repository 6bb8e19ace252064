"""Score-guided adaptive group-swapping search.

Each iteration mixes the two bundles with the current exchange vector, asks
the oracle for the fused feature, and scores the balance against the cached
reference features.  The sign of the score picks which side of the vector to
flip: a positive score (output leans toward concept 1) turns a random group
of ones into zeros, a negative score does the reverse.  The group size
starts at l_init and shrinks by delta_l each time the score's sign has
flipped flip_threshold times since the last adjustment; when a reduction
would fall below l_min, the size resets to l_init.  The search stops as soon
as |s| < epsilon, or gives up after max_iters with the best vector seen.

`update_vector` follows the score-consistent direction (it removes columns
of the over-represented concept).  The inverse mapping is available via
`invert_update_direction` for A/B comparison.

Trace file format (JSON Lines): one record per iteration with fields
{t, s, d1, d2, l, flipped, sign_flip, hamming_weight}, then a final summary
line.  `flipped` holds the 1-based indices whose flip produced this
iteration's vector (empty at t=0).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .embedding import EmbeddingBundle, ExchangeVector, init_exchange_vector, swap
from .errors import BiasUnresolvable, OracleFailure, ShapeMismatch, WidthTooLarge
from .metrics import BalanceScore, balance_score, biased_balance_score
from .oracle import GeneratorOracle
from .rng import derive_seed

BRUTE_FORCE_MAX_WIDTH = 16


@dataclass(frozen=True)
class BiasSpec:
    """Manual fusion bias: offsets applied to d1/d2 inside the score."""

    alpha_left: float
    alpha_right: float
    s_beta: float = 0.05


@dataclass(frozen=True)
class OptimizerParams:
    epsilon: float = 0.01
    l_init: int = 10
    delta_l: int = 2
    l_min: int = 2
    flip_threshold: int = 4
    max_iters: int = 500
    rng_seed: int = 0
    bias: BiasSpec | None = None
    refresh_refs_each_iter: bool = False
    invert_update_direction: bool = False

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.l_min < 1 or self.l_init < self.l_min:
            raise ValueError("need 1 <= l_min <= l_init")
        if self.delta_l < 1:
            raise ValueError("delta_l must be >= 1")
        if self.flip_threshold < 1:
            raise ValueError("flip_threshold must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class IterationRecord:
    t: int
    f: ExchangeVector
    score: BalanceScore
    group_size: int
    flipped_indices: frozenset[int]
    sign_flip: bool

    def to_trace_dict(self) -> dict:
        return {
            "t": self.t,
            "s": self.score.s,
            "d1": self.score.d1,
            "d2": self.score.d2,
            "l": self.group_size,
            "flipped": sorted(self.flipped_indices),
            "sign_flip": self.sign_flip,
            "hamming_weight": self.f.hamming_weight,
        }


@dataclass(frozen=True)
class FusionResult:
    final_f: ExchangeVector
    best_f: ExchangeVector
    best_abs_s: float
    converged: bool
    trace: tuple[IterationRecord, ...]
    metrics: tuple[float, float]  # (avg_sim, balance) of the reported vector

    @property
    def iterations(self) -> int:
        return len(self.trace)

    def summary_dict(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "best_abs_s": self.best_abs_s,
            "final_f": self.final_f.to_list(),
            "best_f": self.best_f.to_list(),
            "avg_sim": self.metrics[0],
            "balance": self.metrics[1],
        }

    def write_trace(self, path) -> None:
        """Write the JSONL trace; byte-identical across reruns of the same config."""
        with open(path, "w", encoding="utf-8") as fh:
            for record in self.trace:
                fh.write(json.dumps(record.to_trace_dict()) + "\n")
            fh.write(json.dumps(self.summary_dict()) + "\n")


def _sign(s: float) -> int:
    return 1 if math.copysign(1.0, s) > 0 else -1


def update_vector(
    f: ExchangeVector,
    s: float,
    l: int,
    rng: np.random.Generator,
    invert: bool = False,
) -> tuple[ExchangeVector, frozenset[int]]:
    """Flip a uniformly random group of min(l, available) bits on the side chosen by sign(s).

    s > 0 (too much concept 1): ones -> 0.  s < 0: zeros -> 1.  With
    `invert` the mapping inverts.  Raises BiasUnresolvable when the
    required side has no bits left.
    """
    if l < 1:
        raise ValueError("group size must be >= 1")
    if s == 0:
        raise ValueError("s must be nonzero on the update path")
    ones_to_zero = (s > 0) != invert
    if ones_to_zero:
        pool = np.flatnonzero(f.bits == 1)
        target = 0
    else:
        pool = np.flatnonzero(f.bits == 0)
        target = 1
    if pool.size == 0:
        side = "ones" if ones_to_zero else "zeros"
        raise BiasUnresolvable(f"no {side} left to flip (s={s:+.4f})")
    size = min(l, pool.size)
    chosen = rng.choice(pool, size=size, replace=False)
    bits = np.array(f.bits, dtype=np.uint8)
    bits[chosen] = target
    return ExchangeVector(bits), frozenset(int(i) + 1 for i in chosen)


def schedule_size(current_l: int, flip_count: int, params: OptimizerParams) -> tuple[int, int]:
    """Group-size schedule: reduce by delta_l after flip_threshold sign flips.

    A reduction that would fall below l_min resets the size to l_init.  Any
    adjustment zeroes the flip counter.
    """
    if flip_count < params.flip_threshold:
        return current_l, flip_count
    reduced = current_l - params.delta_l
    if reduced < params.l_min:
        return params.l_init, 0
    return reduced, 0


def _score_fn(params: OptimizerParams):
    if params.bias is None:
        return balance_score
    b = params.bias

    def scorer(fused, ref1, ref2):
        return biased_balance_score(fused, ref1, ref2, b.alpha_left, b.alpha_right, b.s_beta)

    return scorer


def run_fusion(
    e1: EmbeddingBundle,
    e2: EmbeddingBundle,
    oracle: GeneratorOracle,
    params: OptimizerParams = OptimizerParams(),
) -> FusionResult:
    """Run the full search; deterministic for fixed (bundles, params, oracle seed)."""
    if e1.base.shape != e2.base.shape:
        raise ShapeMismatch(f"bundle shapes differ: {e1.base.shape} vs {e2.base.shape}")
    score_of = _score_fn(params)
    update_rng = np.random.default_rng(derive_seed(params.rng_seed, "agswap.update"))

    f = init_exchange_vector(e1.w, params.rng_seed)
    records: list[IterationRecord] = []
    try:
        ref1 = oracle.generate(e1)
        ref2 = oracle.generate(e2)
    except OracleFailure as exc:
        exc.trace = tuple(records)
        raise

    l = params.l_init
    flip_count = 0
    prev_sign: int | None = None
    pending_flips: frozenset[int] = frozenset()
    best_abs = math.inf
    best_f = f
    best_record: IterationRecord | None = None
    converged = False

    for t in range(params.max_iters):
        try:
            if params.refresh_refs_each_iter:
                ref1 = oracle.generate(e1)
                ref2 = oracle.generate(e2)
            fused = oracle.generate(swap(e1, e2, f))
        except OracleFailure as exc:
            exc.trace = tuple(records)
            raise
        score = score_of(fused, ref1, ref2)
        sign_flip = prev_sign is not None and _sign(score.s) != prev_sign
        record = IterationRecord(
            t=t, f=f, score=score, group_size=l,
            flipped_indices=pending_flips, sign_flip=sign_flip,
        )
        records.append(record)
        if abs(score.s) < best_abs:
            best_abs = abs(score.s)
            best_f = f
            best_record = record
        if abs(score.s) < params.epsilon:
            converged = True
            break
        if sign_flip:
            flip_count += 1
        l, flip_count = schedule_size(l, flip_count, params)
        prev_sign = _sign(score.s)
        try:
            f, pending_flips = update_vector(
                f, score.s, l, update_rng, invert=params.invert_update_direction)
        except BiasUnresolvable:
            break

    reported = records[-1] if converged else best_record
    assert reported is not None
    metrics = (0.5 * (reported.score.d1 + reported.score.d2),
               abs(reported.score.d1 - reported.score.d2))
    return FusionResult(
        final_f=records[-1].f,
        best_f=best_f,
        best_abs_s=best_abs,
        converged=converged,
        trace=tuple(records),
        metrics=metrics,
    )


def brute_force_search(
    e1: EmbeddingBundle,
    e2: EmbeddingBundle,
    oracle: GeneratorOracle,
) -> tuple[ExchangeVector, float]:
    """Exhaustive minimizer of |s| over all 2^w exchange vectors (w <= 16).

    Verification oracle for the search: enumerates vectors in ascending
    binary value (bit 1 is the most significant), so ties resolve to the
    smallest value.  Scores are the plain (unbiased) balance.
    """
    w = e1.w
    if w > BRUTE_FORCE_MAX_WIDTH:
        raise WidthTooLarge(f"w={w} exceeds enumeration guard {BRUTE_FORCE_MAX_WIDTH}")
    ref1 = oracle.generate(e1)
    ref2 = oracle.generate(e2)
    best_f: ExchangeVector | None = None
    best_abs = math.inf
    for value in range(2 ** w):
        bits = np.fromiter(((value >> (w - 1 - j)) & 1 for j in range(w)), dtype=np.uint8, count=w)
        f = ExchangeVector(bits)
        s = balance_score(oracle.generate(swap(e1, e2, f)), ref1, ref2).s
        if abs(s) < best_abs:
            best_abs = abs(s)
            best_f = f
    assert best_f is not None
    return best_f, best_abs
