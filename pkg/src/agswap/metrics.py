"""Cosine-similarity balance scoring and evaluation metrics.

The balance score of a fused output against its two references is
s = d1 - d2 with d1/d2 the cosines to each reference feature; s > 0 means
the output over-represents the first concept.  The biased variant shifts the
target so the converged output keeps a controlled offset between the two
similarities.  Evaluation metrics are the mean similarity and the absolute
similarity gap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatch

UNIT_NORM_TOL = 1e-6
DEFAULT_S_BETA = 0.05


@dataclass(frozen=True, eq=False)
class OracleFeature:
    """Unit-L2-norm feature vector of a generated subject image."""

    vec: np.ndarray
    source_label: str = ""

    def __post_init__(self):
        vec = np.array(self.vec, dtype=np.float64)
        if vec.ndim != 1:
            raise LengthMismatch("feature must be a 1-D vector")
        if not np.isfinite(vec).all():
            raise LengthMismatch("feature entries must be finite")
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise LengthMismatch(f"feature is not unit-norm (|v|={norm:.8f}); normalize before constructing")
        vec.setflags(write=False)
        object.__setattr__(self, "vec", vec)

    @property
    def dim(self) -> int:
        return self.vec.shape[0]


@dataclass(frozen=True)
class BalanceScore:
    """Balance score s = d1 - d2 + bias; bias is 0 for the plain score.

    d1/d2 are always the raw cosines, so biased scores keep the underlying
    similarities inspectable.
    """

    d1: float
    d2: float
    bias: float = 0.0
    s: float = field(init=False)

    def __post_init__(self):
        for name, d in (("d1", self.d1), ("d2", self.d2)):
            if not -1.0 <= d <= 1.0:
                raise ValueError(f"{name}={d} outside [-1, 1]")
        object.__setattr__(self, "s", (self.d1 - self.d2) + self.bias)


def cosine(a: OracleFeature, b: OracleFeature) -> float:
    """Cosine similarity of two unit features (their dot product), in [-1, 1]."""
    if a.dim != b.dim:
        raise LengthMismatch(f"feature lengths differ: {a.dim} vs {b.dim}")
    return float(np.clip(np.dot(a.vec, b.vec), -1.0, 1.0))


def balance_score(fused: OracleFeature, ref1: OracleFeature, ref2: OracleFeature) -> BalanceScore:
    """Plain balance score: s = cos(fused, ref1) - cos(fused, ref2)."""
    return BalanceScore(d1=cosine(fused, ref1), d2=cosine(fused, ref2))


def biased_balance_score(
    fused: OracleFeature,
    ref1: OracleFeature,
    ref2: OracleFeature,
    alpha_left: float,
    alpha_right: float,
    s_beta: float = DEFAULT_S_BETA,
) -> BalanceScore:
    """Balance score with a manual offset: s = (al*s_beta + d1) - (ar*s_beta + d2).

    With alpha_left=1, alpha_right=0 a converged search lands at d1 = d2 - s_beta,
    i.e. the output leans toward the second concept by s_beta.
    """
    if alpha_left < 0 or alpha_right < 0:
        raise ValueError("alpha_left/alpha_right must be >= 0")
    bias = (alpha_left - alpha_right) * s_beta
    return BalanceScore(d1=cosine(fused, ref1), d2=cosine(fused, ref2), bias=bias)


def eval_metrics(fused: OracleFeature, ref1: OracleFeature, ref2: OracleFeature) -> tuple[float, float]:
    """(average similarity, absolute similarity difference) of a fused output."""
    d1 = cosine(fused, ref1)
    d2 = cosine(fused, ref2)
    return 0.5 * (d1 + d2), abs(d1 - d2)
