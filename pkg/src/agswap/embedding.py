"""Value types and exact arithmetic for embedding mixing.

An EmbeddingBundle carries a concept's token-level embedding matrix (h rows
of feature dimensions x w token columns) plus its pooled vector.  An
ExchangeVector is a binary column selector of length w: bit j = 1 takes
column j from the first bundle, 0 from the second.  Group operations flip a
chosen index set to a common target value.

Column indices are 1-based at the API boundary and in every serialized
artifact; internal storage is plain 0-based numpy.  All types are immutable
after construction and all operations are pure, so values can be shared
freely across concurrent searches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfBounds, InvalidWidth, ShapeMismatch


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class EmbeddingBundle:
    """A concept's base embedding matrix (h, w), pooled vector (q,), and label."""

    base: np.ndarray
    pooled: np.ndarray
    label: str = ""

    def __post_init__(self):
        base = _readonly(self.base)
        pooled = _readonly(self.pooled)
        if base.ndim != 2:
            raise ShapeMismatch(f"base must be 2-D, got ndim={base.ndim}")
        if pooled.ndim != 1:
            raise ShapeMismatch(f"pooled must be 1-D, got ndim={pooled.ndim}")
        if not np.isfinite(base).all() or not np.isfinite(pooled).all():
            raise ShapeMismatch("embedding entries must be finite")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "pooled", pooled)

    @property
    def h(self) -> int:
        return self.base.shape[0]

    @property
    def w(self) -> int:
        return self.base.shape[1]

    @property
    def q(self) -> int:
        return self.pooled.shape[0]

    def to_json_dict(self) -> dict:
        """Wire form: row-major base, {"label", "h", "w", "base", "pooled"}."""
        return {
            "label": self.label,
            "h": self.h,
            "w": self.w,
            "base": [float(v) for v in self.base.reshape(-1)],
            "pooled": [float(v) for v in self.pooled],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "EmbeddingBundle":
        h, w = int(d["h"]), int(d["w"])
        base = np.asarray(d["base"], dtype=np.float64)
        if base.size != h * w:
            raise ShapeMismatch(f"base has {base.size} entries, expected h*w={h * w}")
        return cls(base=base.reshape(h, w), pooled=np.asarray(d["pooled"], dtype=np.float64),
                   label=str(d.get("label", "")))


@dataclass(frozen=True, eq=False)
class ExchangeVector:
    """Binary column selector of length w."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.array(self.bits, dtype=np.uint8)
        if bits.ndim != 1:
            raise InvalidWidth("bits must be a 1-D vector")
        if not np.isin(bits, (0, 1)).all():
            raise InvalidWidth("bits must be 0/1")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def width(self) -> int:
        return self.bits.shape[0]

    @property
    def hamming_weight(self) -> int:
        return int(self.bits.sum())

    def complement(self) -> "ExchangeVector":
        return ExchangeVector(1 - self.bits)

    def to_list(self) -> list[int]:
        return [int(b) for b in self.bits]

    @classmethod
    def from_list(cls, bits) -> "ExchangeVector":
        return cls(np.asarray(bits, dtype=np.uint8))

    def __eq__(self, other) -> bool:
        return isinstance(other, ExchangeVector) and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash(self.bits.tobytes())


@dataclass(frozen=True)
class ExchangeGroup:
    """A set of 1-based column indices to be forced to a common target bit."""

    indices: frozenset[int]
    target: int

    def __post_init__(self):
        object.__setattr__(self, "indices", frozenset(int(i) for i in self.indices))
        if self.target not in (0, 1):
            raise ValueError(f"target must be 0 or 1, got {self.target}")

    @property
    def size(self) -> int:
        return len(self.indices)


def swap(e1: EmbeddingBundle, e2: EmbeddingBundle, f: ExchangeVector) -> EmbeddingBundle:
    """Mix two bundles column-wise: bit 1 takes e1's column, bit 0 takes e2's.

    Pooled vectors are blended at a fixed 0.5 ratio (not searched); the label
    records both parents.
    """
    if e1.base.shape != e2.base.shape:
        raise ShapeMismatch(f"base shapes differ: {e1.base.shape} vs {e2.base.shape}")
    if e1.pooled.shape != e2.pooled.shape:
        raise ShapeMismatch(f"pooled lengths differ: {e1.q} vs {e2.q}")
    if f.width != e1.w:
        raise ShapeMismatch(f"exchange vector width {f.width} != column count {e1.w}")
    mixed = np.where(f.bits.astype(bool)[None, :], e1.base, e2.base)
    pooled = 0.5 * e1.pooled + 0.5 * e2.pooled
    return EmbeddingBundle(base=mixed, pooled=pooled, label=f"{e1.label}+{e2.label}")


def init_exchange_vector(w: int, rng_seed: int) -> ExchangeVector:
    """Seeded initial selector with exactly floor(w/2) ones.

    Positions come from a uniform permutation of the column range, so the
    result is deterministic for a fixed seed.
    """
    if w < 2:
        raise InvalidWidth(f"width must be >= 2, got {w}")
    rng = np.random.default_rng(rng_seed)
    perm = rng.permutation(w)
    bits = np.zeros(w, dtype=np.uint8)
    bits[perm[: w // 2]] = 1
    return ExchangeVector(bits)


def apply_group(f: ExchangeVector, g: ExchangeGroup) -> ExchangeVector:
    """Return a copy of `f` with every index in `g` set to the group target."""
    for i in g.indices:
        if not 1 <= i <= f.width:
            raise IndexOutOfBounds(f"index {i} outside 1..{f.width}")
    bits = np.array(f.bits, dtype=np.uint8)
    if g.indices:
        idx = np.fromiter((i - 1 for i in g.indices), dtype=np.intp)
        bits[idx] = g.target
    return ExchangeVector(bits)
