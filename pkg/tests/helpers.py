"""Shared test helpers: bundle factory, scripted oracles, toy taxonomy."""

from __future__ import annotations

import numpy as np

from agswap.embedding import EmbeddingBundle
from agswap.metrics import OracleFeature
from agswap.oracle import OracleCapabilities
from agswap.rng import derive_seed


def make_bundle(seed: int, h: int, w: int, q: int = 4, label: str = "x") -> EmbeddingBundle:
    rng = np.random.default_rng(derive_seed(seed, "test.bundle", label))
    return EmbeddingBundle(
        base=rng.standard_normal((h, w)),
        pooled=rng.standard_normal(q),
        label=label,
    )


class ExplicitLinearOracle:
    """Test oracle with a caller-supplied projection matrix."""

    def __init__(self, projection: np.ndarray):
        self.projection = np.asarray(projection, dtype=np.float64)

    def health(self) -> OracleCapabilities:
        return OracleCapabilities(
            feature_dim=self.projection.shape[0], max_concurrency=8, deterministic=True)

    def generate(self, bundle: EmbeddingBundle) -> OracleFeature:
        raw = self.projection @ bundle.base.reshape(-1)
        return OracleFeature(vec=raw / np.linalg.norm(raw), source_label=bundle.label)


class ScriptedOracle:
    """Returns reference features then fused features with prescribed scores.

    The first two generate() calls are the references ([1,0,...] and
    [0,1,...]); call n+2 returns a unit feature whose balance score against
    them equals scores[n].
    """

    def __init__(self, scores, k: int = 4):
        self.scores = list(scores)
        self.k = k
        self.calls = 0

    def health(self) -> OracleCapabilities:
        return OracleCapabilities(feature_dim=self.k, max_concurrency=1, deterministic=True)

    def generate(self, bundle: EmbeddingBundle) -> OracleFeature:
        i = self.calls
        self.calls += 1
        vec = np.zeros(self.k)
        if i == 0:
            vec[0] = 1.0
        elif i == 1:
            vec[1] = 1.0
        else:
            s = self.scores[i - 2]
            vec[0] = s / 2.0
            vec[1] = -s / 2.0
            vec[2] = np.sqrt(1.0 - s * s / 2.0)
        return OracleFeature(vec=vec, source_label=bundle.label)


# Toy taxonomy: one keepable superclass with 12 base leaves (two of them one
# level deeper), one deletable superclass, and a distractor branch with no
# base-category descendants.
TOY_EDGES = [
    ("blender", "gadget"), ("camera", "gadget"), ("fan", "gadget"),
    ("kettle", "gadget"), ("lamp", "gadget"), ("mixer", "gadget"),
    ("phone", "gadget"), ("radio", "gadget"), ("toaster", "gadget"),
    ("watch", "gadget"),
    ("drill", "power_tool"), ("saw", "power_tool"), ("power_tool", "gadget"),
    ("ant", "creature"), ("bee", "creature"), ("crab", "creature"),
    ("gadget", "object"), ("creature", "object"),
    ("ghost", "mystery"), ("mystery", "object"),
]
TOY_LEAVES = [
    "blender", "camera", "drill", "fan", "kettle", "lamp",
    "mixer", "phone", "radio", "saw", "toaster", "watch",
    "ant", "bee", "crab",
]
TOY_KEEP = ["gadget"]
TOY_DELETE = ["creature", "power_tool"]

