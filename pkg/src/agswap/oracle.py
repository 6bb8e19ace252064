"""The generation + scoring boundary.

An oracle maps a (possibly mixed) EmbeddingBundle to a unit feature vector
of the generated subject.  Two implementations share the contract:

SyntheticOracle
    Deterministic desk-scale stand-in: a fixed seeded projection of the
    flattened base matrix, optionally passed through tanh, then normalized.
    The projection matrix is k x (h*w), filled row-major from the splitmix64
    rule in `agswap.rng`, so any independent implementation reproduces
    bit-identical features from the same spec.

RemoteOracle
    HTTP client for a model-backed service implementing:
      GET  /health   -> {"feature_dim", "h", "w", "q", "deterministic",
                         "max_concurrency", "model"}
      POST /encode   {"prompt", "seed"} -> bundle JSON
      POST /generate {"base", "h", "w", "pooled", "seed", "request_id"}
                     -> {"image_id", "feature"}
    Generation requests carry a content-derived request id so retries (3
    attempts, exponential backoff from 250 ms) are idempotent.  Concurrency
    is bounded client-side by the advertised max_concurrency.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np
import requests

from .embedding import EmbeddingBundle
from .errors import OracleFailure, ProtocolError, ShapeMismatch
from .metrics import OracleFeature
from .rng import derive_seed, splitmix64_uniform


@dataclass(frozen=True)
class OracleCapabilities:
    feature_dim: int
    max_concurrency: int
    deterministic: bool
    h: int | None = None
    w: int | None = None
    q: int | None = None
    model: str = ""


@runtime_checkable
class GeneratorOracle(Protocol):
    def health(self) -> OracleCapabilities: ...

    def generate(self, bundle: EmbeddingBundle) -> OracleFeature: ...


@dataclass(frozen=True)
class SyntheticOracleSpec:
    """Parameters of the deterministic synthetic oracle.

    h/w/q may be given up front (required for encode); otherwise the oracle
    locks onto the dimensions of the first bundle it sees.
    """

    projection_seed: int
    k: int = 32
    nonlinearity: str = "linear"
    h: int | None = None
    w: int | None = None
    q: int = 16

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.nonlinearity not in ("linear", "tanh"):
            raise ValueError(f"unknown nonlinearity {self.nonlinearity!r}")


class SyntheticOracle:
    """Pure-function oracle: normalize(N(P @ flatten(base)))."""

    def __init__(self, spec: SyntheticOracleSpec):
        self.spec = spec
        self._h = spec.h
        self._w = spec.w
        self._projection: np.ndarray | None = None
        self._lock = threading.Lock()

    def _ensure_dims(self, h: int, w: int) -> None:
        with self._lock:
            if self._h is None:
                self._h, self._w = h, w
            if (h, w) != (self._h, self._w):
                raise ShapeMismatch(
                    f"bundle is {h}x{w}, oracle locked to {self._h}x{self._w}")

    def projection(self) -> np.ndarray:
        """The fixed k x (h*w) projection, built once per spec."""
        if self._h is None:
            raise OracleFailure("oracle dimensions not set yet; call generate() or pass h/w in the spec")
        with self._lock:
            if self._projection is None:
                k, n = self.spec.k, self._h * self._w
                flat = splitmix64_uniform(self.spec.projection_seed, k * n)
                proj = flat.reshape(k, n)
                proj.setflags(write=False)
                self._projection = proj
        return self._projection

    def health(self) -> OracleCapabilities:
        return OracleCapabilities(
            feature_dim=self.spec.k,
            max_concurrency=8,
            deterministic=True,
            h=self._h,
            w=self._w,
            q=self.spec.q,
            model=f"synthetic-{self.spec.nonlinearity}",
        )

    def generate(self, bundle: EmbeddingBundle) -> OracleFeature:
        self._ensure_dims(bundle.h, bundle.w)
        raw = self.projection() @ bundle.base.reshape(-1)
        if self.spec.nonlinearity == "tanh":
            raw = np.tanh(raw)
        norm = float(np.linalg.norm(raw))
        if norm < 1e-12:
            raise OracleFailure("degenerate projection: zero feature before normalization")
        return OracleFeature(vec=raw / norm, source_label=bundle.label)

    def encode(self, prompt: str) -> EmbeddingBundle:
        """Deterministic stand-in embedding for a prompt (requires h/w in the spec)."""
        if self.spec.h is None or self.spec.w is None:
            raise OracleFailure("synthetic encode needs h and w fixed in the spec")
        rng = np.random.default_rng(derive_seed(self.spec.projection_seed, "encode", prompt))
        base = rng.standard_normal((self.spec.h, self.spec.w))
        pooled = rng.standard_normal(self.spec.q)
        return EmbeddingBundle(base=base, pooled=pooled, label=prompt)


_HEALTH_FIELDS = ("feature_dim", "h", "w", "q", "deterministic", "max_concurrency", "model")


class RemoteOracle:
    """Client for the model-backed oracle service."""

    def __init__(
        self,
        base_url: str,
        seed: int = 0,
        timeout: float = 60.0,
        max_attempts: int = 3,
        backoff_start: float = 0.25,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.seed = int(seed)
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff_start = backoff_start
        self._session = session or requests.Session()
        self._caps: OracleCapabilities | None = None
        self._slots: threading.Semaphore | None = None
        self._lock = threading.Lock()

    # -- transport ---------------------------------------------------------

    def _request(self, method: str, path: str, body: dict | None = None) -> dict:
        url = self.base_url + path
        last = ""
        for attempt in range(1, self.max_attempts + 1):
            try:
                if method == "GET":
                    resp = self._session.get(url, timeout=self.timeout)
                else:
                    resp = self._session.post(url, json=body, timeout=self.timeout)
            except requests.RequestException as exc:
                last = f"{type(exc).__name__}: {exc}"
            else:
                if resp.status_code == 200:
                    try:
                        return resp.json()
                    except ValueError as exc:
                        raise ProtocolError(f"{path}: response is not JSON ({exc})") from exc
                last = f"HTTP {resp.status_code}: {resp.text[:200]}"
                if resp.status_code not in (503,) and resp.status_code < 500:
                    raise OracleFailure(f"{path} rejected: {last}", attempts=attempt, detail=last)
            if attempt < self.max_attempts:
                time.sleep(self.backoff_start * (2 ** (attempt - 1)))
        raise OracleFailure(
            f"{path} failed after {self.max_attempts} attempts",
            attempts=self.max_attempts,
            detail=last,
        )

    def _acquire_slot(self):
        caps = self.health()
        with self._lock:
            if self._slots is None:
                self._slots = threading.Semaphore(max(1, caps.max_concurrency))
        return self._slots

    # -- protocol ----------------------------------------------------------

    def health(self) -> OracleCapabilities:
        if self._caps is None:
            d = self._request("GET", "/health")
            missing = [f for f in _HEALTH_FIELDS if f not in d]
            if missing:
                raise ProtocolError(f"/health missing fields: {missing}")
            if int(d["feature_dim"]) < 1:
                raise ProtocolError(f"/health reports feature_dim={d['feature_dim']}")
            if int(d["max_concurrency"]) < 1:
                raise ProtocolError(f"/health reports max_concurrency={d['max_concurrency']}")
            self._caps = OracleCapabilities(
                feature_dim=int(d["feature_dim"]),
                max_concurrency=int(d["max_concurrency"]),
                deterministic=bool(d["deterministic"]),
                h=int(d["h"]),
                w=int(d["w"]),
                q=int(d["q"]),
                model=str(d["model"]),
            )
        return self._caps

    def encode(self, prompt: str) -> EmbeddingBundle:
        d = self._request("POST", "/encode", {"prompt": prompt, "seed": self.seed})
        for key in ("label", "h", "w", "base", "pooled"):
            if key not in d:
                raise ProtocolError(f"/encode missing field {key!r}")
        try:
            bundle = EmbeddingBundle.from_json_dict(d)
        except (ShapeMismatch, TypeError, ValueError) as exc:
            raise ProtocolError(f"/encode returned an invalid bundle: {exc}") from exc
        caps = self.health()
        if (bundle.h, bundle.w) != (caps.h, caps.w):
            raise ProtocolError(
                f"/encode dims {bundle.h}x{bundle.w} disagree with /health {caps.h}x{caps.w}")
        return bundle

    def generate(self, bundle: EmbeddingBundle) -> OracleFeature:
        feature, _ = self.generate_with_id(bundle)
        return feature

    def generate_with_id(self, bundle: EmbeddingBundle) -> tuple[OracleFeature, str]:
        """Generate and also return the service-side image id of the result."""
        caps = self.health()
        payload = {
            "base": [float(v) for v in bundle.base.reshape(-1)],
            "h": bundle.h,
            "w": bundle.w,
            "pooled": [float(v) for v in bundle.pooled],
            "seed": self.seed,
        }
        payload["request_id"] = self.request_id(payload)
        slots = self._acquire_slot()
        with slots:
            d = self._request("POST", "/generate", payload)
        if "image_id" not in d or "feature" not in d:
            raise ProtocolError("/generate missing image_id or feature")
        vec = np.asarray(d["feature"], dtype=np.float64)
        if vec.ndim != 1 or vec.shape[0] != caps.feature_dim:
            raise ProtocolError(
                f"/generate feature length {vec.shape} != declared {caps.feature_dim}")
        if not np.isfinite(vec).all():
            raise ProtocolError("/generate feature has non-finite entries")
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > 1e-4:
            raise ProtocolError(f"/generate feature norm {norm:.6f} too far from 1")
        return OracleFeature(vec=vec / norm, source_label=bundle.label), str(d["image_id"])

    @staticmethod
    def request_id(payload: dict) -> str:
        """Content-derived idempotency key for a generation payload."""
        canonical = json.dumps(
            {k: payload[k] for k in ("base", "h", "w", "pooled", "seed")},
            sort_keys=True, separators=(",", ":"),
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
