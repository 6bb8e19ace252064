"""HTTP front of the scoring service.

Wire protocol (JSON bodies, UTF-8):

    GET  /health        -> {"feature_dim", "h", "w", "q", "deterministic",
                            "max_concurrency", "model"}
    POST /encode        {"prompt", "seed"}
                        -> {"label", "h", "w", "base", "pooled"}
    POST /generate      {"base", "h", "w", "pooled", "seed", "request_id"}
                        -> {"image_id", "feature", "segmented", "degenerate_input"}
    GET  /image/<id>    -> PNG of a previously generated image

Errors use {"error": str, "code": str} with 400 (schema), 404, 422 (shape
mismatch), 503 (over capacity).  Replaying a request_id returns the cached
response verbatim; image_id is the sha256 of the request_id, and the PNG is
persisted under the image directory.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .backends import build_backend
from .config import ServiceConfig


class ServiceState:
    def __init__(self, config: ServiceConfig, backend=None):
        self.config = config
        self.backend = backend if backend is not None else build_backend(config)
        self.slots = threading.BoundedSemaphore(config.max_concurrency)
        self.replay_cache: dict[str, dict] = {}
        self.cache_lock = threading.Lock()
        config.image_dir.mkdir(parents=True, exist_ok=True)

    def health_doc(self) -> dict:
        b = self.backend
        return {
            "feature_dim": b.feature_dim,
            "h": b.h,
            "w": b.w,
            "q": b.q,
            "deterministic": bool(b.deterministic),
            "max_concurrency": self.config.max_concurrency,
            "model": b.model_name,
        }

    def encode(self, payload: dict) -> tuple[int, dict]:
        prompt = payload.get("prompt")
        if not isinstance(prompt, str) or not prompt.strip():
            return 400, {"error": "prompt must be a non-empty string", "code": "empty_prompt"}
        if len(prompt.split()) > self.config.max_prompt_words:
            return 400, {"error": f"prompt exceeds {self.config.max_prompt_words} words",
                         "code": "prompt_too_long"}
        seed = int(payload.get("seed", 0))
        base, pooled = self.backend.encode_prompt(prompt, seed)
        return 200, {
            "label": prompt,
            "h": self.backend.h,
            "w": self.backend.w,
            "base": base.reshape(-1).tolist(),
            "pooled": pooled.tolist(),
        }

    def generate(self, payload: dict) -> tuple[int, dict]:
        for key in ("base", "h", "w", "pooled", "seed", "request_id"):
            if key not in payload:
                return 400, {"error": f"missing field {key!r}", "code": "missing_field"}
        request_id = str(payload["request_id"])
        with self.cache_lock:
            cached = self.replay_cache.get(request_id)
        if cached is not None:
            return 200, cached

        h, w = int(payload["h"]), int(payload["w"])
        if (h, w) != (self.backend.h, self.backend.w):
            return 422, {
                "error": f"bundle is {h}x{w}, service expects {self.backend.h}x{self.backend.w}",
                "code": "shape_mismatch",
            }
        base = np.asarray(payload["base"], dtype=np.float64)
        pooled = np.asarray(payload["pooled"], dtype=np.float64)
        if base.size != h * w:
            return 422, {"error": f"base has {base.size} entries, expected {h * w}",
                         "code": "shape_mismatch"}
        if pooled.size != self.backend.q:
            return 422, {"error": f"pooled has {pooled.size} entries, expected {self.backend.q}",
                         "code": "shape_mismatch"}
        if not (np.isfinite(base).all() and np.isfinite(pooled).all()):
            return 400, {"error": "bundle entries must be finite", "code": "non_finite"}

        if not self.slots.acquire(blocking=False):
            return 503, {"error": "server at capacity", "code": "busy"}
        try:
            out = self.backend.render(base.reshape(h, w), pooled, int(payload["seed"]))
        finally:
            self.slots.release()

        image_id = hashlib.sha256(request_id.encode("utf-8")).hexdigest()
        self._persist_png(image_id, out.image)
        doc = {
            "image_id": image_id,
            "feature": out.feature.tolist(),
            "segmented": bool(out.segmented),
            "degenerate_input": bool(out.degenerate),
        }
        with self.cache_lock:
            self.replay_cache[request_id] = doc
        return 200, doc

    def _persist_png(self, image_id: str, image: np.ndarray) -> None:
        from PIL import Image

        Image.fromarray(image).save(self.config.image_dir / f"{image_id}.png")

    def image_path(self, image_id: str):
        path = self.config.image_dir / f"{image_id}.png"
        return path if path.is_file() else None


class ServiceHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, *args):  # quiet by default
        pass

    @property
    def state(self) -> ServiceState:
        return self.server.state

    def _send_json(self, code: int, doc: dict) -> None:
        body = json.dumps(doc).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_json(self) -> dict | None:
        try:
            n = int(self.headers.get("Content-Length", 0))
            return json.loads(self.rfile.read(n))
        except (ValueError, json.JSONDecodeError):
            return None

    def do_GET(self):
        if self.path == "/health":
            self._send_json(200, self.state.health_doc())
            return
        if self.path.startswith("/image/"):
            image_id = self.path.removeprefix("/image/")
            path = self.state.image_path(image_id)
            if path is None:
                self._send_json(404, {"error": "unknown image", "code": "not_found"})
                return
            body = path.read_bytes()
            self.send_response(200)
            self.send_header("Content-Type", "image/png")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
            return
        self._send_json(404, {"error": "unknown route", "code": "not_found"})

    def do_POST(self):
        payload = self._read_json()
        if payload is None or not isinstance(payload, dict):
            self._send_json(400, {"error": "body must be a JSON object", "code": "bad_json"})
            return
        try:
            if self.path == "/encode":
                code, doc = self.state.encode(payload)
            elif self.path == "/generate":
                code, doc = self.state.generate(payload)
            else:
                code, doc = 404, {"error": "unknown route", "code": "not_found"}
        except (TypeError, ValueError) as exc:
            code, doc = 400, {"error": f"malformed field: {exc}", "code": "bad_request"}
        except Exception as exc:  # keep the connection protocol-clean
            code, doc = 500, {"error": f"{type(exc).__name__}: {exc}", "code": "internal"}
        self._send_json(code, doc)


def make_server(config: ServiceConfig, backend=None, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, config.port), ServiceHandler)
    server.state = ServiceState(config, backend=backend)
    return server


def start_in_thread(config: ServiceConfig, backend=None) -> tuple[ThreadingHTTPServer, str]:
    """Run the service on an ephemeral port in a daemon thread (for tests)."""
    config.port = config.port or 0
    server = make_server(config, backend=backend)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, f"http://127.0.0.1:{server.server_address[1]}"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="agswap-service")
    parser.add_argument("--host", default="0.0.0.0")
    parser.add_argument("--port", type=int, default=8700)
    parser.add_argument("--backend", choices=("procedural", "diffusion"), default="procedural")
    parser.add_argument("--image-dir", default="agswap-images")
    parser.add_argument("--max-concurrency", type=int, default=2)
    parser.add_argument("--device", default="cuda")
    parser.add_argument("--generator", default=None)
    parser.add_argument("--extractor", default=None)
    parser.add_argument("--segmenter", default=None)
    args = parser.parse_args(argv)

    config = ServiceConfig(
        backend=args.backend, device=args.device, image_dir=args.image_dir,
        port=args.port, max_concurrency=args.max_concurrency,
    )
    if args.generator:
        config.generator_id = args.generator
    if args.extractor:
        config.extractor_id = args.extractor
    if args.segmenter:
        config.segmenter_id = args.segmenter

    server = make_server(config, host=args.host)
    doc = server.state.health_doc()
    print(f"serving {doc['model']} on {args.host}:{args.port} "
          f"(h={doc['h']}, w={doc['w']}, k={doc['feature_dim']})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
