"""Model backends behind the wire protocol.

A backend turns prompts into embedding bundles and bundles into
(image, subject feature) pairs.  `ProceduralBackend` is a deterministic CPU
pipeline shaped like the real one (render -> segment -> embed) so the full
protocol, including segmentation fallbacks and degenerate inputs, can be
exercised without a GPU.  `DiffusionBackend` drives the configured diffusion
generator, CLIP feature extractor, and background-removal segmenter; it
imports torch lazily so the service module stays importable anywhere.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass

import numpy as np

from .config import ServiceConfig


@dataclass
class GenerationOutput:
    image: np.ndarray  # (H, W, 3) uint8
    feature: np.ndarray  # (k,) unit norm
    segmented: bool
    degenerate: bool


def _prompt_seed(prompt: str, seed: int) -> int:
    digest = hashlib.sha256(f"{seed}\x1f{prompt}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


class ProceduralBackend:
    """Deterministic render/segment/embed pipeline on fixed projections.

    The "image" is a seeded linear projection of the bundle reshaped to
    IMAGE_SIDE^2 pixels; the "subject" is the central box of that image; the
    feature is a second projection of the subject pixels, unit-normalized.
    `latency` artificially slows rendering so capacity limits can be tested.
    """

    IMAGE_SIDE = 32

    def __init__(self, h: int = 16, w: int = 64, q: int = 16, feature_dim: int = 64,
                 latency: float = 0.0):
        self.h, self.w, self.q = h, w, q
        self.feature_dim = feature_dim
        self.latency = latency
        self.model_name = "procedural"
        self.deterministic = True
        n_in = h * w + q
        n_px = self.IMAGE_SIDE * self.IMAGE_SIDE * 3
        rng = np.random.default_rng(20240501)
        self._to_pixels = rng.standard_normal((n_px, n_in)) / np.sqrt(n_in)
        self._to_feature = rng.standard_normal((feature_dim, n_px)) / np.sqrt(n_px)
        mask = np.zeros((self.IMAGE_SIDE, self.IMAGE_SIDE), dtype=bool)
        lo, hi = self.IMAGE_SIDE // 4, 3 * self.IMAGE_SIDE // 4
        mask[lo:hi, lo:hi] = True
        self._subject_mask = mask[:, :, None].repeat(3, axis=2).reshape(-1)

    def encode_prompt(self, prompt: str, seed: int) -> tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng(_prompt_seed(prompt, seed))
        return rng.standard_normal((self.h, self.w)), rng.standard_normal(self.q)

    def render(self, base: np.ndarray, pooled: np.ndarray, seed: int) -> GenerationOutput:
        if self.latency:
            time.sleep(self.latency)
        x = np.concatenate([base.reshape(-1), pooled])
        degenerate = float(np.abs(x).max(initial=0.0)) < 1e-12
        pixels = self._to_pixels @ x
        # the sampling seed perturbs the render slightly, as a real sampler
        # would; scaled by the input so zero bundles stay zero
        wiggle = np.random.default_rng(seed & 0x7FFFFFFF).standard_normal(pixels.shape[0])
        pixels = pixels + 0.02 * float(np.linalg.norm(x)) * wiggle / pixels.shape[0]

        subject = pixels * self._subject_mask
        segmented = bool(np.linalg.norm(subject) > 1e-9)
        raw = self._to_feature @ (subject if segmented else pixels)
        norm = float(np.linalg.norm(raw))
        if norm < 1e-12:
            feature = np.zeros(self.feature_dim)
            feature[0] = 1.0
            degenerate = True
        else:
            feature = raw / norm

        side = self.IMAGE_SIDE
        img = np.clip(128.0 + 48.0 * pixels, 0, 255).astype(np.uint8).reshape(side, side, 3)
        return GenerationOutput(image=img, feature=feature, segmented=segmented,
                                degenerate=degenerate)


class DiffusionBackend:
    """Generator + CLIP extractor + background-removal segmenter.

    Requires the [gpu] extra and downloaded weights; everything heavyweight
    is imported on construction, never at module import time.
    """

    def __init__(self, config: ServiceConfig):
        try:
            import torch
            from diffusers import AutoPipelineForText2Image
            from transformers import (
                AutoModelForImageSegmentation,
                CLIPImageProcessor,
                CLIPVisionModelWithProjection,
            )
        except ImportError as exc:
            raise RuntimeError(
                "the diffusion backend needs the [gpu] extra (torch, diffusers, transformers)"
            ) from exc

        self._torch = torch
        self.device = config.device
        self.pipe = AutoPipelineForText2Image.from_pretrained(
            config.generator_id, torch_dtype=torch.float16, variant="fp16"
        ).to(self.device)
        self.extractor = CLIPVisionModelWithProjection.from_pretrained(
            config.extractor_id).to(self.device).eval()
        self.processor = CLIPImageProcessor.from_pretrained(config.extractor_id)
        self.segmenter = AutoModelForImageSegmentation.from_pretrained(
            config.segmenter_id, trust_remote_code=True).to(self.device).eval()
        self.model_name = "+".join(
            p.rsplit("/", 1)[-1].lower()
            for p in (config.generator_id, config.extractor_id, config.segmenter_id)
        )
        self.deterministic = True

        probe_base, probe_pooled = self.encode_prompt("a photo of a dog", seed=0)
        self.h, self.w = probe_base.shape
        self.q = int(probe_pooled.shape[0])
        self.feature_dim = int(self.extractor.config.projection_dim)

    def encode_prompt(self, prompt: str, seed: int) -> tuple[np.ndarray, np.ndarray]:
        torch = self._torch
        with torch.no_grad():
            embeds, _, pooled, _ = self.pipe.encode_prompt(
                prompt=prompt, device=self.device, num_images_per_prompt=1,
                do_classifier_free_guidance=False,
            )
        base = embeds[0].float().cpu().numpy().T  # rows: feature dims, cols: tokens
        return base, pooled[0].float().cpu().numpy()

    def render(self, base: np.ndarray, pooled: np.ndarray, seed: int) -> GenerationOutput:
        torch = self._torch
        from PIL import Image

        generator = torch.Generator(device=self.device).manual_seed(int(seed))
        embeds = torch.from_numpy(base.T[None]).to(self.device, dtype=torch.float16)
        pooled_t = torch.from_numpy(pooled[None]).to(self.device, dtype=torch.float16)
        degenerate = float(np.abs(base).max(initial=0.0)) < 1e-12
        with torch.no_grad():
            image = self.pipe(
                prompt_embeds=embeds, pooled_prompt_embeds=pooled_t,
                num_inference_steps=1, guidance_scale=0.0, generator=generator,
            ).images[0]

        mask = self._segment(image)
        segmented = mask is not None and float(mask.max()) > 0
        if segmented:
            arr = np.asarray(image, dtype=np.float32) * mask[:, :, None]
            subject = Image.fromarray(arr.astype(np.uint8))
        else:
            subject = image

        with torch.no_grad():
            inputs = self.processor(images=subject, return_tensors="pt").to(self.device)
            embeds_out = self.extractor(**inputs).image_embeds[0].float().cpu().numpy()
        feature = embeds_out / np.linalg.norm(embeds_out)
        return GenerationOutput(image=np.asarray(image), feature=feature,
                                segmented=segmented, degenerate=degenerate)

    def _segment(self, image) -> np.ndarray | None:
        torch = self._torch
        from PIL import Image

        try:
            from torchvision import transforms
        except ImportError:
            return None
        prep = transforms.Compose([
            transforms.Resize((1024, 1024)),
            transforms.ToTensor(),
            transforms.Normalize([0.5, 0.5, 0.5], [1.0, 1.0, 1.0]),
        ])
        with torch.no_grad():
            pred = self.segmenter(prep(image)[None].to(self.device))[-1].sigmoid()[0, 0]
        mask = Image.fromarray((pred.float().cpu().numpy() * 255).astype(np.uint8))
        mask = mask.resize(image.size)
        return np.asarray(mask, dtype=np.float32) / 255.0


def build_backend(config: ServiceConfig, **procedural_kwargs):
    if config.backend == "diffusion":
        return DiffusionBackend(config)
    return ProceduralBackend(**procedural_kwargs)
