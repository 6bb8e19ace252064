from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class ServiceConfig:
    """Runtime configuration of the scoring service.

    `backend` selects the model stack: "diffusion" loads the configured
    generator/extractor/segmenter (GPU + downloaded weights required);
    "procedural" is the deterministic CPU stand-in used for development and
    protocol testing.
    """

    backend: str = "procedural"
    generator_id: str = "stabilityai/sdxl-turbo"
    extractor_id: str = "laion/CLIP-ViT-bigG-14-laion2B-39B-b160k"
    segmenter_id: str = "briaai/RMBG-2.0"
    device: str = "cuda"
    image_dir: Path = field(default_factory=lambda: Path("agswap-images"))
    port: int = 8700
    max_concurrency: int = 2
    max_prompt_words: int = 100

    def __post_init__(self):
        if self.backend not in ("procedural", "diffusion"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")
        self.image_dir = Path(self.image_dir)
