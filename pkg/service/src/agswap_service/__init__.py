"""Model-backed generation/scoring service for the agswap oracle protocol."""

from .backends import DiffusionBackend, GenerationOutput, ProceduralBackend, build_backend
from .config import ServiceConfig
from .server import make_server, start_in_thread

__version__ = "0.1.0"
