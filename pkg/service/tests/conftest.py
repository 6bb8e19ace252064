from __future__ import annotations

import pytest

from agswap_service.backends import ProceduralBackend
from agswap_service.config import ServiceConfig
from agswap_service.server import start_in_thread


@pytest.fixture
def service(tmp_path):
    config = ServiceConfig(port=0, image_dir=tmp_path / "images", max_concurrency=2)
    server, url = start_in_thread(config)
    yield url, server.state
    server.shutdown()
    server.server_close()


@pytest.fixture
def slow_service(tmp_path):
    # single slot + slow renders, to exercise the capacity limit
    config = ServiceConfig(port=0, image_dir=tmp_path / "images", max_concurrency=1)
    backend = ProceduralBackend(latency=0.4)
    server, url = start_in_thread(config, backend=backend)
    yield url, server.state
    server.shutdown()
    server.server_close()
