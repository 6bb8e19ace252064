from __future__ import annotations

import pytest

from helpers import TOY_DELETE, TOY_EDGES, TOY_KEEP, TOY_LEAVES


@pytest.fixture
def toy_graph_files(tmp_path):
    edges = tmp_path / "edges.tsv"
    leaves = tmp_path / "leaves.txt"
    keep = tmp_path / "keep.txt"
    delete = tmp_path / "delete.txt"
    edges.write_text("".join(f"{c}\t{p}\n" for c, p in TOY_EDGES), encoding="utf-8")
    leaves.write_text("\n".join(TOY_LEAVES) + "\n", encoding="utf-8")
    keep.write_text("\n".join(TOY_KEEP) + "\n", encoding="utf-8")
    delete.write_text("\n".join(TOY_DELETE) + "\n", encoding="utf-8")
    return {"edges": edges, "leaves": leaves, "keep": keep, "delete": delete}
