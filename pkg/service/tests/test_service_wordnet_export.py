from __future__ import annotations

import pytest

from agswap_service.wordnet_export import export, parse_data_noun

# minimal data.noun-style fixture: object <- artifact <- {mug, pot}, with a
# lemma collision on "pot"
DATA_NOUN = """\
  1 this is a license header line
00001740 03 n 01 object 0 000 | a thing
00002000 03 n 02 artifact 0 artefact 0 001 @ 00001740 n 0000 | made thing
00003000 03 n 01 mug 0 001 @ 00002000 n 0000 | drinking vessel
00004000 03 n 01 pot 0 001 @ 00002000 n 0000 | cooking vessel
00005000 03 n 01 pot 0 001 @ 00001740 n 0000 | a different pot
"""


def test_parse_names_edges_and_collisions(tmp_path):
    data = tmp_path / "data.noun"
    data.write_text(DATA_NOUN)
    names, edges = parse_data_noun(data)
    assert names["00001740"] == "object"
    assert names["00002000"] == "artifact"
    assert names["00004000"] == "pot"
    assert names["00005000"] == "pot.2"
    assert ("00003000", "00002000") in edges
    assert ("00002000", "00001740") in edges


def test_export_files(tmp_path):
    data = tmp_path / "data.noun"
    data.write_text(DATA_NOUN)
    synsets = tmp_path / "synsets.txt"
    synsets.write_text("n00003000 mug\nn00004000 pot\n")
    edges_out, leaves_out = tmp_path / "edges.tsv", tmp_path / "leaves.txt"
    n_edges, n_leaves = export(data, synsets, edges_out, leaves_out)
    assert n_edges == 4 and n_leaves == 2
    assert "mug\tartifact" in edges_out.read_text()
    assert leaves_out.read_text().splitlines() == ["mug", "pot"]


def test_export_rejects_unknown_synset(tmp_path):
    data = tmp_path / "data.noun"
    data.write_text(DATA_NOUN)
    synsets = tmp_path / "synsets.txt"
    synsets.write_text("n99999999\n")
    with pytest.raises(KeyError):
        export(data, synsets, tmp_path / "e.tsv", tmp_path / "l.txt")


def test_exported_files_feed_the_taxonomy_builder(tmp_path):
    # end to end into the primary package's graph loader
    from agswap.taxonomy import TaxonomyGraph, hypernym_path

    data = tmp_path / "data.noun"
    data.write_text(DATA_NOUN)
    synsets = tmp_path / "synsets.txt"
    synsets.write_text("n00003000\nn00004000\n")
    edges_out, leaves_out = tmp_path / "edges.tsv", tmp_path / "leaves.txt"
    export(data, synsets, edges_out, leaves_out)
    g = TaxonomyGraph.from_files(edges_out, leaves_out, root="object")
    assert hypernym_path(g, "mug") == ["mug", "artifact", "object"]
