"""Convert a WordNet noun database into the plain-text taxonomy inputs.

The taxonomy builder consumes two files: an edges TSV (child<TAB>parent per
is-a relation) and a leaves list (one base category per line).  This
converter produces both from:

  * ``data.noun`` from a WordNet 3.x distribution (synset records with
    ``@`` / ``@i`` hypernym pointers), and
  * a synset-id list for the base categories, one per line, e.g.
    ``n01440764`` optionally followed by whitespace and glosses.

Node names are the synset's first lemma, lowercased; when several synsets
share a lemma, later ones (in offset order) get ``.2``, ``.3``, ... suffixes
so edges stay unambiguous.

    python -m agswap_service.wordnet_export --data-noun data.noun \
        --synsets imagenet_synsets.txt --edges-out edges.tsv --leaves-out leaves.txt
"""

from __future__ import annotations

import argparse
from pathlib import Path


def parse_data_noun(path) -> tuple[dict[str, str], list[tuple[str, str]]]:
    """Return (offset -> unique name, list of (child_offset, parent_offset))."""
    names: dict[str, str] = {}
    used: dict[str, int] = {}
    edges: list[tuple[str, str]] = []
    for line in Path(path).read_text(encoding="utf-8", errors="replace").splitlines():
        if not line or line.startswith("  "):  # license header
            continue
        tokens = line.split(" ")
        if len(tokens) < 5 or not tokens[0].isdigit():
            continue
        offset = tokens[0]
        w_cnt = int(tokens[3], 16)
        lemma = tokens[4].lower()
        count = used.get(lemma, 0)
        used[lemma] = count + 1
        names[offset] = lemma if count == 0 else f"{lemma}.{count + 1}"
        p_cnt_idx = 4 + w_cnt * 2
        p_cnt = int(tokens[p_cnt_idx])
        cursor = p_cnt_idx + 1
        for _ in range(p_cnt):
            symbol, target = tokens[cursor], tokens[cursor + 1]
            cursor += 4
            if symbol in ("@", "@i"):
                edges.append((offset, target))
    return names, edges


def read_synset_ids(path) -> list[str]:
    ids = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        token = line.split()[0]
        ids.append(token.lstrip("n"))
    return ids


def export(data_noun, synsets, edges_out, leaves_out) -> tuple[int, int]:
    names, offset_edges = parse_data_noun(data_noun)
    with open(edges_out, "w", encoding="utf-8") as fh:
        for child, parent in offset_edges:
            if child in names and parent in names:
                fh.write(f"{names[child]}\t{names[parent]}\n")
    leaf_ids = read_synset_ids(synsets)
    missing = [i for i in leaf_ids if i not in names]
    if missing:
        raise KeyError(f"synset ids not present in data.noun: {missing[:5]}")
    with open(leaves_out, "w", encoding="utf-8") as fh:
        for synset_id in leaf_ids:
            fh.write(names[synset_id] + "\n")
    return len(offset_edges), len(leaf_ids)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="wordnet-export")
    parser.add_argument("--data-noun", required=True)
    parser.add_argument("--synsets", required=True)
    parser.add_argument("--edges-out", required=True)
    parser.add_argument("--leaves-out", required=True)
    args = parser.parse_args(argv)
    n_edges, n_leaves = export(args.data_noun, args.synsets, args.edges_out, args.leaves_out)
    print(f"wrote {n_edges} edges and {n_leaves} leaves")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
