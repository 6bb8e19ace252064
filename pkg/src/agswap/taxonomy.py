"""Hierarchical category manifest construction.

Builds the fusion benchmark from two plain-text inputs: an edges file
(TSV ``child<TAB>parent``, one is-a edge per line, names as lowercase
underscore-joined lemmas) and a leaves file (one base category per line).
Pipeline: walk each leaf's hypernym path to the root, collect interior path
nodes with at least one base-category descendant as superclass candidates,
curate them with keep/delete lists, then balance every kept superclass to
exactly 10 subclasses (seeded trim when too many, breadth-first hyponym
expansion when too few).  The resulting manifest enumerates fusion pairs:
all unordered category pairs, or the "tiny" subset with one seeded pick per
superclass.

Determinism: multi-parent nodes follow the lexicographically smallest
parent; trims and tiny picks derive their streams from the manifest seed.
"""

from __future__ import annotations

import csv
import hashlib
import json
import warnings
from collections import deque
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .errors import (
    ConflictingLists,
    InsufficientHyponyms,
    InvalidTaxonomy,
    NoPathToRoot,
    UnknownCategory,
)
from .rng import derive_seed

SUBCLASSES_PER_SUPERCLASS = 10

PROV_ORIGINAL = "original"
PROV_TRIMMED = "trimmed_pool"
PROV_EXPANSION = "wordnet_expansion"


def normalize_name(name: str) -> str:
    """Canonical node naming: lowercase, spaces joined with underscores."""
    return "_".join(name.strip().lower().split())


class TaxonomyGraph:
    """Is-a DAG over synset names with a distinguished base-category set."""

    def __init__(self, edges, leaves, root: str = "object"):
        self.root = normalize_name(root)
        self._parents: dict[str, list[str]] = {}
        self._children: dict[str, list[str]] = {}
        self.nodes: set[str] = {self.root}
        seen: set[tuple[str, str]] = set()
        for child, parent in edges:
            child, parent = normalize_name(child), normalize_name(parent)
            if not child or not parent:
                raise InvalidTaxonomy("empty node name in edge list")
            if (child, parent) in seen:
                continue
            seen.add((child, parent))
            self.nodes.add(child)
            self.nodes.add(parent)
            self._parents.setdefault(child, []).append(parent)
            self._children.setdefault(parent, []).append(child)
        for adj in (self._parents, self._children):
            for k in adj:
                adj[k] = sorted(adj[k])
        self.categories: tuple[str, ...] = tuple(sorted({normalize_name(c) for c in leaves}))
        self._closure_cache: dict[str, frozenset[str]] = {}
        self._validate()

    @classmethod
    def from_files(cls, edges_path, leaves_path, root: str = "object") -> "TaxonomyGraph":
        edges = []
        for line in Path(edges_path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise InvalidTaxonomy(f"malformed edge line: {line!r}")
            edges.append((parts[0], parts[1]))
        leaves = [
            ln.strip() for ln in Path(leaves_path).read_text(encoding="utf-8").splitlines()
            if ln.strip() and not ln.strip().startswith("#")
        ]
        return cls(edges, leaves, root=root)

    def _validate(self) -> None:
        # Kahn's algorithm over child->parent edges detects cycles.
        indeg = {n: 0 for n in self.nodes}
        for child, parents in self._parents.items():
            for p in parents:
                indeg[p] += 1
        queue = deque(n for n, d in indeg.items() if d == 0)
        visited = 0
        while queue:
            n = queue.popleft()
            visited += 1
            for p in self._parents.get(n, ()):
                indeg[p] -= 1
                if indeg[p] == 0:
                    queue.append(p)
        if visited != len(self.nodes):
            raise InvalidTaxonomy("hypernym graph contains a cycle")
        missing = [c for c in self.categories if c not in self.nodes]
        if missing:
            raise InvalidTaxonomy(f"categories missing from the graph: {missing[:5]}")
        reachable = self.hyponym_closure(self.root) | {self.root}
        orphans = [c for c in self.categories if c not in reachable]
        if orphans:
            raise InvalidTaxonomy(f"categories with no path to root: {orphans[:5]}")

    def parents(self, node: str) -> tuple[str, ...]:
        return tuple(self._parents.get(node, ()))

    def children(self, node: str) -> tuple[str, ...]:
        return tuple(self._children.get(node, ()))

    def hyponym_closure(self, node: str) -> frozenset[str]:
        """All descendants of `node` (excluding itself) in the full graph."""
        if node not in self.nodes:
            raise UnknownCategory(f"unknown node {node!r}")
        cached = self._closure_cache.get(node)
        if cached is not None:
            return cached
        out: set[str] = set()
        queue = deque(self._children.get(node, ()))
        while queue:
            n = queue.popleft()
            if n in out:
                continue
            out.add(n)
            queue.extend(self._children.get(n, ()))
        closure = frozenset(out)
        self._closure_cache[node] = closure
        return closure


def hypernym_path(g: TaxonomyGraph, c: str) -> list[str]:
    """Path from category `c` up to the root, smallest parent first at forks."""
    c = normalize_name(c)
    if c not in g.categories:
        raise UnknownCategory(f"{c!r} is not a base category")
    path = [c]
    node = c
    while node != g.root:
        parents = g.parents(node)
        if not parents:
            raise NoPathToRoot(f"walk from {c!r} dead-ended at {node!r}")
        node = parents[0]
        path.append(node)
    return path


def superclass_candidates(g: TaxonomyGraph) -> set[str]:
    """Interior hypernym-path nodes with at least one base-category descendant."""
    candidates: set[str] = set()
    for c in g.categories:
        interior = hypernym_path(g, c)[1:-1]
        for node in interior:
            if node in candidates:
                continue
            if g.hyponym_closure(node) & set(g.categories):
                candidates.add(node)
    return candidates


def apply_curation(
    candidates: set[str],
    keep_list,
    delete_list,
    graph: TaxonomyGraph | None = None,
) -> set[str]:
    """Refine the candidate set with manual keep/delete name lists.

    Keep names absent from the candidates are warned about and survive only
    if they exist in the graph (when one is supplied).
    """
    keep = [normalize_name(n) for n in keep_list]
    delete = {normalize_name(n) for n in delete_list}
    overlap = set(keep) & delete
    if overlap:
        raise ConflictingLists(f"names in both keep and delete: {sorted(overlap)[:5]}")
    for name in sorted(delete - candidates):
        warnings.warn(f"delete-list name not in candidates: {name!r}", stacklevel=2)
    remaining = candidates - delete
    if not keep:
        return remaining
    curated: set[str] = set()
    for name in keep:
        if name in remaining:
            curated.add(name)
            continue
        if name not in candidates:
            warnings.warn(f"keep-list name not in candidates: {name!r}", stacklevel=2)
        if graph is not None and name in graph.nodes and name not in delete:
            curated.add(name)
    return curated


@dataclass(frozen=True)
class SuperclassEntry:
    name: str
    subclasses: tuple[str, ...]
    provenance: tuple[str, ...]

    def __post_init__(self):
        if len(self.subclasses) != SUBCLASSES_PER_SUPERCLASS:
            raise InvalidTaxonomy(
                f"{self.name!r} has {len(self.subclasses)} subclasses, need {SUBCLASSES_PER_SUPERCLASS}")
        if len(set(self.subclasses)) != len(self.subclasses):
            raise InvalidTaxonomy(f"{self.name!r} has duplicate subclasses")
        if len(self.provenance) != len(self.subclasses):
            raise InvalidTaxonomy(f"{self.name!r} provenance length mismatch")
        bad = set(self.provenance) - {PROV_ORIGINAL, PROV_TRIMMED, PROV_EXPANSION}
        if bad:
            raise InvalidTaxonomy(f"unknown provenance tags {sorted(bad)}")


def balance_subclasses(g: TaxonomyGraph, superclass: str, seed: int) -> SuperclassEntry:
    """Fix a superclass at exactly 10 subclasses.

    More than 10 base-category members: keep a seeded uniform sample.  Fewer:
    append non-member hyponym nodes in breadth-first order from the
    superclass (levels ordered lexicographically) until full.
    """
    superclass = normalize_name(superclass)
    if superclass not in g.nodes:
        raise UnknownCategory(f"unknown superclass {superclass!r}")
    closure = g.hyponym_closure(superclass)
    members = sorted(closure & set(g.categories))
    n = SUBCLASSES_PER_SUPERCLASS
    if len(members) == n:
        return SuperclassEntry(superclass, tuple(members), (PROV_ORIGINAL,) * n)
    if len(members) > n:
        rng = np.random.default_rng(derive_seed(seed, "cof.trim", superclass))
        chosen = rng.choice(np.array(members, dtype=object), size=n, replace=False)
        return SuperclassEntry(superclass, tuple(sorted(chosen)), (PROV_TRIMMED,) * n)
    chosen = list(members)
    provenance = [PROV_ORIGINAL] * len(members)
    taken = set(chosen)
    level = [superclass]
    seen = {superclass}
    while len(chosen) < n and level:
        next_level: set[str] = set()
        for node in level:
            next_level.update(ch for ch in g.children(node) if ch not in seen)
        for node in sorted(next_level):
            seen.add(node)
            if node in taken:
                continue
            chosen.append(node)
            taken.add(node)
            provenance.append(PROV_EXPANSION)
            if len(chosen) == n:
                break
        level = sorted(next_level)
    if len(chosen) < n:
        raise InsufficientHyponyms(
            f"{superclass!r} offers only {len(chosen)} candidates, need {n}")
    return SuperclassEntry(superclass, tuple(chosen), tuple(provenance))


@dataclass(frozen=True)
class TaxonomyManifest:
    superclasses: tuple[SuperclassEntry, ...]
    seed: int
    inputs: tuple[tuple[str, str], ...] = ()  # e.g. (("edges_sha256", hex), ...)

    def __post_init__(self):
        names = [e.name for e in self.superclasses]
        if len(set(names)) != len(names):
            raise InvalidTaxonomy("duplicate superclass names in manifest")
        all_cats = self.categories()
        if len(set(all_cats)) != len(all_cats):
            raise InvalidTaxonomy("category names collide across superclasses")

    def categories(self) -> list[str]:
        return [sc for e in self.superclasses for sc in e.subclasses]

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "superclasses": [
                {"name": e.name, "subclasses": list(e.subclasses), "provenance": list(e.provenance)}
                for e in self.superclasses
            ],
            "inputs": dict(self.inputs),
        }

    def to_json_str(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json_dict(cls, d: dict) -> "TaxonomyManifest":
        entries = tuple(
            SuperclassEntry(e["name"], tuple(e["subclasses"]), tuple(e["provenance"]))
            for e in d["superclasses"]
        )
        return cls(superclasses=entries, seed=int(d["seed"]),
                   inputs=tuple(sorted(d.get("inputs", {}).items())))


def build_manifest(
    g: TaxonomyGraph,
    superclass_names,
    seed: int,
    inputs: dict[str, str] | None = None,
) -> TaxonomyManifest:
    entries = tuple(
        balance_subclasses(g, name, seed) for name in sorted({normalize_name(n) for n in superclass_names})
    )
    return TaxonomyManifest(superclasses=entries, seed=seed,
                            inputs=tuple(sorted((inputs or {}).items())))


def tiny_selection(m: TaxonomyManifest, seed: int | None = None) -> list[str]:
    """One seeded subclass per superclass (the reduced evaluation set)."""
    base = m.seed if seed is None else seed
    picks = []
    for entry in m.superclasses:
        rng = np.random.default_rng(derive_seed(base, "cof.tiny", entry.name))
        picks.append(entry.subclasses[int(rng.integers(0, len(entry.subclasses)))])
    return sorted(picks)


def enumerate_pairs(m: TaxonomyManifest, mode: str = "all", seed: int | None = None) -> list[tuple[str, str]]:
    """Unordered fusion pairs, each normalized (left < right) and sorted."""
    if mode == "all":
        names = sorted(m.categories())
    elif mode == "tiny":
        names = tiny_selection(m, seed=seed)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return list(combinations(names, 2))


def write_pairs_csv(pairs, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["left", "right"])
        writer.writerows(pairs)


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
