"""Operator CLI: single-pair fusion, batch runs over pair lists, dataset builds.

    agswap fuse dog stove --oracle synthetic --seed 7 --out runs/dog-stove
    agswap batch pairs.csv --oracle remote --url http://host:8700 --out runs/batch
    agswap cof build --edges edges.tsv --leaves leaves.txt --keep keep.txt \
        --delete delete.txt --seed 0 --out manifest.json
    agswap cof tiny  --manifest manifest.json --out tiny.txt
    agswap cof pairs --manifest manifest.json --mode tiny --out pairs.csv

Exit codes: 0 success, 2 operational failure (oracle/graph trouble),
3 non-convergence (best-effort result still written).  Every run is
reproducible from its inputs and --seed; per-pair randomness derives from
hash(seed, left, right).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .errors import AgswapError, OracleFailure
from .optimizer import BiasSpec, FusionResult, OptimizerParams, run_fusion
from .oracle import RemoteOracle, SyntheticOracle, SyntheticOracleSpec
from .rng import derive_seed
from .taxonomy import (
    TaxonomyGraph,
    TaxonomyManifest,
    apply_curation,
    build_manifest,
    enumerate_pairs,
    file_sha256,
    superclass_candidates,
    tiny_selection,
    write_pairs_csv,
)

EXIT_OK = 0
EXIT_FAILURE = 2
EXIT_NOT_CONVERGED = 3

SYNTHETIC_DIMS = {"h": 8, "w": 64, "q": 16, "k": 32}


def _add_oracle_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--oracle", choices=("synthetic", "remote"), default="synthetic")
    p.add_argument("--url", default=None, help="remote oracle base URL (or AGSWAP_ORACLE_URL)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--l-init", type=int, default=10)
    p.add_argument("--delta-l", type=int, default=2)
    p.add_argument("--l-min", type=int, default=2)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--bias-left", type=float, default=None)
    p.add_argument("--bias-right", type=float, default=None)
    p.add_argument("--s-beta", type=float, default=0.05)
    p.add_argument("--style", default=None, help='prompt style: "A {style} of {}"')
    p.add_argument("--template", default=None, help="prompt template with one {} placeholder")
    p.add_argument("--out", default="agswap-out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="agswap")
    sub = parser.add_subparsers(dest="command", required=True)

    fuse = sub.add_parser("fuse", help="fuse two concepts into one balanced hybrid")
    fuse.add_argument("left")
    fuse.add_argument("right")
    _add_oracle_args(fuse)

    batch = sub.add_parser("batch", help="run fusion over a left,right pair CSV")
    batch.add_argument("pairs_csv")
    _add_oracle_args(batch)

    cof = sub.add_parser("cof", help="dataset construction")
    cof_sub = cof.add_subparsers(dest="cof_command", required=True)

    build = cof_sub.add_parser("build", help="build the superclass manifest")
    build.add_argument("--edges", required=True)
    build.add_argument("--leaves", required=True)
    build.add_argument("--keep", default=None)
    build.add_argument("--delete", default=None)
    build.add_argument("--root", default="object")
    build.add_argument("--seed", type=int, default=0)
    build.add_argument("--out", required=True)

    tiny = cof_sub.add_parser("tiny", help="one seeded subclass per superclass")
    tiny.add_argument("--manifest", required=True)
    tiny.add_argument("--seed", type=int, default=None)
    tiny.add_argument("--out", required=True)

    pairs = cof_sub.add_parser("pairs", help="enumerate fusion pairs to CSV")
    pairs.add_argument("--manifest", required=True)
    pairs.add_argument("--mode", choices=("all", "tiny"), default="all")
    pairs.add_argument("--seed", type=int, default=None)
    pairs.add_argument("--out", required=True)

    return parser


def _prompt_template(args) -> str:
    if args.template is not None:
        template = args.template
    elif args.style is not None:
        template = f"A {args.style} of {{}}"
    else:
        template = "A photo of {}"
    if template.count("{}") != 1:
        raise AgswapError(f"template must contain exactly one {{}} placeholder: {template!r}")
    return template


def _build_oracle(args):
    if args.oracle == "remote":
        url = args.url or os.environ.get("AGSWAP_ORACLE_URL")
        if not url:
            raise OracleFailure("remote oracle selected but no --url / AGSWAP_ORACLE_URL")
        return RemoteOracle(url, seed=args.seed)
    spec = SyntheticOracleSpec(
        projection_seed=derive_seed(args.seed, "oracle"),
        k=SYNTHETIC_DIMS["k"], h=SYNTHETIC_DIMS["h"],
        w=SYNTHETIC_DIMS["w"], q=SYNTHETIC_DIMS["q"],
    )
    return SyntheticOracle(spec)


def _params_for_pair(args, left: str, right: str) -> OptimizerParams:
    bias = None
    if args.bias_left is not None or args.bias_right is not None:
        bias = BiasSpec(
            alpha_left=args.bias_left or 0.0,
            alpha_right=args.bias_right or 0.0,
            s_beta=args.s_beta,
        )
    return OptimizerParams(
        epsilon=args.epsilon,
        l_init=args.l_init,
        delta_l=args.delta_l,
        l_min=args.l_min,
        max_iters=args.max_iters,
        rng_seed=derive_seed(args.seed, left, right),
        bias=bias,
    )


def _run_pair(oracle, args, left: str, right: str) -> tuple[FusionResult, str, str]:
    template = _prompt_template(args)
    p1, p2 = template.format(left), template.format(right)
    e1 = oracle.encode(p1)
    e2 = oracle.encode(p2)
    result = run_fusion(e1, e2, oracle, _params_for_pair(args, left, right))
    return result, p1, p2


def cmd_fuse(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    oracle = _build_oracle(args)
    trace_path = out / "trace.jsonl"
    try:
        result, p1, p2 = _run_pair(oracle, args, args.left, args.right)
    except OracleFailure as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        if getattr(exc, "trace", None):
            with open(trace_path, "w", encoding="utf-8") as fh:
                for record in exc.trace:
                    fh.write(json.dumps(record.to_trace_dict()) + "\n")
        return EXIT_FAILURE

    result.write_trace(trace_path)
    doc = {
        "left": args.left,
        "right": args.right,
        "prompt_left": p1,
        "prompt_right": p2,
        "seed": args.seed,
        "oracle": args.oracle,
    }
    doc.update(result.summary_dict())
    terminal = result.trace[-1].score
    doc["final_s"] = terminal.s
    doc["final_d1"] = terminal.d1
    doc["final_d2"] = terminal.d2
    if args.oracle == "remote":
        doc["image_ids"] = _remote_image_ids(oracle, args, result)
    with open(out / "result.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(
        f"s={terminal.s:+.6f} d1={terminal.d1:.6f} d2={terminal.d2:.6f} "
        f"iterations={result.iterations} converged={result.converged}"
    )
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def _remote_image_ids(oracle: RemoteOracle, args, result: FusionResult) -> dict:
    """Re-request the three artifact images; content-derived ids make this idempotent."""
    from .embedding import swap

    template = _prompt_template(args)
    e1 = oracle.encode(template.format(args.left))
    e2 = oracle.encode(template.format(args.right))
    ids = {}
    _, ids["ref1"] = oracle.generate_with_id(e1)
    _, ids["ref2"] = oracle.generate_with_id(e2)
    _, ids["fused"] = oracle.generate_with_id(swap(e1, e2, result.final_f))
    return ids


def _read_pairs(path) -> list[tuple[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if rows and rows[0][:2] == ["left", "right"]:
        rows = rows[1:]
    pairs = [(r[0], r[1]) for r in rows if len(r) >= 2 and r[0]]
    if not pairs:
        raise AgswapError("no pairs in the input CSV")
    return pairs


def cmd_batch(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        pairs = _read_pairs(args.pairs_csv)
        oracle = _build_oracle(args)
        workers = max(1, min(oracle.health().max_concurrency, len(pairs)))
    except AgswapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    def one(pair: tuple[str, str]) -> dict:
        left, right = pair
        row = {"left": left, "right": right, "converged": "", "iters": "",
               "final_s": "", "avg_sim": "", "balance": ""}
        try:
            result, _, _ = _run_pair(oracle, args, left, right)
        except AgswapError as exc:
            print(f"pair ({left}, {right}) failed: {exc}", file=sys.stderr)
            row["converged"] = "false"
            return row
        row["converged"] = "true" if result.converged else "false"
        row["iters"] = result.iterations
        row["final_s"] = repr(result.trace[-1].score.s)
        row["avg_sim"] = repr(result.metrics[0])
        row["balance"] = repr(result.metrics[1])
        return row

    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(one, pairs))

    fieldnames = ["left", "right", "converged", "iters", "final_s", "avg_sim", "balance"]
    numeric = {name: [] for name in ("iters", "final_s", "avg_sim", "balance")}
    converged_vals = []
    for row in rows:
        if row["iters"] != "":
            for name in numeric:
                numeric[name].append(float(row[name]))
            converged_vals.append(1.0 if row["converged"] == "true" else 0.0)
    succeeded = len(converged_vals)
    means = {"left": "mean", "right": "", "converged": "", "iters": "",
             "final_s": "", "avg_sim": "", "balance": ""}
    if succeeded:
        means["converged"] = repr(sum(converged_vals) / succeeded)
        for name, vals in numeric.items():
            means[name] = repr(sum(vals) / len(vals))
    with open(out / "metrics.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
        writer.writerow(means)
    print(f"batch: {succeeded}/{len(pairs)} pairs completed -> {out / 'metrics.csv'}")
    return EXIT_OK if succeeded else EXIT_FAILURE


def _read_name_list(path) -> list[str]:
    return [
        ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()
        if ln.strip() and not ln.strip().startswith("#")
    ]


def cmd_cof(args) -> int:
    if args.cof_command == "build":
        g = TaxonomyGraph.from_files(args.edges, args.leaves, root=args.root)
        candidates = superclass_candidates(g)
        keep = _read_name_list(args.keep) if args.keep else []
        delete = _read_name_list(args.delete) if args.delete else []
        curated = apply_curation(candidates, keep, delete, graph=g)
        manifest = build_manifest(
            g, curated, seed=args.seed,
            inputs={"edges_sha256": file_sha256(args.edges),
                    "leaves_sha256": file_sha256(args.leaves)},
        )
        Path(args.out).write_text(manifest.to_json_str(), encoding="utf-8")
        print(f"candidates={len(candidates)} curated={len(curated)} "
              f"superclasses={len(manifest.superclasses)} -> {args.out}")
        return EXIT_OK

    try:
        manifest = TaxonomyManifest.from_json_dict(
            json.loads(Path(args.manifest).read_text(encoding="utf-8")))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise AgswapError(f"cannot read manifest {args.manifest}: {exc}") from exc
    if args.cof_command == "tiny":
        names = tiny_selection(manifest, seed=args.seed)
        Path(args.out).write_text("\n".join(names) + "\n", encoding="utf-8")
        print(f"tiny: {len(names)} categories -> {args.out}")
        return EXIT_OK
    if args.cof_command == "pairs":
        pairs = enumerate_pairs(manifest, mode=args.mode, seed=args.seed)
        write_pairs_csv(pairs, args.out)
        print(f"pairs: {len(pairs)} rows -> {args.out}")
        return EXIT_OK
    raise AgswapError(f"unknown cof subcommand {args.cof_command!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fuse":
            return cmd_fuse(args)
        if args.command == "batch":
            return cmd_batch(args)
        if args.command == "cof":
            return cmd_cof(args)
    except OracleFailure as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (AgswapError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
