"""Command-line pipeline: tokenize, fragment, build-kg, train-kge,
train-link, align, lexicon.

File formats are text-first and documented next to each subcommand;
``.gz`` paths are read and written transparently.  Exit codes: 0 success,
2 usage, 3 data error, 4 numeric failure.  ``FARM_SEED`` provides the
seed when ``--seed`` is not given.
"""

from __future__ import annotations

import argparse
import gzip
import json
import logging
import os
import sys
from multiprocessing import Pool

from . import align as align_mod
from . import kge as kge_mod
from .fg.detect import core_structure, detect
from .fragment import FGGraph, fragment
from .gnn import LinkConfig, kge_feature_fn, load_model, save_model, train_link
from .kg.build import build_kg, collect_prototypes, read_triples, write_triples
from .kge import KGEConfig, NumericError, load_table, save_table
from .mol.canon import write_smiles
from .mol.graph import MolError
from .mol.parser import parse_components
from .tokenize import (
    build_vocab,
    lexicon_report,
    read_token_file,
    read_vocab_file,
    tokenize,
    write_vocab_file,
)

log = logging.getLogger("farm")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _open(path, mode="rt"):
    if str(path).endswith(".gz"):
        return gzip.open(path, mode, encoding=None if "b" in mode else "utf-8")
    return open(path, mode, encoding=None if "b" in mode else "utf-8")


def read_corpus(path):
    """Yield (line_number, smiles, mol_id) from a SMILES[\\tID] file."""
    with _open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            yield lineno, parts[0], parts[1] if len(parts) > 1 else None


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("FARM_SEED")
    return int(env) if env else 0


def _process_molecule(task):
    """Parse, detect and tokenize one corpus record (worker-safe)."""
    lineno, smiles, strict = task
    try:
        components = parse_components(smiles, strict=strict)
    except MolError as exc:
        return lineno, smiles, None, str(exc)
    joined: list[str] = []
    dumps: list[str] = []
    for k, mol in enumerate(components):
        assignment = detect(mol)
        seq = tokenize(mol, assignment)
        if k:
            joined.append(".")
        joined.extend(t.text for t in seq.tokens)
        record = {
            "smiles": write_smiles(mol),
            "instances": [
                {
                    "label": inst.label,
                    "atoms": sorted(inst.atom_indices),
                    "core_smiles": core_structure(mol, inst.atom_indices),
                }
                for inst in assignment.instances
            ],
        }
        dumps.append(json.dumps(record, separators=(",", ":")))
    return lineno, smiles, (joined, dumps), None


def cmd_tokenize(args) -> int:
    total = failed = 0
    assignments_fh = _open(args.assignments, "wt") if args.assignments else None
    tasks = [(lineno, s, args.strict) for lineno, s, _ in read_corpus(args.corpus)]
    with _open(args.tokens, "wt") as out:
        for lineno, smiles, payload, error in _map(tasks, args.workers):
            total += 1
            if error is not None:
                failed += 1
                log.warning("line %d: %s (%s)", lineno, error, smiles)
                continue
            joined, dumps = payload
            out.write(" ".join(joined) + "\n")
            if assignments_fh is not None:
                for dump in dumps:
                    assignments_fh.write(dump + "\n")
    if assignments_fh is not None:
        assignments_fh.close()
    ratio = failed / total if total else 0.0
    log.info("tokenized %d molecules, %d failures", total - failed, failed)
    return EXIT_OK if ratio <= args.max_failure_ratio else EXIT_DATA


def _map(tasks, workers):
    if workers and workers > 1:
        with Pool(workers) as pool:
            yield from pool.imap(_process_molecule, tasks, chunksize=64)
    else:
        for task in tasks:
            yield _process_molecule(task)


def cmd_fragment(args) -> int:
    n = failed = 0
    with _open(args.graphs, "wt") as out:
        for lineno, smiles, _ in read_corpus(args.corpus):
            try:
                components = parse_components(smiles, strict=args.strict)
            except MolError as exc:
                failed += 1
                log.warning("line %d: %s", lineno, exc)
                continue
            for mol in components:
                graph = fragment(mol, detect(mol))
                out.write(graph.to_json() + "\n")
                n += 1
    log.info("fragmented %d molecules, %d failures", n, failed)
    return EXIT_OK


def cmd_build_kg(args) -> int:
    pairs = []
    for lineno, smiles, _ in read_corpus(args.corpus):
        try:
            components = parse_components(smiles, strict=args.strict)
        except MolError as exc:
            log.warning("line %d: %s", lineno, exc)
            continue
        for mol in components:
            pairs.append((mol, fragment(mol, detect(mol))))
    prototypes = collect_prototypes(pairs)
    triples = build_kg(prototypes)
    write_triples(args.triples, triples)
    log.info("%d prototypes -> %d triples", len(prototypes), len(triples))
    return EXIT_OK


def cmd_train_kge(args) -> int:
    triples = read_triples(args.triples)
    cfg = KGEConfig(
        dim=args.dim,
        margin=args.margin,
        learning_rate=args.lr,
        batch_size=args.batch,
        epochs=args.epochs,
        negatives_per_positive=args.negatives,
        seed=_seed(args),
        conjugate_tail=args.conjugate_tail,
    )
    table, stats = kge_mod.train(triples, cfg)
    save_table(args.output, table)
    log.info(
        "trained %d epochs, final loss %.6f, margin satisfaction %.3f",
        cfg.epochs,
        stats.epoch_losses[-1] if stats.epoch_losses else float("nan"),
        stats.margin_satisfied,
    )
    return EXIT_OK


def _load_graphs(path) -> list[FGGraph]:
    graphs = []
    with _open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                graphs.append(FGGraph.from_json(line))
    return graphs


def cmd_train_link(args) -> int:
    graphs = _load_graphs(args.graphs)
    table = load_table(args.kge)
    cfg = LinkConfig(epochs=args.epochs, learning_rate=args.lr, seed=_seed(args))
    feature_fn = kge_feature_fn(table)
    trainable = [g for g in graphs if len(g.nodes) >= 2]
    if not trainable:
        log.error("no graphs with >= 2 nodes")
        return EXIT_DATA
    model, losses = train_link(trainable, feature_fn, cfg)
    save_model(args.output, model)
    log.info("link losses: %s", " ".join(f"{x:.4f}" for x in losses))
    return EXIT_OK


def cmd_align(args) -> int:
    token_lines = list(read_token_file(args.tokens))
    graphs = _load_graphs(args.graphs)
    if len(token_lines) != len(graphs):
        log.error("token/graph line counts differ (%d vs %d)", len(token_lines), len(graphs))
        return EXIT_DATA
    table = load_table(args.kge)
    gnn = load_model(args.gnn)
    feature_fn = kge_feature_fn(table)
    if args.vocab:
        vocab = read_vocab_file(args.vocab)
    else:
        vocab = build_vocab(token_lines, 1)
    index = vocab.index()
    unk = index["UNK"]
    items = []
    texts = []
    for tokens, graph in zip(token_lines, graphs):
        items.append(
            align_mod.AlignItem(
                [index.get(t, unk) for t in tokens], graph, feature_fn(graph)
            )
        )
        texts.append(tokens)
    cfg = align_mod.AlignConfig(
        margin=args.gamma,
        lambda_mlm=args.lambda_mlm,
        lambda_cl=args.lambda_cl,
        batch_size=args.batch,
        epochs=args.epochs,
        mask_rate=args.mask_rate,
        seed=_seed(args),
        learning_rate=args.lr,
        negatives_per_item=args.negatives,
        in_batch_negatives=args.in_batch_negatives,
    )
    encoder, metrics = align_mod.train_align(items, gnn, cfg, len(index), texts)
    _save_encoder(args.output, encoder)
    with _open(args.metrics, "wt") as fh:
        for m in metrics:
            fh.write(json.dumps(m.as_dict(), separators=(",", ":")) + "\n")
    log.info("final epoch: %s", json.dumps(metrics[-1].as_dict()))
    return EXIT_OK


def _save_encoder(path, encoder) -> None:
    with _open(path, "wt") as fh:
        fh.write(
            f"FARM-ALIGN v1 vocab={encoder.emb.shape[0]} "
            f"embed={encoder.emb.shape[1]} graph={encoder.proj.shape[0]}\n"
        )
        for row in encoder.emb:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
        for row in encoder.proj:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def cmd_lexicon(args) -> int:
    corpus = list(read_token_file(args.tokens))
    heldout = list(read_token_file(args.heldout)) if args.heldout else None
    stats = lexicon_report(corpus, heldout)
    report = json.dumps(stats.as_dict(), indent=2, sort_keys=True)
    if args.output:
        with _open(args.output, "wt") as fh:
            fh.write(report + "\n")
    else:
        print(report)
    if args.vocab:
        write_vocab_file(args.vocab, build_vocab(corpus, args.min_freq))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="farm",
        description="Functional-group-aware molecular representation pipeline.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tokenize", help="corpus -> FG-enhanced token file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--tokens", required=True)
    p.add_argument("--assignments", help="JSONL dump of FG instances per molecule")
    p.add_argument("--strict", action="store_true", help="strict valence checking")
    p.add_argument("--max-failure-ratio", type=float, default=0.05)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("fragment", help="corpus -> FG graph JSONL")
    p.add_argument("--corpus", required=True)
    p.add_argument("--graphs", required=True)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_fragment)

    p = sub.add_parser("build-kg", help="corpus -> knowledge-graph triples TSV")
    p.add_argument("--corpus", required=True)
    p.add_argument("--triples", required=True)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_build_kg)

    p = sub.add_parser("train-kge", help="triples -> complex embeddings")
    p.add_argument("--triples", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--margin", type=float, default=1.0)
    p.add_argument("--negatives", type=int, default=1)
    p.add_argument("--conjugate-tail", action="store_true")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train_kge)

    p = sub.add_parser("train-link", help="graphs + embeddings -> link model")
    p.add_argument("--graphs", required=True)
    p.add_argument("--kge", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--lr", type=float, default=0.2)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train_link)

    p = sub.add_parser("align", help="contrastive sequence/graph alignment")
    p.add_argument("--tokens", required=True)
    p.add_argument("--graphs", required=True)
    p.add_argument("--kge", required=True)
    p.add_argument("--gnn", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--metrics", required=True)
    p.add_argument("--vocab")
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--lambda-mlm", type=float, default=1.0, dest="lambda_mlm")
    p.add_argument("--lambda-cl", type=float, default=0.5, dest="lambda_cl")
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--batch", type=int, default=126)
    p.add_argument("--mask-rate", type=float, default=0.35)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--negatives", type=int, default=4)
    p.add_argument("--in-batch-negatives", action="store_true")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("lexicon", help="token file -> diversity report")
    p.add_argument("--tokens", required=True)
    p.add_argument("--heldout")
    p.add_argument("--output")
    p.add_argument("--vocab", help="also write a vocab TSV")
    p.add_argument("--min-freq", type=int, default=1)
    p.set_defaults(func=cmd_lexicon)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except NumericError as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    except (OSError, ValueError, KeyError) as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
