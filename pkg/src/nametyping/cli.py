"""Command-line pipeline: build-vocab, train-embeddings, build-dataset,
evaluate, report.

Flag values can come from a flat ``key = value`` config file (``--config``);
explicit command-line flags win. Logs go to stderr, data only to files.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import dataset as ds
from .classifiers import ClassifierConfig
from .embedding_io import EmbeddingFileFormat, read_embeddings, write_embeddings
from .embeddings import ModelKind, TrainingConfig, train
from .metrics import emit_report, load_reports_json, save_reports_json
from .pipeline import evaluate_embeddings
from .vocab import build_vocabulary, build_negative_table, Vocabulary

logger = logging.getLogger("nametyping")

FORMAT_CHOICES = [f.value for f in EmbeddingFileFormat]
MODEL_CHOICES = [m.value for m in ModelKind]


def load_config_file(path) -> dict[str, str]:
    """Parse ``key = value`` lines; '#' starts a comment."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _coerce_config(parser: argparse.ArgumentParser, cfg: dict[str, str]) -> None:
    """Install config values as parser defaults, with per-flag coercion."""
    defaults = {}
    for action in parser._actions:  # argparse keeps actions public enough
        if action.dest in ("help", "==SUPPRESS=="):
            continue
        if action.dest not in cfg:
            continue
        raw = cfg[action.dest]
        if isinstance(action, (argparse._StoreTrueAction,
                               argparse._StoreFalseAction)):
            defaults[action.dest] = raw.lower() in ("1", "true", "yes", "on")
        elif action.nargs in ("+", "*"):
            conv = action.type or str
            defaults[action.dest] = [conv(v) for v in raw.split()]
        elif action.type is not None:
            defaults[action.dest] = action.type(raw)
        else:
            defaults[action.dest] = raw
    parser.set_defaults(**defaults)


def _require(parser, args, *names) -> None:
    for name in names:
        if getattr(args, name) is None:
            parser.error(f"--{name.replace('_', '-')} is required "
                         f"(flag or config file)")


def _fractions(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected 'train,dev,test'")
    return tuple(parts)  # type: ignore[return-value]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nametyping",
        description="Train word embeddings and evaluate them by multi-label "
                    "name typing.")
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--seed", type=int, default=1,
                        help="global random seed (default 1)")
    parser.add_argument("--workers", type=int, default=1,
                        help="training workers; >1 is lock-free and "
                             "non-reproducible (default 1)")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for info, -vv for debug logging")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("build-vocab",
                       help="build a frequency-filtered vocabulary dump")
    p.add_argument("--corpus", help="tokenized corpus, one document per line")
    p.add_argument("--output", help="vocabulary TSV to write")
    p.add_argument("--min-count", type=int, default=100)
    p.add_argument("--lowercase", action="store_true")

    p = sub.add_parser("train-embeddings",
                       help="train one embedding model on a corpus")
    p.add_argument("--corpus")
    p.add_argument("--vocab", help="vocabulary TSV (built on the fly if absent)")
    p.add_argument("--model", choices=MODEL_CHOICES)
    p.add_argument("--output", help="embedding file to write")
    p.add_argument("--format", choices=FORMAT_CHOICES, default="w2v-text")
    p.add_argument("--dim", type=int, default=200)
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--negatives", type=int, default=10)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--initial-lr", type=float)
    p.add_argument("--min-lr", type=float)
    p.add_argument("--min-count", type=int, default=100)
    p.add_argument("--lowercase", action="store_true")
    p.add_argument("--subsample", type=float, default=0.0,
                   help="subsampling threshold; 0 disables (default)")
    p.add_argument("--dynamic-window", action="store_true",
                   help="sample the effective window per center")
    p.add_argument("--table-size", type=int, default=10_000_000)

    p = sub.add_parser("build-dataset",
                       help="derive, sample, and split a name-typing dataset")
    p.add_argument("--name-entities", help="TSV: name<TAB>entity1,entity2,...")
    p.add_argument("--entity-types", help="TSV: entity<TAB>type1,type2,...")
    p.add_argument("--type-mapping", help="TSV: raw_type<TAB>coarse_type")
    p.add_argument("--prebuilt",
                   help="pre-built name<TAB>type1,type2,... rows; replaces "
                        "the three derivation TSVs")
    p.add_argument("--vocab", help="vocabulary TSV for the corpus-frequency "
                                   "filter")
    p.add_argument("--types-file", help="explicit type inventory, one per line")
    p.add_argument("--top-k", type=int, default=50,
                   help="keep the k most frequent types (default 50)")
    p.add_argument("--min-corpus-freq", type=int, default=100)
    p.add_argument("--sample-size", type=int, default=100_000)
    p.add_argument("--fractions", type=_fractions, default=(0.5, 0.2, 0.3),
                   help="train,dev,test fractions (default 0.5,0.2,0.3)")
    p.add_argument("--output", help="dataset directory to write")

    p = sub.add_parser("evaluate",
                       help="train classifiers on embeddings and score the "
                            "test split")
    p.add_argument("--embeddings", nargs="+",
                   help="one or more embedding files")
    p.add_argument("--format", choices=FORMAT_CHOICES, default="w2v-text")
    p.add_argument("--dataset", help="dataset directory (from build-dataset)")
    p.add_argument("--classifier", choices=["lr", "mlp", "both"],
                   default="both")
    p.add_argument("--output", help="report TSV to write")
    p.add_argument("--report-json",
                   help="also dump machine-readable reports (default: "
                        "alongside --output)")
    p.add_argument("--table-format", choices=["tsv", "human-table"],
                   default="tsv")
    p.add_argument("--min-group", type=int, default=100)
    p.add_argument("--cls-epochs", type=int)
    p.add_argument("--cls-lr", type=float)
    p.add_argument("--cls-l2", type=float)
    p.add_argument("--hidden", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--per-type-mlp", action="store_true")
    p.add_argument("--standardize", action="store_true")

    p = sub.add_parser("report",
                       help="merge saved report JSONs into one table")
    p.add_argument("--inputs", nargs="+", help="report JSON files")
    p.add_argument("--output", help="table file to write")
    p.add_argument("--table-format", choices=["tsv", "human-table"],
                   default="tsv")
    return parser


def cmd_build_vocab(parser, args) -> int:
    _require(parser, args, "corpus", "output")
    vocab = build_vocabulary(args.corpus, min_count=args.min_count,
                             lowercase=args.lowercase)
    vocab.save_tsv(args.output)
    logger.info("wrote %d tokens to %s", len(vocab), args.output)
    return 0


def _load_or_build_vocab(args) -> Vocabulary:
    if args.vocab:
        return Vocabulary.load_tsv(args.vocab, lowercase=args.lowercase)
    logger.info("no --vocab given; building from corpus")
    return build_vocabulary(args.corpus, min_count=args.min_count,
                            lowercase=args.lowercase)


def cmd_train_embeddings(parser, args) -> int:
    _require(parser, args, "corpus", "model", "output")
    vocab = _load_or_build_vocab(args)
    neg_table = build_negative_table(vocab,
                                     size=max(args.table_size, len(vocab)))
    config = TrainingConfig(
        model=ModelKind.parse(args.model), dim=args.dim, window=args.window,
        negatives=args.negatives, epochs=args.epochs,
        initial_lr=args.initial_lr, min_lr=args.min_lr, seed=args.seed,
        workers=args.workers, subsample_threshold=args.subsample,
        dynamic_window=args.dynamic_window)
    matrix = train(config, args.corpus, vocab, neg_table)
    write_embeddings(matrix, args.output, EmbeddingFileFormat.parse(args.format))
    logger.info("wrote %dx%d %s embeddings to %s", len(matrix), matrix.dim,
                args.model, args.output)
    return 0


def cmd_build_dataset(parser, args) -> int:
    _require(parser, args, "output")
    if abs(sum(args.fractions) - 1.0) > 1e-9:
        parser.error(f"--fractions must sum to 1, got {sum(args.fractions)}")
    if args.prebuilt:
        explicit_ts = None
        if args.types_file:
            with open(args.types_file, encoding="utf-8") as f:
                explicit_ts = ds.TypeSystem(
                    types=tuple(ln.strip() for ln in f if ln.strip()))
        name_types, type_system = ds.load_name_types_tsv(args.prebuilt,
                                                         explicit_ts)
    else:
        _require(parser, args, "name_entities", "entity_types",
                 "type_mapping", "vocab")
        name_entities = ds.load_name_entities(args.name_entities)
        entity_types = ds.load_entity_types(args.entity_types)
        mapping = ds.load_type_mapping(args.type_mapping)
        name_types, dropped = ds.derive_name_types(name_entities,
                                                   entity_types, mapping)
        logger.info("derived types for %d names (%d unmapped raw type "
                    "occurrences dropped)", len(name_types), dropped)
        if args.types_file:
            with open(args.types_file, encoding="utf-8") as f:
                type_system = ds.TypeSystem(
                    types=tuple(ln.strip() for ln in f if ln.strip()))
        else:
            type_system = ds.select_top_k_types(name_types, k=args.top_k)
    if args.vocab:
        vocab = Vocabulary.load_tsv(args.vocab, lowercase=True)
        name_types = ds.filter_names(name_types, type_system, vocab,
                                     min_corpus_freq=args.min_corpus_freq)
    else:
        inventory = set(type_system.types)
        name_types = {n.lower(): ts & inventory for n, ts in name_types.items()
                      if len(n.split()) == 1 and ts & inventory}
    if not name_types:
        parser.error("no names survive filtering")
    dataset = ds.sample_and_split(name_types, type_system,
                                  sample_size=args.sample_size,
                                  fractions=args.fractions, seed=args.seed)
    ds.save_dataset(dataset, args.output)
    stats = ds.dataset_stats(dataset)
    for split in ds.SPLIT_NAMES:
        s = stats[split]
        logger.info("%s: %d names, avg %.2f types", split, s["names"],
                    s["avg_types"] or 0.0)
    return 0


def cmd_evaluate(parser, args) -> int:
    _require(parser, args, "embeddings", "dataset", "output")
    dataset = ds.load_dataset(args.dataset)
    kinds = ["lr", "mlp"] if args.classifier == "both" else [args.classifier]
    reports = {}
    for emb_path in args.embeddings:
        matrix = read_embeddings(emb_path,
                                 EmbeddingFileFormat.parse(args.format))
        model_name = matrix.metadata.get("model") or Path(emb_path).stem
        for kind in kinds:
            config = ClassifierConfig(
                kind=kind, epochs=args.cls_epochs,
                learning_rate=args.cls_lr, l2=args.cls_l2,
                hidden=args.hidden, batch_size=args.batch_size,
                threshold=args.threshold, patience=args.patience,
                per_type_mlp=args.per_type_mlp,
                standardize=args.standardize, seed=args.seed)
            report = evaluate_embeddings(matrix, dataset, config,
                                         min_group=args.min_group)
            reports[(model_name, kind)] = report
            logger.info("%s/%s: acc %.3f micro-F1 %.3f (%d test names "
                        "without embeddings)", model_name, kind, report.acc,
                        report.micro_f1, report.excluded_names)
    emit_report(reports, args.output, format=args.table_format)
    json_path = args.report_json or str(Path(args.output).with_suffix(".json"))
    save_reports_json(reports, json_path)
    return 0


def cmd_report(parser, args) -> int:
    _require(parser, args, "inputs", "output")
    merged = {}
    for path in args.inputs:
        merged.update(load_reports_json(path))
    if not merged:
        parser.error("no reports found in the given files")
    emit_report(merged, args.output, format=args.table_format)
    return 0


COMMANDS = {
    "build-vocab": cmd_build_vocab,
    "train-embeddings": cmd_train_embeddings,
    "build-dataset": cmd_build_dataset,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args, _ = parser.parse_known_args(argv)
    if args.config:
        cfg = load_config_file(args.config)
        _coerce_config(parser, cfg)
        for sub_action in parser._subparsers._group_actions:
            for sub in sub_action.choices.values():
                _coerce_config(sub, cfg)
    args = parser.parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    if not args.command:
        parser.print_help(sys.stderr)
        return 2
    handler = COMMANDS[args.command]
    try:
        return handler(parser, args)
    except (OSError, ValueError, RuntimeError) as e:
        logger.error("%s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
