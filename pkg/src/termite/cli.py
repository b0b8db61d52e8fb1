"""Command-line pipeline driver.

Subcommands mirror the pipeline stages:

    extract   CSV tables and triple TSVs -> one triple file
    encode    triple file -> token dictionary
    train     triples + dictionary -> model + embedding files
    refine    embedding -> hubness metadata
    query     top-k related entities for one entity
    serve     HTTP API (and the browser UI, when built)
    eval      record-linkage / concept-expansion reports, TSV + figures

Artifact paths default into $TERMITE_DATA_DIR (or the current directory).
Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import encode, evaluate, extract, pairs, refine, siamese, store
from .join import EntityNotFound, termite_join
from .server import ServingContext, create_server

logger = logging.getLogger(__name__)

USAGE_ERROR = 1
DATA_ERROR = 2


class DataError(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; keep 2 for data errors
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(USAGE_ERROR)


def _data_dir() -> Path:
    return Path(os.environ.get("TERMITE_DATA_DIR", "."))


def _artifact(value: str | None, default_name: str) -> Path:
    return Path(value) if value else _data_dir() / default_name


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="termite", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_common_paths(p, *names):
        flags = {
            "triples": ("--triples", "triple TSV file"),
            "dict": ("--dict", "token dictionary TSV"),
            "model": ("--model", "model file"),
            "emb": ("--emb", "embedding file"),
            "hubness": ("--hubness", "hubness metadata JSON"),
        }
        for name in names:
            flag, help_text = flags[name]
            p.add_argument(flag, dest=name, metavar="PATH", help=help_text)

    p = sub.add_parser("extract", help="convert tables and triple files into one triple TSV")
    p.add_argument("inputs", nargs="+", help=".csv tables or .tsv triple files")
    add_common_paths(p, "triples")

    p = sub.add_parser("encode", help="build the token dictionary from a triple file")
    add_common_paths(p, "triples", "dict")

    p = sub.add_parser("train", help="train the network and embed all entities")
    add_common_paths(p, "triples", "dict", "model", "emb")
    p.add_argument("--f", dest="vector_size", type=int, default=encode.DEFAULT_VECTOR_SIZE,
                   help="input vector length")
    p.add_argument("--m", dest="expected_tokens", type=int,
                   help="expected tokens per bag; with --p, sizes the vector")
    p.add_argument("--p", dest="collision_probability", type=float,
                   help="target collision probability for --m")
    p.add_argument("--dim", type=int, default=siamese.DEFAULT_EMBEDDING_DIM,
                   help="embedding dimension")
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--margin", type=float, default=1.0)
    p.add_argument("--neg-ratio", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report-dir", metavar="DIR", help="write loss trace TSV and figure here")

    p = sub.add_parser("refine", help="compute hubness counts and the cutoff")
    add_common_paths(p, "emb", "hubness")
    p.add_argument("--kh", type=int, default=refine.DEFAULT_NEIGHBORHOOD,
                   help="neighborhood size for hubness counting")

    p = sub.add_parser("query", help="top-k related entities")
    p.add_argument("entity")
    p.add_argument("-k", type=int, default=10)
    p.add_argument("--confidence", action="store_true", help="attach persistence confidence")
    add_common_paths(p, "emb", "hubness")

    p = sub.add_parser("serve", help="HTTP API and browser UI")
    add_common_paths(p, "emb", "hubness", "model")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui", metavar="DIR", help="static UI directory (default: frontend/dist if present)")

    p = sub.add_parser("eval", help="record linkage and concept expansion reports")
    add_common_paths(p, "emb", "hubness")
    p.add_argument("--linkage", metavar="PATH", help="cluster-per-line ground truth")
    p.add_argument("--concepts", metavar="PATH", help="concept<TAB>member ground truth")
    p.add_argument("--out", metavar="DIR", help="report directory (default $TERMITE_DATA_DIR/reports)")
    p.add_argument("--synth-groups", type=int, metavar="G",
                   help="generate a synthetic dataset with G groups and run the full pipeline")
    p.add_argument("--synth-size", type=int, default=10, metavar="N", help="entities per group")
    p.add_argument("--f", dest="vector_size", type=int, default=256)
    p.add_argument("--m", dest="expected_tokens", type=int)
    p.add_argument("--p", dest="collision_probability", type=float)
    p.add_argument("--dim", type=int, default=siamese.DEFAULT_EMBEDDING_DIM)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--margin", type=float, default=1.0)
    p.add_argument("--neg-ratio", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kh", type=int, default=refine.DEFAULT_NEIGHBORHOOD)
    return parser


def _require(path: Path) -> Path:
    if not path.exists():
        raise DataError(f"missing input file: {path}")
    return path


def cmd_extract(args) -> int:
    triples = []
    for raw in args.inputs:
        path = _require(Path(raw))
        if path.suffix.lower() == ".csv":
            triples.extend(extract.relational_to_triples(extract.read_csv_table(path)))
        else:
            triples.extend(extract.ingest_triples(path))
    out = _artifact(args.triples, "triples.tsv")
    out.parent.mkdir(parents=True, exist_ok=True)
    extract.write_triples(triples, out)
    print(f"wrote {len(triples)} triples to {out}")
    return 0


def cmd_encode(args) -> int:
    triples = extract.read_triples(_require(_artifact(args.triples, "triples.tsv")))
    dictionary = encode.build_dictionary(extract.entities_of(triples))
    out = _artifact(args.dict, "dictionary.tsv")
    out.parent.mkdir(parents=True, exist_ok=True)
    dictionary.save(out)
    print(f"wrote {len(dictionary)} tokens to {out}")
    return 0


def _vector_size(args) -> int:
    m = getattr(args, "expected_tokens", None)
    p = getattr(args, "collision_probability", None)
    if (m is None) != (p is None):
        raise DataError("--m and --p must be given together")
    if m is not None:
        return encode.size_vector(m, p)
    return args.vector_size


def _train_pipeline(triples, dictionary, args):
    """Shared by `train` and synthetic `eval`: pairs -> model -> store."""
    encoder = encode.Encoder(dictionary, vector_size=_vector_size(args))
    config = siamese.TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch,
        epochs=args.epochs,
        negative_ratio=args.neg_ratio,
        margin=args.margin,
        seed=args.seed,
    )
    positives = pairs.generate_pairs(triples)
    entities = extract.entities_of(triples)
    negatives = pairs.sample_negatives(positives, entities, config.negative_ratio, config.seed)
    model, trace = siamese.train(
        positives + negatives, encoder, config, embedding_dim=args.dim
    )
    emb = store.build_store(model, entities, encoder)
    return model, trace, emb


def cmd_train(args) -> int:
    triples = extract.read_triples(_require(_artifact(args.triples, "triples.tsv")))
    dictionary = encode.Dictionary.load(_require(_artifact(args.dict, "dictionary.tsv")))
    model, trace, emb = _train_pipeline(triples, dictionary, args)
    model_path = _artifact(args.model, "model.tmt")
    emb_path = _artifact(args.emb, "embedding.temb")
    model_path.parent.mkdir(parents=True, exist_ok=True)
    emb_path.parent.mkdir(parents=True, exist_ok=True)
    siamese.save_model(model, model_path)
    emb.save(emb_path)
    print(f"trained {args.epochs} epochs, final loss {trace[-1]:.6f}")
    print(f"wrote model to {model_path}, {len(emb)} embeddings to {emb_path}")
    if args.report_dir:
        _write_loss_report(trace, Path(args.report_dir))
    return 0


def _write_loss_report(trace, out_dir: Path) -> None:
    from . import figures

    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "loss.tsv").open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch\tmean_loss\n")
        for i, loss in enumerate(trace, start=1):
            fh.write(f"{i}\t{loss:.10g}\n")
    figures.save_loss_curve(trace, out_dir / "loss.png")
    print(f"wrote loss report to {out_dir}")


def cmd_refine(args) -> int:
    emb = store.EmbeddingStore.load(_require(_artifact(args.emb, "embedding.temb")))
    meta = refine.compute_hubness(emb, k=args.kh)
    out = _artifact(args.hubness, "hubness.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    meta.save(out)
    print(f"hubness cutoff {meta.cutoff} (k={meta.k}) over {len(emb)} entities -> {out}")
    return 0


def _load_serving_inputs(args):
    emb = store.EmbeddingStore.load(_require(_artifact(args.emb, "embedding.temb")))
    meta = refine.HubnessMetadata.load(_require(_artifact(args.hubness, "hubness.json")))
    return emb, meta


def cmd_query(args) -> int:
    emb, meta = _load_serving_inputs(args)
    result = termite_join(emb, meta, args.entity, args.k, with_confidence=args.confidence)
    for rank, entry in enumerate(result.results, start=1):
        line = f"{rank}\t{entry.entity}\t{entry.distance:.6f}"
        if entry.confidence is not None:
            line += f"\t{entry.confidence:.4f}"
        print(line)
    if result.removed_hubs:
        print(f"# removed {len(result.removed_hubs)} hubs: "
              + ", ".join(e.entity for e in result.removed_hubs), file=sys.stderr)
    return 0


def cmd_serve(args) -> int:
    emb, meta = _load_serving_inputs(args)
    input_dim = 0
    model_path = _artifact(args.model, "model.tmt")
    if model_path.exists():
        input_dim = siamese.read_model_input_dim(model_path)
    ui_dir = Path(args.ui) if args.ui else Path("frontend/dist")
    ctx = ServingContext(
        store=emb,
        meta=meta,
        input_dim=input_dim,
        ui_dir=ui_dir if ui_dir.is_dir() else None,
    )
    server = create_server(ctx, args.host, args.port)
    print(f"serving {len(emb)} entities on http://{args.host}:{server.server_address[1]}",
          flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def cmd_eval(args) -> int:
    out_dir = Path(args.out) if args.out else _data_dir() / "reports"
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.synth_groups:
        emb, meta, linkage, concepts = _eval_synthetic(args, out_dir)
    else:
        emb, meta = _load_serving_inputs(args)
        linkage = evaluate.load_linkage(_require(Path(args.linkage))) if args.linkage else None
        concepts = evaluate.load_concepts(_require(Path(args.concepts))) if args.concepts else []
        if linkage is None and not concepts:
            raise DataError("eval needs --linkage and/or --concepts, or --synth-groups")

    from . import figures

    figures.save_hubness_histogram(meta.counts, meta.cutoff, out_dir / "hubness.png")
    if linkage is not None:
        report = evaluate.record_linkage_report(emb, meta, linkage)
        evaluate.write_linkage_report(report, out_dir / "linkage.tsv")
        print(f"record linkage recall: {report.recall:.4f} "
              f"({sum(o.hits for o in report.outcomes)}/{sum(o.size - 1 for o in report.outcomes)})")
    if concepts:
        outcomes = [evaluate.concept_expansion(emb, meta, c) for c in concepts]
        evaluate.write_expansion_report(outcomes, out_dir / "expansion.tsv")
        figures.save_expansion_chart(outcomes, out_dir / "expansion.png")
        print(evaluate.format_expansion_table(outcomes))
    print(f"reports written to {out_dir}")
    return 0


def _eval_synthetic(args, out_dir: Path):
    """Generate, train and refine a synthetic corpus, saving all artifacts."""
    triples, linkage, concepts = evaluate.synth_dataset(
        args.synth_groups, args.synth_size, args.seed
    )
    extract.write_triples(triples, out_dir / "triples.tsv")
    evaluate.save_linkage(linkage, out_dir / "linkage_truth.tsv")
    evaluate.save_concepts(concepts, out_dir / "concept_truth.tsv")
    dictionary = encode.build_dictionary(extract.entities_of(triples))
    dictionary.save(out_dir / "dictionary.tsv")
    model, trace, emb = _train_pipeline(triples, dictionary, args)
    siamese.save_model(model, out_dir / "model.tmt")
    emb.save(out_dir / "embedding.temb")
    meta = refine.compute_hubness(emb, k=args.kh)
    meta.save(out_dir / "hubness.json")
    _write_loss_report(trace, out_dir)
    return emb, meta, linkage, concepts


_COMMANDS = {
    "extract": cmd_extract,
    "encode": cmd_encode,
    "train": cmd_train,
    "refine": cmd_refine,
    "query": cmd_query,
    "serve": cmd_serve,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("TERMITE_LOG", "WARNING"))
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except EntityNotFound as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except (DataError, FileNotFoundError, extract.ExtractionError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
