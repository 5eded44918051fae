"""Command-line interface: split, train, eval, extract."""

import argparse
import json
import logging
import sys
from pathlib import Path

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("entrel")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"input not found: {path}")
    return p


def _write_json(obj, path):
    text = json.dumps(obj, indent=2, ensure_ascii=False)
    if path is None or path == "-":
        print(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text + "\n", encoding="utf-8")


def _load_docs(paths):
    from .corpus import load_docred

    docs = []
    for p in paths:
        docs.extend(load_docred(_existing(p)))
    return docs


def build_config(args):
    """Defaults < config file < command-line flags."""
    from .config import Config, ConfigError

    cfg = Config.from_file(_existing(args.config)) if args.config else Config()
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError([f"--set expects key=value, got {item!r}"])
        key, value = item.split("=", 1)
        overrides[key.strip()] = _parse_value(value.strip())
    for flag, key in (("mode", "train.mode"), ("rel_head", "rel.head"), ("epochs", "train.epochs"),
                      ("seed", "train.seed"), ("encoder", "encoder.name")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    return cfg.update(overrides)


def _parse_value(text):
    import yaml

    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        return text


def cmd_split(args):
    from .corpus import make_end_to_end_split, save_docred

    docs = _load_docs(args.input)
    split = make_end_to_end_split(docs, args.seed, dev_size=args.dev_size, test_size=args.test_size)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("train", "dev", "test"):
        save_docred(getattr(split, name), out / f"{name}.json")
    manifest = split.manifest()
    manifest["inputs"] = [str(p) for p in args.input]
    _write_json(manifest, out / "manifest.json")
    log.info("split written to %s: %s", out, {k: v["documents"] for k, v in manifest["counts"].items()})


def cmd_train(args):
    from .trainer import train

    cfg = build_config(args)
    train_docs = _load_docs([args.train])
    dev_docs = _load_docs([args.dev]) if args.dev else []
    train(train_docs, dev_docs, cfg, out_dir=Path(args.out), log=log.info)
    log.info("checkpoint written to %s", args.out)


def cmd_eval(args):
    from .evaluation import (LEVELS, evaluate, evaluate_documents, evaluate_relation_only,
                             relations_from_submission, submission_records, train_fact_index)
    from .inference import DocumentPrediction, Extractor, gold_input_reference

    gold = _load_docs([args.gold])
    levels = LEVELS if args.level == "all" else (args.level,)
    if (args.pred is None) == (args.model is None):
        raise UsageError("give exactly one of --pred or --model")
    extractor = Extractor.from_checkpoint(_existing(args.model)) if args.model else None

    if args.relation_only:
        if extractor is not None:
            rels = [extractor.relation_facts(d) for d in gold]
        else:
            rels = relations_from_submission(json.loads(_existing(args.pred).read_text(encoding="utf-8")), gold)
        facts = train_fact_index(_load_docs([args.train_data])) if args.train_data else None
        report = evaluate_relation_only(rels, gold, facts)
        if args.export_submission:
            _write_json(submission_records(rels, gold), args.export_submission)
    elif args.gold_inputs:
        if extractor is None:
            raise UsageError("--gold-inputs needs --model")
        preds = [extractor.gold_input_items(d) for d in gold]
        report = evaluate(preds, [gold_input_reference(d) for d in gold], levels,
                          [d.doc_id for d in gold] if args.per_document else None)
    else:
        if extractor is not None:
            preds = [extractor.extract(d) for d in gold]
        else:
            data = json.loads(_existing(args.pred).read_text(encoding="utf-8"))
            by_id = {p["doc_id"]: DocumentPrediction.from_json(p) for p in data}
            preds = [by_id.get(d.doc_id, DocumentPrediction(d.doc_id)) for d in gold]
        report = evaluate_documents(preds, gold, levels, per_document=args.per_document)
    _write_json(report.to_json(), args.out)


def _input_documents(path: Path):
    from .corpus import document_from_text, load_docred

    if path.suffix.lower() == ".json":
        return load_docred(path)
    text = path.read_text(encoding="utf-8")
    doc = document_from_text(text, path.stem)
    return [doc] if len(doc) else []


def cmd_extract(args):
    from .inference import Extractor

    docs = _input_documents(_existing(args.input))
    if not docs:
        _write_json([], args.out)
        return
    extractor = Extractor.from_checkpoint(_existing(args.model))
    out = []
    for doc in docs:
        pred = extractor.extract(doc, explain=args.explain)
        record = pred.to_json(doc)
        record["title"] = doc.title or doc.doc_id
        out.append(record)
    _write_json(out, args.out)


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="entrel", description="Joint entity-level relation extraction.")
    p.add_argument("--workers", type=int, default=1, help="torch intra-op threads (default 1)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("split", help="filter mixed-type documents and build the end-to-end split")
    s.add_argument("--input", nargs="+", required=True, help="DocRED JSON files (e.g. train_annotated dev)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--dev-size", type=int, default=300)
    s.add_argument("--test-size", type=int, default=700)
    s.set_defaults(func=cmd_split)

    t = sub.add_parser("train", help="train a joint model or a four-model pipeline")
    t.add_argument("--train", required=True)
    t.add_argument("--dev")
    t.add_argument("--out", required=True, help="checkpoint directory")
    t.add_argument("--config", help="YAML key/value config file")
    t.add_argument("--mode", choices=("joint", "pipeline"))
    t.add_argument("--rel-head", choices=("grc", "mrc"))
    t.add_argument("--encoder", help="encoder name, or 'stub'")
    t.add_argument("--epochs", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="strict evaluation")
    e.add_argument("--gold", required=True)
    e.add_argument("--pred", help="prediction JSON (or submission JSON with --relation-only)")
    e.add_argument("--model", help="checkpoint to run instead of --pred")
    e.add_argument("--level", default="all", choices=("all", "mention", "cluster", "entity", "relation"))
    e.add_argument("--gold-inputs", action="store_true", help="feed each stage gold output of the previous one")
    e.add_argument("--relation-only", action="store_true", help="relation extraction with given entities")
    e.add_argument("--train-data", help="training DocRED file for Ign-F1")
    e.add_argument("--export-submission", help="write DocRED submission JSON here")
    e.add_argument("--per-document", action="store_true")
    e.add_argument("--out", help="report path (default stdout)")
    e.set_defaults(func=cmd_eval)

    x = sub.add_parser("extract", help="extract entities and relations")
    x.add_argument("--model", required=True)
    x.add_argument("--input", required=True, help="DocRED JSON or plain text file")
    x.add_argument("--explain", type=int, default=0, metavar="K", help="attach top-K mention pairs per relation")
    x.add_argument("--out", help="prediction path (default stdout)")
    x.set_defaults(func=cmd_extract)
    return p


def main(argv=None) -> int:
    from .config import ConfigError
    from .corpus import IngestionError
    from .encoder import EncodingError

    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    try:
        import torch

        torch.set_num_threads(max(1, args.workers))
        args.func(args)
    except (UsageError, ConfigError) as e:
        print(f"entrel: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (IngestionError, EncodingError, json.JSONDecodeError, KeyError) as e:
        print(f"entrel: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # noqa: BLE001
        log.exception("runtime failure")
        print(f"entrel: runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
