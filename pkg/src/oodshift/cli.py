"""Command line entry point: ``oodshift {sim,eval,textshift,oracle}``.

Exit codes: 0 success, 1 validation or usage error, 2 I/O or environment error.
Each run writes its outputs plus one ``manifest.json`` into ``--out``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .runner import ConfigError, SweepConfig, load_config, run_sweep
from .scoreio import DETECTOR_KIND, ScoreFileError, evaluate_records, load_records, read_header
from .textshift import (
    BowConfig,
    append_filler,
    dump_corpus,
    load_corpus,
    oracle_fit_evaluate,
    partition_by_class,
)

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2
SWEEPS = ("semantic", "background")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()


def _write(out_dir: Path, name: str, data: bytes, written: dict) -> None:
    path = out_dir / name
    path.write_bytes(data)
    written[name] = hashlib.sha256(data).hexdigest()


def _manifest(out_dir: Path, subcommand: str, config: dict, master_seed, written: dict) -> None:
    doc = {
        "subcommand": subcommand,
        "config": config,
        "master_seed": master_seed,
        "version": __version__,
        "outputs": dict(sorted(written.items())),
    }
    (out_dir / "manifest.json").write_bytes(_json_bytes(doc))


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fmt_report(report) -> str:
    return (f"{report.detector_name}: AUROC {report.auroc:.3f}  FAR95 {report.far95:.3f}  "
            f"n_id {report.n_id}  n_ood {report.n_ood}")


def cmd_sim(args) -> int:
    if args.sweep not in SWEEPS:
        raise UsageError(f"invalid --sweep {args.sweep!r}; valid values: {', '.join(SWEEPS)}")
    config = load_config(args.config) if args.config else SweepConfig()
    config.validate(args.sweep)
    result = run_sweep(args.sweep, config, threads=args.threads)
    out = _out_dir(args.out)
    written = {}
    _write(out, f"{args.sweep}_sweep.csv", result.to_csv().encode(), written)
    _write(out, f"{args.sweep}_summary.json", _json_bytes(result.summary()), written)
    _manifest(out, "sim", {"sweep": args.sweep, **config.resolved(args.sweep)}, config.master_seed, written)
    for c in result.cells:
        print(f"n={c.n_semantic} param={c.sweep_parameter:g} {c.detector_name}: "
              f"AUROC {c.mean_auroc:.4f} +/- {c.ci_halfwidth:.4f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    kind = DETECTOR_KIND[args.detector]
    file_kind = read_header(args.scores)["kind"]
    if file_kind != kind:
        raise ValueError(f"detector {args.detector!r} needs {kind} payloads but {args.scores} declares {file_kind}")
    records = load_records(args.scores, declared_kind=kind)
    report = evaluate_records(records, args.detector)
    out = _out_dir(args.out)
    written = {}
    _write(out, "report.json", _json_bytes(report.to_dict()), written)
    _manifest(out, "eval", {"scores": str(args.scores), "detector": args.detector}, None, written)
    print(_fmt_report(report))
    return EXIT_OK


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated integer list, got {text!r}") from None


def cmd_textshift(args) -> int:
    corpus = load_corpus(args.corpus)
    written = {}
    if args.action == "append-filler":
        if not args.filler or not args.lengths:
            raise UsageError("append-filler needs --filler and --lengths")
        filler = load_corpus(args.filler)
        lengths = _int_list(args.lengths)
        shifted = [(n, append_filler(corpus, filler, n, args.seed)) for n in lengths]
        out = _out_dir(args.out)
        stem = Path(args.corpus).stem
        for n, c in shifted:
            _write_corpus(out, f"{stem}.filler{n}.jsonl", c, written)
        config = {"action": args.action, "corpus": str(args.corpus), "filler": str(args.filler), "lengths": lengths}
    else:
        if not args.id_classes:
            raise UsageError("partition needs --id-classes")
        classes = [c for c in args.id_classes.split(",") if c]
        id_part, ood_part = partition_by_class(corpus, classes)
        out = _out_dir(args.out)
        _write_corpus(out, "id.jsonl", id_part, written)
        _write_corpus(out, "ood.jsonl", ood_part, written)
        if len(ood_part) == 0:
            print("warning: every class is in-distribution; ood.jsonl is empty", file=sys.stderr)
        config = {"action": args.action, "corpus": str(args.corpus), "id_classes": classes}
    _manifest(out, "textshift", config, args.seed, written)
    return EXIT_OK


def _write_corpus(out: Path, name: str, corpus, written: dict) -> None:
    dump_corpus(corpus, out / name)
    written[name] = hashlib.sha256((out / name).read_bytes()).hexdigest()


def cmd_oracle(args) -> int:
    config = BowConfig(args.learning_rate, args.epochs, args.l2, args.min_count)
    id_corpus, ood_corpus = load_corpus(args.id), load_corpus(args.ood)
    result = oracle_fit_evaluate(id_corpus.texts, ood_corpus.texts, args.train_fraction, args.seed, config)
    out = _out_dir(args.out)
    written = {}
    report = result.report.to_dict() | {"n_train_id": result.n_train[0], "n_train_ood": result.n_train[1],
                                        "train_fraction": args.train_fraction, "bow_config": config.__dict__}
    _write(out, "report.json", _json_bytes(report), written)
    _write(out, "model.json", _json_bytes(result.model.to_dict()), written)
    _manifest(out, "oracle", {"id": str(args.id), "ood": str(args.ood), "train_fraction": args.train_fraction,
                              **config.__dict__}, args.seed, written)
    print(_fmt_report(result.report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="oodshift", description="Semantic/background shift simulation and OOD detector evaluation.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sim", help="run a simulated shift sweep")
    s.add_argument("--sweep", required=True, help="semantic | background")
    s.add_argument("--config", help="sweep config JSON (defaults used if omitted)")
    s.add_argument("--out", required=True)
    s.add_argument("--threads", type=int, default=1, help="worker cap; results do not depend on it")
    s.set_defaults(func=cmd_sim)

    e = sub.add_parser("eval", help="evaluate an external score file")
    e.add_argument("--scores", required=True)
    e.add_argument("--detector", required=True, choices=sorted(DETECTOR_KIND))
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_eval)

    t = sub.add_parser("textshift", help="build controlled text shifts")
    t.add_argument("action", choices=["append-filler", "partition"])
    t.add_argument("--corpus", required=True)
    t.add_argument("--filler")
    t.add_argument("--lengths", help="comma-separated word counts, e.g. 25,50,100,150,200")
    t.add_argument("--id-classes", help="comma-separated class names kept as ID")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_textshift)

    o = sub.add_parser("oracle", help="bag-of-words logistic-regression oracle detector")
    o.add_argument("--id", required=True)
    o.add_argument("--ood", required=True)
    o.add_argument("--train-fraction", type=float, default=0.8)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--learning-rate", type=float, default=BowConfig.learning_rate)
    o.add_argument("--epochs", type=int, default=BowConfig.epochs)
    o.add_argument("--l2", type=float, default=BowConfig.l2)
    o.add_argument("--min-count", type=int, default=BowConfig.min_token_count)
    o.add_argument("--out", required=True)
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except ScoreFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        name = getattr(exc, "filename", None)
        print(f"error: {exc.strerror or exc}{f': {name}' if name else ''}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
