"""Command-line driver: train, predict, cv, encode, gradcheck, metrics.

Exit statuses: 0 success, 1 runtime failure, 2 usage error. The effective
configuration is logged on every run (set ABSA_LOG=quiet|info|debug).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import encode, memnet, persist, textproc
from .corpus import parse_dataset
from .evaluation import (
    compute_metrics,
    render_metrics_text,
    render_report_text,
    report_to_dict,
    run_crossval,
)
from .pipeline import CLASSIC_KINDS, build_pipeline, make_config

log = logging.getLogger("absa")

MODEL_KINDS = {"nb": "nb", "dtree": "dtree", "svm": "svm",
               "rf": "rforest", "etc": "etrees", "gbt": "gboost", "memnet": "memnet"}
GRADCHECK_BOUND = 1e-4


def _add_common(p: argparse.ArgumentParser, *, model_kind: bool):
    p.add_argument("--data", required=True, help="dataset JSONL file")
    if model_kind:
        p.add_argument("--model", required=True, choices=sorted(MODEL_KINDS),
                       help="model kind")
        p.add_argument("--features", choices=["oh", "le", "tfidf", "memnet"],
                       help="feature mode (default: oh, or memnet for the memnet model)")
        p.add_argument("--embeddings", help="GloVe-style embedding text file")
        p.add_argument("--stopwords", help="stop-word file (memnet preprocessing)")
        p.add_argument("--hops", type=int, default=3, help="memnet attention hops")
        p.add_argument("--lr", type=float, default=0.01, help="memnet learning rate")
        p.add_argument("--epochs", type=int, default=100, help="memnet training epochs")
    p.add_argument("--seed", type=int, default=42)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="absa", description="Aspect-based sentiment analysis toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a pipeline and write a .absa archive")
    _add_common(p, model_kind=True)
    p.add_argument("--out", required=True, help="archive output path")
    p.add_argument("--test", help="optional test JSONL; evaluates the reloaded archive")

    p = sub.add_parser("predict", help="label instances with a trained archive")
    p.add_argument("--data", required=True, help="dataset JSONL file")
    p.add_argument("--model", required=True, help="path to a .absa archive")
    p.add_argument("--out", help="write one label per line here (default: stdout)")
    p.add_argument("--seed", type=int, default=42)

    p = sub.add_parser("cv", help="stratified k-fold cross-validation report")
    _add_common(p, model_kind=True)
    p.add_argument("--k", type=int, default=5, help="number of folds")
    p.add_argument("--out", help="write the text report here (JSON beside it)")

    p = sub.add_parser("encode", help="dump per-instance aspect encodings as JSON lines")
    p.add_argument("--data", required=True, help="dataset JSONL file")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--seed", type=int, default=42)

    p = sub.add_parser("gradcheck", help="verify memnet gradients against finite differences")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--hops", type=int, help="check a single hop count instead of 1..3")

    p = sub.add_parser("metrics", help="score a predictions file against gold labels")
    p.add_argument("--data", required=True, help="gold labels, one per line")
    p.add_argument("--test", required=True, help="predicted labels, one per line")
    p.add_argument("--out", help="write metrics JSON here")
    p.add_argument("--seed", type=int, default=42)

    return parser


def _configure_logging():
    level = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("ABSA_LOG", "info"), logging.INFO
    )
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(message)s")


def _config_from_args(parser: argparse.ArgumentParser, args: argparse.Namespace):
    model = MODEL_KINDS[args.model]
    features = args.features
    if features is None:
        features = "memnet" if model == "memnet" else "oh"
    if (model == "memnet") != (features == "memnet"):
        parser.error(f"model {args.model!r} is incompatible with feature mode {features!r}")
    stopwords = None
    if args.stopwords:
        stopwords = frozenset(textproc.load_stopwords(args.stopwords))
    mn = memnet.MemNetHyperparams(hops=args.hops, lr=args.lr, epochs=args.epochs, seed=args.seed)
    return make_config(
        model, features, seed=args.seed,
        memnet=mn, stopwords=stopwords, embeddings_path=args.embeddings,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging()
    log.info("config: %s", {k: v for k, v in sorted(vars(args).items()) if v is not None})
    try:
        return _dispatch(parser, args)
    except BrokenPipeError:
        return 1
    except Exception as exc:
        log.error("%s", exc)
        return 1


def _dispatch(parser, args) -> int:
    if args.command == "train":
        return _cmd_train(parser, args)
    if args.command == "predict":
        return _cmd_predict(args)
    if args.command == "cv":
        return _cmd_cv(parser, args)
    if args.command == "encode":
        return _cmd_encode(args)
    if args.command == "gradcheck":
        return _cmd_gradcheck(args)
    if args.command == "metrics":
        return _cmd_metrics(args)
    parser.error(f"unknown command {args.command!r}")


def _cmd_train(parser, args) -> int:
    config = _config_from_args(parser, args)
    dataset = parse_dataset(args.data)
    pipe = build_pipeline(config).fit(list(dataset))
    persist.save(pipe, args.out)
    log.info("archive written to %s", args.out)
    if args.test:
        reloaded = persist.load(args.out)
        test_set = parse_dataset(args.test)
        pred = reloaded.predict(list(test_set))
        gold = [inst.polarity for inst in test_set]
        title = f"{config.model}+{config.features}"
        sys.stdout.write(render_metrics_text(title, test_set.name, compute_metrics(gold, pred)))
    return 0


def _cmd_predict(args) -> int:
    pipe = persist.load(args.model)
    dataset = parse_dataset(args.data)
    lines = "".join(f"{label}\n" for label in pipe.predict(list(dataset)))
    if args.out:
        Path(args.out).write_text(lines, encoding="utf-8")
    else:
        sys.stdout.write(lines)
    return 0


def _cmd_cv(parser, args) -> int:
    config = _config_from_args(parser, args)
    dataset = parse_dataset(args.data)
    report = run_crossval(dataset, config, k=args.k, seed=args.seed)
    text = render_report_text(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        json_path = Path(args.out).with_suffix(Path(args.out).suffix + ".json")
        json_path.write_text(json.dumps(report_to_dict(report), indent=2) + "\n", encoding="utf-8")
        log.info("report written to %s and %s", args.out, json_path)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_encode(args) -> int:
    dataset = parse_dataset(args.data)
    tis = [textproc.tokenize_instance(inst) for inst in dataset]
    vocab = textproc.build_vocab(tis)
    aspect_ids = encode.assign_aspect_ids(tis)
    tfidf = encode.tfidf_fit(tis, vocab)
    out = []
    for ti in tis:
        fv = encode.tfidf_transform(tfidf, ti)
        record = {
            "aspect_sequence": encode.id_encode(ti, aspect_ids.id_for(ti), "per_token"),
            "bit_mask": encode.bit_mask(ti),
            "location_sequence": encode.location_encode(ti),
            "tfidf": {str(i): v for i, v in sorted(fv.values.items())},
        }
        out.append(json.dumps(record) + "\n")
    text = "".join(out)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_gradcheck(args) -> int:
    rng = np.random.default_rng(args.seed)
    dim = 8
    table = memnet.random_embeddings(vocab_size=12, dim=dim, seed=args.seed)
    hop_counts = [args.hops] if args.hops else [1, 2, 3]
    worst = 0.0
    for hops in hop_counts:
        for m in (0, 1, 5):
            for trainable in (False, True):
                params = memnet.init_params(
                    table, hops=hops, seed=int(rng.integers(0, 2**32)),
                    trainable_embeddings=trainable,
                )
                inp = memnet.MemNetInput(
                    context_ids=rng.integers(1, 13, size=m),
                    aspect_ids=rng.integers(1, 13, size=2),
                    aspect_position=0,
                    locations=rng.integers(1, m + 1, size=m),
                )
                gold = int(rng.integers(0, 3)) - 1
                err = memnet.grad_check(params, inp, gold, eps=1e-5)
                log.debug("gradcheck hops=%d m=%d trainable=%s -> %.3e", hops, m, trainable, err)
                worst = max(worst, err)
    print(f"max relative gradient error: {worst:.6e}")
    return 0 if worst < GRADCHECK_BOUND else 1


def _cmd_metrics(args) -> int:
    gold = _read_labels(args.data)
    pred = _read_labels(args.test)
    metrics = compute_metrics(gold, pred)
    sys.stdout.write(render_metrics_text("metrics", Path(args.data).stem, metrics))
    if args.out:
        from .evaluation import metrics_to_dict

        Path(args.out).write_text(
            json.dumps(metrics_to_dict(metrics), indent=2) + "\n", encoding="utf-8"
        )
    return 0


def _read_labels(path: str) -> list[int]:
    labels = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            labels.append(int(line))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: not an integer label: {line!r}") from exc
    return labels


if __name__ == "__main__":
    sys.exit(main())
