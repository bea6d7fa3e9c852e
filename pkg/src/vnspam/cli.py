"""Command line interface: train, predict, evaluate, tokenize.

This is a thin shell over the library; every piece of behavior lives in the
corpus/preprocess/features/classifiers/evaluation/pipeline modules.

Exit codes: 0 success; 1 corpus, flag or training errors; 2 malformed command
line (argparse) or an unreadable model file; 3 when predict finished but some
input lines were not valid UTF-8 (those lines print ERR and are skipped).
"""

from __future__ import annotations

import argparse
import os
import sys

from .corpus import CorpusError, load_corpus, stratified_kfold, Label
from .evaluation import reference_grid, format_table, run_grid, write_csv
from .pipeline import FittedPipeline, ModelFileError, PipelineConfig
from .preprocess import EntityRuleSet, fit_collocations, segment, tag_entities

__all__ = ["main", "run", "build_parser"]


def _add_config_flags(parser: argparse.ArgumentParser, with_classifier: bool = True) -> None:
    if with_classifier:
        model = parser.add_argument_group("model")
        model.add_argument(
            "--clf",
            dest="classifier",
            choices=["baseline", "nb", "svm", "lr", "dt", "knn"],
            default="svm",
            help="classifier kind (default: svm)",
        )
        model.add_argument(
            "--rep",
            dest="representation",
            choices=["bow", "tfidf"],
            default="bow",
            help="feature representation (default: bow)",
        )
        model.add_argument(
            "--min-df",
            type=int,
            default=3,
            help="drop terms seen in fewer than this many training messages (default: 3)",
        )
        model.add_argument(
            "--length-feature",
            action=argparse.BooleanOptionalAction,
            default=True,
            help="append the message length, in units of 160 characters, as one extra feature",
        )
        model.add_argument(
            "--preprocess",
            action=argparse.BooleanOptionalAction,
            default=True,
            help="entity tagging plus collocation segmentation (--no-preprocess: split raw text on whitespace)",
        )
        model.add_argument("--seed", type=int, default=42, help="seed for every random choice (default: 42)")
        model.add_argument("--alpha", type=float, default=1.0, help="nb additive smoothing (default: 1)")
        model.add_argument(
            "--lambda",
            dest="reg_lambda",
            type=float,
            default=1e-4,
            help="svm/lr L2 regularization strength (default: 1e-4)",
        )
        model.add_argument("--epochs", type=int, default=50, help="svm/lr passes over the data (default: 50)")
        model.add_argument("--max-depth", type=int, default=20, help="dt depth cutoff (default: 20)")
        model.add_argument("--k", type=int, default=5, help="knn neighbor count (default: 5)")

    prep = parser.add_argument_group("preprocessing")
    prep.add_argument(
        "--delta",
        dest="discount",
        type=float,
        default=5.0,
        help="discount subtracted from each pair count in the collocation score (default: 5)",
    )
    prep.add_argument(
        "--colloc-threshold",
        type=float,
        default=1e-4,
        help="minimum discounted score for a pair to merge (default: 1e-4)",
    )
    prep.add_argument(
        "--min-count",
        type=int,
        default=10,
        help="drop pairs seen fewer than this many times (default: 10)",
    )
    prep.add_argument(
        "--passes",
        type=int,
        default=1,
        help="segmentation passes; more than one can join words of 3+ syllables (default: 1)",
    )
    prep.add_argument("--rules", metavar="PATH", help="entity rules file overriding the built-in one")
    prep.add_argument(
        "--nfc",
        action="store_true",
        help="apply NFC normalization to message text before any other step",
    )


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    return PipelineConfig(
        classifier=args.classifier,
        representation=args.representation,
        preprocess=args.preprocess,
        min_df=args.min_df,
        length_feature=args.length_feature,
        seed=args.seed,
        discount=args.discount,
        colloc_threshold=args.colloc_threshold,
        min_count=args.min_count,
        passes=args.passes,
        nfc=args.nfc,
        alpha=args.alpha,
        reg_lambda=args.reg_lambda,
        epochs=args.epochs,
        max_depth=args.max_depth,
        k=args.k,
    )


def _load_rules(args: argparse.Namespace) -> EntityRuleSet | None:
    if getattr(args, "rules", None):
        return EntityRuleSet.from_file(args.rules)
    return None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vnspam",
        description="Content-based spam filter for Vietnamese SMS.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fit a model on a labeled corpus and write a model file")
    p_train.add_argument("corpus", help="TSV corpus: <label><TAB><text>, labels spam/ham")
    p_train.add_argument("-o", "--out", default="model.json", help="model file to write (default: model.json)")
    _add_config_flags(p_train)

    p_predict = sub.add_parser(
        "predict", help="read one message per line on stdin, write <label><TAB><score> per line"
    )
    p_predict.add_argument("model", help="model file written by train")

    p_eval = sub.add_parser("evaluate", help="stratified k-fold evaluation of one or more configurations")
    p_eval.add_argument("corpus", help="TSV corpus to evaluate on")
    p_eval.add_argument("--folds", type=int, default=5, help="number of folds (default: 5)")
    p_eval.add_argument(
        "--grid",
        choices=["paper"],
        help="run the built-in comparison grid instead of a single configuration",
    )
    p_eval.add_argument("--csv", metavar="PATH", help="also write per-fold rates as CSV")
    p_eval.add_argument("--jobs", type=int, default=1, help="worker processes across configurations (default: 1)")
    _add_config_flags(p_eval)

    p_tok = sub.add_parser("tokenize", help="print each message's normalized token stream")
    p_tok.add_argument("corpus", help="TSV corpus to tokenize")
    p_tok.add_argument(
        "--show-merges",
        action="store_true",
        help="list the merged collocations with their scores instead of the token streams",
    )
    _add_config_flags(p_tok, with_classifier=False)

    return parser


def cmd_train(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    config.validate()
    rules = _load_rules(args)
    corpus = load_corpus(args.corpus)
    fitted = FittedPipeline.fit(corpus.messages, config, rules)
    fitted.save(args.out)

    counts = corpus.counts
    print(
        f"corpus: {len(corpus)} messages "
        f"({counts[Label.SPAM]} spam, {counts[Label.LEGITIMATE]} ham)"
    )
    if config.classifier == "baseline":
        print("model: rule baseline (no trainable state)")
    else:
        stats = fitted.stats
        print(
            f"vocabulary: {stats.raw_terms} raw terms -> "
            f"{stats.preprocessed_terms} after preprocessing -> "
            f"{stats.selected_terms} after df >= {config.min_df}"
        )
        print(
            f"model: {config.classifier} on {config.representation} "
            f"(preprocessing {'on' if config.preprocess else 'off'}, "
            f"length feature {'on' if config.length_feature else 'off'}, "
            f"seed {config.seed})"
        )
    print(f"wrote {args.out}")
    return 0


def cmd_predict(args: argparse.Namespace, stdin=None) -> int:
    fitted = FittedPipeline.load(args.model)
    stream = stdin if stdin is not None else sys.stdin.buffer
    had_bad_lines = False
    out = sys.stdout
    while True:
        raw = stream.readline()
        if not raw:
            break
        if raw.endswith(b"\n"):
            raw = raw[:-1]
        if raw.endswith(b"\r"):
            raw = raw[:-1]
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError:
            out.write("ERR\n")
            had_bad_lines = True
            continue
        pred = fitted.predict_text(text)
        out.write(f"{pred.label.token}\t{pred.score!r}\n")
    out.flush()
    return 3 if had_bad_lines else 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    if args.folds < 2:
        raise ValueError(f"--folds must be at least 2, got {args.folds}")
    base = _config_from_args(args)
    base.validate()
    rules = _load_rules(args)
    corpus = load_corpus(args.corpus)
    folds = stratified_kfold(corpus, args.folds, seed=args.seed)
    configs = reference_grid(base) if args.grid == "paper" else [base]
    reports = run_grid(corpus, folds, configs, rules, jobs=args.jobs)
    sys.stdout.write(format_table(reports))
    if args.csv:
        write_csv(reports, args.csv)
        print(f"wrote {args.csv}")
    return 0


def cmd_tokenize(args: argparse.Namespace) -> int:
    rules = _load_rules(args)
    corpus = load_corpus(args.corpus)
    if args.passes < 1:
        raise ValueError(f"--passes must be >= 1, got {args.passes}")
    texts = [m.text for m in corpus.messages]
    if args.nfc:
        import unicodedata

        texts = [unicodedata.normalize("NFC", t) for t in texts]
    streams = [tag_entities(t, rules).split() for t in texts]
    models = []
    for _ in range(args.passes):
        cm = fit_collocations(
            streams,
            discount=args.discount,
            min_count=args.min_count,
            threshold=args.colloc_threshold,
        )
        models.append(cm)
        streams = [segment(s, cm) for s in streams]
    if args.show_merges:
        for cm in models:
            for (a, b), score in cm.merges_by_score():
                print(f"{a} {b}\t{score!r}")
    else:
        for stream in streams:
            print(" ".join(stream))
    return 0


def main(argv=None, stdin=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "train":
            return cmd_train(args)
        if args.command == "predict":
            return cmd_predict(args, stdin=stdin)
        if args.command == "evaluate":
            return cmd_evaluate(args)
        return cmd_tokenize(args)
    except ModelFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        # downstream closed the pipe (e.g. | head): die quietly, and keep the
        # interpreter's exit-time stdout flush from failing a second time
        try:
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        except (OSError, ValueError, AttributeError):
            pass
        return 1
    except (CorpusError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    raise SystemExit(main())
