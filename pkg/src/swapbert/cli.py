"""Command-line umbrella for the whole pipeline.

Subcommands: clean, stats, train-vocab, build-data, pretrain, swap-vocab,
evaluate, compare-regimes, gradient-check, gen-synthetic. Global flags
--seed, --threads and --deterministic apply to every subcommand
(--deterministic pins the math libraries to one thread). On failure the
tool prints a single line `error:<category>: <message>` to stderr and
exits nonzero.

Thread environment variables must be set before numpy is first imported,
so all heavy imports in this module happen inside the handlers.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

_THREAD_ENV_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def _apply_thread_limits(argv: list[str]) -> None:
    threads = None
    if "--deterministic" in argv:
        threads = 1
    if "--threads" in argv:
        i = argv.index("--threads")
        if i + 1 < len(argv):
            try:
                threads = int(argv[i + 1])
            except ValueError:
                pass  # argparse reports the usage error later
    if threads is not None and threads >= 1:
        for var in _THREAD_ENV_VARS:
            os.environ[var] = str(threads)


def _error_category(exc: BaseException) -> str:
    from .checkpoint import CheckpointFormatError
    from .model import NonFiniteActivationError
    from .training import NonFiniteLossError
    from .wordpiece import VocabFormatError

    if isinstance(exc, (VocabFormatError, CheckpointFormatError, json.JSONDecodeError)):
        return "format"
    if isinstance(exc, (NonFiniteLossError, NonFiniteActivationError, ArithmeticError)):
        return "numeric"
    if isinstance(exc, (FileNotFoundError, NotADirectoryError, PermissionError, OSError)):
        return "io"
    if isinstance(exc, ValueError):
        return "data"
    return "internal"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swapbert",
        description="Bilingual pretraining pipeline: corpus cleaning, WordPiece "
        "vocabularies, MLM/NSP data generation, encoder pretraining, and "
        "vocabulary-swap transfer.",
    )
    parser.add_argument("--seed", type=int, default=0, help="global random seed")
    parser.add_argument("--threads", type=int, default=0, help="worker/BLAS threads (0 = library default)")
    parser.add_argument(
        "--deterministic",
        action="store_true",
        help="force single-threaded, run-to-run identical execution",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("clean", help="clean raw text files")
    p.add_argument("--profile", choices=["latin", "latin+urdu"], default="latin")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", dest="out_dir", required=True)

    p = sub.add_parser("stats", help="corpus statistics of cleaned files")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", dest="out_file", default=None, help="key-value output file")

    p = sub.add_parser("train-vocab", help="train a fixed-size WordPiece vocabulary")
    p.add_argument("--size", type=int, default=30522)
    p.add_argument("--min-freq", type=int, default=2)
    p.add_argument("--lowercase", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", dest="out_file", required=True)

    p = sub.add_parser("build-data", help="generate MLM/NSP pretraining shards")
    p.add_argument("--vocab", required=True)
    p.add_argument("--max-seq", type=int, default=128)
    p.add_argument("--mask-prob", type=float, default=0.15)
    p.add_argument("--max-pred", type=int, default=20)
    p.add_argument("--dupe", type=int, default=5)
    p.add_argument("--holdout", type=float, default=0.02)
    p.add_argument("--shard-size", type=int, default=1000)
    p.add_argument("--lowercase", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", dest="out_dir", required=True)

    p = sub.add_parser("pretrain", help="pretrain from scratch or a checkpoint")
    p.add_argument("--from", dest="start", required=True, help="'scratch' or a checkpoint dir")
    p.add_argument("--data", required=True, help="directory of training shards")
    p.add_argument("--steps", type=int, default=10000)
    p.add_argument("--lr", type=float, default=2e-5)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--warmup", type=int, default=1000)
    p.add_argument("--eval-data", default=None, help="directory of eval shards")
    p.add_argument("--eval-every", type=int, default=0)
    p.add_argument("--vocab", default=None, help="vocab file (scratch only)")
    p.add_argument("--model-config", default=None, help="model config json (scratch only)")
    p.add_argument("--out", dest="out_dir", required=True)
    p.add_argument("--history", default=None, help="optional loss-history output file")

    p = sub.add_parser("swap-vocab", help="replace a checkpoint's vocabulary")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--policy", choices=["positional", "aligned"], default="positional")
    p.add_argument("--out", dest="out_dir", required=True)

    p = sub.add_parser("evaluate", help="MLM/NSP metrics on held-out shards")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", dest="out_file", default=None)
    p.add_argument("--name", default="model", help="model name used in report keys")

    p = sub.add_parser("compare-regimes", help="scratch vs transfer comparison")
    p.add_argument("--config", default=None, help="json config; defaults when omitted")
    p.add_argument("--out", dest="out_dir", required=True)

    p = sub.add_parser("gradient-check", help="finite-difference gradient verification")
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--vocab-size", type=int, default=128)
    p.add_argument("--max-positions", type=int, default=64)
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-4)

    p = sub.add_parser("gen-synthetic", help="generate a synthetic cleaned corpus")
    p.add_argument("--out", dest="out_file", required=True)
    p.add_argument("--name", default="synthetic")
    p.add_argument("--words", type=int, default=300)
    p.add_argument("--sentences", type=int, default=2000)
    p.add_argument("--overlap", type=float, default=0.0)
    p.add_argument("--parent", default=None, help="cleaned file/dir the overlap is drawn from")
    return parser


def _cmd_clean(args) -> int:
    from .corpus import clean_directory, get_profile

    threads = max(1, args.threads)
    stats = clean_directory(args.in_dir, args.out_dir, get_profile(args.profile), threads)
    print(f"cleaned {stats.sentence_count:,} sentences / {stats.word_count:,} words")
    return 0


def _cmd_stats(args) -> int:
    from .corpus import CorpusStats, stats_by_file
    from .report import stats_table, write_key_value_file

    per_file = stats_by_file(args.in_dir)
    total = CorpusStats()
    for stats in per_file.values():
        total = total + stats
    rows = sorted(per_file.items()) + [("TOTAL", total)]
    print(stats_table(rows))
    if args.out_file:
        lines = []
        for name, stats in rows:
            lines.append(f"corpus.{name}.sentence_count={stats.sentence_count}")
            lines.append(f"corpus.{name}.word_count={stats.word_count}")
        write_key_value_file(args.out_file, lines)
    return 0


def _cmd_train_vocab(args) -> int:
    from .corpus import load_clean_corpus
    from .wordpiece import TokenizerConfig, save_vocab, train_vocab

    corpus = load_clean_corpus(args.in_dir)
    cfg = TokenizerConfig(
        target_size=args.size, lowercase=args.lowercase, min_frequency=args.min_freq
    )
    vocab = train_vocab(corpus, cfg)
    save_vocab(vocab, args.out_file)
    print(f"wrote {len(vocab)} tokens to {args.out_file}")
    return 0


def _cmd_build_data(args) -> int:
    from .corpus import list_text_files
    from .datagen import (
        DataGenParams,
        build_documents,
        create_instances,
        split_holdout,
        write_shards,
    )
    from .wordpiece import TokenizerConfig, load_vocab

    vocab = load_vocab(args.vocab)
    tok_cfg = TokenizerConfig(
        target_size=len(vocab), lowercase=args.lowercase, min_frequency=1
    )
    params = DataGenParams(
        max_seq_length=args.max_seq,
        masked_lm_prob=args.mask_prob,
        max_predictions_per_seq=args.max_pred,
        dupe_factor=args.dupe,
        holdout_fraction=args.holdout,
        seed=args.seed,
        shard_size=args.shard_size,
    )
    documents = build_documents(list_text_files(args.in_dir), vocab, tok_cfg)
    instances = create_instances(documents, vocab, params)
    train, held = split_holdout(instances, params.holdout_fraction, params.seed)
    train_paths = write_shards(train, os.path.join(args.out_dir, "train"), params.shard_size)
    eval_paths = write_shards(held, os.path.join(args.out_dir, "eval"), params.shard_size)
    print(
        f"wrote {len(train)} train instances in {len(train_paths)} shards, "
        f"{len(held)} eval instances in {len(eval_paths)} shards"
    )
    return 0


def _cmd_pretrain(args) -> int:
    from .checkpoint import load_checkpoint, save_checkpoint
    from .datagen import read_shards
    from .model import ModelConfig
    from .training import NonFiniteLossError, TrainingConfig, init_scratch, train
    from .wordpiece import load_vocab

    data = read_shards(args.data)
    eval_data = read_shards(args.eval_data) if args.eval_data else None
    if args.start == "scratch":
        if not args.vocab or not args.model_config:
            raise ValueError("--from scratch requires --vocab and --model-config")
        with open(args.model_config, "r", encoding="utf-8") as f:
            cfg = ModelConfig.from_dict(json.load(f))
        start = init_scratch(cfg, load_vocab(args.vocab), args.seed)
    else:
        start = load_checkpoint(args.start)
    tcfg = TrainingConfig(
        steps=args.steps,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        warmup_steps=min(args.warmup, args.steps),
        seed=args.seed,
        eval_every=args.eval_every,
    )
    try:
        trained, history = train(start, data, tcfg, eval_data=eval_data)
    except NonFiniteLossError as exc:
        save_checkpoint(exc.checkpoint, args.out_dir)
        raise
    save_checkpoint(trained, args.out_dir)
    if args.history:
        with open(args.history, "w", encoding="utf-8") as f:
            for record in history:
                f.write(
                    f"{record.step}\t{record.total_loss:.6f}\t"
                    f"{record.mlm_loss:.6f}\t{record.nsp_loss:.6f}\n"
                )
    if history:
        last = history[-1]
        print(
            f"trained {len(history)} steps; final loss total={last.total_loss:.4f} "
            f"mlm={last.mlm_loss:.4f} nsp={last.nsp_loss:.4f}"
        )
    else:
        print("trained 0 steps; checkpoint copied unchanged")
    return 0


def _cmd_swap_vocab(args) -> int:
    from .checkpoint import load_checkpoint, save_checkpoint
    from .swap import swap_vocabulary
    from .wordpiece import load_vocab

    ck = load_checkpoint(args.ckpt)
    swapped = swap_vocabulary(ck, load_vocab(args.vocab), args.policy, seed=args.seed)
    save_checkpoint(swapped, args.out_dir)
    print(f"swapped vocabulary with policy={args.policy} into {args.out_dir}")
    return 0


def _cmd_evaluate(args) -> int:
    from .checkpoint import load_checkpoint
    from .datagen import read_shards
    from .evaluation import evaluate
    from .report import key_value_lines, metrics_table, write_key_value_file

    ck = load_checkpoint(args.ckpt)
    metrics = evaluate(ck, read_shards(args.data))
    print(metrics_table([(args.name, metrics)]))
    lines = key_value_lines([(args.name, metrics)])
    if args.out_file:
        write_key_value_file(args.out_file, lines)
    else:
        for line in lines:
            print(line)
    return 0


def _cmd_compare_regimes(args) -> int:
    from .regimes import RegimeComparisonConfig, run_regime_comparison

    if args.config:
        with open(args.config, "r", encoding="utf-8") as f:
            cfg = RegimeComparisonConfig.from_dict(json.load(f))
    else:
        cfg = RegimeComparisonConfig()
    report = run_regime_comparison(cfg, out_dir=args.out_dir, log=print)
    print(report.render_text())
    return 0


def _cmd_gradient_check(args) -> int:
    from .gradcheck import gradient_check
    from .model import ModelConfig

    cfg = ModelConfig(
        num_layers=args.layers,
        hidden_size=args.hidden,
        num_heads=args.heads,
        vocab_size=args.vocab_size,
        max_positions=args.max_positions,
        dropout_prob=0.0,
    )
    worst = gradient_check(cfg, seed=args.seed, epsilon=args.epsilon)
    print(f"metric.gradient_check.max_relative_error={worst!r}")
    if worst >= args.tolerance:
        raise ArithmeticError(
            f"max relative error {worst:.3e} exceeds tolerance {args.tolerance:.3e}"
        )
    return 0


def _cmd_gen_synthetic(args) -> int:
    from .corpus import load_clean_corpus, write_corpus_file
    from .synthetic import SyntheticLanguageSpec, gen_synthetic_corpus

    parent = load_clean_corpus(args.parent) if args.parent else None
    spec = SyntheticLanguageSpec(
        name=args.name,
        word_types=args.words,
        sentence_count=args.sentences,
        overlap_fraction=args.overlap,
    )
    corpus = gen_synthetic_corpus(spec, seed=args.seed, parent=parent)
    write_corpus_file(corpus, args.out_file)
    print(f"wrote {len(corpus)} sentences to {args.out_file}")
    return 0


_HANDLERS = {
    "clean": _cmd_clean,
    "stats": _cmd_stats,
    "train-vocab": _cmd_train_vocab,
    "build-data": _cmd_build_data,
    "pretrain": _cmd_pretrain,
    "swap-vocab": _cmd_swap_vocab,
    "evaluate": _cmd_evaluate,
    "compare-regimes": _cmd_compare_regimes,
    "gradient-check": _cmd_gradient_check,
    "gen-synthetic": _cmd_gen_synthetic,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    _apply_thread_limits(argv)
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except BrokenPipeError:
        return 0
    except Exception as exc:
        print(f"error:{_error_category(exc)}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
