"""The three-regime pretraining comparison on synthetic language pairs.

Per seed, a target-language model is produced three ways with equal step
budgets: (i) from scratch, (ii) additional pretraining of a checkpoint
pretrained on the source language after a vocabulary swap, and (iii) the
same starting from a simulated multilingual checkpoint, pretrained on the
source language mixed with several extra synthetic languages under the
same total budget. All three are scored on the same held-out split of the
target-language pretraining data; the report carries per-seed numbers and
per-regime medians.

The source and mixture parent checkpoints are each trained once and reused
by every seed, the way a single published pretrained model would be; the
per-seed randomness covers target-language initialization, masking, and
batch order.
"""

from __future__ import annotations

import os
import statistics
import time
from dataclasses import dataclass, field

from .corpus import CleanCorpus, corpus_stats
from .datagen import (
    DataGenParams,
    create_instances,
    documents_from_corpus,
    split_holdout,
)
from .evaluation import Metrics, evaluate
from .model import ModelConfig
from .report import key_value_lines, render_report, write_key_value_file
from .swap import POLICY_POSITIONAL, swap_vocabulary
from .synthetic import SyntheticLanguageSpec, gen_synthetic_corpus
from .training import TrainingConfig, init_scratch, train
from .wordpiece import TokenizerConfig, train_vocab

REGIME_SCRATCH = ("scratch", "Scratch")
REGIME_MULTILINGUAL = ("multilingual", "Simulated multilingual")
REGIME_BILINGUAL = ("bilingual", "Bilingual")


@dataclass(frozen=True)
class RegimeComparisonConfig:
    # A near-character vocabulary: both languages share the alphabet, so
    # the (sorted) character tokens land on identical ids and the positional
    # swap carries subword knowledge across; shared words then behave alike
    # in both languages and the transferred body can exploit them.
    model: ModelConfig = field(
        default_factory=lambda: ModelConfig(
            num_layers=2,
            hidden_size=64,
            num_heads=2,
            vocab_size=58,
            max_positions=64,
            dropout_prob=0.0,
        )
    )
    steps: int = 5000
    # The two parents play the role of published pretrained checkpoints:
    # their pretraining is not part of the compared per-regime budget, so
    # they train longer (both parents get the same total budget).
    parent_steps: int = 20000
    batch_size: int = 16
    warmup_steps: int = 200
    additional_lr: float = 2e-5
    scratch_lr: float = 1e-4
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    overlap_fraction: float = 0.5
    extra_languages: int = 3
    swap_policy: str = POLICY_POSITIONAL
    corpus_seed: int = 2024
    source_sentences: int = 6000
    target_sentences: int = 6000
    word_types: int = 150
    max_seq_length: int = 48
    masked_lm_prob: float = 0.15
    max_predictions_per_seq: int = 8
    dupe_factor: int = 2
    holdout_fraction: float = 0.1
    min_target_frequency: int = 1

    def __post_init__(self) -> None:
        if self.extra_languages < 3:
            raise ValueError("the simulated multilingual mixture needs >= 3 extra languages")
        if not self.seeds:
            raise ValueError("at least one seed is required")

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "model"}
        d["seeds"] = list(self.seeds)
        d["model"] = self.model.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RegimeComparisonConfig":
        d = dict(d)
        if "model" in d:
            d["model"] = ModelConfig.from_dict(d["model"])
        if "seeds" in d:
            d["seeds"] = tuple(d["seeds"])
        return cls(**d)


@dataclass
class ComparisonReport:
    per_seed: dict[str, dict[int, Metrics | None]]
    medians: dict[str, Metrics | None]
    corpus_summary: list[tuple[str, object]]
    config: RegimeComparisonConfig
    notes: list[str] = field(default_factory=list)

    def regime_rows(self) -> list[tuple[str, Metrics | None]]:
        order = [REGIME_SCRATCH, REGIME_MULTILINGUAL, REGIME_BILINGUAL]
        return [(label, self.medians.get(key)) for key, label in order]

    def render_text(self) -> str:
        lines = list(self.notes)
        for key, _label in (REGIME_SCRATCH, REGIME_MULTILINGUAL, REGIME_BILINGUAL):
            per_seed = self.per_seed.get(key, {})
            for seed, metrics in sorted(per_seed.items()):
                if metrics is None:
                    lines.append(f"seed {seed} {key}: failed")
                else:
                    lines.append(
                        f"seed {seed} {key}: mlm={metrics.mlm_accuracy:.3f} "
                        f"nsp={metrics.nsp_accuracy:.3f}"
                    )
        return render_report(self.regime_rows(), self.corpus_summary, notes=lines)

    def key_values(self) -> list[str]:
        extra: dict[str, object] = {
            "run.steps": self.config.steps,
            "run.seeds": ",".join(str(s) for s in self.config.seeds),
            "run.overlap_fraction": self.config.overlap_fraction,
            "run.swap_policy": self.config.swap_policy,
        }
        rows = [(key, self.medians.get(key)) for key, _label in
                (REGIME_SCRATCH, REGIME_MULTILINGUAL, REGIME_BILINGUAL)]
        for key, per_seed in self.per_seed.items():
            for seed, metrics in sorted(per_seed.items()):
                if metrics is None:
                    extra[f"metric.{key}.seed{seed}.status"] = "failed"
                else:
                    extra[f"metric.{key}.seed{seed}.mlm_accuracy"] = metrics.mlm_accuracy
                    extra[f"metric.{key}.seed{seed}.nsp_accuracy"] = metrics.nsp_accuracy
        return key_value_lines(rows, self.corpus_summary, extra=extra)


def _median_metrics(values: list[Metrics]) -> Metrics | None:
    if not values:
        return None
    return Metrics(
        mlm_accuracy=statistics.median(m.mlm_accuracy for m in values),
        nsp_accuracy=statistics.median(m.nsp_accuracy for m in values),
        mlm_loss=statistics.median(m.mlm_loss for m in values),
        nsp_loss=statistics.median(m.nsp_loss for m in values),
        instance_count=min(m.instance_count for m in values),
        masked_position_count=min(m.masked_position_count for m in values),
    )


def _datagen_params(cfg: RegimeComparisonConfig, seed: int, holdout: float) -> DataGenParams:
    return DataGenParams(
        max_seq_length=cfg.max_seq_length,
        masked_lm_prob=cfg.masked_lm_prob,
        max_predictions_per_seq=cfg.max_predictions_per_seq,
        dupe_factor=cfg.dupe_factor,
        holdout_fraction=holdout,
        seed=seed,
    )


def _train_cfg(
    cfg: RegimeComparisonConfig, lr: float, seed: int, steps: int | None = None
) -> TrainingConfig:
    steps = cfg.steps if steps is None else steps
    return TrainingConfig(
        steps=steps,
        batch_size=cfg.batch_size,
        learning_rate=lr,
        warmup_steps=min(cfg.warmup_steps, steps),
        seed=seed,
    )


def run_regime_comparison(
    cfg: RegimeComparisonConfig,
    corpus_a: CleanCorpus | None = None,
    corpus_b: CleanCorpus | None = None,
    out_dir: str | None = None,
    log=None,
) -> ComparisonReport:
    """Run all regimes over all seeds and summarize with per-regime medians.

    corpus_a (source) and corpus_b (target, sharing cfg.overlap_fraction of
    its word types with the source) are generated synthetically when not
    supplied. A failed training run marks that (regime, seed) cell as
    failed instead of aborting the comparison.
    """
    say = log or (lambda message: None)
    tok_cfg = TokenizerConfig(
        target_size=cfg.model.vocab_size,
        lowercase=True,
        min_frequency=cfg.min_target_frequency,
    )

    if corpus_a is None:
        corpus_a = gen_synthetic_corpus(
            SyntheticLanguageSpec(
                name="source",
                word_types=cfg.word_types,
                sentence_count=cfg.source_sentences,
            ),
            seed=cfg.corpus_seed,
        )
    if corpus_b is None:
        corpus_b = gen_synthetic_corpus(
            SyntheticLanguageSpec(
                name="target",
                word_types=cfg.word_types,
                overlap_fraction=cfg.overlap_fraction,
                sentence_count=cfg.target_sentences,
            ),
            seed=cfg.corpus_seed + 1,
            parent=corpus_a,
        )

    mixture_sentences: list[str] = list(corpus_a.sentences)
    mixture_provenance: list[str] = [f"source::{p}" for p in corpus_a.provenance]
    extra_count = max(1, cfg.source_sentences // (cfg.extra_languages + 1))
    for lang_index in range(cfg.extra_languages):
        extra = gen_synthetic_corpus(
            SyntheticLanguageSpec(
                name=f"extra{lang_index}",
                word_types=cfg.word_types,
                sentence_count=extra_count,
            ),
            seed=cfg.corpus_seed + 10 + lang_index,
        )
        mixture_sentences.extend(extra.sentences)
        mixture_provenance.extend(f"extra{lang_index}::{p}" for p in extra.provenance)
    mixture = CleanCorpus(mixture_sentences, mixture_provenance)

    vocab_a = train_vocab(corpus_a, tok_cfg)
    vocab_b = train_vocab(corpus_b, tok_cfg)
    vocab_mix = train_vocab(mixture, tok_cfg)

    docs_a = documents_from_corpus(corpus_a, vocab_a, tok_cfg)
    docs_b = documents_from_corpus(corpus_b, vocab_b, tok_cfg)
    docs_mix = documents_from_corpus(mixture, vocab_mix, tok_cfg)

    # Parent checkpoints, trained once at the scratch learning rate with an
    # equal (longer) budget each, then reused by every seed.
    parent_seed = cfg.corpus_seed + 999
    started = time.time()
    data_a = create_instances(docs_a, vocab_a, _datagen_params(cfg, parent_seed, 0.0))
    parent_bi, _ = train(
        init_scratch(cfg.model, vocab_a, parent_seed),
        data_a,
        _train_cfg(cfg, cfg.scratch_lr, parent_seed, steps=cfg.parent_steps),
        metadata={"regime": "bilingual-parent"},
    )
    say(f"source parent trained ({time.time() - started:.0f}s)")
    started = time.time()
    data_mix = create_instances(docs_mix, vocab_mix, _datagen_params(cfg, parent_seed + 1, 0.0))
    parent_multi, _ = train(
        init_scratch(cfg.model, vocab_mix, parent_seed + 1),
        data_mix,
        _train_cfg(cfg, cfg.scratch_lr, parent_seed + 1, steps=cfg.parent_steps),
        metadata={"regime": "multilingual-parent"},
    )
    say(f"mixture parent trained ({time.time() - started:.0f}s)")

    per_seed: dict[str, dict[int, Metrics | None]] = {
        key: {} for key, _label in (REGIME_SCRATCH, REGIME_MULTILINGUAL, REGIME_BILINGUAL)
    }
    for seed in cfg.seeds:
        train_b, eval_b = split_holdout(
            create_instances(docs_b, vocab_b, _datagen_params(cfg, seed, cfg.holdout_fraction)),
            cfg.holdout_fraction,
            seed,
        )

        def _run(regime_key: str, builder) -> None:
            started = time.time()
            try:
                metrics = builder()
            except Exception as exc:  # a failed run must not sink the comparison
                say(f"seed {seed} {regime_key}: FAILED ({exc})")
                per_seed[regime_key][seed] = None
                return
            say(
                f"seed {seed} {regime_key}: mlm={metrics.mlm_accuracy:.3f} "
                f"nsp={metrics.nsp_accuracy:.3f} ({time.time() - started:.0f}s)"
            )
            per_seed[regime_key][seed] = metrics

        def _scratch() -> Metrics:
            start = init_scratch(cfg.model, vocab_b, seed)
            trained, _hist = train(
                start, train_b, _train_cfg(cfg, cfg.scratch_lr, seed),
                metadata={"regime": "scratch"},
            )
            return evaluate(trained, eval_b)

        def _additional(parent, regime: str) -> Metrics:
            swapped = swap_vocabulary(parent, vocab_b, cfg.swap_policy, seed=seed)
            trained, _hist = train(
                swapped, train_b, _train_cfg(cfg, cfg.additional_lr, seed),
                metadata={"regime": regime},
            )
            return evaluate(trained, eval_b)

        _run("scratch", _scratch)
        _run("multilingual", lambda: _additional(parent_multi, "multilingual"))
        _run("bilingual", lambda: _additional(parent_bi, "bilingual"))

    medians = {
        key: _median_metrics([m for m in cells.values() if m is not None])
        for key, cells in per_seed.items()
    }
    summary = [
        ("source", corpus_stats(corpus_a)),
        ("target", corpus_stats(corpus_b)),
        ("mixture", corpus_stats(mixture)),
    ]
    notes = [
        "Synthetic desk-scale comparison; absolute values are not comparable "
        "to full-scale training.",
        f"budget={cfg.steps} steps per run, seeds={list(cfg.seeds)}, "
        f"overlap={cfg.overlap_fraction}, policy={cfg.swap_policy}",
    ]
    report = ComparisonReport(per_seed, medians, summary, cfg, notes)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as f:
            f.write(report.render_text())
        write_key_value_file(os.path.join(out_dir, "report.kv"), report.key_values())
    return report
