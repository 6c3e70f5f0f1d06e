"""Text tables and machine-readable key-value report files.

The table layouts mirror the usual accuracy summary (Model | MLM | NSP)
and corpus summary (Corpus | Sentence Count | Word Count). The key-value
format is one `metric.<model>.<field>=<value>` line per metric field and
`corpus.<name>.<field>=<value>` per corpus column.
"""

from __future__ import annotations

from .corpus import CorpusStats
from .evaluation import Metrics


def _render_table(header: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in header]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = []
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines.append(fmt.format(*header).rstrip())
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append(fmt.format(*row).rstrip())
    return "\n".join(lines)


def metrics_table(model_metrics: list[tuple[str, Metrics | None]]) -> str:
    rows = []
    for name, metrics in model_metrics:
        if metrics is None:
            rows.append([name, "failed", "failed"])
        else:
            rows.append([name, f"{metrics.mlm_accuracy:.2f}", f"{metrics.nsp_accuracy:.2f}"])
    return _render_table(["Model", "MLM", "NSP"], rows)


def stats_table(corpus_stats: list[tuple[str, CorpusStats]]) -> str:
    rows = [
        [name, f"{stats.sentence_count:,}", f"{stats.word_count:,}"]
        for name, stats in corpus_stats
    ]
    return _render_table(["Corpus", "Sentence Count", "Word Count"], rows)


def render_report(
    model_metrics: list[tuple[str, Metrics | None]],
    corpus_stats: list[tuple[str, CorpusStats]] | None = None,
    notes: list[str] | None = None,
) -> str:
    """Human-readable report; accuracies are shown to two decimals."""
    if not model_metrics and not corpus_stats:
        raise ValueError("nothing to report")
    sections = []
    if model_metrics:
        sections.append(metrics_table(model_metrics))
    if corpus_stats:
        sections.append(stats_table(corpus_stats))
    if notes:
        sections.append("\n".join(notes))
    return "\n\n".join(sections) + "\n"


def _format_value(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def key_value_lines(
    model_metrics: list[tuple[str, Metrics | None]],
    corpus_stats: list[tuple[str, CorpusStats]] | None = None,
    extra: dict[str, object] | None = None,
) -> list[str]:
    lines = []
    for name, metrics in model_metrics:
        if metrics is None:
            lines.append(f"metric.{name}.status=failed")
            continue
        for field_name, value in metrics.as_dict().items():
            lines.append(f"metric.{name}.{field_name}={_format_value(value)}")
    for name, stats in corpus_stats or []:
        lines.append(f"corpus.{name}.sentence_count={stats.sentence_count}")
        lines.append(f"corpus.{name}.word_count={stats.word_count}")
    for key, value in (extra or {}).items():
        lines.append(f"{key}={_format_value(value)}")
    return lines


def write_key_value_file(path: str, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for line in lines:
            f.write(line + "\n")
