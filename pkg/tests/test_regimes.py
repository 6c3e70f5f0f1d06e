import os

import pytest

from swapbert.evaluation import Metrics
from swapbert.model import ModelConfig
from swapbert.regimes import (
    ComparisonReport,
    RegimeComparisonConfig,
    _median_metrics,
    run_regime_comparison,
)

TINY = RegimeComparisonConfig(
    model=ModelConfig(
        num_layers=1, hidden_size=16, num_heads=2, vocab_size=96,
        max_positions=32, dropout_prob=0.0,
    ),
    steps=12,
    parent_steps=24,
    batch_size=4,
    warmup_steps=2,
    seeds=(0, 1),
    source_sentences=300,
    target_sentences=300,
    word_types=40,
    max_seq_length=24,
    max_predictions_per_seq=4,
    dupe_factor=1,
    holdout_fraction=0.1,
)


def metrics(mlm, nsp):
    return Metrics(mlm, nsp, 1.0, 0.5, 10, 50)


class TestMedians:
    def test_median_of_odd_set(self):
        got = _median_metrics([metrics(0.1, 0.5), metrics(0.3, 0.7), metrics(0.2, 0.6)])
        assert got.mlm_accuracy == pytest.approx(0.2)
        assert got.nsp_accuracy == pytest.approx(0.6)

    def test_empty_gives_none(self):
        assert _median_metrics([]) is None


class TestConfig:
    def test_roundtrip_dict(self):
        back = RegimeComparisonConfig.from_dict(TINY.to_dict())
        assert back == TINY

    def test_needs_three_extra_languages(self):
        with pytest.raises(ValueError, match="3"):
            RegimeComparisonConfig(extra_languages=2)

    def test_needs_seeds(self):
        with pytest.raises(ValueError, match="seed"):
            RegimeComparisonConfig(seeds=())


class TestRunComparison:
    @pytest.fixture(scope="class")
    def report(self, tmp_path_factory):
        out = tmp_path_factory.mktemp("cmp")
        return run_regime_comparison(TINY, out_dir=str(out)), out

    def test_all_cells_present(self, report):
        rep, _out = report
        for key in ("scratch", "multilingual", "bilingual"):
            assert set(rep.per_seed[key]) == {0, 1}
            for cell in rep.per_seed[key].values():
                assert cell is None or isinstance(cell, Metrics)

    def test_medians_computed(self, report):
        rep, _out = report
        assert set(rep.medians) == {"scratch", "multilingual", "bilingual"}
        assert all(m is not None for m in rep.medians.values())

    def test_report_files_written(self, report):
        _rep, out = report
        assert (out / "report.txt").exists()
        assert (out / "report.kv").exists()
        text = (out / "report.txt").read_text(encoding="utf-8")
        assert "Scratch" in text
        assert "Simulated multilingual" in text
        assert "Bilingual" in text
        assert "Corpus" in text

    def test_key_value_format(self, report):
        _rep, out = report
        lines = (out / "report.kv").read_text(encoding="utf-8").splitlines()
        keys = {line.split("=", 1)[0] for line in lines}
        assert "metric.scratch.mlm_accuracy" in keys
        assert "metric.bilingual.nsp_accuracy" in keys
        assert "metric.multilingual.seed0.mlm_accuracy" in keys
        assert "run.steps" in keys
        for line in lines:
            assert "=" in line

    def test_eval_sets_identical_across_regimes(self, report):
        # every regime reports metrics over the same held-out instances
        rep, _out = report
        counts = {
            key: {seed: cell.instance_count for seed, cell in cells.items() if cell}
            for key, cells in rep.per_seed.items()
        }
        assert counts["scratch"] == counts["multilingual"] == counts["bilingual"]

    def test_zero_overlap_control_report_well_formed(self):
        cfg = RegimeComparisonConfig.from_dict({**TINY.to_dict(), "overlap_fraction": 0.0})
        rep = run_regime_comparison(cfg)
        assert all(m is not None for m in rep.medians.values())
        text = rep.render_text()
        assert "overlap=0.0" in text
        for line in rep.key_values():
            assert "=" in line

    def test_failed_regime_marked_not_raised(self, monkeypatch, tmp_path):
        import swapbert.regimes as regimes_mod

        original = regimes_mod.swap_vocabulary

        def broken(*args, **kwargs):
            raise RuntimeError("boom")

        monkeypatch.setattr(regimes_mod, "swap_vocabulary", broken)
        rep = run_regime_comparison(TINY)
        assert all(cell is None for cell in rep.per_seed["bilingual"].values())
        assert all(cell is None for cell in rep.per_seed["multilingual"].values())
        assert all(cell is not None for cell in rep.per_seed["scratch"].values())
        assert rep.medians["bilingual"] is None
        text = rep.render_text()
        assert "failed" in text
