import numpy as np
import pytest

from swapbert.evaluation import Metrics, evaluate, evaluate_params
from swapbert.model import init_parameters
from swapbert.training import TrainingConfig, init_scratch, train
from swapbert.wordpiece import SPECIAL_TOKENS, Vocabulary


def toy_vocab(size):
    return Vocabulary(list(SPECIAL_TOKENS) + [f"t{i}" for i in range(size - 5)])


@pytest.fixture(scope="module")
def memorized(toy_config, small_instances):
    """A model trained to memorize 24 instances, plus those instances."""
    data = small_instances[:24]
    tcfg = TrainingConfig(
        steps=1500, batch_size=8, learning_rate=5e-4, warmup_steps=50, seed=1
    )
    trained, _ = train(
        init_scratch(toy_config, toy_vocab(toy_config.vocab_size), 1), data, tcfg
    )
    return trained, data


class TestMetrics:
    def test_accuracy_bounds_enforced(self):
        with pytest.raises(ValueError):
            Metrics(1.2, 0.5, 1.0, 1.0, 10, 10)

    def test_as_dict_fields(self):
        m = Metrics(0.5, 0.5, 1.0, 0.5, 10, 20)
        assert set(m.as_dict()) == {
            "mlm_accuracy",
            "nsp_accuracy",
            "mlm_loss",
            "nsp_loss",
            "instance_count",
            "masked_position_count",
        }


class TestEvaluate:
    def test_empty_set_errors(self, toy_config):
        ck = init_scratch(toy_config, toy_vocab(toy_config.vocab_size), 0)
        with pytest.raises(ValueError, match="empty"):
            evaluate(ck, [])

    def test_out_of_range_ids_rejected(self, toy_config, small_instances):
        small = init_scratch(
            toy_config.__class__(**{**toy_config.to_dict(), "vocab_size": 8}),
            toy_vocab(8),
            0,
        )
        with pytest.raises(ValueError, match="out of range"):
            evaluate(small, small_instances)

    def test_deterministic_and_pure(self, toy_config, small_instances):
        ck = init_scratch(toy_config, toy_vocab(toy_config.vocab_size), 0)
        a = evaluate(ck, small_instances[:64])
        b = evaluate(ck, small_instances[:64])
        assert a == b

    def test_batch_size_invariant(self, toy_config, small_instances):
        # sharding the instance stream must not change the reduction
        ck = init_scratch(toy_config, toy_vocab(toy_config.vocab_size), 0)
        a = evaluate(ck, small_instances[:60], batch_size=7)
        b = evaluate(ck, small_instances[:60], batch_size=60)
        assert a.mlm_accuracy == b.mlm_accuracy
        assert a.nsp_accuracy == b.nsp_accuracy
        assert a.mlm_loss == pytest.approx(b.mlm_loss, rel=1e-5)

    def test_counts(self, toy_config, small_instances):
        ck = init_scratch(toy_config, toy_vocab(toy_config.vocab_size), 0)
        subset = small_instances[:40]
        m = evaluate(ck, subset)
        assert m.instance_count == 40
        assert m.masked_position_count == sum(len(i.masked_positions) for i in subset)

    def test_untrained_model_near_chance(self, toy_config, small_instances):
        ck = init_scratch(toy_config, toy_vocab(toy_config.vocab_size), 3)
        m = evaluate(ck, small_instances)
        v = toy_config.vocab_size
        assert m.mlm_accuracy <= 10 * 2 / v
        assert 0.3 <= m.nsp_accuracy <= 0.7

    def test_overfit_model_scores_high(self, memorized, small_instances):
        trained, data = memorized
        m = evaluate(trained, data)
        assert m.mlm_accuracy >= 0.9
        assert m.nsp_accuracy >= 0.9

    def test_accuracy_one_implies_every_label_argmax(self, toy_config, memorized):
        # checked directly on the argmax definition, not through the loss
        from swapbert.model import Batch, forward, wrap_parameters

        trained, data = memorized
        m = evaluate(trained, data)
        assert m.mlm_accuracy == 1.0
        params = wrap_parameters(trained.params, requires_grad=False)
        batch = Batch.from_instances(data)
        mlm_logits, _ = forward(params, toy_config, batch)
        predictions = np.argmax(mlm_logits.data, axis=-1)
        real = batch.masked_weights > 0
        assert (predictions[real] == batch.masked_labels[real]).all()
