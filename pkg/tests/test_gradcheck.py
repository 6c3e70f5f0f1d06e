import numpy as np
import pytest

from swapbert.gradcheck import gradient_check, make_probe_batch
from swapbert.model import ModelConfig, forward, init_parameters, loss, wrap_parameters


class TestGradientCheck:
    def test_toy_config_under_tolerance(self, toy_config):
        assert gradient_check(toy_config, seed=0, epsilon=1e-5) < 1e-4

    def test_second_seed_also_passes(self, toy_config):
        assert gradient_check(toy_config, seed=1, epsilon=1e-5) < 1e-4

    def test_requires_zero_dropout(self):
        cfg = ModelConfig(1, 16, 2, 32, 32, dropout_prob=0.1)
        with pytest.raises(ValueError, match="dropout"):
            gradient_check(cfg)

    def test_detects_broken_gradient(self, toy_config, monkeypatch):
        # corrupting the analytic side must blow the error up
        from swapbert import tensor as tensor_mod

        original = tensor_mod.gelu

        def broken_gelu(x):
            out = original(x)
            inner = out._backward_fn

            def wrong(grad):
                inner(grad * 1.5)

            if inner is not None:
                out._backward_fn = wrong
            return out

        monkeypatch.setattr("swapbert.model.gelu", broken_gelu)
        assert gradient_check(toy_config, seed=0, epsilon=1e-5) > 1e-2


class TestZeroInfluenceParameters:
    def test_unused_position_rows_get_zero_gradient(self, toy_config):
        # rows of the position table beyond the batch length are untouched
        arrays = init_parameters(toy_config, 3, dtype=np.float64)
        params = wrap_parameters(arrays, dtype=np.float64)
        batch = make_probe_batch(toy_config, seed=3)
        seq_len = batch.token_ids.shape[1]
        mlm_logits, nsp_logits = forward(params, toy_config, batch)
        total, _, _ = loss(mlm_logits, nsp_logits, batch)
        total.backward()
        grad = params["embeddings.position"].grad
        assert grad is not None
        assert np.all(grad[seq_len:] == 0.0)
        assert np.any(grad[:seq_len] != 0.0)

    def test_unused_segment_gradient_zero_when_single_segment(self, toy_config):
        # all-zero segment ids leave the segment-1 row with zero gradient
        arrays = init_parameters(toy_config, 3, dtype=np.float64)
        params = wrap_parameters(arrays, dtype=np.float64)
        batch = make_probe_batch(toy_config, seed=3)
        batch.segment_ids[:] = 0
        mlm_logits, nsp_logits = forward(params, toy_config, batch)
        total, _, _ = loss(mlm_logits, nsp_logits, batch)
        total.backward()
        grad = params["embeddings.segment"].grad
        assert np.all(grad[1] == 0.0)
        assert np.any(grad[0] != 0.0)
