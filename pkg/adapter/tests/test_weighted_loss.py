"""Weighted-loss semantics: zero weights change nothing, loss scales with
weight, target-only supervision, embedding freezing, checkpoint round trips."""

import torch
import pytest

from lm_adapter import AdapterConfig, WeightedLmModel

PROBES = ["hello world", "the cat sat", "a b c d"]


def _snapshot(model):
    return {name: param.detach().clone() for name, param in model.model.named_parameters()}


def _params_equal(before, model):
    return all(torch.equal(before[name], param.detach())
               for name, param in model.model.named_parameters())


class TestZeroWeightInvariance:
    def test_probe_generation_unchanged_after_zero_weight_step(self, fast_config):
        model = WeightedLmModel(fast_config)
        before_out = model.generate(PROBES, beam_size=3)
        before_params = _snapshot(model)
        loss = model.train_pairs([
            {"source": "a b", "target": "X Y", "weight": 0.0},
            {"source": "c d", "target": "Z", "weight": 0.0},
        ])
        assert loss == 0.0
        assert _params_equal(before_params, model)
        assert model.generate(PROBES, beam_size=3) == before_out

    def test_learning_rate_zero_control(self, tiny_checkpoint):
        config = AdapterConfig(model=str(tiny_checkpoint), max_target_tokens=12,
                               learning_rate=0.0)
        model = WeightedLmModel(config)
        before_out = model.generate(PROBES, beam_size=3)
        before_params = _snapshot(model)
        loss = model.train_pairs([{"source": "a b", "target": "X Y", "weight": 1.0}])
        assert loss > 0.0  # the training path really ran
        assert _params_equal(before_params, model)
        assert model.generate(PROBES, beam_size=3) == before_out

    def test_real_step_actually_updates(self, fast_config):
        model = WeightedLmModel(fast_config)
        before_params = _snapshot(model)
        loss = model.train_pairs([{"source": "a b", "target": "X Y", "weight": 1.0}])
        assert loss > 0.0
        assert not _params_equal(before_params, model)


class TestLossScaling:
    def test_loss_proportional_to_weight(self, fast_config):
        pair = {"source": "a b c", "target": "out tokens"}
        full = WeightedLmModel(fast_config).train_pairs([{**pair, "weight": 1.0}])
        half = WeightedLmModel(fast_config).train_pairs([{**pair, "weight": 0.5}])
        assert half == pytest.approx(full / 2, rel=1e-5)

    def test_source_tokens_not_supervised(self, fast_config):
        # same target, radically different source length: the per-pair loss
        # counts only target positions, so it stays in the same ballpark
        short = WeightedLmModel(fast_config).train_pairs(
            [{"source": "a", "target": "xy", "weight": 1.0}])
        long = WeightedLmModel(fast_config).train_pairs(
            [{"source": "a " * 60, "target": "xy", "weight": 1.0}])
        # 3 supervised positions each (2 target bytes + eos); a fully
        # supervised source would multiply the summed loss several-fold
        assert long < short * 2


class TestFreezing:
    def test_embeddings_frozen_by_default(self, fast_config):
        model = WeightedLmModel(fast_config)
        wte_before = model.model.transformer.wte.weight.detach().clone()
        wpe_before = model.model.transformer.wpe.weight.detach().clone()
        model.train_pairs([{"source": "a b", "target": "X Y", "weight": 1.0}])
        assert torch.equal(wte_before, model.model.transformer.wte.weight.detach())
        assert torch.equal(wpe_before, model.model.transformer.wpe.weight.detach())

    def test_unfrozen_embeddings_move(self, tiny_checkpoint):
        config = AdapterConfig(model=str(tiny_checkpoint), max_target_tokens=12,
                               learning_rate=1e-2, freeze_embeddings=False)
        model = WeightedLmModel(config)
        wte_before = model.model.transformer.wte.weight.detach().clone()
        model.train_pairs([{"source": "a b", "target": "X Y", "weight": 1.0}])
        assert not torch.equal(wte_before, model.model.transformer.wte.weight.detach())


class TestGenerate:
    def test_deterministic_between_train_calls(self, fast_config):
        model = WeightedLmModel(fast_config)
        assert model.generate(PROBES, beam_size=3) == model.generate(PROBES, beam_size=3)

    def test_one_output_per_input(self, fast_config):
        model = WeightedLmModel(fast_config)
        assert len(model.generate(PROBES, beam_size=2)) == len(PROBES)

    def test_beam_size_validated(self, fast_config):
        with pytest.raises(ValueError):
            WeightedLmModel(fast_config).generate(["x"], beam_size=0)


class TestSaveLoad:
    def test_round_trip_restores_generation(self, fast_config, tmp_path):
        model = WeightedLmModel(fast_config)
        model.train_pairs([{"source": "a b", "target": "X Y", "weight": 1.0}])
        out_before = model.generate(PROBES, beam_size=3)
        model.save(tmp_path / "ckpt")
        fresh = WeightedLmModel(AdapterConfig(model=str(tmp_path / "ckpt"),
                                              max_source_tokens=128, max_target_tokens=12))
        assert fresh.generate(PROBES, beam_size=3) == out_before


class TestConfig:
    def test_budget_cap(self):
        with pytest.raises(ValueError):
            AdapterConfig(max_source_tokens=801)

    def test_negative_learning_rate_rejected(self):
        with pytest.raises(ValueError):
            AdapterConfig(learning_rate=-1e-5)

    def test_vocab_size_checked(self, tmp_path):
        from transformers import GPT2Config, GPT2LMHeadModel

        GPT2LMHeadModel(GPT2Config(vocab_size=8, n_positions=64, n_embd=8, n_layer=1,
                                   n_head=1)).save_pretrained(tmp_path / "small-vocab")
        with pytest.raises(ValueError, match="vocab"):
            WeightedLmModel(AdapterConfig(model=str(tmp_path / "small-vocab")))


class TestEdges:
    def test_empty_pair_list_is_a_no_op(self, fast_config):
        model = WeightedLmModel(fast_config)
        before = _snapshot(model)
        assert model.train_pairs([]) == 0.0
        assert _params_equal(before, model)

    def test_source_budget_enforced(self, fast_config):
        model = WeightedLmModel(fast_config)
        ids, labels = model._encode_pair("x" * 10_000, "ok")
        # bos + capped source + sep + target + eos
        assert len(ids) == 1 + fast_config.max_source_tokens + 1 + 2 + 1
        assert len(labels) == len(ids)
        supervised = [l for l in labels if l != -100]
        assert len(supervised) == 3  # two target bytes + eos
