"""Orchestration semantics: pretraining, BT/ST data flow, frozen teachers,
curriculum order, ablation shapes, and evaluation."""

import json

import pytest

from logicloom.augment import UnpairedLf, UnpairedText
from logicloom.dsl import print_lf, realize_template, sample_lf
from logicloom.jointtrain import (
    EpochReport,
    TrainConfig,
    bt_step,
    evaluate,
    finetune,
    pretrain,
    run,
    st_step,
)
from logicloom.models import Role, serialize_input
from logicloom.synth import make_corpus
from logicloom.tables import LOGIC_TYPES
from logicloom.weighting import WeightedItem

from helpers import EchoModel, SpyModel


def _corpus(n_tables=3, per_table=2, seed=5):
    return make_corpus(n_tables, per_table, seed)


def _unpaired(corpus, n_lfs=7, n_texts=5):
    tables = list(corpus.tables.values())
    lfs, texts = [], []
    seed = 0
    while len(lfs) < n_lfs:
        table = tables[len(lfs) % len(tables)]
        topic = LOGIC_TYPES[len(lfs) % len(LOGIC_TYPES)]
        try:
            ast = sample_lf(table, topic, seed=seed, depth_budget=3)
        except Exception:
            seed += 1
            continue
        lfs.append(UnpairedLf(topic, table, print_lf(ast)))
        seed += 1
    while len(texts) < n_texts:
        table = tables[len(texts) % len(tables)]
        topic = LOGIC_TYPES[(len(texts) * 2) % len(LOGIC_TYPES)]
        try:
            ast = sample_lf(table, topic, seed=seed + 100, depth_budget=3)
        except Exception:
            seed += 1
            continue
        texts.append(UnpairedText(topic, table, realize_template(ast, table)))
        seed += 1
    return lfs, texts


LF_WEIGHTS = [0.9, 0.1, 0.5, 0.7, 0.3, 1.0, 0.2]
TEXT_WEIGHTS = [0.4, 0.8, 0.2, 1.0, 0.6]


def _weighted(corpus):
    lfs, texts = _unpaired(corpus)
    return ([WeightedItem(i, w) for i, w in zip(lfs, LF_WEIGHTS)],
            [WeightedItem(i, w) for i, w in zip(texts, TEXT_WEIGHTS)])


class TestPretrain:
    def test_pair_counts_and_weights(self):
        corpus = _corpus(5, 2)
        n = len(corpus.instances)
        assert n >= 10
        l2t, lg = SpyModel(), SpyModel()
        pretrain(l2t, lg, corpus, epochs=2, seed=1)
        for spy in (l2t, lg):
            assert len(spy.trained_pairs) == 2 * n
            assert all(p.weight == 1.0 for p in spy.trained_pairs)

    def test_epoch_orders_differ(self):
        corpus = _corpus(5, 2)
        n = len(corpus.instances)
        l2t, lg = SpyModel(), SpyModel()
        pretrain(l2t, lg, corpus, epochs=2, seed=1)
        first = [p.target for p in l2t.trained_pairs[:n]]
        second = [p.target for p in l2t.trained_pairs[n:]]
        assert sorted(first) == sorted(second)
        assert first != second

    def test_l2t_and_lg_pair_construction(self):
        corpus = _corpus(2, 1)
        l2t, lg = SpyModel(), SpyModel()
        pretrain(l2t, lg, corpus, epochs=1, seed=1)
        instances = {i.text: i for i in corpus.instances}
        for pair in l2t.trained_pairs:
            inst = instances[pair.target]
            assert pair.source == serialize_input(Role.L2T, inst.logic_type, inst.table,
                                                  inst.lf).text
        for pair in lg.trained_pairs:
            assert "<text>" in pair.source


class TestBtSt:
    def test_bt_pseudo_source_real_target(self):
        corpus = _corpus()
        weighted_lfs, weighted_texts = _weighted(corpus)
        l2t_s, lg_s, l2t_t, lg_t = SpyModel(), SpyModel(), SpyModel(), SpyModel()
        n_l2t, n_lg, skipped = bt_step(l2t_s, lg_s, l2t_t, lg_t, weighted_lfs, weighted_texts)
        assert (n_l2t, n_lg, skipped) == (5, 7, 0)
        # targets are exactly the augmented texts, weights carried
        assert [p.target for p in l2t_s.trained_pairs] == [w.item.text for w in weighted_texts]
        assert [p.weight for p in l2t_s.trained_pairs] == [w.weight for w in weighted_texts]
        # pseudo sources embed the lg teacher's generation, never the gold lf
        for pair, w in zip(lg_s.trained_pairs, weighted_lfs):
            assert pair.target == w.item.lf
            assert "v0." in pair.source  # teacher generation marker from SpyModel

    def test_st_real_source_pseudo_target(self):
        corpus = _corpus()
        weighted_lfs, weighted_texts = _weighted(corpus)
        l2t_s, lg_s, l2t_t, lg_t = SpyModel(), SpyModel(), SpyModel(), SpyModel()
        n_l2t, n_lg, skipped = st_step(l2t_s, lg_s, l2t_t, lg_t, weighted_lfs, weighted_texts)
        assert (n_l2t, n_lg, skipped) == (7, 5, 0)
        for pair, w in zip(l2t_s.trained_pairs, weighted_lfs):
            assert pair.target.startswith("v0.")      # pseudo target
            lf_tokens = w.item.lf.split()
            assert all(tok in pair.source.split() for tok in lf_tokens)  # real source
            assert pair.weight == w.weight

    def test_teacher_failure_skips_with_count(self):
        corpus = _corpus()
        weighted_lfs, weighted_texts = _weighted(corpus)

        class Flaky(SpyModel):
            def __init__(self, fail_on):
                super().__init__()
                self.calls = 0
                self.fail_on = fail_on

            def generate(self, inputs, beam_size=1):
                self.calls += 1
                if self.calls in self.fail_on:
                    from logicloom.models import ModelError

                    raise ModelError("flaky")
                return super().generate(inputs, beam_size)

        l2t_s, lg_s = SpyModel(), SpyModel()
        n_l2t, n_lg, skipped = bt_step(l2t_s, lg_s, SpyModel(), Flaky({2, 4}),
                                       weighted_lfs, weighted_texts)
        assert n_l2t == 3 and skipped == 2
        assert n_lg == 7


class TestRun:
    def _setup(self, **overrides):
        corpus = _corpus()
        weighted = _weighted(corpus)
        config = TrainConfig(pretrain_epochs=1, joint_epochs=1, finetune_epochs_per_joint=0,
                             batch_size=2, seed=13, **overrides)
        return corpus, weighted, config

    def test_transcript_counts_and_order(self):
        corpus, (weighted_lfs, weighted_texts), config = self._setup()
        l2t, lg = SpyModel(), SpyModel()
        l2t_teacher, lg_teacher = SpyModel(), SpyModel()
        result = run(config, corpus, [w.item for w in weighted_lfs],
                     [w.item for w in weighted_texts], l2t, lg, l2t_teacher, lg_teacher,
                     precomputed_weights=(weighted_lfs, weighted_texts))
        report = result.reports[0]
        assert (report.bt_pairs_l2t, report.bt_pairs_lg) == (5, 7)
        assert (report.st_pairs_l2t, report.st_pairs_lg) == (7, 5)

        n_pre = len(corpus.instances)
        pairs = l2t.trained_pairs
        assert len(pairs) == n_pre + 5 + 7
        bt_pairs = pairs[n_pre:n_pre + 5]
        st_pairs = pairs[n_pre + 5:]
        # curriculum order: text weights sorted descending, ties stable
        expected_text_order = sorted(TEXT_WEIGHTS, reverse=True)
        assert [p.weight for p in bt_pairs] == expected_text_order
        expected_lf_order = sorted(LF_WEIGHTS, reverse=True)
        assert [p.weight for p in st_pairs] == expected_lf_order
        # lg student mirror image
        lg_pairs = lg.trained_pairs[n_pre:]
        assert [p.weight for p in lg_pairs[:7]] == expected_lf_order
        assert [p.weight for p in lg_pairs[7:]] == expected_text_order

    def test_teachers_never_trained_and_frozen_within_epoch(self):
        corpus, (weighted_lfs, weighted_texts), config = self._setup()
        l2t, lg = SpyModel(), SpyModel()
        l2t_teacher, lg_teacher = SpyModel(), SpyModel()
        run(config, corpus, [w.item for w in weighted_lfs], [w.item for w in weighted_texts],
            l2t, lg, l2t_teacher, lg_teacher,
            precomputed_weights=(weighted_lfs, weighted_texts))
        assert l2t_teacher.train_calls == [] and lg_teacher.train_calls == []
        # every teacher generation within the single epoch used one frozen version
        for teacher in (l2t_teacher, lg_teacher):
            versions = {v for v, _, _ in teacher.generate_log}
            assert len(versions) == 1
        # end-of-epoch sync advanced the teachers to the students' state
        assert l2t_teacher.version == l2t.version
        assert lg_teacher.version == lg.version

    def test_students_never_generate_during_epoch(self):
        corpus, (weighted_lfs, weighted_texts), config = self._setup()
        l2t, lg = SpyModel(), SpyModel()
        run(config, corpus, [w.item for w in weighted_lfs], [w.item for w in weighted_texts],
            l2t, lg, SpyModel(), SpyModel(),
            precomputed_weights=(weighted_lfs, weighted_texts))
        assert l2t.generate_log == [] and lg.generate_log == []

    def test_teacher_probe_changes_only_after_sync(self):
        corpus, (weighted_lfs, weighted_texts), config = self._setup()
        config.joint_epochs = 2
        l2t, lg = SpyModel(), SpyModel()
        l2t_teacher = SpyModel()
        run(config, corpus, [w.item for w in weighted_lfs], [w.item for w in weighted_texts],
            l2t, lg, l2t_teacher, SpyModel(),
            precomputed_weights=(weighted_lfs, weighted_texts))
        epoch_versions = [v for v, _, _ in l2t_teacher.generate_log]
        assert len(set(epoch_versions)) == 2  # one frozen version per epoch
        assert epoch_versions == sorted(epoch_versions)

    def test_ablation_no_bt(self):
        corpus, (weighted_lfs, weighted_texts), config = self._setup(enable_bt=False)
        l2t, lg = SpyModel(), SpyModel()
        result = run(config, corpus, [w.item for w in weighted_lfs],
                     [w.item for w in weighted_texts], l2t, lg, SpyModel(), SpyModel(),
                     precomputed_weights=(weighted_lfs, weighted_texts))
        report = result.reports[0]
        assert report.bt_pairs_l2t == report.bt_pairs_lg == 0
        assert (report.st_pairs_l2t, report.st_pairs_lg) == (7, 5)

    def test_ablation_no_st(self):
        corpus, (weighted_lfs, weighted_texts), config = self._setup(enable_st=False)
        result = run(config, corpus, [w.item for w in weighted_lfs],
                     [w.item for w in weighted_texts], SpyModel(), SpyModel(),
                     SpyModel(), SpyModel(),
                     precomputed_weights=(weighted_lfs, weighted_texts))
        report = result.reports[0]
        assert report.st_pairs_l2t == report.st_pairs_lg == 0
        assert (report.bt_pairs_l2t, report.bt_pairs_lg) == (5, 7)

    def test_ablation_no_curriculum_keeps_original_order(self):
        corpus, (weighted_lfs, weighted_texts), config = self._setup(enable_curriculum=False)
        l2t = SpyModel()
        run(config, corpus, [w.item for w in weighted_lfs], [w.item for w in weighted_texts],
            l2t, SpyModel(), SpyModel(), SpyModel(),
            precomputed_weights=(weighted_lfs, weighted_texts))
        n_pre = len(corpus.instances)
        bt_weights = [p.weight for p in l2t.trained_pairs[n_pre:n_pre + 5]]
        assert bt_weights == TEXT_WEIGHTS  # augmentation order, unsorted

    def test_ablation_no_weighting_forces_ones(self):
        corpus, (weighted_lfs, weighted_texts), config = self._setup(enable_weighting=False)
        l2t = SpyModel()
        run(config, corpus, [w.item for w in weighted_lfs], [w.item for w in weighted_texts],
            l2t, SpyModel(), SpyModel(), SpyModel())
        n_pre = len(corpus.instances)
        assert all(p.weight == 1.0 for p in l2t.trained_pairs[n_pre:])

    def test_all_disabled_degenerates_to_supervised_transcript(self):
        corpus, (weighted_lfs, weighted_texts), _ = self._setup()
        config = TrainConfig(pretrain_epochs=1, joint_epochs=2, finetune_epochs_per_joint=1,
                             batch_size=2, seed=13, enable_bt=False, enable_st=False,
                             enable_curriculum=False, enable_weighting=False)
        via_run_l2t, via_run_lg = SpyModel(), SpyModel()
        run(config, corpus, [w.item for w in weighted_lfs], [w.item for w in weighted_texts],
            via_run_l2t, via_run_lg, SpyModel(), SpyModel())
        manual_l2t, manual_lg = SpyModel(), SpyModel()
        pretrain(manual_l2t, manual_lg, corpus, 1, seed=13, batch_size=2)
        finetune(manual_l2t, manual_lg, corpus, 1, joint_epoch=1, seed=13, batch_size=2)
        finetune(manual_l2t, manual_lg, corpus, 1, joint_epoch=2, seed=13, batch_size=2)
        assert via_run_l2t.train_calls == manual_l2t.train_calls
        assert via_run_lg.train_calls == manual_lg.train_calls

    def test_reports_deterministic_and_artifacts_written(self, tmp_path):
        corpus, (weighted_lfs, weighted_texts), config = self._setup()
        outputs = []
        for attempt in range(2):
            run_dir = tmp_path / f"r{attempt}"
            result = run(config, corpus, [w.item for w in weighted_lfs],
                         [w.item for w in weighted_texts], SpyModel(), SpyModel(),
                         SpyModel(), SpyModel(), run_dir=run_dir,
                         precomputed_weights=(weighted_lfs, weighted_texts))
            outputs.append([r.to_json() for r in result.reports])
            assert (run_dir / "runlog.jsonl").exists()
            assert (run_dir / "manifest.json").exists()
            logged = [json.loads(line) for line in
                      (run_dir / "runlog.jsonl").read_text().splitlines()]
            assert logged == [r.to_json() for r in result.reports]
            round_tripped = [EpochReport.from_json(doc) for doc in logged]
            assert [r.epoch for r in round_tripped] == [r.epoch for r in result.reports]
        assert outputs[0] == outputs[1]


class TestRunVariants:
    def test_default_teachers_constructed_from_student_class(self):
        corpus = _corpus()
        weighted_lfs, weighted_texts = _weighted(corpus)
        config = TrainConfig(pretrain_epochs=1, joint_epochs=1, finetune_epochs_per_joint=0,
                             batch_size=2, seed=13)
        result = run(config, corpus, [w.item for w in weighted_lfs],
                     [w.item for w in weighted_texts], SpyModel(), SpyModel(),
                     precomputed_weights=(weighted_lfs, weighted_texts))
        assert result.reports[0].bt_pairs_l2t == 5

    def test_reweigh_each_epoch_flag(self):
        corpus = _corpus()
        weighted_lfs, weighted_texts = _weighted(corpus)
        config = TrainConfig(pretrain_epochs=1, joint_epochs=2, finetune_epochs_per_joint=0,
                             batch_size=2, seed=13, reweigh_each_epoch=True)
        result = run(config, corpus, [w.item for w in weighted_lfs],
                     [w.item for w in weighted_texts], SpyModel(), SpyModel())
        assert len(result.reports) == 2


class TestEvaluate:
    def _oracle_models(self, corpus):
        l2t, lg = EchoModel(), EchoModel()
        for inst in corpus.instances:
            l2t.mapping[serialize_input(Role.L2T, inst.logic_type, inst.table, inst.lf).text] = \
                inst.text
            lg.mapping[serialize_input(Role.LG, inst.logic_type, inst.table, inst.text).text] = \
                inst.lf
        return l2t, lg

    def test_oracle_models_score_maxima(self):
        corpus = _corpus(4, 2, seed=9)
        l2t, lg = self._oracle_models(corpus)
        bundle = evaluate(l2t, lg, corpus)
        assert bundle.bleu4 == 100.0
        assert bundle.rouge1 == bundle.rougeL == 1.0
        assert bundle.lf_acc == 1.0
        assert bundle.exec_acc == 1.0  # sampled gold LFs execute to true

    def test_empty_generation_does_not_crash(self):
        corpus = _corpus(3, 2, seed=9)
        l2t, lg = self._oracle_models(corpus)
        some_key = next(iter(l2t.mapping))
        l2t.mapping[some_key] = ""
        del lg.mapping[next(iter(lg.mapping))]
        bundle = evaluate(l2t, lg, corpus)
        assert bundle.bleu4 < 100.0
        assert 0.0 <= bundle.lf_acc < 1.0

    def test_empty_corpus_rejected(self):
        from logicloom.tables import Corpus

        with pytest.raises(ValueError):
            evaluate(EchoModel(), EchoModel(), Corpus())


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(beam_size=0)
        with pytest.raises(ValueError):
            TrainConfig(joint_epochs=-1)

    def test_json_round_trip(self):
        config = TrainConfig(joint_epochs=3, enable_st=False, seed=7)
        assert TrainConfig.from_json(config.to_json()) == config


def test_best_checkpoint_selection_tracks_validation(tmp_path):
    corpus = _corpus(4, 2, seed=21)
    weighted_lfs, weighted_texts = _weighted(corpus)
    config = TrainConfig(pretrain_epochs=1, joint_epochs=3, finetune_epochs_per_joint=1,
                         batch_size=2, seed=3)
    l2t, lg = SpyModel(), SpyModel()
    result = run(config, corpus, [w.item for w in weighted_lfs],
                 [w.item for w in weighted_texts], l2t, lg, SpyModel(), SpyModel(),
                 validation=corpus, run_dir=tmp_path / "run",
                 precomputed_weights=(weighted_lfs, weighted_texts))
    bleus = [r.eval.bleu4 for r in result.reports]
    lf_accs = [r.eval.lf_acc for r in result.reports]
    assert result.best_l2t_epoch == bleus.index(max(bleus)) + 1
    assert result.best_lg_epoch == lf_accs.index(max(lf_accs)) + 1
    for epoch in range(1, 4):
        assert (tmp_path / "run" / "checkpoints" / f"epoch{epoch}" / "l2t").exists()
        assert (tmp_path / "run" / "checkpoints" / f"epoch{epoch}" / "lg").exists()
    assert result.manifest["best_l2t_epoch"] == result.best_l2t_epoch
