"""The full training procedure: supervised pretraining, round-trip weighting,
curriculum ordering, then joint epochs of back-translation, self-training,
and supervised fine-tuning under a frozen-teacher scheme.

Teachers are synchronized from students only at epoch boundaries; within an
epoch they generate all pseudo data and receive no training. Back-translation
pairs a teacher-generated pseudo source with the real augmented target;
self-training pairs the real augmented source with a teacher-generated pseudo
target. Every pseudo pair carries its item's round-trip weight.
"""

from __future__ import annotations

import json
import logging
import random
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .metrics import EvalBundle, bleu4, exec_accuracy, lf_accuracy, rouge
from .models import (
    GenerativeModel,
    ModelError,
    Role,
    WeightedPair,
    serialize_input,
    sync_teacher,
)
from .tables import Corpus, SupervisedInstance
from .tokenize import text_tokenize, whitespace_tokenize
from .weighting import WeightedItem, curriculum_sort, weight_lfs, weight_texts

logger = logging.getLogger(__name__)

RUNLOG_SCHEMA = "logicloom/runlog-v1"
MANIFEST_SCHEMA = "logicloom/run-manifest-v1"


@dataclass
class TrainConfig:
    pretrain_epochs: int = 1
    joint_epochs: int = 1
    finetune_epochs_per_joint: int = 1
    beam_size: int = 3
    batch_size: int = 2
    enable_bt: bool = True
    enable_st: bool = True
    enable_curriculum: bool = True
    enable_weighting: bool = True
    reweigh_each_epoch: bool = False  # experimental; default follows compute-once
    seed: int = 42
    exec_mode: str = "truthy"

    def __post_init__(self):
        if min(self.pretrain_epochs, self.joint_epochs, self.finetune_epochs_per_joint,
               self.batch_size) < 0:
            raise ValueError("epoch and batch counts must be >= 0")
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")

    def to_json(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_json(cls, doc: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in doc.items() if k in known})


@dataclass
class EpochReport:
    epoch: int
    bt_pairs_l2t: int = 0
    bt_pairs_lg: int = 0
    st_pairs_l2t: int = 0
    st_pairs_lg: int = 0
    bt_skipped: int = 0
    st_skipped: int = 0
    eval: EvalBundle | None = None

    def to_json(self) -> dict:
        return {
            "schema": RUNLOG_SCHEMA,
            "epoch": self.epoch,
            "bt_pairs_l2t": self.bt_pairs_l2t, "bt_pairs_lg": self.bt_pairs_lg,
            "st_pairs_l2t": self.st_pairs_l2t, "st_pairs_lg": self.st_pairs_lg,
            "bt_skipped": self.bt_skipped, "st_skipped": self.st_skipped,
            "eval": self.eval.to_json() if self.eval else None,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "EpochReport":
        bundle = EvalBundle.from_json(doc["eval"]) if doc.get("eval") else None
        return cls(epoch=doc["epoch"], bt_pairs_l2t=doc["bt_pairs_l2t"],
                   bt_pairs_lg=doc["bt_pairs_lg"], st_pairs_l2t=doc["st_pairs_l2t"],
                   st_pairs_lg=doc["st_pairs_lg"], bt_skipped=doc.get("bt_skipped", 0),
                   st_skipped=doc.get("st_skipped", 0), eval=bundle)


def _shuffled(instances: Sequence[SupervisedInstance], seed: int, phase: str,
              epoch: int) -> list[SupervisedInstance]:
    rng = random.Random(zlib.crc32(f"{seed}:{phase}:{epoch}".encode()))
    order = list(instances)
    rng.shuffle(order)
    return order


def _deliver(model: GenerativeModel, pairs: Sequence[WeightedPair], batch_size: int) -> None:
    step = max(1, batch_size)
    for start in range(0, len(pairs), step):
        model.train_weighted(pairs[start:start + step])


def supervised_pair(instance: SupervisedInstance, role: Role, tokenizer) -> WeightedPair:
    if role is Role.L2T:
        source = serialize_input(Role.L2T, instance.logic_type, instance.table,
                                 instance.lf, tokenizer=tokenizer).text
        return WeightedPair(source, instance.text, 1.0)
    source = serialize_input(Role.LG, instance.logic_type, instance.table,
                             instance.text, tokenizer=tokenizer).text
    return WeightedPair(source, instance.lf, 1.0)


def _train_supervised(l2t: GenerativeModel, lg: GenerativeModel, supervised: Corpus,
                      epochs: int, seed: int, phase: str, batch_size: int, tokenizer) -> None:
    for epoch in range(epochs):
        order = _shuffled(supervised.instances, seed, phase, epoch)
        _deliver(l2t, [supervised_pair(i, Role.L2T, tokenizer) for i in order], batch_size)
        _deliver(lg, [supervised_pair(i, Role.LG, tokenizer) for i in order], batch_size)


def pretrain(l2t: GenerativeModel, lg: GenerativeModel, supervised: Corpus, epochs: int,
             seed: int = 42, batch_size: int = 2, tokenizer=whitespace_tokenize) -> None:
    """Train both models on the supervised corpus, all pair weights 1.0,
    instance order reshuffled per epoch under the seed."""
    _train_supervised(l2t, lg, supervised, epochs, seed, "pretrain", batch_size, tokenizer)


def finetune(l2t: GenerativeModel, lg: GenerativeModel, supervised: Corpus, epochs: int,
             joint_epoch: int, seed: int = 42, batch_size: int = 2,
             tokenizer=whitespace_tokenize) -> None:
    """Supervised fine-tuning at the end of a joint epoch; weights 1.0."""
    _train_supervised(l2t, lg, supervised, epochs, seed, f"finetune:{joint_epoch}",
                      batch_size, tokenizer)


def _pseudo_pairs(
    weighted: Sequence[WeightedItem],
    teacher: GenerativeModel,
    teacher_role: Role,
    pair_builder: Callable[[WeightedItem, str], WeightedPair | None],
    beam_size: int,
    tokenizer,
) -> tuple[list[WeightedPair], int]:
    """Generate with the frozen teacher item by item; skip failures, counted."""
    pairs: list[WeightedPair] = []
    skipped = 0
    for w in weighted:
        item = w.item
        source = serialize_input(teacher_role, item.logic_type, item.table, item.value,
                                 tokenizer=tokenizer).text
        try:
            pseudo = teacher.generate([source], beam_size)[0]
        except ModelError as exc:
            skipped += 1
            logger.warning("teacher generation failed for %s item on table %s: %s; skipped",
                           item.kind, item.table.id, exc)
            continue
        pair = pair_builder(w, pseudo)
        if pair is None:
            skipped += 1
            logger.warning("empty pseudo target for %s item on table %s; skipped",
                           item.kind, item.table.id)
            continue
        pairs.append(pair)
    return pairs, skipped


def bt_step(
    l2t_student: GenerativeModel, lg_student: GenerativeModel,
    l2t_teacher: GenerativeModel, lg_teacher: GenerativeModel,
    weighted_lfs: Sequence[WeightedItem], weighted_texts: Sequence[WeightedItem],
    beam_size: int = 3, batch_size: int = 2, tokenizer=whitespace_tokenize,
) -> tuple[int, int, int]:
    """Back-translation: pseudo source from the opposite teacher, real target.

    Returns (pairs delivered to the l2t student, pairs to the lg student,
    skipped items).
    """
    def l2t_pair(w: WeightedItem, pseudo_lf: str) -> WeightedPair:
        source = serialize_input(Role.L2T, w.item.logic_type, w.item.table, pseudo_lf,
                                 tokenizer=tokenizer).text
        return WeightedPair(source, w.item.value, w.weight)

    def lg_pair(w: WeightedItem, pseudo_text: str) -> WeightedPair:
        source = serialize_input(Role.LG, w.item.logic_type, w.item.table, pseudo_text,
                                 tokenizer=tokenizer).text
        return WeightedPair(source, w.item.value, w.weight)

    l2t_pairs, skipped_t = _pseudo_pairs(weighted_texts, lg_teacher, Role.LG, l2t_pair,
                                         beam_size, tokenizer)
    lg_pairs, skipped_l = _pseudo_pairs(weighted_lfs, l2t_teacher, Role.L2T, lg_pair,
                                        beam_size, tokenizer)
    _deliver(l2t_student, l2t_pairs, batch_size)
    _deliver(lg_student, lg_pairs, batch_size)
    return len(l2t_pairs), len(lg_pairs), skipped_t + skipped_l


def st_step(
    l2t_student: GenerativeModel, lg_student: GenerativeModel,
    l2t_teacher: GenerativeModel, lg_teacher: GenerativeModel,
    weighted_lfs: Sequence[WeightedItem], weighted_texts: Sequence[WeightedItem],
    beam_size: int = 3, batch_size: int = 2, tokenizer=whitespace_tokenize,
) -> tuple[int, int, int]:
    """Self-training: real source, pseudo target from the same-direction teacher.

    Empty pseudo targets are skipped with a counted warning.
    """
    def l2t_pair(w: WeightedItem, pseudo_text: str) -> WeightedPair | None:
        if not pseudo_text.strip():
            return None
        source = serialize_input(Role.L2T, w.item.logic_type, w.item.table, w.item.value,
                                 tokenizer=tokenizer).text
        return WeightedPair(source, pseudo_text, w.weight)

    def lg_pair(w: WeightedItem, pseudo_lf: str) -> WeightedPair | None:
        if not pseudo_lf.strip():
            return None
        source = serialize_input(Role.LG, w.item.logic_type, w.item.table, w.item.value,
                                 tokenizer=tokenizer).text
        return WeightedPair(source, pseudo_lf, w.weight)

    l2t_pairs, skipped_l = _pseudo_pairs(weighted_lfs, l2t_teacher, Role.L2T, l2t_pair,
                                         beam_size, tokenizer)
    lg_pairs, skipped_t = _pseudo_pairs(weighted_texts, lg_teacher, Role.LG, lg_pair,
                                        beam_size, tokenizer)
    _deliver(l2t_student, l2t_pairs, batch_size)
    _deliver(lg_student, lg_pairs, batch_size)
    return len(l2t_pairs), len(lg_pairs), skipped_l + skipped_t


def evaluate(l2t: GenerativeModel, lg: GenerativeModel, test: Corpus, beam_size: int = 3,
             exec_mode: str = "truthy", tokenizer=whitespace_tokenize) -> EvalBundle:
    """Text metrics for the l2t model, LF and execution accuracy for the lg model."""
    if not test.instances:
        raise ValueError("evaluation corpus is empty")
    l2t_inputs = [serialize_input(Role.L2T, i.logic_type, i.table, i.lf,
                                  tokenizer=tokenizer).text for i in test.instances]
    hypotheses = l2t.generate(l2t_inputs, beam_size)
    candidates = [text_tokenize(h) for h in hypotheses]
    references = [text_tokenize(i.text) for i in test.instances]

    lg_inputs = [serialize_input(Role.LG, i.logic_type, i.table, i.text,
                                 tokenizer=tokenizer).text for i in test.instances]
    lf_predictions = lg.generate(lg_inputs, beam_size)
    gold_lfs = [i.lf for i in test.instances]
    tables = [i.table for i in test.instances]

    return EvalBundle(
        n=len(test.instances),
        bleu4=bleu4(candidates, references),
        rouge1=rouge(candidates, references, 1),
        rouge2=rouge(candidates, references, 2),
        rouge4=rouge(candidates, references, 4),
        rougeL=rouge(candidates, references, "L"),
        lf_acc=lf_accuracy(lf_predictions, gold_lfs),
        exec_acc=exec_accuracy(lf_predictions, tables, exec_mode),
    )


@dataclass
class RunResult:
    reports: list[EpochReport]
    weighted_lfs: list[WeightedItem]
    weighted_texts: list[WeightedItem]
    best_l2t_epoch: int | None = None
    best_lg_epoch: int | None = None
    manifest: dict = field(default_factory=dict)


def _all_ones(items) -> list[WeightedItem]:
    return [WeightedItem(item, 1.0) for item in items]


def run(
    config: TrainConfig,
    supervised: Corpus,
    unpaired_lfs: Sequence,
    unpaired_texts: Sequence,
    l2t: GenerativeModel,
    lg: GenerativeModel,
    l2t_teacher: GenerativeModel | None = None,
    lg_teacher: GenerativeModel | None = None,
    validation: Corpus | None = None,
    run_dir=None,
    embedder=None,
    tokenizer=whitespace_tokenize,
    precomputed_weights: tuple[Sequence[WeightedItem], Sequence[WeightedItem]] | None = None,
    skip_pretrain: bool = False,
) -> RunResult:
    """The full procedure: pretrain, weigh, then joint epochs of BT + ST +
    fine-tune with teacher sync at each epoch end.

    Student models are trained in place; teachers default to fresh instances
    of the student's class (pass explicit teachers for external endpoints).
    `precomputed_weights` / `skip_pretrain` let a pipeline resume from stage
    artifacts without repeating work.
    """
    l2t_teacher = l2t_teacher or _default_teacher(l2t)
    lg_teacher = lg_teacher or _default_teacher(lg)
    run_path = Path(run_dir) if run_dir else None
    if run_path:
        run_path.mkdir(parents=True, exist_ok=True)

    if not skip_pretrain:
        pretrain(l2t, lg, supervised, config.pretrain_epochs, config.seed,
                 config.batch_size, tokenizer)

    def compute_weights() -> tuple[list[WeightedItem], list[WeightedItem]]:
        if not config.enable_weighting:
            return _all_ones(unpaired_lfs), _all_ones(unpaired_texts)
        return (
            weight_lfs(unpaired_lfs, l2t, lg, embedder, config.beam_size, tokenizer),
            weight_texts(unpaired_texts, l2t, lg, embedder, config.beam_size, tokenizer),
        )

    if precomputed_weights is not None:
        weighted_lfs, weighted_texts = (list(precomputed_weights[0]), list(precomputed_weights[1]))
    else:
        weighted_lfs, weighted_texts = compute_weights()
    if config.enable_curriculum:
        weighted_lfs = curriculum_sort(weighted_lfs)
        weighted_texts = curriculum_sort(weighted_texts)

    sync_teacher(l2t, l2t_teacher)
    sync_teacher(lg, lg_teacher)

    reports: list[EpochReport] = []
    best_l2t: tuple[float, int] | None = None
    best_lg: tuple[float, int] | None = None
    runlog = open(run_path / "runlog.jsonl", "w", encoding="utf-8") if run_path else None
    try:
        for epoch in range(1, config.joint_epochs + 1):
            if config.reweigh_each_epoch and config.enable_weighting and epoch > 1:
                weighted_lfs, weighted_texts = compute_weights()
                if config.enable_curriculum:
                    weighted_lfs = curriculum_sort(weighted_lfs)
                    weighted_texts = curriculum_sort(weighted_texts)
            report = EpochReport(epoch=epoch)
            if config.enable_bt:
                report.bt_pairs_l2t, report.bt_pairs_lg, report.bt_skipped = bt_step(
                    l2t, lg, l2t_teacher, lg_teacher, weighted_lfs, weighted_texts,
                    config.beam_size, config.batch_size, tokenizer)
            if config.enable_st:
                report.st_pairs_l2t, report.st_pairs_lg, report.st_skipped = st_step(
                    l2t, lg, l2t_teacher, lg_teacher, weighted_lfs, weighted_texts,
                    config.beam_size, config.batch_size, tokenizer)
            finetune(l2t, lg, supervised, config.finetune_epochs_per_joint, epoch,
                     config.seed, config.batch_size, tokenizer)
            if validation is not None:
                report.eval = evaluate(l2t, lg, validation, config.beam_size,
                                       config.exec_mode, tokenizer)
                if best_l2t is None or report.eval.bleu4 > best_l2t[0]:
                    best_l2t = (report.eval.bleu4, epoch)
                if best_lg is None or report.eval.lf_acc > best_lg[0]:
                    best_lg = (report.eval.lf_acc, epoch)
            if run_path:
                ckpt = run_path / "checkpoints" / f"epoch{epoch}"
                l2t.save(ckpt / "l2t")
                lg.save(ckpt / "lg")
            reports.append(report)
            if runlog:
                runlog.write(json.dumps(report.to_json(), ensure_ascii=False) + "\n")
                runlog.flush()
            sync_teacher(l2t, l2t_teacher)
            sync_teacher(lg, lg_teacher)
    finally:
        if runlog:
            runlog.close()

    best_l2t_epoch = best_l2t[1] if best_l2t else (len(reports) or None)
    best_lg_epoch = best_lg[1] if best_lg else (len(reports) or None)
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "config": config.to_json(),
        "seed": config.seed,
        "epochs": len(reports),
        "n_supervised": len(supervised.instances),
        "n_unpaired_lfs": len(unpaired_lfs),
        "n_unpaired_texts": len(unpaired_texts),
        "best_l2t_epoch": best_l2t_epoch,
        "best_lg_epoch": best_lg_epoch,
        "epoch_reports": [r.to_json() for r in reports],
    }
    if run_path:
        (run_path / "manifest.json").write_text(
            json.dumps(manifest, indent=1, ensure_ascii=False), encoding="utf-8")
    return RunResult(reports, list(weighted_lfs), list(weighted_texts),
                     best_l2t_epoch, best_lg_epoch, manifest)


def _default_teacher(student: GenerativeModel) -> GenerativeModel:
    try:
        return type(student)()
    except TypeError:
        raise ValueError(
            f"cannot build a default teacher for {type(student).__name__}; "
            "pass explicit teacher instances") from None
