"""End-to-end pipeline driver: augment -> weigh -> train -> evaluate, with
idempotent stages persisted under a run directory.

Each stage skips itself ("resumed") when its artifacts already exist and
parse. Configuration is one JSON document; the LOGICLOOM_RUN_DIR environment
variable overrides the run directory.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

from . import synth
from .augment import load_unpaired, quality_report, save_unpaired, topicda
from .jointtrain import TrainConfig, evaluate, pretrain, run
from .metrics import BuiltinEmbedder
from .models import (GenerativeModel, Role, build_model, build_teacher_model,
                     close_model, serialize_input, WeightedPair)
from .tables import Corpus, load_dataset, load_tables, stratified_sample
from .tokenize import get_tokenizer
from .weighting import load_weighted, save_weighted, weight_lfs, weight_texts

logger = logging.getLogger(__name__)

CONFIG_SCHEMA = "logicloom/pipeline-config-v1"


class PipelineError(ValueError):
    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


@dataclass
class PipelineConfig:
    run_dir: str = "runs/default"
    dataset: dict | None = None          # {"train": path, "valid": path, "test": path, "field_map": {...}}
    synthetic: dict | None = None        # {"tables": 50, "per_table": 2, "seed": 0}
    extra_tables: dict | None = None     # {"path": ..., "format": "csv-dir"|"json"}
    models: dict = field(default_factory=dict)  # per role: {"kind": "retrieval"} | {"kind": "external", ...}
    train: TrainConfig = field(default_factory=TrainConfig)
    tokenizer: str = "whitespace"
    max_candidate_tokens: int = 200
    da_epochs: int = 1
    few_shot: int | None = None

    @classmethod
    def from_json(cls, path) -> "PipelineConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        doc.pop("_notes", None)
        doc.pop("schema", None)
        train = TrainConfig.from_json(doc.pop("train", {}))
        known = {f for f in cls.__dataclass_fields__ if f != "train"}
        unknown = set(doc) - known
        if unknown:
            raise PipelineError("config", f"unknown config keys: {sorted(unknown)}")
        return cls(train=train, **doc)

    def model_spec(self, role: str) -> dict:
        return self.models.get(role, {"kind": "retrieval"})


def resolve_run_dir(config: PipelineConfig, override: str | None = None) -> Path:
    run_dir = override or os.environ.get("LOGICLOOM_RUN_DIR") or config.run_dir
    path = Path(run_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_splits(config: PipelineConfig) -> tuple[Corpus, Corpus | None, Corpus | None]:
    if config.dataset:
        field_map = config.dataset.get("field_map")
        train = load_dataset(config.dataset["train"], field_map)
        valid = load_dataset(config.dataset["valid"], field_map) if config.dataset.get("valid") else None
        test = load_dataset(config.dataset["test"], field_map) if config.dataset.get("test") else None
        return train, valid, test
    if config.synthetic:
        spec = config.synthetic
        return synth.make_splits(int(spec.get("tables", 50)), int(spec.get("per_table", 2)),
                                 int(spec.get("seed", 0)))
    raise PipelineError("config", "either 'dataset' or 'synthetic' must be configured")


def _train_da_model(model: GenerativeModel, role: Role, corpus: Corpus, epochs: int,
                    batch_size: int, tokenizer) -> None:
    import random

    for epoch in range(epochs):
        order = list(corpus.instances)
        random.Random(f"da:{role.value}:{epoch}").shuffle(order)
        pairs = []
        for inst in order:
            target = inst.lf if role is Role.D2L else inst.text
            source = serialize_input(role, inst.logic_type, inst.table, None,
                                     tokenizer=tokenizer).text
            pairs.append(WeightedPair(source, target, 1.0))
        for start in range(0, len(pairs), max(1, batch_size)):
            model.train_weighted(pairs[start:start + batch_size])


def run_pipeline(config: PipelineConfig, run_dir_override: str | None = None) -> dict:
    """Execute all stages; returns a summary with artifact paths."""
    opened: list[GenerativeModel] = []

    def _build(spec: dict, teacher: bool = False) -> GenerativeModel:
        model = build_teacher_model(spec) if teacher else build_model(spec)
        opened.append(model)
        return model

    try:
        return _run_pipeline(config, run_dir_override, _build)
    finally:
        for model in opened:
            close_model(model)


def _run_pipeline(config: PipelineConfig, run_dir_override, _build) -> dict:
    run_dir = resolve_run_dir(config, run_dir_override)
    tokenizer = get_tokenizer(config.tokenizer)
    train_corpus, valid_corpus, test_corpus = _load_splits(config)
    if valid_corpus is not None and not valid_corpus.instances:
        valid_corpus = None
    if test_corpus is not None and not test_corpus.instances:
        test_corpus = None
    if config.few_shot:
        logger.info("few-shot: sampling %d instances stratified by logic type", config.few_shot)
        train_corpus = stratified_sample(train_corpus, config.few_shot, config.train.seed)

    da_tables = dict(train_corpus.tables)
    if config.extra_tables:
        extra = load_tables(config.extra_tables["path"], config.extra_tables.get("format", "csv-dir"))
        for table in extra.tables.values():
            if table.id not in da_tables:
                da_tables[table.id] = table

    paths = {
        "aug_lfs": run_dir / "augmented_lfs.jsonl",
        "aug_texts": run_dir / "augmented_texts.jsonl",
        "aug_stats": run_dir / "augment_stats.json",
        "weighted_lfs": run_dir / "weighted_lfs.jsonl",
        "weighted_texts": run_dir / "weighted_texts.jsonl",
        "pretrain_ckpt": run_dir / "checkpoints" / "pretrained",
        "runlog": run_dir / "runlog.jsonl",
        "manifest": run_dir / "manifest.json",
        "quality": run_dir / "quality_report.json",
        "final_eval": run_dir / "final_eval.json",
    }
    all_tables = dict(da_tables)
    for corpus in (valid_corpus, test_corpus):
        if corpus:
            all_tables.update(corpus.tables)

    # ---- stage: augment -----------------------------------------------------
    if paths["aug_lfs"].exists() and paths["aug_texts"].exists() and paths["aug_stats"].exists():
        logger.info("resumed augment stage from %s", run_dir)
        unpaired_lfs = load_unpaired(paths["aug_lfs"], all_tables)
        unpaired_texts = load_unpaired(paths["aug_texts"], all_tables)
    else:
        try:
            d2l = _build(config.model_spec("d2l"))
            d2t = _build(config.model_spec("d2t"))
            _train_da_model(d2l, Role.D2L, train_corpus, config.da_epochs,
                            config.train.batch_size, tokenizer)
            _train_da_model(d2t, Role.D2T, train_corpus, config.da_epochs,
                            config.train.batch_size, tokenizer)
            unpaired_lfs, lf_stats = topicda(da_tables, d2l, Role.D2L, train_corpus,
                                             tokenizer, config.train.beam_size,
                                             config.max_candidate_tokens)
            unpaired_texts, text_stats = topicda(da_tables, d2t, Role.D2T, train_corpus,
                                                 tokenizer, config.train.beam_size,
                                                 config.max_candidate_tokens)
        except Exception as exc:
            raise PipelineError("augment", str(exc)) from exc
        save_unpaired(unpaired_lfs, paths["aug_lfs"])
        save_unpaired(unpaired_texts, paths["aug_texts"])
        paths["aug_stats"].write_text(json.dumps({
            "schema": "logicloom/augment-stats-v1",
            "lfs": lf_stats.to_json(), "texts": text_stats.to_json(),
        }, indent=1), encoding="utf-8")
        logger.info("augment: kept %d lfs, %d texts", len(unpaired_lfs), len(unpaired_texts))

    # ---- stage: weigh (pretrains the joint models first) ---------------------
    l2t = _build(config.model_spec("l2t"))
    lg = _build(config.model_spec("lg"))
    embedder = BuiltinEmbedder()
    pretrained = paths["pretrain_ckpt"]
    if paths["weighted_lfs"].exists() and paths["weighted_texts"].exists() and pretrained.exists():
        logger.info("resumed weigh stage from %s", run_dir)
        weighted_lfs = load_weighted(paths["weighted_lfs"], all_tables)
        weighted_texts = load_weighted(paths["weighted_texts"], all_tables)
        l2t.load(pretrained / "l2t")
        lg.load(pretrained / "lg")
    else:
        try:
            pretrain(l2t, lg, train_corpus, config.train.pretrain_epochs,
                     config.train.seed, config.train.batch_size, tokenizer)
            if config.train.enable_weighting:
                weighted_lfs = weight_lfs(unpaired_lfs, l2t, lg, embedder,
                                          config.train.beam_size, tokenizer)
                weighted_texts = weight_texts(unpaired_texts, l2t, lg, embedder,
                                              config.train.beam_size, tokenizer)
            else:
                from .weighting import WeightedItem
                weighted_lfs = [WeightedItem(i, 1.0) for i in unpaired_lfs]
                weighted_texts = [WeightedItem(i, 1.0) for i in unpaired_texts]
        except Exception as exc:
            raise PipelineError("weigh", str(exc)) from exc
        save_weighted(weighted_lfs, paths["weighted_lfs"])
        save_weighted(weighted_texts, paths["weighted_texts"])
        l2t.save(pretrained / "l2t")
        lg.save(pretrained / "lg")

    # ---- stage: train ---------------------------------------------------------
    if paths["runlog"].exists() and paths["manifest"].exists():
        logger.info("resumed train stage from %s", run_dir)
        manifest = json.loads(paths["manifest"].read_text(encoding="utf-8"))
        best_epoch = manifest.get("best_l2t_epoch") or manifest.get("epochs")
        ckpt = run_dir / "checkpoints" / f"epoch{best_epoch}"
        if ckpt.exists():
            l2t.load(ckpt / "l2t")
        best_lg_epoch = manifest.get("best_lg_epoch") or manifest.get("epochs")
        lg_ckpt = run_dir / "checkpoints" / f"epoch{best_lg_epoch}"
        if lg_ckpt.exists():
            lg.load(lg_ckpt / "lg")
    else:
        try:
            l2t_teacher = _build(config.model_spec("l2t"), teacher=True)
            lg_teacher = _build(config.model_spec("lg"), teacher=True)
            result = run(config.train, train_corpus, unpaired_lfs, unpaired_texts, l2t, lg,
                         l2t_teacher=l2t_teacher, lg_teacher=lg_teacher,
                         validation=valid_corpus, run_dir=run_dir, embedder=embedder,
                         tokenizer=tokenizer,
                         precomputed_weights=(weighted_lfs, weighted_texts),
                         skip_pretrain=True)
        except Exception as exc:
            raise PipelineError("train", str(exc)) from exc
        manifest = result.manifest
        if result.best_l2t_epoch:
            l2t.load(run_dir / "checkpoints" / f"epoch{result.best_l2t_epoch}" / "l2t")
        if result.best_lg_epoch:
            lg.load(run_dir / "checkpoints" / f"epoch{result.best_lg_epoch}" / "lg")

    # ---- stage: evaluate + quality --------------------------------------------
    if not paths["quality"].exists():
        report = quality_report(unpaired_lfs, unpaired_texts, lg,
                                config.train.beam_size, tokenizer)
        paths["quality"].write_text(json.dumps(report.to_json(), indent=1), encoding="utf-8")
    if paths["final_eval"].exists():
        logger.info("resumed evaluate stage from %s", run_dir)
        final_eval = json.loads(paths["final_eval"].read_text(encoding="utf-8"))
    else:
        evaluation_corpus = next(
            (c for c in (test_corpus, valid_corpus, train_corpus) if c and c.instances))
        try:
            bundle = evaluate(l2t, lg, evaluation_corpus, config.train.beam_size,
                              config.train.exec_mode, tokenizer)
        except Exception as exc:
            raise PipelineError("evaluate", str(exc)) from exc
        final_eval = {"schema": "logicloom/final-eval-v1", **bundle.to_json()}
        paths["final_eval"].write_text(json.dumps(final_eval, indent=1), encoding="utf-8")

    return {
        "run_dir": str(run_dir),
        "artifacts": {k: str(v) for k, v in paths.items()},
        "artifact_schemas": {
            "aug_lfs": "logicloom/unpaired-v1", "aug_texts": "logicloom/unpaired-v1",
            "weighted_lfs": "logicloom/weighted-v1", "weighted_texts": "logicloom/weighted-v1",
            "runlog": "logicloom/runlog-v1",
        },
        "final_eval": final_eval,
        "n_train_instances": len(train_corpus.instances),
        "n_unpaired_lfs": len(unpaired_lfs),
        "n_unpaired_texts": len(unpaired_texts),
    }
