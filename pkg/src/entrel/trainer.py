"""Joint and pipeline training with per-document sampling and a weighted multi-task loss."""

import copy
import hashlib
import json
import logging
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import torch
import torch.nn.functional as F
from transformers import get_linear_schedule_with_warmup

from .config import Config, TrainConfig
from .coref import levenshtein
from .corpus import Document, to_docred_record
from .entity import entity_representation
from .evaluation import LEVELS, MetricReport, evaluate, gold_items
from .inference import STAGES, Extractor, gold_input_reference
from .mention import span_representation
from .model import MANIFEST_FILE, JointModel
from .relation import EntityContext
from .sampling import gold_clusters_by_index, sample_coref_pairs, sample_mention_negatives, sample_relation_negatives

logger = logging.getLogger(__name__)

TASKS = STAGES
STAGE_LEVEL = {"mention": "mention", "coref": "cluster", "entity": "entity", "relation": "relation"}


def loss_weights(cfg: TrainConfig) -> Dict[str, float]:
    return {"mention": cfg.loss_mention, "coref": cfg.loss_coref, "entity": cfg.loss_entity,
            "relation": cfg.loss_relation}


def joint_loss(losses: Dict[str, torch.Tensor], cfg: TrainConfig):
    """Weighted sum of per-task mean losses; absent tasks contribute nothing."""
    weights = loss_weights(cfg)
    total = 0.0
    for task, value in losses.items():
        total = total + weights[task] * value
    return total


def task_losses(model: JointModel, doc: Document, seed, tasks: Sequence[str] = TASKS) -> Dict[str, torch.Tensor]:
    """Per-task sample-mean losses for one document, from a single encoder pass.

    All heads are fed gold structure (teacher forcing).
    """
    cfg = model.cfg
    rng = random.Random(seed)
    enc = model.encode(doc.words)
    spans, clusters = gold_clusters_by_index(doc)
    reps = span_representation(enc, spans) if spans else None
    losses = {}

    if "mention" in tasks:
        max_len = cfg.mention.max_span_len
        positives = [sp for sp in spans if len(sp) <= max_len]
        negatives = sample_mention_negatives(doc, cfg.train.neg_mentions, max_len, rng)
        samples = positives + negatives
        if samples:
            logits = model.mention(enc, samples)
            labels = torch.tensor([1.0] * len(positives) + [0.0] * len(negatives))
            losses["mention"] = F.binary_cross_entropy_with_logits(logits, labels)

    if "coref" in tasks and spans:
        positives, negatives = sample_coref_pairs(doc, cfg.train.neg_coref, rng)
        pairs = positives + negatives
        if pairs:
            dists = [levenshtein(doc.text(spans[i]), doc.text(spans[j])) for i, j in pairs]
            probs = model.coref.symmetric_scores(reps, pairs, dists).clamp(1e-7, 1 - 1e-7)
            labels = torch.tensor([1.0] * len(positives) + [0.0] * len(negatives))
            losses["coref"] = F.binary_cross_entropy(probs, labels)

    need_entities = ("entity" in tasks or "relation" in tasks) and clusters
    if need_entities:
        xe = entity_representation(reps, clusters)
        types = torch.tensor([model.type_index(c.entity_type) for c in doc.clusters], dtype=torch.long)

    if "entity" in tasks and clusters:
        losses["entity"] = F.cross_entropy(model.entity(xe), types)

    if "relation" in tasks and len(clusters) > 1:
        targets: Dict[tuple, torch.Tensor] = {}
        for r in doc.relations:
            vec = targets.setdefault((r.head, r.tail), torch.zeros(len(cfg.rel.types)))
            vec[model.relation_index(r.relation_type)] = 1.0
        positives = sorted(targets)
        negatives = sample_relation_negatives(doc, cfg.train.neg_relations, rng)
        pairs = positives + negatives
        if pairs:
            ctx = EntityContext(spans, [doc.sentence_of(sp.start) for sp in spans], reps, clusters, xe, types)
            logits = model.relation(enc, ctx, pairs)
            labels = torch.stack([targets[p] for p in positives] + [torch.zeros(len(cfg.rel.types))] * len(negatives))
            losses["relation"] = F.binary_cross_entropy_with_logits(logits, labels)
    return losses


def data_hash(docs: Sequence[Document]) -> str:
    h = hashlib.sha256()
    for d in docs:
        h.update(json.dumps(to_docred_record(d), sort_keys=True, ensure_ascii=False).encode("utf-8"))
    return h.hexdigest()


@dataclass
class TrainResult:
    models: Dict[str, JointModel]  # "joint" or one entry per stage
    history: List[dict] = field(default_factory=list)
    manifest: dict = field(default_factory=dict)

    def extractor(self) -> Extractor:
        if "joint" in self.models:
            return Extractor.joint(self.models["joint"])
        return Extractor(self.models)


def evaluate_end_to_end(extractor: Extractor, docs: Sequence[Document]) -> MetricReport:
    preds = [extractor.extract(d).items() for d in docs]
    return evaluate(preds, [gold_items(d) for d in docs])


def evaluate_gold_inputs(extractor: Extractor, docs: Sequence[Document], levels=LEVELS) -> MetricReport:
    preds = [extractor.gold_input_items(d) for d in docs]
    return evaluate(preds, [gold_input_reference(d) for d in docs], levels)


def _optimizer(model: JointModel, cfg: TrainConfig, total_steps: int):
    decay, no_decay = [], []
    for name, p in model.named_parameters():
        (no_decay if name.endswith("bias") or "LayerNorm" in name else decay).append(p)
    opt = torch.optim.AdamW([{"params": decay, "weight_decay": cfg.weight_decay},
                             {"params": no_decay, "weight_decay": 0.0}],
                            lr=cfg.lr, betas=(0.9, 0.999), eps=cfg.adam_eps)
    sched = get_linear_schedule_with_warmup(opt, int(cfg.warmup * total_steps), total_steps)
    return opt, sched


def _fit(model: JointModel, train_docs, dev_docs, tasks, select: Callable[[JointModel], tuple],
         log: Callable[[str], None], early_stop=None, name="joint"):
    cfg = model.cfg.train
    steps_per_epoch = math.ceil(len(train_docs) / cfg.grad_accum)
    opt, sched = _optimizer(model, cfg, max(1, steps_per_epoch * cfg.epochs))
    order_rng = random.Random(cfg.seed)
    history, best_key, best_state, best_epoch = [], None, None, 0
    for epoch in range(1, cfg.epochs + 1):
        model.train()
        order = list(train_docs)
        order_rng.shuffle(order)
        totals = {t: 0.0 for t in tasks}
        opt.zero_grad()
        for i, doc in enumerate(order, 1):
            losses = task_losses(model, doc, f"{cfg.seed}:{epoch}:{doc.doc_id}", tasks)
            loss = joint_loss(losses, cfg)
            if torch.is_tensor(loss) and loss.requires_grad:
                (loss / cfg.grad_accum).backward()
            for t, v in losses.items():
                totals[t] += float(v.detach())
            if i % cfg.grad_accum == 0 or i == len(order):
                torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.max_grad_norm)
                opt.step()
                sched.step()
                opt.zero_grad()
        model.eval()
        key, report = select(model)
        record = {"model": name, "epoch": epoch, "train_loss": {t: v / len(order) for t, v in totals.items()},
                  "dev": report.to_json() if report is not None else None}
        history.append(record)
        log(f"[{name}] epoch {epoch}: loss " + " ".join(f"{t}={v:.4f}" for t, v in record["train_loss"].items())
            + (" | dev " + " ".join(f"{lv}={s.f1:.4f}" for lv, s in report.levels.items()) if report else ""))
        if best_key is None or key > best_key:
            best_key, best_epoch = key, epoch
            best_state = copy.deepcopy(model.state_dict())
        if early_stop is not None and report is not None and early_stop(report):
            break
    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()
    return history, best_epoch


def train(train_docs: Sequence[Document], dev_docs: Sequence[Document], cfg: Config,
          out_dir: Optional[Path] = None, log: Callable[[str], None] = logger.info,
          early_stop: Optional[Callable[[MetricReport], bool]] = None) -> TrainResult:
    """Train jointly (one model) or as a pipeline (one model per stage, no shared encoder).

    Dev performance is measured once per epoch; the best epoch's weights are kept.
    Without dev documents the last epoch wins.
    """
    cfg.validate()
    if not train_docs:
        raise ValueError("empty training set")
    dev_docs = list(dev_docs)
    max_len = cfg.mention.max_span_len
    n_mentions = sum(len(d.mentions) for d in train_docs)
    too_long = sum(1 for d in train_docs for m in d.mentions if len(m.span) > max_len)
    if too_long:
        logger.warning("%d of %d gold mentions exceed mention.max_span_len=%d and cannot be localized",
                       too_long, n_mentions, max_len)
    manifest = {
        "config": cfg.to_flat(),
        "seed": cfg.train.seed,
        "mode": cfg.train.mode,
        "train_data_sha256": data_hash(train_docs),
        "dev_data_sha256": data_hash(dev_docs),
        "n_train": len(train_docs),
        "n_dev": len(dev_docs),
        "train_mentions_over_max_span_len": too_long,
        "optimizer": {"name": "AdamW", "betas": [0.9, 0.999], "eps": cfg.train.adam_eps,
                      "weight_decay": cfg.train.weight_decay, "schedule": "linear warmup + linear decay",
                      "warmup_fraction": cfg.train.warmup},
        "assumptions": {
            "new_position_rows_init": "normal(0, encoder initializer_range)",
            "empty_local_context": "zero vector",
            "local_context": "tokens strictly between the two mentions",
            "coref_symmetrization": "mean of both pair orderings",
            "subword_pool": cfg.encoder.subword_pool,
        },
    }
    result = TrainResult({})
    if cfg.train.mode == "joint":
        torch.manual_seed(cfg.train.seed)
        model = JointModel(cfg)

        def select(m):
            if not dev_docs:
                return (0,), None
            report = evaluate_end_to_end(Extractor.joint(m), dev_docs)
            return tuple(report[lv].f1 for lv in ("relation", "entity", "cluster", "mention")), report

        history, best = _fit(model, train_docs, dev_docs, TASKS, select, log, early_stop)
        result.models["joint"] = model
        manifest["best_epoch"] = {"joint": best}
        manifest["encoder_new_position_rows"] = model.encoder.extended_rows
        if out_dir is not None:
            model.save(out_dir, dict(manifest, history=history))
    else:
        history, manifest["best_epoch"] = [], {}
        for stage in STAGES:
            stage_cfg = cfg.copy()
            weights = loss_weights(cfg.train)
            for t in STAGES:
                setattr(stage_cfg.train, f"loss_{t}", weights[t] if t == stage else 0.0)
            torch.manual_seed(cfg.train.seed)
            model = JointModel(stage_cfg)
            level = STAGE_LEVEL[stage]

            def select(m, level=level):
                if not dev_docs:
                    return (0,), None
                report = evaluate_gold_inputs(Extractor.joint(m), dev_docs, (level,))
                return (report[level].f1,), report

            h, best = _fit(model, train_docs, dev_docs, (stage,), select, log, name=stage)
            history.extend(h)
            manifest["best_epoch"][stage] = best
            result.models[stage] = model
            if out_dir is not None:
                model.save(Path(out_dir) / stage, dict(manifest, stage=stage, history=h))
        if out_dir is not None:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            (Path(out_dir) / MANIFEST_FILE).write_text(json.dumps(dict(manifest, history=history), indent=2),
                                                       encoding="utf-8")
    result.history = history
    result.manifest = manifest
    return result
