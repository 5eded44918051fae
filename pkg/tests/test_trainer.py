import json

import pytest
import torch

from entrel.config import TrainConfig
from entrel.inference import Extractor
from entrel.model import JointModel
from entrel.trainer import joint_loss, task_losses, train

from helpers import synthetic_corpus, tiny_config


def test_joint_loss_weights():
    cfg = TrainConfig()
    losses = {t: torch.tensor(1.0) for t in ("mention", "coref", "entity", "relation")}
    assert float(joint_loss(losses, cfg)) == pytest.approx(3.25)
    assert float(joint_loss({"entity": torch.tensor(2.0)}, cfg)) == pytest.approx(0.5)
    assert joint_loss({}, cfg) == 0.0


def _grads(model, doc, **weights):
    model.zero_grad()
    cfg = model.cfg.train
    for k, v in weights.items():
        setattr(cfg, k, v)
    loss = joint_loss(task_losses(model, doc, 0), cfg)
    loss.backward()
    return {n: p.grad.clone() if p.grad is not None else None for n, p in model.named_parameters()}


def test_loss_weight_effects():
    torch.manual_seed(0)
    model = JointModel(tiny_config())
    model.eval()  # dropout is already 0; keeps runs identical
    doc = synthetic_corpus(1)[0]
    losses = task_losses(model, doc, 0)
    assert set(losses) == {"mention", "coref", "entity", "relation"}
    assert all(float(v.detach()) >= 0 for v in losses.values())

    g = _grads(model, doc, loss_entity=0.0)
    assert all(v is None or torch.count_nonzero(v) == 0 for n, v in g.items() if n.startswith("entity."))

    only_rel = dict(loss_mention=0.0, loss_coref=0.0, loss_entity=0.0)
    g1 = _grads(model, doc, loss_relation=1.0, **only_rel)
    g2 = _grads(model, doc, loss_relation=2.0, **only_rel)
    for n in g1:
        if g1[n] is not None:
            assert torch.allclose(g2[n], 2 * g1[n], rtol=1e-5, atol=1e-8), n


def test_empty_training_set_rejected():
    with pytest.raises(ValueError):
        train([], [], tiny_config())


def test_joint_training_writes_checkpoint(tmp_path):
    docs = synthetic_corpus(2)
    cfg = tiny_config(**{"train.epochs": 2})
    logs = []
    result = train(docs, docs[:1], cfg, out_dir=tmp_path, log=logs.append)
    assert len(result.history) == 2 and len(logs) == 2
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == 1
    assert manifest["best_epoch"]["joint"] in (1, 2)
    assert len(manifest["train_data_sha256"]) == 64
    assert manifest["optimizer"]["eps"] == 1e-6
    assert {"new_position_rows_init", "local_context"} <= set(manifest["assumptions"])
    ex = Extractor.from_checkpoint(tmp_path)
    assert not ex.is_pipeline
    a = ex.extract(docs[0]).to_json()
    b = result.extractor().extract(docs[0]).to_json()
    assert a == b


def test_pipeline_training_has_four_models(tmp_path):
    docs = synthetic_corpus(2)
    cfg = tiny_config(**{"train.epochs": 1, "train.mode": "pipeline"})
    result = train(docs, docs, cfg, out_dir=tmp_path, log=lambda _: None)
    assert set(result.models) == {"mention", "coref", "entity", "relation"}
    for stage, model in result.models.items():
        w = model.cfg.train
        nonzero = {t for t in ("mention", "coref", "entity", "relation") if getattr(w, f"loss_{t}") > 0}
        assert nonzero == {stage}
        assert (tmp_path / stage / "model.pt").exists()
    assert len({id(m.encoder) for m in result.models.values()}) == 4
    ex = Extractor.from_checkpoint(tmp_path)
    assert ex.is_pipeline
    ex.extract(docs[0])


def test_training_is_reproducible():
    docs = synthetic_corpus(2)
    cfg = tiny_config(**{"train.epochs": 1})
    a = train(docs, [], cfg, log=lambda _: None)
    b = train(docs, [], cfg, log=lambda _: None)
    for (n, p), (_, q) in zip(a.models["joint"].state_dict().items(), b.models["joint"].state_dict().items()):
        assert torch.equal(p, q), n


def test_long_gold_mentions_are_reported(caplog):
    docs = synthetic_corpus(2)
    cfg = tiny_config(**{"train.epochs": 1, "mention.max_span_len": 1})
    longest = sum(1 for d in docs for m in d.mentions if len(m.span) > 1)
    assert longest > 0
    with caplog.at_level("WARNING", logger="entrel.trainer"):
        result = train(docs, [], cfg, log=lambda _: None)
    assert result.manifest["train_mentions_over_max_span_len"] == longest
    assert "exceed mention.max_span_len=1" in caplog.text
