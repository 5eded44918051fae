import random

import pytest

from entrel.corpus import EntityCluster, Mention, RelationTriple, Span, build_document
from entrel.evaluation import (eval_relations, evaluate, evaluate_relation_only, gold_items, micro_score, prf,
                               relations_from_submission, structure_items, submission_records, train_fact_index)

from oracles import compare_with_oracle


def test_prf_examples():
    s = micro_score([{1, 2, 3}], [{2, 3, 4, 5}])
    assert (s.precision, s.recall) == (2 / 3, 0.5)
    assert s.f1 == pytest.approx(4 / 7, abs=1e-12)
    z = prf(0, 0, 0)
    assert (z.precision, z.recall, z.f1) == (0.0, 0.0, 0.0)
    assert prf(0, 3, 0).f1 == 0.0


def test_micro_not_macro():
    # doc A: 1/1, doc B: 0/3 -> micro precision 1/4
    s = micro_score([{"a"}, {"x", "y", "z"}], [{"a"}, {"b"}])
    assert s.precision == 0.25 and s.recall == 0.5


def test_strictness():
    gold = structure_items([(0, 2), (5, 6)], [[0, 1]], ["PER"], [])
    off_by_one = structure_items([(0, 2), (5, 7)], [[0, 1]], ["PER"], [])
    assert evaluate([off_by_one], [gold])["cluster"].f1 == 0.0
    wrong_type = structure_items([(0, 2), (5, 6)], [[0, 1]], ["ORG"], [])
    r = evaluate([wrong_type], [gold])
    assert r["cluster"].f1 == 1.0 and r["entity"].f1 == 0.0


def test_relation_direction_and_mode():
    a, b = (frozenset({(0, 1)}), "PER"), (frozenset({(3, 4)}), "ORG")
    assert eval_relations([{(a, b, "P1")}], [{(b, a, "P1")}]).f1 == 0.0
    with pytest.raises(ValueError):
        eval_relations([set()], [set()], mode="fuzzy")


def test_matches_brute_force_oracle():
    rng = random.Random(11)
    for _ in range(100):
        compare_with_oracle(rng, rng.randint(1, 4))


def figure_doc(doc_id="d", rels=(("P571", 0, 1),)):
    sents = [["PGC", "was", "founded", "in", "1914", "in", "Raleigh", "Hills", "."]]
    clusters = [EntityCluster([Mention(Span(0, 1), "ORG")], "ORG"),
                EntityCluster([Mention(Span(4, 5), "TIME")], "TIME"),
                EntityCluster([Mention(Span(6, 8), "LOC")], "LOC")]
    return build_document(doc_id, sents, clusters, [RelationTriple(h, t, r) for r, h, t in rels], title=doc_id)


def test_gold_equals_gold():
    doc = figure_doc()
    r = evaluate([gold_items(doc)], [gold_items(doc)])
    assert all(s.f1 == 1.0 for s in r.levels.values())


def test_ign_f1_hand_computed():
    train_doc = figure_doc("train", rels=(("P571", 0, 1),))
    test_doc = figure_doc("test", rels=(("P571", 0, 1), ("P131", 0, 2)))
    facts = train_fact_index([train_doc])
    assert ("PGC", "1914", "P571") in facts
    # predictions: both gold facts + one wrong one
    pred = [{(0, 1, "P571"), (0, 2, "P131"), (1, 2, "P17")}]
    r = evaluate_relation_only(pred, [test_doc], facts)
    assert r["relation"].precision == pytest.approx(2 / 3)
    assert r["relation"].recall == 1.0
    # the train-seen correct fact is removed from numerator and denominator: P = 1/2, R = 1
    assert r.extra["ign_precision"] == pytest.approx(0.5)
    assert r.extra["ign_f1"] == pytest.approx(2 * 0.5 / 1.5)
    assert "ign_f1" not in evaluate_relation_only(pred, [test_doc]).extra


def test_submission_round_trip():
    doc = figure_doc("Portland Golf Club")
    pred = [{(0, 1, "P571"), (0, 2, "P131")}]
    recs = submission_records(pred, [doc])
    assert recs[0] == {"title": "Portland Golf Club", "h_idx": 0, "t_idx": 1, "r": "P571"}
    assert relations_from_submission(recs, [doc]) == pred
