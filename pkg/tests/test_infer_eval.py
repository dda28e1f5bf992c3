"""Dual-direction label combination, corpus prediction, and macro-F1 scoring."""

import numpy as np
import pytest

import sdprel.infer_eval as infer_eval
from sdprel.corpus import Direction, DirectedLabel, LabelSet, OTHER_LABEL
from sdprel.deppath import PathError, PathMode, instance_path, subject_first_path
from sdprel.embeddings import build_vocab, init_embeddings
from sdprel.infer_eval import (
    combine,
    macro_f1,
    predict_corpus,
    read_predictions,
    write_predictions,
)
from sdprel.model import Regime, TrainedModel
from sdprel.network import Hyperparams, forward, init_network_params
from synth import SYNTH_LABELS, aligned_corpus

L3 = LabelSet(("Cause-Effect", "Component-Whole", "Content-Container"))


def lab(text):
    return L3.parse(text)


CE12, CE21 = lab("Cause-Effect(e1,e2)"), lab("Cause-Effect(e2,e1)")
CW12, CW21 = lab("Component-Whole(e1,e2)"), lab("Component-Whole(e2,e1)")
CC12, CC21 = lab("Content-Container(e1,e2)"), lab("Content-Container(e2,e1)")


class TestCombine:
    def test_other_only_when_both_argmax_other(self):
        fwd = np.array([0.05, 0.03, 0.02, 0.9])
        rev = np.array([0.1, 0.05, 0.05, 0.8])
        label, conf = combine(fwd, rev, L3)
        assert label == OTHER_LABEL
        assert conf == 0.9

    def test_single_non_other_direction_wins(self):
        fwd = np.array([0.7, 0.1, 0.1, 0.1])
        rev = np.array([0.04, 0.03, 0.03, 0.9])
        label, conf = combine(fwd, rev, L3)
        assert label == CE12
        assert conf == 0.7

    def test_higher_confidence_direction_wins(self):
        fwd = np.array([0.6, 0.2, 0.1, 0.1])
        rev = np.array([0.1, 0.8, 0.05, 0.05])
        label, conf = combine(fwd, rev, L3)
        assert label == CW21
        assert conf == 0.8

    def test_exact_tie_breaks_toward_forward(self):
        fwd = np.array([0.5, 0.2, 0.2, 0.1])
        rev = np.array([0.5, 0.2, 0.2, 0.1])
        label, _ = combine(fwd, rev, L3)
        assert label == CE12

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            combine(np.ones(4) / 4, np.ones(5) / 5, L3)

    def test_never_directionless_relation(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            fwd = rng.dirichlet(np.ones(4))
            rev = rng.dirichlet(np.ones(4))
            label, conf = combine(fwd, rev, L3)
            assert label.is_other == (label.direction is Direction.NONE)
            assert 0.0 < conf <= 1.0


class TestMacroF1:
    def test_direction_error_halves_both_counts(self):
        report = macro_f1([CE12, CE12, CW12], [CE12, CE21, CW12], L3)
        ce = report.per_relation["Cause-Effect"]
        assert (ce.precision, ce.recall, ce.f1) == (0.5, 0.5, 0.5)
        assert report.per_relation["Component-Whole"].f1 == 1.0
        assert report.macro_f1 == 0.75
        assert report.scored_relations == ("Cause-Effect", "Component-Whole")
        assert abs(report.accuracy - 2 / 3) < 1e-15

    def test_perfect_predictions(self):
        gold = [CE12, CW21, CC12, OTHER_LABEL]
        report = macro_f1(gold, list(gold), L3)
        assert report.macro_f1 == 1.0
        assert report.accuracy == 1.0

    def test_all_other_predictions_score_zero(self):
        report = macro_f1([CE12, CW12], [OTHER_LABEL, OTHER_LABEL], L3)
        assert report.macro_f1 == 0.0
        assert report.accuracy == 0.0

    def test_systematic_direction_flip_scores_zero(self):
        gold = [CE12, CE21, CE12, CE21]
        pred = [CE21, CE12, CE21, CE12]
        report = macro_f1(gold, pred, L3)
        assert report.macro_f1 == 0.0

    def test_mixed_confusions(self):
        gold = [CE12, CE12, CW21, CC12, OTHER_LABEL, OTHER_LABEL]
        pred = [CE12, CW21, CW21, OTHER_LABEL, CC21, OTHER_LABEL]
        report = macro_f1(gold, pred, L3)
        assert abs(report.per_relation["Cause-Effect"].f1 - 2 / 3) < 1e-15
        assert abs(report.per_relation["Component-Whole"].f1 - 2 / 3) < 1e-15
        assert report.per_relation["Content-Container"].f1 == 0.0
        assert abs(report.macro_f1 - 4 / 9) < 1e-15
        assert report.accuracy == 0.5

    def test_absent_relations_excluded_from_mean(self):
        report = macro_f1([CE12, OTHER_LABEL], [CE12, CE12], L3)
        assert report.scored_relations == ("Cause-Effect",)
        assert abs(report.macro_f1 - 2 / 3) < 1e-15

    def test_permutation_invariance(self):
        rng = np.random.default_rng(1)
        space = L3.all_directed()
        gold = [space[i] for i in rng.integers(len(space), size=60)]
        pred = [space[i] for i in rng.integers(len(space), size=60)]
        base = macro_f1(gold, pred, L3)
        order = rng.permutation(60)
        shuffled = macro_f1([gold[i] for i in order], [pred[i] for i in order], L3)
        assert shuffled.macro_f1 == base.macro_f1
        assert shuffled.accuracy == base.accuracy

    def test_identity_scores_one(self):
        rng = np.random.default_rng(2)
        space = L3.all_directed()
        for _ in range(25):
            labels = [space[i] for i in rng.integers(len(space), size=30)]
            if all(l.is_other for l in labels):
                labels[0] = CE12
            assert macro_f1(labels, list(labels), L3).macro_f1 == 1.0

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            macro_f1([CE12], [], L3)

    def test_render_contains_machine_block(self):
        text = macro_f1([CE12], [CE12], L3).render()
        assert "macro_f1\t" in text
        assert "f1_Cause-Effect\t" in text


def tiny_model(regime, seed=0, instances=None):
    instances = instances or aligned_corpus(12, seed=5)
    seqs = [instance_path(i.raw, i.parse, PathMode.LABELED) for i in instances]
    vocab = build_vocab(seqs)
    K = (
        2 * SYNTH_LABELS.n_relations + 1
        if regime is Regime.BLIND
        else SYNTH_LABELS.n_relations + 1
    )
    hp = Hyperparams(d=4, w=3, n1=5, n2=4, K=K)
    We, _ = init_embeddings(vocab, None, 4, seed)
    params = init_network_params(hp, We, seed + 1)
    return TrainedModel(hp, vocab, SYNTH_LABELS, PathMode.LABELED, regime, params)


class TestPredictCorpus:
    def test_dual_direction_regime_applies_combine(self):
        instances = aligned_corpus(10, seed=6)
        model = tiny_model(Regime.SIGHTED_NS, instances=instances)
        preds, failed = predict_corpus(model, instances)
        assert failed == 0
        for p in preds:
            assert p.rev_probs is not None
            expect_label, expect_conf = combine(p.fwd_probs, p.rev_probs, SYNTH_LABELS)
            assert p.final == expect_label
            assert p.confidence == expect_conf

    def test_blind_regime_takes_directed_argmax(self):
        instances = aligned_corpus(10, seed=7)
        model = tiny_model(Regime.BLIND, instances=instances)
        preds, _ = predict_corpus(model, instances)
        directed = SYNTH_LABELS.all_directed()
        for p in preds:
            assert p.rev_probs is None
            assert p.final == directed[int(np.argmax(p.fwd_probs))]

    def test_sighted_regime_uses_gold_direction(self):
        instances = aligned_corpus(20, seed=8)
        model = tiny_model(Regime.SIGHTED, instances=instances)
        preds, _ = predict_corpus(model, instances)
        for inst, p in zip(instances, preds):
            seq = subject_first_path(inst.raw, inst.parse, model.mode)
            probs, _ = forward(model.params, model.hp, model.vocab.indexify(seq))
            assert np.array_equal(p.fwd_probs, probs)
            if not p.final.is_other and not inst.raw.label.is_other:
                assert p.final.direction is inst.raw.label.direction

    def test_regime_class_count_mismatch(self):
        instances = aligned_corpus(4, seed=9)
        model = tiny_model(Regime.SIGHTED_NS, instances=instances)
        with pytest.raises(ValueError, match="classes"):
            predict_corpus(model, instances, regime=Regime.BLIND)

    def test_extraction_failure_falls_back_to_other(self, monkeypatch):
        instances = aligned_corpus(3, seed=10)
        model = tiny_model(Regime.SIGHTED_NS, instances=instances)

        def boom(raw, parse, mode):
            raise PathError("forced")

        monkeypatch.setattr(infer_eval, "instance_path", boom)
        preds, failed = predict_corpus(model, instances)
        assert failed == 3
        for p in preds:
            assert p.failed
            assert p.final == OTHER_LABEL
            assert p.confidence == 0.0

    def test_swapping_nominals_flips_direction_only(self):
        instances = aligned_corpus(30, seed=11)
        model = tiny_model(Regime.SIGHTED_NS, instances=instances)
        swapped = [
            type(inst)(inst.raw.with_swapped_spans(), inst.parse) for inst in instances
        ]
        original, _ = predict_corpus(model, instances)
        mirrored, _ = predict_corpus(model, swapped)
        for a, b in zip(original, mirrored):
            assert a.confidence == b.confidence
            assert a.final.base == b.final.base
            if not a.final.is_other:
                assert b.final.direction is not a.final.direction


class TestPredictionFiles:
    def test_other_line_format_and_ordering(self, tmp_path):
        path = tmp_path / "pred.tsv"
        write_predictions([(43, CE21), (42, OTHER_LABEL)], path)
        assert path.read_text() == "42\tOther\n43\tCause-Effect(e2,e1)\n"

    def test_round_trip(self, tmp_path):
        path = tmp_path / "pred.tsv"
        rows = [(1, CE12), (2, OTHER_LABEL), (3, CW21)]
        write_predictions(rows, path)
        assert read_predictions(path, L3) == rows
