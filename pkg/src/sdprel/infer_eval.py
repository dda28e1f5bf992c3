"""Dual-direction inference and macro-averaged F1 scoring.

Blind test instances are classified by scoring both path directions: the
label is Other only when both directions predict Other, otherwise the
highest-confidence non-Other prediction wins and fixes the direction.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import (
    AlignedInstance,
    CorpusError,
    DirectedLabel,
    Direction,
    LabelSet,
    OTHER,
    OTHER_LABEL,
)
from .deppath import PathError, instance_path, reverse_path, subject_first_path
from .model import Regime, TrainedModel
from .network import forward


@dataclass
class Prediction:
    """Per-instance outcome; probability vectors kept for inspection."""

    id: int
    fwd_probs: np.ndarray | None
    rev_probs: np.ndarray | None
    final: DirectedLabel
    confidence: float
    failed: bool = False


def combine(
    fwd_probs: np.ndarray, rev_probs: np.ndarray, labels: LabelSet
) -> tuple[DirectedLabel, float]:
    """Merge the two direction-wise base-class distributions into one label.

    Other wins only when it is the argmax of both directions; otherwise the
    best non-Other class across both directions decides base and direction,
    ties broken toward the forward (e1→e2) path.
    """
    k = labels.n_relations + 1
    if fwd_probs.shape != (k,) or rev_probs.shape != (k,):
        raise ValueError(
            f"expected two distributions of length {k}, got "
            f"{fwd_probs.shape} and {rev_probs.shape}"
        )
    other = labels.n_relations
    if np.argmax(fwd_probs) == other and np.argmax(rev_probs) == other:
        return OTHER_LABEL, float(max(fwd_probs[other], rev_probs[other]))
    best_fwd = int(np.argmax(fwd_probs[:other]))
    best_rev = int(np.argmax(rev_probs[:other]))
    if fwd_probs[best_fwd] >= rev_probs[best_rev]:
        label = DirectedLabel(labels.bases[best_fwd], Direction.E1_TO_E2)
        return label, float(fwd_probs[best_fwd])
    label = DirectedLabel(labels.bases[best_rev], Direction.E2_TO_E1)
    return label, float(rev_probs[best_rev])


def _lexfeat_for(
    inst_id: int, model: TrainedModel, lexfeats: Mapping[int, np.ndarray] | None
) -> np.ndarray | None:
    if model.hp.f == 0:
        return None
    if lexfeats is not None and inst_id in lexfeats:
        return lexfeats[inst_id]
    return np.zeros(model.hp.f)


def predict_corpus(
    model: TrainedModel,
    instances: Sequence[AlignedInstance],
    regime: Regime | None = None,
    lexfeats: Mapping[int, np.ndarray] | None = None,
) -> tuple[list[Prediction], int]:
    """Classify every instance under the given evaluation regime.

    Instances whose path cannot be extracted are predicted Other with
    confidence 0; the count of such failures is returned alongside.
    """
    regime = regime or model.regime
    need_k = (
        2 * model.labels.n_relations + 1
        if regime is Regime.BLIND
        else model.labels.n_relations + 1
    )
    if model.hp.K != need_k:
        raise ValueError(
            f"model has {model.hp.K} classes but regime {regime.value} needs {need_k}"
        )

    predictions: list[Prediction] = []
    failed = 0
    for inst in instances:
        lex = _lexfeat_for(inst.raw.id, model, lexfeats)
        try:
            if regime is Regime.SIGHTED:
                seq = subject_first_path(inst.raw, inst.parse, model.mode)
            else:
                seq = instance_path(inst.raw, inst.parse, model.mode)
        except PathError:
            failed += 1
            predictions.append(
                Prediction(inst.raw.id, None, None, OTHER_LABEL, 0.0, failed=True)
            )
            continue

        fwd_probs, _ = forward(model.params, model.hp, model.vocab.indexify(seq), lex)
        if regime is Regime.BLIND:
            k = int(np.argmax(fwd_probs))
            final = model.labels.all_directed()[k]
            pred = Prediction(inst.raw.id, fwd_probs, None, final, float(fwd_probs[k]))
        elif regime is Regime.SIGHTED:
            k = int(np.argmax(fwd_probs))
            base = model.labels.all_bases()[k]
            if base == OTHER:
                final = OTHER_LABEL
            else:
                direction = (
                    inst.raw.label.direction
                    if not inst.raw.label.is_other
                    else Direction.E1_TO_E2
                )
                final = DirectedLabel(base, direction)
            pred = Prediction(inst.raw.id, fwd_probs, None, final, float(fwd_probs[k]))
        else:
            rev = reverse_path(seq)
            rev_probs, _ = forward(model.params, model.hp, model.vocab.indexify(rev), lex)
            final, conf = combine(fwd_probs, rev_probs, model.labels)
            pred = Prediction(inst.raw.id, fwd_probs, rev_probs, final, conf)
        predictions.append(pred)
    return predictions, failed


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------


@dataclass
class RelationScore:
    precision: float
    recall: float
    f1: float
    tp: int
    n_gold: int
    n_pred: int


@dataclass
class ScoreReport:
    """Per-relation P/R/F1 with direction counted, plus the macro average.

    Relations absent from both gold and predictions are excluded from the
    macro mean (tracked in ``scored_relations``).
    """

    per_relation: dict[str, RelationScore]
    macro_f1: float
    accuracy: float
    confusion: Counter = field(default_factory=Counter)
    n: int = 0
    scored_relations: tuple[str, ...] = ()

    def render(self) -> str:
        width = max((len(r) for r in self.per_relation), default=8)
        lines = [
            f"{'relation':<{width}}  {'P':>7}  {'R':>7}  {'F1':>7}  {'TP':>5}  {'gold':>5}  {'pred':>5}"
        ]
        for name, s in self.per_relation.items():
            mark = "" if name in self.scored_relations else "  (absent)"
            lines.append(
                f"{name:<{width}}  {s.precision:7.4f}  {s.recall:7.4f}  {s.f1:7.4f}"
                f"  {s.tp:5d}  {s.n_gold:5d}  {s.n_pred:5d}{mark}"
            )
        lines.append("")
        lines.append(f"macro_f1\t{self.macro_f1!r}")
        lines.append(f"accuracy\t{self.accuracy!r}")
        lines.append(f"n\t{self.n}")
        for name, s in self.per_relation.items():
            lines.append(f"precision_{name}\t{s.precision!r}")
            lines.append(f"recall_{name}\t{s.recall!r}")
            lines.append(f"f1_{name}\t{s.f1!r}")
        return "\n".join(lines)


def macro_f1(
    gold: Sequence[DirectedLabel],
    pred: Sequence[DirectedLabel],
    labels: LabelSet,
) -> ScoreReport:
    """Directionality-aware macro-averaged F1 over the base relations.

    A true positive needs base and direction both right; precision and
    recall denominators count base matches regardless of direction.  Other
    never enters the macro average.
    """
    if len(gold) != len(pred):
        raise ValueError(f"length mismatch: {len(gold)} gold vs {len(pred)} predicted")
    confusion: Counter = Counter()
    correct = 0
    for g, p in zip(gold, pred):
        confusion[(str(g), str(p))] += 1
        if g == p:
            correct += 1

    per_relation: dict[str, RelationScore] = {}
    scored: list[str] = []
    f1_sum = 0.0
    for base in labels.bases:
        tp = sum(1 for g, p in zip(gold, pred) if g == p and g.base == base)
        n_gold = sum(1 for g in gold if g.base == base)
        n_pred = sum(1 for p in pred if p.base == base)
        precision = tp / n_pred if n_pred else 0.0
        recall = tp / n_gold if n_gold else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_relation[base] = RelationScore(precision, recall, f1, tp, n_gold, n_pred)
        if n_gold or n_pred:
            scored.append(base)
            f1_sum += f1

    macro = f1_sum / len(scored) if scored else 0.0
    accuracy = correct / len(gold) if gold else 0.0
    return ScoreReport(
        per_relation, macro, accuracy, confusion, len(gold), tuple(scored)
    )


# ---------------------------------------------------------------------------
# Prediction files
# ---------------------------------------------------------------------------


def write_predictions(
    predictions: Sequence[Prediction] | Sequence[tuple[int, DirectedLabel]],
    path: str | Path,
) -> None:
    """One ``ID<TAB>label`` line per instance, ascending id."""
    rows = []
    for p in predictions:
        if isinstance(p, Prediction):
            rows.append((p.id, p.final))
        else:
            rows.append((p[0], p[1]))
    rows.sort(key=lambda r: r[0])
    text = "".join(f"{i}\t{label}\n" for i, label in rows)
    Path(path).write_text(text, encoding="utf-8")


def read_predictions(
    path: str | Path, labels: LabelSet
) -> list[tuple[int, DirectedLabel]]:
    out = []
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise CorpusError(f"line {lineno}: expected 'ID<TAB>label'")
        out.append((int(parts[0]), labels.parse(parts[1])))
    return out
