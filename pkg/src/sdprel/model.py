"""The trained-model artifact: everything needed to classify new instances.

Saved as a single JSON document.  Floats survive the round trip bit-exactly
(shortest round-trip decimal representation), so save/load/save is stable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .corpus import LabelSet
from .deppath import PathMode
from .embeddings import Vocab
from .network import Hyperparams, NetworkParams

FORMAT_TAG = "sdprel-model/1"


class Regime(Enum):
    """How subject/object assignments are used in training and inference.

    BLIND trains and predicts over the doubled directed class space on the
    e1→e2 path.  SIGHTED trains on the gold subject→object path over base
    classes and is scored with the assignment given.  SIGHTED_NS adds
    negative examples in training and classifies blind inputs by running
    both path directions and combining.
    """

    BLIND = "blind"
    SIGHTED = "sighted"
    SIGHTED_NS = "sighted-ns"


@dataclass
class TrainedModel:
    hp: Hyperparams
    vocab: Vocab
    labels: LabelSet
    mode: PathMode
    regime: Regime
    params: NetworkParams

    @property
    def n_classes(self) -> int:
        return self.hp.K


def save_model(model: TrainedModel, path: str | Path) -> None:
    hp = model.hp
    doc = {
        "format": FORMAT_TAG,
        "hyperparams": {
            "d": hp.d, "w": hp.w, "n1": hp.n1, "n2": hp.n2, "K": hp.K, "f": hp.f,
            "lambda_we": hp.lambda_we, "lambda_w1": hp.lambda_w1,
            "lambda_w2": hp.lambda_w2, "lambda_w3": hp.lambda_w3,
            "train_pad": hp.train_pad,
        },
        "mode": model.mode.value,
        "regime": model.regime.value,
        "labels": list(model.labels.bases),
        "vocab": {
            "items": list(model.vocab.items),
            "word_strings": sorted(model.vocab.word_strings),
        },
        "params": {
            name: getattr(model.params, name).tolist()
            for name in ("We", "W1", "b1", "W2", "b2", "W3", "b3")
        },
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_model(path: str | Path) -> TrainedModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    tag = doc.get("format")
    if tag != FORMAT_TAG:
        raise ValueError(f"unsupported model format {tag!r} (expected {FORMAT_TAG!r})")
    hp = Hyperparams(**doc["hyperparams"])
    params = NetworkParams(
        **{name: np.array(doc["params"][name], dtype=np.float64)
           for name in ("We", "W1", "b1", "W2", "b2", "W3", "b3")}
    )
    params.check_shapes(hp)
    vocab = Vocab(tuple(doc["vocab"]["items"]), frozenset(doc["vocab"]["word_strings"]))
    return TrainedModel(
        hp=hp,
        vocab=vocab,
        labels=LabelSet(tuple(doc["labels"])),
        mode=PathMode(doc["mode"]),
        regime=Regime(doc["regime"]),
        params=params,
    )
