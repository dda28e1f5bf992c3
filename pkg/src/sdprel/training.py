"""Training-set construction under the three regimes, and SGD with AdaGrad.

The negative-sampling scheme turns the reversed subject/object path of every
non-Other training instance into an extra Other-labeled example; a pool file
of pre-encoded paths can supply random negatives instead.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .corpus import AlignedInstance, DirectedLabel, LabelSet, OTHER_LABEL
from .deppath import (
    NodeSequence,
    PathError,
    PathMode,
    instance_path,
    parse_path_line,
    reverse_path,
    subject_first_path,
)
from .embeddings import Vocab, build_vocab, init_embeddings
from .infer_eval import macro_f1, predict_corpus
from .model import Regime, TrainedModel
from .network import (
    Gradients,
    Hyperparams,
    NetworkParams,
    NumericError,
    backward,
    forward,
    init_network_params,
    loss,
    regularized_columns,
)

log = logging.getLogger(__name__)


class NegativeScheme(Enum):
    NONE = "none"
    REVERSED = "reversed"
    POOL = "pool"


class Provenance(Enum):
    GOLD = "gold"
    NEG_REVERSED = "neg-reversed"
    NEG_POOL = "neg-pool"


class ConfigError(Exception):
    """Invalid training configuration."""


@dataclass(frozen=True)
class TrainConfig:
    """Everything that determines a training run, file-loadable.

    Defaults follow the reference setup: window 3, 200 convolution filters,
    100 hidden units, per-matrix regularization (1e-4, 1e-3, 1e-4, 2e-3),
    50-dimensional embeddings.
    """

    regime: Regime = Regime.SIGHTED_NS
    negatives: NegativeScheme = NegativeScheme.REVERSED
    pool_path: str | None = None
    mode: PathMode = PathMode.LABELED
    d: int = 50
    w: int = 3
    n1: int = 200
    n2: int = 100
    lambda_we: float = 1e-4
    lambda_w1: float = 1e-3
    lambda_w2: float = 1e-4
    lambda_w3: float = 2e-3
    learning_rate: float = 0.01
    adagrad_epsilon: float = 1e-6
    max_epochs: int = 100
    patience: int = 5
    seed: int = 0
    min_count: int = 1
    embeddings_path: str | None = None
    lex_features_path: str | None = None
    labels_path: str | None = None

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if self.max_epochs < 1 or self.patience < 1:
            raise ConfigError("max_epochs and patience must be >= 1")
        wants_negatives = self.negatives is not NegativeScheme.NONE
        if wants_negatives != (self.regime is Regime.SIGHTED_NS):
            raise ConfigError(
                f"negatives={self.negatives.value} requires regime=sighted-ns "
                f"(and vice versa); got regime={self.regime.value}"
            )
        if (self.negatives is NegativeScheme.POOL) != (self.pool_path is not None):
            raise ConfigError("pool_path must be set exactly when negatives=pool")

    def hyperparams(self, K: int, f: int) -> Hyperparams:
        return Hyperparams(
            d=self.d, w=self.w, n1=self.n1, n2=self.n2, K=K, f=f,
            lambda_we=self.lambda_we, lambda_w1=self.lambda_w1,
            lambda_w2=self.lambda_w2, lambda_w3=self.lambda_w3,
        )


_INT_KEYS = {"d", "w", "n1", "n2", "max_epochs", "patience", "seed", "min_count"}
_FLOAT_KEYS = {
    "lambda_we", "lambda_w1", "lambda_w2", "lambda_w3",
    "learning_rate", "epsilon",
}
_PATH_KEYS = {"pool_path", "embeddings_path", "lex_features_path", "labels_path"}


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Read ``key = value`` lines; blank lines and # comments are skipped."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip()
    return values


def config_from_mapping(values: Mapping[str, str]) -> TrainConfig:
    """Build a TrainConfig from string key/value pairs (file or CLI)."""
    kwargs: dict = {}
    for key, value in values.items():
        if key == "regime":
            kwargs["regime"] = Regime(value)
        elif key == "negatives":
            kwargs["negatives"] = NegativeScheme(value)
        elif key == "mode":
            kwargs["mode"] = PathMode(value)
        elif key == "epsilon":
            kwargs["adagrad_epsilon"] = float(value)
        elif key in _INT_KEYS:
            kwargs[key] = int(value)
        elif key in _FLOAT_KEYS:
            kwargs[key] = float(value)
        elif key in _PATH_KEYS:
            kwargs[key] = value or None
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    try:
        return TrainConfig(**kwargs)
    except ValueError as e:
        raise ConfigError(str(e)) from None


# ---------------------------------------------------------------------------
# Training-set construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PathInstance:
    """An encoded path with its gold label, before vocabulary lookup."""

    id: int
    seq: NodeSequence
    label: DirectedLabel
    provenance: Provenance = Provenance.GOLD
    lexfeat: np.ndarray | None = None


@dataclass(frozen=True)
class LabeledInstance:
    """A vocabulary-indexed path with its target distribution."""

    id: int
    indices: tuple[int, ...]
    lexfeat: np.ndarray | None
    target: np.ndarray
    provenance: Provenance


def build_path_instances(
    instances: Sequence[AlignedInstance],
    config: TrainConfig,
    labels: LabelSet,
    lexfeats: Mapping[int, np.ndarray] | None = None,
) -> tuple[list[PathInstance], list[int]]:
    """Encode training paths per the regime, adding configured negatives.

    Instances whose path cannot be extracted are skipped; their ids are
    returned for reporting.
    """
    out: list[PathInstance] = []
    skipped: list[int] = []
    f = _lexfeat_length(lexfeats)
    for inst in instances:
        raw = inst.raw
        lex = _lexfeat_lookup(raw.id, f, lexfeats)
        try:
            if config.regime is Regime.BLIND:
                seq = instance_path(raw, inst.parse, config.mode)
            else:
                seq = subject_first_path(raw, inst.parse, config.mode)
        except PathError as e:
            log.warning("skipping instance %d: %s", raw.id, e)
            skipped.append(raw.id)
            continue
        out.append(PathInstance(raw.id, seq, raw.label, Provenance.GOLD, lex))
        if (
            config.negatives is NegativeScheme.REVERSED
            and not raw.label.is_other
        ):
            out.append(
                PathInstance(
                    raw.id, reverse_path(seq), OTHER_LABEL, Provenance.NEG_REVERSED, lex
                )
            )
    if config.negatives is NegativeScheme.POOL:
        for pool_id, seq in read_pool_file(config.pool_path, config.mode):
            out.append(
                PathInstance(
                    pool_id, seq, OTHER_LABEL, Provenance.NEG_POOL,
                    np.zeros(f) if f else None,
                )
            )
    if skipped:
        log.warning("skipped %d of %d instances", len(skipped), len(instances))
    return out, skipped


def read_pool_file(path: str | Path, mode: PathMode) -> list[tuple[int, NodeSequence]]:
    """Read pre-encoded negative paths (extract-paths output format)."""
    out = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read negative pool file {path}: {e}") from None
    for line in text.splitlines():
        if line.strip():
            out.append(parse_path_line(line, mode))
    return out


def read_lex_features(path: str | Path) -> dict[int, np.ndarray]:
    """Read per-instance feature vectors: ``ID<TAB>v1 v2 ...`` lines."""
    feats: dict[int, np.ndarray] = {}
    length: int | None = None
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        try:
            id_part, rest = line.split("\t", 1)
            vec = np.array([float(x) for x in rest.split()], dtype=np.float64)
        except ValueError:
            raise ConfigError(f"lexical features line {lineno}: malformed") from None
        if length is None:
            length = len(vec)
        elif len(vec) != length:
            raise ConfigError(
                f"lexical features line {lineno}: length {len(vec)} != {length}"
            )
        feats[int(id_part)] = vec
    return feats


def _lexfeat_length(lexfeats: Mapping[int, np.ndarray] | None) -> int:
    if not lexfeats:
        return 0
    return len(next(iter(lexfeats.values())))


def _lexfeat_lookup(
    inst_id: int, f: int, lexfeats: Mapping[int, np.ndarray] | None
) -> np.ndarray | None:
    if f == 0:
        return None
    if lexfeats is not None and inst_id in lexfeats:
        return lexfeats[inst_id]
    return np.zeros(f)


def target_vector(label: DirectedLabel, regime: Regime, labels: LabelSet) -> np.ndarray:
    """One-hot target in the regime's class space."""
    if regime is Regime.BLIND:
        t = np.zeros(2 * labels.n_relations + 1)
        t[labels.directed_index(label)] = 1.0
    else:
        t = np.zeros(labels.n_relations + 1)
        t[labels.base_index(label.base)] = 1.0
    return t


def to_labeled(
    path_instances: Sequence[PathInstance],
    vocab: Vocab,
    labels: LabelSet,
    regime: Regime,
) -> list[LabeledInstance]:
    return [
        LabeledInstance(
            p.id,
            vocab.indexify(p.seq),
            p.lexfeat,
            target_vector(p.label, regime, labels),
            p.provenance,
        )
        for p in path_instances
    ]


def build_training_set(
    instances: Sequence[AlignedInstance],
    config: TrainConfig,
    labels: LabelSet,
    vocab: Vocab,
    lexfeats: Mapping[int, np.ndarray] | None = None,
) -> tuple[list[LabeledInstance], list[int]]:
    """Full pipeline from aligned instances to indexed training examples."""
    paths, skipped = build_path_instances(instances, config, labels, lexfeats)
    return to_labeled(paths, vocab, labels, config.regime), skipped


# ---------------------------------------------------------------------------
# AdaGrad
# ---------------------------------------------------------------------------


@dataclass
class AdagradState:
    """Accumulated squared gradients, same shapes as the parameters."""

    sWe: np.ndarray
    sW1: np.ndarray
    sb1: np.ndarray
    sW2: np.ndarray
    sb2: np.ndarray
    sW3: np.ndarray
    sb3: np.ndarray

    @classmethod
    def zeros_like(cls, params: NetworkParams) -> "AdagradState":
        return cls(*(np.zeros_like(m) for m in params.blocks()))


def adagrad_update(
    params: NetworkParams,
    grads: Gradients,
    state: AdagradState,
    learning_rate: float,
    epsilon: float,
) -> None:
    """state += g²; param -= lr · g / (sqrt(state) + eps), elementwise.

    Embedding columns update sparsely: only the columns carrying gradient.
    """
    for name in ("W1", "b1", "W2", "b2", "W3", "b3"):
        g = getattr(grads, "d" + name)
        s = getattr(state, "s" + name)
        s += g * g
        getattr(params, name)[...] -= learning_rate * g / (np.sqrt(s) + epsilon)
    for col, g in grads.dWe.items():
        state.sWe[:, col] += g * g
        params.We[:, col] -= learning_rate * g / (np.sqrt(state.sWe[:, col]) + epsilon)


# ---------------------------------------------------------------------------
# The SGD loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    mean_loss: float
    dev_f1: float


def shuffle_order(seed: int, epoch: int, n: int) -> np.ndarray:
    """Deterministic permutation; depends only on (seed, epoch, n)."""
    return np.random.default_rng([seed, epoch]).permutation(n)


def train(
    config: TrainConfig,
    train_set: Sequence[LabeledInstance],
    params: NetworkParams,
    hp: Hyperparams,
    dev_evaluator: Callable[[NetworkParams], float] | None = None,
) -> tuple[NetworkParams, list[EpochStats]]:
    """Run epochs of per-example SGD with AdaGrad, early-stopped on dev F1.

    Keeps the best-dev parameter snapshot; stops after ``patience`` epochs
    without improvement.  Without a dev evaluator it runs max_epochs and
    returns the final parameters.
    """
    if not train_set:
        raise ConfigError("empty training set")
    state = AdagradState.zeros_like(params)
    history: list[EpochStats] = []
    best_f1 = -np.inf
    best_params: NetworkParams | None = None
    stale = 0

    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_order(config.seed, epoch, len(train_set))
        total = 0.0
        for k in order:
            inst = train_set[k]
            try:
                probs, cache = forward(params, hp, inst.indices, inst.lexfeat)
                total += loss(
                    probs, inst.target, params, hp,
                    regularized_columns(inst.indices, hp),
                )
                grads = backward(cache, inst.target, params, hp)
            except NumericError as e:
                raise NumericError(
                    f"epoch {epoch}, instance {inst.id}: {e}"
                ) from None
            adagrad_update(params, grads, state, config.learning_rate, config.adagrad_epsilon)
        mean_loss = total / len(train_set)

        dev_f1 = float("nan")
        if dev_evaluator is not None:
            dev_f1 = dev_evaluator(params)
            if dev_f1 > best_f1:
                best_f1 = dev_f1
                best_params = params.copy()
                stale = 0
            else:
                stale += 1
        history.append(EpochStats(epoch, mean_loss, dev_f1))
        if dev_evaluator is not None and stale >= config.patience:
            break

    final = best_params if best_params is not None else params
    return final, history


def write_history(history: Sequence[EpochStats], path: str | Path) -> None:
    """One ``epoch<TAB>mean_loss<TAB>dev_f1`` line per epoch."""
    text = "".join(f"{h.epoch}\t{h.mean_loss!r}\t{h.dev_f1!r}\n" for h in history)
    Path(path).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# End-to-end orchestration
# ---------------------------------------------------------------------------


def run_training(
    config: TrainConfig,
    train_instances: Sequence[AlignedInstance],
    dev_instances: Sequence[AlignedInstance] | None,
    labels: LabelSet,
) -> tuple[TrainedModel, list[EpochStats], dict]:
    """Wire the whole pipeline: paths, vocab, embeddings, SGD, dev scoring."""
    lexfeats = (
        read_lex_features(config.lex_features_path)
        if config.lex_features_path
        else None
    )
    f = _lexfeat_length(lexfeats)

    paths, skipped = build_path_instances(train_instances, config, labels, lexfeats)
    if not paths:
        raise ConfigError("no usable training instances")
    vocab = build_vocab((p.seq for p in paths), config.min_count)
    We, coverage = init_embeddings(vocab, config.embeddings_path, config.d, config.seed)

    K = 2 * labels.n_relations + 1 if config.regime is Regime.BLIND else labels.n_relations + 1
    hp = config.hyperparams(K=K, f=f)
    params = init_network_params(hp, We, config.seed + 1)
    train_set = to_labeled(paths, vocab, labels, config.regime)

    model = TrainedModel(hp, vocab, labels, config.mode, config.regime, params)
    dev_evaluator = None
    if dev_instances:
        dev_gold = [inst.raw.label for inst in dev_instances]

        def dev_evaluator(current: NetworkParams) -> float:
            snapshot = replace(model, params=current)
            preds, _ = predict_corpus(snapshot, dev_instances, config.regime, lexfeats)
            return macro_f1(dev_gold, [p.final for p in preds], labels).macro_f1

    best, history = train(config, train_set, params, hp, dev_evaluator)
    model.params = best
    info = {
        "skipped": skipped,
        "embedding_coverage": coverage,
        "n_train": len(train_set),
        "n_negatives": sum(
            1 for p in paths if p.provenance is not Provenance.GOLD
        ),
        "vocab_size": len(vocab),
    }
    return model, history, info
