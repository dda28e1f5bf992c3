"""The path convolution network: forward pass, loss, and exact gradients.

Pipeline per example: embedding lookup → sliding-window concatenation →
linear convolution → max pooling over path positions → tanh hidden layer →
softmax over relation classes.  Everything runs in float64 on single
examples; gradients are exact and validated against finite differences.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .embeddings import PAD_INDEX


class NumericError(Exception):
    """A non-finite value appeared during the forward or backward pass."""


@dataclass(frozen=True)
class Hyperparams:
    """Network sizes and per-matrix regularization weights.

    f is the length of the optional per-instance lexical feature vector
    concatenated before the softmax layer (0 disables it).  train_pad
    unfreezes the padding embedding column.
    """

    d: int
    w: int
    n1: int
    n2: int
    K: int
    f: int = 0
    lambda_we: float = 1e-4
    lambda_w1: float = 1e-3
    lambda_w2: float = 1e-4
    lambda_w3: float = 2e-3
    train_pad: bool = False

    def __post_init__(self) -> None:
        if min(self.d, self.w, self.n1, self.n2, self.K) <= 0:
            raise ValueError("all layer sizes must be positive")
        if self.w % 2 == 0:
            raise ValueError(f"window size must be odd, got {self.w}")
        if self.f < 0:
            raise ValueError("lexical feature length must be >= 0")
        if min(self.lambda_we, self.lambda_w1, self.lambda_w2, self.lambda_w3) < 0:
            raise ValueError("regularization weights must be >= 0")

    @property
    def d_w(self) -> int:
        return self.d * self.w


@dataclass
class NetworkParams:
    """All trainable matrices; We columns are indexed by vocabulary id."""

    We: np.ndarray  # d x |V|
    W1: np.ndarray  # n1 x d*w
    b1: np.ndarray  # n1
    W2: np.ndarray  # n2 x n1
    b2: np.ndarray  # n2
    W3: np.ndarray  # K x (n2 + f)
    b3: np.ndarray  # K

    def copy(self) -> "NetworkParams":
        return NetworkParams(*(m.copy() for m in self.blocks()))

    def blocks(self) -> tuple[np.ndarray, ...]:
        return (self.We, self.W1, self.b1, self.W2, self.b2, self.W3, self.b3)

    def check_shapes(self, hp: Hyperparams) -> None:
        expect = {
            "We": (hp.d, self.We.shape[1]),
            "W1": (hp.n1, hp.d_w),
            "b1": (hp.n1,),
            "W2": (hp.n2, hp.n1),
            "b2": (hp.n2,),
            "W3": (hp.K, hp.n2 + hp.f),
            "b3": (hp.K,),
        }
        for name, shape in expect.items():
            got = getattr(self, name).shape
            if got != shape:
                raise ValueError(f"{name} has shape {got}, expected {shape}")


def init_network_params(hp: Hyperparams, We: np.ndarray, seed: int) -> NetworkParams:
    """Uniform fan-in/fan-out initialization for the dense layers; zero biases."""
    rng = np.random.default_rng(seed)

    def glorot(rows: int, cols: int) -> np.ndarray:
        limit = np.sqrt(6.0 / (rows + cols))
        return rng.uniform(-limit, limit, size=(rows, cols))

    params = NetworkParams(
        We=np.asarray(We, dtype=np.float64),
        W1=glorot(hp.n1, hp.d_w),
        b1=np.zeros(hp.n1),
        W2=glorot(hp.n2, hp.n1),
        b2=np.zeros(hp.n2),
        W3=glorot(hp.K, hp.n2 + hp.f),
        b3=np.zeros(hp.K),
    )
    params.check_shapes(hp)
    return params


@dataclass
class ForwardCache:
    """Intermediate values forward saves for the backward pass."""

    indices: tuple[int, ...]
    X: np.ndarray          # d*w x t window matrix
    Z: np.ndarray          # n1 x t convolution output
    argmax: np.ndarray     # n1, pooled column index per filter
    pooled: np.ndarray     # n1
    hidden: np.ndarray     # n2, tanh output
    combined: np.ndarray   # n2 + f, hidden with lexical features appended
    lexfeat: np.ndarray | None
    scores: np.ndarray     # K
    probs: np.ndarray      # K


@dataclass
class Gradients:
    """Same shapes as the parameters; We gradients are sparse per column."""

    dW1: np.ndarray
    db1: np.ndarray
    dW2: np.ndarray
    db2: np.ndarray
    dW3: np.ndarray
    db3: np.ndarray
    dWe: dict[int, np.ndarray]


def window_concat(indices: Sequence[int], We: np.ndarray, w: int) -> np.ndarray:
    """Stack each position's size-w embedding window into one column.

    Positions outside the sequence contribute the padding column.
    """
    t = len(indices)
    if t < 1:
        raise ValueError("empty index sequence")
    half = (w - 1) // 2
    d = We.shape[0]
    X = np.empty((d * w, t))
    for j in range(t):
        for b in range(w):
            pos = j - half + b
            idx = indices[pos] if 0 <= pos < t else PAD_INDEX
            X[b * d : (b + 1) * d, j] = We[:, idx]
    return X


def softmax(scores: np.ndarray) -> np.ndarray:
    e = np.exp(scores - np.max(scores))
    return e / np.sum(e)


def _check_finite(value: np.ndarray, layer: str) -> None:
    if not np.all(np.isfinite(value)):
        raise NumericError(f"non-finite values in layer {layer!r}")


def forward(
    params: NetworkParams,
    hp: Hyperparams,
    indices: Sequence[int],
    lexfeat: np.ndarray | None = None,
) -> tuple[np.ndarray, ForwardCache]:
    """Run the network on one indexed path, returning class probabilities."""
    if (lexfeat is not None) != (hp.f > 0):
        raise ValueError("lexical feature vector must be given exactly when f > 0")
    if lexfeat is not None and lexfeat.shape != (hp.f,):
        raise ValueError(f"lexical feature shape {lexfeat.shape}, expected ({hp.f},)")

    X = window_concat(indices, params.We, hp.w)
    Z = params.W1 @ X + params.b1[:, None]
    _check_finite(Z, "convolution")
    argmax = np.argmax(Z, axis=1)  # ties resolve to the lowest column
    pooled = Z[np.arange(hp.n1), argmax]
    hidden = np.tanh(params.W2 @ pooled + params.b2)
    _check_finite(hidden, "hidden")
    combined = hidden if lexfeat is None else np.concatenate([hidden, lexfeat])
    scores = params.W3 @ combined + params.b3
    _check_finite(scores, "scores")
    probs = softmax(scores)
    _check_finite(probs, "softmax")
    cache = ForwardCache(
        tuple(indices), X, Z, argmax, pooled, hidden, combined, lexfeat, scores, probs
    )
    return probs, cache


def regularized_columns(indices: Sequence[int], hp: Hyperparams) -> list[int]:
    """Embedding columns this example touches and trains.

    Window overflow touches the pad column whenever w > 1; the pad column
    only counts as trainable when train_pad is set.
    """
    cols = set(indices)
    if hp.w > 1:
        cols.add(PAD_INDEX)
    if not hp.train_pad:
        cols.discard(PAD_INDEX)
    return sorted(cols)


def loss(
    probs: np.ndarray,
    target: np.ndarray,
    params: NetworkParams,
    hp: Hyperparams,
    touched_cols: Sequence[int] | None = None,
) -> float:
    """Cross entropy plus squared-norm regularization of the weight matrices.

    Biases are never regularized.  The embedding penalty is restricted to
    the columns the example touched when touched_cols is given (the form the
    per-example gradients optimize); with None the full matrix counts.
    """
    ce = -float(np.dot(target, np.log(probs)))
    reg = (
        hp.lambda_w1 * float(np.sum(params.W1 * params.W1))
        + hp.lambda_w2 * float(np.sum(params.W2 * params.W2))
        + hp.lambda_w3 * float(np.sum(params.W3 * params.W3))
    )
    if touched_cols is None:
        reg += hp.lambda_we * float(np.sum(params.We * params.We))
    elif len(touched_cols) > 0:
        cols = params.We[:, list(touched_cols)]
        reg += hp.lambda_we * float(np.sum(cols * cols))
    return ce + reg


def backward(
    cache: ForwardCache,
    target: np.ndarray,
    params: NetworkParams,
    hp: Hyperparams,
) -> Gradients:
    """Exact gradients of the per-example loss for every parameter block.

    Max pooling routes gradient only to each filter's argmax column; only
    touched embedding columns receive gradient (with their share of the
    regularizer), so untouched columns are exactly zero.
    """
    params.check_shapes(hp)
    if cache.probs.shape != (hp.K,) or cache.Z.shape[0] != hp.n1:
        raise ValueError("forward cache does not match these hyperparameters")
    if cache.X.shape != (hp.d_w, len(cache.indices)):
        raise ValueError("forward cache is stale: window matrix shape mismatch")

    t = len(cache.indices)
    half = (hp.w - 1) // 2

    dscores = cache.probs - target
    dW3 = np.outer(dscores, cache.combined) + 2.0 * hp.lambda_w3 * params.W3
    db3 = dscores.copy()
    dcombined = params.W3.T @ dscores
    dhidden = dcombined[: hp.n2]

    dpre = (1.0 - cache.hidden**2) * dhidden
    dW2 = np.outer(dpre, cache.pooled) + 2.0 * hp.lambda_w2 * params.W2
    db2 = dpre.copy()
    dpooled = params.W2.T @ dpre

    # dZ has one nonzero per row, at the pooled column.
    dW1 = dpooled[:, None] * cache.X[:, cache.argmax].T + 2.0 * hp.lambda_w1 * params.W1
    db1 = dpooled.copy()
    dX_T = np.zeros((t, hp.d_w))
    np.add.at(dX_T, cache.argmax, dpooled[:, None] * params.W1)

    dWe: dict[int, np.ndarray] = {}
    for j in range(t):
        for b in range(hp.w):
            pos = j - half + b
            idx = cache.indices[pos] if 0 <= pos < t else PAD_INDEX
            if idx == PAD_INDEX and not hp.train_pad:
                continue
            g = dX_T[j, b * hp.d : (b + 1) * hp.d]
            if idx in dWe:
                dWe[idx] += g
            else:
                dWe[idx] = g.copy()
    for idx in regularized_columns(cache.indices, hp):
        reg = 2.0 * hp.lambda_we * params.We[:, idx]
        if idx in dWe:
            dWe[idx] += reg
        else:
            dWe[idx] = reg

    grads = Gradients(dW1, db1, dW2, db2, dW3, db3, dWe)
    for block in (dW1, db1, dW2, db2, dW3, db3, *dWe.values()):
        _check_finite(block, "gradients")
    return grads


# ---------------------------------------------------------------------------
# Finite-difference gradient verification
# ---------------------------------------------------------------------------


@dataclass
class GradCheckReport:
    """Max relative error per parameter block across all checked configs."""

    block_errors: dict[str, float]
    tolerance: float
    n_configs: int

    @property
    def passed(self) -> bool:
        return all(e <= self.tolerance for e in self.block_errors.values())

    @property
    def failing_blocks(self) -> list[str]:
        return [b for b, e in self.block_errors.items() if e > self.tolerance]

    def render(self) -> str:
        lines = [f"gradient check: {self.n_configs} configurations, tolerance {self.tolerance:g}"]
        for name, err in self.block_errors.items():
            status = "ok" if err <= self.tolerance else "FAIL"
            lines.append(f"  {name:<3} max relative error {err:.3e}  {status}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


_CHECK_CONFIGS = (
    # d, w, n1, n2, K, f, t, train_pad, multi_label
    dict(d=4, w=3, n1=5, n2=4, K=3, f=0, t=4, train_pad=False, multi=False),
    dict(d=3, w=3, n1=4, n2=3, K=3, f=0, t=1, train_pad=False, multi=False),
    dict(d=4, w=3, n1=5, n2=4, K=4, f=3, t=5, train_pad=False, multi=True),
    dict(d=5, w=1, n1=6, n2=5, K=3, f=0, t=6, train_pad=False, multi=False),
    dict(d=3, w=5, n1=4, n2=3, K=5, f=2, t=3, train_pad=True, multi=False),
)


def _random_case(cfg: dict, rng: np.random.Generator):
    hp = Hyperparams(
        d=cfg["d"], w=cfg["w"], n1=cfg["n1"], n2=cfg["n2"], K=cfg["K"], f=cfg["f"],
        lambda_we=1e-3, lambda_w1=1e-3, lambda_w2=1e-3, lambda_w3=1e-3,
        train_pad=cfg["train_pad"],
    )
    vocab_size = 9
    params = NetworkParams(
        We=rng.normal(scale=0.5, size=(hp.d, vocab_size)),
        W1=rng.normal(scale=0.5, size=(hp.n1, hp.d_w)),
        b1=rng.normal(scale=0.2, size=hp.n1),
        W2=rng.normal(scale=0.5, size=(hp.n2, hp.n1)),
        b2=rng.normal(scale=0.2, size=hp.n2),
        W3=rng.normal(scale=0.5, size=(hp.K, hp.n2 + hp.f)),
        b3=rng.normal(scale=0.2, size=hp.K),
    )
    if not hp.train_pad:
        params.We[:, PAD_INDEX] = 0.0
    indices = tuple(rng.integers(1, vocab_size, size=cfg["t"]))
    lexfeat = rng.normal(size=hp.f) if hp.f > 0 else None
    target = np.zeros(hp.K)
    if cfg["multi"]:
        a, b = rng.choice(hp.K, size=2, replace=False)
        target[a] = target[b] = 0.5
    else:
        target[rng.integers(hp.K)] = 1.0
    return hp, params, indices, lexfeat, target


def _fd_gradient(fn, array: np.ndarray, step: float) -> np.ndarray:
    grad = np.zeros_like(array)
    it = np.nditer(array, flags=["multi_index"])
    while not it.finished:
        ix = it.multi_index
        orig = array[ix]
        array[ix] = orig + step
        hi = fn()
        array[ix] = orig - step
        lo = fn()
        array[ix] = orig
        grad[ix] = (hi - lo) / (2.0 * step)
        it.iternext()
    return grad


def _relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    if denom < 1e-12:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / denom)


def grad_check(
    seed: int = 0,
    step: float = 1e-5,
    tolerance: float = 1e-4,
    corrupt_block: str | None = None,
) -> GradCheckReport:
    """Compare analytic gradients with central finite differences.

    Runs every built-in configuration (covering t=1 full-padding paths,
    lexical features, multi-label targets, and a trainable pad column).
    corrupt_block is a test hook that perturbs one analytic block so the
    report must flag it.
    """
    rng = np.random.default_rng(seed)
    errors: dict[str, float] = {k: 0.0 for k in ("We", "W1", "b1", "W2", "b2", "W3", "b3")}

    for cfg in _CHECK_CONFIGS:
        hp, params, indices, lexfeat, target = _random_case(cfg, rng)
        touched = regularized_columns(indices, hp)

        def objective() -> float:
            p, _ = forward(params, hp, indices, lexfeat)
            return loss(p, target, params, hp, touched)

        _, cache = forward(params, hp, indices, lexfeat)
        grads = backward(cache, target, params, hp)
        if corrupt_block is not None:
            _corrupt(grads, corrupt_block, rng)

        for name in ("W1", "b1", "W2", "b2", "W3", "b3"):
            analytic = getattr(grads, "d" + name)
            numeric = _fd_gradient(objective, getattr(params, name), step)
            errors[name] = max(errors[name], _relative_error(analytic, numeric))

        for idx in touched:
            analytic = grads.dWe.get(idx, np.zeros(hp.d))
            numeric = _fd_gradient(objective, params.We[:, idx], step)
            errors["We"] = max(errors["We"], _relative_error(analytic, numeric))

    return GradCheckReport(errors, tolerance, len(_CHECK_CONFIGS))


def _corrupt(grads: Gradients, block: str, rng: np.random.Generator) -> None:
    if block == "We":
        for g in grads.dWe.values():
            g += rng.normal(scale=0.05, size=g.shape) + 0.05
        return
    target = getattr(grads, "d" + block)
    target += rng.normal(scale=0.05, size=target.shape) + 0.05
