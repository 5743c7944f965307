"""Multiclass logistic regression and one-vs-rest linear SVM trained by SGD.

Both learners minimize ``mean data loss + (l2 / 2) * ||W||^2`` (bias not
penalized) with minibatch SGD.  The step size follows
``learning_rate / (1 + decay * t)`` over the global step count ``t``.  The
L2 term is applied as an implicit (proximal) step, ``W <- W' / (1 + lr * l2)``,
which has the same fixed points as the explicit gradient step but stays
stable for very large penalties.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import TrainingError, ValidationError

KINDS = ("logreg", "linear_svm")
MODEL_FORMAT = "stylo-linear-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class Hyperparams:
    learning_rate: float = 0.1
    decay: float = 1e-3
    l2: float = 1e-4
    epochs: int = 30
    batch_size: int | None = 32  # None: full batch
    seed: int = 0

    def replace(self, **kw) -> "Hyperparams":
        return Hyperparams(**{**asdict(self), **kw})


@dataclass(frozen=True)
class LinearModel:
    kind: str
    weights: np.ndarray  # [num_categories, num_features]
    bias: np.ndarray  # [num_categories]
    hyperparams: Hyperparams
    category_order: tuple[str, ...]
    layout_checksum: str | None = None
    loss_history: tuple[float, ...] = field(default=(), compare=False)

    @property
    def num_features(self) -> int:
        return self.weights.shape[1]

    def to_json(self) -> str:
        return json.dumps(
            {
                "format": MODEL_FORMAT,
                "version": MODEL_VERSION,
                "kind": self.kind,
                "category_order": list(self.category_order),
                "hyperparams": asdict(self.hyperparams),
                "layout_checksum": self.layout_checksum,
                "weights": self.weights.tolist(),
                "bias": self.bias.tolist(),
                "loss_history": list(self.loss_history),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "LinearModel":
        doc = json.loads(text)
        if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
            raise ValidationError("not a stylo linear model file (or unsupported version)")
        return cls(
            kind=doc["kind"],
            weights=np.array(doc["weights"], dtype=float),
            bias=np.array(doc["bias"], dtype=float),
            hyperparams=Hyperparams(**doc["hyperparams"]),
            category_order=tuple(doc["category_order"]),
            layout_checksum=doc["layout_checksum"],
            loss_history=tuple(doc["loss_history"]),
        )


def _softmax(Z):
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def _signs(y, K):
    Y = -np.ones((len(y), K))
    Y[np.arange(len(y)), y] = 1.0
    return Y


def data_loss_grad(kind, W, b, X, y):
    """Mean data loss and its (sub)gradient w.r.t. W and b, without the L2 term."""
    n = X.shape[0]
    Z = X @ W.T + b
    K = W.shape[0]
    if kind == "logreg":
        Zs = Z - Z.max(axis=1, keepdims=True)
        logsum = np.log(np.exp(Zs).sum(axis=1))
        loss = float(np.mean(logsum - Zs[np.arange(n), y]))
        G = _softmax(Z)
        G[np.arange(n), y] -= 1.0
    elif kind == "linear_svm":
        Y = _signs(y, K)
        slack = 1.0 - Y * Z
        active = slack > 0
        loss = float(np.sum(np.where(active, slack, 0.0)) / n)
        G = np.where(active, -Y, 0.0)
    else:
        raise ValidationError(f"unknown model kind {kind!r}")
    G /= n
    return loss, G.T @ X, G.sum(axis=0)


def objective(kind, W, b, X, y, l2):
    loss, _, _ = data_loss_grad(kind, W, b, X, y)
    return loss + 0.5 * l2 * float(np.sum(W * W))


def gradient(kind, W, b, X, y, l2):
    _, gW, gb = data_loss_grad(kind, W, b, X, y)
    return gW + l2 * W, gb


def _check_inputs(X, y, n_categories):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise ValidationError(f"bad training shapes X{X.shape} y{y.shape}")
    if n_categories < 2:
        raise ValidationError("need at least 2 categories")
    if y.min() < 0 or y.max() >= n_categories:
        raise ValidationError("labels out of range")
    if not np.all(np.isfinite(X)):
        raise ValidationError("training features contain NaN or Inf")
    return X, y


# divergence is reported as TrainingError below, not as numpy warnings
@np.errstate(over="ignore", invalid="ignore")
def _train(kind, X, y, hp: Hyperparams, category_order=None, n_categories=None, layout_checksum=None):
    if category_order is not None:
        n_categories = len(category_order)
    elif n_categories is None:
        n_categories = int(np.max(y)) + 1
    X, y = _check_inputs(X, y, n_categories)
    if category_order is None:
        category_order = tuple(str(i) for i in range(n_categories))
    n, d = X.shape
    W = np.zeros((n_categories, d))
    b = np.zeros(n_categories)
    rng = np.random.default_rng(hp.seed)
    batch = n if hp.batch_size is None else max(1, min(hp.batch_size, n))
    history = [objective(kind, W, b, X, y, hp.l2)]
    t = 0
    for epoch in range(hp.epochs):
        order = rng.permutation(n) if batch < n else np.arange(n)
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            lr = hp.learning_rate / (1.0 + hp.decay * t)
            _, gW, gb = data_loss_grad(kind, W, b, X[idx], y[idx])
            W = (W - lr * gW) / (1.0 + lr * hp.l2)
            b = b - lr * gb
            t += 1
        loss = objective(kind, W, b, X, y, hp.l2)
        if not np.isfinite(loss) or not np.all(np.isfinite(W)):
            raise TrainingError(
                f"{kind}: non-finite loss at epoch {epoch + 1} "
                f"(learning_rate={hp.learning_rate}, decay={hp.decay}, l2={hp.l2})"
            )
        history.append(loss)
    return LinearModel(kind, W, b, hp, tuple(category_order), layout_checksum, tuple(history))


def train_logreg(X, y, hyperparams: Hyperparams | None = None, **kw) -> LinearModel:
    return _train("logreg", X, y, hyperparams or Hyperparams(), **kw)


def train_linear_svm(X, y, hyperparams: Hyperparams | None = None, **kw) -> LinearModel:
    return _train("linear_svm", X, y, hyperparams or Hyperparams(), **kw)


def train(kind, X, y, hyperparams: Hyperparams | None = None, **kw) -> LinearModel:
    if kind not in KINDS:
        raise ValidationError(f"unknown classifier {kind!r}; choose from {', '.join(KINDS)}")
    return _train(kind, X, y, hyperparams or Hyperparams(), **kw)


def predict_scores(model: LinearModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.num_features:
        raise ValidationError(f"feature length {X.shape[1]} != model's {model.num_features}")
    return X @ model.weights.T + model.bias


def predict(model: LinearModel, X) -> np.ndarray:
    """Argmax category index; np.argmax resolves ties to the lowest index."""
    return np.argmax(predict_scores(model, X), axis=1)


def gradient_check(kind, X, y, l2=1e-2, h=1e-5, seed=0, n_categories=None, W=None, b=None, kink_tol=1e-6):
    """Max relative error between the analytic gradient and central differences.

    Parameters are drawn at random unless given.  For the SVM, points whose
    margin lies within ``kink_tol`` of the hinge (widened by the largest
    possible margin shift of a single h-perturbation) are dropped from the
    objective, so the check never straddles a kink.  Relative error uses a
    denominator floor of ``h``: the central difference carries round-off of
    order eps * |objective| / h, so an exactly-zero gradient entry would
    otherwise turn that noise into a large ratio.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    K = n_categories or int(y.max()) + 1
    rng = np.random.default_rng(seed)
    W = rng.normal(scale=0.5, size=(K, X.shape[1])) if W is None else np.array(W, dtype=float)
    b = rng.normal(scale=0.5, size=K) if b is None else np.array(b, dtype=float)
    if kind == "linear_svm":
        margins = _signs(y, K) * (X @ W.T + b)
        reach = kink_tol + h * (np.abs(X).max(axis=1, keepdims=True) + 1.0)
        keep = np.all(np.abs(margins - 1.0) > reach, axis=1)
        X, y = X[keep], y[keep]
        if len(y) == 0:
            return 0.0
    gW, gb = gradient(kind, W, b, X, y, l2)
    worst = 0.0
    for P, G in ((W, gW), (b, gb)):
        for idx in np.ndindex(P.shape):
            old = P[idx]
            P[idx] = old + h
            up = objective(kind, W, b, X, y, l2)
            P[idx] = old - h
            down = objective(kind, W, b, X, y, l2)
            P[idx] = old
            num = (up - down) / (2 * h)
            denom = max(abs(num), abs(G[idx]), h)
            worst = max(worst, abs(num - G[idx]) / denom)
    return worst
