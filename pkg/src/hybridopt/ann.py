"""One-hidden-layer tanh network used as an objective emulator.

Inputs are mapped affinely to [-1, 1] per dimension, outputs are
standardized per objective. Training is full-batch gradient descent (with
an optional heavy-ball momentum term) on the mean squared error, with early
stopping on a held-out split.

Text format (``AnnModel.to_text``)::

    hybridopt-ann 1
    <dim> <hidden> <outputs>
    W1 <row-major hidden x dim values>
    b1 ...
    W2 <row-major outputs x hidden values>
    b2 ...
    in_lower ...
    in_upper ...
    out_mean ...
    out_std ...
    degenerate <0/1 per output>
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError, ObjectiveReport

STD_FLOOR = 1e-12
_MAGIC = "hybridopt-ann 1"


@dataclass
class AnnConfig:
    hidden_width: int | None = None  # None -> max(8, 2*dim)
    epochs: int = 2000
    learning_rate: float = 0.05
    momentum: float = 0.9  # heavy-ball term; 0 gives plain gradient descent
    validation_fraction: float = 0.2
    patience: int | None = 200  # epochs without validation gain before stopping; None disables

    def __post_init__(self):
        if self.hidden_width is not None and self.hidden_width < 1:
            raise ConfigError("hidden_width must be positive")
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError("momentum must lie in [0, 1)")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ConfigError("validation_fraction must lie in [0, 1)")

    def width_for(self, dim: int) -> int:
        return self.hidden_width or max(8, 2 * dim)


@dataclass
class AnnModel:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    in_lower: np.ndarray
    in_upper: np.ndarray
    out_mean: np.ndarray
    out_std: np.ndarray
    degenerate: tuple[bool, ...] = ()
    validation_rmse: float = float("nan")
    epochs_run: int = 0
    history: list[float] = field(default_factory=list, repr=False)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.W1.shape[1], self.W1.shape[0], self.W2.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}

    def with_params(self, p: dict[str, np.ndarray]) -> "AnnModel":
        return AnnModel(p["W1"].copy(), p["b1"].copy(), p["W2"].copy(), p["b2"].copy(),
                        self.in_lower, self.in_upper, self.out_mean, self.out_std, self.degenerate)

    def normalize_inputs(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return 2.0 * (X - self.in_lower) / (self.in_upper - self.in_lower) - 1.0

    def predict_normalized(self, Xn) -> np.ndarray:
        return forward(self.params(), np.atleast_2d(Xn))[0]

    def predict(self, X) -> np.ndarray:
        """Raw-space predictions, shape (n, outputs)."""
        return self.predict_normalized(self.normalize_inputs(X)) * self.out_std + self.out_mean

    def __call__(self, x) -> tuple[float, ...]:
        return tuple(float(v) for v in self.predict(x)[0])

    def to_text(self) -> str:
        d, h, m = self.dims

        def row(name, a):
            return name + " " + " ".join(repr(float(v)) for v in np.ravel(a))

        lines = [_MAGIC, f"{d} {h} {m}", row("W1", self.W1), row("b1", self.b1),
                 row("W2", self.W2), row("b2", self.b2), row("in_lower", self.in_lower),
                 row("in_upper", self.in_upper), row("out_mean", self.out_mean),
                 row("out_std", self.out_std),
                 "degenerate " + " ".join(str(int(b)) for b in self.degenerate)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "AnnModel":
        lines = text.strip().splitlines()
        if not lines or lines[0].strip() != _MAGIC:
            raise ValueError("not a serialized network")
        d, h, m = (int(v) for v in lines[1].split())
        arrays = {}
        for line in lines[2:]:
            name, *vals = line.split()
            arrays[name] = np.array([float(v) for v in vals])
        return cls(arrays["W1"].reshape(h, d), arrays["b1"], arrays["W2"].reshape(m, h),
                   arrays["b2"], arrays["in_lower"], arrays["in_upper"], arrays["out_mean"],
                   arrays["out_std"], tuple(bool(int(v)) for v in arrays.get("degenerate", [])))


def init_params(dim: int, hidden: int, outputs: int, rng: np.random.Generator) -> dict:
    return {"W1": rng.standard_normal((hidden, dim)) / np.sqrt(dim),
            "b1": np.zeros(hidden),
            "W2": rng.standard_normal((outputs, hidden)) / np.sqrt(hidden),
            "b2": np.zeros(outputs)}


def forward(p: dict, Xn: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalized outputs and hidden activations."""
    a = np.tanh(Xn @ p["W1"].T + p["b1"])
    return a @ p["W2"].T + p["b2"], a


def loss_and_grad(p: dict, Xn: np.ndarray, Tn: np.ndarray) -> tuple[float, dict]:
    """Mean squared error over all samples and outputs, with its backprop gradient."""
    Y, a = forward(p, Xn)
    r = Y - Tn
    loss = float(np.vdot(r, r)) / r.size
    dY = 2.0 * r / r.size
    dz = (dY @ p["W2"]) * (1.0 - a * a)
    return loss, {"W1": dz.T @ Xn, "b1": dz.sum(axis=0), "W2": dY.T @ a, "b2": dY.sum(axis=0)}


def train_ann(X, Y, cfg: AnnConfig | None, rng: np.random.Generator, *,
              in_lower=None, in_upper=None) -> AnnModel:
    """Fit a network to raw inputs ``X`` (n, dim) and targets ``Y`` (n, m).

    The input map uses ``in_lower``/``in_upper`` when given (the current
    search box), else the sample range. Constant target columns get a unit
    scale and are flagged in ``degenerate``. Returns the parameters with the
    lowest validation error seen.
    """
    cfg = cfg or AnnConfig()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, dim = X.shape
    if len(Y) != n:
        raise ConfigError("inputs and targets differ in length")
    if n < 2:
        raise ConfigError("need at least two samples")
    lo = X.min(axis=0) if in_lower is None else np.asarray(in_lower, dtype=float)
    hi = X.max(axis=0) if in_upper is None else np.asarray(in_upper, dtype=float)
    hi = np.where(hi > lo, hi, lo + 1.0)
    mean = Y.mean(axis=0)
    std = Y.std(axis=0)
    degenerate = tuple(bool(s < STD_FLOOR) for s in std)
    std = np.where(std < STD_FLOOR, 1.0, std)

    params = init_params(dim, cfg.width_for(dim), Y.shape[1], rng)
    model = AnnModel(**params, in_lower=lo, in_upper=hi, out_mean=mean, out_std=std,
                     degenerate=degenerate)
    Xn = model.normalize_inputs(X)
    Tn = (Y - mean) / std
    n_val = int(round(cfg.validation_fraction * n)) if n >= 4 else 0
    order = rng.permutation(n)
    val, tr = order[:n_val], order[n_val:]
    if cfg.epochs == 0:
        return model

    Xt, Tt = Xn[tr], Tn[tr]
    Xv, Tv = (Xn[val], Tn[val]) if n_val else (Xt, Tt)

    def val_loss(p):
        r = forward(p, Xv)[0] - Tv
        return float(np.vdot(r, r)) / r.size

    best_p = {k: v.copy() for k, v in params.items()}
    best_v = val_loss(params)
    history = [best_v]
    velocity = {k: np.zeros_like(v) for k, v in params.items()}
    stale = 0
    epoch = 0
    for epoch in range(1, cfg.epochs + 1):
        loss, g = loss_and_grad(params, Xt, Tt)
        if not np.isfinite(loss):
            break
        for k in params:
            velocity[k] = cfg.momentum * velocity[k] - cfg.learning_rate * g[k]
            params[k] += velocity[k]
        v = val_loss(params)
        history.append(v)
        if v < best_v:
            best_v, stale = v, 0
            best_p = {k: w.copy() for k, w in params.items()}
        else:
            stale += 1
            if cfg.patience is not None and stale >= cfg.patience:
                break
    out = model.with_params(best_p)
    out.validation_rmse = float(np.sqrt(best_v))
    out.epochs_run = epoch
    out.history = history
    return out


def ann_predict(model: AnnModel, x) -> ObjectiveReport:
    """Surrogate report at ``x``; surrogate outputs carry no trust penalty."""
    return ObjectiveReport(model(x), 0.0)
