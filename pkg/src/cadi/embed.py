"""AngleEmbedding: projections that directly minimise sampled CADI.

Parametric mode pushes the data through a small MLP (d -> 128 -> 128 -> t)
and trains its weights with Adam; non-parametric mode runs Adam on the output
coordinates themselves. Both resample the class-constrained triplets every
epoch. PCA and uniform-random projections are provided as baselines.

Everything here is plain numpy with hand-written backprop.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, Partition, Projection, check_aligned
from .errors import TrainingDivergedError, ValidationError
from .geometry import EPS, triplet_cosines
from .sampling import (DEFAULT_TRAIN_MULTIPLIER, TripletArray, TripletBudget,
                       _require_nonempty, make_rng, sample_constrained)

log = logging.getLogger(__name__)

ACTIVATIONS = ("relu", "tanh", "identity")


# -- MLP ---------------------------------------------------------------------

@dataclass
class MlpParams:
    """Weights ``W[l]`` (fan_in x fan_out) and biases ``b[l]``; output layer is linear."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")
        if len(self.weights) != len(self.biases):
            raise ValidationError("weights and biases differ in layer count")
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.shape != (W.shape[1],):
                raise ValidationError(f"layer {l}: W {W.shape} incompatible with b {b.shape}")
            if l and W.shape[0] != self.weights[l - 1].shape[1]:
                raise ValidationError(f"layer {l}: input width {W.shape[0]} mismatches")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(W.shape[1] for W in self.weights)

    def flat(self) -> list[np.ndarray]:
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    @classmethod
    def from_flat(cls, arrays, activation="relu") -> MlpParams:
        return cls(list(arrays[0::2]), list(arrays[1::2]), activation)


def init_mlp(d: int, t: int, hidden=(128, 128), seed: int = 0,
             activation: str = "relu") -> MlpParams:
    """Glorot-uniform weights, zero biases."""
    rng = make_rng(seed)
    widths = (d, *hidden, t)
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases, activation)


def _act(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    return z


def _act_grad(z, a, kind):
    if kind == "relu":
        return (z > 0).astype(z.dtype)
    if kind == "tanh":
        return 1.0 - a * a
    return np.ones_like(z)


def mlp_forward(params: MlpParams, X, cache: bool = False):
    """Row-wise forward pass; with ``cache=True`` also returns the activations."""
    h = np.asarray(X, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != params.shape[0]:
        raise ValidationError(f"input has shape {h.shape}, network expects {params.shape[0]} columns")
    acts = [h]
    pre = []
    last = len(params.weights) - 1
    for l, (W, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ W + b
        h = z if l == last else _act(z, params.activation)
        pre.append(z)
        acts.append(h)
    if cache:
        return h, (pre, acts)
    return h


def mlp_backward(params: MlpParams, cache, dY: np.ndarray) -> list[np.ndarray]:
    """Gradients w.r.t. ``params.flat()`` given ``dLoss/dY``."""
    pre, acts = cache
    grads = [None] * (2 * len(params.weights))
    delta = dY
    for l in range(len(params.weights) - 1, -1, -1):
        grads[2 * l] = acts[l].T @ delta
        grads[2 * l + 1] = delta.sum(axis=0)
        if l:
            delta = (delta @ params.weights[l].T) * _act_grad(pre[l - 1], acts[l], params.activation)
    return grads


# -- loss --------------------------------------------------------------------

def _loss_grad_local(Y: np.ndarray, cos_x: np.ndarray, i, j, k, eps: float = EPS):
    u = Y[j] - Y[i]
    v = Y[k] - Y[i]
    nu = np.sqrt(np.einsum("ij,ij->i", u, u))
    nv = np.sqrt(np.einsum("ij,ij->i", v, v))
    ok = ~((nu < eps) | (nv < eps))  # NaN must stay non-degenerate so it propagates
    nu_s = np.where(ok, nu, 1.0)
    nv_s = np.where(ok, nv, 1.0)
    dot = np.einsum("ij,ij->i", u, v)
    cy = np.where(ok, np.clip(dot / (nu_s * nv_s), -1.0, 1.0), 1.0)
    diff = cos_x - cy
    count = len(diff)
    loss = float(np.dot(diff, diff)) / count

    coef = np.where(ok, -2.0 * diff / count, 0.0)    # dLoss/dcos_Y
    inv = 1.0 / (nu_s * nv_s)
    du = coef[:, None] * (v * inv[:, None] - (cy / nu_s ** 2)[:, None] * u)
    dv = coef[:, None] * (u * inv[:, None] - (cy / nv_s ** 2)[:, None] * v)
    grad = np.zeros_like(Y)
    np.add.at(grad, j, du)
    np.add.at(grad, k, dv)
    np.add.at(grad, i, -(du + dv))
    return loss, grad


def cadi_loss_and_grad(Y, X, triplets: TripletArray, cos_x: np.ndarray | None = None):
    """Mean squared cosine error over ``triplets`` and its gradient w.r.t. ``Y``.

    Triplets whose projected vectors are degenerate (norm < eps) count towards
    the loss with cos = 1 but contribute no gradient.
    """
    xp, yp = check_aligned(X, Y)
    if cos_x is None:
        cos_x = triplet_cosines(xp, triplets.i, triplets.j, triplets.k)
    return _loss_grad_local(yp, cos_x, triplets.i, triplets.j, triplets.k)


# -- Adam --------------------------------------------------------------------

@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_step(state: AdamState, params: list[np.ndarray], grads: list[np.ndarray]) -> list[np.ndarray]:
    """One bias-corrected Adam update. Mutates ``state``; returns new parameter arrays."""
    if len(params) != len(grads):
        raise ValidationError("parameter and gradient lists differ in length")
    for p, g in zip(params, grads):
        if np.shape(p) != np.shape(g):
            raise ValidationError(f"gradient shape {np.shape(g)} != parameter shape {np.shape(p)}")
    if not state.m:
        state.m = [np.zeros_like(p, dtype=np.float64) for p in params]
        state.v = [np.zeros_like(p, dtype=np.float64) for p in params]
    state.step += 1
    c1 = 1.0 - state.beta1 ** state.step
    c2 = 1.0 - state.beta2 ** state.step
    out = []
    for idx, (p, g) in enumerate(zip(params, grads)):
        state.m[idx] = state.beta1 * state.m[idx] + (1.0 - state.beta1) * g
        state.v[idx] = state.beta2 * state.v[idx] + (1.0 - state.beta2) * g * g
        mhat = state.m[idx] / c1
        vhat = state.v[idx] / c2
        out.append(p - state.lr * mhat / (np.sqrt(vhat) + state.eps))
    return out


# -- training ----------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    triplet_multiplier: float = DEFAULT_TRAIN_MULTIPLIER
    batch_size: int = 512
    seed: int = 0
    mode: str = "parametric"
    lr: float = 1e-3
    t: int = 2
    hidden: tuple[int, ...] = (128, 128)
    activation: str = "relu"
    weight_decay: float = 0.0
    init: str = "pca"  # non-parametric start: "pca" or "random"

    def __post_init__(self):
        if self.mode not in ("parametric", "nonparametric"):
            raise ValidationError(f"unknown mode {self.mode!r}")
        if self.weight_decay != 0.0:
            raise ValidationError("weight decay is not supported; it must be 0")
        if self.epochs < 0 or self.batch_size < 1 or not self.lr > 0 or self.t < 1:
            raise ValidationError("epochs >= 0, batch_size >= 1, lr > 0 and t >= 1 required")
        if self.init not in ("pca", "random"):
            raise ValidationError(f"unknown init {self.init!r}")


@dataclass
class EmbeddingResult:
    projection: Projection
    loss_trace: list[float]
    params: MlpParams | None = None


def _epoch_seed(seed: int, epoch: int) -> int:
    return int(np.random.SeedSequence([seed, epoch]).generate_state(1, np.uint64)[0])


class _Diverged:
    def __init__(self, window: int = 20, factor: float = 10.0):
        self.window, self.factor = window, factor
        self.first = None
        self.streak = 0

    def check(self, epoch: int, loss: float) -> None:
        if not np.isfinite(loss):
            raise TrainingDivergedError(f"non-finite loss at epoch {epoch}")
        if self.first is None:
            self.first = loss
        self.streak = self.streak + 1 if loss > self.factor * self.first else 0
        if self.streak >= self.window:
            raise TrainingDivergedError(
                f"loss above {self.factor}x its initial value {self.first:.4g} "
                f"for {self.window} epochs (now {loss:.4g} at epoch {epoch})")


def angle_embedding(X, C: Partition | None = None, cfg: TrainConfig | None = None,
                    init: np.ndarray | None = None) -> EmbeddingResult:
    """Fit an AngleEmbedding projection of ``X``.

    ``init`` overrides the non-parametric starting coordinates.
    """
    cfg = cfg or TrainConfig()
    if isinstance(X, Dataset):
        xp = X.points
        C = C or X.partition()
    else:
        xp = np.asarray(X, dtype=np.float64)
        if C is None:
            raise ValidationError("a partition is required when X is a bare matrix")
    if C.n != len(xp):
        raise ValidationError(f"partition covers {C.n} points, data has {len(xp)}")
    _require_nonempty(C)
    n = len(xp)

    if cfg.mode == "parametric":
        net = init_mlp(xp.shape[1], cfg.t, cfg.hidden, cfg.seed, cfg.activation)
        flat = net.flat()
    else:
        if init is not None:
            Y = np.array(init, dtype=np.float64)
            if Y.shape != (n, cfg.t):
                raise ValidationError(f"init has shape {Y.shape}, expected {(n, cfg.t)}")
        elif cfg.init == "pca" and cfg.t <= xp.shape[1]:
            Y = pca_project(xp, cfg.t).points.copy()
        else:
            Y = random_project(n, cfg.t, cfg.seed).points.copy()
        flat = [Y]

    state = AdamState(lr=cfg.lr)
    guard = _Diverged()
    trace: list[float] = []
    for epoch in range(cfg.epochs):
        trip = sample_constrained(C, TripletBudget.times_n(cfg.triplet_multiplier,
                                                           _epoch_seed(cfg.seed, epoch)))
        cos_x = triplet_cosines(xp, trip.i, trip.j, trip.k)
        total = 0.0
        for start in range(0, len(trip), cfg.batch_size):
            sl = slice(start, start + cfg.batch_size)
            bi, bj, bk = trip.i[sl], trip.j[sl], trip.k[sl]
            if cfg.mode == "parametric":
                rows, inv = np.unique(np.concatenate([bi, bj, bk]), return_inverse=True)
                li, lj, lk = np.split(inv, 3)
                net = MlpParams.from_flat(flat, cfg.activation)
                Yb, cache = mlp_forward(net, xp[rows], cache=True)
                loss, gY = _loss_grad_local(Yb, cos_x[sl], li, lj, lk)
                grads = mlp_backward(net, cache, gY)
            else:
                loss, gY = _loss_grad_local(flat[0], cos_x[sl], bi, bj, bk)
                grads = [gY]
            flat = adam_step(state, flat, grads)
            total += loss * len(bi)
        epoch_loss = total / len(trip)
        trace.append(epoch_loss)
        guard.check(epoch, epoch_loss)
        log.debug("epoch %d loss %.6f", epoch, epoch_loss)

    if cfg.mode == "parametric":
        net = MlpParams.from_flat(flat, cfg.activation)
        return EmbeddingResult(Projection(mlp_forward(net, xp)), trace, net)
    return EmbeddingResult(Projection(flat[0]), trace)


# -- baselines ---------------------------------------------------------------

@dataclass(frozen=True)
class PcaFit:
    mean: np.ndarray
    components: np.ndarray  # (t, d), rows are unit eigenvectors
    explained_variance: np.ndarray
    explained_variance_ratio: np.ndarray

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) @ self.components.T


def pca_fit(X, t: int) -> PcaFit:
    """Top-``t`` eigenvectors of the covariance matrix.

    Each component is signed so that its largest-magnitude entry is positive.
    """
    xp = X.points if isinstance(X, (Dataset, Projection)) else np.asarray(X, dtype=np.float64)
    d = xp.shape[1]
    if not 1 <= t <= d:
        raise ValidationError(f"target dimension {t} must be between 1 and d={d}")
    mean = xp.mean(axis=0)
    centered = xp - mean
    cov = centered.T @ centered / max(len(xp) - 1, 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    comps = evecs[:, order].T
    lead = np.argmax(np.abs(comps), axis=1)
    comps *= np.sign(comps[np.arange(d), lead])[:, None]
    total = evals.sum()
    ratio = evals / total if total > 0 else np.zeros_like(evals)
    return PcaFit(mean, comps[:t], evals[:t], ratio[:t])


def pca_project(X, t: int = 2) -> Projection:
    fit = pca_fit(X, t)
    xp = X.points if isinstance(X, (Dataset, Projection)) else X
    return Projection(fit.transform(xp))


def random_project(n: int, t: int = 2, seed: int = 0) -> Projection:
    """Positions drawn i.i.d. uniform in the unit square (or cube)."""
    return Projection(make_rng(seed).uniform(0.0, 1.0, size=(n, t)))
