"""Single-hidden-layer regression network trained by scaled conjugate gradient.

Architecture is 3 -> H -> 1 with tanh hidden units and a logistic-sigmoid
output, operating on z-scored predictors and a target scaled into
[0.2, 0.8]. Training is full batch; one epoch is one SCG iteration.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import CapacityError, ConfigError, DataError, NumericFailure
from .metrics import timed

N_INPUTS = 3
PATTERNS_PER_PARAMETER = 15
DEFAULT_CANDIDATES = (2, 4, 6, 8, 12, 16)


@dataclass
class MlpModel:
    W1: np.ndarray  # (H, 3)
    b1: np.ndarray  # (H,)
    W2: np.ndarray  # (H,)
    b2: float

    @property
    def H(self):
        return len(self.b1)

    @property
    def n_params(self):
        return n_params(self.H)

    def flat(self):
        return np.concatenate([self.W1.ravel(), self.b1, self.W2, [self.b2]])

    @classmethod
    def from_flat(cls, w, H):
        w = np.asarray(w, dtype=float)
        if w.size != n_params(H):
            raise ValueError(f"expected {n_params(H)} parameters, got {w.size}")
        k = H * N_INPUTS
        return cls(w[:k].reshape(H, N_INPUTS).copy(), w[k:k + H].copy(),
                   w[k + H:k + 2 * H].copy(), float(w[-1]))

    def __eq__(self, other):
        if not isinstance(other, MlpModel):
            return NotImplemented
        return self.H == other.H and np.array_equal(self.flat(), other.flat())


@dataclass(frozen=True)
class TrainConfig:
    max_epoch: int = 2000
    err_min: float = 1e-4
    seed: int = 0
    scg_sigma: float = 5.0e-5
    scg_lambda0: float = 5.0e-7

    def __post_init__(self):
        if int(self.max_epoch) != self.max_epoch or self.max_epoch < 1:
            raise ConfigError(f"max_epoch must be a positive integer, got {self.max_epoch}")
        if not self.err_min >= 0:
            raise ConfigError(f"err_min must be >= 0, got {self.err_min}")
        if not (self.scg_sigma > 0 and self.scg_lambda0 > 0):
            raise ConfigError("scg_sigma and scg_lambda0 must be positive")


@dataclass
class TrainTrace:
    history: list = field(default_factory=list)
    stop_reason: str = ""
    wall_time: float = 0.0

    @property
    def epochs_run(self):
        return len(self.history)

    @property
    def final_rmse(self):
        return self.history[-1] if self.history else float("nan")


def n_params(H):
    return (N_INPUTS + 2) * H + 1


def check_capacity(H, n_train):
    """True when the training set holds at least 15 patterns per trainable parameter."""
    return PATTERNS_PER_PARAMETER * n_params(H) <= n_train


def init_weights(H, seed):
    """Uniform fan-in scaled initialization, reproducible for a given ``(H, seed)``."""
    if int(H) != H or H < 1:
        raise ConfigError(f"hidden size must be >= 1, got {H}")
    H = int(H)
    rng = np.random.default_rng(seed)
    r_in = 1.0 / np.sqrt(N_INPUTS)
    r_hid = 1.0 / np.sqrt(H)
    W1 = rng.uniform(-r_in, r_in, size=(H, N_INPUTS))
    b1 = rng.uniform(-r_in, r_in, size=H)
    W2 = rng.uniform(-r_hid, r_hid, size=H)
    b2 = float(rng.uniform(-r_hid, r_hid))
    return MlpModel(W1, b1, W2, b2)


def _hidden(model, xt):
    # xt is (3, N); elementwise accumulation keeps each output independent of
    # batch composition, so chunked and whole-array evaluation agree bitwise
    a = model.b1[:, None] + model.W1[:, 0:1] * xt[0]
    for k in range(1, N_INPUTS):
        a = a + model.W1[:, k:k + 1] * xt[k]
    return np.tanh(a)


def _output(model, h):
    z = np.full(h.shape[1], model.b2)
    for j in range(model.H):
        z = z + model.W2[j] * h[j]
    return expit(z)


def forward(model, x):
    """Network output in (0, 1) for one 3-vector or an ``(N, 3)`` batch."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xt = x.reshape(1, -1).T if single else x.T
    y = _output(model, _hidden(model, xt))
    return float(y[0]) if single else y


def _check_batch(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if x.ndim != 2 or x.shape[1] != N_INPUTS or len(x) != len(y):
        raise DataError(f"batch must be (N, {N_INPUTS}) inputs with N targets")
    if len(y) == 0:
        raise DataError("empty batch")
    return x, y


class _Objective:
    """Half mean squared error and its gradient over a fixed batch.

    Uses BLAS products for speed; :func:`forward` is the batch-invariant
    evaluation used for prediction.
    """

    def __init__(self, x, y, H):
        self.xt = np.ascontiguousarray(x.T)
        self.x = x
        self.y = y
        self.H = H
        self.n = len(y)
        self._k = H * N_INPUTS

    def _unpack(self, w):
        H, k = self.H, self._k
        return w[:k].reshape(H, N_INPUTS), w[k:k + H], w[k + H:k + 2 * H], w[-1]

    def _forward(self, w):
        W1, b1, W2, b2 = self._unpack(w)
        h = W1 @ self.xt
        h += b1[:, None]
        np.tanh(h, out=h)
        f = expit(W2 @ h + b2)
        return W2, h, f

    def error(self, w):
        e = self._forward(w)[2] - self.y
        return 0.5 * float(e @ e) / self.n

    def gradient(self, w):
        W2, h, f = self._forward(w)
        dz = (f - self.y) * f * (1.0 - f) / self.n
        g_W2 = h @ dz
        # dh = W2 dz^T * (1 - h^2), built in place over h
        np.square(h, out=h)
        np.subtract(1.0, h, out=h)
        h *= W2[:, None]
        h *= dz
        g_W1 = h @ self.x
        g_b1 = h.sum(axis=1)
        return np.concatenate([g_W1.ravel(), g_b1, g_W2, [dz.sum()]])


def gradient(model, x, y):
    """Gradient of ``E = (1/2N) sum (forward(x) - y)^2`` as an :class:`MlpModel`."""
    x, y = _check_batch(x, y)
    g = _Objective(x, y, model.H).gradient(model.flat())
    return MlpModel.from_flat(g, model.H)


def loss_rmse(model, x, y):
    x, y = _check_batch(x, y)
    e = forward(model, x) - y
    return float(np.sqrt(np.mean(e * e)))


def train_scg(model, x, y, config):
    """Full-batch scaled conjugate gradient (Moller, 1993).

    Returns ``(best_model, TrainTrace)``. Steps are accepted only when the
    comparison parameter is positive, so the RMSE history never increases.
    """
    x, y = _check_batch(x, y)
    H = model.H
    if not check_capacity(H, len(y)):
        raise CapacityError(
            f"H={H} has {n_params(H)} parameters; {PATTERNS_PER_PARAMETER * n_params(H)} "
            f"training patterns required, {len(y)} available")
    (best, trace), wall = timed(_scg, model, x, y, config)
    trace.wall_time = wall
    return best, trace


def _scg(model, x, y, config):
    obj = _Objective(x, y, model.H)
    n_w = model.n_params
    w = model.flat()
    E = obj.error(w)
    if not np.isfinite(E):
        raise NumericFailure("non-finite initial loss", epoch=0)
    g = obj.gradient(w)
    r = -g
    p = r.copy()
    lam, lam_bar = config.scg_lambda0, 0.0
    success = True
    delta = 0.0
    since_restart = 0

    trace = TrainTrace()
    best_w, best_rmse = w.copy(), np.sqrt(2.0 * E)

    for epoch in range(1, config.max_epoch + 1):
        p2 = float(p @ p)
        if p2 == 0.0:
            trace.history.append(float(np.sqrt(2.0 * E)))
            trace.stop_reason = "converged"
            break
        if success:
            sigma = config.scg_sigma / np.sqrt(p2)
            s = (obj.gradient(w + sigma * p) - g) / sigma
            delta = float(p @ s)
        # scale: Levenberg-Marquardt damping on the curvature estimate
        delta += (lam - lam_bar) * p2
        if delta <= 0:
            lam_bar = 2.0 * (lam - delta / p2)
            delta = -delta + lam * p2
            lam = lam_bar
        mu = float(p @ r)
        alpha = mu / delta
        w_new = w + alpha * p
        E_new = obj.error(w_new)
        if not np.isfinite(E_new):
            raise NumericFailure("non-finite loss", epoch=epoch)
        comparison = 2.0 * delta * (E - E_new) / (mu * mu) if mu != 0.0 else 0.0

        if comparison > 0 and E_new <= E:
            w, E = w_new, E_new
            g_new = obj.gradient(w)
            r_new = -g_new
            lam_bar = 0.0
            success = True
            since_restart += 1
            if since_restart >= n_w:
                p = r_new.copy()
                since_restart = 0
            else:
                beta = (float(r_new @ r_new) - float(r_new @ r)) / mu
                p = r_new + beta * p
            g, r = g_new, r_new
            if comparison >= 0.75:
                lam = 0.25 * lam
        else:
            lam_bar = lam
            success = False
        if comparison < 0.25:
            lam = lam + delta * (1.0 - comparison) / p2

        rmse = float(np.sqrt(2.0 * E))
        trace.history.append(rmse)
        if rmse < best_rmse:
            best_w, best_rmse = w.copy(), rmse
        if rmse <= config.err_min:
            trace.stop_reason = "err_min_reached"
            break
        if float(p @ r) <= 0.0:
            # lost descent; restart along steepest descent
            p = r.copy()
            since_restart = 0
            success, lam_bar = True, 0.0
    else:
        trace.stop_reason = "max_epoch"
    return MlpModel.from_flat(best_w, model.H), trace


def fit_candidates(x, y, candidates, config):
    """Train every capacity-feasible candidate size; ``{H: (model, trace)}``."""
    x, y = _check_batch(x, y)
    fits = {}
    for H in sorted(candidates):
        if not check_capacity(H, len(y)):
            continue
        fits[H] = train_scg(init_weights(H, config.seed), x, y, config)
    if not fits:
        raise CapacityError(f"no candidate hidden size in {sorted(candidates)} is feasible "
                            f"for {len(y)} training patterns")
    return fits


def pick_hidden(fits, tolerance=0.01):
    """Smallest H whose final RMSE is within ``tolerance`` (relative) of the best."""
    best = min(tr.final_rmse for _, tr in fits.values())
    for H in sorted(fits):
        if fits[H][1].final_rmse <= best * (1.0 + tolerance):
            return H
    return min(fits, key=lambda h: fits[h][1].final_rmse)


def select_hidden(x, y, candidates=DEFAULT_CANDIDATES, config=TrainConfig()):
    """Parsimonious hidden-size choice among ``candidates``."""
    if not candidates:
        raise ConfigError("empty candidate list")
    return pick_hidden(fit_candidates(x, y, candidates, config))
