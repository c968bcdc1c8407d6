"""Single-input single-output NLARX surrogates for modal amplitudes.

The predictor for step ``t`` is

    y(t) = F[y(t-1), ..., y(t-na), u(t-nk), ..., u(t-nk-nb+1)]

with ``F(r) = r @ w + b + v @ tanh(W @ r + c)``: a linear bypass plus one
hidden tanh layer whose outputs are summed.  Regressors and outputs are
normalized by per-channel affine scalers before entering the network.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigError, NumericalError, OptimizerDivergenceError
from .seeding import generator

DEFAULT_NA = (1, 2, 3)
DEFAULT_NB = (1, 2, 3)
DEFAULT_NK = (1,)
DEFAULT_WIDTH = 8
DEFAULT_MAX_ITER = 400
MAX_ITER_BUDGET = 5000
MIN_VALIDATION = 10
DIVERGENCE_PATIENCE = 10
DEFAULT_RIDGE = 1e-10
DEFAULT_MIN_SIM_FIT = 90.0


@dataclass(frozen=True)
class NlarxOrders:
    na: int
    nb: int
    nk: int

    def __post_init__(self):
        if self.na < 0 or self.nb < 1 or self.nk < 0:
            raise ConfigError(f"invalid orders {self}")

    @property
    def max_lag(self) -> int:
        return max(self.na, self.nk + self.nb - 1)

    @property
    def n_regressors(self) -> int:
        return self.na + self.nb


def order_grid(na=DEFAULT_NA, nb=DEFAULT_NB, nk=DEFAULT_NK) -> list[NlarxOrders]:
    return [NlarxOrders(a, b, k) for a, b, k in itertools.product(na, nb, nk)]


@dataclass(frozen=True)
class AffineScaler:
    center: float
    scale: float

    @classmethod
    def fit(cls, x: np.ndarray) -> "AffineScaler":
        x = np.asarray(x, dtype=float)
        center = float(x.mean())
        scale = float(x.std())
        if not scale > 1e-300 or scale <= 1e-12 * abs(center):
            scale = 1.0
        return cls(center, scale)

    def forward(self, x):
        return (np.asarray(x, dtype=float) - self.center) / self.scale

    def inverse(self, z):
        return np.asarray(z, dtype=float) * self.scale + self.center


def n_params(n_regressors: int, width: int) -> int:
    return n_regressors + 1 + width * n_regressors + 2 * width


def _unpack(theta: np.ndarray, d: int, h: int):
    w = theta[:d]
    b = theta[d]
    i = d + 1
    W = theta[i:i + h * d].reshape(h, d)
    i += h * d
    c = theta[i:i + h]
    v = theta[i + h:i + 2 * h]
    return w, b, W, c, v


def network(theta: np.ndarray, R: np.ndarray, width: int) -> np.ndarray:
    """Evaluate ``F`` on normalized regressor rows ``R`` (n, d)."""
    d = R.shape[1]
    w, b, W, c, v = _unpack(theta, d, width)
    return R @ w + b + np.tanh(R @ W.T + c) @ v


def penalty_mask(orders: NlarxOrders, width: int) -> np.ndarray:
    """1 on output-lag linear weights and hidden-layer weights, 0 elsewhere."""
    d = orders.n_regressors
    mask = np.zeros(n_params(d, width))
    mask[:orders.na] = 1.0
    mask[d + 1:d + 1 + width * d] = 1.0
    mask[-width:] = 1.0
    return mask


def mse_loss_and_grad(theta: np.ndarray, R: np.ndarray, y: np.ndarray, width: int,
                      ridge: float = 0.0, mask: np.ndarray | None = None):
    """Mean squared error ``sum(e**2) / (2n)`` plus ``ridge/2 * ||mask * theta||^2``, with gradient."""
    n, d = R.shape
    w, b, W, c, v = _unpack(theta, d, width)
    H = np.tanh(R @ W.T + c)
    e = R @ w + b + H @ v - y
    loss = 0.5 * float(e @ e) / n
    g_e = e / n
    dZ = np.outer(g_e, v) * (1.0 - H * H)
    grad = np.concatenate([R.T @ g_e, [g_e.sum()], (dZ.T @ R).ravel(), dZ.sum(axis=0), H.T @ g_e])
    if ridge and mask is not None:
        mt = mask * theta
        loss += 0.5 * ridge * float(mt @ mt)
        grad += ridge * mask * mt
    return loss, grad


@dataclass
class NlarxModel:
    orders: NlarxOrders
    hidden_width: int
    theta: np.ndarray
    input_scaling: dict[str, AffineScaler]
    train_loss: float
    n_train: int
    validation_rmse: float | None = None
    sim_fit: float | None = None
    loss_history: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self):
        expected = n_params(self.orders.n_regressors, self.hidden_width)
        if self.theta.size != expected:
            raise ConfigError(f"weight vector has {self.theta.size} entries, expected {expected}")

    def to_dict(self) -> dict:
        return {
            "orders": {"na": self.orders.na, "nb": self.orders.nb, "nk": self.orders.nk},
            "hidden_width": self.hidden_width,
            "theta": self.theta.tolist(),
            "input_scaling": {k: [s.center, s.scale] for k, s in self.input_scaling.items()},
            "train_loss": self.train_loss,
            "n_train": self.n_train,
            "validation_rmse": self.validation_rmse,
            "sim_fit": self.sim_fit,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NlarxModel":
        return cls(
            orders=NlarxOrders(**d["orders"]),
            hidden_width=int(d["hidden_width"]),
            theta=np.asarray(d["theta"], dtype=float),
            input_scaling={k: AffineScaler(*v) for k, v in d["input_scaling"].items()},
            train_loss=float(d["train_loss"]),
            n_train=int(d["n_train"]),
            validation_rmse=d.get("validation_rmse"),
            sim_fit=d.get("sim_fit"),
        )


def regressors(y: np.ndarray, u: np.ndarray, orders: NlarxOrders, start: int, stop: int) -> np.ndarray:
    """Rows ``[y(t-1..t-na), u(t-nk..t-nk-nb+1)]`` for ``t`` in ``[start, stop)``."""
    t = np.arange(start, stop)
    cols = [y[t - i] for i in range(1, orders.na + 1)]
    cols += [u[t - orders.nk - i] for i in range(orders.nb)]
    return np.column_stack(cols) if cols else np.empty((len(t), 0))


def _train(series: np.ndarray, n_train: int, orders: NlarxOrders, width: int, seed: int,
           max_iter: int, ridge: float) -> NlarxModel:
    a = np.asarray(series, dtype=float)
    scaler = AffineScaler.fit(a[:n_train])
    z = scaler.forward(a)
    lag = orders.max_lag
    R = regressors(z, z, orders, lag, n_train)
    y = z[lag:n_train]
    d = R.shape[1]

    rng = generator(seed)
    mask = penalty_mask(orders, width)
    theta0 = np.zeros(n_params(d, width))
    # ridge-regularized least squares for the linear bypass, as an augmented system
    n = len(y)
    X = np.column_stack([R, np.ones(n)])
    reg = np.sqrt(ridge * n) * np.diag(mask[:d + 1])
    lin, *_ = np.linalg.lstsq(np.vstack([X, reg]), np.concatenate([y, np.zeros(d + 1)]), rcond=None)
    theta0[:d + 1] = lin
    theta0[d + 1:d + 1 + width * d] = 0.5 * rng.standard_normal(width * d) / np.sqrt(max(d, 1))
    # hidden output weights start at zero: the network starts as the least-squares ARX fit

    history: list[float] = []
    rises = 0

    def fun(theta):
        loss, grad = mse_loss_and_grad(theta, R, y, width, ridge, mask)
        if not np.isfinite(loss):
            raise NumericalError(f"non-finite training loss for orders {orders}")
        return loss, grad

    def callback(xk):
        nonlocal rises
        loss = fun(xk)[0]
        rises = rises + 1 if history and loss > history[-1] else 0
        if rises >= DIVERGENCE_PATIENCE:
            raise OptimizerDivergenceError(f"training loss rose {rises} checks in a row for orders {orders}")
        history.append(min(loss, history[-1]) if history else loss)

    history.append(fun(theta0)[0])
    res = minimize(
        fun, theta0, jac=True, method="L-BFGS-B", callback=callback,
        options={"maxiter": int(max_iter), "gtol": 1e-12, "ftol": 1e-15, "maxcor": 20},
    )
    theta = res.x if res.fun <= history[0] else theta0
    model = NlarxModel(orders, width, theta, {"output": scaler, "input": scaler}, 0.0, n_train, loss_history=history)
    pred = simulate_nlarx(model, a[:n_train], n_train, "one_step")
    model.train_loss = report_loss(a[lag:n_train], pred[lag:n_train])
    return model


def report_loss(measured, predicted) -> float:
    """``sum |a - a_hat| / (2n)``: the l2 norm of each scalar residual, averaged and halved."""
    e = np.abs(np.asarray(measured, dtype=float) - np.asarray(predicted, dtype=float))
    return float(e.sum() / (2 * e.size))


def fit_nlarx(
    series,
    orders_grid: list[NlarxOrders] | None = None,
    hidden_width: int = DEFAULT_WIDTH,
    train_fraction: float = 2 / 3,
    seed: int = 0,
    max_iter: int = DEFAULT_MAX_ITER,
    ridge: float = DEFAULT_RIDGE,
    min_sim_fit: float | None = DEFAULT_MIN_SIM_FIT,
    n_train: int | None = None,
) -> NlarxModel:
    """Fit one surrogate per candidate order set and keep the best.

    Each candidate is trained on the leading ``train_fraction`` of the series
    by L-BFGS on the mean squared one-step error.  The winner has the lowest
    one-step RMSE on the held-out suffix (on the training part itself when
    ``train_fraction == 1``; ``n_train`` overrides the fraction) among the candidates whose closed-loop simulation
    over the training window reaches ``min_sim_fit`` percent; if none does,
    the best one-step candidate is returned anyway.

    ``ridge`` weights a small penalty on the output-lag and hidden-layer
    weights.  Since the input channel carries the same measurements as the
    past outputs, this moves shared information onto the input side instead
    of into the feedback loop.
    """
    a = np.asarray(series, dtype=float).ravel()
    if not np.isfinite(a).all():
        raise NumericalError("series contains non-finite values")
    if not 0 < train_fraction <= 1:
        raise ConfigError(f"train_fraction must lie in (0, 1], got {train_fraction}")
    if not 1 <= max_iter <= MAX_ITER_BUDGET:
        raise ConfigError(f"max_iter must lie in [1, {MAX_ITER_BUDGET}]")
    grid = order_grid() if orders_grid is None else list(orders_grid)
    if not grid:
        raise ConfigError("empty order grid")
    n = a.size
    if n_train is None:
        n_train = n if train_fraction == 1 else int(np.floor(train_fraction * n + 1e-9))
    if not 0 < n_train <= n:
        raise ConfigError(f"n_train must lie in [1, {n}], got {n_train}")
    if n_train < n and n - n_train < MIN_VALIDATION:
        raise ConfigError(f"train_fraction {train_fraction} leaves fewer than {MIN_VALIDATION} validation samples")
    max_lag = max(o.max_lag for o in grid)
    if n_train <= max_lag + 1:
        raise ConfigError(f"series of length {n} is too short for lag {max_lag}")

    best = best_any = None
    for orders in grid:
        model = _train(a, n_train, orders, hidden_width, seed, max_iter, ridge)
        lo = n_train if n_train < n else max_lag
        pred = simulate_nlarx(model, a, n, "one_step")
        model.validation_rmse = float(np.sqrt(np.mean((a[lo:] - pred[lo:]) ** 2)))
        with np.errstate(over="ignore", invalid="ignore"):
            sim = simulate_nlarx(model, a, n_train, "free_run")
            model.sim_fit = fit_percent(a[:n_train], sim) if np.isfinite(sim).all() else -np.inf
        if best_any is None or model.validation_rmse < best_any.validation_rmse:
            best_any = model
        admissible = min_sim_fit is None or model.sim_fit >= min_sim_fit
        if admissible and (best is None or model.validation_rmse < best.validation_rmse):
            best = model
    return best if best is not None else best_any


def simulate_nlarx(model: NlarxModel, exogenous, horizon: int, mode: str = "free_run", initial=None) -> np.ndarray:
    """Simulate ``horizon`` samples.

    ``exogenous`` is the measured amplitude series; it serves both as input
    channel and, in ``one_step`` mode, as the measured past outputs.  The first
    ``max_lag`` samples are taken from the measurements (``initial`` overrides
    their leading entries).  In ``free_run`` mode predictions are fed back and
    measured inputs are used only up to the model's training boundary, after
    which the last available input is held.
    """
    if horizon < 1:
        raise ConfigError("horizon must be at least 1")
    a = np.asarray(exogenous, dtype=float).ravel()
    o = model.orders
    lag = o.max_lag
    if mode == "one_step":
        if horizon > a.size:
            raise ConfigError(f"one-step horizon {horizon} exceeds the {a.size} measured samples")
        out = a[:horizon].copy()
        if horizon > lag:
            sc_y, sc_u = model.input_scaling["output"], model.input_scaling["input"]
            zy, zu = sc_y.forward(a), sc_u.forward(a)
            if o.n_regressors:
                R = np.column_stack(
                    [zy[np.arange(lag, horizon) - i] for i in range(1, o.na + 1)]
                    + [zu[np.arange(lag, horizon) - o.nk - i] for i in range(o.nb)]
                )
                out[lag:] = sc_y.inverse(network(model.theta, R, model.hidden_width))
        return out
    if mode != "free_run":
        raise ConfigError(f"unknown simulation mode {mode!r}")

    n_avail = min(a.size, model.n_train)
    if n_avail < max(lag, 1):
        raise ConfigError("not enough measured samples to prime the simulation")
    u = np.empty(max(horizon, n_avail))
    u[:n_avail] = a[:n_avail]
    u[n_avail:] = a[n_avail - 1]
    y = np.empty(horizon)
    prime = min(lag, horizon)
    y[:prime] = a[:prime]
    if initial is not None:
        init = np.atleast_1d(np.asarray(initial, dtype=float))[:prime]
        y[:init.size] = init
    sc_y, sc_u = model.input_scaling["output"], model.input_scaling["input"]
    zu = sc_u.forward(u)
    zy = np.empty(horizon)
    zy[:prime] = sc_y.forward(y[:prime])
    d, h = o.n_regressors, model.hidden_width
    w, b, W, c, v = _unpack(model.theta, d, h)
    for t in range(prime, horizon):
        r = np.concatenate([zy[t - o.na:t][::-1], zu[t - o.nk - o.nb + 1:t - o.nk + 1][::-1]])
        zy[t] = r @ w + b + np.tanh(W @ r + c) @ v
    y[prime:] = sc_y.inverse(zy[prime:])
    return y


def fit_percent(measured, predicted) -> float:
    """Normalized-RMSE fit, ``100 * (1 - ||y - y_hat|| / ||y - mean(y)||)``."""
    y = np.asarray(measured, dtype=float)
    e = np.linalg.norm(y - np.asarray(predicted, dtype=float))
    ref = np.linalg.norm(y - y.mean())
    if ref == 0:
        return 100.0 if e <= 1e-12 * max(1.0, np.abs(y).max()) else 0.0
    return float(100.0 * (1.0 - e / ref))
