"""Online phase: a reduced twin ``u(x, t) ~ sum_j a_hat_j(t) phi_j(x)``.

Each modal amplitude gets its own NLARX surrogate whose exogenous input is
the measured amplitude series from the offline decomposition.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .krod import KoopmanTriplet
from .nlarx import (
    DEFAULT_MAX_ITER,
    DEFAULT_WIDTH,
    NlarxModel,
    NlarxOrders,
    fit_nlarx,
    fit_percent,
    simulate_nlarx,
)
from .seeding import derive_seed


@dataclass
class TwinModel:
    triplet: KoopmanTriplet
    a0: np.ndarray
    surrogates: list[NlarxModel]
    u0: np.ndarray
    dt: float
    t0: float = 0.0

    @property
    def n_dtm(self) -> int:
        return self.triplet.k


def initial_coefficients(u0, modes) -> np.ndarray:
    """Projection of the first snapshot onto the modes, ``modes.T @ u0``."""
    u0 = np.asarray(u0, dtype=float).ravel()
    modes = np.asarray(modes, dtype=float)
    if modes.shape[0] != u0.size:
        raise ConfigError(f"u0 has {u0.size} entries but modes have {modes.shape[0]} rows")
    return modes.T @ u0


def build_twin(
    triplet: KoopmanTriplet,
    u0,
    dt: float,
    *,
    t0: float = 0.0,
    seed: int = 0,
    orders_grid: list[NlarxOrders] | None = None,
    hidden_width: int = DEFAULT_WIDTH,
    train_fraction: float = 2 / 3,
    max_iter: int = DEFAULT_MAX_ITER,
) -> TwinModel:
    surrogates = [
        fit_nlarx(
            a_j,
            orders_grid,
            hidden_width=hidden_width,
            train_fraction=train_fraction,
            seed=derive_seed(seed, "nlarx", j),
            max_iter=max_iter,
        )
        for j, a_j in enumerate(triplet.amplitudes)
    ]
    u0 = np.asarray(u0, dtype=float).ravel()
    return TwinModel(triplet, initial_coefficients(u0, triplet.modes), surrogates, u0, float(dt), float(t0))


def fold_boundaries(n: int) -> tuple[int, int]:
    """Training lengths of the two folds: the first two thirds, then the first third."""
    if n < 9:
        raise ConfigError(f"two-fold validation needs at least 9 samples, got {n}")
    return (2 * n) // 3, n // 3


@dataclass
class FoldResult:
    fold: int
    n_train: int
    fit_one_step: np.ndarray
    rmse_one_step: np.ndarray
    fit_free_run: np.ndarray
    rmse_free_run: np.ndarray
    residuals: np.ndarray = field(repr=False)
    free_run: np.ndarray = field(repr=False)
    one_step: np.ndarray = field(repr=False)

    @property
    def mean_fit(self) -> float:
        return float(np.mean(self.fit_one_step))


@dataclass
class ValidationReport:
    folds: list[FoldResult]

    def rows(self):
        """``(fold, coefficient, mode, fit_percent, rmse)`` tuples."""
        for f in self.folds:
            for j in range(len(f.fit_one_step)):
                yield f.fold, j, "one_step", float(f.fit_one_step[j]), float(f.rmse_one_step[j])
                yield f.fold, j, "free_run", float(f.fit_free_run[j]), float(f.rmse_free_run[j])


def twofold_validate(twin: TwinModel, A_true, *, seed: int = 0, max_iter: int = DEFAULT_MAX_ITER) -> ValidationReport:
    """Refit each surrogate (keeping its orders) on the first 2/3, then the first 1/3 of
    the series and score the remaining samples.

    The fit figure reported per coefficient is the normalized-RMSE fit of the
    one-step predictions on the held-out samples; free-run (closed-loop)
    figures are reported alongside.
    """
    A_true = np.atleast_2d(np.asarray(A_true, dtype=float))
    if A_true.shape[0] != twin.n_dtm:
        raise ConfigError(f"expected {twin.n_dtm} amplitude rows, got {A_true.shape[0]}")
    n = A_true.shape[1]
    folds = []
    for fold, n_train in enumerate(fold_boundaries(n), start=1):
        fit1, rmse1, fitf, rmsef, res, fr, os_ = [], [], [], [], [], [], []
        for j, (a, model) in enumerate(zip(A_true, twin.surrogates)):
            m = fit_nlarx(
                a, [model.orders], hidden_width=model.hidden_width, n_train=n_train,
                seed=derive_seed(seed, f"fold{fold}", j), max_iter=max_iter, min_sim_fit=None,
            )
            one = simulate_nlarx(m, a, n, "one_step")
            with np.errstate(over="ignore", invalid="ignore"):
                free = simulate_nlarx(m, a, n, "free_run", initial=twin.a0[j])
                fitf.append(fit_percent(a[n_train:], free[n_train:]))
                rmsef.append(float(np.sqrt(np.mean((a[n_train:] - free[n_train:]) ** 2))))
            fit1.append(fit_percent(a[n_train:], one[n_train:]))
            rmse1.append(float(np.sqrt(np.mean((a[n_train:] - one[n_train:]) ** 2))))
            res.append(a - one)
            fr.append(free)
            os_.append(one)
        folds.append(FoldResult(fold, n_train, np.array(fit1), np.array(rmse1), np.array(fitf),
                                np.array(rmsef), np.array(res), np.array(fr), np.array(os_)))
    return ValidationReport(folds)


def simulate_coefficients(twin: TwinModel, horizon: int, mode: str = "free_run") -> np.ndarray:
    """Amplitude trajectories ``(n_dtm, horizon)`` starting from ``a0``."""
    return np.array([
        simulate_nlarx(m, a, horizon, mode, initial=None if mode == "one_step" else a0)
        for m, a, a0 in zip(twin.surrogates, twin.triplet.amplitudes, twin.a0)
    ])


def twin_predict(twin: TwinModel, times, mode: str = "free_run") -> np.ndarray:
    """Twin field at the requested times, shape ``(nx, len(times))``.

    Times must lie on the sampling grid ``t0 + i * dt``; beyond the measured
    range only ``free_run`` is possible.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    steps = (times - twin.t0) / twin.dt
    idx = np.rint(steps).astype(int)
    if np.any(steps < -1e-9):
        raise ConfigError(f"times before t0={twin.t0} requested")
    if np.any(np.abs(steps - idx) > 1e-6):
        raise ConfigError("times must lie on the sampling grid")
    Ahat = simulate_coefficients(twin, int(idx.max()) + 1, mode)
    return twin.triplet.modes @ Ahat[:, idx]
