"""Exact snapshot data for the viscous Burgers equation.

The three benchmark problems on ``[0, L]`` all start from an initial profile
``u0`` and are solved through the Cole-Hopf transform

    u(x, t) = int (x - xi)/t phi0(xi) G dxi / int phi0(xi) G dxi,
    G = exp(-(x - xi)^2 / (4 nu t)),  phi0 = exp(-int_0^xi u0 / (2 nu)).

After substituting ``xi = x - z sqrt(4 nu t)`` the integrals become
Gauss-Hermite integrals ``int f(z) exp(-z^2) dz``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import log_ndtr

from .errors import ConfigError, NumericalError
from .quadrature import QuadratureRule, hermite_rule


class Experiment(str, enum.Enum):
    SINE = "Sine"
    RIEMANN = "Riemann"
    COS_SQUARED = "CosSquared"

    @classmethod
    def parse(cls, value) -> "Experiment":
        if isinstance(value, cls):
            return value
        key = str(value).replace("_", "").replace("-", "").lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        aliases = {"exp1": cls.SINE, "exp2": cls.RIEMANN, "exp3": cls.COS_SQUARED, "cos2": cls.COS_SQUARED}
        if key in aliases:
            return aliases[key]
        raise ConfigError(f"unknown experiment {value!r}")


RIEMANN_FORMS = ("two_sided", "right_plateau")


@dataclass(frozen=True)
class ExperimentSpec:
    """Parameters of one Burgers benchmark.

    ``riemann_form`` picks the Riemann solution: ``"two_sided"`` keeps both
    plateaus of the step in ``phi0`` and evaluates the half-line Gaussian
    integrals in closed form; ``"right_plateau"`` keeps only the right plateau,
    which reduces to the constant ``u_right``.
    """

    experiment: Experiment = Experiment.SINE
    nu: float = 1e-2
    L: float = 2.0
    T: float = 3.0
    nx: int = 101
    nt: int = 300
    quad_order: int = 100
    u_left: float = 0.1
    u_right: float = 0.5
    riemann_form: str = "two_sided"

    def __post_init__(self):
        object.__setattr__(self, "experiment", Experiment.parse(self.experiment))
        if not self.nu > 0:
            raise ConfigError(f"viscosity must be positive, got {self.nu}")
        if not self.L > 0:
            raise ConfigError(f"domain length must be positive, got {self.L}")
        if not self.T > 0:
            raise ConfigError(f"final time must be positive, got {self.T}")
        if int(self.nx) != self.nx or self.nx < 2:
            raise ConfigError(f"nx must be an integer >= 2, got {self.nx}")
        if int(self.nt) != self.nt or self.nt < 2:
            raise ConfigError(f"nt must be an integer >= 2, got {self.nt}")
        if int(self.quad_order) != self.quad_order or self.quad_order < 1:
            raise ConfigError(f"quad_order must be an integer >= 1, got {self.quad_order}")
        if self.riemann_form not in RIEMANN_FORMS:
            raise ConfigError(f"riemann_form must be one of {RIEMANN_FORMS}")
        for name in ("nx", "nt", "quad_order"):
            object.__setattr__(self, name, int(getattr(self, name)))
        for name in ("nu", "L", "T", "u_left", "u_right"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def dt(self) -> float:
        return self.T / self.nt

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment.value,
            "nu": self.nu,
            "L": self.L,
            "T": self.T,
            "nx": self.nx,
            "nt": self.nt,
            "quad_order": self.quad_order,
            "u_left": self.u_left,
            "u_right": self.u_right,
            "riemann_form": self.riemann_form,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown experiment keys: {sorted(extra)}")
        return cls(**d)


PRESETS = {
    "exp1": ExperimentSpec(Experiment.SINE),
    "exp2": ExperimentSpec(Experiment.RIEMANN),
    "exp3": ExperimentSpec(Experiment.COS_SQUARED),
}


@dataclass
class SnapshotSet:
    """Space-time data: column ``i`` holds ``u(x, t0 + i*dt)``."""

    values: np.ndarray
    x_grid: np.ndarray
    dt: float
    t0: float = 0.0
    L: float = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.x_grid = np.asarray(self.x_grid, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != self.x_grid.size:
            raise ConfigError("values must be a matrix with one row per grid point")
        if not np.isfinite(self.values).all():
            raise NumericalError("snapshot values contain NaN or Inf")
        if self.L is None:
            self.L = float(self.x_grid[-1] - self.x_grid[0])

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.shape[1])

    @property
    def nx(self) -> int:
        return self.values.shape[0]

    @property
    def nt(self) -> int:
        """Number of time steps, one less than the number of columns."""
        return self.values.shape[1] - 1


def initial_condition(spec: ExperimentSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if spec.experiment is Experiment.SINE:
        return -np.sin(np.pi * x)
    if spec.experiment is Experiment.RIEMANN:
        # the jump point itself takes the left state
        return np.where(x <= 0.0, spec.u_left, spec.u_right)
    return -np.cos(1.5 * np.pi * x) ** 2


def _log_phi0(spec: ExperimentSpec, xi: np.ndarray) -> np.ndarray:
    """``log phi0(xi)`` up to an additive constant, for the GH forms."""
    nu = spec.nu
    if spec.experiment is Experiment.SINE:
        return -np.cos(np.pi * xi) / (2.0 * nu * np.pi)
    if spec.experiment is Experiment.RIEMANN:
        return -spec.u_right * xi / (2.0 * nu)
    return (np.sin(3.0 * np.pi * xi) / (3.0 * np.pi) + xi) / (4.0 * nu)


def _gh_ratio(spec: ExperimentSpec, x: np.ndarray, t: float, rule: QuadratureRule) -> np.ndarray:
    s = np.sqrt(4.0 * spec.nu * t)
    z = rule.nodes
    xi = x[:, None] - s * z[None, :]
    log_terms = np.log(rule.weights)[None, :] + _log_phi0(spec, xi)
    # factor the largest term out of numerator and denominator alike
    log_terms -= log_terms.max(axis=1, keepdims=True)
    terms = np.exp(log_terms)
    den = s * terms.sum(axis=1)
    if not np.all(np.abs(den) > 1e-300):
        j = int(np.flatnonzero(~(np.abs(den) > 1e-300))[0])
        raise NumericalError(f"Cole-Hopf denominator underflow at x={x[j]:.17g}, t={t:.17g}")
    return 4.0 * spec.nu * (terms @ z) / den


def _riemann_two_sided(spec: ExperimentSpec, x: np.ndarray, t: float) -> np.ndarray:
    """Cole-Hopf solution for the step ``u_left`` (x <= 0) / ``u_right`` (x > 0).

    phi0 is exponential on each half line, so each piece of the integral is a
    truncated Gaussian with a closed-form mass and mean.
    """
    nu = spec.nu
    s2 = 4.0 * nu * t
    sig = np.sqrt(s2 / 2.0)
    a_l = spec.u_left / (2.0 * nu)
    a_r = spec.u_right / (2.0 * nu)
    beta_l = -(x - a_l * s2 / 2.0) / sig
    gamma_r = (x - a_r * s2 / 2.0) / sig
    log_cdf_l = log_ndtr(beta_l)
    log_cdf_r = log_ndtr(gamma_r)
    log_w_l = -a_l * x + a_l * a_l * s2 / 4.0 + log_cdf_l
    log_w_r = -a_r * x + a_r * a_r * s2 / 4.0 + log_cdf_r
    top = np.maximum(log_w_l, log_w_r)
    w_l = np.exp(log_w_l - top)
    w_r = np.exp(log_w_r - top)
    log_pdf = lambda b: -0.5 * b * b - 0.5 * np.log(2.0 * np.pi)  # noqa: E731
    u_l = spec.u_left + sig * np.exp(log_pdf(beta_l) - log_cdf_l) / t
    u_r = spec.u_right - sig * np.exp(log_pdf(gamma_r) - log_cdf_r) / t
    return (w_l * u_l + w_r * u_r) / (w_l + w_r)


def exact_solution(spec: ExperimentSpec, x, t: float, rule: QuadratureRule | None = None):
    """Evaluate u(x, t) for ``t > 0``; ``x`` may be a scalar or an array."""
    if not t > 0:
        raise ConfigError(f"exact solution needs t > 0, got t={t}")
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if spec.experiment is Experiment.RIEMANN and spec.riemann_form == "two_sided":
        u = _riemann_two_sided(spec, xa, float(t))
    else:
        if rule is None:
            rule = hermite_rule(spec.quad_order)
        u = _gh_ratio(spec, xa, float(t), rule)
    bad = ~np.isfinite(u)
    if bad.any():
        j = int(np.flatnonzero(bad)[0])
        raise NumericalError(f"non-finite exact solution at x={xa[j]:.17g}, t={t:.17g}")
    return float(u[0]) if scalar else u


def generate_snapshots(spec: ExperimentSpec) -> SnapshotSet:
    """Snapshot matrix of shape ``(nx, nt + 1)`` on a uniform grid over ``[0, L]``."""
    x = np.linspace(0.0, spec.L, spec.nx)
    dt = spec.dt
    rule = hermite_rule(spec.quad_order)
    values = np.empty((spec.nx, spec.nt + 1))
    values[:, 0] = initial_condition(spec, x)
    for i in range(1, spec.nt + 1):
        try:
            values[:, i] = exact_solution(spec, x, i * dt, rule)
        except NumericalError as exc:
            raise NumericalError(f"snapshot column {i}: {exc}") from exc
    return SnapshotSet(values, x, dt, 0.0, spec.L)


def with_overrides(spec: ExperimentSpec, **kw) -> ExperimentSpec:
    return replace(spec, **kw)
