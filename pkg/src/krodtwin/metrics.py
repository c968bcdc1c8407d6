"""Quality metrics for a twin model against the reference field."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError


@dataclass
class EvalReport:
    mac: np.ndarray
    pearson: float
    mae: float
    local_error: np.ndarray

    def scalars(self) -> dict:
        off = self.mac - np.diag(np.diag(self.mac))
        return {
            "pearson": self.pearson,
            "mae": self.mae,
            "max_local_error": float(self.local_error.max()),
            "mac_max_offdiag": float(np.abs(off).max()) if off.size else 0.0,
            "n_modes": int(self.mac.shape[0]),
        }


def _same_shape(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ConfigError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def mac_matrix(modes: np.ndarray) -> np.ndarray:
    """Modal assurance criterion between every pair of columns."""
    Phi = np.asarray(modes, dtype=float)
    norms = np.einsum("ij,ij->j", Phi, Phi)
    if np.any(norms == 0):
        raise NumericalError(f"zero mode vector in column {int(np.flatnonzero(norms == 0)[0])}")
    G = Phi.T @ Phi
    mac = G * G / np.outer(norms, norms)
    return 0.5 * (mac + mac.T)


def flatten(field: np.ndarray) -> np.ndarray:
    """Space-major within each time: column by column of an (nx, nt) field."""
    return np.asarray(field, dtype=float).ravel(order="F")


def pearson(truth, prediction) -> float:
    u, v = _same_shape(truth, prediction)
    u = flatten(u) - u.mean()
    v = flatten(v) - v.mean()
    su = np.sqrt(u @ u)
    sv = np.sqrt(v @ v)
    if su == 0 or sv == 0:
        raise NumericalError("correlation is undefined for a constant field")
    return float(np.clip((u @ v) / (su * sv), -1.0, 1.0))


def local_error(truth, prediction) -> np.ndarray:
    u, v = _same_shape(truth, prediction)
    return np.abs(u - v)


def mae(truth, prediction) -> float:
    return float(local_error(truth, prediction).mean())


def evaluate(truth, prediction, modes) -> EvalReport:
    E = local_error(truth, prediction)
    return EvalReport(mac_matrix(modes), pearson(truth, prediction), float(E.mean()), E)
