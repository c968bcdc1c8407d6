"""Offline phase: orthonormal Koopman modes from a randomized SVD."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .burgers import SnapshotSet
from .errors import ConfigError, NumericalError, RankDeficiencyError
from .rsvd import rsvd

SIGMA_RTOL = 1e-12
GRAM_NEG_TOL = 1e-12


@dataclass(frozen=True)
class KoopmanTriplet:
    """Modes ``(nx, k)``, amplitudes ``(k, nt)`` with ``amplitudes[j, i] = a_j(t_i)``."""

    modes: np.ndarray
    amplitudes: np.ndarray
    k: int
    eigvals: np.ndarray
    seed: int
    singular_values: np.ndarray | None = None


def split_snapshots(V: SnapshotSet | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Time-shifted pair ``V0 = V[:, :-1]``, ``V1 = V[:, 1:]``."""
    values = V.values if isinstance(V, SnapshotSet) else np.asarray(V, dtype=float)
    if values.ndim != 2 or values.shape[1] < 2:
        raise ConfigError("need a snapshot matrix with at least two columns")
    return values[:, :-1].copy(), values[:, 1:].copy()


def fix_signs(Phi: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is positive."""
    idx = np.argmax(np.abs(Phi), axis=0)
    signs = np.sign(Phi[idx, np.arange(Phi.shape[1])])
    signs[signs == 0] = 1.0
    return Phi * signs


def krod_offline(
    V0: np.ndarray,
    V1: np.ndarray,
    k: int,
    seed: int,
    *,
    on_rank_deficient: str = "raise",
    amplitudes_from: str = "V0",
) -> KoopmanTriplet:
    """Koopman randomized orthogonal decomposition of rank ``k``.

    Computes ``V0 ~ U diag(s) W.T`` by :func:`rsvd`, the reduced operator
    ``S = U.T @ V1 @ W @ diag(1/s)``, the Gram eigenproblem
    ``S.T @ S X = X Lambda`` and the modes ``Phi = U X``.

    Parameters
    ----------
    on_rank_deficient : {"raise", "truncate"}
        What to do when ``s[k-1] <= 1e-12 * s[0]``.  ``"raise"`` refuses the
        rank; ``"truncate"`` zeroes the affected entries of ``1/s`` so the modes
        still span the range of ``U``.
    amplitudes_from : {"V0", "V1"}
        Snapshot matrix projected onto the modes.
    """
    V0 = np.asarray(V0, dtype=float)
    V1 = np.asarray(V1, dtype=float)
    if V0.shape != V1.shape:
        raise ConfigError(f"V0 {V0.shape} and V1 {V1.shape} differ in shape")
    if on_rank_deficient not in ("raise", "truncate"):
        raise ConfigError("on_rank_deficient must be 'raise' or 'truncate'")
    if amplitudes_from not in ("V0", "V1"):
        raise ConfigError("amplitudes_from must be 'V0' or 'V1'")
    if not 2 <= k <= V0.shape[1]:
        raise ConfigError(f"rank must satisfy 2 <= k <= {V0.shape[1]}, got {k}")
    if not np.isfinite(V1).all():
        raise NumericalError("V1 contains non-finite entries")

    f = rsvd(V0, k, seed)
    s = f.S
    keep = s > SIGMA_RTOL * s[0]
    if not keep.all() and on_rank_deficient == "raise":
        ratio = s[-1] / s[0] if s[0] > 0 else 0.0
        raise RankDeficiencyError(
            f"sigma_k / sigma_1 = {ratio:.3e} is below {SIGMA_RTOL:g}; lower the rank k={k}"
        )
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]

    S = f.U.T @ ((V1 @ f.W) * s_inv)
    G = S.T @ S
    G = 0.5 * (G + G.T)
    try:
        lam, X = np.linalg.eigh(G)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Gram eigensolver failed: {exc}") from exc
    order = np.argsort(-lam, kind="stable")
    lam, X = lam[order], X[:, order]
    if lam[-1] < -GRAM_NEG_TOL * max(1.0, lam[0]):
        raise NumericalError(f"Gram matrix is not positive semi-definite (min eigenvalue {lam[-1]:.3e})")
    lam = np.clip(lam, 0.0, None)

    Phi = f.U @ X
    Phi = Phi / np.linalg.norm(Phi, axis=0)
    Phi = fix_signs(Phi)
    A = Phi.T @ (V0 if amplitudes_from == "V0" else V1)
    return KoopmanTriplet(Phi, A, int(k), lam, f.seed, s.copy())


def reconstruct(triplet: KoopmanTriplet) -> np.ndarray:
    """Reduced approximation ``Phi @ A`` of the snapshot matrix."""
    Phi, A = triplet.modes, triplet.amplitudes
    if Phi.shape[1] != A.shape[0]:
        raise ConfigError(f"modes {Phi.shape} and amplitudes {A.shape} do not match")
    return Phi @ A
