"""Rank-k randomized SVD from a single Gaussian sketch."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError, RankDeficiencyError
from .seeding import check_seed, derive_seed, generator

MAX_RETRIES = 3
# a sketch column counts as dependent only when orthogonalization annihilates it;
# roundoff-sized residuals are kept so exactly low-rank inputs still factor
DEPENDENCE_TOL = 0.0


@dataclass(frozen=True)
class RsvdFactors:
    """``V0 ~ U @ diag(S) @ W.T`` with orthonormal ``U`` (nx, k) and ``W`` (nt, k)."""

    U: np.ndarray
    S: np.ndarray
    W: np.ndarray
    k: int
    seed: int


def mgs_orthonormalize(Q: np.ndarray, tol: float = DEPENDENCE_TOL) -> np.ndarray:
    """Modified Gram-Schmidt with one reorthogonalization pass.

    Raises :class:`RankDeficiencyError` if a column collapses below ``tol``
    times its original norm.
    """
    Q = np.array(Q, dtype=float, copy=True)
    m, k = Q.shape
    for j in range(k):
        v = Q[:, j]
        norm0 = norm = np.linalg.norm(v)
        # second pass always; a third only if the second still cancelled heavily
        for sweep in range(3):
            for i in range(j):
                v -= (Q[:, i] @ v) * Q[:, i]
            prev, norm = norm, np.linalg.norm(v)
            if sweep >= 1 and norm > 0.5 * prev:
                break
        if not np.isfinite(norm) or norm0 == 0.0 or norm <= tol * norm0:
            raise RankDeficiencyError(f"sketch column {j} is linearly dependent on the previous ones")
        Q[:, j] = v / norm
    return Q


def rsvd(V0: np.ndarray, k: int, seed: int) -> RsvdFactors:
    """Randomized SVD of ``V0`` with target rank ``k``.

    1. draw ``M`` (nt x k) with i.i.d. standard normal entries,
    2. ``Q = V0 @ M``, orthonormalized,
    3. ``P = Q.T @ V0`` and its economy SVD ``P = T diag(S) W.T``,
    4. ``U = Q @ T``.

    No oversampling or power iterations are applied.  If the sketch comes out
    rank deficient it is redrawn (up to three more times) from child seeds.
    """
    V0 = np.asarray(V0, dtype=float)
    if V0.ndim != 2:
        raise ConfigError("V0 must be a matrix")
    nx, nt = V0.shape
    if int(k) != k or not 2 <= k <= min(nx, nt):
        raise ConfigError(f"target rank must satisfy 2 <= k <= min{V0.shape}, got {k}")
    k = int(k)
    seed = check_seed(seed)
    if not np.isfinite(V0).all():
        raise NumericalError("V0 contains non-finite entries")

    for attempt in range(MAX_RETRIES + 1):
        rng = generator(seed if attempt == 0 else derive_seed(seed, "rsvd-retry", attempt))
        M = rng.standard_normal((nt, k))
        try:
            Q = mgs_orthonormalize(V0 @ M)
        except RankDeficiencyError:
            continue
        break
    else:
        raise RankDeficiencyError(
            f"sketch of rank {k} stayed rank deficient after {MAX_RETRIES} redraws; lower k"
        )
    P = Q.T @ V0
    T, S, Wt = np.linalg.svd(P, full_matrices=False)
    return RsvdFactors(Q @ T, S, Wt.T, k, seed)
