"""Rank selection over a grid of candidate triplets by Pareto-front analysis.

Each candidate is scored on two objectives: the reconstruction error
``E = ||u - u_k||_F`` (minimized) and the squared cosine similarity
``C = <u, u_k>^2 / (||u||^2 ||u_k||^2)`` of the flattened fields (maximized).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError
from .krod import KoopmanTriplet, reconstruct


@dataclass
class CandidateScore:
    k: int
    error: float
    similarity: float
    triplet: KoopmanTriplet | None = field(default=None, repr=False, compare=False)

    def dominates(self, other: "CandidateScore") -> bool:
        no_worse = self.error <= other.error and self.similarity >= other.similarity
        better = self.error < other.error or self.similarity > other.similarity
        return no_worse and better


@dataclass
class SelectionResult:
    front: list[CandidateScore]
    chosen: CandidateScore
    all_scores: list[CandidateScore]

    @property
    def n_dtm(self) -> int:
        return self.chosen.k


def similarity(truth: np.ndarray, approx: np.ndarray) -> float:
    """Squared cosine similarity of the flattened arrays.

    Evaluated as ``1 - sin^2`` with ``sin^2 = ||u - alpha v||^2 / ||u||^2``,
    ``alpha = <u, v> / ||v||^2``.  This is algebraically the same quotient but
    keeps full relative accuracy when the two fields are nearly parallel, so
    similar candidates are ordered by their actual residual and not by
    rounding noise in ``<u, v>^2``.
    """
    u = np.ravel(truth)
    v = np.ravel(approx)
    uu = float(u @ u)
    vv = float(v @ v)
    if uu == 0.0 or vv == 0.0:
        raise NumericalError("similarity is undefined for a zero field")
    alpha = float(u @ v) / vv
    r = u - alpha * v
    sin2 = min(max(float(r @ r) / uu, 0.0), 1.0)
    return 1.0 - sin2


def score_candidate(truth: np.ndarray, triplet: KoopmanTriplet) -> CandidateScore:
    truth = np.asarray(truth, dtype=float)
    approx = reconstruct(triplet)
    if approx.shape != truth.shape:
        raise ConfigError(f"truth {truth.shape} and reconstruction {approx.shape} differ in shape")
    return CandidateScore(
        k=triplet.k,
        error=float(np.linalg.norm(truth - approx)),
        similarity=similarity(truth, approx),
        triplet=triplet,
    )


def pareto_front(scores: list[CandidateScore]) -> list[CandidateScore]:
    """Non-dominated subset, ordered by ``k``."""
    if not scores:
        raise ConfigError("cannot build a Pareto front from no candidates")
    front = [s for s in scores if not any(o.dominates(s) for o in scores if o is not s)]
    return sorted(front, key=lambda s: s.k)


def select_twin(front: list[CandidateScore]) -> CandidateScore:
    """Knee point of the front.

    Both objectives are rescaled to [0, 1] over the front and the candidate
    nearest the ideal point (smallest error, largest similarity) wins; ties
    go to the smaller rank.
    """
    if not front:
        raise ConfigError("cannot select from an empty front")
    E = np.array([s.error for s in front])
    C = np.array([s.similarity for s in front])

    def unit(v):
        span = v.max() - v.min()
        return np.zeros_like(v) if span == 0 else (v - v.min()) / span

    dist = np.hypot(unit(E), 1.0 - unit(C))
    best = min(range(len(front)), key=lambda i: (dist[i], front[i].k))
    return front[best]


def select(scores: list[CandidateScore]) -> SelectionResult:
    front = pareto_front(scores)
    return SelectionResult(front, select_twin(front), list(scores))
