"""Gauss-Hermite quadrature for integrals weighted by ``exp(-z**2)``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConfigError, NumericalError

MAX_ORDER = 200


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes (ascending roots of the physicists' Hermite polynomial H_n) and weights."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def order(self) -> int:
        return len(self.nodes)


def _orthonormal_hermite(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(p_n(x), p_{n-1}(x))`` for Hermite polynomials orthonormal under exp(-x^2)."""
    prev = np.zeros_like(x)
    cur = np.full_like(x, np.pi**-0.25)
    for k in range(n):
        prev, cur = cur, np.sqrt(2.0 / (k + 1)) * x * cur - np.sqrt(k / (k + 1)) * prev
    return cur, prev


def hermite_rule(n: int, max_order: int = MAX_ORDER) -> QuadratureRule:
    """Gauss-Hermite rule of order ``n``.

    Nodes come from the eigenvalues of the symmetric tridiagonal Jacobi matrix
    (Golub-Welsch), polished by two Newton steps on the orthonormal H_n.  The
    weights are ``2**(n-1) n! sqrt(pi) / (n**2 H_{n-1}(x_i)**2)`` written in
    orthonormal form, ``1 / (n p_{n-1}(x_i)**2)``, which cannot overflow.
    """
    if int(n) != n or n < 1:
        raise ConfigError(f"quadrature order must be a positive integer, got {n!r}")
    n = int(n)
    if n > max_order:
        raise ConfigError(f"quadrature order {n} exceeds the certified maximum {max_order}")
    if n == 1:
        return QuadratureRule(np.zeros(1), np.array([np.sqrt(np.pi)]))

    off = np.sqrt(np.arange(1, n) / 2.0)
    x = eigh_tridiagonal(np.zeros(n), off, eigvals_only=True)
    for _ in range(2):
        p, q = _orthonormal_hermite(n, x)
        x = x - p / (np.sqrt(2.0 * n) * q)
    # exact symmetry
    x = 0.5 * (x - x[::-1])
    _, q = _orthonormal_hermite(n, x)
    w = 1.0 / (n * q * q)
    w = 0.5 * (w + w[::-1])
    return QuadratureRule(x, w)


def gh_integrate(f: Callable[[np.ndarray], np.ndarray], rule: QuadratureRule) -> float:
    """Approximate the integral of ``f(z) exp(-z^2)`` over the real line.

    ``f`` is called once with the full node array and must be vectorized.
    """
    values = np.asarray(f(rule.nodes), dtype=float)
    values = np.broadcast_to(values, rule.nodes.shape)
    bad = ~np.isfinite(values)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise NumericalError(
            f"integrand is not finite at node {i} (z={rule.nodes[i]:.17g}): {values[i]}"
        )
    return float(np.dot(rule.weights, values))
