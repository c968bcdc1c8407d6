"""Independent reference solver for u_t + u u_x = nu u_xx.

Method of lines with fourth-order central differences and Crank-Nicolson in
time (Newton iterations per step).  Shares no code with the package: it only
needs the initial profile, the domain, and the boundary treatment.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

C1 = np.array([1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12])
C2 = np.array([-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12])
OFFSETS = np.arange(-2, 3)


def periodic_operators(n: int, h: float):
    rows, cols, d1, d2 = [], [], [], []
    for o, a, b in zip(OFFSETS, C1, C2):
        if o == 0 and a == 0:
            rows.append(np.arange(n)); cols.append(np.arange(n)); d1.append(np.zeros(n)); d2.append(np.full(n, b))
            continue
        i = np.arange(n)
        rows.append(i); cols.append((i + o) % n); d1.append(np.full(n, a)); d2.append(np.full(n, b))
    r, c = np.concatenate(rows), np.concatenate(cols)
    D1 = sp.csr_matrix((np.concatenate(d1) / h, (r, c)), shape=(n, n))
    D2 = sp.csr_matrix((np.concatenate(d2) / h**2, (r, c)), shape=(n, n))
    return D1, D2


def dirichlet_operators(n: int, h: float):
    """Operators on the interior unknowns; boundary values enter as forcing terms in ``solve_dirichlet``.

    Points next to a boundary use second-order stencils.
    """
    D1 = sp.lil_matrix((n, n))
    D2 = sp.lil_matrix((n, n))
    for i in range(n):
        if 2 <= i <= n - 3:
            for o, a, b in zip(OFFSETS, C1, C2):
                D1[i, i + o] += a / h
                D2[i, i + o] += b / h**2
        else:
            for o, a, b in ((-1, -0.5, 1.0), (0, 0.0, -2.0), (1, 0.5, 1.0)):
                if 0 <= i + o < n:
                    D1[i, i + o] += a / h
                    D2[i, i + o] += b / h**2
    return D1.tocsr(), D2.tocsr()


def _march(u, F, J, times, dt, rannacher_steps=0):
    """Advance ``u`` to each requested time; returns a dict time -> state."""
    n = u.size
    I = sp.identity(n, format="csr")
    t, out = 0.0, {}

    def step(u, tau, theta):
        rhs = u + (1 - theta) * tau * F(u)
        v = u.copy()
        for _ in range(30):
            G = v - theta * tau * F(v) - rhs
            dv = spla.spsolve((I - theta * tau * J(v)).tocsc(), G)
            v = v - dv
            if np.max(np.abs(dv)) < 1e-13:
                break
        return v

    done = 0
    for T in sorted(times):
        while t < T - 1e-12:
            if done < rannacher_steps:
                # damp the start-up transient of a non-smooth profile
                u = step(step(u, dt / 2, 1.0), dt / 2, 1.0)
            else:
                u = step(u, dt, 0.5)
            done += 1
            t += dt
        out[T] = u.copy()
    return out


def solve_periodic(u0, period: float, nu: float, times, n: int = 800, dt: float = 2e-3):
    """Grid ``x_j = j * period / n``; returns ``(x, {t: u})``."""
    h = period / n
    x = np.arange(n) * h
    D1, D2 = periodic_operators(n, h)
    F = lambda u: -D1 @ (0.5 * u * u) + nu * (D2 @ u)  # noqa: E731
    J = lambda u: -D1 @ sp.diags(u) + nu * D2  # noqa: E731
    return x, _march(u0(x), F, J, times, dt)


def solve_dirichlet(u0, a: float, b: float, u_a: float, u_b: float, nu: float, times,
                    n: int = 2000, dt: float = 2e-3, rannacher_steps: int = 4):
    """Far-field domain ``[a, b]`` with fixed end values; returns ``(x, {t: u})``."""
    h = (b - a) / (n + 1)
    x = a + h * np.arange(1, n + 1)
    D1, D2 = dirichlet_operators(n, h)
    # boundary contributions of the stencils touching x=a and x=b
    e0 = np.zeros(n); e0[0] = 1.0
    en = np.zeros(n); en[-1] = 1.0
    flux_bc = (-0.5 / h) * 0.5 * u_a**2 * e0 + (0.5 / h) * 0.5 * u_b**2 * en
    diff_bc = (u_a * e0 + u_b * en) / h**2
    F = lambda u: -(D1 @ (0.5 * u * u) + flux_bc) + nu * (D2 @ u + diff_bc)  # noqa: E731
    J = lambda u: -D1 @ sp.diags(u) + nu * D2  # noqa: E731
    return x, _march(u0(x), F, J, times, dt, rannacher_steps)


def sample(xg, ug, xq, period: float | None = None):
    """Cubic interpolation of the reference onto query points."""
    from scipy.interpolate import CubicSpline

    if period is not None:
        xs = np.append(xg, xg[0] + period)
        us = np.append(ug, ug[0])
        return CubicSpline(xs, us, bc_type="periodic")(np.mod(xq - xg[0], period) + xg[0])
    return CubicSpline(xg, ug)(xq)


def cell_averaged_step(a: float, b: float, n: int, jump: float, left: float, right: float):
    """Initial profile for ``solve_dirichlet`` whose grid values are cell averages of a step.

    Point values would misplace the jump by up to half a cell and cost one
    order of accuracy.
    """
    h = (b - a) / (n + 1)
    xg = a + h * np.arange(1, n + 1)
    frac_left = np.clip((jump - (xg - h / 2)) / h, 0.0, 1.0)
    values = left * frac_left + right * (1.0 - frac_left)
    return lambda x: values
