"""Derivative-free minimization shared by the classical fits.

A plain Nelder-Mead simplex with fixed coefficients and a deterministic
termination rule: stop when the simplex diameter (max infinity-norm distance
from the best vertex) drops below ``diameter_tol``, or after
``max_evals_per_dim * dim`` objective evaluations.  Box constraints are
enforced by a quadratic penalty outside the bounds, which keeps the search
deterministic and the objective informative near the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["NelderMeadResult", "nelder_mead"]

_REFLECT = 1.0
_EXPAND = 2.0
_CONTRACT = 0.5
_SHRINK = 0.5


@dataclass(frozen=True)
class NelderMeadResult:
    x: np.ndarray
    fun: float
    n_evals: int
    converged: bool


def nelder_mead(
    objective,
    x0,
    bounds=None,
    initial_step: float = 0.1,
    diameter_tol: float = 1e-8,
    max_evals_per_dim: int = 2000,
    restarts: int = 0,
) -> NelderMeadResult:
    """Minimize ``objective`` starting from ``x0``.

    ``bounds`` is an optional list of (lo, hi) pairs (either side may be
    None).  The start point and simplex construction are deterministic, so
    equal inputs give bit-equal results.  ``restarts`` reruns the search
    from the incumbent with a fresh simplex, which recovers from premature
    simplex collapse in curved valleys; restarting stops early once a rerun
    no longer improves.
    """
    result = _nelder_mead_once(
        objective, x0, bounds, initial_step, diameter_tol, max_evals_per_dim
    )
    for _ in range(restarts):
        again = _nelder_mead_once(
            objective, result.x, bounds, initial_step, diameter_tol, max_evals_per_dim
        )
        improved = again.fun < result.fun - 1e-10 * (1.0 + abs(result.fun))
        if again.fun < result.fun:
            result = NelderMeadResult(
                x=again.x, fun=again.fun,
                n_evals=result.n_evals + again.n_evals,
                converged=again.converged,
            )
        else:
            result = NelderMeadResult(
                x=result.x, fun=result.fun,
                n_evals=result.n_evals + again.n_evals,
                converged=result.converged,
            )
        if not improved:
            break
    return result


def _nelder_mead_once(
    objective,
    x0,
    bounds,
    initial_step: float,
    diameter_tol: float,
    max_evals_per_dim: int,
) -> NelderMeadResult:
    x0 = np.asarray(x0, dtype=np.float64)
    dim = len(x0)
    if dim == 0:
        return NelderMeadResult(x=x0, fun=float(objective(x0)), n_evals=1, converged=True)

    lo = np.full(dim, -np.inf)
    hi = np.full(dim, np.inf)
    if bounds is not None:
        for i, (a, b) in enumerate(bounds):
            if a is not None:
                lo[i] = a
            if b is not None:
                hi[i] = b

    n_evals = 0

    def f(x: np.ndarray) -> float:
        nonlocal n_evals
        n_evals += 1
        excess = np.maximum(0.0, lo - x) + np.maximum(0.0, x - hi)
        if np.any(excess > 0):
            return 1e12 * (1.0 + float(np.sum(excess**2)))
        return float(objective(x))

    # Initial simplex: x0 plus a step along each axis, nudged inside bounds.
    verts = [np.clip(x0, lo, hi)]
    for i in range(dim):
        v = verts[0].copy()
        step = initial_step
        if v[i] + step > hi[i]:
            step = -initial_step
        v[i] += step
        verts.append(np.clip(v, lo, hi))
    fvals = [f(v) for v in verts]

    max_evals = max_evals_per_dim * dim
    converged = False
    while n_evals < max_evals:
        order = sorted(range(dim + 1), key=lambda i: (fvals[i], i))
        verts = [verts[i] for i in order]
        fvals = [fvals[i] for i in order]

        diameter = max(
            float(np.max(np.abs(v - verts[0]))) for v in verts[1:]
        )
        if diameter < diameter_tol:
            converged = True
            break

        centroid = np.mean(verts[:-1], axis=0)
        worst = verts[-1]

        xr = centroid + _REFLECT * (centroid - worst)
        fr = f(xr)
        if fvals[0] <= fr < fvals[-2]:
            verts[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[0]:
            xe = centroid + _EXPAND * (centroid - worst)
            fe = f(xe)
            if fe < fr:
                verts[-1], fvals[-1] = xe, fe
            else:
                verts[-1], fvals[-1] = xr, fr
            continue
        xc = centroid + _CONTRACT * (centroid - worst)
        fc = f(xc)
        if fc < fvals[-1]:
            verts[-1], fvals[-1] = xc, fc
            continue
        # Shrink toward the best vertex.
        for i in range(1, dim + 1):
            verts[i] = verts[0] + _SHRINK * (verts[i] - verts[0])
            fvals[i] = f(verts[i])

    order = sorted(range(dim + 1), key=lambda i: (fvals[i], i))
    best = order[0]
    return NelderMeadResult(
        x=verts[best].copy(), fun=fvals[best], n_evals=n_evals, converged=converged
    )
