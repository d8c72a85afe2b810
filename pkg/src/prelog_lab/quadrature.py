"""Gauss-Legendre quadrature with panel-doubling refinement.

All integrands must accept a 1-D numpy array of abscissae and return an
array of values (real or complex). Refinement doubles the panel count per
level and stops when two successive estimates agree within the absolute
tolerance; hitting the level cap raises instead of silently returning.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

DEFAULT_ORDER = 20
MAX_LEVELS = 20


class QuadratureConvergenceError(RuntimeError):
    """Panel refinement hit the level cap before reaching the tolerance."""

    def __init__(self, message: str, achieved: float, value: complex):
        super().__init__(f"{message} (achieved {achieved:.3e})")
        self.achieved = achieved
        self.value = value


@lru_cache(maxsize=None)
def _gl_rule(order: int):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return nodes, weights


def _panel_sum(f, a: float, b: float, n_panels: int, order: int):
    nodes, weights = _gl_rule(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    pts = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    vals = np.asarray(f(pts)).reshape(n_panels, order)
    return ((vals @ weights) * half).sum()


def integrate(f, a: float, b: float, tol: float = 1e-10, order: int = DEFAULT_ORDER,
              max_levels: int = MAX_LEVELS, min_levels: int = 2):
    """Integrate f over [a, b] to absolute tolerance tol."""
    if a == b:
        return 0.0 + 0.0j
    prev = None
    delta = np.inf
    for level in range(max_levels):
        cur = _panel_sum(f, a, b, 2 ** level, order)
        if prev is not None:
            delta = abs(cur - prev)
            if delta < tol and level + 1 >= min_levels:
                return cur
        prev = cur
    raise QuadratureConvergenceError(
        f"integral over [{a:g}, {b:g}] did not converge to {tol:.1e}", delta, prev)


def integrate_segments(f, edges: np.ndarray, tol: float, order: int = DEFAULT_ORDER,
                       max_levels: int = MAX_LEVELS):
    """Per-segment integrals between consecutive edges, refined independently.

    Returns the array of segment integrals. tol is the total absolute budget,
    distributed across segments proportionally to their length.
    """
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    n_seg = a.size
    total_len = edges[-1] - edges[0]
    if total_len <= 0:
        return np.zeros(n_seg, dtype=complex)
    seg_tol = tol * np.maximum((b - a) / total_len, 1e-6)

    def _eval(lo, hi, n_panels):
        nodes, weights = _gl_rule(order)
        # panel grid per segment: (n_active, n_panels, order)
        frac = np.linspace(0.0, 1.0, n_panels + 1)
        seg_edges = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
        half = 0.5 * np.diff(seg_edges, axis=1)
        mid = 0.5 * (seg_edges[:, :-1] + seg_edges[:, 1:])
        pts = mid[:, :, None] + half[:, :, None] * nodes[None, None, :]
        vals = np.asarray(f(pts.ravel())).reshape(pts.shape)
        return ((vals @ weights) * half).sum(axis=1)

    est = _eval(a, b, 1)
    done = np.zeros(n_seg, dtype=bool)
    n_panels = 1
    for _ in range(max_levels):
        n_panels *= 2
        idx = np.flatnonzero(~done)
        new = _eval(a[idx], b[idx], n_panels)
        conv = np.abs(new - est[idx]) < seg_tol[idx]
        est[idx] = new
        done[idx[conv]] = True
        if done.all():
            return est
    worst = float(np.abs(new[~conv]).max()) if (~conv).any() else 0.0
    raise QuadratureConvergenceError(
        "segment refinement did not converge", worst, est.sum())


def cumulative_integral(f, points: np.ndarray, tol: float, order: int = DEFAULT_ORDER):
    """Antiderivative of f evaluated at sorted points, zero at points[0]."""
    points = np.asarray(points, dtype=float)
    if points.size == 1:
        return np.zeros(1, dtype=complex)
    segs = integrate_segments(f, points, tol, order=order)
    out = np.empty(points.size, dtype=complex)
    out[0] = 0.0
    np.cumsum(segs, out=out[1:])
    return out
