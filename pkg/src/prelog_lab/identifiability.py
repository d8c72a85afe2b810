"""Identifiability certification for the oversampled front-end.

With one known symbol x_1, the map from the remaining unknowns
(s_hat, x_2..x_N) to the first N+Q-1 noiseless output samples (all N odd
samples plus the first Q-1 even ones) is square. This module builds its
complex Jacobian, certifies that the determinant is nonzero off a
measure-zero set by Monte Carlo, constructs an explicit witness point
whose determinant factorizes into visibly nonzero parts, and verifies the
full-spark property of the combined phase matrix that the construction
relies on.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fading import BlockSpec
from .frontends import build_p, build_qe, build_qo
from .util import array_digest, standard_complex_normal

SINGULARITY_SCALE = 1e-12  # |det| below this times the Hadamard bound -> singular
NULLSPACE_TOL = 1e-10
WITNESS_ENTRY_TOL = 1e-9


@dataclass(frozen=True)
class JacobianReport:
    """Determinant diagnostics of one Jacobian evaluation."""

    dimension: tuple
    abs_det: float
    log_abs_det: float
    singular: bool
    inputs_digest: str


@dataclass(frozen=True)
class SparkReport:
    """Outcome of the Q-column subset determinant sweep."""

    n_subsets_checked: int
    min_abs_det: float
    min_scaled_det: float
    full_spark: bool
    exhaustive: bool
    coverage: float

    def to_json(self) -> dict:
        return {"n_subsets_checked": self.n_subsets_checked,
                "min_abs_det": self.min_abs_det,
                "min_scaled_det": self.min_scaled_det,
                "full_spark": self.full_spark,
                "exhaustive": self.exhaustive,
                "coverage": self.coverage}


def _jacobian_from_parts(qo: np.ndarray, qe: np.ndarray, p: np.ndarray,
                         x: np.ndarray, s_hat: np.ndarray) -> np.ndarray:
    """Square Jacobian of the pinned-first-symbol forward map.

    Rows: the N odd samples then the first Q-1 even samples. Columns: the Q
    coefficient derivatives then the N-1 derivatives w.r.t. x_2..x_N.
    """
    n, q = qo.shape
    v = p * s_hat
    g_odd = qo @ v
    g_even = qe @ v
    jac = np.zeros((n + q - 1, n + q - 1), dtype=complex)
    jac[:n, :q] = (qo * x[:, None]) * p[None, :]
    jac[n:, :q] = (qe[: q - 1] * x[: q - 1, None]) * p[None, :]
    # each free symbol x_k (k = 2..N) appears in exactly one odd and at most
    # one even retained sample
    rows = np.arange(1, n)
    jac[rows, q + rows - 1] = g_odd[1:]
    rows_e = np.arange(1, q - 1)
    jac[n + rows_e, q + rows_e - 1] = g_even[rows_e]
    return jac


def build_jacobian(spec: BlockSpec, x_1: complex, s_hat: np.ndarray,
                   x_rest: np.ndarray) -> np.ndarray:
    """Complex (N+Q-1) x (N+Q-1) Jacobian at the point (x_1, s_hat, x_rest)."""
    s_hat = np.asarray(s_hat, dtype=complex)
    x_rest = np.asarray(x_rest, dtype=complex)
    if s_hat.shape != (spec.q,):
        raise ValueError(f"s_hat must have length {spec.q}")
    if x_rest.shape != (spec.n - 1,):
        raise ValueError(f"x_rest must have length {spec.n - 1}")
    x = np.concatenate([[complex(x_1)], x_rest])
    return _jacobian_from_parts(build_qo(spec), build_qe(spec), build_p(spec), x, s_hat)


def pinned_forward_map(spec: BlockSpec, x_1: complex, s_hat: np.ndarray,
                       x_rest: np.ndarray) -> np.ndarray:
    """Noiseless retained samples [B(x) s_hat]_{1..N+Q-1} the Jacobian differentiates."""
    x = np.concatenate([[complex(x_1)], np.asarray(x_rest, dtype=complex)])
    v = build_p(spec) * np.asarray(s_hat, dtype=complex)
    y_odd = (build_qo(spec) @ v) * x
    y_even = (build_qe(spec) @ v) * x
    return np.concatenate([y_odd, y_even[: spec.q - 1]])


def _hadamard_bound(jac: np.ndarray) -> float:
    return float(np.prod(np.linalg.norm(jac, axis=1)))


def jacobian_report(jac: np.ndarray, inputs_digest: str = "") -> JacobianReport:
    """Scale-invariant singularity verdict via the Hadamard row bound."""
    sign, logdet = np.linalg.slogdet(jac)
    abs_det = 0.0 if sign == 0 else float(np.exp(logdet))
    bound = _hadamard_bound(jac)
    singular = bool(bound == 0.0 or abs_det < SINGULARITY_SCALE * bound)
    return JacobianReport(dimension=jac.shape, abs_det=abs_det,
                          log_abs_det=float(logdet) if sign != 0 else -math.inf,
                          singular=singular, inputs_digest=inputs_digest)


def jacobian_report_at(spec: BlockSpec, x_1: complex, s_hat: np.ndarray,
                       x_rest: np.ndarray) -> JacobianReport:
    """Build the Jacobian at one point and report it, tagged with an input hash."""
    jac = build_jacobian(spec, x_1, s_hat, x_rest)
    digest = array_digest(np.asarray([x_1], dtype=complex),
                          np.asarray(s_hat, dtype=complex),
                          np.asarray(x_rest, dtype=complex))
    return jacobian_report(jac, inputs_digest=digest)


@dataclass(frozen=True)
class WitnessResult:
    """Constructed nonsingular point and its factorized determinant."""

    s_hat: np.ndarray
    abs_det_a: float
    abs_det_d1: float
    abs_det_d2: float
    abs_det_jacobian: float

    @property
    def factored_abs_det(self) -> float:
        return self.abs_det_a * self.abs_det_d1 * self.abs_det_d2


def appendix_witness(spec: BlockSpec, x: np.ndarray) -> WitnessResult:
    """Explicit (s_hat, x) with provably nonzero Jacobian determinant.

    s_hat is chosen so that diag(p) s_hat annihilates the first Q-1 odd
    phase rows; full spark of the combined phase matrix then forces every
    remaining odd row product (rows Q..N) and every even row product to be
    nonzero, which makes the determinant factor into a Q x Q block A and
    two diagonal blocks D1, D2. The factorization is verified against the
    directly assembled Jacobian.
    """
    x = np.asarray(x, dtype=complex)
    if x.shape != (spec.n,):
        raise ValueError(f"x must have length {spec.n}")
    if np.any(np.abs(x) < 1e-12):
        raise ValueError("witness construction requires all symbols nonzero")
    n, q = spec.n, spec.q
    p, qo, qe = build_p(spec), build_qo(spec), build_qe(spec)

    if q == 1:
        v = np.ones(1, dtype=complex)
    else:
        sys = qo[: q - 1]
        _, sv, vh = np.linalg.svd(sys)
        v = vh[-1].conj()
        if np.linalg.norm(sys @ v) > NULLSPACE_TOL * sv[0]:
            raise RuntimeError("null-space vector of the odd phase rows is inaccurate")
    s_hat = v / p

    g_odd = qo @ v
    g_even = qe @ v
    d2_rows = np.arange(max(q, 2) - 1, n)  # odd rows Q..N (2..N when Q == 1)
    d1_rows = np.arange(1, q - 1)          # even rows 2..Q-1
    bad_odd = np.flatnonzero(np.abs(g_odd[d2_rows]) < WITNESS_ENTRY_TOL)
    bad_even = np.flatnonzero(np.abs(g_even) < WITNESS_ENTRY_TOL)
    if bad_odd.size or bad_even.size:
        raise RuntimeError(
            "witness diagonal entries vanished (odd rows "
            f"{(d2_rows[bad_odd] + 1).tolist()}, even rows "
            f"{(bad_even + 1).tolist()}); this contradicts full spark")

    a_block = np.vstack([x[0] * qe[0:1], qo[: q - 1] * x[: q - 1, None]]) * p[None, :]
    if q == 1:
        a_block = (x[0] * qo[0:1]) * p[None, :]
    abs_det_a = abs(np.linalg.det(a_block))
    abs_det_d1 = float(np.prod(np.abs(g_even[d1_rows]))) if d1_rows.size else 1.0
    abs_det_d2 = float(np.prod(np.abs(g_odd[d2_rows]))) if d2_rows.size else 1.0

    jac = _jacobian_from_parts(qo, qe, p, x, s_hat)
    abs_det_j = abs(np.linalg.det(jac))
    return WitnessResult(s_hat=s_hat, abs_det_a=abs_det_a, abs_det_d1=abs_det_d1,
                         abs_det_d2=abs_det_d2, abs_det_jacobian=abs_det_j)


def subset_determinant_sweep(cols: np.ndarray, max_exhaustive: int = 10 ** 7,
                             n_samples: int = 10 ** 5,
                             rng: Optional[np.random.Generator] = None) -> SparkReport:
    """Determinant sweep over size-Q column subsets of a Q x K matrix."""
    q, n_cols = cols.shape
    total = math.comb(n_cols, q)
    if total <= max_exhaustive:
        subsets = itertools.combinations(range(n_cols), q)
        n_checked = total
        exhaustive = True
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        subsets = (sorted(rng.choice(n_cols, size=q, replace=False))
                   for _ in range(n_samples))
        n_checked = n_samples
        exhaustive = False
    min_abs = math.inf
    min_scaled = math.inf
    for subset in subsets:
        sub = cols[:, list(subset)]
        d = abs(np.linalg.det(sub))
        norms = float(np.prod(np.linalg.norm(sub, axis=0)))
        min_abs = min(min_abs, d)
        min_scaled = min(min_scaled, d / norms if norms > 0 else 0.0)
    return SparkReport(n_subsets_checked=n_checked, min_abs_det=float(min_abs),
                       min_scaled_det=float(min_scaled),
                       full_spark=bool(min_scaled > SINGULARITY_SCALE),
                       exhaustive=exhaustive,
                       coverage=float(n_checked) / total)


def full_spark_check(spec: BlockSpec, max_exhaustive: int = 10 ** 7,
                     n_samples: int = 10 ** 5,
                     rng: Optional[np.random.Generator] = None) -> SparkReport:
    """Check that every Q columns of the Q x 2N combined phase matrix are
    independent (exhaustively when feasible, sampled otherwise)."""
    cols = np.concatenate([build_qo(spec).T, build_qe(spec).T], axis=1)
    return subset_determinant_sweep(cols, max_exhaustive=max_exhaustive,
                                    n_samples=n_samples, rng=rng)


@dataclass(frozen=True)
class JacobianMcReport:
    trials: int
    singular_fraction: float
    min_abs_det: float
    min_scaled_det: float
    mean_log_abs_det: float

    def to_json(self) -> dict:
        return {"trials": self.trials, "singular_fraction": self.singular_fraction,
                "min_abs_det": self.min_abs_det,
                "min_scaled_det": self.min_scaled_det,
                "mean_log_abs_det": self.mean_log_abs_det}


def jacobian_monte_carlo(spec: BlockSpec, trials: int,
                         rng: np.random.Generator,
                         force_x1_zero: bool = False) -> JacobianMcReport:
    """Draw (x_1, s_hat, x_rest) i.i.d. CN(0,1) and count singular Jacobians."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    p, qo, qe = build_p(spec), build_qo(spec), build_qe(spec)
    n_singular = 0
    min_abs = math.inf
    min_scaled = math.inf
    log_sum = 0.0
    for _ in range(trials):
        x = standard_complex_normal(rng, spec.n)
        if force_x1_zero:
            x[0] = 0.0
        s_hat = standard_complex_normal(rng, spec.q)
        jac = _jacobian_from_parts(qo, qe, p, x, s_hat)
        sign, logdet = np.linalg.slogdet(jac)
        abs_det = 0.0 if sign == 0 else float(np.exp(logdet))
        bound = _hadamard_bound(jac)
        scaled = abs_det / bound if bound > 0 else 0.0
        if bound == 0.0 or abs_det < SINGULARITY_SCALE * bound:
            n_singular += 1
        min_abs = min(min_abs, abs_det)
        min_scaled = min(min_scaled, scaled)
        log_sum += logdet if sign != 0 else -math.inf
    return JacobianMcReport(trials=trials,
                            singular_fraction=n_singular / trials,
                            min_abs_det=min_abs, min_scaled_det=min_scaled,
                            mean_log_abs_det=log_sum / trials)
