"""Discrete-time receiver front-ends for the block-fading channel.

Two alternatives are implemented in exact closed form and validated against
a continuous-time quadrature oracle:

* symbol matched filtering -- integrate-and-dump over each full symbol,
  one output sample per symbol:
      y_k = sqrt(rho) h_k x_k + w_k,
      h_k = sum_m s_m exp(j 2 pi m (k - 1/2) / N) sinc(m / N).

* 2x oversampling -- integrate-and-dump over half-symbol windows, two
  output samples per symbol:
      y_n = sqrt(rho) x_ceil(n/2) sum_m p_m s_hat_m exp(j pi m n / N) + w_n,
      p_m = 2^{-1/2} exp(-j pi m / (2N)) sinc(m / (2N)) sqrt(S_h(m/T)/T),
  for n = 1..2N, stacked as y = sqrt(rho) B(x) s_hat + w with
  B = [diag(x) Qo; diag(x) Qe] diag(p).

Noise is unit-variance proper complex Gaussian per output sample in both
cases; rng=None produces the noiseless output used by the identifiability
experiments. Formulas are 1-based in k, n, and m runs -M..M; storage is
0-based with m mapped to columns 0..Q-1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import quadrature
from .fading import BlockSpec, FadingCoeffs, eval_h
from .util import standard_complex_normal


@dataclass(frozen=True)
class FrontendMatrices:
    """p vector and the two N x Q phase matrices; b is set once x is known."""

    p: np.ndarray
    qo: np.ndarray
    qe: np.ndarray
    b: Optional[np.ndarray] = None


@dataclass(frozen=True)
class BlockObservation:
    """Transmitted symbols, SNR and received samples for one block.

    Exactly one of y_sym (symbol rate, length N) or the pair y_odd/y_even
    (oversampled, length N each) is populated.
    """

    x: np.ndarray
    rho: float
    y_sym: Optional[np.ndarray] = None
    y_odd: Optional[np.ndarray] = None
    y_even: Optional[np.ndarray] = None
    noise_variance: float = 1.0

    @property
    def kind(self) -> str:
        return "symbol_rate" if self.y_sym is not None else "oversampled"

    @property
    def stacked(self) -> np.ndarray:
        """Oversampled samples stacked as (odd block, even block), length 2N."""
        if self.y_odd is None or self.y_even is None:
            raise ValueError("stacked output requires an oversampled observation")
        return np.concatenate([self.y_odd, self.y_even])

    def to_json(self) -> dict:
        def enc(v):
            return None if v is None else [[float(z.real), float(z.imag)] for z in v]

        return {"kind": self.kind, "rho": self.rho,
                "noise_variance": self.noise_variance,
                "x": enc(self.x), "y_sym": enc(self.y_sym),
                "y_odd": enc(self.y_odd), "y_even": enc(self.y_even)}

    @staticmethod
    def from_json(obj: dict) -> "BlockObservation":
        def dec(v):
            if v is None:
                return None
            a = np.asarray(v, dtype=float)
            return a[:, 0] + 1j * a[:, 1]

        return BlockObservation(
            x=dec(obj["x"]), rho=float(obj["rho"]),
            y_sym=dec(obj.get("y_sym")), y_odd=dec(obj.get("y_odd")),
            y_even=dec(obj.get("y_even")),
            noise_variance=float(obj.get("noise_variance", 1.0)))


def build_p(spec: BlockSpec) -> np.ndarray:
    """Half-symbol window gains p_m, m = -M..M. All entries are nonzero."""
    ms = spec.harmonics()
    var = spec.coeff_variances()
    if np.any(var <= 0):
        raise ValueError("every sampled PSD value must be positive to form p")
    return (np.exp(-1j * np.pi * ms / (2 * spec.n)) * np.sinc(ms / (2 * spec.n))
            * np.sqrt(var) / np.sqrt(2.0))


def build_qo(spec: BlockSpec) -> np.ndarray:
    """Odd-sample phases: row k, column m holds exp(j pi m (2k-1) / N)."""
    k = np.arange(1, spec.n + 1)
    return np.exp(1j * np.pi * np.outer(2 * k - 1, spec.harmonics()) / spec.n)


def build_qe(spec: BlockSpec) -> np.ndarray:
    """Even-sample phases: row k, column m holds exp(j pi m (2k) / N)."""
    k = np.arange(1, spec.n + 1)
    return np.exp(1j * np.pi * np.outer(2 * k, spec.harmonics()) / spec.n)


def build_b(spec: BlockSpec, p: np.ndarray, qo: np.ndarray, qe: np.ndarray,
            x: np.ndarray) -> np.ndarray:
    """Stacked 2N x Q system matrix B = [diag(x) Qo; diag(x) Qe] diag(p)."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (spec.n,):
        raise ValueError(f"x must have length {spec.n}, got {x.shape}")
    if qo.shape != (spec.n, spec.q) or qe.shape != (spec.n, spec.q) or p.shape != (spec.q,):
        raise ValueError("front-end matrix dimensions do not match the spec")
    return np.vstack([qo * x[:, None], qe * x[:, None]]) * p[None, :]


def frontend_matrices(spec: BlockSpec, x: Optional[np.ndarray] = None) -> FrontendMatrices:
    p, qo, qe = build_p(spec), build_qo(spec), build_qe(spec)
    b = None if x is None else build_b(spec, p, qo, qe, x)
    return FrontendMatrices(p=p, qo=qo, qe=qe, b=b)


def symbol_gain_matrix(spec: BlockSpec, normalized: bool = False) -> np.ndarray:
    """N x Q map from coefficients to per-symbol gains h_k.

    Entry (k, m) is exp(j 2 pi m (k - 1/2) / N) sinc(m / N); with
    normalized=True the PSD scaling is folded in so the matrix acts on
    s_hat instead of s.
    """
    k = np.arange(1, spec.n + 1)
    ms = spec.harmonics()
    v = np.exp(2j * np.pi * np.outer(k - 0.5, ms) / spec.n) * np.sinc(ms / spec.n)[None, :]
    if normalized:
        v = v * np.sqrt(spec.coeff_variances())[None, :]
    return v


def symbol_gains(spec: BlockSpec, coeffs: FadingCoeffs) -> np.ndarray:
    """Closed-form matched-filter gains h_k, k = 1..N."""
    return symbol_gain_matrix(spec) @ coeffs.s


def simulate_symbol_rate(spec: BlockSpec, coeffs: FadingCoeffs, x: np.ndarray,
                         rho: float, rng: Optional[np.random.Generator] = None
                         ) -> BlockObservation:
    """Symbol-rate output y_k = sqrt(rho) h_k x_k (+ unit-variance noise)."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (spec.n,):
        raise ValueError(f"x must have length {spec.n}")
    if rho <= 0:
        raise ValueError("rho must be positive")
    y = np.sqrt(rho) * symbol_gains(spec, coeffs) * x
    if rng is not None:
        y = y + standard_complex_normal(rng, spec.n)
    return BlockObservation(x=x, rho=rho, y_sym=y)


def simulate_oversampled(spec: BlockSpec, coeffs: FadingCoeffs, x: np.ndarray,
                         rho: float, rng: Optional[np.random.Generator] = None
                         ) -> BlockObservation:
    """2x oversampled output, returned as odd/even sample vectors."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (spec.n,):
        raise ValueError(f"x must have length {spec.n}")
    if rho <= 0:
        raise ValueError("rho must be positive")
    ns = np.arange(1, 2 * spec.n + 1)
    phases = np.exp(1j * np.pi * np.outer(ns, spec.harmonics()) / spec.n)
    y = np.sqrt(rho) * x[(ns - 1) // 2] * (phases @ (build_p(spec) * coeffs.s_hat))
    if rng is not None:
        y = y + standard_complex_normal(rng, 2 * spec.n)
    return BlockObservation(x=x, rho=rho, y_odd=y[0::2], y_even=y[1::2])


def oracle_integrate(spec: BlockSpec, coeffs: FadingCoeffs, x: np.ndarray,
                     window, gain: float, tol: float = 1e-10) -> complex:
    """Continuous-time reference: gain * int_a^b h(tau) x(tau) dtau.

    x(tau) is the piecewise-constant transmit waveform sum_l x_l p(tau -
    (l-1) T_S) with the unit-energy rectangular pulse p of width T_S. The
    window must lie inside [0, T]; it is split at symbol boundaries and
    each piece integrated by panel-refined Gauss-Legendre quadrature.
    """
    a, b = float(window[0]), float(window[1])
    if not (0.0 <= a <= b <= spec.t + 1e-12):
        raise ValueError(f"window [{a:g}, {b:g}] must lie inside [0, {spec.t:g}]")
    x = np.asarray(x, dtype=complex)

    def integrand(tau):
        idx = np.clip((tau / spec.t_s).astype(int), 0, spec.n - 1)
        wave = x[idx] / np.sqrt(spec.t_s)
        return eval_h(spec, coeffs, np.minimum(tau, spec.t)) * wave

    lo_sym = int(np.floor(a / spec.t_s)) + 1
    hi_sym = int(np.ceil(b / spec.t_s))
    cuts = [a] + [k * spec.t_s for k in range(lo_sym, hi_sym)] + [b]
    total = 0.0 + 0.0j
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi > lo:
            total += quadrature.integrate(integrand, lo, hi, tol=tol)
    return gain * total


def symbol_covariance(spec: BlockSpec) -> np.ndarray:
    """N x N covariance of the symbol-rate gains, E[h_k h_l*], in closed form."""
    v = symbol_gain_matrix(spec)
    return (v * spec.coeff_variances()[None, :]) @ v.conj().T


@dataclass(frozen=True)
class RankReport:
    """Singular-value diagnosis of the symbol-rate gain covariance."""

    singular_values: np.ndarray
    q: int
    sigma_q_ratio: float
    sigma_q1_ratio: float
    rank_is_q: bool

    def to_json(self) -> dict:
        return {"singular_values": list(map(float, self.singular_values)),
                "q": self.q, "sigma_q_ratio": self.sigma_q_ratio,
                "sigma_q1_ratio": self.sigma_q1_ratio, "rank_is_q": self.rank_is_q}


def symbol_covariance_rank(spec: BlockSpec) -> RankReport:
    """Certify numerical rank Q of the N x N gain covariance (Q < N)."""
    sv = np.linalg.svd(symbol_covariance(spec), compute_uv=False)
    ratio_q = float(sv[spec.q - 1] / sv[0])
    ratio_q1 = float(sv[spec.q] / sv[0]) if spec.q < spec.n else 0.0
    return RankReport(singular_values=sv, q=spec.q, sigma_q_ratio=ratio_q,
                      sigma_q1_ratio=ratio_q1,
                      rank_is_q=(ratio_q > 1e-6 and ratio_q1 < 1e-9))
