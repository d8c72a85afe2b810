"""Band-limited Rayleigh block fading via a truncated Fourier-series model.

Within one block of duration T the zero-mean proper complex Gaussian fading
process h(t) is represented by Q = 2M + 1 Fourier coefficients,
M = floor(T * nu_max):

    h(t) = sum_{m=-M..M} s_m exp(j 2 pi m t / T),    0 <= t <= T,

with the coefficients treated as independent, Var[s_m] = S_h(m/T) / T.
Blocks are i.i.d., so the whole process is specified per block. The exact
coefficient cross-covariance (a nested integral of the correlation
function) is also provided so the diagonal model can be validated against
it numerically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from . import quadrature
from .util import standard_complex_normal

NORMALIZATION_TOL = 1e-10


class PsdKind(str, Enum):
    FLAT = "flat_band_limited"
    PERIODIC = "periodic"
    TABLE = "user_table"


@dataclass(frozen=True)
class PsdSpec:
    """Doppler power spectral density, supported on [-nu_max, nu_max].

    kind selects the shape:
      * FLAT      -- S(nu) = total_power / (2 nu_max) on the support.
      * PERIODIC  -- line spectrum with masses ``coeffs`` (c_{-K}..c_K) at
                     multiples of 1/T; the block-coefficient variances are
                     then exactly c_m, which makes the diagonal covariance
                     model exact and testable.
      * TABLE     -- tabulated (nu, S(nu)) pairs, linearly interpolated.
    """

    kind: PsdKind
    nu_max: float
    total_power: float = 1.0
    coeffs: Optional[np.ndarray] = None
    table: Optional[tuple] = None

    def __post_init__(self):
        if self.nu_max <= 0:
            raise ValueError("psd.nu_max must be positive")
        if self.total_power <= 0:
            raise ValueError("psd.total_power must be positive")
        if self.kind == PsdKind.PERIODIC:
            if self.coeffs is None:
                raise ValueError("psd.coeffs required for the periodic kind")
            c = np.asarray(self.coeffs, dtype=float)
            if c.ndim != 1 or c.size % 2 != 1:
                raise ValueError("psd.coeffs must be a 1-D odd-length vector c_{-K..K}")
            if np.any(c < 0):
                raise ValueError("psd.coeffs must be nonnegative")
            if abs(c.sum() - self.total_power) > NORMALIZATION_TOL:
                raise ValueError(
                    f"psd.coeffs sum {c.sum():.12g} != total_power {self.total_power:.12g}")
            object.__setattr__(self, "coeffs", c)
        elif self.kind == PsdKind.TABLE:
            if self.table is None:
                raise ValueError("psd.table required for the user_table kind")
            nu, s = (np.asarray(v, dtype=float) for v in self.table)
            if nu.ndim != 1 or nu.shape != s.shape or nu.size < 2:
                raise ValueError("psd.table must be two equal-length 1-D arrays")
            if np.any(np.diff(nu) <= 0):
                raise ValueError("psd.table frequencies must be strictly increasing")
            if np.any(s < 0):
                raise ValueError("psd.table values must be nonnegative")
            if nu[0] < -self.nu_max - 1e-12 or nu[-1] > self.nu_max + 1e-12:
                raise ValueError("psd.table support exceeds [-nu_max, nu_max]")
            power = np.trapezoid(s, nu)
            if abs(power - self.total_power) > NORMALIZATION_TOL:
                raise ValueError(
                    f"psd.table integrates to {power:.12g} != total_power "
                    f"{self.total_power:.12g}")
            object.__setattr__(self, "table", (nu, s))

    def density(self, nu) -> np.ndarray:
        """S(nu); for the periodic kind this is undefined (line spectrum)."""
        nu = np.asarray(nu, dtype=float)
        if self.kind == PsdKind.FLAT:
            level = self.total_power / (2.0 * self.nu_max)
            return np.where(np.abs(nu) <= self.nu_max, level, 0.0)
        if self.kind == PsdKind.TABLE:
            tnu, ts = self.table
            out = np.interp(nu, tnu, ts, left=0.0, right=0.0)
            return np.where(np.abs(nu) <= self.nu_max, out, 0.0)
        raise ValueError("periodic PSD is a line spectrum; use coeff_variance")

    def coeff_variance(self, m: int, t: float) -> float:
        """Variance S_h(m/T)/T assigned to the coefficient s_m for block length t."""
        if self.kind == PsdKind.PERIODIC:
            k = (self.coeffs.size - 1) // 2
            return float(self.coeffs[m + k]) if abs(m) <= k else 0.0
        return float(self.density(m / t)) / t

    def to_json(self) -> dict:
        out = {"kind": self.kind.value, "total_power": self.total_power}
        if self.kind == PsdKind.PERIODIC:
            out["coeffs"] = list(map(float, self.coeffs))
        elif self.kind == PsdKind.TABLE:
            out["table"] = {"nu": list(map(float, self.table[0])),
                            "s": list(map(float, self.table[1]))}
        return out

    @staticmethod
    def from_json(obj: dict, nu_max: float) -> "PsdSpec":
        if "kind" not in obj:
            raise ValueError("psd.kind is missing")
        kind = PsdKind(obj["kind"])
        table = obj.get("table")
        if table is not None:
            table = (table["nu"], table["s"])
        return PsdSpec(kind=kind, nu_max=nu_max,
                       total_power=float(obj.get("total_power", 1.0)),
                       coeffs=obj.get("coeffs"), table=table)


def flat_psd(nu_max: float, total_power: float = 1.0) -> PsdSpec:
    return PsdSpec(kind=PsdKind.FLAT, nu_max=nu_max, total_power=total_power)


@dataclass(frozen=True)
class BlockSpec:
    """Deterministic geometry of one fading block.

    t_s: symbol duration [s]; n: symbols per block; t = n * t_s: block
    length [s]; m = floor(t * nu_max); q = 2 m + 1 coefficients. The model
    requires q < n, which is enforced at construction.
    """

    t_s: float
    n: int
    nu_max: float
    psd: PsdSpec
    t: float = field(init=False)
    m: int = field(init=False)
    q: int = field(init=False)

    def __post_init__(self):
        if self.t_s <= 0:
            raise ValueError("t_s must be positive")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.nu_max <= 0:
            raise ValueError("nu_max must be positive")
        if abs(self.psd.nu_max - self.nu_max) > 1e-12 * max(1.0, self.nu_max):
            raise ValueError("psd.nu_max disagrees with the block nu_max")
        if self.nu_max >= 0.5 / self.t_s:
            warnings.warn(
                f"nu_max={self.nu_max:g} >= half the symbol rate "
                f"{0.5 / self.t_s:g}; the model targets fading much slower "
                "than the signaling bandwidth", stacklevel=3)
        t = self.n * self.t_s
        m = math.floor(t * self.nu_max)
        q = 2 * m + 1
        if q >= self.n:
            raise ValueError(
                f"q = 2*floor(t*nu_max)+1 = {q} must be smaller than n = {self.n}")
        if self.psd.kind == PsdKind.PERIODIC:
            k = (self.psd.coeffs.size - 1) // 2
            if m > k:
                raise ValueError(
                    f"periodic psd.coeffs covers harmonics up to {k} < m = {m}")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "q", q)

    @property
    def coherence_time(self) -> float:
        """1 / (2 nu_max): the scale over which the fading decorrelates."""
        return 0.5 / self.nu_max

    def harmonics(self) -> np.ndarray:
        """Harmonic indices m = -M..M, in storage order (column 0 .. Q-1)."""
        return np.arange(-self.m, self.m + 1)

    def coeff_variances(self) -> np.ndarray:
        """Per-coefficient variances S_h(m/T)/T for m = -M..M."""
        return np.array([self.psd.coeff_variance(mm, self.t) for mm in self.harmonics()])

    def to_json(self) -> dict:
        return {"t_s": self.t_s, "n": self.n, "nu_max": self.nu_max,
                "psd": self.psd.to_json()}

    @staticmethod
    def from_json(obj: dict) -> "BlockSpec":
        for key in ("t_s", "n", "nu_max"):
            if key not in obj:
                raise ValueError(f"block spec field '{key}' is missing")
        psd_obj = obj.get("psd")
        nu_max = float(obj["nu_max"])
        psd = (PsdSpec.from_json(psd_obj, nu_max) if psd_obj is not None
               else flat_psd(nu_max))
        return make_block_spec(float(obj["t_s"]), int(obj["n"]), nu_max, psd)


def make_block_spec(t_s: float, n: int, nu_max: float,
                    psd: Optional[PsdSpec] = None) -> BlockSpec:
    """Build a BlockSpec; the PSD defaults to flat with unit power."""
    if psd is None:
        psd = flat_psd(nu_max)
    return BlockSpec(t_s=t_s, n=int(n), nu_max=nu_max, psd=psd)


@dataclass(frozen=True)
class FadingCoeffs:
    """One block's fading coefficients.

    s_hat are the normalized i.i.d. CN(0, 1) coefficients; s are the raw
    ones, s_m = s_hat_m * sqrt(S_h(m/T)/T). Index m runs -M..M.
    """

    s_hat: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        if self.s_hat.shape != self.s.shape or self.s_hat.ndim != 1:
            raise ValueError("s_hat and s must be 1-D vectors of equal length")

    @staticmethod
    def from_normalized(spec: BlockSpec, s_hat: np.ndarray) -> "FadingCoeffs":
        s_hat = np.asarray(s_hat, dtype=complex)
        if s_hat.shape != (spec.q,):
            raise ValueError(f"expected {spec.q} coefficients, got {s_hat.shape}")
        scale = np.sqrt(spec.coeff_variances())
        return FadingCoeffs(s_hat=s_hat, s=s_hat * scale)


def sample_fading(spec: BlockSpec, rng: np.random.Generator) -> FadingCoeffs:
    """Draw one block: s_hat i.i.d. CN(0,1), s scaled by the PSD samples."""
    return FadingCoeffs.from_normalized(spec, standard_complex_normal(rng, spec.q))


def eval_h(spec: BlockSpec, coeffs: FadingCoeffs, t) -> np.ndarray:
    """Evaluate the truncated series at time(s) t inside [0, T]."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > spec.t):
        raise ValueError(f"t must lie in [0, {spec.t:g}]")
    phases = np.exp(2j * np.pi * np.multiply.outer(t_arr, spec.harmonics()) / spec.t)
    return phases @ coeffs.s


def correlation_function(psd: PsdSpec, t: float) -> Callable[[np.ndarray], np.ndarray]:
    """Closed-form correlation r_h(tau) of the process with the given PSD.

    Flat PSD: total_power * sinc(2 nu_max tau). Periodic: the finite Fourier
    sum with period t. Tabulated PSDs have no closed form here; pass an
    explicit r_h to covariance_exact instead.
    """
    if psd.kind == PsdKind.FLAT:
        return lambda tau: psd.total_power * np.sinc(2.0 * psd.nu_max * np.asarray(tau))
    if psd.kind == PsdKind.PERIODIC:
        c = psd.coeffs
        ks = np.arange(-(c.size // 2), c.size // 2 + 1)

        def r_periodic(tau):
            tau = np.asarray(tau, dtype=float)
            return np.exp(2j * np.pi * np.multiply.outer(tau, ks) / t) @ c

        return r_periodic
    raise NotImplementedError(
        "no closed-form correlation for tabulated PSDs; supply r_h explicitly")


def covariance_exact(spec: BlockSpec, m: int, n: int,
                     r_h: Optional[Callable] = None, tol: float = 1e-9) -> complex:
    """Exact cross-covariance E[s_m s_n*] from the correlation function.

    Evaluates the nested integral

        (1/T^2) int_0^T [ int_{-a}^{T-a} r_h(tau) e^{-j2pi m tau/T} dtau ]
                         e^{j2pi (n-m) a/T} da

    by Gauss-Legendre panels, doubling the outer panel count until two
    successive estimates agree within tol (absolute). The inner integral is
    obtained from a cumulative antiderivative evaluated on the union of the
    required endpoints, itself refined per segment to a tighter budget.
    """
    if r_h is None:
        r_h = correlation_function(spec.psd, spec.t)
    t = spec.t

    def inner_kernel(tau):
        return np.asarray(r_h(tau)) * np.exp(-2j * np.pi * m * tau / t)

    nodes, weights = quadrature._gl_rule(quadrature.DEFAULT_ORDER)
    prev = None
    delta = np.inf
    for level in range(quadrature.MAX_LEVELS):
        n_panels = 2 ** level
        edges = np.linspace(0.0, t, n_panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        alphas = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()

        endpoints = np.concatenate([-alphas, t - alphas])
        uniq, inverse = np.unique(endpoints, return_inverse=True)
        anti = quadrature.cumulative_integral(inner_kernel, uniq, tol=0.05 * tol * t)
        g = anti[inverse]
        inner = g[alphas.size:] - g[:alphas.size]

        integrand = inner * np.exp(2j * np.pi * (n - m) * alphas / t)
        cur = ((integrand.reshape(n_panels, -1) @ weights) * half).sum() / t ** 2
        if prev is not None:
            delta = abs(cur - prev)
            if delta < tol and level >= 3:
                return complex(cur)
        prev = cur
    raise quadrature.QuadratureConvergenceError(
        f"covariance integral ({m},{n}) did not converge to {tol:.1e}", delta, prev)


def covariance_approx(spec: BlockSpec, m: int, n: int) -> complex:
    """Diagonal covariance model: S_h(m/T)/T when m == n, else 0."""
    if m == n:
        return complex(spec.psd.coeff_variance(m, spec.t))
    return 0.0 + 0.0j
