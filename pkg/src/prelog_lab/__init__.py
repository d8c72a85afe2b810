"""Noncoherent block-fading laboratory.

Simulates a time-selective Rayleigh block-fading channel under two receiver
front-ends (symbol matched filtering and 2x oversampling), certifies the
identifiability structure that separates them, and estimates mutual-
information growth slopes versus log SNR.
"""

from ._kernels import BACKEND as kernel_backend
from .fading import (BlockSpec, FadingCoeffs, PsdKind, PsdSpec,
                     covariance_approx, covariance_exact, eval_h, flat_psd,
                     make_block_spec, sample_fading)
from .frontends import (BlockObservation, FrontendMatrices, build_b, build_p,
                        build_qe, build_qo, frontend_matrices, oracle_integrate,
                        simulate_oversampled, simulate_symbol_rate,
                        symbol_covariance, symbol_covariance_rank, symbol_gains)
from .identifiability import (appendix_witness, build_jacobian,
                              full_spark_check, jacobian_monte_carlo)
from .info_metrics import (Frontend, MiEstimator, MISweepPoint, PrelogFit,
                           cond_entropy_mc, entropy_knn, jensen_const,
                           mi_direct_mixture, mi_lower_bound_chain, prelog_fit)
from .recovery import (RecoveryOptions, RecoveryResult, multiplicity_probe,
                       recover_joint_oversampled, recover_linear_symbol_rate)

__version__ = "0.1.0"

__all__ = [
    "BlockSpec", "FadingCoeffs", "PsdKind", "PsdSpec", "covariance_approx",
    "covariance_exact", "eval_h", "flat_psd", "make_block_spec", "sample_fading",
    "BlockObservation", "FrontendMatrices", "build_b", "build_p", "build_qe",
    "build_qo", "frontend_matrices", "oracle_integrate", "simulate_oversampled",
    "simulate_symbol_rate", "symbol_covariance", "symbol_covariance_rank",
    "symbol_gains", "appendix_witness", "build_jacobian", "full_spark_check",
    "jacobian_monte_carlo", "Frontend", "MiEstimator", "MISweepPoint",
    "PrelogFit", "cond_entropy_mc", "entropy_knn", "jensen_const",
    "mi_direct_mixture", "mi_lower_bound_chain", "prelog_fit",
    "RecoveryOptions", "RecoveryResult", "multiplicity_probe",
    "recover_joint_oversampled", "recover_linear_symbol_rate",
    "kernel_backend",
]
