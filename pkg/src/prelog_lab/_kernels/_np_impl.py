"""Pure-numpy reference implementation of the hot kernels.

Both kernels operate on stacks of Q x Q Hermitian Gram matrices
G(x) = sum_k u_k C_k, with u_k = |x_k|^2 >= 0 and C_k positive
semidefinite, so I + rho G always admits a Cholesky factor.
"""

from __future__ import annotations

import numpy as np


def _chol_stack(u, cstack, rho):
    a = rho * np.einsum("nk,kij->nij", u, cstack, optimize=True)
    q = a.shape[-1]
    idx = np.arange(q)
    a[:, idx, idx] += 1.0
    return np.linalg.cholesky(a)


def logdet_i_rho_gram(u, cstack, rho):
    """log det(I + rho * sum_k u[n,k] C[k]) for every row n of u."""
    chol = _chol_stack(u, cstack, rho)
    diag = np.einsum("nii->ni", chol).real
    return 2.0 * np.log(diag).sum(axis=-1)


def mixture_loglik(u, z, cstack, rho, y_sq, n_ambient):
    """Gaussian log-density of a fixed observation under a batch of inputs.

    For covariance I + rho A A^H with Gram G = A^H A and z = A^H y:
        log f = -n_ambient log pi - log det(I + rho G)
                - (|y|^2 - rho z^H (I + rho G)^{-1} z).
    """
    chol = _chol_stack(u, cstack, rho)
    q = chol.shape[-1]
    # forward substitution, vectorized over the batch: w = L^{-1} z
    w = np.empty_like(z)
    for i in range(q):
        acc = z[:, i].copy()
        for j in range(i):
            acc -= chol[:, i, j] * w[:, j]
        w[:, i] = acc / chol[:, i, i]
    quad = rho * (np.abs(w) ** 2).sum(axis=-1)
    diag = np.einsum("nii->ni", chol).real
    logdet = 2.0 * np.log(diag).sum(axis=-1)
    return -n_ambient * np.log(np.pi) - logdet - (y_sq - quad)
