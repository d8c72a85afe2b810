"""Small shared helpers: complex Gaussian sampling, dB conversion, digests."""

from __future__ import annotations

import hashlib

import numpy as np


def standard_complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Proper complex Gaussian CN(0, 1) samples: unit variance per entry."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (np.asarray(x_db) / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * np.log10(x)


def array_digest(*arrays) -> str:
    """Short content hash used to tag reports with their exact inputs."""
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()[:16]
