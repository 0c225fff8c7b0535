"""Sampling and measure utilities on unit spheres.

Provides uniform direction sampling, the discrete uniform measure carried by
a random orthonormal basis, the closed-form expectation of |<t, t'>| under
the uniform sphere measure, and the admissibility diagnostic for embedded
direction sets (empirical mean absolute cosine against a bound).
"""

from __future__ import annotations

from math import lgamma, pi, sqrt

import numpy as np

__all__ = [
    "sample_uniform",
    "gamma_ratio",
    "orthonormal_basis_measure",
    "admissibility_check",
    "mean_abs_cosine",
]


def sample_uniform(d: int, K: int, seed) -> np.ndarray:
    """Draw K i.i.d. directions uniformly on the unit sphere in R^d.

    Standard Gaussian rows normalized to unit length; PCG64 stream fixed by
    the seed (an int, or an existing Generator to draw from).
    """
    if d < 2:
        raise ValueError("sphere dimension must be >= 2")
    if K < 1:
        raise ValueError("need at least one direction")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((K, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def gamma_ratio(d: int) -> float:
    """Closed-form E|<t, t'>| for independent uniform directions on S^{d-1}:
    Gamma(d/2) / (sqrt(pi) * Gamma((d+1)/2))."""
    if d < 2:
        raise ValueError("sphere dimension must be >= 2")
    return float(np.exp(lgamma(d / 2.0) - lgamma((d + 1) / 2.0)) / sqrt(pi))


def orthonormal_basis_measure(d: int, seed: int) -> np.ndarray:
    """Rows of a uniformly random orthonormal basis of R^d (d x d).

    QR of a Gaussian matrix with the sign of diag(R) folded into Q, which
    makes the basis Haar-distributed and the output seed-stable.
    """
    if d < 2:
        raise ValueError("sphere dimension must be >= 2")
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    return q.T.copy()


def mean_abs_cosine(dirs: np.ndarray) -> float:
    """Empirical E|<t, t'>| over all K^2 ordered pairs, diagonal included."""
    dirs = np.asarray(dirs, dtype=np.float64)
    gram = dirs @ dirs.T
    return float(np.abs(gram).mean())


def admissibility_check(dirs_p: np.ndarray, dirs_q: np.ndarray,
                        c_phi: float, c_psi: float) -> tuple[float, float, bool]:
    """Mean absolute cosines of two embedded direction sets and whether both
    stay within their admissibility bounds."""
    mean_p = mean_abs_cosine(dirs_p)
    mean_q = mean_abs_cosine(dirs_q)
    return mean_p, mean_q, bool(mean_p <= c_phi and mean_q <= c_psi)
