"""Synthetic point-cloud generators for the experiment drivers.

Gaussian mixtures with modes on a radius-5 circle, the classic two-arm
spiral, and three parametric 3D surface families used as isometry-robust
classification stand-ins. All generators are deterministic given their seed.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "make_gaussian_mixture",
    "make_spiral",
    "make_shape_cloud",
    "mixture_centers",
    "random_orthogonal",
    "rotation_2d",
    "dyadic_quantize",
]


def mixture_centers(dims: int, modes: int, radius: float = 5.0) -> np.ndarray:
    """Equally spaced mode centers on a circle of the given radius lying in
    the first two coordinates (a single mode sits at the origin)."""
    if modes < 1:
        raise ValueError("need at least one mode")
    if dims < 2:
        raise ValueError("mixture dimension must be >= 2")
    centers = np.zeros((modes, dims))
    if modes == 1:
        return centers
    angles = 2.0 * np.pi * np.arange(modes) / modes
    centers[:, 0] = radius * np.cos(angles)
    centers[:, 1] = radius * np.sin(angles)
    return centers


def make_gaussian_mixture(dims: int, modes: int, n: int, seed: int,
                          radius: float = 5.0, std: float = 0.5) -> np.ndarray:
    """Equal-weight Gaussian mixture sample, n points in R^dims."""
    if n < 1:
        raise ValueError("need at least one sample")
    centers = mixture_centers(dims, modes, radius)
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, modes, size=n)
    return centers[labels] + std * rng.standard_normal((n, dims))


def rotation_2d(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def make_spiral(n: int, rotation_angle: float = 0.0, seed: int = 0,
                noise: float = 0.05) -> np.ndarray:
    """Two-arm spiral in the plane, rotated by the given angle.

    Points sit on r = t / (3 pi) * 2 for t in [0.5 pi, 3 pi], half of them on
    the arm offset by pi, with isotropic Gaussian jitter.
    """
    if n < 10:
        raise ValueError("need at least 10 samples")
    rng = np.random.default_rng(seed)
    t = 0.5 * np.pi + rng.uniform(0.0, 1.0, size=n) * 2.5 * np.pi
    arm = rng.integers(0, 2, size=n) * np.pi
    radius = 2.0 * t / (3.0 * np.pi)
    pts = np.stack([radius * np.cos(t + arm), radius * np.sin(t + arm)], axis=1)
    pts += noise * rng.standard_normal((n, 2))
    if rotation_angle != 0.0:
        pts = pts @ rotation_2d(rotation_angle).T
    return pts


def _rodrigues(axis: np.ndarray, angle: float) -> np.ndarray:
    k = axis / np.linalg.norm(axis)
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(angle) * kx + (1.0 - np.cos(angle)) * (kx @ kx)


def make_shape_cloud(class_id: int, n: int, isometry_strength: float = 0.0,
                     seed: int = 0) -> np.ndarray:
    """Sample n points from one of three parametric 3D surfaces, then apply
    a rigid motion whose rotation angle and translation length scale with
    isometry_strength in [0, 1]."""
    if class_id not in (0, 1, 2):
        raise ValueError("class_id must be 0, 1, or 2")
    if n < 1:
        raise ValueError("need at least one sample")
    if not 0.0 <= isometry_strength <= 1.0:
        raise ValueError("isometry_strength must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.0, 2.0 * np.pi, size=n)
    v = rng.uniform(0.0, 2.0 * np.pi, size=n)
    if class_id == 0:
        # torus, major radius 2, minor 0.7
        pts = np.stack([
            (2.0 + 0.7 * np.cos(v)) * np.cos(u),
            (2.0 + 0.7 * np.cos(v)) * np.sin(u),
            0.7 * np.sin(v),
        ], axis=1)
    elif class_id == 1:
        # helix tube, two turns, tube radius 0.3
        s = u / (2.0 * np.pi)
        cx = 1.5 * np.cos(4.0 * np.pi * s)
        cy = 1.5 * np.sin(4.0 * np.pi * s)
        cz = 3.0 * s - 1.5
        pts = np.stack([
            cx + 0.3 * np.cos(v) * np.cos(4.0 * np.pi * s),
            cy + 0.3 * np.cos(v) * np.sin(4.0 * np.pi * s),
            cz + 0.3 * np.sin(v),
        ], axis=1)
    else:
        # sphere with three lobes
        theta = np.arccos(rng.uniform(-1.0, 1.0, size=n))
        rho = 1.6 * (1.0 + 0.35 * np.cos(3.0 * u) * np.sin(theta) ** 2)
        pts = np.stack([
            rho * np.sin(theta) * np.cos(u),
            rho * np.sin(theta) * np.sin(u),
            rho * np.cos(theta),
        ], axis=1)
    if isometry_strength > 0.0:
        axis = rng.standard_normal(3)
        rot = _rodrigues(axis, isometry_strength * np.pi)
        shift = rng.standard_normal(3)
        shift *= 3.0 * isometry_strength / np.linalg.norm(shift)
        pts = pts @ rot.T + shift
    return pts


def random_orthogonal(dim: int, seed: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
    sign of diag(R) folded in)."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def dyadic_quantize(X: np.ndarray, bits: int = 32) -> np.ndarray:
    """Round coordinates to the 2^-bits grid so that adding dyadic shifts of
    moderate magnitude is exact in float64 (translation sweeps rely on it)."""
    return np.ldexp(np.rint(np.ldexp(np.asarray(X, dtype=np.float64), bits)), -bits)
