"""Reference discrepancies between point clouds.

Sliced Wasserstein and its max / distributional variants for clouds sharing
an ambient space, plus the pairwise-distance family for heterogeneous
clouds: zero-padded sliced comparison (sgw), its rotation-searched variant
(ri_sgw), and an entropically regularized quadratic solver (entropic_gw).
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.special import logsumexp

from . import ot1d, sphere
from .autodiff import Tensor, zero_grads
from .errors import DimensionMismatchError, SampleCountMismatchError
from .nn import AdamState, MlpNet, adam_step, collect_grads

__all__ = [
    "sliced_wasserstein",
    "max_sliced_wasserstein",
    "distributional_sw",
    "sgw",
    "ri_sgw",
    "entropic_gw",
]


def _as_cloud(X, name: str = "points") -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty (n, p) array")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def _check_same_dim(X: np.ndarray, Y: np.ndarray, context: str) -> None:
    if X.shape[1] != Y.shape[1]:
        raise DimensionMismatchError(X.shape[1], Y.shape[1], context)


# ---------------------------------------------------------------------------
# sliced Wasserstein and variants (shared ambient space)
# ---------------------------------------------------------------------------

def sliced_wasserstein(X, Y, r: float = 2.0, K: int = 100, seed: int = 0) -> float:
    """Monte-Carlo sliced Wasserstein distance of order r.

    Projects both clouds onto K uniform directions and averages the
    closed-form 1D distances: ((1/K) sum_k W_r^r)^{1/r}.
    """
    X = _as_cloud(X, "X")
    Y = _as_cloud(Y, "Y")
    _check_same_dim(X, Y, "sliced_wasserstein")
    dirs = sphere.sample_uniform(X.shape[1], K, seed)
    px = X @ dirs.T
    py = Y @ dirs.T
    if X.shape[0] == Y.shape[0]:
        diff = np.sort(px, axis=0) - np.sort(py, axis=0)
        return float(np.mean(np.abs(diff) ** r) ** (1.0 / r))
    acc = 0.0
    for k in range(K):
        acc += ot1d.wasserstein_1d(px[:, k], py[:, k], r) ** r
    return float((acc / K) ** (1.0 / r))


def _w1d_pow_and_grad_theta(X: np.ndarray, Y: np.ndarray, theta: np.ndarray,
                            r: float) -> tuple[float, np.ndarray]:
    """W_r^r of the projections along theta and its gradient w.r.t. theta
    (sort permutations frozen). Falls back to central differences when the
    sample counts differ."""
    px = X @ theta
    py = Y @ theta
    if X.shape[0] == Y.shape[0]:
        val = float(np.mean(np.abs(np.sort(px) - np.sort(py)) ** r))
        gx, gy = ot1d.wasserstein_1d_grad(px, py, r)
        return val, gx @ X + gy @ Y
    val = ot1d.wasserstein_1d(px, py, r) ** r
    g = np.zeros_like(theta)
    h = 1e-6
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        vp = ot1d.wasserstein_1d(X @ (theta + e), Y @ (theta + e), r) ** r
        vm = ot1d.wasserstein_1d(X @ (theta - e), Y @ (theta - e), r) ** r
        g[i] = (vp - vm) / (2 * h)
    return float(val), g


def max_sliced_wasserstein(X, Y, r: float = 2.0, iters: int = 100,
                           seed: int = 0, restarts: int = 8,
                           step: float = 0.1) -> float:
    """max_theta W_r(X theta, Y theta) by projected gradient ascent on the
    sphere with random restarts; returns the best value found."""
    X = _as_cloud(X, "X")
    Y = _as_cloud(Y, "Y")
    _check_same_dim(X, Y, "max_sliced_wasserstein")
    p = X.shape[1]
    scan = sphere.sample_uniform(p, max(8 * restarts, 16), seed)
    scores = [_w1d_pow_and_grad_theta(X, Y, t, r)[0] for t in scan]
    order = np.argsort(scores)[::-1]
    best = max(scores)
    for idx in order[:restarts]:
        theta = scan[idx].copy()
        lr = step
        val = scores[idx]
        for _ in range(iters):
            _, g = _w1d_pow_and_grad_theta(X, Y, theta, r)
            g_tan = g - (g @ theta) * theta
            gn = np.linalg.norm(g_tan)
            if gn < 1e-14:
                break
            cand = theta + lr * g_tan / gn
            cand /= np.linalg.norm(cand)
            cand_val, _ = _w1d_pow_and_grad_theta(X, Y, cand, r)
            if cand_val >= val:
                theta, val = cand, cand_val
                lr = min(lr * 1.2, 0.5)
            else:
                lr *= 0.5
                if lr < 1e-6:
                    break
        best = max(best, val)
    return float(best ** (1.0 / r))


def distributional_sw(X, Y, r: float = 2.0, K: int = 10, d: int | None = None,
                      lambda_c: float = 1.0, T: int = 50, N: int = 1,
                      seed: int = 0, lr: float = 0.01,
                      hidden: tuple[int, ...] = (50, 50)) -> float:
    """Distributional sliced Wasserstein: directions are the push-forward of
    K uniform latent directions through a trained sphere-to-sphere net.

    The net maximizes the slice-averaged W_r^r term minus lambda_c times the
    pairwise absolute-cosine penalty, for T*N Adam steps; the returned value
    is the slice average through the trained directions.
    """
    X = _as_cloud(X, "X")
    Y = _as_cloud(Y, "Y")
    _check_same_dim(X, Y, "distributional_sw")
    if X.shape[0] != Y.shape[0]:
        raise SampleCountMismatchError(X.shape[0], Y.shape[0], "distributional_sw")
    p = X.shape[1]
    if d is None:
        d = p
    if d != p:
        raise ValueError("identity-embedding variant requires latent dim d == p")
    ss = np.random.SeedSequence(seed)
    rng_dirs, rng_net = (np.random.default_rng(c) for c in ss.spawn(2))
    base = sphere.sample_uniform(d, K, rng_dirs)
    net = MlpNet([d, *hidden, d], "sphere_normalize", rng_net)
    adam = AdamState(lr=lr)
    xt = Tensor(X)
    yt = Tensor(Y)
    for _ in range(T * N):
        dirs = net.forward(base)
        proj_diff = xt.matmul(dirs.transpose()).sort_axis0() \
            - yt.matmul(dirs.transpose()).sort_axis0()
        l1 = proj_diff.abs_pow(r).mean().root(r)
        reg = dirs.matmul(dirs.transpose()).abs().sum()
        loss = reg.scale(lambda_c) - l1
        zero_grads(net.parameters())
        loss.backward()
        adam_step(net.parameters(), collect_grads(net.parameters()), adam)
    dirs = net.forward(base).data
    diff = np.sort(X @ dirs.T, axis=0) - np.sort(Y @ dirs.T, axis=0)
    return float(np.mean(np.abs(diff) ** r) ** (1.0 / r))


# ---------------------------------------------------------------------------
# pairwise-distance family (heterogeneous ambient spaces)
# ---------------------------------------------------------------------------

def _canonicalize(X: np.ndarray) -> np.ndarray:
    # Subtracting a reference support point makes the pairwise-distance
    # estimators translation-invariant by construction (bit-exactly so when
    # the translation did not round).
    return X - X[0]


def _zero_pad(X: np.ndarray, dim: int) -> np.ndarray:
    if X.shape[1] == dim:
        return X
    out = np.zeros((X.shape[0], dim))
    out[:, :X.shape[1]] = X
    return out


def _sgw_from_projections(px: np.ndarray, py: np.ndarray, r: float) -> float:
    vals = np.array([ot1d.gw_1d(px[:, k], py[:, k], r) for k in range(px.shape[1])])
    return float(np.mean(vals ** r) ** (1.0 / r))


def sgw(X, Y, r: float = 2.0, K: int = 100, seed: int = 0) -> float:
    """Sliced pairwise-distance discrepancy with zero padding.

    The lower-dimensional cloud is padded with trailing zero coordinates,
    both clouds are projected onto K shared uniform directions, and the
    closed-form 1D monotone matching value is averaged across slices.
    Requires equal sample counts.
    """
    X = _as_cloud(X, "X")
    Y = _as_cloud(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise SampleCountMismatchError(X.shape[0], Y.shape[0], "sgw")
    dim = max(X.shape[1], Y.shape[1])
    Xp = _zero_pad(_canonicalize(X), dim)
    Yp = _zero_pad(_canonicalize(Y), dim)
    dirs = sphere.sample_uniform(dim, K, seed)
    return _sgw_from_projections(Xp @ dirs.T, Yp @ dirs.T, r)


def ri_sgw(X, Y, r: float = 2.0, K: int = 100, lr: float = 0.01,
           T: int = 500, seed: int = 0) -> float:
    """Rotation-searched variant of sgw for equal ambient dimensions.

    Gradient descent over an orthogonal matrix applied to X (QR retraction
    after every Euclidean step, halving the step on non-decrease), sharing
    the direction sample with sgw; returns the minimal value encountered,
    which includes the identity start.
    """
    X = _as_cloud(X, "X")
    Y = _as_cloud(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise DimensionMismatchError(X.shape[1], Y.shape[1], "ri_sgw")
    if X.shape[0] != Y.shape[0]:
        raise SampleCountMismatchError(X.shape[0], Y.shape[0], "ri_sgw")
    if r != 2.0:
        raise ValueError("the rotation-search gradient path requires r = 2")
    n, p = X.shape
    Xc = _canonicalize(X)
    Yc = _canonicalize(Y)
    dirs = sphere.sample_uniform(p, K, seed)
    py = Yc @ dirs.T
    ys = np.sort(py, axis=0)
    ys_desc = ys[::-1]

    omega = np.eye(p)
    best = _sgw_from_projections(Xc @ dirs.T, py, r)

    def grad_and_obj(om: np.ndarray) -> tuple[np.ndarray, float]:
        z = Xc @ om @ dirs.T
        perm = np.argsort(z, axis=0, kind="stable")
        zs = np.take_along_axis(z, perm, axis=0)
        u_up = zs - ys
        u_dn = zs + ys_desc
        q_up = 2.0 * np.var(u_up, axis=0)
        q_dn = 2.0 * np.var(u_dn, axis=0)
        use_dn = q_dn < q_up
        u = np.where(use_dn, u_dn, u_up)
        g_zs = (4.0 / n) * (u - u.mean(axis=0))
        g_z = np.zeros_like(z)
        np.put_along_axis(g_z, perm, g_zs, axis=0)
        # objective surrogate: mean of per-slice quadratic terms
        obj = float(np.mean(np.where(use_dn, q_dn, q_up)))
        return Xc.T @ g_z @ dirs, obj

    step = lr
    g, obj = grad_and_obj(omega)
    for _ in range(T):
        qf, rf = np.linalg.qr(omega - step * g)
        cand = qf * np.sign(np.diag(rf))
        g_cand, obj_cand = grad_and_obj(cand)
        if obj_cand <= obj:
            omega, g, obj = cand, g_cand, obj_cand
            best = min(best, _sgw_from_projections(Xc @ omega @ dirs.T, py, r))
            step = min(step * 1.2, 10 * lr)
        else:
            step *= 0.5
            if step < 1e-8:
                break
    return float(best)


def entropic_gw(X, Y, r: float = 2.0, epsilon: float | None = None,
                iters: int = 200, inner_iters: int = 100, tol: float = 1e-7,
                eps_decay: float = 1.0, restarts: int = 1, seed: int = 0) -> float:
    """Entropically regularized pairwise-distance matching.

    Alternates linearization of the quadratic objective (squared inner cost
    on Euclidean distance matrices) with log-domain Sinkhorn projections.
    Returns the unregularized objective value at the final coupling; warns
    when no run's coupling stabilized to `tol` within `iters` rounds.

    epsilon defaults to 5e-3 times the median off-diagonal squared distance;
    eps_decay < 1 anneals it geometrically per outer round. With restarts > 1
    the search repeats from seeded perturbations of the product coupling and
    keeps the lowest objective.
    """
    if r != 2.0:
        raise ValueError("only the quadratic objective (r = 2) is implemented")
    X = _as_cloud(X, "X")
    Y = _as_cloud(Y, "Y")
    n, m = X.shape[0], Y.shape[0]
    dx = _distance_matrix(X)
    dy = _distance_matrix(Y)
    a = np.full(n, 1.0 / n)
    b = np.full(m, 1.0 / m)
    if epsilon is None:
        pool = np.concatenate([
            (dx**2)[np.triu_indices(n, k=1)] if n > 1 else np.array([1.0]),
            (dy**2)[np.triu_indices(m, k=1)] if m > 1 else np.array([1.0]),
        ])
        epsilon = 5e-3 * float(np.median(pool))
    epsilon = max(epsilon, 1e-300)

    const = (dx**2 @ a)[:, None] + ((dy**2 @ b)[None, :])
    log_a = np.log(a)
    log_b = np.log(b)
    quad_base = float(a @ dx**2 @ a + b @ dy**2 @ b)
    rng = np.random.default_rng(seed)

    starts: list[np.ndarray] = [np.outer(a, b)]
    if n == m:
        # monotone couplings along principal axes are strong candidates for
        # the quadratic objective; blend them into the product start
        ox = np.argsort(_principal_scores(X))
        oy = np.argsort(_principal_scores(Y))
        for flip in (oy, oy[::-1]):
            pmat = np.zeros((n, m))
            pmat[ox, flip] = 1.0 / n
            starts.append(0.5 * np.outer(a, b) + 0.5 * pmat)
    while len(starts) < max(restarts, 1):
        # jitter the product start so the linearization explores a
        # different basin; marginals re-enter via Sinkhorn
        g0 = np.outer(a, b) * rng.uniform(0.25, 1.75, size=(n, m))
        starts.append(g0 / g0.sum())

    best_quad = np.inf
    any_converged = False
    for gamma in starts[:max(restarts, 1)]:
        f = np.zeros(n)
        g = np.zeros(m)
        eps_t = float(epsilon)
        for _ in range(iters):
            cost = const - 2.0 * dx @ gamma @ dy
            for _ in range(inner_iters):
                f_prev = f
                f = eps_t * (log_a - logsumexp((g[None, :] - cost) / eps_t, axis=1))
                g = eps_t * (log_b - logsumexp((f[:, None] - cost) / eps_t, axis=0))
                if np.max(np.abs(f - f_prev)) < 1e-12 * max(1.0, np.max(np.abs(f))):
                    break
            new_gamma = np.exp((f[:, None] + g[None, :] - cost) / eps_t)
            if np.max(np.abs(new_gamma - gamma)) <= tol:
                gamma = new_gamma
                any_converged = True
                break
            gamma = new_gamma
            eps_t = max(eps_t * eps_decay, 1e-12)
        quad = quad_base - 2.0 * float(np.sum((dx @ gamma @ dy) * gamma))
        best_quad = min(best_quad, quad)
    if not any_converged:
        warnings.warn("entropic_gw: coupling did not stabilize; value returned anyway",
                      RuntimeWarning, stacklevel=2)
    return float(0.5 * np.sqrt(max(best_quad, 0.0)))


def _distance_matrix(X: np.ndarray) -> np.ndarray:
    sq = np.sum(X**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    np.maximum(d2, 0.0, out=d2)
    return np.sqrt(d2)


def _principal_scores(X: np.ndarray) -> np.ndarray:
    centered = X - X.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    return centered @ vt[0]
