"""Cross-dimensional sliced discrepancy with learned slicing and embeddings.

Point clouds in R^p and R^q are compared by projecting both onto learned
unit directions: latent directions on S^{d-1} pass through a slicing net f
(S^{d-1} -> S^{d-1}) and then through per-space embedding nets
phi (S^{d-1} -> S^{p-1}) and psi (S^{d-1} -> S^{q-1}). Training alternates
a maximization step over f with a minimization step over the embeddings,
balancing the average closed-form 1D Wasserstein across slices (L1) against
a pairwise-cosine concentration penalty (L2) and an angle-preservation
penalty (L3).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import ot1d, sphere
from .autodiff import Tensor, zero_grads
from .errors import NumericalAbortError, SampleCountMismatchError
from .nn import AdamState, MlpNet, adam_step, collect_grads

__all__ = [
    "DseConfig",
    "DseState",
    "DseResult",
    "init_state",
    "loss_L1",
    "loss_L2",
    "loss_L3",
    "alternation_round",
    "dse_fit",
    "dse_loss_for_training",
    "moment",
    "evaluate",
    "state_to_checkpoint",
    "state_from_checkpoint",
]


@dataclass(frozen=True)
class DseConfig:
    """Hyperparameters of the alternating min-max estimator."""

    r: float = 2.0
    K: int = 10
    d: int = 5
    T: int = 50
    N: int = 1
    lambda_c: float = 1.0
    lambda_a: float = 1.0
    lr_f: float = 0.001
    lr_embed: float = 0.001
    seed: int = 0
    hidden_f: tuple[int, ...] = (50, 50)
    hidden_embed: tuple[int, ...] = (10, 10)
    abs_cosines: bool = True

    def validate(self) -> None:
        if self.r < 1:
            raise ValueError("order r must be >= 1")
        if min(self.K, self.T, self.N) < 1:
            raise ValueError("K, T, N must be positive")
        if self.d < 2:
            raise ValueError("latent dimension d must be >= 2")
        if self.lambda_c < 0 or self.lambda_a < 0:
            raise ValueError("regularizer weights must be non-negative")
        if self.lr_f <= 0 or self.lr_embed <= 0:
            raise ValueError("learning rates must be positive")

    def to_dict(self) -> dict:
        return {
            "r": self.r, "K": self.K, "d": self.d, "T": self.T, "N": self.N,
            "lambda_c": self.lambda_c, "lambda_a": self.lambda_a,
            "lr_f": self.lr_f, "lr_embed": self.lr_embed, "seed": self.seed,
            "hidden_f": list(self.hidden_f),
            "hidden_embed": list(self.hidden_embed),
            "abs_cosines": self.abs_cosines,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DseConfig":
        d = dict(d)
        d["hidden_f"] = tuple(d.get("hidden_f", (50, 50)))
        d["hidden_embed"] = tuple(d.get("hidden_embed", (10, 10)))
        return cls(**d)


@dataclass
class DseState:
    """Networks, optimizer states, and the frozen latent directions."""

    net_f: MlpNet
    net_phi: MlpNet
    net_psi: MlpNet
    adam_f: AdamState
    adam_embed: AdamState
    base_dirs: np.ndarray  # (K, d), unit rows

    @property
    def base_cosines(self) -> np.ndarray:
        return self.base_dirs @ self.base_dirs.T

    def embedded_directions(self) -> tuple[Tensor, Tensor]:
        """Forward the latent directions through f then phi / psi (tracked)."""
        z = self.net_f.forward(self.base_dirs)
        return self.net_phi.forward(z), self.net_psi.forward(z)

    def embedded_directions_data(self) -> tuple[np.ndarray, np.ndarray]:
        dp, dq = self.embedded_directions()
        return dp.data.copy(), dq.data.copy()


@dataclass
class DseResult:
    value: float
    trace_L1: list[float]
    trace_L2: list[float]
    trace_L3: list[float]
    admissibility_p: float
    admissibility_q: float
    wall_time_s: float
    config: DseConfig
    state: DseState = field(repr=False, default=None)


def _as_cloud(X, name: str) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty (n, p) array")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def init_state(p: int, q: int, cfg: DseConfig) -> DseState:
    """Seeded state: f on S^{d-1}, embeddings into S^{p-1} and S^{q-1}.

    Both embeddings draw from the same child stream, so the estimator treats
    its two arguments exchangeably; for p == q they start identical, which
    makes the exact-zero self-comparison a fixed point of the alternation.
    """
    cfg.validate()
    ss = np.random.SeedSequence(cfg.seed)
    rng_dirs, rng_f, rng_embed = (np.random.default_rng(c) for c in ss.spawn(3))
    base = sphere.sample_uniform(cfg.d, cfg.K, rng_dirs)
    net_f = MlpNet([cfg.d, *cfg.hidden_f, cfg.d], "sphere_normalize", rng_f)
    embed_state = rng_embed.bit_generator.state
    net_phi = MlpNet([cfg.d, *cfg.hidden_embed, p], "sphere_normalize", rng_embed)
    rng_embed.bit_generator.state = embed_state
    net_psi = MlpNet([cfg.d, *cfg.hidden_embed, q], "sphere_normalize", rng_embed)
    return DseState(
        net_f=net_f, net_phi=net_phi, net_psi=net_psi,
        adam_f=AdamState(lr=cfg.lr_f),
        adam_embed=AdamState(lr=cfg.lr_embed),
        base_dirs=base,
    )


def _l1_from_dirs(X, Y, dirs_p: Tensor, dirs_q: Tensor, r: float) -> Tensor:
    """((1/K) sum_k W_r^r of the k-th slice)^(1/r), differentiable."""
    xt = X if isinstance(X, Tensor) else Tensor(X)
    yt = Y if isinstance(Y, Tensor) else Tensor(Y)
    if xt.data.shape[0] != yt.data.shape[0]:
        raise SampleCountMismatchError(xt.data.shape[0], yt.data.shape[0], "loss_L1")
    px = xt.matmul(dirs_p.transpose()).sort_axis0()
    py = yt.matmul(dirs_q.transpose()).sort_axis0()
    return (px - py).abs_pow(r).mean().root(r)


def _l2_from_dirs(dirs_p: Tensor, dirs_q: Tensor, abs_cosines: bool) -> Tensor:
    gp = dirs_p.matmul(dirs_p.transpose())
    gq = dirs_q.matmul(dirs_q.transpose())
    if abs_cosines:
        return gp.abs().sum() + gq.abs().sum()
    return gp.sum() + gq.sum()


def _l3_from_dirs(dirs_p: Tensor, dirs_q: Tensor, base_cos: np.ndarray) -> Tensor:
    ref = Tensor(base_cos)
    gp = dirs_p.matmul(dirs_p.transpose())
    gq = dirs_q.matmul(dirs_q.transpose())
    return (gp - ref).square().sum() + (gq - ref).square().sum()


def loss_L1(X, Y, state: DseState, r: float = 2.0) -> Tensor:
    """Average sliced 1D Wasserstein through the current networks."""
    dirs_p, dirs_q = state.embedded_directions()
    return _l1_from_dirs(X, Y, dirs_p, dirs_q, r)


def loss_L2(state: DseState, abs_cosines: bool = True) -> Tensor:
    """Sum of absolute cosines over all K^2 ordered pairs, both embeddings."""
    dirs_p, dirs_q = state.embedded_directions()
    return _l2_from_dirs(dirs_p, dirs_q, abs_cosines)


def loss_L3(state: DseState) -> Tensor:
    """Squared mismatch between embedded and latent cosine structure."""
    dirs_p, dirs_q = state.embedded_directions()
    return _l3_from_dirs(dirs_p, dirs_q, state.base_cosines)


def _inner_step(X, Y, state: DseState, cfg: DseConfig, maximize_l1: bool,
                params: list, adam: AdamState,
                traces: tuple[list, list, list]) -> None:
    dirs_p, dirs_q = state.embedded_directions()
    l1 = _l1_from_dirs(X, Y, dirs_p, dirs_q, cfg.r)
    l2 = _l2_from_dirs(dirs_p, dirs_q, cfg.abs_cosines)
    l3 = _l3_from_dirs(dirs_p, dirs_q, state.base_cosines)
    sign = -1.0 if maximize_l1 else 1.0
    loss = l1.scale(sign) + l2.scale(cfg.lambda_c) + l3.scale(cfg.lambda_a)
    all_params = (state.net_f.parameters() + state.net_phi.parameters()
                  + state.net_psi.parameters())
    zero_grads(all_params)
    loss.backward()
    adam_step(params, collect_grads(params), adam)
    traces[0].append(l1.item())
    traces[1].append(l2.item())
    traces[2].append(l3.item())


def alternation_round(X, Y, state: DseState, cfg: DseConfig,
                      traces: tuple[list, list, list] | None = None) -> None:
    """One global iteration: N slicing-net ascent steps on L1 (with the
    embeddings frozen), then N embedding descent steps (with f frozen)."""
    if traces is None:
        traces = ([], [], [])
    for _ in range(cfg.N):
        _inner_step(X, Y, state, cfg, True, state.net_f.parameters(),
                    state.adam_f, traces)
    embed_params = state.net_phi.parameters() + state.net_psi.parameters()
    for _ in range(cfg.N):
        _inner_step(X, Y, state, cfg, False, embed_params,
                    state.adam_embed, traces)


def evaluate(X, Y, state: DseState, r: float = 2.0) -> float:
    """Final discrepancy: average W_r^r over the learned directions, ^(1/r).
    Plain numpy, no tape."""
    X = _as_cloud(X, "X")
    Y = _as_cloud(Y, "Y")
    dirs_p, dirs_q = state.embedded_directions_data()
    px = np.sort(X @ dirs_p.T, axis=0)
    py = np.sort(Y @ dirs_q.T, axis=0)
    return float(np.mean(np.abs(px - py) ** r) ** (1.0 / r))


def dse_fit(X, Y, cfg: DseConfig | None = None) -> DseResult:
    """Train the three networks by alternating optimization and return the
    resulting discrepancy estimate with loss traces.

    Deterministic given (X, Y, cfg.seed). Raises NumericalAbortError naming
    the global iteration if any loss goes non-finite.
    """
    if cfg is None:
        cfg = DseConfig()
    cfg.validate()
    X = _as_cloud(X, "X")
    Y = _as_cloud(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise SampleCountMismatchError(X.shape[0], Y.shape[0], "dse_fit")
    started = time.perf_counter()
    state = init_state(X.shape[1], Y.shape[1], cfg)
    traces: tuple[list, list, list] = ([], [], [])
    for t in range(cfg.T):
        try:
            alternation_round(X, Y, state, cfg, traces)
        except NumericalAbortError as exc:
            raise NumericalAbortError(str(exc), iteration=t) from exc
    value = evaluate(X, Y, state, cfg.r)
    dirs_p, dirs_q = state.embedded_directions_data()
    mean_p, mean_q, _ = sphere.admissibility_check(dirs_p, dirs_q, 1.0, 1.0)
    return DseResult(
        value=value,
        trace_L1=traces[0], trace_L2=traces[1], trace_L3=traces[2],
        admissibility_p=mean_p, admissibility_q=mean_q,
        wall_time_s=time.perf_counter() - started,
        config=cfg, state=state,
    )


def dse_loss_for_training(X_batch, Y_batch, state: DseState, cfg: DseConfig) -> Tensor:
    """The slice-averaged transport term L1 on the current state, for use as
    a generative-model loss; gradients flow into X_batch when it is a tracked
    Tensor (the networks are updated separately via alternation_round)."""
    dirs_p, dirs_q = state.embedded_directions()
    return _l1_from_dirs(X_batch, Y_batch, dirs_p, dirs_q, cfg.r)


def moment(X, r: float = 2.0) -> float:
    """((1/n) sum_i ||x_i||^r)^(1/r)."""
    X = _as_cloud(X, "X")
    if r < 1:
        raise ValueError("order r must be >= 1")
    return float(np.mean(np.linalg.norm(X, axis=1) ** r) ** (1.0 / r))


def state_to_checkpoint(state: DseState, cfg: DseConfig,
                        traces: dict | None = None) -> dict:
    """JSON-ready checkpoint: config, the three nets, latent directions,
    and optional loss traces."""
    return {
        "config": cfg.to_dict(),
        "net_f": state.net_f.to_dict(),
        "net_phi": state.net_phi.to_dict(),
        "net_psi": state.net_psi.to_dict(),
        "base_directions": state.base_dirs.tolist(),
        "traces": traces or {},
    }


def state_from_checkpoint(doc: dict) -> tuple[DseState, DseConfig]:
    cfg = DseConfig.from_dict(doc["config"])
    state = DseState(
        net_f=MlpNet.from_dict(doc["net_f"]),
        net_phi=MlpNet.from_dict(doc["net_phi"]),
        net_psi=MlpNet.from_dict(doc["net_psi"]),
        adam_f=AdamState(lr=cfg.lr_f),
        adam_embed=AdamState(lr=cfg.lr_embed),
        base_dirs=np.asarray(doc["base_directions"], dtype=np.float64),
    )
    return state, cfg


def resample_to_common_size(X, Y, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Subsample the larger cloud (without replacement) to min(n, m); the
    equal-count requirement of the sorted 1D path is handled here."""
    X = _as_cloud(X, "X")
    Y = _as_cloud(Y, "Y")
    n = min(X.shape[0], Y.shape[0])
    rng = np.random.default_rng(seed)
    if X.shape[0] > n:
        X = X[rng.choice(X.shape[0], size=n, replace=False)]
    if Y.shape[0] > n:
        Y = Y[rng.choice(Y.shape[0], size=n, replace=False)]
    return X, Y
