"""Dense ReLU networks with an optional unit-sphere output head, plus Adam.

Networks are parameter containers; the forward pass builds a fresh autodiff
tape each call. Weight init follows uniform He-style scaling
(+-sqrt(6/fan_in)) from a seeded PCG64 generator so runs are reproducible
bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor

__all__ = ["MlpNet", "AdamState", "adam_step"]

SPHERE_EPS = 1e-12


class MlpNet:
    """Fully connected ReLU net ``in -> hidden... -> out``.

    output_head is either "sphere_normalize" (every output row is divided by
    max(norm, eps), landing on the unit sphere) or "identity".
    """

    def __init__(self, layer_dims: list[int], output_head: str = "sphere_normalize",
                 rng: np.random.Generator | None = None):
        if len(layer_dims) < 2:
            raise ValueError("need at least input and output dims")
        if output_head not in ("sphere_normalize", "identity"):
            raise ValueError(f"unknown output head: {output_head}")
        if rng is None:
            rng = np.random.default_rng(0)
        self.layer_dims = list(layer_dims)
        self.output_head = output_head
        self.weights: list[Tensor] = []
        self.biases: list[Tensor] = []
        for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
            bound = np.sqrt(6.0 / fan_in)
            w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
            self.weights.append(Tensor(w, requires_grad=True))
            self.biases.append(Tensor(np.zeros((1, fan_out)), requires_grad=True))

    @property
    def in_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def out_dim(self) -> int:
        return self.layer_dims[-1]

    def parameters(self) -> list[Tensor]:
        return [t for pair in zip(self.weights, self.biases) for t in pair]

    def forward(self, x) -> Tensor:
        """Batched forward pass; x is (n, in_dim) array or Tensor."""
        h = x if isinstance(x, Tensor) else Tensor(x)
        if h.data.ndim != 2 or h.data.shape[1] != self.in_dim:
            raise ValueError(
                f"input has {h.data.shape[-1] if h.data.ndim else 0} columns, "
                f"net expects {self.in_dim}")
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h.matmul(w) + b
            if i < last:
                h = h.relu()
        if self.output_head == "sphere_normalize":
            h = h.sphere_normalize(SPHERE_EPS)
        return h

    def __call__(self, x) -> Tensor:
        return self.forward(x)

    def to_dict(self) -> dict:
        return {
            "layer_dims": self.layer_dims,
            "output_head": self.output_head,
            "weights": [w.data.tolist() for w in self.weights],
            "biases": [b.data.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpNet":
        net = cls(d["layer_dims"], d["output_head"])
        for w, stored in zip(net.weights, d["weights"]):
            arr = np.asarray(stored, dtype=np.float64)
            if arr.shape != w.data.shape:
                raise ValueError("checkpoint weight shape mismatch")
            w.data = arr
        for b, stored in zip(net.biases, d["biases"]):
            arr = np.asarray(stored, dtype=np.float64).reshape(b.data.shape)
            b.data = arr
        return net


@dataclass
class AdamState:
    """Adam optimizer state for a fixed parameter list."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")


def adam_step(params: list[Tensor], grads: list[np.ndarray], state: AdamState) -> None:
    """One in-place Adam update with bias correction."""
    if not state.m:
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]
    if len(grads) != len(params):
        raise ValueError("grads/params length mismatch")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g.shape != p.data.shape:
            raise ValueError("gradient shape mismatch")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.data = p.data - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def collect_grads(params: list[Tensor]) -> list[np.ndarray]:
    """Gradients after backward(), with zeros for untouched parameters."""
    return [p.grad if p.grad is not None else np.zeros_like(p.data) for p in params]
