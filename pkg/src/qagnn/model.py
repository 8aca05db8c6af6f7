"""Q-AGNN forward pass and its ablation variants.

Pipeline per graph: node embeddings ``Z`` (quantum or classical encoder) ->
globally normalised node attention per hop -> hop aggregation
``Z_h = A_h diag(alpha_h) Z`` -> fusion ``sigma(Z + Z_1 + Z_2)`` -> MLP logit.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from .feature_map import EncoderConfig, embed_nodes
from .graph import FlowGraph, HopOperators

VARIANTS = (
    "full",
    "pqc_no_attention",
    "one_hop_attention",
    "one_hop_no_attention",
    "node_wise_qnn",
    "mlp_attention",
    "mlp_no_attention",
)
ACTIVATIONS = ("relu", "tanh")


@dataclass
class AttentionParams:
    w1: np.ndarray
    b1: float
    w2: np.ndarray
    b2: float


@dataclass
class MlpParams:
    W_h: np.ndarray   # (hidden, d)
    b_h: np.ndarray   # (hidden,)
    w_o: np.ndarray   # (hidden,)
    b_o: float


@dataclass
class EncoderParams:
    """Classical stand-in for the quantum encoder: ``tanh(W2 tanh(W1 x + b1) + b2)``."""

    W1: np.ndarray    # (hidden, F)
    b1: np.ndarray
    W2: np.ndarray    # (d, hidden)
    b2: np.ndarray

    @property
    def size(self) -> int:
        return self.W1.size + self.b1.size + self.W2.size + self.b2.size


@dataclass
class ModelParams:
    attn: AttentionParams
    mlp: MlpParams
    variant: str = "full"
    theta: Optional[np.ndarray] = None
    encoder: Optional[EncoderParams] = None
    activation: str = "relu"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if is_classical(self.variant) and self.encoder is None:
            raise ValueError(f"variant {self.variant} needs classical encoder weights")
        if not is_classical(self.variant) and self.theta is None:
            raise ValueError(f"variant {self.variant} needs quantum angles theta")

    # flat views used by the optimiser, finite differences and serialisation
    def to_dict(self) -> dict[str, np.ndarray]:
        d = {}
        if self.theta is not None:
            d["theta"] = np.asarray(self.theta, dtype=float)
        if self.encoder is not None:
            for f in fields(self.encoder):
                d[f"encoder.{f.name}"] = np.asarray(getattr(self.encoder, f.name), dtype=float)
        for f in fields(self.attn):
            d[f"attn.{f.name}"] = np.atleast_1d(np.asarray(getattr(self.attn, f.name), dtype=float))
        for f in fields(self.mlp):
            d[f"mlp.{f.name}"] = np.atleast_1d(np.asarray(getattr(self.mlp, f.name), dtype=float))
        return d

    def with_arrays(self, arrays: dict[str, np.ndarray]) -> "ModelParams":
        """Copy with every entry of ``arrays`` replacing the same-named field."""
        base = self.to_dict()
        unknown = set(arrays) - set(base)
        if unknown:
            raise KeyError(f"unknown parameter names {sorted(unknown)}")
        for k, v in arrays.items():
            v = np.asarray(v, dtype=float)
            if v.shape != base[k].shape:
                raise ValueError(f"{k}: shape {v.shape} != {base[k].shape}")
            base[k] = v.copy()

        def scalar(a):
            return float(a[0])

        attn = AttentionParams(base["attn.w1"], scalar(base["attn.b1"]),
                               base["attn.w2"], scalar(base["attn.b2"]))
        mlp = MlpParams(base["mlp.W_h"], base["mlp.b_h"], base["mlp.w_o"], scalar(base["mlp.b_o"]))
        enc = None
        if self.encoder is not None:
            enc = EncoderParams(base["encoder.W1"], base["encoder.b1"],
                                base["encoder.W2"], base["encoder.b2"])
        return replace(self, attn=attn, mlp=mlp, theta=base.get("theta"), encoder=enc)

    def trainable(self) -> list[str]:
        """Names of the arrays that influence this variant's output."""
        names = ["encoder.W1", "encoder.b1", "encoder.W2", "encoder.b2"] if is_classical(self.variant) \
            else ["theta"]
        if uses_attention(self.variant):
            names += ["attn.w1", "attn.b1"]
            if uses_two_hop(self.variant):
                names += ["attn.w2", "attn.b2"]
        names += ["mlp.W_h", "mlp.b_h", "mlp.w_o", "mlp.b_o"]
        return names

    @property
    def hidden(self) -> int:
        return self.mlp.W_h.shape[0]


def is_classical(variant: str) -> bool:
    return variant.startswith("mlp_")


def uses_attention(variant: str) -> bool:
    return variant in ("full", "one_hop_attention", "mlp_attention")


def uses_one_hop(variant: str) -> bool:
    return variant != "node_wise_qnn"


def uses_two_hop(variant: str) -> bool:
    return variant not in ("node_wise_qnn", "one_hop_attention", "one_hop_no_attention")


# ---------------------------------------------------------------------------
# initialisation

def classical_encoder_hidden(n_features: int, embed_dim: int, target: int) -> int:
    """Hidden width whose parameter count ``h (F + 1 + d) + d`` is closest to ``target``."""
    per_unit = n_features + 1 + embed_dim
    return max(1, int(round((target - embed_dim) / per_unit)))


def _uniform(rng, fan_in, shape):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_params(cfg: EncoderConfig, variant: str = "full", hidden: int = 8, seed: int = 0,
                n_features: Optional[int] = None, activation: str = "relu",
                angle_scale: float = 0.1) -> ModelParams:
    rng = np.random.default_rng(seed)
    d = cfg.n_qubits
    F = n_features if n_features is not None else d
    theta, enc = None, None
    if is_classical(variant):
        h = classical_encoder_hidden(F, d, cfg.n_params)
        enc = EncoderParams(_uniform(rng, F, (h, F)), _uniform(rng, F, h),
                            _uniform(rng, h, (d, h)), _uniform(rng, h, d))
    else:
        if F != d:
            raise ValueError(f"quantum variants need n_features == n_qubits ({F} != {d})")
        theta = rng.uniform(-angle_scale, angle_scale, size=cfg.n_params)
    attn = AttentionParams(_uniform(rng, d, d), float(_uniform(rng, d, ())),
                           _uniform(rng, d, d), float(_uniform(rng, d, ())))
    mlp = MlpParams(_uniform(rng, d, (hidden, d)), _uniform(rng, d, hidden),
                    _uniform(rng, hidden, hidden), float(_uniform(rng, hidden, ())))
    return ModelParams(attn, mlp, variant, theta, enc, activation)


# ---------------------------------------------------------------------------
# building blocks

def attention_weights(Z, w, b) -> np.ndarray:
    """Softmax over all nodes of the affine score ``w . z_j + b``."""
    Z = np.asarray(Z, dtype=float)
    s = Z @ np.asarray(w, dtype=float) + b
    s = s - s.max()
    e = np.exp(s)
    return e / e.sum()


def aggregate(A_hop, alpha, Z) -> np.ndarray:
    """Row ``i`` is ``sum_j A_hop[i, j] alpha_j z_j``."""
    A_hop, alpha, Z = np.asarray(A_hop, dtype=float), np.asarray(alpha, dtype=float), np.asarray(Z, dtype=float)
    N = Z.shape[0]
    if A_hop.shape != (N, N) or alpha.shape != (N,):
        raise ValueError(f"shape mismatch: A {A_hop.shape}, alpha {alpha.shape}, Z {Z.shape}")
    return A_hop @ (alpha[:, None] * Z)


def _activate(P, activation):
    return np.maximum(P, 0.0) if activation == "relu" else np.tanh(P)


def activation_grad(P, activation):
    return (P > 0).astype(float) if activation == "relu" else 1.0 - np.tanh(P) ** 2


def fuse(Z, Z1, Z2, activation: str = "relu") -> np.ndarray:
    Z, Z1, Z2 = (np.asarray(a, dtype=float) for a in (Z, Z1, Z2))
    if not Z.shape == Z1.shape == Z2.shape:
        raise ValueError(f"shape mismatch: {Z.shape}, {Z1.shape}, {Z2.shape}")
    return _activate(Z + Z1 + Z2, activation)


def mlp_forward(H, mlp: MlpParams) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[1] != mlp.W_h.shape[1]:
        raise ValueError(f"H has shape {H.shape}, MLP expects (*, {mlp.W_h.shape[1]})")
    return np.maximum(H @ mlp.W_h.T + mlp.b_h, 0.0) @ mlp.w_o + mlp.b_o


def classical_encode(X, enc: EncoderParams) -> np.ndarray:
    return np.tanh(np.tanh(X @ enc.W1.T + enc.b1) @ enc.W2.T + enc.b2)


def encode(X, params: ModelParams, cfg: EncoderConfig) -> np.ndarray:
    """Node embeddings ``Z`` for the variant's encoder."""
    X = np.asarray(X, dtype=float)
    if is_classical(params.variant):
        return classical_encode(X, params.encoder)
    return embed_nodes(X, params.theta, cfg)


def predict(logits) -> np.ndarray:
    """Attack iff ``sigmoid(logit) >= 0.5``, i.e. ``logit >= 0``."""
    return (np.asarray(logits) >= 0).astype(int)


# ---------------------------------------------------------------------------
# forward / backward

@dataclass
class Activations:
    Z: np.ndarray
    alpha1: np.ndarray
    alpha2: np.ndarray
    Z1: np.ndarray
    Z2: np.ndarray
    P: np.ndarray
    H: np.ndarray
    U: np.ndarray
    logits: np.ndarray


def propagate(Z, hops: HopOperators, params: ModelParams) -> Activations:
    N = Z.shape[0]
    v = params.variant
    uniform = np.full(N, 1.0 / N)
    zeros = np.zeros_like(Z)
    att = uses_attention(v)
    alpha1 = attention_weights(Z, params.attn.w1, params.attn.b1) if att else uniform
    alpha2 = attention_weights(Z, params.attn.w2, params.attn.b2) if att else uniform
    Z1 = aggregate(hops.a1, alpha1, Z) if uses_one_hop(v) else zeros
    Z2 = aggregate(hops.a2, alpha2, Z) if uses_two_hop(v) else zeros
    P = Z + Z1 + Z2
    H = _activate(P, params.activation)
    U = H @ params.mlp.W_h.T + params.mlp.b_h
    logits = np.maximum(U, 0.0) @ params.mlp.w_o + params.mlp.b_o
    return Activations(Z, alpha1, alpha2, Z1, Z2, P, H, U, logits)


def check_hops(graph: FlowGraph, hops: HopOperators):
    N = graph.n_nodes
    if hops.a1.shape != (N, N) or hops.a2.shape != (N, N):
        raise ValueError("hop operators do not match the graph size")


def forward(graph: FlowGraph, hops: HopOperators, params: ModelParams,
            cfg: EncoderConfig) -> np.ndarray:
    """Per-node intrusion logits."""
    check_hops(graph, hops)
    Z = encode(graph.features, params, cfg)
    return propagate(Z, hops, params).logits


def forward_trace(graph: FlowGraph, hops: HopOperators, params: ModelParams,
                  cfg: EncoderConfig) -> dict:
    """Intermediate tensors of one forward pass (embeddings, attention, fusion input)."""
    check_hops(graph, hops)
    c = propagate(encode(graph.features, params, cfg), hops, params)
    return {"Z": c.Z, "alpha1": c.alpha1, "alpha2": c.alpha2, "Z1": c.Z1, "Z2": c.Z2,
            "fusion_input": c.P, "H": c.H, "logits": c.logits}
