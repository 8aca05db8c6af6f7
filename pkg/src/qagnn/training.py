"""Full-batch hybrid training: BCE loss, backprop + shift-rule gradients, Adam, early stopping."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .feature_map import EncoderConfig, embed_jacobians
from .graph import FlowGraph, HopOperators, hop_operators
from .model import (
    ModelParams,
    activation_grad,
    forward,
    is_classical,
    propagate,
    uses_attention,
    uses_one_hop,
    uses_two_hop,
    check_hops,
)

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    """Raised when the loss stops being finite."""


def bce_with_logits(logits, labels) -> float:
    """Mean binary cross-entropy on logits, overflow-safe."""
    l = np.asarray(logits, dtype=float)
    y = np.asarray(labels, dtype=float)
    if l.shape != y.shape:
        raise ValueError(f"length mismatch: {l.shape} vs {y.shape}")
    if l.size == 0:
        raise ValueError("empty input")
    return float(np.mean(np.maximum(l, 0) - l * y + np.log1p(np.exp(-np.abs(l)))))


def _sigmoid(x):
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))


def _softmax_backward(alpha, d_alpha):
    return alpha * (d_alpha - alpha @ d_alpha)


def loss_and_gradients(graph: FlowGraph, hops: HopOperators, params: ModelParams,
                       cfg: EncoderConfig) -> tuple[float, ModelParams]:
    """Mean BCE loss and its gradient w.r.t. every parameter array.

    Classical parts are differentiated analytically. The quantum angles use
    ``dL/dtheta = sum_i dL/dz_i . J_i`` with shift-rule Jacobians ``J_i``;
    ``dL/dz_i`` collects the direct fusion path, both attention softmaxes and
    every aggregation sum in which ``z_i`` appears as a neighbour.
    """
    check_hops(graph, hops)
    v = params.variant
    X = graph.features
    if is_classical(v):
        enc = params.encoder
        pre1 = X @ enc.W1.T + enc.b1
        h1 = np.tanh(pre1)
        Z = np.tanh(h1 @ enc.W2.T + enc.b2)
        J = None
    else:
        Z, J = embed_jacobians(X, params.theta, cfg)
    c = propagate(Z, hops, params)
    y = graph.labels.astype(float)
    N = Z.shape[0]
    loss = bce_with_logits(c.logits, y)

    mlp = params.mlp
    d_logit = (_sigmoid(c.logits) - y) / N
    R = np.maximum(c.U, 0.0)
    g_w_o = R.T @ d_logit
    g_b_o = d_logit.sum()
    dU = np.outer(d_logit, mlp.w_o) * (c.U > 0)
    g_W_h = dU.T @ c.H
    g_b_h = dU.sum(axis=0)
    dP = (dU @ mlp.W_h) * activation_grad(c.P, params.activation)

    dZ = dP.copy()
    g_attn = {"w1": np.zeros_like(params.attn.w1), "b1": 0.0,
              "w2": np.zeros_like(params.attn.w2), "b2": 0.0}
    att = uses_attention(v)
    for hop, A, alpha, active in ((1, hops.a1, c.alpha1, uses_one_hop(v)),
                                  (2, hops.a2, c.alpha2, uses_two_hop(v))):
        if not active:
            continue
        dV = A.T.astype(float) @ dP               # gradient w.r.t. alpha_j z_j
        dZ += alpha[:, None] * dV
        if att:
            d_alpha = np.einsum("jd,jd->j", dV, Z)
            ds = _softmax_backward(alpha, d_alpha)
            w = params.attn.w1 if hop == 1 else params.attn.w2
            g_attn[f"w{hop}"] = Z.T @ ds
            g_attn[f"b{hop}"] = float(ds.sum())
            dZ += np.outer(ds, w)

    grads = {
        "attn.w1": g_attn["w1"], "attn.b1": np.array([g_attn["b1"]]),
        "attn.w2": g_attn["w2"], "attn.b2": np.array([g_attn["b2"]]),
        "mlp.W_h": g_W_h, "mlp.b_h": g_b_h, "mlp.w_o": g_w_o, "mlp.b_o": np.array([g_b_o]),
    }
    if is_classical(v):
        dpre2 = dZ * (1.0 - Z ** 2)
        grads["encoder.W2"] = dpre2.T @ h1
        grads["encoder.b2"] = dpre2.sum(axis=0)
        dpre1 = (dpre2 @ enc.W2) * (1.0 - h1 ** 2)
        grads["encoder.W1"] = dpre1.T @ X
        grads["encoder.b1"] = dpre1.sum(axis=0)
    else:
        grads["theta"] = np.einsum("nk,nkt->t", dZ, J)
    return loss, params.with_arrays(grads)


def loss_gradients(graph: FlowGraph, hops: HopOperators, params: ModelParams,
                   cfg: EncoderConfig) -> ModelParams:
    return loss_and_gradients(graph, hops, params, cfg)[1]


# ---------------------------------------------------------------------------
# optimiser

@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    weight_decay: float = 1e-2
    max_epochs: int = 1000
    patience: int = 30
    seed: int = 0
    decay_angles: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0


BETA1, BETA2, EPS = 0.9, 0.999, 1e-8


def adam_step(params: ModelParams, grads: ModelParams, state: AdamState,
              cfg: TrainConfig) -> tuple[ModelParams, AdamState]:
    """One Adam update with coupled L2 decay (``g + wd * w``) on the trainable arrays."""
    values, g_all = params.to_dict(), grads.to_dict()
    step = state.step + 1
    m, v = dict(state.m), dict(state.v)
    bc1 = 1.0 - BETA1 ** step
    bc2 = 1.0 - BETA2 ** step
    updated = {}
    for name in params.trainable():
        w, g = values[name], g_all[name]
        if g.shape != w.shape:
            raise ValueError(f"{name}: gradient shape {g.shape} != parameter shape {w.shape}")
        if cfg.weight_decay and (cfg.decay_angles or name != "theta"):
            g = g + cfg.weight_decay * w
        m[name] = BETA1 * m.get(name, np.zeros_like(w)) + (1 - BETA1) * g
        v[name] = BETA2 * v.get(name, np.zeros_like(w)) + (1 - BETA2) * (g * g)
        updated[name] = w - cfg.learning_rate * (m[name] / bc1) / (np.sqrt(v[name] / bc2) + EPS)
    return params.with_arrays(updated), AdamState(m, v, step)


# ---------------------------------------------------------------------------
# training loop

@dataclass
class TrainReport:
    train_losses: list
    val_losses: list
    best_epoch: int           # 1-based
    stop_reason: str          # "early_stopping" | "max_epochs"
    params: ModelParams

    @property
    def epochs_run(self) -> int:
        return len(self.train_losses)

    def to_json(self) -> dict:
        return {
            "epochs_run": self.epochs_run,
            "best_epoch": self.best_epoch,
            "best_val_loss": self.val_losses[self.best_epoch - 1],
            "stop_reason": self.stop_reason,
            "variant": self.params.variant,
            "train_losses": self.train_losses,
            "val_losses": self.val_losses,
        }

    def write_loss_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "train_loss", "val_loss"])
            for i, (a, b) in enumerate(zip(self.train_losses, self.val_losses), start=1):
                w.writerow([i, repr(a), repr(b)])

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")


def validation_loss(graph: FlowGraph, hops: HopOperators, params: ModelParams,
                    cfg: EncoderConfig) -> float:
    return bce_with_logits(forward(graph, hops, params, cfg), graph.labels)


def train(train_graph: FlowGraph, val_graph: FlowGraph, init: ModelParams,
          cfg: TrainConfig, enc_cfg: EncoderConfig,
          train_hops: Optional[HopOperators] = None,
          val_hops: Optional[HopOperators] = None) -> TrainReport:
    """Full-batch Adam with early stopping; returns the best-validation parameters.

    Each epoch records the training loss before the update and the validation
    loss after it. Training stops once ``patience`` consecutive epochs fail to
    lower the best validation loss.
    """
    if not enc_cfg.exact:
        raise ValueError("training needs an exact backend (statevector or density)")
    train_hops = train_hops or hop_operators(train_graph)
    val_hops = val_hops or hop_operators(val_graph)
    params, state = init, AdamState()
    best_params, best_loss, best_epoch = init, math.inf, 0
    train_losses, val_losses = [], []
    stale = 0
    reason = "max_epochs"
    for epoch in range(1, cfg.max_epochs + 1):
        loss, grads = loss_and_gradients(train_graph, train_hops, params, enc_cfg)
        if not math.isfinite(loss):
            raise TrainingError(f"training loss became {loss} at epoch {epoch}")
        params, state = adam_step(params, grads, state, cfg)
        val = validation_loss(val_graph, val_hops, params, enc_cfg)
        if not math.isfinite(val):
            raise TrainingError(f"validation loss became {val} at epoch {epoch}")
        train_losses.append(loss)
        val_losses.append(val)
        if val < best_loss:
            best_loss, best_epoch, best_params, stale = val, epoch, params, 0
        else:
            stale += 1
        log.debug("epoch %d train %.6f val %.6f", epoch, loss, val)
        if stale >= cfg.patience:
            reason = "early_stopping"
            break
    return TrainReport(train_losses, val_losses, best_epoch, reason, best_params)
