"""Angle-encoding + EfficientSU2 quantum encoder for node features.

Each feature ``x_k`` drives one ``RY(x_k)`` on qubit ``k``; ``L`` ansatz layers
follow, each made of RY/RZ rotations on every qubit, a linear CNOT chain
``q -> q+1`` and a second RY/RZ block. The node embedding is the vector of
single-qubit ``<Z_k>`` expectations, so it always lies in ``[-1, 1]^n``.

The trainable angle vector is laid out layer-major, then qubit-major, then by
slot ``(pre-RY, pre-RZ, post-RY, post-RZ)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantum import (
    CircuitSpec,
    Gate,
    NoiseModel,
    evolve_densities,
    evolve_statevectors,
    expect_all_z,
    sample_counts,
)

BACKENDS = ("statevector", "density", "sampled")
SLOTS = ("pre_ry", "pre_rz", "post_ry", "post_rz")


class UnsupportedBackend(ValueError):
    pass


@dataclass(frozen=True)
class EncoderConfig:
    n_qubits: int = 4
    n_layers: int = 2
    backend: str = "statevector"
    noise_p: float = 0.0
    shots: int = 1024
    seed: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if self.n_layers < 1:
            raise ValueError("n_layers must be >= 1")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.backend == "sampled" and self.shots < 1:
            raise ValueError("sampled backend needs shots >= 1")
        NoiseModel(self.noise_p)  # validates range

    @property
    def n_params(self) -> int:
        return 4 * self.n_qubits * self.n_layers

    @property
    def exact(self) -> bool:
        return self.backend != "sampled"

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel(self.noise_p)


def theta_index(layer: int, qubit: int, slot: int, n_qubits: int) -> int:
    return (layer * n_qubits + qubit) * 4 + slot


def _check_inputs(x: np.ndarray, theta: np.ndarray, cfg: EncoderConfig) -> None:
    if x.shape[-1] != cfg.n_qubits:
        raise ValueError(f"feature dimension {x.shape[-1]} != n_qubits {cfg.n_qubits}")
    if theta.shape != (cfg.n_params,):
        raise ValueError(f"theta must have length {cfg.n_params}, got shape {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta contains non-finite values")


def build_circuit(x, theta, cfg: EncoderConfig) -> CircuitSpec:
    """Encoding + ansatz circuit with ``theta`` slots bound via ``param_id``."""
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be a 1-D feature vector")
    _check_inputs(x, theta, cfg)
    n = cfg.n_qubits
    gates = [Gate("RY", k, angle=float(x[k])) for k in range(n)]
    def rotations(layer, first_slot):
        out = []
        for q in range(n):
            for s, kind in ((first_slot, "RY"), (first_slot + 1, "RZ")):
                pid = theta_index(layer, q, s, n)
                out.append(Gate(kind, q, angle=float(theta[pid]), param_id=pid))
        return out

    for layer in range(cfg.n_layers):
        gates += rotations(layer, 0)
        gates += [Gate("CNOT", q + 1, control=q) for q in range(n - 1)]
        gates += rotations(layer, 2)
    return CircuitSpec(n, tuple(gates))


def _template(cfg: EncoderConfig) -> tuple[CircuitSpec, np.ndarray, np.ndarray]:
    """Structure circuit plus column maps: encoding columns and theta columns.

    Returns ``(circuit, enc_cols, param_cols)`` where ``enc_cols[k]`` is the gate
    index of the encoding rotation of qubit ``k`` and ``param_cols[t]`` the gate
    index bound to ``theta[t]``.
    """
    circ = build_circuit(np.zeros(cfg.n_qubits), np.zeros(cfg.n_params), cfg)
    enc_cols = np.arange(cfg.n_qubits)
    param_cols = np.empty(cfg.n_params, dtype=int)
    for i, g in enumerate(circ.gates):
        if g.param_id is not None:
            param_cols[g.param_id] = i
    return circ, enc_cols, param_cols


def _angle_rows(X: np.ndarray, Theta: np.ndarray, cfg: EncoderConfig):
    """Angle matrix for rows pairing ``X[b]`` with ``Theta[b]``."""
    circ, enc_cols, param_cols = _template(cfg)
    angles = np.zeros((X.shape[0], len(circ.gates)))
    angles[:, enc_cols] = X
    angles[:, param_cols] = Theta
    return circ, angles


def _exact_probs(X: np.ndarray, Theta: np.ndarray, cfg: EncoderConfig) -> np.ndarray:
    circ, angles = _angle_rows(X, Theta, cfg)
    b = X.shape[0]
    if cfg.backend == "density":
        rho = evolve_densities(circ, cfg.noise, angles, batch=b)
        return np.clip(np.real(np.diagonal(rho, axis1=1, axis2=2)), 0.0, None)
    psi = evolve_statevectors(circ, angles, batch=b)
    return np.abs(psi) ** 2


def _as_batch(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return X[None, :] if X.ndim == 1 else X


def embed_nodes(X, theta, cfg: EncoderConfig) -> np.ndarray:
    """Embeddings for every row of ``X``; returns ``(N, n_qubits)``.

    For the sampled backend, node ``i`` draws its shots from a generator seeded
    with ``(cfg.seed, i)``, so results do not depend on batching.
    """
    X = _as_batch(X)
    theta = np.asarray(theta, dtype=float)
    _check_inputs(X, theta, cfg)
    if X.shape[0] == 0:
        return np.zeros((0, cfg.n_qubits))
    Theta = np.broadcast_to(theta, (X.shape[0], theta.size))
    if cfg.backend == "sampled":
        probs = _exact_probs(X, Theta, EncoderConfig(cfg.n_qubits, cfg.n_layers))
        n = cfg.n_qubits
        bits = (np.arange(2 ** n)[:, None] >> np.arange(n)[None, :]) & 1
        signs = 1.0 - 2.0 * bits
        out = np.empty((X.shape[0], n))
        for i, p in enumerate(probs):
            counts = sample_counts(p, cfg.shots, np.random.default_rng([cfg.seed, i]))
            out[i] = counts @ signs / cfg.shots
        return out
    return expect_all_z(_exact_probs(X, Theta, cfg))


def embed_node(x, theta, cfg: EncoderConfig) -> np.ndarray:
    """Embedding ``z`` of one feature vector, ``z_k = <Z_k>``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be a 1-D feature vector")
    return embed_nodes(x, theta, cfg)[0]


def embed_jacobians(X, theta, cfg: EncoderConfig) -> tuple[np.ndarray, np.ndarray]:
    """Embeddings and their theta-Jacobians for every row of ``X``.

    Returns ``(Z, J)`` with ``Z`` of shape ``(N, n)`` and ``J`` of shape
    ``(N, n, n_params)``; ``J[i, k, t] = d<Z_k>/d theta_t`` for node ``i``,
    evaluated by the +-pi/2 shift rule in one batched simulation.
    """
    if not cfg.exact:
        raise UnsupportedBackend("Jacobians need an exact backend (statevector or density)")
    X = _as_batch(X)
    theta = np.asarray(theta, dtype=float)
    _check_inputs(X, theta, cfg)
    N, P = X.shape[0], cfg.n_params
    if N == 0:
        return np.zeros((0, cfg.n_qubits)), np.zeros((0, cfg.n_qubits, P))
    shifts = np.concatenate([np.zeros((1, P)), (np.pi / 2) * np.eye(P), -(np.pi / 2) * np.eye(P)])
    Theta = theta[None, None, :] + shifts[None, :, :]           # (1, 2P+1, P)
    Theta = np.broadcast_to(Theta, (N, 2 * P + 1, P)).reshape(-1, P)
    Xrep = np.repeat(X, 2 * P + 1, axis=0)
    ez = expect_all_z(_exact_probs(Xrep, Theta, cfg)).reshape(N, 2 * P + 1, cfg.n_qubits)
    Z = ez[:, 0, :]
    J = (ez[:, 1:P + 1, :] - ez[:, P + 1:, :]) / 2              # (N, P, n)
    return Z, np.transpose(J, (0, 2, 1))


def embed_jacobian(x, theta, cfg: EncoderConfig) -> np.ndarray:
    """``(n_qubits, n_params)`` Jacobian of one node's embedding."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be a 1-D feature vector")
    return embed_jacobians(x, theta, cfg)[1][0]


# ---------------------------------------------------------------------------
# kernels

def pauli_kernel(x, x_prime, theta, cfg: EncoderConfig) -> float:
    """Sum over qubits of ``<Z_k>(x) <Z_k>(x')``."""
    x, x_prime = np.asarray(x, dtype=float), np.asarray(x_prime, dtype=float)
    if x.shape != x_prime.shape:
        raise ValueError(f"input shapes differ: {x.shape} vs {x_prime.shape}")
    Z = embed_nodes(np.stack([x, x_prime]), theta, cfg)
    return float(Z[0] @ Z[1])


def pauli_gram(X, theta, cfg: EncoderConfig) -> np.ndarray:
    Z = embed_nodes(X, theta, cfg)
    return Z @ Z.T


def _statevectors(X, theta, cfg: EncoderConfig) -> np.ndarray:
    if cfg.backend != "statevector":
        raise UnsupportedBackend("the fidelity kernel is defined for the noiseless statevector backend only")
    X = _as_batch(X)
    theta = np.asarray(theta, dtype=float)
    _check_inputs(X, theta, cfg)
    circ, angles = _angle_rows(X, np.broadcast_to(theta, (X.shape[0], theta.size)), cfg)
    return evolve_statevectors(circ, angles, batch=X.shape[0])


def fidelity_kernel(x, x_prime, theta, cfg: EncoderConfig) -> float:
    """State overlap ``|<psi(x')|psi(x)>|^2``."""
    x, x_prime = np.asarray(x, dtype=float), np.asarray(x_prime, dtype=float)
    if x.shape != x_prime.shape:
        raise ValueError(f"input shapes differ: {x.shape} vs {x_prime.shape}")
    psi = _statevectors(np.stack([x, x_prime]), theta, cfg)
    return float(min(1.0, abs(np.vdot(psi[1], psi[0])) ** 2))


def fidelity_gram(X, theta, cfg: EncoderConfig) -> np.ndarray:
    psi = _statevectors(X, theta, cfg)
    G = np.abs(psi.conj() @ psi.T) ** 2
    G = 0.5 * (G + G.T)
    np.fill_diagonal(G, 1.0)
    return np.minimum(G, 1.0)


# ---------------------------------------------------------------------------
# Fourier probe

ALLOWED_FREQUENCIES = (-2, -1, 0, 1, 2)


@dataclass
class Spectrum:
    frequencies: np.ndarray       # integer frequencies, ascending
    magnitudes: np.ndarray        # |c_w| of f(t) = sum_w c_w exp(i w t)
    total_energy: float
    out_of_set_energy: float

    @property
    def relative_out_of_set(self) -> float:
        return self.out_of_set_energy / self.total_energy if self.total_energy > 0 else 0.0

    def magnitude(self, freq: int) -> float:
        return float(self.magnitudes[np.searchsorted(self.frequencies, freq)])


def fourier_spectrum_probe(theta, cfg: EncoderConfig, feature_index: int, base_point,
                           n_samples: int = 256, qubit: int = 0,
                           allowed=ALLOWED_FREQUENCIES) -> Spectrum:
    """Sweep one input feature over ``[0, 2pi)`` and Fourier-analyse ``<Z_qubit>``.

    ``base_point`` fixes the other features. Energies are sums of ``|c_w|^2``.
    """
    if not cfg.exact:
        raise UnsupportedBackend("spectrum probing needs an exact backend")
    if n_samples < 16 or n_samples & (n_samples - 1):
        raise ValueError("n_samples must be a power of two >= 16")
    base = np.asarray(base_point, dtype=float)
    if base.shape != (cfg.n_qubits,):
        raise ValueError(f"base_point must have length {cfg.n_qubits}")
    if not 0 <= feature_index < cfg.n_qubits or not 0 <= qubit < cfg.n_qubits:
        raise IndexError("feature_index / qubit out of range")
    t = 2 * np.pi * np.arange(n_samples) / n_samples
    X = np.repeat(base[None, :], n_samples, axis=0)
    X[:, feature_index] = t
    f = embed_nodes(X, theta, cfg)[:, qubit]
    coeffs = np.fft.fft(f) / n_samples
    freqs = np.fft.fftfreq(n_samples, d=1.0 / n_samples).astype(int)
    order = np.argsort(freqs)
    freqs, mags = freqs[order], np.abs(coeffs[order])
    energy = mags ** 2
    outside = ~np.isin(freqs, np.asarray(allowed))
    return Spectrum(freqs, mags, float(energy.sum()), float(energy[outside].sum()))
