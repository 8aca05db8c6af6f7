"""Dense few-qubit circuit simulation.

Pure states are complex amplitude vectors of length ``2**n``; mixed states are
``2**n x 2**n`` density matrices. Qubit 0 is the least significant bit of the
basis-state index. The ``evolve_*`` routines run one circuit structure for a
batch of angle assignments, which is how the feature map evaluates many nodes
(and parameter shifts) at once.

Gate conventions: ``RY(a) = exp(-i a Y / 2)``, ``RZ(a) = exp(-i a Z / 2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

ROTATIONS = ("RY", "RZ")
MAX_QUBITS = 6


class CircuitError(ValueError):
    """Structurally invalid circuit (bad qubit index, malformed gate)."""


@dataclass(frozen=True)
class Gate:
    kind: str
    target: int
    control: Optional[int] = None
    angle: float = 0.0
    param_id: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("RY", "RZ", "CNOT"):
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        if self.kind == "CNOT":
            if self.control is None or self.control == self.target:
                raise CircuitError("CNOT needs a control distinct from its target")
            if self.param_id is not None:
                raise CircuitError("CNOT cannot carry a parameter")
        elif self.control is not None:
            raise CircuitError("rotations take no control qubit")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.target,) if self.control is None else (self.control, self.target)


@dataclass(frozen=True)
class CircuitSpec:
    n_qubits: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise CircuitError(f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}")
        for g in self.gates:
            for q in g.qubits:
                if not 0 <= q < self.n_qubits:
                    raise CircuitError(f"qubit {q} out of range for {self.n_qubits} qubits")

    def param_gates(self, param_id: int) -> list[int]:
        """Indices of the gates whose angle is tied to ``param_id``."""
        return [i for i, g in enumerate(self.gates) if g.param_id == param_id]

    def with_angle(self, gate_index: int, angle: float) -> "CircuitSpec":
        gates = list(self.gates)
        gates[gate_index] = replace(gates[gate_index], angle=angle)
        return CircuitSpec(self.n_qubits, tuple(gates))


@dataclass(frozen=True)
class NoiseModel:
    """Single-qubit depolarizing channel applied to every qubit a gate touches."""

    depolarizing_p: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.depolarizing_p < 1.0:
            raise ValueError(f"depolarizing_p must lie in [0, 1), got {self.depolarizing_p}")


# ---------------------------------------------------------------------------
# gate matrices

def ry_matrix(angle) -> np.ndarray:
    """RY for a scalar or an array of angles; returns shape ``angle.shape + (2, 2)``."""
    a = np.asarray(angle, dtype=float) / 2
    c, s = np.cos(a), np.sin(a)
    m = np.empty(a.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = c
    m[..., 0, 1] = -s
    m[..., 1, 0] = s
    m[..., 1, 1] = c
    return m


def rz_matrix(angle) -> np.ndarray:
    a = np.asarray(angle, dtype=float) / 2
    m = np.zeros(a.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = np.exp(-1j * a)
    m[..., 1, 1] = np.exp(1j * a)
    return m


_ROT = {"RY": ry_matrix, "RZ": rz_matrix}


# ---------------------------------------------------------------------------
# kernels. States are kept flat: statevectors as (B, 2**n), densities as
# (B, 2**n, 2**n). A single-qubit gate on qubit q acts on the middle axis of the
# view (B, 2**(n-1-q), 2, 2**q, rest).

def _apply_1q(psi: np.ndarray, mat: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Apply ``mat`` (shape (2, 2) or per-row (B, 2, 2)) to the row index of ``psi``."""
    b = psi.shape[0]
    v = psi.reshape(b, 2 ** (n - 1 - qubit), 2, 2 ** qubit, -1)
    m = mat.reshape((-1, 2, 2) if mat.ndim == 3 else (1, 2, 2))
    m = m[:, None, :, :, None, None]
    a0, a1 = v[:, :, 0], v[:, :, 1]
    out = np.empty_like(v)
    out[:, :, 0] = m[:, :, 0, 0] * a0 + m[:, :, 0, 1] * a1
    out[:, :, 1] = m[:, :, 1, 0] * a0 + m[:, :, 1, 1] * a1
    return out.reshape(psi.shape)


def _cnot_permutation(control: int, target: int, n: int) -> np.ndarray:
    idx = np.arange(2 ** n)
    return np.where((idx >> control) & 1, idx ^ (1 << target), idx)


def _gate_angles(gates: Sequence[Gate], angles: Optional[np.ndarray], batch: int) -> list:
    """Per-gate angle: a float, or a length-``batch`` array when overridden."""
    if angles is None:
        return [g.angle for g in gates]
    angles = np.asarray(angles, dtype=float)
    if angles.shape != (batch, len(gates)):
        raise ValueError(f"angle override must have shape {(batch, len(gates))}, got {angles.shape}")
    return [angles[:, i] for i in range(len(gates))]


def evolve_statevectors(circuit: CircuitSpec, angles: Optional[np.ndarray] = None,
                        batch: int = 1) -> np.ndarray:
    """Run ``circuit`` from ``|0...0>`` for a batch of angle assignments.

    ``angles`` (shape ``(batch, n_gates)``) overrides every gate's angle per
    batch row; entries for CNOT columns are ignored. Returns ``(batch, 2**n)``.
    """
    n = circuit.n_qubits
    psi = np.zeros((batch, 2 ** n), dtype=complex)
    psi[:, 0] = 1.0
    for g, a in zip(circuit.gates, _gate_angles(circuit.gates, angles, batch)):
        if g.kind == "CNOT":
            psi = psi[:, _cnot_permutation(g.control, g.target, n)]
        else:
            psi = _apply_1q(psi, _ROT[g.kind](a), g.target, n)
    return psi


def run_statevector(circuit: CircuitSpec) -> np.ndarray:
    """Exact final state of ``circuit`` applied to ``|0...0>``."""
    return evolve_statevectors(circuit)[0]


def _apply_1q_right(rho: np.ndarray, mat: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """``rho @ mat^dag`` acting on the column index of a density batch."""
    b = rho.shape[0]
    v = rho.reshape(b, rho.shape[1], 2 ** (n - 1 - qubit), 2, 2 ** qubit)
    m = np.conj(mat.reshape((-1, 2, 2) if mat.ndim == 3 else (1, 2, 2)))
    m = m[:, None, None, :, :, None]
    c0, c1 = v[:, :, :, 0], v[:, :, :, 1]
    out = np.empty_like(v)
    out[:, :, :, 0] = m[:, :, :, 0, 0] * c0 + m[:, :, :, 0, 1] * c1
    out[:, :, :, 1] = m[:, :, :, 1, 0] * c0 + m[:, :, :, 1, 1] * c1
    return out.reshape(rho.shape)


def _apply_1q_density(rho: np.ndarray, mat: np.ndarray, qubit: int, n: int) -> np.ndarray:
    return _apply_1q_right(_apply_1q(rho, mat, qubit, n), mat, qubit, n)


def _depolarize(rho: np.ndarray, qubit: int, n: int, p: float) -> np.ndarray:
    """(1 - p) rho + p * I/2 (x) Tr_q(rho) on one qubit."""
    if p == 0.0:
        return rho
    b, hi, lo = rho.shape[0], 2 ** (n - 1 - qubit), 2 ** qubit
    v = rho.reshape(b, hi, 2, lo, hi, 2, lo)
    reduced = v[:, :, 0, :, :, 0, :] + v[:, :, 1, :, :, 1, :]
    out = (1.0 - p) * v
    out[:, :, 0, :, :, 0, :] += 0.5 * p * reduced
    out[:, :, 1, :, :, 1, :] += 0.5 * p * reduced
    return out.reshape(rho.shape)


def evolve_densities(circuit: CircuitSpec, noise: NoiseModel,
                     angles: Optional[np.ndarray] = None, batch: int = 1) -> np.ndarray:
    """Batched density-matrix evolution; returns ``(batch, 2**n, 2**n)``."""
    n = circuit.n_qubits
    p = noise.depolarizing_p
    rho = np.zeros((batch, 2 ** n, 2 ** n), dtype=complex)
    rho[:, 0, 0] = 1.0
    for g, a in zip(circuit.gates, _gate_angles(circuit.gates, angles, batch)):
        if g.kind == "CNOT":
            perm = _cnot_permutation(g.control, g.target, n)
            rho = rho[:, perm][:, :, perm]
        else:
            rho = _apply_1q_density(rho, _ROT[g.kind](a), g.target, n)
        for q in g.qubits:
            rho = _depolarize(rho, q, n, p)
    return rho


def run_density(circuit: CircuitSpec, noise: Optional[NoiseModel] = None) -> np.ndarray:
    """Exact mixed state of ``circuit`` under per-gate depolarizing noise."""
    return evolve_densities(circuit, noise or NoiseModel())[0]


# ---------------------------------------------------------------------------
# measurement

def _z_signs(n: int, qubit: int) -> np.ndarray:
    bits = (np.arange(2 ** n) >> qubit) & 1
    return 1.0 - 2.0 * bits


def _n_qubits_of(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or 2 ** n != dim:
        raise ValueError(f"state dimension {dim} is not a power of two")
    return n


def probabilities(state: np.ndarray) -> np.ndarray:
    """Born probabilities of one state: 1-D statevector or 2-D density matrix."""
    state = np.asarray(state)
    if state.ndim == 1:
        return np.abs(state) ** 2
    if state.ndim == 2 and state.shape[0] == state.shape[1]:
        return np.clip(np.real(np.diagonal(state)), 0.0, None)
    raise ValueError(f"expected a statevector or square density matrix, got shape {state.shape}")


def expect_z(state: np.ndarray, qubit: int) -> float:
    """``<Z_qubit>`` of a statevector or density matrix."""
    state = np.asarray(state)
    n = _n_qubits_of(state.shape[-1])
    if not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit} out of range for {n} qubits")
    probs = probabilities(state)
    val = float(probs @ _z_signs(n, qubit))
    return min(1.0, max(-1.0, val))


def expect_all_z(probs: np.ndarray) -> np.ndarray:
    """``<Z_k>`` for every qubit from basis probabilities ``(..., 2**n)``.

    Returns ``(..., n)``, clipped to [-1, 1] against rounding drift.
    """
    n = _n_qubits_of(probs.shape[-1])
    signs = np.stack([_z_signs(n, q) for q in range(n)], axis=1)
    return np.clip(probs @ signs, -1.0, 1.0)


def sample_counts(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    p = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    return rng.multinomial(shots, p / p.sum())


def expect_z_sampled(state: np.ndarray, qubit: int, shots: int, seed: int) -> float:
    """Shot estimate of ``<Z_qubit>``: mean of ``shots`` sampled +-1 outcomes."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    state = np.asarray(state)
    n = _n_qubits_of(state.shape[-1])
    if not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit} out of range for {n} qubits")
    counts = sample_counts(probabilities(state), shots, np.random.default_rng(seed))
    return float(counts @ _z_signs(n, qubit)) / shots


def expectation(circuit: CircuitSpec, qubit: int, noise: Optional[NoiseModel] = None) -> float:
    if noise is None:
        return expect_z(run_statevector(circuit), qubit)
    return expect_z(run_density(circuit, noise), qubit)


def param_shift_grad(circuit: CircuitSpec, param_id: int, qubit: int,
                     noise: Optional[NoiseModel] = None) -> float:
    """d<Z_qubit>/d(angle of ``param_id``) by the two-term shift rule."""
    idx = circuit.param_gates(param_id)
    if len(idx) != 1:
        raise ValueError(f"param_id {param_id} is bound to {len(idx)} gates, expected exactly 1")
    (i,) = idx
    base = circuit.gates[i].angle
    plus = expectation(circuit.with_angle(i, base + np.pi / 2), qubit, noise)
    minus = expectation(circuit.with_angle(i, base - np.pi / 2), qubit, noise)
    return (plus - minus) / 2
