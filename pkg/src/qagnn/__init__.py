"""Hybrid quantum-classical graph attention network for flow-level intrusion detection."""
from .feature_map import (
    EncoderConfig,
    build_circuit,
    embed_jacobian,
    embed_node,
    embed_nodes,
    fidelity_kernel,
    fourier_spectrum_probe,
    pauli_kernel,
)
from .graph import FlowGraph, HopOperators, build_graph, cosine_similarity, hop_operators
from .metrics import confusion, evaluate, report
from .model import ModelParams, VARIANTS, forward, init_params, predict
from .quantum import CircuitSpec, Gate, NoiseModel, expect_z, run_density, run_statevector
from .training import TrainConfig, TrainReport, bce_with_logits, train

__version__ = "0.1.0"

__all__ = [
    "EncoderConfig",
    "build_circuit",
    "embed_jacobian",
    "embed_node",
    "embed_nodes",
    "fidelity_kernel",
    "fourier_spectrum_probe",
    "pauli_kernel",
    "FlowGraph",
    "HopOperators",
    "build_graph",
    "cosine_similarity",
    "hop_operators",
    "confusion",
    "evaluate",
    "report",
    "ModelParams",
    "VARIANTS",
    "forward",
    "init_params",
    "predict",
    "CircuitSpec",
    "Gate",
    "NoiseModel",
    "expect_z",
    "run_density",
    "run_statevector",
    "TrainConfig",
    "TrainReport",
    "bce_with_logits",
    "train",
]
