"""The quantum feature map: embeddings, the two kernels it induces, and its Fourier spectrum.

Run: python demos/02_feature_map_kernels_spectrum.py
"""
import numpy as np

from qagnn.feature_map import (EncoderConfig, build_circuit, embed_nodes, fidelity_gram,
                               fourier_spectrum_probe, pauli_gram)

cfg = EncoderConfig(n_qubits=4, n_layers=2)
rng = np.random.default_rng(0)
theta = rng.uniform(-np.pi, np.pi, cfg.n_params)

circuit = build_circuit(np.full(4, 0.5), theta, cfg)
print(f"{len(circuit.gates)} gates, {cfg.n_params} trainable angles")

# Each flow becomes a 4-vector of Pauli-Z expectations.
X = rng.uniform(0, 1, (5, 4))
Z = embed_nodes(X, theta, cfg)
print("embeddings:\n", np.round(Z, 3))

# Noise pulls every embedding toward the origin.
noisy = embed_nodes(X, theta, EncoderConfig(4, 2, backend="density", noise_p=0.05))
print("norm ratio noisy/ideal per node:", np.round(np.linalg.norm(noisy, axis=1) / np.linalg.norm(Z, axis=1), 3))

# Two kernels: dot products of embeddings, and state overlaps.
print("Pauli kernel:\n", np.round(pauli_gram(X, theta, cfg), 3))
F = fidelity_gram(X, theta, cfg)
print("fidelity kernel:\n", np.round(F, 3))
print("smallest fidelity eigenvalue:", np.linalg.eigvalsh(F).min())

# Sweeping one feature over a full period shows which frequencies the model can express.
sp = fourier_spectrum_probe(theta, cfg, feature_index=0, base_point=np.full(4, 0.5))
for f in range(-3, 4):
    print(f"frequency {f:+d}: |c| = {sp.magnitude(f):.3e}")
print("energy outside {0, +-1, +-2}, relative:", sp.relative_out_of_set)
