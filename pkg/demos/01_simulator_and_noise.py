"""Walk through the circuit simulator: a Bell pair, then what depolarizing noise does to it.

Run: python demos/01_simulator_and_noise.py
"""
import numpy as np

from qagnn.quantum import CircuitSpec, Gate, NoiseModel, expect_z, param_shift_grad, probabilities, run_density, run_statevector

# A Hadamard-like rotation on qubit 0 followed by a CNOT gives equal weight on |00> and |11>.
bell = CircuitSpec(2, [Gate("RY", 0, angle=np.pi / 2), Gate("CNOT", 1, control=0)])
psi = run_statevector(bell)
print("Bell probabilities |00>,|01>,|10>,|11>:", np.round(probabilities(psi), 6))

# The density backend reproduces that exactly when the noise is switched off...
rho = run_density(bell, NoiseModel(0.0))
print("density diagonal at p=0:", np.round(np.real(np.diag(rho)), 6))

# ...and with noise the populations drift toward the maximally mixed 1/4.
for p in (0.05, 0.2, 0.5):
    print(f"p={p:<4} diagonal:", np.round(np.real(np.diag(run_density(bell, NoiseModel(p)))), 4))

# On a single qubit every gate shrinks <Z> by exactly (1 - p).
flip = CircuitSpec(1, [Gate("RY", 0, angle=0.4)] + [Gate("RZ", 0, angle=0.3)] * 4)
ideal = expect_z(run_statevector(flip), 0)
for p in (0.05, 0.1):
    noisy = expect_z(run_density(flip, NoiseModel(p)), 0)
    print(f"p={p}: noisy/ideal = {noisy / ideal:.6f}, (1-p)^5 = {(1 - p) ** 5:.6f}")

# Gradients come from two shifted evaluations; d<Z>/da of RY(a)|0> is -sin(a).
c = CircuitSpec(1, [Gate("RY", 0, angle=0.7, param_id=0)])
print("parameter-shift gradient:", round(param_shift_grad(c, 0, 0), 10), " -sin(0.7):", round(-np.sin(0.7), 10))
