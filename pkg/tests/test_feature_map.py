import numpy as np
import pytest

import oracles
from qagnn.feature_map import (
    EncoderConfig,
    UnsupportedBackend,
    build_circuit,
    embed_jacobian,
    embed_jacobians,
    embed_node,
    embed_nodes,
    fidelity_gram,
    fidelity_kernel,
    fourier_spectrum_probe,
    pauli_kernel,
    theta_index,
)
from qagnn.quantum import NoiseModel, expect_z, run_density

PI = np.pi
CFG = EncoderConfig(4, 2)


def random_theta(rng, cfg=CFG, scale=PI):
    return rng.uniform(-scale, scale, cfg.n_params)


class TestBuildCircuit:
    def test_gate_and_parameter_counts(self):
        c = build_circuit(np.zeros(4), np.zeros(32), CFG)
        assert len(c.gates) == 4 + 2 * (8 + 3 + 8) == 42
        bound = [g.param_id for g in c.gates if g.param_id is not None]
        assert sorted(bound) == list(range(32))

    def test_single_qubit_layout(self):
        cfg = EncoderConfig(1, 1)
        c = build_circuit([0.3], [1, 2, 3, 4], cfg)
        assert [g.kind for g in c.gates] == ["RY", "RY", "RZ", "RY", "RZ"]
        assert c.gates[0].param_id is None and c.gates[0].angle == 0.3
        assert [g.angle for g in c.gates[1:]] == [1, 2, 3, 4]

    def test_layer_structure_and_slot_order(self):
        c = build_circuit(np.zeros(4), np.arange(32.0), CFG)
        layer = c.gates[4:4 + 19]
        assert [g.kind for g in layer[8:11]] == ["CNOT"] * 3
        assert [(g.control, g.target) for g in layer[8:11]] == [(0, 1), (1, 2), (2, 3)]
        # qubit 2, layer 0: pre-RY, pre-RZ, post-RY, post-RZ
        assert layer[4].param_id == theta_index(0, 2, 0, 4) and layer[4].kind == "RY"
        assert layer[5].param_id == theta_index(0, 2, 1, 4) and layer[5].kind == "RZ"
        assert layer[11 + 4].param_id == theta_index(0, 2, 2, 4)
        assert layer[11 + 5].param_id == theta_index(0, 2, 3, 4)

    def test_zero_angles_act_as_identity(self):
        from qagnn.quantum import run_statevector
        psi = run_statevector(build_circuit(np.zeros(4), np.zeros(32), CFG))
        assert abs(psi[0]) == pytest.approx(1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            build_circuit(np.zeros(3), np.zeros(32), CFG)
        with pytest.raises(ValueError):
            build_circuit(np.zeros(4), np.zeros(31), CFG)


class TestEmbedding:
    def test_identity_circuit(self):
        np.testing.assert_allclose(embed_node(np.zeros(4), np.zeros(32), CFG), [1, 1, 1, 1])

    def test_equal_superposition(self):
        z = embed_node([PI / 2], np.zeros(4), EncoderConfig(1, 1))
        assert abs(z[0]) < 1e-12

    def test_bit_propagation_through_cnot_chain(self):
        # all qubits flipped by encoding; each layer's CNOT chain updates bits in order
        bits = [1, 1, 1, 1]
        for _ in range(2):
            for q in range(3):
                bits[q + 1] ^= bits[q]
        expected = [1 - 2 * b for b in bits]
        np.testing.assert_allclose(embed_node(np.full(4, PI), np.zeros(32), CFG), expected, atol=1e-12)

    def test_matches_kron_oracle(self, rng):
        x, th = rng.uniform(0, 1, 4), random_theta(rng)
        ref = oracles.statevector(build_circuit(x, th, CFG))
        expected = [oracles.z_expectation(ref, k, 4) for k in range(4)]
        np.testing.assert_allclose(embed_node(x, th, CFG), expected, atol=1e-12)

    def test_batch_equals_per_node(self, rng):
        X, th = rng.uniform(0, 1, (6, 4)), random_theta(rng)
        Z = embed_nodes(X, th, CFG)
        for i in range(6):
            np.testing.assert_allclose(Z[i], embed_node(X[i], th, CFG), atol=1e-14)

    def test_density_backend_matches_direct_simulation(self, rng):
        cfg = EncoderConfig(4, 2, backend="density", noise_p=0.03)
        x, th = rng.uniform(0, 1, 4), random_theta(rng)
        rho = run_density(build_circuit(x, th, cfg), NoiseModel(0.03))
        np.testing.assert_allclose(embed_node(x, th, cfg), [expect_z(rho, k) for k in range(4)], atol=1e-12)

    def test_sampled_backend_is_seeded_and_close(self, rng):
        x, th = rng.uniform(0, 1, 4), random_theta(rng)
        cfg = EncoderConfig(4, 2, backend="sampled", shots=200_000, seed=4)
        z = embed_node(x, th, cfg)
        np.testing.assert_array_equal(z, embed_node(x, th, cfg))
        np.testing.assert_allclose(z, embed_node(x, th, CFG), atol=0.015)

    def test_bounded(self, rng):
        for p in (0.0, 0.05):
            cfg = EncoderConfig(4, 2, backend="density" if p else "statevector", noise_p=p)
            Z = embed_nodes(rng.uniform(-PI, PI, (200, 4)), random_theta(rng), cfg)
            assert np.all(np.abs(Z) <= 1.0)

    def test_noise_shrinks_commuting_embeddings(self):
        # single-qubit circuits: isotropic depolarizing commutes with every rotation
        cfg0 = EncoderConfig(1, 2)
        x, th = [0.4], np.array([0.3, 0.2, -0.5, 0.1, 0.25, -0.7, 0.6, 0.05])
        prev = abs(embed_node(x, th, cfg0)[0])
        for p in (0.01, 0.05, 0.1):
            z = abs(embed_node(x, th, EncoderConfig(1, 2, backend="density", noise_p=p))[0])
            assert z < prev
            # 1 encoding gate + 8 ansatz rotations, one channel each
            assert z == pytest.approx(abs(embed_node(x, th, cfg0)[0]) * (1 - p) ** 9, abs=1e-12)
            prev = z


class TestJacobian:
    def test_single_qubit_closed_form(self):
        cfg = EncoderConfig(1, 1)
        th = np.array([0.4, 0.0, -0.9, 0.0])
        # RZ angles zero: <Z> = cos(x + th0 + th2)
        J = embed_jacobian([0.0], th, cfg)
        expected = -np.sin(0.4 - 0.9)
        assert J[0, 0] == pytest.approx(expected, abs=1e-12)
        assert J[0, 2] == pytest.approx(expected, abs=1e-12)

    def test_light_cone_zero(self, rng):
        # last layer's post rotations on qubit 3 cannot reach qubit 0
        th = random_theta(rng)
        J = embed_jacobian(rng.uniform(0, 1, 4), th, CFG)
        for slot in (2, 3):
            assert abs(J[0, theta_index(1, 3, slot, 4)]) < 1e-12
        # and qubit 3's readout is untouched by the final rotations on qubit 0
        for slot in (2, 3):
            assert abs(J[3, theta_index(1, 0, slot, 4)]) < 1e-12

    @pytest.mark.parametrize("backend,p,tol", [("statevector", 0.0, 1e-6), ("density", 0.05, 1e-6)])
    def test_matches_finite_differences(self, rng, backend, p, tol):
        cfg = EncoderConfig(4, 2, backend=backend, noise_p=p)
        x, th = rng.uniform(0, 1, 4), random_theta(rng)
        J = embed_jacobian(x, th, cfg)
        for k in range(4):
            fd = oracles.finite_difference(lambda t: embed_node(x, t, cfg)[k], th)
            np.testing.assert_allclose(J[k], fd, atol=tol)

    def test_batched_values_match_embedding(self, rng):
        X, th = rng.uniform(0, 1, (5, 4)), random_theta(rng)
        Z, J = embed_jacobians(X, th, CFG)
        np.testing.assert_allclose(Z, embed_nodes(X, th, CFG), atol=1e-14)
        assert J.shape == (5, 4, 32)

    def test_sampled_backend_rejected(self):
        with pytest.raises(UnsupportedBackend):
            embed_jacobian(np.zeros(4), np.zeros(32), EncoderConfig(backend="sampled"))


class TestKernels:
    def test_pauli_examples(self):
        assert pauli_kernel(np.zeros(4), np.zeros(4), np.zeros(32), CFG) == pytest.approx(4.0)
        assert pauli_kernel([0.0], [PI], np.zeros(4), EncoderConfig(1, 1)) == pytest.approx(-1.0)

    def test_pauli_is_embedding_dot_product(self, rng):
        x, y, th = rng.uniform(0, 1, 4), rng.uniform(0, 1, 4), random_theta(rng)
        expected = embed_node(x, th, CFG) @ embed_node(y, th, CFG)
        assert pauli_kernel(x, y, th, CFG) == pytest.approx(expected, abs=1e-12)
        assert abs(pauli_kernel(x, y, th, CFG)) <= 4

    def test_fidelity_examples(self, rng):
        one = EncoderConfig(1, 1)
        assert fidelity_kernel([0.0], [PI], np.zeros(4), one) == pytest.approx(0.0, abs=1e-15)
        assert fidelity_kernel([0.0], [PI / 2], np.zeros(4), one) == pytest.approx(0.5)
        x, th = rng.uniform(0, 1, 4), random_theta(rng)
        assert fidelity_kernel(x, x, th, CFG) == pytest.approx(1.0, abs=1e-12)

    def test_symmetry(self, rng):
        x, y, th = rng.uniform(0, 1, 4), rng.uniform(0, 1, 4), random_theta(rng)
        assert abs(pauli_kernel(x, y, th, CFG) - pauli_kernel(y, x, th, CFG)) < 1e-12
        assert abs(fidelity_kernel(x, y, th, CFG) - fidelity_kernel(y, x, th, CFG)) < 1e-12

    def test_fidelity_gram_matches_pairwise(self, rng):
        X, th = rng.uniform(0, 1, (5, 4)), random_theta(rng)
        G = fidelity_gram(X, th, CFG)
        for i in range(5):
            for j in range(5):
                assert G[i, j] == pytest.approx(fidelity_kernel(X[i], X[j], th, CFG), abs=1e-12)

    def test_fidelity_needs_noiseless_backend(self):
        for cfg in (EncoderConfig(backend="density", noise_p=0.1), EncoderConfig(backend="sampled")):
            with pytest.raises(UnsupportedBackend):
                fidelity_kernel(np.zeros(4), np.zeros(4), np.zeros(32), cfg)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            pauli_kernel(np.zeros(4), np.zeros(3), np.zeros(32), CFG)


class TestSpectrum:
    def test_single_rotation_is_pure_cosine(self):
        sp = fourier_spectrum_probe(np.zeros(4), EncoderConfig(1, 1), 0, [0.0], n_samples=64)
        assert sp.magnitude(1) == pytest.approx(0.5, abs=1e-12)
        assert sp.magnitude(-1) == pytest.approx(0.5, abs=1e-12)
        assert sp.magnitude(0) < 1e-12
        assert sp.out_of_set_energy < 1e-10

    def test_identity_ansatz_support(self):
        sp = fourier_spectrum_probe(np.zeros(32), CFG, 0, np.full(4, 0.5), n_samples=128)
        outside = ~np.isin(sp.frequencies, [-1, 0, 1])
        assert np.all(sp.magnitudes[outside] < 1e-12)

    def test_fft_against_direct_projection(self, rng):
        # independent check: project samples onto exp(-i w t) by explicit summation
        th, base = random_theta(rng), rng.uniform(0, 1, 4)
        sp = fourier_spectrum_probe(th, CFG, 2, base, n_samples=32, qubit=1)
        t = 2 * PI * np.arange(32) / 32
        X = np.repeat(base[None], 32, axis=0)
        X[:, 2] = t
        f = embed_nodes(X, th, CFG)[:, 1]
        for w in (-3, -1, 0, 2, 5):
            c = np.mean(f * np.exp(-1j * w * t))
            assert sp.magnitude(w) == pytest.approx(abs(c), abs=1e-12)

    def test_random_parameters_stay_in_band(self, rng):
        for k in range(4):
            sp = fourier_spectrum_probe(random_theta(rng), CFG, k, rng.uniform(0, 1, 4), 256)
            assert sp.relative_out_of_set < 1e-8

    def test_rejects_bad_sample_count_and_backend(self):
        with pytest.raises(ValueError):
            fourier_spectrum_probe(np.zeros(32), CFG, 0, np.zeros(4), n_samples=100)
        with pytest.raises(UnsupportedBackend):
            fourier_spectrum_probe(np.zeros(32), EncoderConfig(backend="sampled"), 0, np.zeros(4))
