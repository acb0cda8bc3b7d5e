import math

import numpy as np
import pytest

from dampcode import channels, circuits, code, qmat
from dampcode.circuits import Circuit

GRID = np.linspace(0, 1, 21)


def test_empty_circuit_is_identity():
    assert np.allclose(circuits.circuit_to_unitary(Circuit(2)), np.eye(4))


def test_bell_pair():
    c = Circuit(2, (circuits.h(0), circuits.cnot(0, 1)))
    psi = circuits.circuit_to_unitary(c) @ qmat.basis_ket("00")
    assert np.allclose(psi, np.array([1, 0, 0, 1]) / math.sqrt(2))


def test_qubit_zero_is_leftmost():
    c = Circuit(2, (circuits.x(0),))
    assert np.allclose(circuits.circuit_to_unitary(c) @ qmat.basis_ket("00"), qmat.basis_ket("10"))


def test_encoder_on_zero():
    psi = circuits.circuit_to_unitary(circuits.encoder_circuit()) @ qmat.basis_ket("00")
    plus = np.array([1, 1]) / math.sqrt(2)
    assert np.allclose(psi, np.kron(plus, plus))


def test_encoder_matches_isometry():
    u = circuits.circuit_to_unitary(circuits.encoder_circuit())
    assert np.allclose(u[:, [0, 2]], code.ENCODER)


def test_random_circuits_unitary():
    rng = np.random.default_rng(0)
    for _ in range(100):
        width = int(rng.integers(1, 5))
        gates = []
        for _ in range(int(rng.integers(0, 8))):
            if width > 1 and rng.uniform() < 0.4:
                a, b = rng.choice(width, 2, replace=False)
                gates.append(circuits.cry(rng.uniform(0, 4), int(a), int(b)) if rng.uniform() < 0.5 else circuits.cnot(int(a), int(b)))
            else:
                q = int(rng.integers(width))
                gates.append([circuits.h(q), circuits.x(q), circuits.z(q), circuits.ry_gate(rng.uniform(0, 4), q)][rng.integers(4)])
        u = circuits.circuit_to_unitary(Circuit(width, tuple(gates)))
        assert np.allclose(u.conj().T @ u, np.eye(1 << width), atol=1e-10)


def test_cry_angle_values():
    assert circuits.cry_angle(0.0) == 0.0
    assert circuits.cry_angle(0.5) == pytest.approx(math.pi / 2)
    assert circuits.cry_angle(1.0) == pytest.approx(math.pi)


def test_gadget_at_zero_never_fires():
    for psi in ([1, 0], [0, 1], [1, 1]):
        rho = np.kron(qmat.projector(qmat.ket(psi, normalize=True)), np.diag([1, 0]))
        out, p = circuits.simulate_with_ancilla_postselect(circuits.detected_ad_circuit(0.0), rho, {1: 0})
        assert p == pytest.approx(1.0)
        assert np.allclose(out, rho.reshape(2, 2, 2, 2)[:, 0, :, 0])


def test_gadget_branch_on_excited():
    rho = np.kron(np.diag([0.0, 1.0]), np.diag([1.0, 0.0]))
    out, p = circuits.simulate_with_ancilla_postselect(circuits.detected_ad_circuit(0.3), rho, {1: 0})
    assert p == pytest.approx(0.7)
    assert np.allclose(out, np.diag([0.0, 0.7]))


@pytest.mark.parametrize("g", GRID)
def test_gadget_branch_maps_equal_kraus(g):
    kraus = channels.damping_kraus(g)
    for k in (0, 1):
        m = circuits.branch_map(g, k)
        assert np.linalg.norm(m - kraus[k], 2) < 1e-9


@pytest.mark.parametrize("g", [0.0, 0.3, 0.5, 0.9])
def test_postselected_gadget_matches_branches(g):
    ch = channels.amplitude_damping(g)
    rng = np.random.default_rng(5)
    m = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    rho = m @ m.conj().T
    rho /= np.trace(rho)
    for k in (0, 1):
        out, p = circuits.simulate_with_ancilla_postselect(circuits.detected_ad_circuit(g), np.kron(rho, np.diag([1, 0])), {1: k})
        ref, pref = channels.apply_branch(ch, rho, (k,))
        assert np.allclose(out, ref, atol=1e-10) and p == pytest.approx(pref, abs=1e-10)


def test_encoded_pipeline_syndrome_probs():
    c = circuits.encoded_channel_circuit(0.5)
    rho = qmat.projector(qmat.basis_ket("0000"))
    probs = {}
    for i in (0, 1):
        for j in (0, 1):
            _, probs[(i, j)] = circuits.simulate_with_ancilla_postselect(c, rho, {2: i, 3: j})
    ref = {s: channels.apply_branch(code.channel_pair(0.5), code.encode(np.array([1, 0])), s)[1] for s in code.SYNDROMES}
    assert probs == pytest.approx(ref, abs=1e-10)
    assert probs == pytest.approx({(0, 0): 0.5625, (0, 1): 0.1875, (1, 0): 0.1875, (1, 1): 0.0625})


def test_encoded_pipeline_at_zero():
    c = circuits.encoded_channel_circuit(0.0)
    _, p = circuits.simulate_with_ancilla_postselect(c, qmat.projector(qmat.basis_ket("1000")), {2: 0, 3: 0})
    assert p == pytest.approx(1.0)


def test_encoded_pipeline_total_probability():
    rng = np.random.default_rng(9)
    c = circuits.encoded_channel_circuit(rng.uniform())
    psi = np.kron(qmat.ket(rng.standard_normal(2) + 1j * rng.standard_normal(2), normalize=True), qmat.basis_ket("000"))
    total = sum(
        circuits.simulate_with_ancilla_postselect(c, qmat.projector(psi), {2: i, 3: j})[1] for i in (0, 1) for j in (0, 1)
    )
    assert total == pytest.approx(1.0, abs=1e-10)


def test_waveplate_angles():
    assert circuits.waveplate_angle(0.0, "A0") == pytest.approx(45.0)
    assert circuits.waveplate_angle(1.0, "A1") == pytest.approx(45.0)
    assert circuits.waveplate_angle(0.5, "A0") == pytest.approx(math.degrees(0.5 * math.asin(math.sqrt(0.5))))
    assert circuits.waveplate_angle(0.5, "A0") == pytest.approx(22.5)
    with pytest.raises(circuits.CircuitError):
        circuits.waveplate_angle(0.5, "B")


def test_decoder_round_trip():
    for psi in ([1, 0], [0, 1], [1, 1], [1, -1], [1, 1j], [1, -1j]):
        ket = qmat.ket(psi, normalize=True)
        out = circuits.decoder_measurement(code.encode(ket))
        assert qmat.fidelity_pure(ket, out) == pytest.approx(1.0, abs=1e-10)


def test_measurement_must_be_last():
    with pytest.raises(circuits.CircuitError):
        Circuit(2, (circuits.measure(1), circuits.h(0)))
    with pytest.raises(circuits.CircuitError):
        Circuit(2, (circuits.measure(1), circuits.measure(1)))


def test_gate_validation():
    with pytest.raises(circuits.CircuitError):
        Circuit(2, (circuits.cnot(0, 2),))
    with pytest.raises(circuits.CircuitError):
        circuits.cnot(1, 1)
    with pytest.raises(circuits.CircuitError):
        circuits.u_gate(np.array([[1, 1], [0, 1]]), 0)


def test_recovery_circuit_layout():
    h = circuits.H
    c = circuits.recovery_circuit(np.eye(2), np.eye(2), h, h)
    assert c.measured == (1,)
    text = circuits.draw(c)
    assert text.splitlines()[0].startswith("q0:") and "M" in text.splitlines()[1]
    assert circuits.recovery_circuit(h, h, h, h, keep=1).measured == (0,)


def test_measure_and_correct_flip():
    rho = np.kron(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    assert np.allclose(circuits.measure_and_correct(rho, circuits.X), np.diag([0.0, 1.0]))
    assert np.allclose(circuits.measure_and_correct(rho, circuits.X, flip=1.0), np.diag([1.0, 0.0]))
