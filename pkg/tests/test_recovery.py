import math

import numpy as np
import pytest

from dampcode import channels, code, qmat, recovery, verify
from dampcode.circuits import H, X, Z
from dampcode.experiment import TEST_STATES
from dampcode.recovery import OptimalParams, SchemeKind

GRID = [float(g) for g in np.linspace(0, 1, 21)]
I2 = np.eye(2)
S2 = 1 / math.sqrt(2)


def test_optimal_params_at_zero():
    op = recovery.optimal_params(0.0)
    assert op.s == pytest.approx(1.0, abs=1e-12) and op.t == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(op.u1, -I2, atol=1e-12)
    assert np.allclose(op.u2, [[0, 1], [-1, 0]], atol=1e-12)


def test_optimal_params_at_one():
    op = recovery.optimal_params(1.0)
    assert op.s == pytest.approx(math.sqrt(2)) and op.t == pytest.approx(0.0)


def test_optimal_params_half():
    op = recovery.optimal_params(0.5)
    assert op.s == pytest.approx(math.sqrt(2) / math.sqrt(1.25))
    assert op.t == pytest.approx(math.sqrt(2) * 0.5 / math.sqrt(1.25))
    for u in (op.u1, op.u2):
        assert np.allclose(u.conj().T @ u, I2, atol=1e-12)


@pytest.mark.parametrize("g", GRID)
def test_u1_u2_unitary(g):
    op = recovery.optimal_params(g)
    for u in (op.u1, op.u2):
        assert np.allclose(u.conj().T @ u, I2, atol=1e-12)


def test_table_rows():
    ops = recovery.scheme_ops(SchemeKind.STANDARD_A, (0, 0))
    assert [np.allclose(a, b) for a, b in zip(ops.as_tuple(), (I2, I2, H, H, I2))] == [True] * 5
    ops = recovery.scheme_ops(SchemeKind.STANDARD_A, (1, 0))
    assert np.allclose(ops.v3, H @ X) and np.allclose(ops.v4, H) and np.allclose(ops.p, X)
    ops = recovery.scheme_ops(SchemeKind.STANDARD_B, (1, 1))
    assert np.allclose(ops.v3, H) and ops.keep == 0
    ops = recovery.scheme_ops(SchemeKind.OPTIMAL, (0, 0), 0.3)
    assert np.allclose(ops.v2, H) and np.allclose(ops.p, Z)


def test_optimal_at_zero_is_minus_h():
    ops = recovery.scheme_ops(SchemeKind.OPTIMAL, (0, 0), 0.0)
    assert np.allclose(ops.v3, -H)
    b = code.syndrome_branches(code.encode(TEST_STATES["+i"]), 0.0)[0]
    assert np.allclose(
        recovery.apply_recovery(b, SchemeKind.OPTIMAL, 0.0),
        recovery.apply_recovery(b, SchemeKind.STANDARD_A, 0.0),
    )


def test_scheme_ops_errors():
    with pytest.raises(recovery.RecoveryError):
        recovery.scheme_ops(SchemeKind.NO_CORRECTION, (0, 0))
    with pytest.raises(recovery.RecoveryError):
        recovery.scheme_ops(SchemeKind.GENERIC_POLAR, (0, 0))
    with pytest.raises(recovery.RecoveryError):
        recovery.scheme_ops(SchemeKind.OPTIMAL, (2, 0))
    with pytest.raises(recovery.RecoveryError):
        recovery.SyndromeOps(I2, I2, np.ones((2, 2)), I2, I2)


@pytest.mark.parametrize(
    "name,kind",
    [("optimal", SchemeKind.OPTIMAL), ("Standard-A", SchemeKind.STANDARD_A), ("polar", SchemeKind.GENERIC_POLAR), ("none", SchemeKind.NO_CORRECTION)],
)
def test_parse_scheme(name, kind):
    assert recovery.parse_scheme(name) is kind


def test_parse_scheme_unknown():
    with pytest.raises(recovery.RecoveryError):
        recovery.parse_scheme("bogus")


def test_ops_unitary_everywhere():
    for kind in (SchemeKind.STANDARD_A, SchemeKind.STANDARD_B, SchemeKind.OPTIMAL):
        for syn in code.SYNDROMES:
            for g in GRID:
                for u in recovery.scheme_ops(kind, syn, g).as_tuple():
                    assert np.allclose(u.conj().T @ u, I2, atol=1e-10)


@pytest.mark.parametrize("name", list(TEST_STATES))
def test_standard_recovers_noiseless(name):
    psi = TEST_STATES[name]
    b = code.syndrome_branches(code.encode(psi), 0.0)[0]
    out = recovery.apply_recovery(b, SchemeKind.STANDARD_A, 0.0)
    assert qmat.fidelity_pure(psi, out) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("kind", [SchemeKind.STANDARD_A, SchemeKind.STANDARD_B, SchemeKind.OPTIMAL, SchemeKind.GENERIC_POLAR])
def test_double_decay_gives_plus(kind):
    # A1 A1 sends the code to |00>; encoded |-> never reaches this branch
    b = code.syndrome_branches(code.encode(TEST_STATES["+"]), 0.6)[3]
    assert np.allclose(b.normalized(), qmat.projector(qmat.basis_ket("00")))
    out = recovery.apply_recovery(b, kind, 0.6)
    assert qmat.fidelity_pure(TEST_STATES["+"], out) == pytest.approx(1.0, abs=1e-10)
    assert qmat.fidelity_pure(TEST_STATES["-"], out) == pytest.approx(0.0, abs=1e-10)
    assert code.syndrome_branches(code.encode(TEST_STATES["-"]), 0.6)[3].empty


@pytest.mark.parametrize("g", GRID)
def test_standard_a_equals_b(g):
    for psi in TEST_STATES.values():
        for b in code.syndrome_branches(code.encode(psi), g):
            if not b.empty:
                a = recovery.apply_recovery(b, SchemeKind.STANDARD_A, g)
                c = recovery.apply_recovery(b, SchemeKind.STANDARD_B, g)
                assert np.allclose(a, c, rtol=0, atol=1e-12)


def _explicit_v(g):
    r = math.sqrt(2) / math.sqrt(1 + (1 - g) ** 2)
    return {
        (0, 0): 0.5 * np.array([[r, r], [1, -1], [1, -1], [r * (1 - g), r * (1 - g)]]),
        (0, 1): S2 * np.array([[1, -1], [0, 0], [1, 1], [0, 0]]),
        (1, 0): S2 * np.array([[1, -1], [1, 1], [0, 0], [0, 0]]),
        (1, 1): S2 * np.array([[1, 1], [1, -1], [0, 0], [0, 0]]),
    }


@pytest.mark.parametrize("g", [0.1, 0.5, 0.9])
def test_polar_isometries_match_explicit(g):
    vs = recovery.generic_polar_recovery(code.ENCODER, g)
    ref = _explicit_v(g)
    for syn in ((0, 0), (0, 1), (1, 0)):
        assert qmat.columns_equal_up_to_phase(vs[syn], ref[syn], atol=1e-10)
    # t11 has rank one, so only the first column is fixed by the branch
    assert qmat.columns_equal_up_to_phase(vs[(1, 1)][:, :1], ref[(1, 1)][:, :1], atol=1e-10)
    assert qmat.is_isometry(vs[(1, 1)])


def test_v11_range_matches_explicit():
    # any completion of v11 reproduces the explicit v11 on the branch state
    g = 0.4
    v = recovery.generic_polar_recovery(code.ENCODER, g)[(1, 1)]
    ref = _explicit_v(g)[(1, 1)]
    for psi in TEST_STATES.values():
        b = code.syndrome_branches(code.encode(psi), g)[3]
        if b.empty:
            continue
        rho = b.normalized()
        assert np.allclose(v.conj().T @ rho @ v, ref.T @ rho @ ref, atol=1e-12)


@pytest.mark.parametrize("g", GRID)
def test_optimal_equals_polar(g):
    for psi in TEST_STATES.values():
        for b in code.syndrome_branches(code.encode(psi), g):
            if not b.empty:
                a = recovery.apply_recovery(b, SchemeKind.OPTIMAL, g)
                p = recovery.apply_recovery(b, SchemeKind.GENERIC_POLAR, g)
                assert np.allclose(a, p, rtol=0, atol=1e-8)


def test_polar_recover_leak():
    v = recovery.generic_polar_recovery(code.ENCODER, 0.5)[(0, 1)]
    rho = np.eye(4) / 4
    out, leak = recovery.polar_recover(v, rho)
    assert np.trace(out).real == pytest.approx(1.0)
    assert leak == pytest.approx(0.5)
    with pytest.raises(recovery.RecoveryError):
        recovery.polar_recover(v, qmat.projector(qmat.basis_ket("01")))


def test_empty_branch_rejected():
    b = code.syndrome_branches(code.encode(TEST_STATES["0"]), 0.0)[3]
    with pytest.raises(recovery.RecoveryError):
        recovery.apply_recovery(b, SchemeKind.OPTIMAL, 0.0)


def test_no_correction_plus_half():
    out = recovery.no_correction_channel(0.5, qmat.projector(TEST_STATES["+"]))
    want = (1 + math.sqrt(0.5)) ** 2 / 4 + 0.125
    assert qmat.fidelity_pure(TEST_STATES["+"], out) == pytest.approx(want)


def test_no_correction_endpoints():
    rho = qmat.projector(TEST_STATES["1"])
    assert np.allclose(recovery.no_correction_channel(0.0, rho), rho)
    out = recovery.no_correction_channel(1.0, rho)
    assert np.allclose(out, np.diag([1, 0])) and qmat.fidelity_pure(TEST_STATES["1"], out) == 0.0


def test_hook_sees_every_gate():
    seen = []

    def hook(rho, kind, qubits):
        seen.append((kind, qubits))
        return rho

    ops = recovery.scheme_ops(SchemeKind.STANDARD_A, (1, 1))
    recovery.run_recovery_ops(ops, np.eye(4) / 4, after_gate=hook)
    # mirrored layout: the CNOT is controlled by A and targets B
    assert seen == [("1q", (1,)), ("1q", (0,)), ("2q", (0, 1)), ("1q", (1,)), ("1q", (0,))]


def test_cnot_active():
    for kind in (SchemeKind.STANDARD_A, SchemeKind.STANDARD_B, SchemeKind.OPTIMAL, SchemeKind.GENERIC_POLAR):
        assert [recovery.cnot_active(kind, s) for s in code.SYNDROMES] == [True, False, True, False]
    assert not recovery.cnot_active(SchemeKind.NO_CORRECTION, (0, 0))


def test_recovered_output_trace():
    g = 0.35
    branches = code.syndrome_branches(code.encode(TEST_STATES["+i"]), g)
    for kind in recovery.CORRECTED_SCHEMES:
        assert np.trace(recovery.recovered_output(kind, g, branches)).real == pytest.approx(1.0)


def test_mutated_u1_breaks_verify(monkeypatch):
    """A sign error in U1 must be caught by the invariant suite."""
    real = recovery.optimal_params

    def broken(gamma):
        op = real(gamma)
        u1 = op.u1.T.copy()  # flips the sign of both off-diagonal entries
        return OptimalParams(op.gamma, op.s, op.t, u1, op.u2)

    assert verify.check_polar_vs_closed_form()[0]
    monkeypatch.setattr(recovery, "optimal_params", broken)
    ok, detail = verify.check_polar_vs_closed_form()
    assert not ok, detail
