"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

The lines are printed in the pytest terminal summary, or directly when the
file is run as a script (``python3 tests/test_acceptance.py``).
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from dampcode import channels, circuits, code, experiment, noise, qmat, recovery
from dampcode.experiment import TEST_STATES
from dampcode.recovery import ALL_SCHEMES, SchemeKind

GRID21 = [float(g) for g in np.linspace(0, 1, 21)]
RESULTS: list[tuple[int, bool, str, float]] = []


class Criterion:
    """Times a criterion body and records its verdict."""

    def __init__(self, number, budget_s=None):
        self.number = number
        self.budget = budget_s
        self.detail = ""

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        dt = time.perf_counter() - self.t0
        ok = exc_type is None
        if ok and self.budget is not None and dt > self.budget:
            ok = False
            self.detail += f" (over the {self.budget:g} s budget)"
        if exc_type is AssertionError and str(exc):
            self.detail = self.detail or str(exc).splitlines()[0]
        RESULTS.append((self.number, ok, self.detail.strip(), dt))
        if ok is False and exc_type is None:
            raise AssertionError(f"criterion {self.number}: {self.detail}")
        return False


def format_results():
    lines = []
    for n, ok, detail, dt in sorted(RESULTS):
        lines.append(f"{'PASS' if ok else 'FAIL'} criterion {n} [{dt:6.2f} s] {detail}")
    return lines


def test_criterion_1_exact_formulas():
    with Criterion(1, budget_s=1.0) as c:
        worst = 0.0
        for g in GRID21:
            op = recovery.optimal_params(g)
            for u in (op.u1, op.u2):
                worst = max(worst, np.abs(u.conj().T @ u - np.eye(2)).max())
        op0 = recovery.optimal_params(0.0)
        deg = max(abs(op0.s - 1), abs(op0.t - 1), np.abs(op0.u1 + np.eye(2)).max())
        explicit = {
            (0, 1): np.array([[1, -1], [0, 0], [1, 1], [0, 0]]) / math.sqrt(2),
            (1, 0): np.array([[1, -1], [1, 1], [0, 0], [0, 0]]) / math.sqrt(2),
            (1, 1): np.array([[1, 1], [1, -1], [0, 0], [0, 0]]) / math.sqrt(2),
        }
        v_ok = True
        for g in (0.1, 0.5, 0.9):
            vs = recovery.generic_polar_recovery(code.ENCODER, g)
            for syn in ((0, 1), (1, 0)):
                v_ok &= qmat.columns_equal_up_to_phase(vs[syn], explicit[syn], atol=1e-10)
            # t11 has rank one: the second column of v11 is an arbitrary completion
            v_ok &= qmat.columns_equal_up_to_phase(vs[(1, 1)][:, :1], explicit[(1, 1)][:, :1], atol=1e-10)
            r = math.sqrt(2) / math.sqrt(1 + (1 - g) ** 2)
            v00 = 0.5 * np.array([[r, r], [1, -1], [1, -1], [r * (1 - g), r * (1 - g)]])
            v_ok &= qmat.columns_equal_up_to_phase(vs[(0, 0)], v00, atol=1e-10)
        c.detail = f"unitarity {worst:.1e}, gamma=0 degeneration {deg:.1e}, isometries match={bool(v_ok)}"
        assert worst <= 1e-12 and deg <= 1e-12 and v_ok, c.detail


def test_criterion_2_decoherence_endpoint():
    with Criterion(2) as c:
        p = noise.decoherence_estimate(61.0, 550.0).p_sys
        c.detail = f"decoherence_estimate(61 ms, 550 ms) = {p:.5f}"
        assert abs(p - 0.099) <= 0.001, c.detail


def test_criterion_3_ideal_ordering():
    with Criterion(3, budget_s=5.0) as c:
        margin, eq = math.inf, 0.0
        for g in GRID21:
            fo = experiment.channel_fidelity(SchemeKind.OPTIMAL, g)
            fa = experiment.channel_fidelity(SchemeKind.STANDARD_A, g)
            fb = experiment.channel_fidelity(SchemeKind.STANDARD_B, g)
            fn = experiment.channel_fidelity(SchemeKind.NO_CORRECTION, g)
            margin = min(margin, fo - fa, fo - fn)
            eq = max(eq, abs(fa - fb))
        c.detail = f"min margin {margin:.2e}, max |F_A - F_B| {eq:.1e}"
        assert margin >= -1e-9 and eq <= 1e-12, c.detail


def test_criterion_4_oracle_equivalences():
    with Criterion(4, budget_s=10.0) as c:
        gadget = 0.0
        for g in GRID21:
            kraus = channels.damping_kraus(g)
            for k in (0, 1):
                gadget = max(gadget, np.abs(circuits.branch_map(g, k) - kraus[k]).max())
        polar = 0.0
        for g in GRID21:
            for psi in TEST_STATES.values():
                for b in code.syndrome_branches(code.encode(psi), g):
                    if not b.empty:
                        a = recovery.apply_recovery(b, SchemeKind.OPTIMAL, g)
                        p = recovery.apply_recovery(b, SchemeKind.GENERIC_POLAR, g)
                        polar = max(polar, np.abs(a - p).max())
        rng = np.random.default_rng(0)
        branch_sum = 0.0
        for g in GRID21:
            ch = code.channel_pair(g)
            m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            rho = m @ m.conj().T / np.trace(m @ m.conj().T)
            total = sum(channels.apply_branch(ch, rho, lab)[0] for lab in ch.labels)
            branch_sum = max(branch_sum, np.abs(total - channels.apply(ch, rho)).max())
        c.detail = f"(a) {gadget:.1e} (b) {polar:.1e} (c) {branch_sum:.1e}"
        assert gadget <= 1e-9 and polar <= 1e-8 and branch_sum <= 1e-12, c.detail


def test_criterion_5_sampler_consistency():
    with Criterion(5, budget_s=120.0) as c:
        runs = exceed = 0
        for kind in ALL_SCHEMES:
            for g in (0.0, 0.25, 0.5, 0.75, 1.0):
                exact = experiment.channel_fidelity(kind, g)
                for seed in range(10):
                    res = experiment.shot_experiment(kind, g, shots=100_000, seed=seed)
                    runs += 1
                    exceed += abs(res.fidelity - exact) > 3 * res.stderr + 1e-12
        # a correct sampler exceeds 3 stderr in ~0.3% of runs; allow 1%
        allowed = math.floor(0.01 * runs)
        c.detail = f"{exceed}/{runs} runs outside 3 stderr (allowed {allowed})"
        assert exceed <= allowed, c.detail


def test_criterion_6_two_design():
    with Criterion(6, budget_s=60.0) as c:
        worst = 0.0
        for kind in ALL_SCHEMES:
            for g in (0.3, 0.7):
                m, s = experiment.haar_average(kind, g, 10_000, seed=0)
                worst = max(worst, abs(m - experiment.channel_fidelity(kind, g)) / s)
        c.detail = f"max |Haar - six-state| = {worst:.2f} sigma"
        assert worst <= 3.0, c.detail


def test_criterion_7_noisy_phenomenology():
    with Criterion(7, budget_s=30.0) as c:
        grid = np.linspace(0, 1, 41)
        gc = {
            name: experiment.scheme_crossover(SchemeKind.OPTIMAL, grid, noise.load_noise_model(name))
            for name in ("ibmq", "optical")
        }
        ideal = experiment.scheme_crossover(SchemeKind.OPTIMAL, grid, noise.ideal_model())
        fmt = lambda v: "none" if v is None else f"{v:.3f}"
        c.detail = f"gamma_c ibmq={fmt(gc['ibmq'])}, optical={fmt(gc['optical'])}, noiseless={fmt(ideal)}"
        interior = all(v is not None and 0 < v < 1 for v in gc.values())
        ordered = interior and gc["optical"] > gc["ibmq"]
        c.detail += f"; interior={interior}, optical > ibmq={ordered}"
        assert interior and ideal is None and ordered, c.detail


def test_criterion_8_shot_loss():
    with Criterion(8, budget_s=10.0) as c:
        # ideal gates with loss on the branches whose recovery uses the CNOT
        model = noise.NoiseModel(shot_survival=0.5, name="cnot-loss")
        margin = math.inf
        for g in GRID21:
            fi = experiment.channel_fidelity(SchemeKind.OPTIMAL, g, model, ideal_weights=True)
            fm = experiment.channel_fidelity(SchemeKind.OPTIMAL, g, model)
            margin = min(margin, fi - fm)
        c.detail = f"min(F_ideal - F_measured) = {margin:.2e}"
        assert margin >= -1e-12, c.detail


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "dampcode.cli", *args], capture_output=True, check=True).stdout


def test_criterion_9_determinism():
    with Criterion(9) as c:
        exact = [_cli("sweep", "--gammas", "0:1:21", "--schemes", "all", "--noise", "ibmq") for _ in range(2)]
        seeded = [_cli("shots", "--gammas", "0:1:5", "--shots", "5000", "--seed", "11") for _ in range(2)]
        other = _cli("shots", "--gammas", "0:1:5", "--shots", "5000", "--seed", "12")
        c.detail = f"exact identical={exact[0] == exact[1]}, seeded identical={seeded[0] == seeded[1]}"
        assert exact[0] == exact[1] and seeded[0] == seeded[1] and seeded[0] != other, c.detail


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
    print("\n".join(format_results()))
    sys.exit(0 if all(ok for _, ok, _, _ in RESULTS) else 1)
