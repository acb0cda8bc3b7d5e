"""Self-contained invariant suite behind ``dampcode verify``.

Each check returns ``(passed, detail)``. Checks call library code through
module attributes, so a patched implementation is what gets verified.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import channels, circuits, code, experiment, noise, qmat, recovery
from .recovery import SchemeKind

GRID21 = tuple(float(g) for g in np.linspace(0.0, 1.0, 21))


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _kets():
    return list(experiment.TEST_STATES.values())


def check_syndrome_ops_unitary():
    worst = 0.0
    for kind in (SchemeKind.STANDARD_A, SchemeKind.STANDARD_B, SchemeKind.OPTIMAL):
        for syn in code.SYNDROMES:
            for g in GRID21:
                for u in recovery.scheme_ops(kind, syn, g).as_tuple():
                    worst = max(worst, np.abs(u.conj().T @ u - np.eye(2)).max())
    return worst <= 1e-10, f"max |U^H U - I| = {worst:.2e}"


def check_optimal_degeneration():
    op = recovery.optimal_params(0.0)
    err = max(abs(op.s - 1.0), abs(op.t - 1.0), np.abs(op.u1 + np.eye(2)).max())
    return err <= 1e-12, f"gamma=0 deviation {err:.2e}"


def check_polar_vs_closed_form():
    worst = 0.0
    for g in GRID21:
        for psi in _kets():
            for b in code.syndrome_branches(code.encode(psi), g):
                if b.empty:
                    continue
                a = recovery.apply_recovery(b, SchemeKind.OPTIMAL, g)
                p = recovery.apply_recovery(b, SchemeKind.GENERIC_POLAR, g)
                worst = max(worst, np.abs(a - p).max())
    return worst <= 1e-8, f"max entry difference {worst:.2e}"


def check_standard_a_equals_b():
    worst = 0.0
    for g in GRID21:
        for psi in _kets():
            for b in code.syndrome_branches(code.encode(psi), g):
                if b.empty:
                    continue
                a = recovery.apply_recovery(b, SchemeKind.STANDARD_A, g)
                c = recovery.apply_recovery(b, SchemeKind.STANDARD_B, g)
                worst = max(worst, np.abs(a - c).max())
    return worst <= 1e-12, f"max entry difference {worst:.2e}"


def check_gate_route_matches_map_route():
    """Gate-IR simulation of every recovery circuit against the direct route."""
    worst = 0.0
    for g in (0.0, 0.3, 0.7, 1.0):
        for kind in (SchemeKind.STANDARD_A, SchemeKind.STANDARD_B, SchemeKind.OPTIMAL):
            for psi in _kets():
                for b in code.syndrome_branches(code.encode(psi), g):
                    if b.empty:
                        continue
                    ops = recovery.scheme_ops(kind, b.syndrome, g)
                    circ = circuits.recovery_circuit(ops.v1, ops.v2, ops.v3, ops.v4, keep=ops.keep)
                    meas = circ.measured[0]
                    out = np.zeros((2, 2), dtype=np.complex128)
                    for m in (0, 1):
                        st, _ = circuits.simulate_with_ancilla_postselect(circ, b.normalized(), {meas: m})
                        out += ops.p @ st @ ops.p.conj().T if m else st
                    direct = recovery.apply_recovery(b, kind, g)
                    worst = max(worst, np.abs(out - direct).max())
    return worst <= 1e-10, f"max entry difference {worst:.2e}"


def _avg(kind, g, model=None):
    return experiment.channel_fidelity(kind, g, model)


def check_gamma_zero_identity():
    fs = {k.value: _avg(k, 0.0) for k in recovery.ALL_SCHEMES}
    worst = max(abs(1.0 - f) for f in fs.values())
    return worst <= 1e-9, f"max |1 - F| at gamma=0: {worst:.2e}"


def check_ideal_ordering():
    worst = math.inf
    eq = 0.0
    for g in GRID21:
        fo = _avg(SchemeKind.OPTIMAL, g)
        fa = _avg(SchemeKind.STANDARD_A, g)
        fb = _avg(SchemeKind.STANDARD_B, g)
        fn = _avg(SchemeKind.NO_CORRECTION, g)
        worst = min(worst, fo - fa, fo - fn)
        eq = max(eq, abs(fa - fb))
    ok = worst >= -1e-9 and eq <= 1e-12
    return ok, f"min margin {worst:.2e}, |F_A - F_B| <= {eq:.2e}"


def check_no_correction_closed_form():
    worst = 0.0
    for g in GRID21:
        ref = (3.0 + 2.0 * math.sqrt(1.0 - g) + (1.0 - g)) / 6.0
        worst = max(worst, abs(_avg(SchemeKind.NO_CORRECTION, g) - ref))
    return worst <= 1e-12, f"max deviation {worst:.2e}"


def check_channel_sum_of_branches():
    rng = np.random.default_rng(7)
    worst = 0.0
    for g in GRID21:
        ch = code.channel_pair(g)
        m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        rho = m @ m.conj().T
        rho /= np.trace(rho)
        total = sum(channels.apply_branch(ch, rho, lab)[0] for lab in ch.labels)
        worst = max(worst, np.abs(total - channels.apply(ch, rho)).max())
    return worst <= 1e-12, f"max entry difference {worst:.2e}"


def check_gadget_branch_maps():
    worst = 0.0
    for g in GRID21:
        kraus = channels.damping_kraus(g)
        for k in (0, 1):
            worst = max(worst, np.abs(circuits.branch_map(g, k) - kraus[k]).max())
    return worst <= 1e-9, f"max entry difference {worst:.2e}"


def check_polar_factorization():
    rng = np.random.default_rng(11)
    worst = 0.0
    for shape in ((2, 2), (4, 2), (4, 4)):
        for _ in range(5):
            t = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
            v, p = qmat.polar_decompose(t)
            worst = max(
                worst,
                np.abs(v @ p - t).max(),
                np.abs(v.conj().T @ v - np.eye(shape[1])).max(),
                max(0.0, -float(np.min(np.linalg.eigvalsh(p)))),
            )
    return worst <= 1e-10, f"max residual {worst:.2e}"


def check_decoherence_estimate():
    d = [noise.decoherence_estimate(t, 550.0).p_sys for t in np.linspace(0, 2000, 41)]
    t2 = [noise.decoherence_estimate(61.0, t).p_sys for t in np.linspace(10, 2000, 41)]
    mono = all(b >= a for a, b in zip(d, d[1:])) and all(b <= a for a, b in zip(t2, t2[1:]))
    bounded = max(d + t2) < 0.5
    back = noise.decoherence_estimate(2680.0, noise.t2_from_estimate(2680.0, 0.035)).p_sys
    ok = mono and bounded and abs(back - 0.035) <= 1e-12
    return ok, f"monotone={mono}, bounded={bounded}, round trip {back:.12f}"


def check_readout_confuse():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(20):
        p = rng.dirichlet(np.ones(4))
        e = rng.uniform(0, 0.5, size=2)
        worst = max(worst, abs(noise.readout_confuse(p, e).sum() - 1.0))
        worst = max(worst, np.abs(noise.confusion_matrix(e).sum(axis=0) - 1.0).max())
    return worst <= 1e-12, f"max normalization error {worst:.2e}"


def check_zero_noise_pipeline():
    model = noise.ideal_model()
    worst = 0.0
    for g in GRID21[::4]:
        for kind in recovery.ALL_SCHEMES:
            for psi in _kets():
                out = noise.noisy_pipeline(kind, g, model, psi)
                if kind is SchemeKind.NO_CORRECTION:
                    ref = recovery.no_correction_channel(g, np.outer(psi, psi.conj()))
                else:
                    ref = recovery.recovered_output(kind, g, code.syndrome_branches(code.encode(psi), g))
                worst = max(worst, np.abs(out - ref).max())
    return worst <= 1e-12, f"max entry difference {worst:.2e}"


def check_crossover_monotone():
    base = noise.load_noise_model("optical")
    grid = np.linspace(0.0, 1.0, 41)
    found = []
    for p in (0.05, 0.1, 0.15, 0.2, 0.3):
        gc = experiment.scheme_crossover(SchemeKind.OPTIMAL, grid, base.replace(two_gate_error={"default": p}))
        found.append(gc if gc is not None else math.inf)
    ok = all(b >= a for a, b in zip(found, found[1:]))
    return ok, "gamma_c = " + ", ".join(f"{x:.3f}" for x in found)


def check_two_design():
    worst = 0.0
    for kind in (SchemeKind.NO_CORRECTION, SchemeKind.OPTIMAL):
        for g in (0.3, 0.7):
            m, s = experiment.haar_average(kind, g, 4000, seed=0)
            worst = max(worst, abs(m - experiment.channel_fidelity(kind, g)) / s)
    return worst <= 3.0, f"max |Haar - six-state| = {worst:.2f} sigma"


def check_sampler():
    g = 0.5
    res = experiment.shot_experiment(SchemeKind.OPTIMAL, g, shots=100_000, seed=0)
    exact = experiment.channel_fidelity(SchemeKind.OPTIMAL, g)
    z = abs(res.fidelity - exact) / max(res.stderr, 1e-15)
    return z <= 3.0, f"|shot - exact| = {z:.2f} stderr"


def check_test_states_mub():
    kets = _kets()
    ov = np.abs(np.array([[np.vdot(a, b) for b in kets] for a in kets])) ** 2
    want = np.full((6, 6), 0.5)
    for i in range(0, 6, 2):
        want[i : i + 2, i : i + 2] = np.eye(2)
    err = np.abs(ov - want).max()
    return err <= 1e-12, f"max overlap deviation {err:.2e}"


CHECKS: tuple[tuple[str, Callable[[], tuple[bool, str]]], ...] = (
    ("syndrome ops unitary", check_syndrome_ops_unitary),
    ("optimal closed form degenerates at gamma=0", check_optimal_degeneration),
    ("closed-form optimal equals polar synthesis", check_polar_vs_closed_form),
    ("standard A equals standard B", check_standard_a_equals_b),
    ("gate route equals direct route", check_gate_route_matches_map_route),
    ("all schemes exact at gamma=0", check_gamma_zero_identity),
    ("ideal-gate fidelity ordering", check_ideal_ordering),
    ("uncorrected closed form", check_no_correction_closed_form),
    ("channel equals sum of branches", check_channel_sum_of_branches),
    ("gadget branch maps equal Kraus operators", check_gadget_branch_maps),
    ("polar factorization", check_polar_factorization),
    ("decoherence estimate", check_decoherence_estimate),
    ("readout confusion stochastic", check_readout_confuse),
    ("zero-noise pipeline equals ideal", check_zero_noise_pipeline),
    ("crossover monotone in gate error", check_crossover_monotone),
    ("six states match Haar average", check_two_design),
    ("sampler matches exact fidelity", check_sampler),
    ("test states form three MUBs", check_test_states_mub),
)


def run_checks() -> list[CheckResult]:
    out = []
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return out
