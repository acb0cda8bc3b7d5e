"""Recovery schemes for the detected-damping code.

Gate layout of the recovery layer (qubit A keeps the output, qubit B is
measured)::

    A: --V1--X--V3--------P(if m=1)-- output
             |
    B: --V2--@--V4--M(m)

Standard A handles ``A1 A1`` (state ``|00>``) with the roles of A and B
swapped: H on B makes ``|0+>``, the CNOT controlled by A is idle, A is
measured and B is kept, so both standard schemes return ``|+>``.

The per-syndrome gates follow the recovery table of the construction:
Standard A and Standard B differ only on the ``A1 A1`` pattern, and Optimal
Recovery replaces the ``A0 A0`` row with the damping-adapted gates built
from ``U1`` and ``U2``. Optimal uses the Standard B gates for ``A1 A1``,
which coincide with the polar-decomposition recovery there.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np

from . import channels
from .circuits import H, I2, P1, X, Z, measure_and_correct
from .code import ENCODER, SYNDROMES, SyndromeBranch
from .qmat import TOL, dag, is_unitary, polar_decompose

SWAP = np.eye(4, dtype=np.complex128)[[0, 2, 1, 3]]
CNOT_BA = np.kron(I2, np.diag([1.0, 0.0])) + np.kron(X, np.diag([0.0, 1.0]))


class RecoveryError(ValueError):
    pass


class SchemeKind(str, enum.Enum):
    STANDARD_A = "standard_a"
    STANDARD_B = "standard_b"
    OPTIMAL = "optimal"
    GENERIC_POLAR = "generic_polar"
    NO_CORRECTION = "none"

    def __str__(self) -> str:
        return self.value


ALL_SCHEMES = tuple(SchemeKind)
CORRECTED_SCHEMES = (SchemeKind.STANDARD_A, SchemeKind.STANDARD_B, SchemeKind.OPTIMAL, SchemeKind.GENERIC_POLAR)

_ALIASES = {
    "a": SchemeKind.STANDARD_A,
    "standarda": SchemeKind.STANDARD_A,
    "b": SchemeKind.STANDARD_B,
    "standardb": SchemeKind.STANDARD_B,
    "opt": SchemeKind.OPTIMAL,
    "polar": SchemeKind.GENERIC_POLAR,
    "genericpolar": SchemeKind.GENERIC_POLAR,
    "nocorrection": SchemeKind.NO_CORRECTION,
    "uncorrected": SchemeKind.NO_CORRECTION,
}


def parse_scheme(name: str | SchemeKind) -> SchemeKind:
    if isinstance(name, SchemeKind):
        return name
    key = name.strip().lower()
    try:
        return SchemeKind(key)
    except ValueError:
        pass
    squashed = key.replace("_", "").replace("-", "").replace(" ", "")
    if squashed in _ALIASES:
        return _ALIASES[squashed]
    raise RecoveryError(f"unknown scheme {name!r}; choose from {[s.value for s in SchemeKind]}")


@dataclass(frozen=True)
class SyndromeOps:
    v1: np.ndarray
    v2: np.ndarray
    v3: np.ndarray
    v4: np.ndarray
    p: np.ndarray
    keep: int = 0

    def __post_init__(self):
        for name in ("v1", "v2", "v3", "v4", "p"):
            if not is_unitary(getattr(self, name)):
                raise RecoveryError(f"{name} is not unitary")
        if self.keep not in (0, 1):
            raise RecoveryError(f"keep must be 0 or 1, got {self.keep}")

    def as_tuple(self) -> tuple[np.ndarray, ...]:
        return (self.v1, self.v2, self.v3, self.v4, self.p)


@dataclass(frozen=True)
class OptimalParams:
    gamma: float
    s: float
    t: float
    u1: np.ndarray
    u2: np.ndarray


@lru_cache(maxsize=512)
def optimal_params(gamma: float) -> OptimalParams:
    g = channels.check_gamma(gamma)
    root = math.sqrt(1.0 + (1.0 - g) ** 2)
    s = math.sqrt(2.0) / root
    t = math.sqrt(2.0) * (1.0 - g) / root
    norm = math.sqrt((1.0 + t) ** 2 + (1.0 - s) ** 2)
    u1 = np.array([[-t - 1.0, s - 1.0], [-s + 1.0, -t - 1.0]], dtype=np.complex128) / norm
    # lower-left entry is -(1 + t); the printed "1 - t" is not unitary
    u2 = np.array([[-s + 1.0, t + 1.0], [-t - 1.0, -s + 1.0]], dtype=np.complex128) / norm
    return OptimalParams(g, s, t, u1, u2)


def _ops(v1=I2, v2=I2, v3=I2, v4=I2, p=I2, keep=0) -> SyndromeOps:
    return SyndromeOps(v1, v2, v3, v4, p, keep)


_STANDARD = {
    (0, 1): _ops(v3=H @ X),
    (1, 0): _ops(v3=H @ X, v4=H, p=X),
    (0, 0): _ops(v3=H, v4=H),
}
_A1A1 = {
    # H on B with the roles swapped: A (still |0>) is measured, B is kept
    SchemeKind.STANDARD_A: _ops(v2=H, keep=1),
    SchemeKind.STANDARD_B: _ops(v3=H),
}


def scheme_ops(kind: SchemeKind | str, syndrome: tuple[int, int], gamma: float = 0.0) -> SyndromeOps:
    kind = parse_scheme(kind)
    syndrome = tuple(syndrome)
    if syndrome not in SYNDROMES:
        raise RecoveryError(f"invalid syndrome {syndrome}")
    if kind is SchemeKind.NO_CORRECTION:
        raise RecoveryError("the uncorrected channel has no recovery gates")
    if kind is SchemeKind.GENERIC_POLAR:
        raise RecoveryError("generic polar recovery is a map, not a gate sequence")
    if kind is SchemeKind.OPTIMAL:
        if syndrome == (0, 0):
            op = optimal_params(gamma)
            return _ops(
                v2=H,
                v3=dag(op.u1) @ H,
                v4=H @ dag(op.u2) @ X,
                p=Z,
            )
        if syndrome == (1, 1):
            return _A1A1[SchemeKind.STANDARD_B]
    elif syndrome == (1, 1):
        return _A1A1[kind]
    return _STANDARD[syndrome]


GateHook = Callable[[np.ndarray, str, tuple[int, ...]], np.ndarray]


def run_recovery_ops(
    ops: SyndromeOps,
    rho2: np.ndarray,
    after_gate: GateHook | None = None,
    readout_flip: float = 0.0,
) -> np.ndarray:
    """Apply the recovery layer to a two-qubit state and return qubit A.

    ``after_gate(rho, kind, qubits)`` lets a noise model act after every gate
    (``kind`` is ``"1q"`` or ``"2q"``); ``readout_flip`` is the probability
    that the mid-circuit outcome on B is misrecorded.

    With ``ops.keep == 1`` the roles are mirrored: A is measured and controls
    the CNOT, B is kept. ``V1``/``V3`` still act on A and ``V2``/``V4`` on B.
    """
    rho = np.asarray(rho2, dtype=np.complex128)
    pre, post = (ops.v1, ops.v2), (ops.v3, ops.v4)
    if ops.keep == 1:
        rho = SWAP @ rho @ SWAP
        pre, post = (ops.v2, ops.v1), (ops.v4, ops.v3)

    def hook(r, kind, qubits):
        if ops.keep == 1:
            qubits = tuple(1 - q for q in qubits)
        return after_gate(r, kind, qubits)

    for kind, qubits, u in (
        ("1q", (0,), np.kron(pre[0], I2)),
        ("1q", (1,), np.kron(I2, pre[1])),
        ("2q", (1, 0), CNOT_BA),
        ("1q", (0,), np.kron(post[0], I2)),
        ("1q", (1,), np.kron(I2, post[1])),
    ):
        rho = u @ rho @ dag(u)
        if after_gate is not None:
            rho = hook(rho, kind, qubits)
    return measure_and_correct(rho, ops.p, readout_flip)


def cnot_active(kind: SchemeKind | str, syndrome: tuple[int, int]) -> bool:
    """Whether the recovery CNOT acts nontrivially on this branch.

    True when qubit B can be in |1> at the CNOT for some code input, i.e.
    the branch actually routes through the two-qubit gate.
    """
    kind = parse_scheme(kind)
    if kind is SchemeKind.NO_CORRECTION:
        return False
    if kind is SchemeKind.GENERIC_POLAR:
        kind = SchemeKind.OPTIMAL
    ops = scheme_ops(kind, syndrome, 0.5)
    a_ops = channels.damping_kraus(0.5)
    t = np.kron(a_ops[syndrome[0]], a_ops[syndrome[1]]) @ ENCODER
    pre = np.kron(ops.v1, ops.v2) @ t
    ctl = np.kron(I2, P1) if ops.keep == 0 else np.kron(P1, I2)
    return bool(np.linalg.norm(ctl @ pre) > 1e-9)


@dataclass(frozen=True)
class RecoveryIsometrySet:
    v00: np.ndarray
    v01: np.ndarray
    v10: np.ndarray
    v11: np.ndarray

    def __getitem__(self, syndrome: tuple[int, int]) -> np.ndarray:
        i, j = syndrome
        return getattr(self, f"v{i}{j}")


def generic_polar_recovery(encoder: np.ndarray, gamma: float) -> RecoveryIsometrySet:
    """Polar factors ``v_ij`` of ``t_ij = (A_i x A_j) E``."""
    a_ops = channels.damping_kraus(gamma)
    vs = {}
    for i, j in SYNDROMES:
        t = np.kron(a_ops[i], a_ops[j]) @ encoder
        vs[f"v{i}{j}"], _ = polar_decompose(t)
    return RecoveryIsometrySet(**vs)


@lru_cache(maxsize=512)
def _polar_set(gamma: float) -> RecoveryIsometrySet:
    return generic_polar_recovery(ENCODER, gamma)


def polar_recover(v: np.ndarray, rho2: np.ndarray) -> tuple[np.ndarray, float]:
    """``v^H rho v`` renormalized, plus the weight that fell outside ``range(v)``."""
    out = dag(v) @ rho2 @ v
    kept = float(np.real(np.trace(out)))
    total = float(np.real(np.trace(rho2)))
    if kept <= TOL.zero_prob * max(total, 1.0):
        raise RecoveryError("branch state has no weight inside the recovery isometry")
    return out * (total / kept), 1.0 - kept / total


def apply_recovery(branch: SyndromeBranch, kind: SchemeKind | str, gamma: float) -> np.ndarray:
    """Decoded single-qubit state for one syndrome branch."""
    kind = parse_scheme(kind)
    if branch.empty:
        raise RecoveryError(f"branch {branch.syndrome} has zero probability")
    rho = branch.normalized()
    if kind is SchemeKind.GENERIC_POLAR:
        return polar_recover(_polar_set(float(gamma))[branch.syndrome], rho)[0]
    return run_recovery_ops(scheme_ops(kind, branch.syndrome, gamma), rho)


def no_correction_channel(gamma: float, rho: np.ndarray) -> np.ndarray:
    return channels.apply(channels.amplitude_damping(gamma), rho)


def recovered_output(kind: SchemeKind | str, gamma: float, branches: Iterable[SyndromeBranch]) -> np.ndarray:
    """Probability-weighted sum of the decoded branch states."""
    out = np.zeros((2, 2), dtype=np.complex128)
    for b in branches:
        if not b.empty:
            out += b.prob * apply_recovery(b, kind, gamma)
    return out
