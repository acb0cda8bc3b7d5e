"""Minimal gate IR and density-matrix simulator for the code's circuits.

Qubit 0 is the leftmost tensor factor. The circuits built here mirror the
hardware construction: an encoder (CNOT then Hadamards), a detected damping
gadget per code qubit (controlled-Ry onto a fresh ancilla followed by a CNOT
back onto the data qubit), and the recovery layer
``(V1 x V2) -> CNOT -> (V3 x V4) -> measure``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .channels import check_gamma
from .qmat import dag, is_unitary, partial_trace

I2 = np.eye(2, dtype=np.complex128)
H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2.0)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
P0 = np.diag([1.0, 0.0]).astype(np.complex128)
P1 = np.diag([0.0, 1.0]).astype(np.complex128)

SINGLE_KINDS = {"H", "X", "Z", "RY", "U"}
TWO_KINDS = {"CNOT", "CRY"}


class CircuitError(ValueError):
    pass


def ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    theta: float = 0.0
    matrix: np.ndarray | None = field(default=None, compare=False)
    label: str = ""

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        want = 2 if kind in TWO_KINDS else 1
        if kind not in SINGLE_KINDS | TWO_KINDS | {"MEASURE"}:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != want or len(set(self.qubits)) != want:
            raise CircuitError(f"{kind} needs {want} distinct qubit(s), got {self.qubits}")
        if kind == "U":
            if self.matrix is None or self.matrix.shape != (2, 2) or not is_unitary(self.matrix):
                raise CircuitError("U gate needs a 2x2 unitary matrix")

    @property
    def arity(self) -> int:
        return len(self.qubits)

    def local_matrix(self) -> np.ndarray:
        """Single-qubit matrix, or the target operation of a controlled gate."""
        if self.kind == "H":
            return H
        if self.kind == "X" or self.kind == "CNOT":
            return X
        if self.kind == "Z":
            return Z
        if self.kind in ("RY", "CRY"):
            return ry(self.theta)
        if self.kind == "U":
            return self.matrix
        raise CircuitError("measurement has no matrix")

    def name(self) -> str:
        if self.label:
            return self.label
        if self.kind in ("RY", "CRY"):
            return f"Ry({self.theta:.4f})"
        return self.kind


def h(q): return Gate("H", (q,))
def x(q): return Gate("X", (q,))
def z(q): return Gate("Z", (q,))
def ry_gate(theta, q): return Gate("RY", (q,), theta=theta)
def u_gate(m, q, label=""): return Gate("U", (q,), matrix=np.asarray(m, dtype=np.complex128), label=label)
def cnot(control, target): return Gate("CNOT", (control, target))
def cry(theta, control, target): return Gate("CRY", (control, target), theta=theta)
def measure(q): return Gate("MEASURE", (q,))


@dataclass(frozen=True)
class Circuit:
    width: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        if not 1 <= self.width <= 4:
            raise CircuitError(f"circuit width must be 1..4, got {self.width}")
        object.__setattr__(self, "gates", tuple(self.gates))
        measured: set[int] = set()
        for g in self.gates:
            if any(q < 0 or q >= self.width for q in g.qubits):
                raise CircuitError(f"gate {g.name()} on {g.qubits} exceeds width {self.width}")
            if g.kind == "MEASURE":
                if g.qubits[0] in measured:
                    raise CircuitError(f"qubit {g.qubits[0]} measured twice")
                measured.add(g.qubits[0])
            elif measured:
                raise CircuitError("measurements must come after every gate")

    @property
    def measured(self) -> tuple[int, ...]:
        return tuple(g.qubits[0] for g in self.gates if g.kind == "MEASURE")

    def unitary_part(self) -> "Circuit":
        return Circuit(self.width, tuple(g for g in self.gates if g.kind != "MEASURE"))

    def __add__(self, other: "Circuit") -> "Circuit":
        if self.measured:
            raise CircuitError("cannot append to a measured circuit")
        return Circuit(max(self.width, other.width), self.gates + other.gates)


def embed(ops: Mapping[int, np.ndarray], width: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for q in range(width):
        out = np.kron(out, ops.get(q, I2))
    return out


def gate_unitary(g: Gate, width: int) -> np.ndarray:
    if g.kind == "MEASURE":
        raise CircuitError("measurement is not unitary")
    if g.arity == 1:
        return embed({g.qubits[0]: g.local_matrix()}, width)
    c, t = g.qubits
    return embed({c: P0}, width) + embed({c: P1, t: g.local_matrix()}, width)


def circuit_to_unitary(c: Circuit) -> np.ndarray:
    if c.measured:
        raise CircuitError("circuit contains measurements")
    u = np.eye(1 << c.width, dtype=np.complex128)
    for g in c.gates:
        u = gate_unitary(g, c.width) @ u
    return u


def evolve(c: Circuit, rho: np.ndarray) -> np.ndarray:
    """Apply the unitary part of ``c`` to a density matrix."""
    u = circuit_to_unitary(c.unitary_part())
    return u @ rho @ dag(u)


def simulate_with_ancilla_postselect(
    c: Circuit, rho: np.ndarray, outcomes: Mapping[int, int]
) -> tuple[np.ndarray, float]:
    """Run ``c``, project measured qubits onto ``outcomes`` and trace them out.

    Returns the subnormalized state of the remaining qubits and the outcome
    probability.
    """
    measured = set(c.measured)
    for q in outcomes:
        if q not in measured:
            raise CircuitError(f"outcome given for unmeasured qubit {q}")
    out = evolve(c, np.asarray(rho, dtype=np.complex128))
    proj = embed({q: (P1 if b else P0) for q, b in outcomes.items()}, c.width)
    out = proj @ out @ proj
    keep = [q for q in range(c.width) if q not in outcomes]
    state = partial_trace(out, keep) if keep else out
    return state, float(np.real(np.trace(out)))


def cry_angle(gamma: float) -> float:
    """Controlled-Ry angle with ``gamma = sin^2(theta / 2)``."""
    return 2.0 * math.asin(math.sqrt(check_gamma(gamma)))


def waveplate_angle(gamma: float, operator: str) -> float:
    """Half-wave-plate angle in degrees realising A0 (``sin^2 2t = 1 - gamma``) or A1 (``sin^2 2t = gamma``)."""
    g = check_gamma(gamma)
    op = operator.upper()
    if op == "A0":
        val = 1.0 - g
    elif op == "A1":
        val = g
    else:
        raise CircuitError(f"operator must be 'A0' or 'A1', got {operator!r}")
    return math.degrees(0.5 * math.asin(math.sqrt(min(1.0, max(0.0, val)))))


def encoder_circuit(a: int = 0, b: int = 1, width: int = 2) -> Circuit:
    """``a|0> + b|1>`` on qubit ``a`` (qubit ``b`` in |0>) -> ``a|++> + b|-->``."""
    return Circuit(width, (cnot(a, b), h(a), h(b)))


def damping_gadget(gamma: float, data: int = 0, ancilla: int = 1, width: int = 2) -> tuple[Gate, Gate]:
    theta = cry_angle(gamma)
    return cry(theta, data, ancilla), cnot(ancilla, data)


def detected_ad_circuit(gamma: float) -> Circuit:
    """Data qubit 0, ancilla qubit 1; ancilla outcome k selects Kraus branch A_k."""
    return Circuit(2, damping_gadget(gamma, 0, 1, 2) + (measure(1),))


def branch_map(gamma: float, outcome: int) -> np.ndarray:
    """The 2x2 operator the gadget applies to the data qubit on ancilla outcome ``outcome``."""
    u = circuit_to_unitary(detected_ad_circuit(gamma).unitary_part())
    # columns |data, anc=0>, rows |data, anc=outcome>
    return u[np.ix_([0 + outcome, 2 + outcome], [0, 2])]


def encoded_channel_circuit(gamma: float) -> Circuit:
    """Four-qubit encoder + detected damping on both code qubits.

    Qubits: 0 = A (carries the input), 1 = B, 2 = ancilla of A, 3 = ancilla of B.
    """
    gates = encoder_circuit(0, 1, 4).gates
    gates += damping_gadget(gamma, 0, 2, 4) + damping_gadget(gamma, 1, 3, 4)
    return Circuit(4, gates + (measure(2), measure(3)))


def recovery_circuit(v1, v2, v3, v4, keep: int = 0) -> Circuit:
    """Recovery layer on (A, B): V1 on A, V2 on B, CNOT, V3 on A, V4 on B, measure.

    The measured qubit controls the CNOT onto the kept qubit ``keep``.
    """
    if keep not in (0, 1):
        raise CircuitError(f"keep must be 0 or 1, got {keep}")
    meas = 1 - keep
    return Circuit(
        2,
        (
            u_gate(v1, 0, "V1"),
            u_gate(v2, 1, "V2"),
            cnot(meas, keep),
            u_gate(v3, 0, "V3"),
            u_gate(v4, 1, "V4"),
            measure(meas),
        ),
    )


def measure_and_correct(rho2: np.ndarray, correction: np.ndarray, flip: float = 0.0) -> np.ndarray:
    """Measure qubit 1, apply ``correction`` to qubit 0 on outcome 1, drop qubit 1.

    ``flip`` is the probability the recorded outcome is wrong, so the
    correction is misapplied with that probability.
    """
    out = np.zeros((2, 2), dtype=np.complex128)
    r = np.asarray(rho2).reshape(2, 2, 2, 2)
    for k in (0, 1):
        blk = r[:, k, :, k]
        corrected = correction @ blk @ dag(correction)
        right, wrong = (blk, corrected) if k == 0 else (corrected, blk)
        out += (1.0 - flip) * right + flip * wrong
    return out


def decoder_measurement(rho2: np.ndarray) -> np.ndarray:
    """Decode by measuring B, applying H to A and Z to A on outcome 1."""
    hh = np.kron(H, I2)
    return measure_and_correct(hh @ rho2 @ dag(hh), Z)


def draw(c: Circuit) -> str:
    """Plain-text diagram, one line per qubit."""
    cols: list[list[str]] = []
    for g in c.gates:
        col = ["-" for _ in range(c.width)]
        if g.kind == "MEASURE":
            col[g.qubits[0]] = "M"
        elif g.arity == 1:
            col[g.qubits[0]] = g.name()
        else:
            ctl, tgt = g.qubits
            col[ctl] = "@"
            col[tgt] = "X" if g.kind == "CNOT" else g.name()
            lo, hi = sorted(g.qubits)
            for q in range(lo + 1, hi):
                col[q] = "|"
        cols.append(col)
    lines = []
    for q in range(c.width):
        cells = []
        for col in cols:
            w = max(len(s) for s in col)
            cells.append(col[q].center(w, "-"))
        lines.append(f"q{q}: -" + "--".join(cells) + "-")
    return "\n".join(lines)
