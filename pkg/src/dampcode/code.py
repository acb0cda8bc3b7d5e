"""The two-qubit code ``|0> -> |++>, |1> -> |-->`` at channel level."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channels
from .circuits import decoder_measurement
from .qmat import TOL, dag, projector

_plus = np.array([1.0, 1.0], dtype=np.complex128) / np.sqrt(2.0)
_minus = np.array([1.0, -1.0], dtype=np.complex128) / np.sqrt(2.0)

#: encoding isometry E = |++><0| + |--><1|
ENCODER = np.stack([np.kron(_plus, _plus), np.kron(_minus, _minus)], axis=1)
#: decoding isometry D = E^H
DECODER = dag(ENCODER)

SYNDROMES: tuple[tuple[int, int], ...] = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True)
class SyndromeBranch:
    """One detected error pattern ``A_i x A_j``.

    ``state`` is the unnormalized post-channel two-qubit state and ``prob``
    its trace. Branches with ``prob`` below ``TOL.zero_prob`` are flagged
    ``empty`` and carry a zero state.
    """

    syndrome: tuple[int, int]
    state: np.ndarray
    prob: float

    @property
    def empty(self) -> bool:
        return self.prob < TOL.zero_prob

    def normalized(self) -> np.ndarray:
        if self.empty:
            raise ValueError(f"branch {self.syndrome} has zero probability")
        return self.state / self.prob


def encode(psi: np.ndarray) -> np.ndarray:
    """Encode a single-qubit pure state (vector) or density matrix."""
    psi = np.asarray(psi, dtype=np.complex128)
    rho = projector(psi) if psi.ndim == 1 else psi
    if rho.shape != (2, 2):
        raise ValueError("encode expects a single-qubit state")
    return ENCODER @ rho @ DECODER


def channel_pair(gamma: float) -> channels.LabeledChannel:
    ad = channels.amplitude_damping(gamma)
    return channels.tensor(ad, ad)


def syndrome_branches(encoded: np.ndarray, gamma: float) -> list[SyndromeBranch]:
    ch = channel_pair(gamma)
    out = []
    for syn in SYNDROMES:
        state, prob = channels.apply_branch(ch, encoded, syn)
        if prob < TOL.zero_prob:
            state = np.zeros_like(state)
        out.append(SyndromeBranch(syn, state, max(prob, 0.0)))
    return out


def decode(rho2: np.ndarray) -> np.ndarray:
    """Measurement-based decoding averaged over the outcome of qubit B."""
    return decoder_measurement(np.asarray(rho2, dtype=np.complex128))


def decode_isometry(rho2: np.ndarray) -> np.ndarray:
    """``D rho D^H``; agrees with :func:`decode` on code-space states only."""
    return DECODER @ np.asarray(rho2, dtype=np.complex128) @ ENCODER
