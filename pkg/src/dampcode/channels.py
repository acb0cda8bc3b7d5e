"""Kraus-form quantum channels with labelled branches.

A :class:`LabeledChannel` keeps every Kraus operator together with a small
integer-tuple label, so the branch that fired is available as classical side
information (the "detected" part of a detected-jump channel). Tensoring two
channels concatenates labels, which makes the label of ``AD x AD`` exactly
the syndrome ``(i, j)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from .qmat import TOL, dag, nqubits_of

Label = tuple[int, ...]

_I = np.eye(2, dtype=np.complex128)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULIS = (_I, _X, _Y, _Z)


class ChannelError(ValueError):
    pass


def check_gamma(gamma: float) -> float:
    g = float(gamma)
    if not (0.0 <= g <= 1.0) or math.isnan(g):
        raise ChannelError(f"damping parameter must lie in [0, 1], got {gamma}")
    return g


def check_probability(p: float, name: str = "p") -> float:
    x = float(p)
    if not (0.0 <= x <= 1.0) or math.isnan(x):
        raise ChannelError(f"{name} must lie in [0, 1], got {p}")
    return x


@dataclass(frozen=True)
class LabeledChannel:
    nqubits: int
    branches: tuple[tuple[Label, np.ndarray], ...]

    def __post_init__(self):
        if not 1 <= self.nqubits <= 4:
            raise ChannelError(f"channels act on 1..4 qubits, got {self.nqubits}")
        d = 1 << self.nqubits
        labels = [lab for lab, _ in self.branches]
        if len(set(labels)) != len(labels):
            raise ChannelError("branch labels must be unique")
        total = np.zeros((d, d), dtype=np.complex128)
        for _, k in self.branches:
            if k.shape != (d, d):
                raise ChannelError(f"Kraus operator shape {k.shape} does not match {d}x{d}")
            k.setflags(write=False)
            total += dag(k) @ k
        if not np.allclose(total, np.eye(d), rtol=0.0, atol=TOL.trace):
            raise ChannelError("Kraus operators are not complete (sum K^H K != I)")

    @property
    def labels(self) -> list[Label]:
        return [lab for lab, _ in self.branches]

    def kraus(self, label: Label) -> np.ndarray:
        for lab, k in self.branches:
            if lab == tuple(label):
                return k
        raise ChannelError(f"unknown branch label {label!r}")


def make_channel(kraus_ops: Sequence[np.ndarray], labels: Sequence[Label] | None = None) -> LabeledChannel:
    ops = [np.array(k, dtype=np.complex128) for k in kraus_ops]
    if labels is None:
        labels = [(i,) for i in range(len(ops))]
    n = nqubits_of(ops[0])
    return LabeledChannel(n, tuple((tuple(lab), k) for lab, k in zip(labels, ops)))


def identity_channel(nqubits: int = 1) -> LabeledChannel:
    return make_channel([np.eye(1 << nqubits)], [(0,) * nqubits])


def damping_kraus(gamma: float) -> tuple[np.ndarray, np.ndarray]:
    g = check_gamma(gamma)
    a0 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - g)]], dtype=np.complex128)
    a1 = np.array([[0.0, math.sqrt(g)], [0.0, 0.0]], dtype=np.complex128)
    return a0, a1


def amplitude_damping(gamma: float) -> LabeledChannel:
    """Single-qubit amplitude damping with branches ``(0,)`` -> A0 and ``(1,)`` -> A1."""
    a0, a1 = damping_kraus(gamma)
    return make_channel([a0, a1], [(0,), (1,)])


def _check_dims(channel: LabeledChannel, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.complex128)
    d = 1 << channel.nqubits
    if rho.shape != (d, d):
        raise ChannelError(f"state of shape {rho.shape} does not match a {channel.nqubits}-qubit channel")
    return rho


def apply(channel: LabeledChannel, rho: np.ndarray) -> np.ndarray:
    rho = _check_dims(channel, rho)
    out = np.zeros_like(rho)
    for _, k in channel.branches:
        out += k @ rho @ dag(k)
    return out


def apply_branch(channel: LabeledChannel, rho: np.ndarray, label: Label) -> tuple[np.ndarray, float]:
    """Unnormalized ``K rho K^H`` for one branch, and its probability."""
    rho = _check_dims(channel, rho)
    k = channel.kraus(label)
    state = k @ rho @ dag(k)
    return state, float(np.real(np.trace(state)))


def tensor(channel_a: LabeledChannel, channel_b: LabeledChannel) -> LabeledChannel:
    n = channel_a.nqubits + channel_b.nqubits
    if n > 4:
        raise ChannelError(f"product channel would span {n} > 4 qubits")
    branches = tuple(
        (la + lb, np.kron(ka, kb))
        for (la, ka), (lb, kb) in product(channel_a.branches, channel_b.branches)
    )
    return LabeledChannel(n, branches)


def phase_damping_from_t2(duration: float, t2: float) -> LabeledChannel:
    """Pure dephasing that scales single-qubit coherences by ``exp(-duration/t2)``."""
    if not t2 > 0:
        raise ChannelError(f"T2 must be positive, got {t2}")
    if duration < 0:
        raise ChannelError(f"duration must be nonnegative, got {duration}")
    lam = math.exp(-duration / t2)
    return make_channel(
        [math.sqrt((1.0 + lam) / 2.0) * _I, math.sqrt((1.0 - lam) / 2.0) * _Z],
        [(0,), (1,)],
    )


def depolarizing(p: float, nqubits: int = 1) -> LabeledChannel:
    """``rho -> (1 - p) rho + p I / 2^n`` as a Pauli-twirl Kraus set."""
    p = check_probability(p)
    if nqubits not in (1, 2):
        raise ChannelError("depolarizing channel is defined for 1 or 2 qubits")
    d2 = 4**nqubits
    ops, labels = [], []
    for idx, paulis in enumerate(product(PAULIS, repeat=nqubits)):
        w = 1.0 - p * (d2 - 1) / d2 if idx == 0 else p / d2
        ops.append(math.sqrt(w) * _kron_list(paulis))
        labels.append((idx,))
    return make_channel(ops, labels)


def _kron_list(mats) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for m in mats:
        out = np.kron(out, m)
    return out
