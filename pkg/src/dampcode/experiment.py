"""Experiment driver: six-state averages, sweeps, crossover and shot sampling.

Fidelities are scored as ``<psi| rho'_A |psi>`` averaged over the six states
of three mutually unbiased bases, which reproduces the Haar average for
any channel. The shot sampler mimics the hardware protocol: sample the
reported syndrome and a single Pauli outcome per shot, post-select on the
syndrome, reconstruct each branch by linear-inversion tomography, and
recombine with the empirical syndrome frequencies.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import noise
from .channels import check_gamma
from .noise import NoiseModel, Pipeline
from .qmat import project_psd
from .recovery import SchemeKind, parse_scheme

SEED_ENV = "DAMPCODE_SEED"

_s = 1.0 / math.sqrt(2.0)
TEST_STATES: dict[str, np.ndarray] = {
    "0": np.array([1.0, 0.0], dtype=np.complex128),
    "1": np.array([0.0, 1.0], dtype=np.complex128),
    "+": np.array([_s, _s], dtype=np.complex128),
    "-": np.array([_s, -_s], dtype=np.complex128),
    "+i": np.array([_s, 1j * _s], dtype=np.complex128),
    "-i": np.array([_s, -1j * _s], dtype=np.complex128),
}
BASES = ("X", "Y", "Z")
_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


class ExperimentError(ValueError):
    pass


def _kets(states=None) -> np.ndarray:
    if states is None:
        return np.stack(list(TEST_STATES.values()))
    return np.asarray(states, dtype=np.complex128).reshape(-1, 2)


def _bloch(rhos: np.ndarray) -> np.ndarray:
    return np.stack([np.real(np.einsum("...ij,ji->...", rhos, _PAULI[b])) for b in BASES], axis=-1)


def _ket_bloch(kets: np.ndarray) -> np.ndarray:
    return _bloch(np.einsum("ki,kj->kij", kets, kets.conj()))


def resolve_seed(seed: int | None) -> int:
    """Explicit seed, else ``$DAMPCODE_SEED``, else 0."""
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ExperimentError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return 0


@dataclass(frozen=True)
class SweepRecord:
    gamma: float
    scheme: SchemeKind
    fidelity: float
    stderr: float = 0.0
    shots: int = 0
    noise_preset: str = "none"

    def __post_init__(self):
        if not -1e-12 <= self.fidelity <= 1.0 + 1e-12:
            raise ExperimentError(f"fidelity {self.fidelity} outside [0, 1]")
        if self.stderr < 0:
            raise ExperimentError("stderr must be nonnegative")

    @property
    def exact(self) -> bool:
        return self.shots == 0

    def as_row(self) -> dict:
        return {
            "gamma": self.gamma,
            "scheme": self.scheme.value,
            "fidelity": self.fidelity,
            "stderr": self.stderr,
            "shots": self.shots,
            "noise_preset": self.noise_preset,
        }


def average_fidelity(pipeline: Pipeline, states=None, ideal_weights: bool = False) -> float:
    kets = _kets(states)
    rhos = np.einsum("ki,kj->kij", kets, kets.conj())
    out = pipeline.output(rhos, survival=not ideal_weights)
    f = np.real(np.einsum("ki,kij,kj->k", kets.conj(), out, kets))
    return float(np.clip(f.mean(), 0.0, 1.0))


def channel_fidelity(
    scheme: SchemeKind | str,
    gamma: float,
    model: NoiseModel | None = None,
    ideal_weights: bool = False,
) -> float:
    """Exact six-state average fidelity of the effective channel."""
    return average_fidelity(noise.build_pipeline(scheme, gamma, model), ideal_weights=ideal_weights)


def sweep(
    gammas: Iterable[float],
    schemes: Sequence[SchemeKind | str],
    model: NoiseModel | None = None,
    shots: int = 0,
    seed: int | None = None,
    ideal_weights: bool = False,
    workers: int = 1,
) -> list[SweepRecord]:
    """One record per ``(gamma, scheme)``, ordered by grid index then scheme.

    ``shots = 0`` gives exact fidelities; otherwise each cell runs
    :func:`shot_experiment` on its own seed stream derived from ``seed`` and
    the cell's grid indices, so results do not depend on ``workers``.
    """
    grid = [check_gamma(g) for g in gammas]
    if not grid:
        raise ExperimentError("empty gamma grid")
    kinds = [parse_scheme(s) for s in schemes]
    if not kinds:
        raise ExperimentError("no schemes given")
    if shots < 0:
        raise ExperimentError("shots must be nonnegative")
    master = resolve_seed(seed)
    label = model.name if model is not None else "none"

    def cell(idx: tuple[int, int]) -> SweepRecord:
        gi, si = idx
        g, k = grid[gi], kinds[si]
        if shots == 0:
            f, se = channel_fidelity(k, g, model, ideal_weights), 0.0
        else:
            res = shot_experiment(k, g, model, shots, master, ideal_weights, spawn_key=(gi, si))
            f, se = res.fidelity, res.stderr
        return SweepRecord(g, k, f, se, shots, label)

    cells = [(gi, si) for gi in range(len(grid)) for si in range(len(kinds))]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            out = list(ex.map(cell, cells))
    else:
        out = [cell(c) for c in cells]
    return out


def _curve(records) -> tuple[np.ndarray, np.ndarray]:
    pts = []
    for r in records:
        if isinstance(r, SweepRecord):
            pts.append((r.gamma, r.fidelity))
        else:
            g, f = r
            pts.append((float(g), float(f)))
    if not pts:
        raise ExperimentError("empty curve")
    arr = np.array(pts, dtype=float)
    return arr[:, 0], arr[:, 1]


def crossover(records_corrected, records_uncorrected, tol: float = 1e-12) -> float | None:
    """Smallest ``gamma`` where ``F_corr - F_uncorr`` goes from negative to nonnegative.

    Each curve is a sequence of :class:`SweepRecord` or ``(gamma, fidelity)``
    pairs on the same ascending grid. Differences within ``tol`` count as
    zero, so curves that merely touch never report a crossing. The crossing
    is refined by linear interpolation between the bracketing grid points.
    """
    g1, f1 = _curve(records_corrected)
    g2, f2 = _curve(records_uncorrected)
    if g1.shape != g2.shape or not np.allclose(g1, g2, rtol=0.0, atol=1e-12):
        raise ExperimentError("curves are not on the same grid")
    if np.any(np.diff(g1) <= 0):
        raise ExperimentError("grid must be strictly increasing")
    d = f1 - f2
    d = np.where(np.abs(d) <= tol, 0.0, d)
    for i in range(len(d) - 1):
        if d[i] < 0 and d[i + 1] >= 0:
            return float(g1[i] + (g1[i + 1] - g1[i]) * (-d[i]) / (d[i + 1] - d[i]))
    return None


def scheme_crossover(
    scheme: SchemeKind | str,
    gammas: Sequence[float],
    model: NoiseModel | None = None,
    ideal_weights: bool = False,
) -> float | None:
    """Crossover of ``scheme`` against the uncorrected channel on ``gammas``."""
    corr = [(g, channel_fidelity(scheme, g, model, ideal_weights)) for g in gammas]
    unc = [(g, channel_fidelity(SchemeKind.NO_CORRECTION, g, model, ideal_weights)) for g in gammas]
    return crossover(corr, unc)


# ---------------------------------------------------------------------------
# tomography and shot sampling


def tomography_reconstruct(counts) -> np.ndarray:
    """Linear-inversion single-qubit tomography with PSD projection.

    ``counts`` has shape ``(3, 2)``: rows are the X, Y, Z bases and columns
    the ``+1`` / ``-1`` outcome counts.
    """
    c = np.asarray(counts, dtype=float)
    if c.shape != (3, 2):
        raise ExperimentError("counts must have shape (3, 2)")
    if np.any(c < 0):
        raise ExperimentError("counts must be nonnegative")
    n = c.sum(axis=1)
    if np.any(n == 0):
        raise ExperimentError("every basis needs at least one count")
    e = (c[:, 0] - c[:, 1]) / n
    rho = 0.5 * (np.eye(2) + sum(e[i] * _PAULI[b] for i, b in enumerate(BASES)))
    return project_psd(rho)


@dataclass(frozen=True)
class TomographyCounts:
    """Counts for one input state.

    ``counts[b, r, o]``: basis ``b`` (X, Y, Z), reported branch ``r`` and
    outcome ``o`` (0 for ``+1``, 1 for ``-1``). ``lost[b]`` counts shots
    rejected before the syndrome was recorded.
    """

    syndromes: tuple[tuple[int, ...], ...]
    counts: np.ndarray
    lost: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.shape != (3, len(self.syndromes), 2):
            raise ExperimentError("counts shape does not match the syndromes")
        if np.any(c < 0) or np.any(np.asarray(self.lost) < 0):
            raise ExperimentError("counts must be nonnegative")

    @property
    def accepted(self) -> np.ndarray:
        """Accepted shots per syndrome, summed over bases."""
        return self.counts.sum(axis=(0, 2))

    def branch(self, syndrome) -> np.ndarray:
        return self.counts[:, self.syndromes.index(tuple(syndrome)), :]


@dataclass(frozen=True)
class ShotResult:
    scheme: SchemeKind
    gamma: float
    shots: int
    counts: tuple[TomographyCounts, ...]
    rho: tuple[np.ndarray, ...]
    fidelity: float
    stderr: float
    missing: tuple[tuple[str, tuple[int, ...]], ...] = field(default=())


def _bloch_from_counts(c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-branch PSD-projected Bloch vectors and validity masks.

    ``c`` has shape ``(..., 3, R, 2)``; returns ``(..., R, 3)`` and ``(..., R)``.
    For one qubit, clipping the negative eigenvalue and renormalizing is the
    same as rescaling a Bloch vector longer than one to unit length.
    """
    n = c.sum(axis=-1)
    valid = np.all(n > 0, axis=-2)
    e = (c[..., 0] - c[..., 1]) / np.where(n > 0, n, 1)
    r = np.moveaxis(e, -2, -1)
    length = np.linalg.norm(r, axis=-1, keepdims=True)
    r = np.where(length > 1.0, r / np.where(length > 0, length, 1.0), r)
    return r, valid


def _fidelity_from_counts(c: np.ndarray, psi_bloch: np.ndarray, ideal_p: np.ndarray | None) -> np.ndarray:
    """Six-state average fidelity from counts of shape ``(..., S, 3, R, 2)``."""
    r, valid = _bloch_from_counts(c)
    if ideal_p is None:
        w = c.sum(axis=(-3, -1)).astype(float)
    else:
        w = np.broadcast_to(ideal_p, valid.shape).astype(float)
    w = w * valid
    tot = w.sum(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        w = w / tot
    r_out = np.einsum("...r,...rk->...k", w, r)
    f = 0.5 * (1.0 + np.einsum("...sk,sk->...s", r_out, psi_bloch))
    return f.mean(axis=-1)


def _cell_probs(pipe: Pipeline, rhos: np.ndarray, survival: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    probs, states, _ = pipe.branch_data(rhos)
    bloch = _bloch(states)
    plus = np.clip(0.5 * (1.0 + bloch), 0.0, 1.0)  # (S, R, 3)
    keep = probs * survival  # (S, R)
    cells = np.empty((len(rhos), 3, probs.shape[1], 2))
    for b in range(3):
        cells[:, b, :, 0] = keep * plus[:, :, b]
        cells[:, b, :, 1] = keep * (1.0 - plus[:, :, b])
    return cells, probs


def shot_experiment(
    scheme: SchemeKind | str,
    gamma: float,
    model: NoiseModel | None = None,
    shots: int = 10_000,
    seed: int | None = None,
    ideal_weights: bool = False,
    spawn_key: tuple[int, ...] = (),
    bootstrap: int = 200,
    states=None,
) -> ShotResult:
    """Sampled six-state fidelity with post-selection and tomography.

    ``shots`` is the number of attempted runs per (input state, basis).
    Each shot lands in one (syndrome, outcome) cell or is lost with the
    model's shot-loss rate. The standard error is the spread of a
    multinomial bootstrap over the recorded cell frequencies.
    """
    kind = parse_scheme(scheme)
    if shots < 1:
        raise ExperimentError("shots must be at least 1")
    pipe = noise.build_pipeline(kind, gamma, model)
    kets = _kets(states)
    names = list(TEST_STATES) if states is None else [str(i) for i in range(len(kets))]
    rhos = np.einsum("ki,kj->kij", kets, kets.conj())
    survival = pipe.survival
    cells, probs = _cell_probs(pipe, rhos, survival)
    s_n, _, r_n, _ = cells.shape

    rng = np.random.default_rng(np.random.SeedSequence(resolve_seed(seed), spawn_key=tuple(spawn_key)))
    flat = cells.reshape(s_n, 3, -1)
    lost_p = np.clip(1.0 - flat.sum(axis=-1, keepdims=True), 0.0, 1.0)
    full = np.concatenate([flat, lost_p], axis=-1)
    full = full / full.sum(axis=-1, keepdims=True)
    draws = rng.multinomial(shots, full)  # (S, 3, 2R + 1)
    counts = draws[..., :-1].reshape(s_n, 3, r_n, 2)

    ideal_p = probs / probs.sum(axis=-1, keepdims=True) if ideal_weights else None
    psi_bloch = _ket_bloch(kets)
    f = float(_fidelity_from_counts(counts, psi_bloch, ideal_p))
    if math.isnan(f):
        raise ExperimentError("no accepted shots in any branch")

    if bootstrap > 0:
        freq = draws / shots
        boot = rng.multinomial(shots, freq, size=(bootstrap,) + freq.shape[:-1])
        bc = boot[..., :-1].reshape(bootstrap, s_n, 3, r_n, 2)
        fb = _fidelity_from_counts(bc, psi_bloch, ideal_p)
        stderr = float(np.nanstd(fb, ddof=1))
    else:
        stderr = 0.0

    tcounts, rho_out, missing = [], [], []
    r_vec, valid = _bloch_from_counts(counts)
    for si in range(s_n):
        tcounts.append(TomographyCounts(tuple(pipe.syndromes), counts[si], draws[si, :, -1]))
        acc = counts[si].sum(axis=(0, 2)).astype(float)
        w = (ideal_p[si] if ideal_p is not None else acc) * valid[si]
        w = w / w.sum()
        rv = w @ r_vec[si]
        rho_out.append(0.5 * (np.eye(2) + sum(rv[i] * _PAULI[b] for i, b in enumerate(BASES))))
        for ri, syn in enumerate(pipe.syndromes):
            if not valid[si, ri] and probs[si, ri] > 0:
                missing.append((names[si], syn))
    return ShotResult(
        kind,
        float(gamma),
        int(shots),
        tuple(tcounts),
        tuple(rho_out),
        float(np.clip(f, 0.0, 1.0)),
        stderr,
        tuple(missing),
    )


# ---------------------------------------------------------------------------
# Haar check


def haar_states(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def haar_average(
    scheme: SchemeKind | str,
    gamma: float,
    samples: int = 10_000,
    seed: int | None = None,
    model: NoiseModel | None = None,
) -> tuple[float, float]:
    """Monte Carlo Haar-average fidelity and its standard error."""
    if samples < 1:
        raise ExperimentError("samples must be at least 1")
    rng = np.random.default_rng(resolve_seed(seed))
    kets = haar_states(samples, rng)
    pipe = noise.build_pipeline(scheme, gamma, model)
    rhos = np.einsum("ki,kj->kij", kets, kets.conj())
    out = pipe.output(rhos)
    f = np.real(np.einsum("ki,kij,kj->k", kets.conj(), out, kets))
    sigma = float(f.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return float(f.mean()), max(sigma, 1e-12)


def haar_average_check(
    scheme: SchemeKind | str,
    gamma: float,
    samples: int = 10_000,
    seed: int | None = None,
    model: NoiseModel | None = None,
) -> float:
    return haar_average(scheme, gamma, samples, seed, model)[0]
