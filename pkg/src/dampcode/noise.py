"""Device-noise models layered on the ideal encode -> channel -> recover pipeline.

Register layout for the corrected pipeline is ``[A, B, ancA, ancB]`` (qubits
0..3). Mechanisms:

* depolarizing noise after every gate, with the reported average gate error
  used directly as the depolarizing probability;
* phase damping on the code qubits from ``T2``, lumped over the accumulated
  gate time before recovery (or interleaved after every gate on request);
* readout confusion of the ancilla syndrome bits, of the mid-circuit
  measurement in the recovery, and of the final single-qubit tomography;
* shot survival: accepted-event rates per reported syndrome.

Every stage is linear in the input state, so the whole pipeline is stored as
per-branch linear maps (:class:`Pipeline`); normalization and branch
weighting are applied afterwards.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import channels, circuits
from .circuits import Gate, I2, X, Z
from .code import SYNDROMES
from .qmat import TOL, dag, partial_trace
from . import recovery
from .recovery import SchemeKind, parse_scheme

MECHANISMS = ("depolarizing", "dephasing", "readout", "shot_loss")
STAGES = ("prep", "encoder", "channel", "recovery")
DEFAULT_DURATIONS_NS = {"cnot": 348.0, "single": 100.0, "buffer": 20.0}
PRESET_NAMES = ("ibmq", "optical", "nmr")

_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_PAULIS = (I2, X, _Y, Z)


class NoiseError(ValueError):
    pass


def _syn_key(syndrome: Sequence[int]) -> str:
    return "".join(str(b) for b in syndrome)


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Immutable noise configuration.

    Qubit-indexed lists follow the register ``[A, B, ancA, ancB]``; pair keys
    are ``"i-j"`` with an optional ``"default"``. ``shot_survival`` is either a
    scalar applied to branches whose recovery CNOT is active, or a mapping
    from syndrome strings (``"00"`` .. ``"11"``) to factors.
    """

    single_gate_error: tuple[float, ...] = (0.0, 0.0, 0.0, 0.0)
    two_gate_error: Mapping[str, float] = field(default_factory=dict)
    readout_error: tuple[float, ...] = (0.0, 0.0, 0.0, 0.0)
    t2_ns: tuple[float, ...] = (math.inf,) * 4
    gate_durations_ns: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_DURATIONS_NS))
    shot_survival: float | Mapping[str, float] = 1.0
    enabled: Mapping[str, bool] = field(default_factory=lambda: {m: True for m in MECHANISMS})
    noisy_stages: tuple[str, ...] = STAGES
    total_duration_ns: float | None = None
    interleave_dephasing: bool = False
    name: str = "custom"

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)
        set_("single_gate_error", _per_qubit(self.single_gate_error, "single_gate_error"))
        set_("readout_error", _per_qubit(self.readout_error, "readout_error"))
        t2 = _per_qubit(self.t2_ns, "t2_ns", check=False)
        if any(not v > 0 for v in t2):
            raise NoiseError("t2_ns must be positive")
        set_("t2_ns", t2)
        pairs = {}
        for k, v in dict(self.two_gate_error).items():
            if k != "default":
                try:
                    i, j = (int(x) for x in k.split("-"))
                except ValueError:
                    raise NoiseError(f"bad qubit pair key {k!r}") from None
                k = f"{min(i, j)}-{max(i, j)}"
            pairs[k] = _probability(v, f"two_gate_error[{k}]")
        set_("two_gate_error", pairs)
        durs = dict(DEFAULT_DURATIONS_NS)
        durs.update(self.gate_durations_ns)
        for k, v in durs.items():
            if k not in DEFAULT_DURATIONS_NS:
                raise NoiseError(f"unknown gate duration key {k!r}")
            if not float(v) >= 0:
                raise NoiseError(f"duration {k} must be nonnegative")
        set_("gate_durations_ns", {k: float(v) for k, v in durs.items()})
        if isinstance(self.shot_survival, Mapping):
            surv = {}
            for k, v in self.shot_survival.items():
                if k not in {_syn_key(s) for s in SYNDROMES}:
                    raise NoiseError(f"bad syndrome key {k!r} in shot_survival")
                surv[k] = _survival(v)
            set_("shot_survival", surv)
        else:
            set_("shot_survival", _survival(self.shot_survival))
        flags = {m: True for m in MECHANISMS}
        for k, v in dict(self.enabled).items():
            if k not in MECHANISMS:
                raise NoiseError(f"unknown mechanism {k!r}")
            flags[k] = bool(v)
        set_("enabled", flags)
        stages = tuple(self.noisy_stages)
        for s in stages:
            if s not in STAGES:
                raise NoiseError(f"unknown stage {s!r}")
        set_("noisy_stages", stages)
        if self.total_duration_ns is not None and not self.total_duration_ns >= 0:
            raise NoiseError("total_duration_ns must be nonnegative")

    def pair_error(self, a: int, b: int) -> float:
        key = f"{min(a, b)}-{max(a, b)}"
        return self.two_gate_error.get(key, self.two_gate_error.get("default", 0.0))

    def survival(self, kind: SchemeKind | str, syndrome: tuple[int, int]) -> float:
        if not self.enabled["shot_loss"]:
            return 1.0
        if isinstance(self.shot_survival, dict):
            return self.shot_survival.get(_syn_key(syndrome), 1.0)
        return self.shot_survival if recovery.cnot_active(kind, syndrome) else 1.0

    def on(self, mechanism: str, stage: str | None = None) -> bool:
        return self.enabled[mechanism] and (stage is None or stage in self.noisy_stages)

    def replace(self, **changes) -> "NoiseModel":
        d = self.to_dict()
        d.update(changes)
        return NoiseModel.from_dict(d)

    def to_dict(self) -> dict:
        surv = dict(self.shot_survival) if isinstance(self.shot_survival, dict) else self.shot_survival
        return {
            "name": self.name,
            "single_gate_error": list(self.single_gate_error),
            "two_gate_error": dict(self.two_gate_error),
            "readout_error": list(self.readout_error),
            "t2_ns": [None if math.isinf(v) else v for v in self.t2_ns],
            "gate_durations_ns": dict(self.gate_durations_ns),
            "shot_survival": surv,
            "enabled": dict(self.enabled),
            "noisy_stages": list(self.noisy_stages),
            "total_duration_ns": self.total_duration_ns,
            "interleave_dephasing": self.interleave_dephasing,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "NoiseModel":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise NoiseError(f"unknown noise model keys: {sorted(extra)}")
        d = dict(d)
        if "t2_ns" in d:
            t2 = d["t2_ns"]
            if t2 is None or isinstance(t2, (int, float)):
                t2 = [t2] * 4
            d["t2_ns"] = tuple(math.inf if v is None else float(v) for v in t2)
        for k in ("single_gate_error", "readout_error"):
            if k in d and isinstance(d[k], (int, float)):
                d[k] = [d[k]] * 4
        if "two_gate_error" in d and isinstance(d["two_gate_error"], (int, float)):
            d["two_gate_error"] = {"default": d["two_gate_error"]}
        try:
            return cls(**d)
        except TypeError as exc:
            raise NoiseError(str(exc)) from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str, name: str | None = None) -> "NoiseModel":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise NoiseError(f"invalid noise JSON: {exc}") from None
        if not isinstance(d, dict):
            raise NoiseError("noise JSON must be an object")
        if name is not None and "name" not in d:
            d["name"] = name
        return cls.from_dict(d)

    def _key(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def __eq__(self, other) -> bool:
        return isinstance(other, NoiseModel) and self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())


def _per_qubit(values, name: str, check: bool = True) -> tuple[float, ...]:
    if isinstance(values, (int, float)):
        values = [values] * 4
    vals = tuple(float(v) for v in values)
    if len(vals) != 4:
        raise NoiseError(f"{name} needs 4 per-qubit entries, got {len(vals)}")
    if check:
        for v in vals:
            _probability(v, name)
    return vals


def _probability(v, name: str) -> float:
    try:
        return channels.check_probability(v, name)
    except channels.ChannelError as exc:
        raise NoiseError(str(exc)) from None


def _survival(v) -> float:
    v = float(v)
    if not 0.0 < v <= 1.0:
        raise NoiseError(f"shot survival must lie in (0, 1], got {v}")
    return v


def ideal_model() -> NoiseModel:
    """A model with every mechanism switched off."""
    return NoiseModel(enabled={m: False for m in MECHANISMS}, name="none")


def load_noise_model(spec: str | Path) -> NoiseModel:
    """Load a model from a JSON path or a bundled preset name.

    ``"ibmq"``, ``"ibmq.json"`` and ``"presets/ibmq.json"`` all resolve to the
    bundled preset when no such file exists on disk. ``"none"`` gives
    :func:`ideal_model`.
    """
    s = str(spec)
    if s.lower() == "none":
        return ideal_model()
    path = Path(s)
    if path.is_file():
        try:
            text = path.read_text()
        except OSError as exc:
            raise NoiseError(f"cannot read {path}: {exc}") from None
        return NoiseModel.from_json(text, name=path.stem)
    stem = path.name[:-5] if path.name.endswith(".json") else path.name
    if stem in PRESET_NAMES:
        text = resources.files("dampcode").joinpath("presets", f"{stem}.json").read_text()
        return NoiseModel.from_json(text, name=stem)
    raise FileNotFoundError(f"no noise model file or preset named {s!r}")


@dataclass(frozen=True)
class DecoherenceEstimate:
    duration: float
    t2: float
    p_sys: float


def decoherence_estimate(duration: float, t2: float) -> DecoherenceEstimate:
    """Two-qubit dephasing error ``1/2 - 1/2 exp(-2 duration / T2)``.

    ``duration`` and ``t2`` share whatever time unit the caller uses.
    """
    if not t2 > 0:
        raise NoiseError(f"T2 must be positive, got {t2}")
    if duration < 0:
        raise NoiseError(f"duration must be nonnegative, got {duration}")
    return DecoherenceEstimate(duration, t2, 0.5 - 0.5 * math.exp(-2.0 * duration / t2))


def t2_from_estimate(duration: float, p_sys: float) -> float:
    """Invert :func:`decoherence_estimate` for ``T2``."""
    if not 0.0 < p_sys < 0.5:
        raise NoiseError(f"p_sys must lie in (0, 1/2), got {p_sys}")
    if not duration > 0:
        raise NoiseError("duration must be positive")
    return -2.0 * duration / math.log(1.0 - 2.0 * p_sys)


# ---------------------------------------------------------------------------
# elementary noise actions on n-qubit (not necessarily Hermitian) operators


@lru_cache(maxsize=64)
def _embedded_paulis(q: int, n: int) -> tuple[np.ndarray, ...]:
    return tuple(circuits.embed({q: P}, n) for P in _PAULIS)


def depolarize(rho: np.ndarray, qubits: Sequence[int], p: float) -> np.ndarray:
    """``(1 - p) rho + p tr_S(rho) x I/2^|S|`` on the qubit subset ``S``."""
    if p == 0.0:
        return rho
    n = int(round(math.log2(rho.shape[0])))
    twirled = rho
    for q in qubits:
        twirled = sum(P @ twirled @ P for P in _embedded_paulis(q, n)) / 4.0
    return (1.0 - p) * rho + p * twirled


def dephase(rho: np.ndarray, qubits: Sequence[int], lam: float) -> np.ndarray:
    """Scale coherences of each qubit in ``qubits`` by ``lam``."""
    if lam == 1.0:
        return rho
    n = int(round(math.log2(rho.shape[0])))
    for q in qubits:
        z = _embedded_paulis(q, n)[3]
        rho = 0.5 * (1.0 + lam) * rho + 0.5 * (1.0 - lam) * (z @ rho @ z)
    return rho


def shrink_bloch(rho1: np.ndarray, eps: float) -> np.ndarray:
    """Readout flips ``eps`` on every Pauli measurement shrink the Bloch vector by ``1 - 2 eps``."""
    if eps == 0.0:
        return rho1
    tr = np.trace(rho1)
    return (1.0 - 2.0 * eps) * rho1 + 2.0 * eps * tr * I2 / 2.0


def confusion_matrix(eps: Sequence[float]) -> np.ndarray:
    """``M[r, t]``: probability of reporting syndrome ``r`` when ``t`` occurred."""
    e0, e1 = (channels.check_probability(e, "readout error") for e in eps)
    m0 = np.array([[1 - e0, e0], [e0, 1 - e0]])
    m1 = np.array([[1 - e1, e1], [e1, 1 - e1]])
    return np.kron(m0, m1)


def readout_confuse(probabilities: Sequence[float], eps: Sequence[float]) -> np.ndarray:
    """Independent bit-flip confusion of the two syndrome bits.

    ``probabilities`` is ordered like ``SYNDROMES`` (00, 01, 10, 11); ``eps``
    holds the flip rates of the first and second bit.
    """
    p = np.asarray(probabilities, dtype=float)
    if p.shape != (4,) or np.any(p < -TOL.zero_prob) or abs(p.sum() - 1.0) > 1e-9:
        raise NoiseError("syndrome distribution must be 4 nonnegative numbers summing to 1")
    return confusion_matrix(eps) @ p


def shot_loss_reweight(branches, survival) -> tuple[np.ndarray, np.ndarray]:
    """Measured and ideal syndrome distributions.

    ``branches`` holds objects with a ``prob`` attribute or plain
    probabilities; ``survival`` is a sequence or a scalar.
    """
    ideal = np.array([getattr(b, "prob", b) for b in branches], dtype=float)
    surv = np.broadcast_to(np.asarray(survival, dtype=float), ideal.shape)
    if np.any(surv < 0) or np.any(surv > 1):
        raise NoiseError("survival factors must lie in (0, 1]")
    if not np.any(surv > 0):
        raise NoiseError("all survival factors are zero")
    total = ideal.sum()
    if total <= 0:
        raise NoiseError("branch probabilities sum to zero")
    ideal = ideal / total
    measured = ideal * surv
    if measured.sum() <= 0:
        raise NoiseError("no surviving weight")
    return measured / measured.sum(), ideal


# ---------------------------------------------------------------------------
# pipeline as per-branch linear maps


@dataclass(frozen=True)
class BranchMap:
    """Linear data for one reported syndrome.

    ``out[a, b]`` is the unnormalized output for input ``|a><b|`` and
    ``weight[a, b]`` the corresponding branch trace. With ``renormalize`` the
    output is rescaled to the branch weight (isometric recovery that may
    leak weight out of its range).
    """

    syndrome: tuple[int, ...]
    out: np.ndarray
    weight: np.ndarray
    survival: float = 1.0
    renormalize: bool = False


@dataclass(frozen=True)
class Pipeline:
    kind: SchemeKind
    gamma: float
    branches: tuple[BranchMap, ...]

    @property
    def syndromes(self) -> list[tuple[int, ...]]:
        return [b.syndrome for b in self.branches]

    @property
    def survival(self) -> np.ndarray:
        return np.array([b.survival for b in self.branches])

    def branch_data(self, rhos: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Branch probabilities, normalized states and leaked weights.

        ``rhos`` has shape ``(k, 2, 2)``; returns arrays of shape ``(k, R)``,
        ``(k, R, 2, 2)`` and ``(k, R)``. States of empty branches are zero.
        """
        rhos = np.asarray(rhos, dtype=np.complex128)
        single = rhos.ndim == 2
        if single:
            rhos = rhos[None]
        k, r = len(rhos), len(self.branches)
        probs = np.zeros((k, r))
        states = np.zeros((k, r, 2, 2), dtype=np.complex128)
        leaks = np.zeros((k, r))
        for j, b in enumerate(self.branches):
            w = np.real(np.einsum("kab,ab->k", rhos, b.weight))
            o = np.einsum("kab,abij->kij", rhos, b.out)
            tr = np.real(np.einsum("kii->k", o))
            live = w > TOL.zero_prob
            probs[:, j] = np.where(live, w, 0.0)
            if b.renormalize:
                ok = live & (tr > TOL.zero_prob)
                leaks[:, j] = np.where(ok, 1.0 - tr / np.where(ok, w, 1.0), np.where(live, 1.0, 0.0))
                lost = live & ~ok
                states[lost, j] = I2 / 2.0
            else:
                ok = live
            states[ok, j] = o[ok] / tr[ok, None, None]
        if single:
            return probs[0], states[0], leaks[0]
        return probs, states, leaks

    def output(self, rhos: np.ndarray, survival: bool = True) -> np.ndarray:
        """Recombined output ``sum_r w_r rho_r`` with survival-weighted, renormalized ``w``."""
        probs, states, _ = self.branch_data(rhos)
        w = probs * self.survival if survival else probs
        w = w / w.sum(axis=-1, keepdims=True)
        return np.einsum("...r,...rij->...ij", w, states)


def _gate_time(model: NoiseModel, arity: int) -> float:
    d = model.gate_durations_ns
    return (d["cnot"] if arity == 2 else d["single"]) + 2.0 * d["buffer"]


_STAGE_GATES = {
    "prep": [1],
    "encoder": [2, 1, 1],
    "channel": [2, 2, 2, 2],
    "recovery": [1, 1, 2, 1, 1],
}


def accumulated_duration_ns(model: NoiseModel, corrected: bool = True) -> float:
    """Gate time (with buffers) over the noisy stages, or the override."""
    if model.total_duration_ns is not None:
        return model.total_duration_ns
    stages = STAGES if corrected else ("prep", "channel")
    total = 0.0
    for s in stages:
        if s not in model.noisy_stages:
            continue
        gates = _STAGE_GATES[s]
        if s == "channel" and not corrected:
            gates = gates[:2]
        total += sum(_gate_time(model, arity) for arity in gates)
    return total


class _Noisy:
    """Per-gate noise hooks for one model."""

    def __init__(self, model: NoiseModel):
        self.m = model

    def lam(self, q: int, duration: float) -> float:
        return math.exp(-duration / self.m.t2_ns[q])

    def after(self, rho: np.ndarray, qubits: Sequence[int], stage: str) -> np.ndarray:
        m = self.m
        if m.on("depolarizing", stage):
            if len(qubits) == 1:
                rho = depolarize(rho, qubits, m.single_gate_error[qubits[0]])
            else:
                rho = depolarize(rho, qubits, m.pair_error(*qubits))
        if m.interleave_dephasing and m.on("dephasing", stage):
            dt = _gate_time(m, len(qubits))
            for q in (0, 1):
                rho = dephase(rho, (q,), self.lam(q, dt))
        return rho

    def run(self, gates: Sequence[Gate], rho: np.ndarray, stage: str) -> np.ndarray:
        n = int(round(math.log2(rho.shape[0])))
        for g in gates:
            u = circuits.gate_unitary(g, n)
            rho = u @ rho @ dag(u)
            rho = self.after(rho, g.qubits, stage)
        return rho

    def lumped(self, rho: np.ndarray, qubits: Sequence[int], corrected: bool) -> np.ndarray:
        m = self.m
        if not m.enabled["dephasing"] or m.interleave_dephasing:
            return rho
        t = accumulated_duration_ns(m, corrected)
        for q in qubits:
            rho = dephase(rho, (q,), self.lam(q, t))
        return rho


def _basis_inputs():
    for a in (0, 1):
        for b in (0, 1):
            e = np.zeros((2, 2), dtype=np.complex128)
            e[a, b] = 1.0
            yield a, b, e


def _prep(nz: _Noisy, e: np.ndarray) -> np.ndarray:
    if nz.m.on("depolarizing", "prep"):
        e = depolarize(e, (0,), nz.m.single_gate_error[0])
    return e


def _uncorrected_pipeline(gamma: float, model: NoiseModel) -> Pipeline:
    nz = _Noisy(model)
    out = np.zeros((2, 2, 2, 2), dtype=np.complex128)
    weight = np.zeros((2, 2), dtype=np.complex128)
    gadget = circuits.damping_gadget(gamma, 0, 1, 2)
    eps = model.readout_error[0] if model.enabled["readout"] else 0.0
    for a, b, e in _basis_inputs():
        rho = np.kron(_prep(nz, e), circuits.P0)
        rho = nz.run(gadget, rho, "channel")
        rho = nz.lumped(rho, (0,), corrected=False)
        rho1 = partial_trace(rho, [0])
        out[a, b] = shrink_bloch(rho1, eps)
        weight[a, b] = np.trace(rho1)
    return Pipeline(SchemeKind.NO_CORRECTION, gamma, (BranchMap((), out, weight),))


def _corrected_pipeline(kind: SchemeKind, gamma: float, model: NoiseModel) -> Pipeline:
    nz = _Noisy(model)
    ro = model.enabled["readout"]
    conf = confusion_matrix(model.readout_error[2:4] if ro else (0.0, 0.0))
    enc = circuits.encoder_circuit(0, 1, 2).gates
    chan = circuits.damping_gadget(gamma, 0, 2, 4) + circuits.damping_gadget(gamma, 1, 3, 4)
    anc0 = np.kron(circuits.P0, circuits.P0)
    # sigma[t][a, b]: AB state of syndrome t for input |a><b|
    sigma = np.zeros((4, 2, 2, 4, 4), dtype=np.complex128)
    for a, b, e in _basis_inputs():
        rho = nz.run(enc, np.kron(_prep(nz, e), circuits.P0), "encoder")
        rho = nz.run(chan, np.kron(rho, anc0), "channel")
        r = rho.reshape(4, 4, 4, 4)
        for t, (i, j) in enumerate(SYNDROMES):
            s = 2 * i + j
            sigma[t, a, b] = nz.lumped(r[:, s, :, s], (0, 1), corrected=True)
    reported = np.einsum("rt,tabij->rabij", conf, sigma)

    branches = []
    for r_idx, syn in enumerate(SYNDROMES):
        out = np.zeros((2, 2, 2, 2), dtype=np.complex128)
        weight = np.einsum("abii->ab", reported[r_idx])
        if kind is SchemeKind.GENERIC_POLAR:
            v = recovery._polar_set(float(gamma))[syn]
            keep = 0
            for a, b, _ in _basis_inputs():
                out[a, b] = dag(v) @ reported[r_idx, a, b] @ v
        else:
            ops = recovery.scheme_ops(kind, syn, gamma)
            keep = ops.keep

            def hook(rho, _kind, qubits):
                return nz.after(rho, qubits, "recovery")

            flip = model.readout_error[1 - keep] if ro else 0.0
            for a, b, _ in _basis_inputs():
                out[a, b] = recovery.run_recovery_ops(ops, reported[r_idx, a, b], hook, flip)
        if ro:
            eps = model.readout_error[keep]
            for a, b, _ in _basis_inputs():
                out[a, b] = shrink_bloch(out[a, b], eps)
        branches.append(
            BranchMap(
                syn,
                out,
                weight,
                survival=model.survival(kind, syn),
                renormalize=kind is SchemeKind.GENERIC_POLAR,
            )
        )
    return Pipeline(kind, gamma, tuple(branches))


@lru_cache(maxsize=4096)
def _pipeline_cached(kind: SchemeKind, gamma: float, model: NoiseModel) -> Pipeline:
    if kind is SchemeKind.NO_CORRECTION:
        return _uncorrected_pipeline(gamma, model)
    return _corrected_pipeline(kind, gamma, model)


def build_pipeline(kind: SchemeKind | str, gamma: float, model: NoiseModel | None = None) -> Pipeline:
    """Linear pipeline maps for a scheme at one damping value."""
    kind = parse_scheme(kind)
    g = channels.check_gamma(gamma)
    return _pipeline_cached(kind, g, model if model is not None else ideal_model())


def noisy_pipeline(kind: SchemeKind | str, gamma: float, model: NoiseModel | None, psi: np.ndarray) -> np.ndarray:
    """Normalized output state for one pure (or mixed) input under ``model``."""
    psi = np.asarray(psi, dtype=np.complex128)
    rho = np.outer(psi, psi.conj()) if psi.ndim == 1 else psi
    return build_pipeline(kind, gamma, model).output(rho)
