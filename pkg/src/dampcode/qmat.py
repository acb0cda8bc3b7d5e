"""Small dense complex linear algebra.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128`` stored
row-major. Qubit 0 is always the leftmost tensor factor, so the basis index
of ``|q0 q1 ... q(n-1)>`` is the binary number ``q0 q1 ... q(n-1)``.

The eigen- and singular-value solvers are cyclic Jacobi sweeps, run by the
compiled ``_kernels`` extension when it is importable and by the
pure-Python ``_kernels_py`` twin otherwise. Set ``DAMPCODE_PURE_PYTHON=1``
to force the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

if os.environ.get("DAMPCODE_PURE_PYTHON") == "1":
    from . import _kernels_py as _kern
else:
    try:
        from . import _kernels as _kern
    except ImportError:  # extension not built
        from . import _kernels_py as _kern

BACKEND: str = _kern.BACKEND


@dataclass(frozen=True)
class Tolerances:
    """Every numerical threshold used by the package, in one place."""

    jacobi: float = 1e-13
    jacobi_max_sweeps: int = 100
    rank: float = 1e-9
    hermitian: float = 1e-10
    psd: float = 1e-9
    trace: float = 1e-10
    unitary: float = 1e-10
    norm: float = 1e-10
    zero_prob: float = 1e-12
    phase_tie: float = 1e-12


TOL = Tolerances()


class QmatError(ValueError):
    """Raised for malformed matrices or states."""


def cmatrix(a) -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex matrix."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise QmatError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise QmatError("matrix has non-finite entries")
    return m


def dag(a: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(a))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def kron_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for m in mats:
        out = np.kron(out, m)
    return out


def nqubits_of(m: np.ndarray) -> int:
    d = m.shape[0]
    n = d.bit_length() - 1
    if d < 1 or (1 << n) != d:
        raise QmatError(f"dimension {d} is not a power of two")
    return n


def is_hermitian(m: np.ndarray, atol: float = TOL.hermitian) -> bool:
    return m.shape[0] == m.shape[1] and bool(np.allclose(m, dag(m), rtol=0.0, atol=atol))


def is_unitary(u: np.ndarray, atol: float = TOL.unitary) -> bool:
    return u.shape[0] == u.shape[1] and bool(
        np.allclose(dag(u) @ u, np.eye(u.shape[0]), rtol=0.0, atol=atol)
    )


def is_isometry(v: np.ndarray, atol: float = TOL.unitary) -> bool:
    return bool(np.allclose(dag(v) @ v, np.eye(v.shape[1]), rtol=0.0, atol=atol))


def ket(amplitudes: Sequence[complex], normalize: bool = False) -> np.ndarray:
    """Column-free 1-D state vector; checks unit norm unless ``normalize``."""
    psi = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
    n = np.linalg.norm(psi)
    if normalize:
        if n == 0:
            raise QmatError("zero vector cannot be normalized")
        return psi / n
    if abs(n - 1.0) > TOL.norm:
        raise QmatError(f"state norm {n} differs from 1")
    nqubits_of(np.empty((psi.size, 1)))
    return psi


def basis_ket(bits: str) -> np.ndarray:
    psi = np.zeros(1 << len(bits), dtype=np.complex128)
    psi[int(bits, 2)] = 1.0
    return psi


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    return np.outer(psi, np.conj(psi))


def check_density(rho: np.ndarray, normalized: bool = True) -> np.ndarray:
    """Validate a density matrix (or a subnormalized one when ``normalized`` is False)."""
    rho = cmatrix(rho)
    if rho.shape[0] != rho.shape[1]:
        raise QmatError("density matrix must be square")
    n = nqubits_of(rho)
    if not 1 <= n <= 4:
        raise QmatError(f"density matrices span 1..4 qubits, got {n}")
    if not is_hermitian(rho):
        raise QmatError("density matrix is not Hermitian")
    w = eigvalsh(rho)
    if w[0] < -TOL.psd:
        raise QmatError(f"density matrix has negative eigenvalue {w[0]:.3e}")
    tr = float(np.real(np.trace(rho)))
    if normalized and abs(tr - 1.0) > TOL.trace:
        raise QmatError(f"trace {tr} differs from 1")
    if not normalized and tr > 1.0 + TOL.trace:
        raise QmatError(f"subnormalized state has trace {tr} > 1")
    return rho


def partial_trace(rho: np.ndarray, keep: Iterable[int]) -> np.ndarray:
    """Trace out every qubit not in ``keep``; kept qubits stay in ascending order."""
    rho = np.asarray(rho, dtype=np.complex128)
    n = nqubits_of(rho)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise QmatError(f"qubit indices {keep} out of range for {n} qubits")
    letters = "abcdefghijklmnop"
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for q in range(n):
        if q not in keep:
            col[q] = row[q]
    out = "".join(row[q] for q in keep) + "".join(col[q] for q in keep)
    t = np.einsum("".join(row) + "".join(col) + "->" + out, rho.reshape((2,) * (2 * n)))
    d = 1 << len(keep)
    return t.reshape(d, d)


def _phase_of_largest(vec: np.ndarray) -> complex:
    mags = np.abs(vec)
    top = mags.max()
    if top == 0.0:
        return 1.0
    idx = int(np.argmax(mags >= top - TOL.phase_tie))
    return vec[idx] / mags[idx]


def normalize_column_phases(m: np.ndarray) -> np.ndarray:
    """Rephase each column so its largest-magnitude entry (first on ties) is real positive."""
    out = np.array(m, dtype=np.complex128, copy=True)
    for j in range(out.shape[1]):
        out[:, j] = out[:, j] / _phase_of_largest(out[:, j])
    return out


def align_global_phase(a: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Multiply ``a`` by the phase that best aligns it with ``ref``."""
    overlap = np.vdot(a.reshape(-1), ref.reshape(-1))
    if abs(overlap) < 1e-300:
        return np.array(a, dtype=np.complex128)
    return a * (overlap / abs(overlap))


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-9) -> bool:
    return bool(np.max(np.abs(align_global_phase(a, b) - b)) < atol)


def columns_equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-10) -> bool:
    if a.shape != b.shape:
        return False
    return all(equal_up_to_phase(a[:, j], b[:, j], atol) for j in range(a.shape[1]))


def eigh(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors of a Hermitian matrix."""
    m = cmatrix(m)
    if not is_hermitian(m, atol=max(TOL.hermitian, TOL.hermitian * np.abs(m).max())):
        raise QmatError("eigh requires a Hermitian matrix")
    h = 0.5 * (m + dag(m))
    w, v, _ = _kern.herm_eig_jacobi(h, TOL.jacobi, TOL.jacobi_max_sweeps)
    order = np.argsort(w, kind="stable")
    return w[order], normalize_column_phases(v[:, order])


def eigvalsh(m: np.ndarray) -> np.ndarray:
    return eigh(m)[0]


def svd(t: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD ``t = u @ diag(s) @ vh`` of a matrix with rows >= cols.

    Singular values are returned in descending order. Left singular vectors
    belonging to values below ``TOL.rank`` are completed by Gram-Schmidt over
    the standard basis; right singular vectors carry the largest-entry-real
    phase convention.
    """
    t = cmatrix(t)
    m, n = t.shape
    if m < n:
        raise QmatError("svd expects rows >= cols")
    b, v, _ = _kern.svd_jacobi(t, TOL.jacobi, TOL.jacobi_max_sweeps)
    s = np.linalg.norm(b, axis=0)
    order = np.argsort(-s, kind="stable")
    s = s[order]
    b = b[:, order]
    v = v[:, order]
    # rephase right vectors; left columns follow so that t v = u s still holds
    for j in range(n):
        ph = _phase_of_largest(v[:, j])
        v[:, j] /= ph
        b[:, j] /= ph
    u = np.zeros((m, n), dtype=np.complex128)
    keep = s > TOL.rank
    u[:, keep] = b[:, keep] / s[keep]
    if not np.all(keep):
        s = np.where(keep, s, 0.0)
        u = _complete_columns(u, keep)
    return u, s, dag(v)


def _complete_columns(u: np.ndarray, filled: np.ndarray) -> np.ndarray:
    """Fill the unfilled columns of ``u`` with orthonormal vectors (Gram-Schmidt)."""
    m = u.shape[0]
    basis = [u[:, j] for j in range(u.shape[1]) if filled[j]]
    candidates = iter(np.eye(m, dtype=np.complex128))
    for j in range(u.shape[1]):
        if filled[j]:
            continue
        for e in candidates:
            w = e.copy()
            for _ in range(2):
                for b in basis:
                    w = w - np.vdot(b, w) * b
            nrm = np.linalg.norm(w)
            if nrm > 1e-6:
                w = w / nrm
                u[:, j] = w / _phase_of_largest(w)
                basis.append(u[:, j])
                break
        else:  # pragma: no cover - cannot happen for m >= n
            raise QmatError("could not complete isometry")
    return u


def polar_decompose(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Right polar decomposition ``t = v @ p`` of a tall matrix.

    ``v`` has orthonormal columns and ``p = sqrt(t^H t)`` is Hermitian PSD.
    For rank-deficient ``t`` the null directions of ``v`` are completed (see
    :func:`svd`); they do not affect ``v @ p``.
    """
    u, s, vh = svd(t)
    v = u @ vh
    p = dag(vh) @ np.diag(s) @ vh
    return v, 0.5 * (p + dag(p))


def matrix_sqrt_psd(m: np.ndarray) -> np.ndarray:
    """Principal square root of a Hermitian positive-semidefinite matrix."""
    m = cmatrix(m)
    scale = max(1.0, float(np.abs(m).max()))
    if not is_hermitian(m, atol=TOL.hermitian * scale):
        raise QmatError("matrix_sqrt_psd requires a Hermitian matrix")
    w, v = eigh(m)
    if w[0] < -TOL.psd * scale:
        raise QmatError(f"matrix has negative eigenvalue {w[0]:.3e}")
    r = v @ np.diag(np.sqrt(np.clip(w, 0.0, None))) @ dag(v)
    return 0.5 * (r + dag(r))


def project_psd(m: np.ndarray) -> np.ndarray:
    """Nearest unit-trace PSD matrix by clipping negative eigenvalues."""
    h = 0.5 * (m + dag(m))
    w, v = eigh(h)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0.0:
        raise QmatError("cannot project a negative semidefinite matrix")
    w = w / w.sum()
    r = v @ np.diag(w) @ dag(v)
    return 0.5 * (r + dag(r))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    w = eigvalsh(0.5 * ((a - b) + dag(a - b)))
    return 0.5 * float(np.sum(np.abs(w)))


def fidelity_pure(psi: np.ndarray, rho: np.ndarray) -> float:
    """<psi|rho|psi> for a pure reference state."""
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    return float(np.real(np.vdot(psi, rho @ psi)))
