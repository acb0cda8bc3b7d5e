"""Pure-Python Jacobi kernels.

Reference twin of ``_kernels.pyx``. Both modules run the same rotation
sequence; results agree to rounding, except that the SVD columns may differ
by a phase (``dampcode.qmat`` normalizes it). ``dampcode.qmat`` picks the
compiled module when it imports cleanly.
"""

import math

import numpy as np

BACKEND = "python"


def herm_eig_jacobi(a, tol=1e-13, max_sweeps=100):
    """Cyclic Jacobi eigendecomposition of a Hermitian matrix.

    Returns ``(w, v, sweeps)`` with unsorted eigenvalues ``w`` and
    eigenvectors in the columns of ``v``.
    """
    a = np.array(a, dtype=np.complex128, copy=True)
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    scale = math.sqrt(float(np.sum(np.abs(a) ** 2))) or 1.0
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += abs(a[p, q]) ** 2
        if math.sqrt(2.0 * off) <= tol * scale:
            sweeps -= 1
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase = apq / mag
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * mag)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                g_pp = c
                g_pq = s
                g_qp = -s * phase.conjugate()
                g_qq = c * phase.conjugate()
                # a <- a g
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = col_p * g_pp + col_q * g_qp
                a[:, q] = col_p * g_pq + col_q * g_qq
                # a <- g^H a
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = np.conj(g_pp) * row_p + np.conj(g_qp) * row_q
                a[q, :] = np.conj(g_pq) * row_p + np.conj(g_qq) * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = vp * g_pp + vq * g_qp
                v[:, q] = vp * g_pq + vq * g_qq
    w = np.real(np.diag(a)).copy()
    return w, v, sweeps


def svd_jacobi(a, tol=1e-13, max_sweeps=100):
    """One-sided (Hestenes) Jacobi on the columns of a tall matrix.

    Returns ``(b, v, sweeps)`` where the columns of ``b = a @ v`` are
    mutually orthogonal and ``v`` is unitary. Singular values are the
    column norms of ``b``.
    """
    b = np.array(a, dtype=np.complex128, copy=True)
    m, n = b.shape
    v = np.eye(n, dtype=np.complex128)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = float(np.real(np.vdot(b[:, p], b[:, p])))
                beta = float(np.real(np.vdot(b[:, q], b[:, q])))
                gamma = complex(np.vdot(b[:, p], b[:, q]))
                mag = abs(gamma)
                if mag <= tol * math.sqrt(alpha * beta) or mag <= 1e-300:
                    continue
                rotated = True
                phase = (gamma / mag).conjugate()
                zeta = (beta - alpha) / (2.0 * mag)
                if zeta >= 0.0:
                    t = 1.0 / (zeta + math.sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                bp = b[:, p].copy()
                bq = b[:, q] * phase
                b[:, p] = c * bp - s * bq
                b[:, q] = s * bp + c * bq
                vp = v[:, p].copy()
                vq = v[:, q] * phase
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        if not rotated:
            sweeps -= 1
            break
    return b, v, sweeps
