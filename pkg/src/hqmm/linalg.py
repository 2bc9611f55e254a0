"""Dense complex matrix kernel.

Matrices are plain ``numpy`` complex arrays. The eigensolver is a cyclic
complex Jacobi iteration, which is deterministic and accurate for the small
(2-16 dimensional) Hermitian operators the decoder works with.
"""
from typing import NamedTuple, Tuple

import numpy as np

from .errors import DimensionError, SizeLimitError, ValidationError

MAX_DIM = 4096
HERMITIAN_RTOL = 1e-10
JACOBI_MAX_DIM = 16
_JACOBI_MAX_SWEEPS = 60


class Spectrum(NamedTuple):
    eigenvalues: np.ndarray  # real, descending
    eigenvectors: np.ndarray  # columns, orthonormal, canonical phase


def as_matrix(a) -> np.ndarray:
    """Coerce to a finite 2-D complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or 0 in m.shape:
        raise ValidationError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    return m


def hermitian_defect(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - a.conj().T))


def is_hermitian(a, rtol: float = HERMITIAN_RTOL) -> bool:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return hermitian_defect(m) <= rtol * max(1.0, float(np.linalg.norm(m)))


def as_hermitian(a, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Validate Hermiticity to ``rtol`` (relative) and return the symmetrized matrix."""
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"Hermitian matrix must be square, got {m.shape}")
    defect = hermitian_defect(m)
    if defect > rtol * max(1.0, float(np.linalg.norm(m))):
        raise ValidationError(f"matrix is not Hermitian: ||A - A^dag||_F = {defect:.3e}")
    return (m + m.conj().T) / 2


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product; entry (i*rb + k, j*cb + l) is a[i, j] * b[k, l]."""
    a, b = as_matrix(a), as_matrix(b)
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    if rows > MAX_DIM or cols > MAX_DIM:
        raise SizeLimitError(f"tensor product of size {rows}x{cols} exceeds limit {MAX_DIM}")
    return np.kron(a, b)


def partial_trace(x: np.ndarray, dims: Tuple[int, int], keep: int) -> np.ndarray:
    """Trace out one factor of an operator on a bipartite space; ``keep`` is 0 or 1."""
    d0, d1 = dims
    t = np.asarray(x).reshape(d0, d1, d0, d1)
    if keep == 0:
        return np.einsum("ikjk->ij", t)
    return np.einsum("kikj->ij", t)


def canonical_phase(v: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    """Rotate the global phase so the first non-negligible component is real positive."""
    v = np.asarray(v, dtype=complex)
    idx = np.flatnonzero(np.abs(v) > atol * max(1.0, float(np.max(np.abs(v)))))
    if idx.size == 0:
        return v.copy()
    c = v[idx[0]]
    out = v * (abs(c) / c)
    out[idx[0]] = abs(c)
    return out


def _jacobi(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Cyclic complex Jacobi; returns (diagonal, accumulated unitary)."""
    a = a.copy()
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(float(np.linalg.norm(a)), np.finfo(float).tiny)
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= 1e-15 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300 or mag <= 1e-18 * scale:
                    continue
                phase = apq / mag
                # real 2x2 rotation on the phase-aligned pair
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2.0 * mag)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # J = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                jpp, jpq = c, s
                jqp, jqq = -s * phase.conjugate(), c * phase.conjugate()
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = col_p * jpp + col_q * jqp
                a[:, q] = col_p * jpq + col_q * jqq
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = np.conj(jpp) * row_p + np.conj(jqp) * row_q
                a[q, :] = np.conj(jpq) * row_p + np.conj(jqq) * row_q
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = vp * jpp + vq * jqp
                v[:, q] = vp * jpq + vq * jqq
    return np.diag(a).real.copy(), v


def hermitian_eig(a) -> Spectrum:
    """Full spectrum of a Hermitian matrix, eigenvalues descending.

    Equal eigenvalues keep the solver's column order, so a degenerate top
    eigenspace resolves to the lowest-index vector. Each eigenvector carries
    the canonical phase.
    """
    m = as_hermitian(a)
    if m.shape[0] <= JACOBI_MAX_DIM:
        w, v = _jacobi(m)
    else:
        # large operators only appear in Choi checks of two-factor maps
        w, v = np.linalg.eigh(m)
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    v = np.column_stack([canonical_phase(v[:, k]) for k in range(v.shape[1])])
    return Spectrum(w, v)


def top_eigenvector(a) -> Tuple[np.ndarray, float]:
    spec = hermitian_eig(a)
    return spec.eigenvectors[:, 0].copy(), float(spec.eigenvalues[0])


def top_eigenprojector(a) -> Tuple[np.ndarray, float]:
    """Projector onto the top eigenvector, and the top eigenvalue."""
    ket, lam = top_eigenvector(a)
    return np.outer(ket, ket.conj()), lam


def _ket_of(p) -> np.ndarray:
    ket = getattr(p, "ket", p)
    return np.asarray(ket, dtype=complex).ravel()


def fubini_study_distance(p, q) -> float:
    """arccos |<xi_p|xi_q>| between two pure states (``PureEffect`` or unit kets)."""
    x, y = _ket_of(p), _ket_of(q)
    if x.shape != y.shape:
        raise DimensionError(f"pure effects of different dimension: {x.size} vs {y.size}")
    x = x / np.linalg.norm(x)
    y = y / np.linalg.norm(y)
    overlap = np.vdot(x, y)
    # atan2 form stays accurate near 0, where arccos loses half the digits
    residual = np.linalg.norm(y - overlap * x)
    return float(np.arctan2(residual, abs(overlap)))
