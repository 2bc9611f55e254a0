"""Effects, states and Kraus-represented completely positive maps.

Maps are stored in the Heisenberg picture: a Kraus operator ``K`` of shape
``(in_dim, out_dim)`` sends an operator ``X`` on the input space to
``K^dag X K`` on the output space. The Schrodinger dual is ``rho -> K rho K^dag``.
"""
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Tuple

import numpy as np

from .errors import DimensionError, ValidationError
from .linalg import as_hermitian, as_matrix, canonical_phase, hermitian_eig

EFFECT_ATOL = 1e-10
STATE_ATOL = 1e-10
CHOI_ATOL = 1e-8
UNITAL_ATOL = 1e-8

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
KET_0 = np.array([1, 0], dtype=complex)
KET_1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


def _spectrum_bounds(m: np.ndarray) -> Tuple[float, float]:
    w = hermitian_eig(m).eigenvalues
    return float(w[-1]), float(w[0])


@dataclass(frozen=True)
class Effect:
    """Operator ``E`` with ``0 <= E <= I``. Out-of-range spectra are rejected, not clipped."""

    matrix: np.ndarray

    def __post_init__(self):
        m = as_hermitian(self.matrix)
        lo, hi = _spectrum_bounds(m)
        if lo < -EFFECT_ATOL or hi > 1 + EFFECT_ATOL:
            raise ValidationError(f"effect spectrum [{lo:.3e}, {hi:.3e}] not inside [0, 1]")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class PureEffect:
    """Rank-one projection ``|xi><xi|``; stored by its ket with canonical phase."""

    ket: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.ket, dtype=complex).ravel()
        if v.size == 0 or not np.all(np.isfinite(v)):
            raise ValidationError("pure effect needs a finite, non-empty ket")
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            raise ValidationError("pure effect ket has zero norm")
        object.__setattr__(self, "ket", _frozen(canonical_phase(v / norm)))

    @classmethod
    def basis(cls, index: int, dim: int) -> "PureEffect":
        v = np.zeros(dim, dtype=complex)
        v[index] = 1.0
        return cls(v)

    @classmethod
    def from_bloch(cls, theta: float, phi: float) -> "PureEffect":
        return cls(np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)]))

    @property
    def dim(self) -> int:
        return self.ket.size

    @property
    def matrix(self) -> np.ndarray:
        return np.outer(self.ket, self.ket.conj())

    def key(self) -> Tuple[float, ...]:
        """Lexicographic tie-break key: interleaved (re, im) ket coordinates."""
        return tuple(float(x) for c in self.ket for x in (c.real, c.imag))

    def __eq__(self, other):
        if not isinstance(other, PureEffect):
            return NotImplemented
        return self.ket.shape == other.ket.shape and bool(np.array_equal(self.ket, other.ket))

    def __hash__(self):
        return hash(self.ket.tobytes())

    def __repr__(self):
        return f"PureEffect({np.array2string(self.ket, precision=6)})"


@dataclass(frozen=True)
class DensityState:
    """Density operator ``a``; realizes the functional ``X -> Tr(a X)``."""

    matrix: np.ndarray

    def __post_init__(self):
        m = as_hermitian(self.matrix)
        lo, _ = _spectrum_bounds(m)
        tr = np.trace(m).real
        if lo < -STATE_ATOL:
            raise ValidationError(f"density operator not PSD (min eigenvalue {lo:.3e})")
        if abs(tr - 1) > STATE_ATOL:
            raise ValidationError(f"density operator trace {tr!r} != 1")
        object.__setattr__(self, "matrix", _frozen(m))

    @classmethod
    def pure(cls, ket) -> "DensityState":
        v = np.asarray(ket, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def expect(self, x: np.ndarray) -> complex:
        return complex(np.trace(self.matrix @ x))


class ChoiReport(NamedTuple):
    is_cp: bool
    min_choi_eigenvalue: float
    is_unital: bool


@dataclass(frozen=True)
class HeisenbergCPMap:
    """``X -> sum_i K_i^dag X K_i`` with every ``K_i`` of shape ``(in_dim, out_dim)``."""

    kraus: Tuple[np.ndarray, ...]
    unital_expected: bool = False

    def __post_init__(self):
        ops = tuple(_frozen(as_matrix(k)) for k in self.kraus)
        if not ops:
            raise ValidationError("a CP map needs at least one Kraus operator")
        shape = ops[0].shape
        for i, k in enumerate(ops):
            if k.shape != shape:
                raise DimensionError(f"Kraus operator {i} has shape {k.shape}, expected {shape}")
        object.__setattr__(self, "kraus", ops)
        if self.unital_expected:
            defect = self.unital_defect()
            if defect > UNITAL_ATOL:
                raise ValidationError(
                    f"map expected unital but ||L(I) - I||_F = {defect:.3e} "
                    f"(min Choi eigenvalue {choi_check(self).min_choi_eigenvalue:.3e})"
                )

    @property
    def in_dim(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.kraus[0].shape[1]

    def __call__(self, x):
        return apply(self, x)

    def dual(self, rho) -> np.ndarray:
        """Schrodinger picture: ``rho -> sum_i K_i rho K_i^dag`` (out space to in space)."""
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.out_dim, self.out_dim):
            raise DimensionError(f"expected {self.out_dim}x{self.out_dim} operand, got {rho.shape}")
        return sum(k @ rho @ k.conj().T for k in self.kraus)

    def unital_defect(self) -> float:
        return float(np.linalg.norm(apply(self, np.eye(self.in_dim)) - np.eye(self.out_dim)))

    def choi(self) -> np.ndarray:
        """Choi operator of the Schrodinger dual, ``sum_ij |i><j| (x) L_S(|i><j|)``."""
        d_out, d_in = self.out_dim, self.in_dim
        c = np.zeros((d_out * d_in, d_out * d_in), dtype=complex)
        for k in self.kraus:
            # |K>> with row index (i, r): K[r, i]
            v = k.T.reshape(-1)
            c += np.outer(v, v.conj())
        return c


def apply(cp_map: HeisenbergCPMap, x) -> np.ndarray:
    """Heisenberg action ``sum_i K_i^dag x K_i``.

    Linear in ``x``; Hermitian inputs give Hermitian outputs. Non-Hermitian
    operands are accepted so slot operators can be assembled from matrix units.
    """
    x = np.asarray(x, dtype=complex)
    if x.shape != (cp_map.in_dim, cp_map.in_dim):
        raise DimensionError(f"expected {cp_map.in_dim}x{cp_map.in_dim} operand, got {x.shape}")
    return sum(k.conj().T @ x @ k for k in cp_map.kraus)


def choi_check(cp_map: HeisenbergCPMap) -> ChoiReport:
    w = hermitian_eig(cp_map.choi()).eigenvalues
    lo = float(w[-1])
    return ChoiReport(lo >= -CHOI_ATOL, lo, cp_map.unital_defect() <= UNITAL_ATOL)


def unitary_channel(u) -> HeisenbergCPMap:
    """``X -> U^dag X U``."""
    return HeisenbergCPMap((as_matrix(u),), unital_expected=True)


def dephasing_channel(dim: int = 2) -> HeisenbergCPMap:
    """Pinching onto the computational-basis diagonal."""
    ops = []
    for i in range(dim):
        p = np.zeros((dim, dim), dtype=complex)
        p[i, i] = 1
        ops.append(p)
    return HeisenbergCPMap(tuple(ops), unital_expected=True)


def x_rotation(phi: float) -> np.ndarray:
    """``exp(-i phi sigma_x) = cos(phi) I - i sin(phi) sigma_x``."""
    return np.cos(phi) * np.eye(2, dtype=complex) - 1j * np.sin(phi) * SIGMA_X


def interpolated_channel(phi: float, theta: float) -> HeisenbergCPMap:
    """``X -> (1 - theta) U^dag X U + theta Pi_Z(X)`` with ``U = x_rotation(phi)``."""
    if not 0.0 <= theta <= 1.0:
        raise ValidationError(f"dephasing weight theta={theta!r} outside [0, 1]")
    ops = []
    if theta < 1.0:
        ops.append(np.sqrt(1 - theta) * x_rotation(phi))
    if theta > 0.0:
        ops.extend(np.sqrt(theta) * k for k in dephasing_channel(2).kraus)
    return HeisenbergCPMap(tuple(ops), unital_expected=True)


class WeakInstrument(NamedTuple):
    plus_slice: HeisenbergCPMap
    minus_slice: HeisenbergCPMap
    joint: HeisenbergCPMap


def weak_measurement_kraus(eta: float) -> Tuple[np.ndarray, np.ndarray]:
    """Normalized pair ``K+ = diag(sqrt(1+eta), sqrt(1-eta)) / sqrt(2)`` and its mirror."""
    if not 0.0 < eta < 1.0:
        raise ValidationError(f"measurement strength eta={eta!r} outside (0, 1)")
    hi, lo = np.sqrt(1 + eta), np.sqrt(1 - eta)
    k_plus = np.diag([hi, lo]).astype(complex) / np.sqrt(2)
    k_minus = np.diag([lo, hi]).astype(complex) / np.sqrt(2)
    return k_plus, k_minus


def weak_instrument(eta: float) -> WeakInstrument:
    """Two-outcome weak measurement of the qubit in the computational basis.

    The joint map acts on ``B(H (x) K)`` with Kraus ``K+- (x) |+->`` so that
    ``joint(A (x) Y) = sum_+- <+-|Y|+-> K+-^dag A K+-``.
    """
    k_plus, k_minus = weak_measurement_kraus(eta)
    joint = (
        np.kron(k_plus, KET_PLUS.reshape(2, 1)),
        np.kron(k_minus, KET_MINUS.reshape(2, 1)),
    )
    return WeakInstrument(
        HeisenbergCPMap((k_plus,)),
        HeisenbergCPMap((k_minus,)),
        HeisenbergCPMap(joint, unital_expected=True),
    )


def l1_coherence(rho) -> float:
    """Sum of absolute off-diagonal entries in the computational basis."""
    m = np.asarray(getattr(rho, "matrix", rho), dtype=complex)
    return float(np.sum(np.abs(m)) - np.sum(np.abs(np.diag(m))))


def hermitian_basis(dim: int) -> Sequence[np.ndarray]:
    """Orthonormal (Hilbert-Schmidt) Hermitian basis of ``dim**2`` elements."""
    out = []
    for i in range(dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[i, i] = 1
        out.append(e)
    for i in range(dim):
        for j in range(i + 1, dim):
            s = np.zeros((dim, dim), dtype=complex)
            s[i, j] = s[j, i] = 1 / np.sqrt(2)
            a = np.zeros((dim, dim), dtype=complex)
            a[i, j], a[j, i] = 1j / np.sqrt(2), -1j / np.sqrt(2)
            out.append(s)
            out.append(a)
    return out
