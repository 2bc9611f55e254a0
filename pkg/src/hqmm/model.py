"""Hidden quantum Markov models and evaluation of the joint decoding functional.

A model holds an initial state ``a``, one transition expectation and one
emission instrument per time step (or a single stationary one of each), and a
terminal operator. For a trajectory ``p_0..p_n`` and observations ``q_0..q_n``
the score is

    psi_n = Tr(a F_0(F_1(... F_n(terminal) ...)))

with block maps ``F_m(v) = E_m(Em_m(p_m (x) q_m) (x) v)``, all in the
Heisenberg picture.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .channels import (
    KET_MINUS,
    KET_PLUS,
    DensityState,
    HeisenbergCPMap,
    PureEffect,
    choi_check,
    interpolated_channel,
    weak_measurement_kraus,
)
from .errors import DimensionError, NumericalIntegrityError, StructureError, ValidationError
from .linalg import as_matrix, partial_trace

COMPLETENESS_ATOL = 1e-8
IMAG_ATOL = 1e-9
STOCHASTIC_ATOL = 1e-12


class Convention(str, Enum):
    """How the product-contraction transition weighs its second factor.

    NORMALIZED uses ``Tr/N`` with terminal ``I``; UNNORMALIZED uses ``Tr`` with
    terminal ``I/N``. Both give the same single-step functional.
    """

    NORMALIZED = "normalized"
    UNNORMALIZED = "unnormalized"


def _trace_weight(convention: Convention, dim: int) -> float:
    return 1.0 / dim if Convention(convention) is Convention.NORMALIZED else 1.0


# --------------------------------------------------------------------------- transitions


@dataclass(frozen=True)
class GenericTransition:
    """Transition expectation ``X1 (x) X2 -> sum_V V^dag (X1 (x) X2) V`` with ``V: H -> H (x) H``."""

    map: HeisenbergCPMap

    def __post_init__(self):
        n = self.map.out_dim
        if self.map.in_dim != n * n:
            raise DimensionError(
                f"generic transition needs in_dim = out_dim**2, got {self.map.in_dim} and {n}"
            )
        report = choi_check(self.map)
        if not report.is_cp:
            raise ValidationError(
                f"transition map is not completely positive "
                f"(min Choi eigenvalue {report.min_choi_eigenvalue:.3e})"
            )
        if not report.is_unital:
            raise ValidationError(
                f"transition map is not unital: ||E(I (x) I) - I||_F = {self.map.unital_defect():.3e}, "
                f"min Choi eigenvalue {report.min_choi_eigenvalue:.3e}"
            )

    @property
    def dim(self) -> int:
        return self.map.out_dim

    def apply(self, x1, x2) -> np.ndarray:
        return self.map(np.kron(x1, x2))

    def left_contract(self, sigma, z) -> np.ndarray:
        """``s`` with ``Tr(sigma E(z (x) Y)) = Tr(s Y)`` for all ``Y``."""
        n = self.dim
        m = self.map.dual(sigma)
        return partial_trace(np.kron(z, np.eye(n)) @ m, (n, n), keep=1)

    def right_contract(self, sigma, r) -> np.ndarray:
        """``w`` with ``Tr(sigma E(X (x) r)) = Tr(w X)`` for all ``X``."""
        n = self.dim
        m = self.map.dual(sigma)
        return partial_trace(m @ np.kron(np.eye(n), r), (n, n), keep=0)


@dataclass(frozen=True)
class ProductContraction:
    """``X1 (x) X2 -> channel(X1) * tau(X2)`` with ``tau`` the (normalized) trace."""

    channel: HeisenbergCPMap
    convention: Convention = Convention.NORMALIZED

    def __post_init__(self):
        object.__setattr__(self, "convention", Convention(self.convention))
        if self.channel.in_dim != self.channel.out_dim:
            raise DimensionError("product-contraction channel must act on a single space")
        report = choi_check(self.channel)
        if not (report.is_cp and report.is_unital):
            raise ValidationError(
                f"product-contraction channel must be CP and unital: unital defect "
                f"{self.channel.unital_defect():.3e}, min Choi eigenvalue {report.min_choi_eigenvalue:.3e}"
            )

    @property
    def dim(self) -> int:
        return self.channel.out_dim

    def tau(self, x) -> complex:
        return complex(np.trace(x)) * _trace_weight(self.convention, self.dim)

    def apply(self, x1, x2) -> np.ndarray:
        return self.channel(x1) * self.tau(x2)

    def left_contract(self, sigma, z) -> np.ndarray:
        c = complex(np.trace(sigma @ self.channel(z)))
        return c * _trace_weight(self.convention, self.dim) * np.eye(self.dim, dtype=complex)

    def right_contract(self, sigma, r) -> np.ndarray:
        return self.tau(r) * self.channel.dual(sigma)


Transition = Union[GenericTransition, ProductContraction]


# --------------------------------------------------------------------------- emissions


@dataclass(frozen=True)
class EmissionInstrument:
    """Instrument coupling the hidden space ``H`` to the observation space ``K``.

    ``outcome_kraus[k]`` lists the Kraus operators on ``H`` attached to the
    ``k``-th column of ``basis``. On elementary tensors
    ``E(A (x) Y) = sum_k <b_k|Y|b_k> sum_j K_kj^dag A K_kj``.
    """

    outcome_kraus: Tuple[Tuple[np.ndarray, ...], ...]
    basis: np.ndarray

    def __post_init__(self):
        basis = as_matrix(self.basis)
        m = basis.shape[0]
        if basis.shape != (m, m) or not np.allclose(basis.conj().T @ basis, np.eye(m), atol=1e-10):
            raise ValidationError("observation basis must be a square unitary (columns are the basis kets)")
        if len(self.outcome_kraus) != m:
            raise DimensionError(f"{len(self.outcome_kraus)} outcome Kraus lists for a {m}-dimensional basis")
        outcomes = []
        dim = None
        for k, ops in enumerate(self.outcome_kraus):
            frozen = []
            for j, op in enumerate(ops):
                op = np.array(as_matrix(op))
                dim = dim or op.shape[0]
                if op.shape != (dim, dim):
                    raise DimensionError(f"outcome {k} Kraus {j} has shape {op.shape}, expected {(dim, dim)}")
                op.flags.writeable = False
                frozen.append(op)
            outcomes.append(tuple(frozen))
        if dim is None:
            raise ValidationError("emission instrument has no Kraus operators")
        basis = np.array(basis)
        basis.flags.writeable = False
        object.__setattr__(self, "outcome_kraus", tuple(outcomes))
        object.__setattr__(self, "basis", basis)
        defect = self.completeness_defect()
        if defect > COMPLETENESS_ATOL:
            raise ValidationError(f"emission Kraus operators incomplete: ||sum K^dag K - I||_F = {defect:.3e}")

    @property
    def hidden_dim(self) -> int:
        return next(op for ops in self.outcome_kraus for op in ops).shape[0]

    @property
    def obs_dim(self) -> int:
        return self.basis.shape[0]

    def completeness_defect(self) -> float:
        total = sum(op.conj().T @ op for ops in self.outcome_kraus for op in ops)
        return float(np.linalg.norm(total - np.eye(self.hidden_dim)))

    def outcome_weights(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=complex)
        if y.shape != (self.obs_dim, self.obs_dim):
            raise DimensionError(f"observation operator must be {self.obs_dim}x{self.obs_dim}, got {y.shape}")
        return np.einsum("ik,ij,jk->k", self.basis.conj(), y, self.basis).real

    def apply(self, a, y) -> np.ndarray:
        a = np.asarray(a, dtype=complex)
        if a.shape != (self.hidden_dim, self.hidden_dim):
            raise DimensionError(f"hidden operand must be {self.hidden_dim}x{self.hidden_dim}, got {a.shape}")
        out = np.zeros_like(a)
        for w, ops in zip(self.outcome_weights(y), self.outcome_kraus):
            if w != 0.0:
                for op in ops:
                    out += w * (op.conj().T @ a @ op)
        return out

    def dual(self, omega, y) -> np.ndarray:
        """``u`` with ``Tr(omega E(X (x) y)) = Tr(u X)`` for all ``X``."""
        out = np.zeros((self.hidden_dim, self.hidden_dim), dtype=complex)
        for w, ops in zip(self.outcome_weights(y), self.outcome_kraus):
            if w != 0.0:
                for op in ops:
                    out += w * (op @ omega @ op.conj().T)
        return out

    def joint_map(self) -> HeisenbergCPMap:
        """The instrument as one CP map on ``B(H (x) K)`` with Kraus ``K_kj (x) |b_k>``."""
        ops = []
        for k, kraus in enumerate(self.outcome_kraus):
            col = self.basis[:, k].reshape(-1, 1)
            ops.extend(np.kron(op, col) for op in kraus)
        return HeisenbergCPMap(tuple(ops))

    def slice_map(self, outcome: int) -> HeisenbergCPMap:
        return HeisenbergCPMap(self.outcome_kraus[outcome])


# --------------------------------------------------------------------------- classical HMMs


@dataclass(frozen=True, eq=False)
class ClassicalHmm:
    """Finite HMM: initial distribution, row-stochastic transitions and emissions."""

    initial: np.ndarray
    transition: np.ndarray
    emission: np.ndarray

    def __post_init__(self):
        p0 = np.array(self.initial, dtype=float)
        pt = np.array(self.transition, dtype=float)
        pe = np.array(self.emission, dtype=float)
        n = p0.size
        if p0.ndim != 1 or pt.shape != (n, n) or pe.ndim != 2 or pe.shape[0] != n:
            raise DimensionError(
                f"inconsistent HMM shapes: initial {p0.shape}, transition {pt.shape}, emission {pe.shape}"
            )
        _check_distribution(p0, "initial distribution")
        for i, row in enumerate(pt):
            _check_distribution(row, f"transition row {i}")
        for i, row in enumerate(pe):
            _check_distribution(row, f"emission row {i}")
        for name, arr in (("initial", p0), ("transition", pt), ("emission", pe)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_states(self) -> int:
        return self.initial.size

    @property
    def n_outcomes(self) -> int:
        return self.emission.shape[1]

    def path_probability(self, path: Sequence[int], outcomes: Sequence[int]) -> float:
        """``p0[i0] * prod P[i_m, i_m+1] * prod e[i_m, k_m]``."""
        prob = self.initial[path[0]]
        for m, (i, k) in enumerate(zip(path, outcomes)):
            prob *= self.emission[i, k]
            if m + 1 < len(path):
                prob *= self.transition[i, path[m + 1]]
        return float(prob)


def _check_distribution(row: np.ndarray, what: str):
    if not np.all(np.isfinite(row)) or np.any(row < 0):
        raise ValidationError(f"{what} has negative or non-finite entries: {row.tolist()}")
    total = float(row.sum())
    if abs(total - 1.0) > STOCHASTIC_ATOL:
        raise ValidationError(f"{what} sums to {total!r}, not 1")


# --------------------------------------------------------------------------- the model


ObservationItem = Union[PureEffect, int, str, np.ndarray]


@dataclass(frozen=True, eq=False)
class Hqmm:
    """Initial state, per-step transitions and emissions, terminal operator.

    A single-element ``transitions`` / ``emissions`` tuple is stationary and
    serves every step; longer tuples fix the usable horizon.
    """

    initial: DensityState
    transitions: Tuple[Transition, ...]
    emissions: Tuple[EmissionInstrument, ...]
    convention: Convention = Convention.NORMALIZED
    terminal: Optional[np.ndarray] = None
    classical: Optional[ClassicalHmm] = None
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "convention", Convention(self.convention))
        if not isinstance(self.transitions, tuple):
            object.__setattr__(self, "transitions", tuple(self.transitions))
        if not isinstance(self.emissions, tuple):
            object.__setattr__(self, "emissions", tuple(self.emissions))
        if not self.transitions or not self.emissions:
            raise ValidationError("model needs at least one transition and one emission")
        n = self.initial.dim
        for i, t in enumerate(self.transitions):
            if t.dim != n:
                raise DimensionError(f"transition {i} acts on dimension {t.dim}, hidden_dim is {n}")
        m = self.emissions[0].obs_dim
        for i, e in enumerate(self.emissions):
            if e.hidden_dim != n or e.obs_dim != m:
                raise DimensionError(f"emission {i} has dims ({e.hidden_dim}, {e.obs_dim}), expected ({n}, {m})")
        if self.terminal is not None:
            term = np.array(as_matrix(self.terminal))
            if term.shape != (n, n):
                raise DimensionError(f"terminal operator must be {n}x{n}")
            term.flags.writeable = False
            object.__setattr__(self, "terminal", term)

    @property
    def hidden_dim(self) -> int:
        return self.initial.dim

    @property
    def obs_dim(self) -> int:
        return self.emissions[0].obs_dim

    @property
    def max_horizon(self) -> Optional[int]:
        """Largest usable ``n`` (``None`` when stationary)."""
        lengths = [len(s) for s in (self.transitions, self.emissions) if len(s) > 1]
        return min(lengths) - 1 if lengths else None

    @property
    def is_product(self) -> bool:
        return all(isinstance(t, ProductContraction) for t in self.transitions)

    def transition(self, step: int) -> Transition:
        return self._at(self.transitions, step, "transition")

    def emission(self, step: int) -> EmissionInstrument:
        return self._at(self.emissions, step, "emission")

    @staticmethod
    def _at(seq, step, what):
        if len(seq) == 1:
            return seq[0]
        if not 0 <= step < len(seq):
            raise IndexError(f"no {what} for step {step} (model defines {len(seq)} steps)")
        return seq[step]

    @property
    def terminal_operator(self) -> np.ndarray:
        if self.terminal is not None:
            return self.terminal
        n = self.hidden_dim
        return np.eye(n, dtype=complex) * (1.0 if self.convention is Convention.NORMALIZED else 1.0 / n)

    def check_horizon(self, n: int):
        limit = self.max_horizon
        if limit is not None and n > limit:
            raise IndexError(f"horizon n={n} exceeds the {limit + 1} steps this model defines")


@dataclass(frozen=True)
class ObservationSequence:
    """Observed pure effects on ``K``; items may be effects, basis indices or ``+``/``-`` labels."""

    items: Tuple[ObservationItem, ...]

    def __post_init__(self):
        items = tuple(self.items)
        if not items:
            raise ValidationError("observation sequence is empty")
        object.__setattr__(self, "items", items)

    def __len__(self):
        return len(self.items)

    @classmethod
    def parse(cls, text: str) -> "ObservationSequence":
        """``"+,-,+"`` or ``"0,1,1"``."""
        tokens = [t.strip() for t in text.replace(";", ",").split(",") if t.strip()]
        return cls(tuple(tokens))


_LABELS = {"+": 0, "-": 1}


def resolve_observation(basis: np.ndarray, item, position: int = 0) -> np.ndarray:
    """One observation as a projector on ``K``; indices and labels refer to ``basis`` columns."""
    mdim = basis.shape[0]
    if isinstance(item, PureEffect):
        if item.dim != mdim:
            raise DimensionError(f"observation {position} has dimension {item.dim}, expected {mdim}")
        return item.matrix
    if isinstance(item, np.ndarray) and item.ndim == 2:
        if item.shape != (mdim, mdim):
            raise DimensionError(f"observation {position} operator has shape {item.shape}")
        return np.asarray(item, dtype=complex)
    if isinstance(item, str):
        label = item.strip()
        if label in _LABELS:
            index = _LABELS[label]
        elif label.isdigit():
            index = int(label)
        else:
            raise ValidationError(f"unknown observation label {item!r} at position {position}")
    elif isinstance(item, (int, np.integer)):
        index = int(item)
    else:
        raise ValidationError(f"cannot interpret observation {item!r} at position {position}")
    if not 0 <= index < mdim:
        raise ValidationError(f"observation index {index} out of range for {mdim} outcomes")
    b = basis[:, index]
    return np.outer(b, b.conj())


def observation_matrices(model: Hqmm, obs) -> List[np.ndarray]:
    """Resolve observations to projectors on ``K`` against each step's basis."""
    items = obs.items if isinstance(obs, ObservationSequence) else tuple(obs)
    if not items:
        raise ValidationError("observation sequence is empty")
    return [resolve_observation(model.emission(m).basis, item, m) for m, item in enumerate(items)]


def _effect_matrix(p, dim: int) -> np.ndarray:
    m = p.matrix if isinstance(p, PureEffect) else np.asarray(p, dtype=complex)
    if m.shape != (dim, dim):
        raise DimensionError(f"hidden operator must be {dim}x{dim}, got {m.shape}")
    return m


def block_map(model: Hqmm, step: int, p, q, v) -> np.ndarray:
    """One backward step ``F(v) = E_step(Em_step(p (x) q) (x) v)``."""
    n = model.hidden_dim
    emission = model.emission(step)
    qm = resolve_observation(emission.basis, q, step)
    pm = _effect_matrix(p, n)
    v = np.asarray(v, dtype=complex)
    if v.shape != (n, n):
        raise DimensionError(f"continuation operator must be {n}x{n}, got {v.shape}")
    return model.transition(step).apply(emission.apply(pm, qm), v)


def score_matrices(model: Hqmm, pmats: Sequence[np.ndarray], qmats: Sequence[np.ndarray]) -> complex:
    """Nested evaluation on raw operators; returns the complex value unchecked."""
    v = model.terminal_operator
    for m in range(len(pmats) - 1, -1, -1):
        y = model.emission(m).apply(pmats[m], qmats[m])
        v = model.transition(m).apply(y, v)
    return complex(np.trace(model.initial.matrix @ v))


def _real(value: complex) -> float:
    if abs(value.imag) > IMAG_ATOL:
        raise NumericalIntegrityError(f"score has imaginary part {value.imag:.3e}")
    return float(value.real)


def score(model: Hqmm, trajectory: Sequence, obs) -> float:
    """The joint functional ``psi_n`` for hidden effects ``trajectory`` and observations ``obs``.

    Trajectory items may be :class:`PureEffect` or arbitrary Hermitian
    operators (the functional is linear in each slot).
    """
    qmats = observation_matrices(model, obs)
    if len(trajectory) != len(qmats):
        raise ValidationError(f"trajectory length {len(trajectory)} != observation length {len(qmats)}")
    model.check_horizon(len(qmats) - 1)
    pmats = [_effect_matrix(p, model.hidden_dim) for p in trajectory]
    return _real(score_matrices(model, pmats, qmats))


def factorized_score(model: Hqmm, trajectory: Sequence, obs) -> float:
    """Product form of the score for models whose transitions all contract by a trace.

    ``Tr(a Em_0(p_0 (x) q_0)) * prod_{m>=1} tau(Em_m(p_m (x) q_m)) * tau(terminal)``.
    Requires the first channel to leave ``a`` invariant and the later ones to
    preserve the trace; raises :class:`StructureError` otherwise.
    """
    if not model.is_product:
        raise StructureError("factorized score needs product-contraction transitions at every step")
    qmats = observation_matrices(model, obs)
    if len(trajectory) != len(qmats):
        raise ValidationError(f"trajectory length {len(trajectory)} != observation length {len(qmats)}")
    n = len(qmats) - 1
    model.check_horizon(n)
    a = model.initial.matrix
    first = model.transition(0).channel
    if np.linalg.norm(first.dual(a) - a) > 1e-10:
        raise StructureError("first channel does not leave the initial state invariant")
    eye = np.eye(model.hidden_dim)
    for m in range(1, n + 1):
        if np.linalg.norm(model.transition(m).channel.dual(eye) - eye) > 1e-10:
            raise StructureError(f"channel at step {m} is not trace preserving")
    pmats = [_effect_matrix(p, model.hidden_dim) for p in trajectory]
    value = complex(np.trace(a @ model.emission(0).apply(pmats[0], qmats[0])))
    for m in range(1, n + 1):
        value *= model.transition(m - 1).tau(model.emission(m).apply(pmats[m], qmats[m]))
    value *= model.transition(n).tau(model.terminal_operator)
    return _real(value)


# --------------------------------------------------------------------------- constructors


def embed_classical(c: ClassicalHmm) -> Hqmm:
    """Diagonal HQMM whose diagonal trajectories score exactly as the classical path probabilities."""
    n, mo = c.n_states, c.n_outcomes
    kraus = []
    for i in range(n):
        for j in range(n):
            if c.transition[i, j] > 0:
                v = np.zeros((n * n, n), dtype=complex)
                v[i * n + j, i] = np.sqrt(c.transition[i, j])
                kraus.append(v)
    transition = GenericTransition(HeisenbergCPMap(tuple(kraus), unital_expected=True))
    outcomes = []
    for k in range(mo):
        ops = []
        for i in range(n):
            if c.emission[i, k] > 0:
                op = np.zeros((n, n), dtype=complex)
                op[i, i] = np.sqrt(c.emission[i, k])
                ops.append(op)
        outcomes.append(tuple(ops))
    emission = EmissionInstrument(tuple(outcomes), np.eye(mo, dtype=complex))
    return Hqmm(
        initial=DensityState(np.diag(c.initial).astype(complex)),
        transitions=(transition,),
        emissions=(emission,),
        convention=Convention.NORMALIZED,
        classical=c,
    )


def qubit_emission(eta: float) -> EmissionInstrument:
    """Weak measurement with outcomes attached to ``|+>`` and ``|->``."""
    k_plus, k_minus = weak_measurement_kraus(eta)
    return EmissionInstrument(((k_plus,), (k_minus,)), np.column_stack([KET_PLUS, KET_MINUS]))


def _as_list(x) -> List[float]:
    return [float(v) for v in np.atleast_1d(np.asarray(x, dtype=float))]


def build_qubit_memory(
    phis,
    thetas,
    eta: float,
    convention: Union[Convention, str] = Convention.NORMALIZED,
    initial: Optional[DensityState] = None,
) -> Hqmm:
    """Driven, partially dephasing qubit observed through a weak measurement.

    ``phis`` and ``thetas`` are scalars (stationary) or per-step sequences of
    equal length (a length-one sequence broadcasts).
    """
    phis, thetas = _as_list(phis), _as_list(thetas)
    if len(phis) != len(thetas) and 1 not in (len(phis), len(thetas)):
        raise ValidationError(f"got {len(phis)} rotation angles but {len(thetas)} dephasing weights")
    steps = max(len(phis), len(thetas))
    phis = phis * steps if len(phis) == 1 else phis
    thetas = thetas * steps if len(thetas) == 1 else thetas
    convention = Convention(convention)
    transitions = tuple(
        ProductContraction(interpolated_channel(phi, theta), convention) for phi, theta in zip(phis, thetas)
    )
    if initial is None:
        initial = DensityState.pure(KET_PLUS)
    return Hqmm(
        initial=initial,
        transitions=transitions,
        emissions=(qubit_emission(eta),),
        convention=convention,
        params={"phis": phis, "thetas": thetas, "eta": float(eta)},
    )


def canonical_qubit_model(convention: Union[Convention, str] = Convention.NORMALIZED) -> Hqmm:
    """phi = pi/4, theta = 0, eta = 1/2, a = |+><+|, stationary."""
    return build_qubit_memory(np.pi / 4, 0.0, 0.5, convention)


def is_canonical(model: Hqmm) -> bool:
    p = model.params
    if not p or model.hidden_dim != 2:
        return False
    plus = np.outer(KET_PLUS, KET_PLUS.conj())
    return (
        p.get("eta") == 0.5
        and all(abs(phi - np.pi / 4) < 1e-12 for phi in p.get("phis", []))
        and all(theta == 0.0 for theta in p.get("thetas", []))
        and np.allclose(model.initial.matrix, plus, atol=1e-12)
        and model.terminal is None
    )


def trivial_measurement_model(channel: HeisenbergCPMap, convention=Convention.NORMALIZED) -> Hqmm:
    """Qubit model whose instrument carries no information (both slices ``I/sqrt(2)``)."""
    half = np.eye(2, dtype=complex) / np.sqrt(2)
    emission = EmissionInstrument(((half,), (half,)), np.column_stack([KET_PLUS, KET_MINUS]))
    return Hqmm(
        initial=DensityState.pure(KET_PLUS),
        transitions=(ProductContraction(channel, convention),),
        emissions=(emission,),
        convention=convention,
    )
