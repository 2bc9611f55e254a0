"""Decoders for the joint functional: classical Viterbi, coordinate eigen-ascent,
net-based exhaustive search and diagonal-restricted search.

The score is linear in each hidden slot, so with all other slots fixed it
reads ``Tr(G_m p_m)`` for an effective slot operator ``G_m``; the best pure
effect for that slot is the top eigenprojector of ``G_m``. Eigen-ascent sweeps
this exact update backward and then forward over the slots.
"""
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .channels import KET_PLUS, PureEffect, hermitian_basis, l1_coherence
from .errors import InfeasibleError, NumericalIntegrityError, ValidationError
from .linalg import top_eigenvector
from .model import (
    ClassicalHmm,
    Convention,
    Hqmm,
    IMAG_ATOL,
    is_canonical,
    observation_matrices,
    score_matrices,
)

MAX_EXHAUSTIVE = 10**8
# below this many diagonal paths the ascent seed comes from exhaustive search
SEED_EXHAUSTIVE_LIMIT = 4096
_GAIN_RTOL = 1e-15
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class DecoderConfig:
    restarts: int = 8
    max_sweeps: int = 200
    convergence_tol: float = 1e-12
    net_resolution: int = 512
    rng_seed: int = 0

    def __post_init__(self):
        if self.restarts < 1 or self.max_sweeps < 1 or self.net_resolution < 1:
            raise ValidationError("restarts, max_sweeps and net_resolution must be positive")
        if not self.convergence_tol > 0:
            raise ValidationError("convergence_tol must be positive")


@dataclass
class DecodeResult:
    trajectory: Tuple[PureEffect, ...]
    score: float
    sweeps: int = 0
    restarts_used: int = 0
    converged: bool = True
    history: List[float] = field(default_factory=list)
    restart_histories: List[List[float]] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.trajectory) - 1

    def kets(self) -> List[List[List[float]]]:
        """Trajectory as ``[re, im]`` pairs per component."""
        return [[[float(c.real), float(c.imag)] for c in p.ket] for p in self.trajectory]


@dataclass
class GapReport:
    quantum_score: float
    classical_score: float
    gap: float
    coherence: float
    bound_rhs: Optional[float]
    n: int
    convention: Convention
    quantum: DecodeResult
    classical: DecodeResult


class ViterbiResult(NamedTuple):
    path: List[int]
    score: float
    values: np.ndarray  # values[m, i] = v_m(i)


# --------------------------------------------------------------------------- classical DP


def _viterbi_dp(initial, transition, likelihood) -> ViterbiResult:
    """Max-product recursion over per-step state likelihoods ``likelihood[m, i]``."""
    steps, n_states = likelihood.shape
    values = np.zeros((steps, n_states))
    back = np.zeros((steps, n_states), dtype=int)
    values[-1] = likelihood[-1]
    for m in range(steps - 2, -1, -1):
        cand = transition * values[m + 1][None, :]
        back[m] = np.argmax(cand, axis=1)
        values[m] = likelihood[m] * cand[np.arange(n_states), back[m]]
    start = initial * values[0]
    path = [int(np.argmax(start))]
    for m in range(steps - 1):
        path.append(int(back[m, path[-1]]))
    return ViterbiResult(path, float(start[path[0]]), values)


def classical_viterbi(c: ClassicalHmm, outcomes: Sequence[int]) -> ViterbiResult:
    """Most probable state path; ties go to the lowest state index."""
    outcomes = [int(k) for k in outcomes]
    if not outcomes:
        raise ValidationError("observation sequence is empty")
    for k in outcomes:
        if not 0 <= k < c.n_outcomes:
            raise ValidationError(f"outcome index {k} out of range for {c.n_outcomes} outcomes")
    return _viterbi_dp(c.initial, c.transition, c.emission[:, outcomes].T)


# --------------------------------------------------------------------------- environments


class _Problem:
    """A model paired with a resolved observation sequence."""

    def __init__(self, model: Hqmm, obs):
        self.model = model
        self.qmats = observation_matrices(model, obs)
        self.n = len(self.qmats) - 1
        model.check_horizon(self.n)
        self.dim = model.hidden_dim
        self.terminal = model.terminal_operator
        self.a = model.initial.matrix

    def emitted(self, m: int, p: np.ndarray) -> np.ndarray:
        return self.model.emission(m).apply(p, self.qmats[m])

    def block(self, m: int, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.model.transition(m).apply(self.emitted(m, p), v)

    def score(self, pmats: Sequence[np.ndarray]) -> float:
        value = score_matrices(self.model, pmats, self.qmats)
        if abs(value.imag) > IMAG_ATOL:
            raise NumericalIntegrityError(f"score has imaginary part {value.imag:.3e}")
        return float(value.real)

    def advance(self, m: int, sigma: np.ndarray, p: np.ndarray) -> np.ndarray:
        """Left environment after slot ``m``."""
        return self.model.transition(m).left_contract(sigma, self.emitted(m, p))

    def left_envs(self, pmats) -> List[np.ndarray]:
        envs = [self.a]
        for m in range(self.n):
            envs.append(self.advance(m, envs[-1], pmats[m]))
        return envs

    def right_envs(self, pmats) -> List[np.ndarray]:
        envs = [self.terminal]
        for m in range(self.n, -1, -1):
            envs.append(self.block(m, pmats[m], envs[-1]))
        return envs[::-1]  # envs[m] = F_m(...F_n(terminal))

    def slot_matrix(self, m: int, sigma: np.ndarray, right: np.ndarray) -> np.ndarray:
        """``G`` with ``psi = Tr(G p_m)`` given left environment ``sigma`` and continuation ``right``."""
        w = self.model.transition(m).right_contract(sigma, right)
        g = self.model.emission(m).dual(w, self.qmats[m])
        return (g + g.conj().T) / 2

    def slot_weights(self) -> List[np.ndarray]:
        """Per-slot factors for product-contraction models: ``psi = prod_m Tr(W_m p_m)``.

        The terminal weight is folded into the last factor.
        """
        out = []
        for m in range(self.n + 1):
            t = self.model.transition(m)
            # slot m > 0 is weighed by the trace of the step that contracts it
            env = self.a if m == 0 else self.model.transition(m - 1).tau(np.eye(self.dim)) / self.dim * np.eye(self.dim)
            w = self.model.emission(m).dual(t.channel.dual(env), self.qmats[m])
            if m == self.n:
                w = w * t.tau(self.terminal)
            out.append((w + w.conj().T) / 2)
        return out


def _matrices(trajectory) -> List[np.ndarray]:
    return [p.matrix if isinstance(p, PureEffect) else np.asarray(p, dtype=complex) for p in trajectory]


def slot_operator(model: Hqmm, trajectory: Sequence, obs, slot: int) -> np.ndarray:
    """Effective operator ``G`` with ``score(..., p at slot, ...) = Tr(G p)``.

    Assembled by evaluating the score with the slot replaced by each element
    of an orthonormal Hermitian basis, reusing the environments of the other
    slots.
    """
    prob = _Problem(model, obs)
    if len(trajectory) != prob.n + 1:
        raise ValidationError(f"trajectory length {len(trajectory)} != observation length {prob.n + 1}")
    if not 0 <= slot <= prob.n:
        raise IndexError(f"slot {slot} outside 0..{prob.n}")
    pmats = _matrices(trajectory)
    sigma = prob.left_envs(pmats)[slot]
    right = prob.right_envs(pmats)[slot + 1]
    g = np.zeros((prob.dim, prob.dim), dtype=complex)
    for b in hermitian_basis(prob.dim):
        g += np.trace(sigma @ prob.block(slot, b, right)).real * b
    return g


# --------------------------------------------------------------------------- nets


def pure_state_net(dim: int, size: int) -> List[PureEffect]:
    """Deterministic, roughly uniform set of pure states.

    Qubits use a Fibonacci lattice on the Bloch sphere; larger dimensions
    use Gaussian-mapped Halton points.
    """
    if size < 1:
        raise ValidationError("net size must be positive")
    if dim == 2:
        k = np.arange(size)
        z = 1 - (2 * k + 1) / size
        phi = k * np.pi * (3 - np.sqrt(5))
        theta = np.arccos(np.clip(z, -1, 1))
        return [PureEffect.from_bloch(t, f) for t, f in zip(theta, phi)]
    from scipy.stats import norm, qmc

    pts = qmc.Halton(d=2 * dim, scramble=False).random(size + 1)[1:]
    g = norm.ppf(pts)
    return [PureEffect(g[i, :dim] + 1j * g[i, dim:]) for i in range(size)]


def basis_net(dim: int) -> List[PureEffect]:
    return [PureEffect.basis(i, dim) for i in range(dim)]


def _net_values(g: np.ndarray, kets: np.ndarray) -> np.ndarray:
    return np.einsum("ki,ij,kj->k", kets.conj(), g, kets).real


def _net_search(prob: _Problem, net: Sequence[PureEffect]) -> Tuple[List[int], float]:
    """Best net point per slot: independent for product models, else exhaustive DFS."""
    kets = np.array([p.ket for p in net])
    if prob.model.is_product:
        choice = []
        for w in prob.slot_weights():
            choice.append(int(np.argmax(_net_values(w, kets))))
        return choice, prob.score([net[i].matrix for i in choice])
    total = len(net) ** (prob.n + 1)
    if total > MAX_EXHAUSTIVE:
        raise InfeasibleError(f"exhaustive search over {total} trajectories exceeds {MAX_EXHAUSTIVE}")
    mats = [p.matrix for p in net]
    best = [-np.inf, None]

    def visit(m, sigma, prefix):
        if m == prob.n:
            vals = _net_values(prob.slot_matrix(m, sigma, prob.terminal), kets)
            i = int(np.argmax(vals))
            if vals[i] > best[0]:
                best[0], best[1] = float(vals[i]), prefix + [i]
            return
        for i, p in enumerate(mats):
            visit(m + 1, prob.advance(m, sigma, p), prefix + [i])

    visit(0, prob.a, [])
    choice = best[1]
    return choice, prob.score([mats[i] for i in choice])


def grid_oracle_decode(model: Hqmm, obs, net_resolution: int = 512, net: Optional[Sequence[PureEffect]] = None) -> DecodeResult:
    """Best trajectory over a finite net of pure states in every slot."""
    prob = _Problem(model, obs)
    net = list(net) if net is not None else pure_state_net(prob.dim, net_resolution)
    choice, value = _net_search(prob, net)
    return DecodeResult(tuple(net[i] for i in choice), value, history=[value])


def diagonal_restricted_decode(model: Hqmm, obs) -> DecodeResult:
    """Maximum over trajectories of computational-basis projectors."""
    prob = _Problem(model, obs)
    c = model.classical
    if c is not None:
        # embedded classical model: state likelihoods per step, then max-product DP
        lik = np.array([[model.emission(m).outcome_weights(q) @ c.emission[i] for i in range(c.n_states)]
                        for m, q in enumerate(prob.qmats)])
        res = _viterbi_dp(c.initial, c.transition, lik)
        traj = tuple(PureEffect.basis(i, prob.dim) for i in res.path)
        return DecodeResult(traj, res.score, history=[res.score])
    net = basis_net(prob.dim)
    choice, value = _net_search(prob, net)
    return DecodeResult(tuple(net[i] for i in choice), value, history=[value])


# --------------------------------------------------------------------------- eigen-ascent


def _diagonal_seed(prob: _Problem, model: Hqmm, obs) -> List[PureEffect]:
    if model.classical is not None or model.is_product or prob.dim ** (prob.n + 1) <= SEED_EXHAUSTIVE_LIMIT:
        return list(diagonal_restricted_decode(model, obs).trajectory)
    return [PureEffect.basis(0, prob.dim)] * (prob.n + 1)


def _update_slot(g: np.ndarray, pmats, kets, m) -> None:
    ket, lam = top_eigenvector(g)
    current = float(np.trace(g @ pmats[m]).real)
    # only move on a real gain so the score history cannot jitter downward
    if lam - current > _GAIN_RTOL * max(1.0, abs(lam)):
        kets[m] = ket
        pmats[m] = np.outer(ket, ket.conj())


def _ascend(prob: _Problem, pmats: List[np.ndarray], kets: List[np.ndarray], config: DecoderConfig):
    history = [prob.score(pmats)]
    converged = False
    sweeps = 0
    for sweeps in range(1, config.max_sweeps + 1):
        lefts = prob.left_envs(pmats)
        right = prob.terminal
        for m in range(prob.n, -1, -1):
            _update_slot(prob.slot_matrix(m, lefts[m], right), pmats, kets, m)
            right = prob.block(m, pmats[m], right)
        rights = prob.right_envs(pmats)
        sigma = prob.a
        for m in range(prob.n + 1):
            _update_slot(prob.slot_matrix(m, sigma, rights[m + 1]), pmats, kets, m)
            sigma = prob.advance(m, sigma, pmats[m])
        value = prob.score(pmats)
        previous = history[-1]
        history.append(value)
        if value - previous <= config.convergence_tol * max(abs(previous), np.finfo(float).tiny):
            converged = True
            break
    return history, sweeps, converged


def _trajectory_key(traj: Sequence[PureEffect]) -> Tuple[float, ...]:
    return tuple(x for p in traj for x in p.key())


def eigen_ascent_decode(model: Hqmm, obs, config: Optional[DecoderConfig] = None) -> DecodeResult:
    """Multi-start coordinate ascent with exact per-slot maximization.

    Restart 0 starts from the best diagonal trajectory (or the all-``|0>``
    one when that search is too large); the others draw every slot from the
    pure-state net with a seeded generator.
    """
    config = config or DecoderConfig()
    prob = _Problem(model, obs)
    rng = np.random.default_rng(config.rng_seed)
    net = None
    best = None
    histories = []
    for r in range(config.restarts):
        if r == 0:
            seed = _diagonal_seed(prob, model, obs)
        else:
            if net is None:
                net = pure_state_net(prob.dim, config.net_resolution)
            seed = [net[i] for i in rng.integers(len(net), size=prob.n + 1)]
        kets = [p.ket for p in seed]
        pmats = [p.matrix for p in seed]
        history, sweeps, converged = _ascend(prob, pmats, kets, config)
        histories.append(history)
        traj = tuple(PureEffect(k) for k in kets)
        value = history[-1]
        candidate = DecodeResult(traj, value, sweeps, config.restarts, converged, history)
        tie = _TIE_RTOL * max(1.0, abs(best.score)) if best is not None else 0.0
        if best is None or value > best.score + tie:
            best = candidate
        elif abs(value - best.score) <= tie and _trajectory_key(traj) < _trajectory_key(best.trajectory):
            best = candidate
    best.restart_histories = histories
    return best


# --------------------------------------------------------------------------- gap analysis


def gap_and_coherence(model: Hqmm, obs, config: Optional[DecoderConfig] = None) -> GapReport:
    """Quantum-vs-diagonal score gap and the l1-coherence of the optimizer's first slot.

    For the canonical single-step qubit instance the coherence bound
    ``gap <= (sqrt(3)/8) C(p0) - |beta|^2 / 4`` is evaluated at the optimizer
    and enforced.
    """
    quantum = eigen_ascent_decode(model, obs, config)
    classical = diagonal_restricted_decode(model, obs)
    gap = quantum.score - classical.score
    p0 = quantum.trajectory[0]
    coherence = l1_coherence(p0.matrix)
    bound = None
    qmats = observation_matrices(model, obs)
    plus = np.outer(KET_PLUS, KET_PLUS.conj())
    if is_canonical(model) and len(qmats) == 1 and np.allclose(qmats[0], plus, atol=1e-12):
        beta = p0.ket[1]
        bound = np.sqrt(3) / 8 * coherence - abs(beta) ** 2 / 4
        if gap > bound + 1e-9:
            raise NumericalIntegrityError(f"gap {gap!r} exceeds coherence bound {bound!r}")
    return GapReport(quantum.score, classical.score, gap, coherence, bound, len(qmats) - 1,
                     model.convention, quantum, classical)
