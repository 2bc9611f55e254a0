import itertools

import numpy as np
import pytest

from hqmm.channels import PureEffect
from hqmm.model import ClassicalHmm


def random_density(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + g.conj().T) / 2


def random_ket(rng, dim):
    return rng.normal(size=dim) + 1j * rng.normal(size=dim)


def random_classical_hmm(rng, n_states, n_outcomes):
    return ClassicalHmm(
        rng.dirichlet(np.ones(n_states)),
        rng.dirichlet(np.ones(n_states), size=n_states),
        rng.dirichlet(np.ones(n_outcomes), size=n_states),
    )


def brute_force_classical(c, outcomes):
    """Best path probability by enumerating every state path."""
    best, best_path = -1.0, None
    for path in itertools.product(range(c.n_states), repeat=len(outcomes)):
        p = c.path_probability(path, outcomes)
        if p > best:
            best, best_path = p, list(path)
    return best_path, best


def diagonal_trajectory(path, dim):
    return [PureEffect.basis(i, dim) for i in path]


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def random_generic_model(rng, dim=2, n_kraus=2, obs_dim=2):
    """Model with a random unital transition H -> H (x) H and a random instrument."""
    from hqmm.channels import DensityState, HeisenbergCPMap
    from hqmm.model import EmissionInstrument, GenericTransition, Hqmm

    g = rng.normal(size=(dim * dim * n_kraus, dim)) + 1j * rng.normal(size=(dim * dim * n_kraus, dim))
    q, _ = np.linalg.qr(g)
    kraus = tuple(q[k * dim * dim:(k + 1) * dim * dim] for k in range(n_kraus))
    transition = GenericTransition(HeisenbergCPMap(kraus, unital_expected=True))
    g = rng.normal(size=(dim * obs_dim, dim)) + 1j * rng.normal(size=(dim * obs_dim, dim))
    q, _ = np.linalg.qr(g)
    outcomes = tuple((q[k * dim:(k + 1) * dim],) for k in range(obs_dim))
    basis, _ = np.linalg.qr(rng.normal(size=(obs_dim, obs_dim)) + 1j * rng.normal(size=(obs_dim, obs_dim)))
    emission = EmissionInstrument(outcomes, basis)
    return Hqmm(DensityState(random_density(rng, dim)), (transition,), (emission,))


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[number])
