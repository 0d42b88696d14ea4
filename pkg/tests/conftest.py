import numpy as np
import pytest

from vqdtrans.pauli import Observable, PauliString
from vqdtrans.statevector import StateVector


def random_pauli(rng, n):
    return PauliString("".join(rng.choice(list("IXYZ"), n)))


def random_observable(rng, n, terms):
    return Observable.from_terms([(rng.normal(), random_pauli(rng, n)) for _ in range(terms)], n=n)


def random_state(rng, n, real=False):
    v = rng.normal(size=2**n)
    if not real:
        v = v + 1j * rng.normal(size=2**n)
    return StateVector(v / np.linalg.norm(v), n)


def random_orthogonal_pair(rng, n, real=False):
    shape = (2**n, 2)
    m = rng.normal(size=shape) if real else rng.normal(size=shape) + 1j * rng.normal(size=shape)
    q, _ = np.linalg.qr(m)
    return StateVector(q[:, 0], n), StateVector(q[:, 1], n)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
