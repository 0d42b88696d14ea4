import numpy as np
import pytest
import scipy.linalg

from conftest import random_observable
from test_fermion import fock_matrix
from vqdtrans.fermion import build_sz, build_sz_squared, penalized
from vqdtrans.oracle import (
    OracleError,
    exact_eigensystem,
    exact_oscillator_strength,
    exact_transition_amplitude,
    matrix_to_observable,
    observable_to_matrix,
)
from vqdtrans.pauli import Observable
from vqdtrans.problems import dimer_fermion_operator, hubbard_dimer

# lowest three levels of the bundled dimer with the Sz^2 penalty; computed
# from the Fock-space matrix by scipy's LAPACK driver, independent of the
# Pauli-sum construction
DIMER_LEVELS = (-1.1291502622129181, -0.8, -0.07084973778708162)


def test_matrix_examples():
    np.testing.assert_array_equal(observable_to_matrix(Observable.from_dict({"Z": 1.0})), np.diag([1, -1]))
    m = observable_to_matrix(Observable.from_dict({"XI": 1.0, "IX": 1.0}))
    x = np.array([[0, 1], [1, 0]])
    np.testing.assert_array_equal(m, np.kron(x, np.eye(2)) + np.kron(np.eye(2), x))


def test_matrix_linear_and_hermitian(rng):
    a, b = random_observable(rng, 3, 5), random_observable(rng, 3, 5)
    m = observable_to_matrix(a * 0.7 + b * -1.3)
    np.testing.assert_allclose(m, 0.7 * observable_to_matrix(a) - 1.3 * observable_to_matrix(b), atol=1e-12)
    np.testing.assert_allclose(m, m.conj().T, atol=1e-12)
    w, v = np.linalg.eigh(m)
    np.testing.assert_allclose(v @ np.diag(w) @ v.conj().T, m, atol=1e-10)


def test_matrix_round_trip(rng):
    o = random_observable(rng, 4, 10)
    back = matrix_to_observable(observable_to_matrix(o))
    assert back.to_dict() == pytest.approx(o.to_dict())


def test_dense_cap():
    with pytest.raises(OracleError):
        observable_to_matrix(Observable.from_dict({"Z" * 13: 1.0}))


def test_small_spectra():
    np.testing.assert_allclose(exact_eigensystem(Observable.from_dict({"Z": 1.0})).eigenvalues, [-1, 1])
    sp = exact_eigensystem(Observable.from_dict({"XX": 1.0, "ZZ": 1.0}))
    np.testing.assert_allclose(sp.eigenvalues, [-2, 0, 0, 2], atol=1e-12)


def test_dimer_spectrum_against_independent_eigensolver():
    fock = fock_matrix(dimer_fermion_operator())
    sz = observable_to_matrix(build_sz(2)).real
    ref = scipy.linalg.eigh(fock + 4.0 * sz @ sz, eigvals_only=True, driver="ev")
    sp = exact_eigensystem(hubbard_dimer().effective_hamiltonian())
    np.testing.assert_allclose(sp.eigenvalues, ref, atol=1e-12)
    np.testing.assert_allclose(sp.eigenvalues[:3], DIMER_LEVELS, atol=1e-12)


def test_eigensystem_invariants(rng):
    o = random_observable(rng, 4, 12)
    sp = exact_eigensystem(o)
    v = sp.eigenvectors
    np.testing.assert_allclose(v.conj().T @ v, np.eye(16), atol=1e-10)
    m = observable_to_matrix(o)
    resid = np.linalg.norm(m @ v - v * sp.eigenvalues, axis=0).max()
    assert resid < 1e-8 * np.linalg.norm(m, 2)
    assert np.all(np.diff(sp.eigenvalues) >= 0)


def test_degenerate_ties_deterministic_and_ordered():
    h = hubbard_dimer().hamiltonian
    labels = {"sz2": build_sz_squared(2)}
    a = exact_eigensystem(h, label_ops=labels)
    b = exact_eigensystem(h, label_ops=labels)
    np.testing.assert_array_equal(a.eigenvectors, b.eigenvectors)
    # the unpenalized dimer's lowest triplet is threefold degenerate
    vals = a.eigenvalues
    for start in range(len(vals)):
        block = [i for i in range(start, len(vals)) if abs(vals[i] - vals[start]) < 1e-9]
        sz2 = a.labels["sz2"][block]
        assert np.all(np.diff(sz2) <= 1e-9)


def test_penalty_alpha_independence():
    h = hubbard_dimer().hamiltonian
    sz = observable_to_matrix(build_sz(2))
    ref = None
    for alpha in (1.0, 4.0, 16.0):
        sp = exact_eigensystem(penalized(h, build_sz_squared(2), alpha), label_ops={"sz": build_sz(2)})
        zero = np.abs(sp.labels["sz"]) < 1e-9
        sz2 = np.einsum("ij,ik,kj->j", sp.eigenvectors.conj(), sz @ sz, sp.eigenvectors).real
        values = sp.eigenvalues[zero & (sz2 < 1e-9)]
        if ref is None:
            ref = values
        np.testing.assert_allclose(values, ref, atol=1e-10)


def test_transition_amplitude_examples():
    e0, e1 = np.eye(2)
    assert exact_transition_amplitude(Observable.identity(1), e0, e1) == 0
    assert exact_transition_amplitude(Observable.from_dict({"X": 1.0}), e0, e1) == 1
    with pytest.raises(OracleError):
        exact_transition_amplitude(Observable.from_dict({"X": 1.0}), np.ones(4), e1)


def test_oscillator_strength_formula():
    d = [Observable.from_dict({"X": 1.0}), Observable.zero(1), Observable.zero(1)]
    e0, e1 = np.eye(2)
    assert exact_oscillator_strength(-1.0, 0.5, d, e0, e1) == pytest.approx(2 / 3 * 1.5)
