import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_observable, random_orthogonal_pair, random_pauli
from vqdtrans.ansatz import AnsatzSpec
from vqdtrans.eigensolvers import StateRecord
from vqdtrans.estimation import Evaluator
from vqdtrans.oracle import (
    circuit_unitary,
    exact_eigensystem,
    exact_oscillator_strength,
    observable_to_matrix,
    pauli_matrix,
)
from vqdtrans.pauli import Observable, PauliString
from vqdtrans.problems import lih_style
from vqdtrans.statevector import Circuit, StateVector, run, x
from vqdtrans.transition import (
    OrthogonalityError,
    TransitionError,
    build_u_ij,
    energy_error_bar,
    expected_evaluations,
    oscillator_error_bar,
    oscillator_strength,
    sampled_oscillator_strength,
    transition_amplitude_ancilla,
    transition_amplitude_squared,
    transition_amplitude_superposition,
)

KET0 = StateVector.basis(1, 0)
KET1 = StateVector.basis(1, 1)


def dense_amplitude(a, s1, s2):
    return complex(s1.amplitudes.conj() @ observable_to_matrix(a) @ s2.amplitudes)


# build_u_ij


def test_u_ij_identity_is_global_phase(rng):
    c = build_u_ij("II", "II", +1)
    for _ in range(5):
        psi = random_orthogonal_pair(rng, 2)[0]
        assert abs(psi.inner(run(c, psi))) ** 2 == pytest.approx(1.0)


def test_u_ij_xx_is_ix():
    u = circuit_unitary(build_u_ij("X", "X", +1))
    np.testing.assert_allclose(u, 1j * pauli_matrix("X"), atol=1e-12)
    assert abs(u[0, 1]) ** 2 == pytest.approx(1.0)


def test_u_ij_matches_formula(rng):
    eye = np.eye(8)
    for _ in range(30):
        pi, pj = random_pauli(rng, 3), random_pauli(rng, 3)
        for s in (+1, -1):
            expected = (eye + s * 1j * pauli_matrix(pi)) @ (eye + s * 1j * pauli_matrix(pj)) / 2
            u = circuit_unitary(build_u_ij(pi, pj, s))
            assert np.linalg.norm(u - expected) < 1e-12


def test_u_ij_errors():
    with pytest.raises(TransitionError):
        build_u_ij("X", "XX")
    with pytest.raises(TransitionError):
        build_u_ij("X", "X", 2)


# overlap method


@pytest.mark.parametrize(
    "a, expected",
    [({"X": 1.0}, 1.0), ({"Z": 1.0}, 0.0), ({"X": 0.3, "Y": 0.4}, 0.25)],
)
def test_overlap_method_examples(a, expected):
    est = transition_amplitude_squared(Observable.from_dict(a), KET0, KET1)
    assert est.value == pytest.approx(expected, abs=1e-12)
    assert est.std_error is None


def test_cross_term_is_exercised():
    est = transition_amplitude_squared(Observable.from_dict({"X": 0.3, "Y": 0.4}), KET0, KET1)
    assert len(est.pairs) == 1
    assert est.evaluations == 5
    a = Observable.from_dict({"XX": 0.3, "YY": 0.4})
    est = transition_amplitude_squared(a, StateVector.basis(2, 0), StateVector.basis(2, 3))
    (pair,) = est.pairs
    cross = 0.3 * 0.4 * (2 * pair["o_plus"] + 2 * pair["o_minus"] - pair["o_i"] - pair["o_j"] - pair["o_ij"])
    assert cross == pytest.approx(-0.24)
    assert est.value == pytest.approx(0.01)


def test_overlap_method_random_four_qubit(rng):
    for _ in range(30):
        a = random_observable(rng, 4, int(rng.integers(1, 13)))
        s1, s2 = random_orthogonal_pair(rng, 4)
        est = transition_amplitude_squared(a, s1, s2)
        assert est.value == pytest.approx(abs(dense_amplitude(a, s1, s2)) ** 2, abs=1e-10)
        assert est.evaluations == expected_evaluations(len(a.terms))


@pytest.mark.parametrize("m, count", [(1, 1), (2, 5), (3, 12), (10, 145)])
def test_evaluation_count(m, count):
    assert expected_evaluations(m) == count


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(-3, 3, allow_nan=False))
def test_symmetry_and_scaling(seed, scale):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    a = random_observable(rng, n, int(rng.integers(1, 6)))
    s1, s2 = random_orthogonal_pair(rng, n)
    v = transition_amplitude_squared(a, s1, s2).raw_value
    assert transition_amplitude_squared(a, s2, s1).raw_value == pytest.approx(v, abs=1e-10)
    assert transition_amplitude_squared(a * scale, s1, s2).raw_value == pytest.approx(
        scale * scale * v, abs=1e-9
    )


def test_single_term_has_no_cross_terms(rng):
    s1, s2 = random_orthogonal_pair(rng, 3)
    p = PauliString("XYZ")
    est = transition_amplitude_squared(Observable.from_terms([(0.7, p)], n=3), s1, s2)
    direct = abs(s1.inner(StateVector(pauli_matrix(p) @ s2.amplitudes, 3))) ** 2
    assert est.pairs == []
    assert est.value == pytest.approx(0.49 * direct, abs=1e-12)


def test_orthogonality_violation_reports_overlap():
    plus = StateVector(np.array([1, 1]) / math.sqrt(2), 1)
    with pytest.raises(OrthogonalityError) as info:
        transition_amplitude_squared(Observable.from_dict({"X": 1.0}), KET0, plus)
    assert info.value.overlap == pytest.approx(0.5)
    est = transition_amplitude_squared(Observable.from_dict({"X": 1.0}), KET0, plus, orthogonality_tol=1.0)
    assert est.raw_value == pytest.approx(0.5)


def test_dimension_mismatch():
    with pytest.raises(TransitionError):
        transition_amplitude_squared(Observable.from_dict({"XX": 1.0}), KET0, KET1)


def test_sampled_overlap_method_statistics():
    shots = 20_000
    a = Observable.from_dict({"X": 0.3, "Y": 0.4})
    s1, s2 = (Circuit(1), 0), (Circuit(1, (x(0),)), 0)
    values, errors = [], []
    for seed in range(30):
        est = transition_amplitude_squared(a, s1, s2, Evaluator("sampled", shots=shots, seed=seed))
        values.append(est.raw_value)
        errors.append(est.std_error)
        assert est.evaluations == 5
    assert abs(np.mean(values) - 0.25) < 5 * np.std(values) / math.sqrt(30)
    assert np.std(values, ddof=1) == pytest.approx(np.mean(errors), rel=0.5)


def test_sampled_mode_requires_circuits():
    with pytest.raises(ValueError):
        transition_amplitude_squared(
            Observable.from_dict({"X": 1.0}), KET0, KET1, Evaluator("sampled", shots=10, seed=0)
        )


def test_negative_raw_value_is_clamped():
    a = Observable.from_dict({"Z": 1.0, "X": 1e-3})
    s1, s2 = (Circuit(1), 0), (Circuit(1, (x(0),)), 0)
    raws = [transition_amplitude_squared(a, s1, s2, Evaluator("sampled", shots=200, seed=s)) for s in range(40)]
    assert any(e.raw_value < 0 for e in raws)
    assert all(e.value == max(e.raw_value, 0.0) for e in raws)


# ancilla method


def test_ancilla_examples():
    u1, u2 = Circuit(1), Circuit(1, (x(0),))
    assert transition_amplitude_ancilla(Observable.from_dict({"X": 1.0}), u1, u2) == pytest.approx(1.0)
    assert transition_amplitude_ancilla(Observable.from_dict({"Y": 1.0}), u1, u2) == pytest.approx(-1j)


def test_ancilla_matches_oracle_without_orthogonality(rng):
    for _ in range(30):
        n = int(rng.integers(1, 5))
        a = random_observable(rng, n, 6)
        s1 = random_orthogonal_pair(rng, n)[0]
        s2 = random_orthogonal_pair(rng, n)[1]
        got = transition_amplitude_ancilla(a, s1, s2)
        want = dense_amplitude(a, s1, s2)
        assert abs(got.real - want.real) < 1e-10 and abs(got.imag - want.imag) < 1e-10


def test_ancilla_sampled_close():
    a = Observable.from_dict({"X": 0.3, "Y": 0.4})
    got = transition_amplitude_ancilla(a, Circuit(1), Circuit(1, (x(0),)), Evaluator("sampled", shots=50_000, seed=1))
    assert abs(got - (0.3 - 0.4j)) < 0.02


# superposition method


def test_superposition_identity_circuit():
    est = transition_amplitude_superposition(Observable.from_dict({"X": 1.0}), Circuit(1), 0, 1)
    assert est.value == pytest.approx(1.0)


def test_superposition_identity_observable_is_zero(rng):
    spec = AnsatzSpec("rsp", 4, 3)
    c = spec.build(rng.uniform(0, 2 * np.pi, spec.parameter_count))
    est = transition_amplitude_superposition(Observable.from_dict({"IIII": 1.0}), c, 0b1100, 0b0110)
    assert est.value == pytest.approx(0.0, abs=1e-20)


def test_three_methods_agree_on_real_states(rng):
    spec = AnsatzSpec("rsp", 4, 3)
    for _ in range(10):
        c = spec.build(rng.uniform(0, 2 * np.pi, spec.parameter_count))
        a = random_observable(rng, 4, 8)
        real_a = Observable.from_terms([(co, p) for co, p in a.terms if p.ops.count("Y") % 2 == 0], n=4)
        s1, s2 = (c, 0b1100), (c, 0b0011)
        v_sup = transition_amplitude_superposition(real_a, c, 0b1100, 0b0011).value
        v_ov = transition_amplitude_squared(real_a, s1, s2).value
        v_anc = abs(transition_amplitude_ancilla(real_a, s1, s2)) ** 2
        assert v_sup == pytest.approx(v_ov, abs=1e-9)
        assert v_anc == pytest.approx(v_ov, abs=1e-9)


def test_superposition_refuses_complex_states():
    from vqdtrans.statevector import rz

    c = Circuit(1, (rz(0, 0.7),))
    with pytest.raises(TransitionError, match="real states"):
        transition_amplitude_superposition(Observable.from_dict({"X": 1.0}), c, 0, 1)
    with pytest.raises(TransitionError):
        transition_amplitude_superposition(Observable.from_dict({"X": 1.0}), Circuit(1), 0, 0)


# error bars


@pytest.mark.parametrize(
    "terms, expected",
    [([(2.0, 0.25)], 1.0), ([(1.0, 0.0), (3.0, 0.0)], 0.0), ([(1.0, 1.0)] * 4, 1.0)],
)
def test_energy_error_bar_examples(terms, expected):
    assert energy_error_bar(terms) == pytest.approx(expected)


def test_energy_error_bar_variants():
    assert energy_error_bar([(2.0, 0.25)], "textbook", shots=100) == pytest.approx(0.1)
    with pytest.raises(TransitionError):
        energy_error_bar([])
    with pytest.raises(TransitionError):
        energy_error_bar([(1.0, 1.0)], "textbook")
    with pytest.raises(TransitionError):
        energy_error_bar([(1.0, 1.0)], "other")


def test_oscillator_error_bar_cases():
    df, means, errs = oscillator_error_bar(0.5, (0.0, 0.0), [[0.1, 0.0, 0.2]] * 5)
    assert df == 0.0 and errs == [0.0, 0.0, 0.0]
    np.testing.assert_allclose(means, [0.1, 0.0, 0.2])
    reps = [[0.1, 0.0, 0.2], [0.3, 0.0, 0.2]]
    df, _, errs = oscillator_error_bar(0.0, (0.03, 0.04), reps)
    assert errs[0] > 0
    assert df == pytest.approx(2 / 3 * 0.05 * 0.4)
    df, _, errs = oscillator_error_bar(2.0, (0.0, 0.0), reps)
    assert errs[0] == pytest.approx(np.std([0.1, 0.3], ddof=1) / math.sqrt(2))
    assert df == pytest.approx(2 / 3 * 2.0 * errs[0])
    with pytest.raises(TransitionError):
        oscillator_error_bar(1.0, (0.0, 0.0), [[0.1, 0.0, 0.0]])


# oscillator strength


def test_oscillator_strength_edge_cases():
    dip = [Observable.from_dict({"X": 1.0}), Observable.zero(1), Observable.zero(1)]
    assert oscillator_strength(0.3, 0.3, dip, KET0, KET1).f == 0.0
    zero = [Observable.zero(1)] * 3
    assert oscillator_strength(-1.0, 1.0, zero, KET0, KET1).f == 0.0
    r = oscillator_strength(-1.0, 1.0, dip, KET0, KET1)
    assert r.f == pytest.approx(2 / 3 * 2.0)
    swapped = oscillator_strength(1.0, -1.0, dip, KET1, KET0)
    assert swapped.swapped and swapped.f == pytest.approx(r.f)


def test_oscillator_strength_lih_style_with_oracle_states():
    problem = lih_style()
    h = problem.effective_hamiltonian()
    sp = exact_eigensystem(h)
    v = [StateVector(sp.eigenvectors[:, i], 2) for i in range(2)]
    want = exact_oscillator_strength(sp.eigenvalues[0], sp.eigenvalues[1], problem.dipole_list(), v[0], v[1])
    for method in ("overlap", "ancilla"):
        got = oscillator_strength(sp.eigenvalues[0], sp.eigenvalues[1], problem.dipole_list(), v[0], v[1], method)
        assert got.f == pytest.approx(want, rel=1e-10)


def test_oscillator_strength_superposition_needs_records():
    dip = [Observable.from_dict({"X": 1.0})]
    with pytest.raises(TransitionError):
        oscillator_strength(0.0, 1.0, dip, KET0, KET1, method="superposition")
    c = Circuit(1)
    r0 = StateRecord(np.zeros(0), -1.0, 0, c)
    r1 = StateRecord(np.zeros(0), 1.0, 1, c)
    assert oscillator_strength(-1.0, 1.0, dip, r0, r1, method="superposition").f == pytest.approx(4 / 3)


def test_sampled_oscillator_strength_runs():
    h = Observable.from_dict({"Z": 1.0})
    dip = [Observable.from_dict({"X": 1.0}), Observable.zero(1), Observable.zero(1)]
    ev = Evaluator("sampled", shots=4000, seed=2)
    r = sampled_oscillator_strength(h, dip, (Circuit(1), 0), (Circuit(1), 1), ev)
    assert r.gap == pytest.approx(2.0)
    assert r.f == pytest.approx(4 / 3, abs=0.01)
    assert r.error is not None and r.error >= 0
    with pytest.raises(TransitionError):
        sampled_oscillator_strength(h, dip, (Circuit(1), 0), (Circuit(1), 1), Evaluator())
