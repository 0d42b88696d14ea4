import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vqdtrans.oracle import observable_to_matrix
from vqdtrans.pauli import Observable
from vqdtrans.problemfile import (
    ProblemFile,
    ProblemFileError,
    format_problem,
    parse_problem_file,
    parse_problem_text,
    write_problem_file,
)


def terms(o):
    return [(c, p.ops) for c, p in o.terms]


def test_bare_hamiltonian_lines():
    p = parse_problem_text("-0.81 II\n0.17 ZI")
    assert p.n == 2
    assert terms(p.hamiltonian) == [(-0.81, "II"), (0.17, "ZI")]
    assert p.dipoles == {}


@pytest.mark.parametrize(
    "text, message",
    [
        ("0.5 ZQ", "invalid Pauli character 'Q' at line 1"),
        ("0.5 ZZ\nabc XX", "non-numeric coefficient 'abc' at line 2"),
        ("0.5 ZZ\n0.1 XXX", "length 3 at line 2"),
        ("[hamiltonian]\n1 Z\n[hamiltonian]\n1 X", "duplicate section [hamiltonian] at line 3"),
        ("1 Z\n[magnetism]\n1 Z", "unknown section [magnetism] at line 2"),
        ("1 Z\n[penalty_sz2_alpha]\n1\n2", "exactly one number"),
        ("1 Z 2", "expected 'coefficient PAULI' at line 1"),
        ("# nothing\n", "missing or empty [hamiltonian]"),
        ("inf Z", "non-finite"),
        ("1 Z\n[dipole_x\n", "malformed section header"),
    ],
)
def test_parse_errors(text, message):
    with pytest.raises(ProblemFileError) as info:
        parse_problem_text(text)
    assert message in str(info.value)


def test_comments_and_blanks_ignored():
    p = parse_problem_text("# header\n\n[hamiltonian]\n  1.0 Z  \n# trailing\n\n[penalty_sz2_alpha]\n4\n")
    assert terms(p.hamiltonian) == [(1.0, "Z")]
    assert p.penalty_sz2_alpha == 4.0


def test_full_file_with_dipoles(tmp_path):
    text = """[hamiltonian]
-0.5 II
0.2 ZI
0.2 IZ
0.1 XX
[dipole_x]
0.3 ZI
[dipole_y]
[dipole_z]
0.1 XY
"""
    path = tmp_path / "p.txt"
    path.write_text(text)
    p = parse_problem_file(path)
    assert len(p.hamiltonian.terms) == 4
    assert set(p.dipoles) == {"x", "y", "z"}
    assert len(p.dipoles["y"].terms) == 0
    assert all(d.n == 2 for d in p.dipoles.values())
    again = parse_problem_text(format_problem(p))
    assert format_problem(again) == format_problem(p)


def test_mismatched_sections_rejected():
    with pytest.raises(ProblemFileError):
        ProblemFile(Observable.from_dict({"Z": 1.0}), dipoles={"x": Observable.from_dict({"XX": 1.0})})
    with pytest.raises(ProblemFileError):
        ProblemFile(Observable.from_dict({"Z": 1.0}), dipoles={"w": Observable.from_dict({"X": 1.0})})


def test_penalties_fold_into_hamiltonian():
    h = Observable.from_dict({"ZIII": 0.3})
    p = ProblemFile(h, penalty_sz2_alpha=4.0)
    m = observable_to_matrix(p.effective_hamiltonian()) - observable_to_matrix(h)
    np.testing.assert_allclose(m, 4.0 * observable_to_matrix(p.sz_squared_operator()), atol=1e-12)
    assert terms(ProblemFile(h).effective_hamiltonian()) == terms(h)


def test_odd_qubits_need_explicit_spin_operators():
    p = ProblemFile(Observable.from_dict({"ZII": 1.0}), penalty_sz2_alpha=1.0)
    with pytest.raises(ProblemFileError):
        p.effective_hamiltonian()


coefficient = st.floats(-10, 10, allow_nan=False).filter(lambda v: abs(v) > 1e-6)
pauli = st.text("IXYZ", min_size=3, max_size=3)


@settings(max_examples=60, deadline=None)
@given(
    h=st.dictionaries(pauli, coefficient, min_size=1, max_size=6),
    dx=st.dictionaries(pauli, coefficient, max_size=4),
    alpha=st.none() | st.floats(0, 10, allow_nan=False),
)
def test_round_trip(tmp_path_factory, h, dx, alpha):
    p = ProblemFile(
        Observable.from_dict(h),
        dipoles={"x": Observable.from_dict(dx) if dx else Observable.zero(3)},
        penalty_sz2_alpha=alpha,
    )
    path = tmp_path_factory.mktemp("rt") / "p.txt"
    write_problem_file(p, path, "comment line\nsecond")
    back = parse_problem_file(path)
    assert terms(back.hamiltonian) == terms(p.hamiltonian)
    assert terms(back.dipoles["x"]) == terms(p.dipoles["x"])
    assert back.penalty_sz2_alpha == alpha
    assert format_problem(back) == format_problem(p)
