"""Exact dense reference computations.

Everything here builds full ``2^n x 2^n`` matrices with Kronecker products,
independently of the stride-based simulator, so tests can pit one against
the other.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.linalg

from .pauli import Observable, PauliString
from .statevector import Circuit, Gate, StateVector

MAX_DENSE_QUBITS = 12
DEGENERACY_TOL = 1e-9

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class OracleError(ValueError):
    pass


def _check_size(n: int) -> None:
    if n > MAX_DENSE_QUBITS:
        raise OracleError(f"{n} qubits exceeds the dense cap of {MAX_DENSE_QUBITS}")


def pauli_matrix(p: PauliString | str) -> np.ndarray:
    ops = p.ops if isinstance(p, PauliString) else p
    _check_size(len(ops))
    return reduce(np.kron, (PAULI_MATRICES[ch] for ch in ops))


def observable_to_matrix(o: Observable) -> np.ndarray:
    _check_size(o.n)
    m = np.zeros((2**o.n, 2**o.n), dtype=complex)
    for c, p in o.terms:
        m += c * pauli_matrix(p)
    return m


def matrix_to_observable(m: np.ndarray, drop_tol: float = 1e-12) -> Observable:
    """Pauli decomposition ``c_P = Tr(P m) / 2^n`` of a Hermitian matrix."""
    dim = m.shape[0]
    n = int(round(np.log2(dim)))
    if 2**n != dim or m.shape != (dim, dim):
        raise OracleError(f"matrix shape {m.shape} is not 2^n square")
    if not np.allclose(m, m.conj().T, atol=1e-10):
        raise OracleError("matrix is not Hermitian")
    from itertools import product

    terms = []
    for chars in product("IXYZ", repeat=n):
        s = "".join(chars)
        c = np.trace(pauli_matrix(s) @ m).real / dim
        if abs(c) >= drop_tol:
            terms.append((c, s))
    return Observable.from_terms(terms, n=n, drop_tol=drop_tol)


def _embed(local: np.ndarray, targets: tuple[int, ...], n: int) -> np.ndarray:
    """Full matrix of a gate acting on ``targets``, built column by column."""
    dim = 2**n
    k = len(targets)
    shifts = [n - 1 - t for t in targets]
    full = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        sub_in = 0
        for s in shifts:
            sub_in = (sub_in << 1) | ((col >> s) & 1)
        rest = col
        for s in shifts:
            rest &= ~(1 << s)
        for sub_out in range(2**k):
            amp = local[sub_out, sub_in]
            if amp == 0:
                continue
            row = rest
            for j, s in enumerate(shifts):
                if (sub_out >> (k - 1 - j)) & 1:
                    row |= 1 << s
            full[row, col] += amp
    return full


def gate_unitary(g: Gate, n: int) -> np.ndarray:
    if g.kind == "PAULI_ROT":
        return scipy.linalg.expm(-0.5j * g.angle * pauli_matrix(g.pauli))
    return _embed(g.local_matrix(), g.targets, n)


def circuit_unitary(c: Circuit) -> np.ndarray:
    _check_size(c.n)
    u = np.eye(2**c.n, dtype=complex)
    for g in c.gates:
        u = gate_unitary(g, c.n) @ u
    return u


@dataclass
class ExactSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns
    labels: dict[str, np.ndarray] = field(default_factory=dict)

    def state(self, i: int) -> StateVector:
        v = self.eigenvectors[:, i]
        return StateVector(v.copy(), int(round(np.log2(len(v)))))

    def __len__(self) -> int:
        return len(self.eigenvalues)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v) > np.abs(v).max() - 1e-12))
    return v * (abs(v[k]) / v[k])


def _canonical_block(block: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of span(block) via pivoted QR."""
    m = block.shape[1]
    _, _, piv = scipy.linalg.qr(block.conj().T, pivoting=True)
    proj = block @ block.conj().T
    basis = []
    for row in sorted(piv[:m]):
        v = proj[:, row].copy()
        for b in basis:
            v -= np.vdot(b, v) * b
        basis.append(v / np.linalg.norm(v))
    return np.column_stack(basis)


def _degenerate_blocks(values: np.ndarray) -> list[tuple[int, int]]:
    blocks, start = [], 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] - values[i - 1] > DEGENERACY_TOL:
            blocks.append((start, i))
            start = i
    return blocks


def exact_eigensystem(
    o: Observable,
    k: int | None = None,
    label_ops: dict[str, Observable] | None = None,
) -> ExactSpectrum:
    """Ascending spectrum of ``o`` with deterministic eigenvectors.

    Inside a degenerate block the vectors are first canonicalized by pivoted
    QR; when an ``"sz2"`` label operator is supplied they are then rotated to
    diagonalize it and ordered by descending ``<Sz^2>`` (stable otherwise).
    Each vector's largest component is made real and positive.
    """
    h = observable_to_matrix(o)
    values, vectors = np.linalg.eigh(h)
    label_ops = label_ops or {}
    label_mats = {name: observable_to_matrix(op) for name, op in label_ops.items()}
    vectors = vectors.copy()
    for a, b in _degenerate_blocks(values):
        if b - a < 2:
            continue
        block = _canonical_block(vectors[:, a:b])
        if "sz2" in label_mats:
            sub = block.conj().T @ label_mats["sz2"] @ block
            w, u = np.linalg.eigh(sub)
            order = sorted(range(len(w)), key=lambda i: (-round(w[i], 9), i))
            block = block @ u[:, order]
        vectors[:, a:b] = block
    for i in range(vectors.shape[1]):
        vectors[:, i] = _fix_phase(vectors[:, i])
    if k is not None:
        values, vectors = values[:k], vectors[:, :k]
    labels = {
        name: np.real(np.einsum("ij,ik,kj->j", vectors.conj(), m, vectors))
        for name, m in label_mats.items()
    }
    return ExactSpectrum(values, vectors, labels)


def exact_transition_amplitude(a: Observable, v1, v2) -> complex:
    """``v1^dagger A v2`` by dense algebra."""
    v1 = v1.amplitudes if isinstance(v1, StateVector) else np.asarray(v1)
    v2 = v2.amplitudes if isinstance(v2, StateVector) else np.asarray(v2)
    m = observable_to_matrix(a)
    if m.shape[0] != len(v1) or len(v1) != len(v2):
        raise OracleError("dimension mismatch")
    return complex(v1.conj() @ m @ v2)


def exact_oscillator_strength(
    e_i: float, e_j: float, dipoles: list[Observable], v_i, v_j
) -> float:
    amp = sum(abs(exact_transition_amplitude(d, v_j, v_i)) ** 2 for d in dipoles)
    return float(2.0 / 3.0 * (e_j - e_i) * amp)
