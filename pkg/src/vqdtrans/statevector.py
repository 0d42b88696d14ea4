"""Dense statevector simulation.

Basis index convention: qubit 0 is the most significant bit, matching the
leftmost character of a Pauli string.  Angles follow ``R_P(t) = exp(-i t P / 2)``
for RY, RZ and Pauli rotations.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import TYPE_CHECKING, Sequence, Union

import numpy as np

from .pauli import Observable, PauliString

if TYPE_CHECKING:
    from .mitigation import ConfusionMatrix

MAX_QUBITS = 24
NORM_TOL = 1e-10

SeedLike = Union[int, np.random.Generator, None]


class SimulationError(ValueError):
    pass


ONE_QUBIT = ("RY", "RZ", "X")
TWO_QUBIT = ("CZ", "CNOT", "GIVENS", "EXCHANGE")
PARAMETRIC = ("RY", "RZ", "PAULI_ROT", "GIVENS", "EXCHANGE")
SELF_INVERSE = ("X", "CZ", "CNOT", "EXCHANGE")


@dataclass(frozen=True)
class Gate:
    """One circuit instruction.

    ``GIVENS`` rotates ``span{|01>, |10>}`` by ``[[cos t, -sin t], [sin t, cos t]]``;
    ``EXCHANGE`` applies the real reflection ``[[cos t, sin t], [sin t, -cos t]]``
    there.  Both leave ``|00>`` and ``|11>`` alone.  ``param`` records which
    entry of a parameter vector fed ``angle`` (None for fixed gates).
    """

    kind: str
    targets: tuple[int, ...]
    angle: float | None = None
    pauli: PauliString | None = None
    param: int | None = None

    def __post_init__(self):
        if len(set(self.targets)) != len(self.targets):
            raise SimulationError(f"{self.kind}: repeated target in {self.targets}")
        if self.kind in ONE_QUBIT and len(self.targets) != 1:
            raise SimulationError(f"{self.kind} acts on one qubit")
        if self.kind in TWO_QUBIT and len(self.targets) != 2:
            raise SimulationError(f"{self.kind} acts on two qubits")
        if self.kind == "PAULI_ROT" and self.pauli is None:
            raise SimulationError("PAULI_ROT needs a Pauli string")
        if self.kind in PARAMETRIC and self.angle is None:
            raise SimulationError(f"{self.kind} needs an angle")
        if self.kind not in ONE_QUBIT + TWO_QUBIT + ("PAULI_ROT",):
            raise SimulationError(f"unknown gate kind {self.kind!r}")

    def inverse(self) -> "Gate":
        if self.kind in SELF_INVERSE:
            return self
        return replace(self, angle=-self.angle)

    def local_matrix(self) -> np.ndarray:
        """Matrix on the target qubits (first target = most significant)."""
        t = self.angle
        if self.kind == "RY":
            c, s = np.cos(t / 2), np.sin(t / 2)
            return np.array([[c, -s], [s, c]], dtype=complex)
        if self.kind == "RZ":
            return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])
        if self.kind == "X":
            return np.array([[0, 1], [1, 0]], dtype=complex)
        if self.kind == "CZ":
            return np.diag([1, 1, 1, -1]).astype(complex)
        if self.kind == "CNOT":
            m = np.eye(4, dtype=complex)
            m[[2, 3]] = m[[3, 2]]
            return m
        if self.kind in ("GIVENS", "EXCHANGE"):
            c, s = np.cos(t), np.sin(t)
            m = np.eye(4, dtype=complex)
            if self.kind == "GIVENS":
                m[1:3, 1:3] = [[c, -s], [s, c]]
            else:
                m[1:3, 1:3] = [[c, s], [s, -c]]
            return m
        raise SimulationError(f"{self.kind} has no local matrix")


def ry(q: int, theta: float, param: int | None = None) -> Gate:
    return Gate("RY", (q,), float(theta), param=param)


def rz(q: int, theta: float, param: int | None = None) -> Gate:
    return Gate("RZ", (q,), float(theta), param=param)


def x(q: int) -> Gate:
    return Gate("X", (q,))


def cz(a: int, b: int) -> Gate:
    return Gate("CZ", (a, b))


def cnot(control: int, target: int) -> Gate:
    return Gate("CNOT", (control, target))


def pauli_rotation(p: PauliString | str, theta: float, param: int | None = None) -> Gate:
    p = p if isinstance(p, PauliString) else PauliString(p)
    targets = tuple(q for q, ch in enumerate(p.ops) if ch != "I")
    return Gate("PAULI_ROT", targets, float(theta), pauli=p, param=param)


def givens(a: int, b: int, theta: float, param: int | None = None) -> Gate:
    return Gate("GIVENS", (a, b), float(theta), param=param)


def exchange(a: int, b: int, theta: float, param: int | None = None) -> Gate:
    return Gate("EXCHANGE", (a, b), float(theta), param=param)


@dataclass(frozen=True)
class Circuit:
    n: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not 1 <= self.n <= MAX_QUBITS:
            raise SimulationError(f"qubit count {self.n} outside 1..{MAX_QUBITS}")
        for g in self.gates:
            if any(t < 0 or t >= self.n for t in g.targets):
                raise SimulationError(f"{g.kind} targets {g.targets} outside {self.n} qubits")
            if g.pauli is not None and g.pauli.n != self.n:
                raise SimulationError(f"Pauli rotation {g.pauli} does not fit {self.n} qubits")

    def inverse(self) -> "Circuit":
        return Circuit(self.n, tuple(g.inverse() for g in reversed(self.gates)))

    def then(self, other: "Circuit") -> "Circuit":
        """Circuit that applies ``self`` first, then ``other``."""
        if other.n != self.n:
            raise SimulationError(f"cannot compose {self.n}- and {other.n}-qubit circuits")
        return Circuit(self.n, self.gates + other.gates)

    def __len__(self) -> int:
        return len(self.gates)


def basis_prep(n: int, index: int) -> Circuit:
    """X gates taking ``|0...0>`` to basis state ``index``."""
    if not 0 <= index < 2**n:
        raise SimulationError(f"basis index {index} outside {n}-qubit space")
    return Circuit(n, tuple(x(q) for q in range(n) if (index >> (n - 1 - q)) & 1))


@dataclass
class StateVector:
    amplitudes: np.ndarray
    n: int

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.n,):
            raise SimulationError(f"expected {2**self.n} amplitudes, got {self.amplitudes.shape}")

    @classmethod
    def basis(cls, n: int, index: int = 0) -> "StateVector":
        if not 0 <= index < 2**n:
            raise SimulationError(f"basis index {index} outside {n}-qubit space")
        v = np.zeros(2**n, dtype=complex)
        v[index] = 1.0
        return cls(v, n)

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy(), self.n)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        return p / p.sum()

    def inner(self, other: "StateVector") -> complex:
        """``<self|other>``."""
        if other.n != self.n:
            raise SimulationError(f"dimension mismatch: {self.n} vs {other.n} qubits")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


Reference = Union[int, StateVector]


def _apply_local(psi: np.ndarray, mat: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    k = len(targets)
    t = psi.reshape((2,) * n)
    m = mat.reshape((2,) * (2 * k))
    t = np.tensordot(m, t, axes=(list(range(k, 2 * k)), list(targets)))
    t = np.moveaxis(t, list(range(k)), list(targets))
    return t.reshape(-1)


@lru_cache(maxsize=4096)
def _pauli_action(ops: str) -> tuple[np.ndarray, np.ndarray]:
    """Index permutation and phases such that ``(P v) = phases * v[perm]``."""
    p = PauliString(ops)
    x_mask, z_mask, n_y = p.masks()
    idx = np.arange(2**p.n, dtype=np.int64)
    src = idx ^ x_mask
    signs = 1 - 2 * (np.bitwise_count(src & z_mask).astype(np.int64) & 1)
    phases = (1j**n_y) * signs
    phases.setflags(write=False)
    src.setflags(write=False)
    return src, phases


def apply_pauli(p: PauliString, psi: np.ndarray) -> np.ndarray:
    src, phases = _pauli_action(p.ops)
    return phases * psi[src]


def apply_gate(g: Gate, psi: np.ndarray, n: int) -> np.ndarray:
    if g.kind == "PAULI_ROT":
        half = g.angle / 2
        return np.cos(half) * psi - 1j * np.sin(half) * apply_pauli(g.pauli, psi)
    return _apply_local(psi, g.local_matrix(), g.targets, n)


def _reference_vector(reference: Reference, n: int) -> np.ndarray:
    if isinstance(reference, StateVector):
        if reference.n != n:
            raise SimulationError(f"reference has {reference.n} qubits, circuit has {n}")
        if abs(reference.norm() - 1) > NORM_TOL:
            raise SimulationError(f"reference state not normalized (norm {reference.norm()})")
        return reference.amplitudes.copy()
    return StateVector.basis(n, int(reference)).amplitudes


def run(c: Circuit, reference: Reference = 0) -> StateVector:
    """Apply ``c`` gate by gate to a basis state index or a state vector."""
    psi = _reference_vector(reference, c.n)
    for g in c.gates:
        psi = apply_gate(g, psi, c.n)
    return StateVector(psi, c.n)


def pauli_expectation(p: PauliString, s: StateVector) -> float:
    if p.n != s.n:
        raise SimulationError(f"dimension mismatch: {p.n} vs {s.n} qubits")
    return float(np.vdot(s.amplitudes, apply_pauli(p, s.amplitudes)).real)


def expectation(o: Observable, s: StateVector) -> float:
    """Exact ``<s|o|s>``."""
    if o.n != s.n:
        raise SimulationError(f"dimension mismatch: {o.n} vs {s.n} qubits")
    return float(sum(c * pauli_expectation(p, s) for c, p in o.terms))


def matrix_element(o: Observable, bra: StateVector, ket: StateVector) -> complex:
    """Exact ``<bra|o|ket>``."""
    if not o.n == bra.n == ket.n:
        raise SimulationError("dimension mismatch in matrix element")
    total = 0j
    for c, p in o.terms:
        total += c * np.vdot(bra.amplitudes, apply_pauli(p, ket.amplitudes))
    return complex(total)


def overlap_squared(
    c1: Circuit,
    c2: Circuit,
    ref1: Reference = 0,
    ref2: Reference = 0,
    method: str = "auto",
) -> float:
    """``|<psi1|psi2>|^2`` with ``psi_i = run(c_i, ref_i)``.

    ``method="compose"`` runs ``c1^dagger c2`` on ``|0...0>`` and reads the
    return probability (basis references are folded in as X gates);
    ``"direct"`` takes the inner product of the two states.  ``"auto"``
    composes whenever both references are basis indices.
    """
    if c1.n != c2.n:
        raise SimulationError(f"dimension mismatch: {c1.n} vs {c2.n} qubits")
    basis_refs = not isinstance(ref1, StateVector) and not isinstance(ref2, StateVector)
    if method == "auto":
        method = "compose" if basis_refs else "direct"
    if method == "compose":
        if not basis_refs:
            raise SimulationError("composition needs basis-state references")
        full = basis_prep(c1.n, ref2).then(c2).then(c1.inverse()).then(basis_prep(c1.n, ref1))
        amp = run(full, 0).amplitudes[0]
        return float(abs(amp) ** 2)
    if method == "direct":
        return float(abs(run(c1, ref1).inner(run(c2, ref2))) ** 2)
    raise SimulationError(f"unknown overlap method {method!r}")


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_counts(
    probabilities: np.ndarray,
    shots: int,
    noise: "ConfusionMatrix | None" = None,
    seed: SeedLike = None,
) -> np.ndarray:
    """Histogram of ``shots`` bitstrings, optionally pushed through a readout channel."""
    if shots < 1:
        raise SimulationError(f"shots must be >= 1, got {shots}")
    rng = make_rng(seed)
    p = np.clip(np.asarray(probabilities, dtype=float), 0.0, None)
    counts = rng.multinomial(shots, p / p.sum())
    if noise is None:
        return counts
    if noise.matrix.shape[0] != len(p):
        raise SimulationError("confusion matrix dimension does not match the register")
    noisy = np.zeros_like(counts)
    for prepared in np.flatnonzero(counts):
        column = noise.matrix[:, prepared]
        noisy += rng.multinomial(counts[prepared], column / column.sum())
    return noisy


_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SDG = np.diag([1, -1j])
_MEASURE_ROTATION = {"X": _H, "Y": _H @ _SDG}


def measurement_basis_state(p: PauliString, s: StateVector) -> StateVector:
    """Rotate ``s`` so that measuring ``p`` becomes a Z-parity readout."""
    psi = s.amplitudes
    for q, ch in enumerate(p.ops):
        if ch in _MEASURE_ROTATION:
            psi = _apply_local(psi, _MEASURE_ROTATION[ch], (q,), s.n)
    return StateVector(psi, s.n)


def parity_signs(p: PauliString) -> np.ndarray:
    """``+1/-1`` eigenvalue of the Z-parity readout of ``p`` for each outcome."""
    mask = 0
    for q, ch in enumerate(p.ops):
        if ch != "I":
            mask |= 1 << (p.n - 1 - q)
    outcomes = np.arange(2**p.n, dtype=np.int64)
    return 1 - 2 * (np.bitwise_count(outcomes & mask).astype(np.int64) & 1)


def sample_pauli_expectation(
    p: PauliString,
    s: StateVector,
    shots: int,
    noise: "ConfusionMatrix | None" = None,
    seed: SeedLike = None,
) -> tuple[float, float]:
    """Shot estimate of ``<s|p|s>``: returns ``(mean, variance)`` of the ±1 outcomes."""
    if p.n != s.n:
        raise SimulationError(f"dimension mismatch: {p.n} vs {s.n} qubits")
    if shots < 1:
        raise SimulationError(f"shots must be >= 1, got {shots}")
    rotated = measurement_basis_state(p, s)
    counts = sample_counts(rotated.probabilities(), shots, noise, seed)
    mean = float(counts @ parity_signs(p)) / shots
    return mean, max(0.0, 1.0 - mean * mean)


def sample_return_probability(
    c: Circuit,
    shots: int,
    noise: "ConfusionMatrix | None" = None,
    seed: SeedLike = None,
) -> tuple[float, float]:
    """Fraction of all-zero outcomes after running ``c`` on ``|0...0>``, with its std error."""
    if shots < 1:
        raise SimulationError(f"shots must be >= 1, got {shots}")
    state = run(c, 0)
    counts = sample_counts(state.probabilities(), shots, noise, seed)
    p_hat = counts[0] / shots
    return float(p_hat), float(np.sqrt(p_hat * (1 - p_hat) / shots))
