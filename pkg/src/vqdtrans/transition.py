"""Transition amplitudes ``|<psi1|A|psi2>|^2`` and oscillator strengths.

Three estimators are provided:

* the overlap method, which needs only return probabilities of circuits
  built from the two state preparations and Pauli rotations;
* the ancilla method, which measures ``X (x) P`` and ``Y (x) P`` on a state
  prepared with controlled circuits and recovers the complex amplitude;
* the superposition method for states sharing one circuit applied to
  different basis references (real states only).

Overlap method.  For ``A = sum_i a_i P_i`` and orthogonal ``psi1, psi2``::

    |<psi1|A|psi2>|^2 = sum_i a_i^2 O_i
        + sum_{i<j} a_i a_j (2 O+_ij + 2 O-_ij - O_i - O_j - O_ij)

with ``O_i = |<psi1|P_i|psi2>|^2``, ``O+-_ij = |<psi1|U+-_ij|psi2>|^2``,
``U+-_ij = exp(+-i pi/4 P_i) exp(+-i pi/4 P_j)`` and
``O_ij = |<psi1|P_i P_j|psi2>|^2``.  Expanding
``U+- = (1 +- iP_i +- iP_j - P_i P_j) / 2`` and dropping ``<psi1|psi2> = 0``
gives ``O+ + O- = (|c|^2 + |a + b|^2) / 2`` with ``a, b, c`` the three
matrix elements, so the bracket equals ``2 Re(a* b)``.  Only ``|c|^2``
enters, so the phase of the product ``P_i P_j`` is irrelevant and the
phase-stripped string is used.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence, Union

import numpy as np

from .eigensolvers import StateRecord, subspace_matrix_superposition
from .estimation import Evaluator
from .mitigation import ConfusionMatrix
from .pauli import Observable, PauliString, pauli_mul
from .statevector import (
    Circuit,
    Reference,
    StateVector,
    apply_gate,
    apply_pauli,
    pauli_rotation,
    run,
)

ORTHOGONALITY_TOL = 1e-6
REAL_TOL = 1e-10
DEFAULT_REPEATS = 5
DEGENERACY_TOL = 1e-9


class TransitionError(ValueError):
    pass


class OrthogonalityError(TransitionError):
    def __init__(self, overlap: float, tol: float):
        super().__init__(
            f"states are not orthogonal: |<psi1|psi2>|^2 = {overlap:.3e} exceeds {tol:.1e}"
        )
        self.overlap = overlap


@dataclass(frozen=True)
class PreparedState:
    """A state given as ``circuit`` applied to ``reference``; ``circuit=None`` means the reference itself."""

    circuit: Circuit | None
    reference: Reference = 0

    @property
    def n(self) -> int:
        if self.circuit is not None:
            return self.circuit.n
        return self.reference.n

    @property
    def has_circuit(self) -> bool:
        return self.circuit is not None and not isinstance(self.reference, StateVector)

    def statevector(self) -> StateVector:
        if self.circuit is None:
            return self.reference
        return run(self.circuit, self.reference)


StateLike = Union[PreparedState, StateVector, Circuit, tuple, StateRecord]


def as_prepared(state: StateLike) -> PreparedState:
    if isinstance(state, PreparedState):
        return state
    if isinstance(state, StateVector):
        return PreparedState(None, state)
    if isinstance(state, Circuit):
        return PreparedState(state, 0)
    if isinstance(state, StateRecord):
        if state.coefficients is None:
            return PreparedState(state.circuit, state.reference)
        return PreparedState(None, state.statevector())
    if isinstance(state, tuple) and len(state) == 2:
        return PreparedState(state[0], state[1])
    raise TransitionError(f"cannot interpret {type(state).__name__} as a state")


def build_u_ij(pi: PauliString | str, pj: PauliString | str, sign: int = 1) -> Circuit:
    """``exp(s i pi/4 P_i) exp(s i pi/4 P_j)`` for ``s = sign``; ``P_j`` acts first.

    With ``R_P(t) = exp(-i t P / 2)`` each factor is ``R_P(-s pi/2)``.
    """
    pi = PauliString(str(pi))
    pj = PauliString(str(pj))
    if pi.n != pj.n:
        raise TransitionError(f"Pauli strings of different lengths: {pi.n} and {pj.n}")
    if sign not in (1, -1):
        raise TransitionError(f"sign must be +1 or -1, got {sign}")
    angle = -sign * math.pi / 2
    return Circuit(pi.n, (pauli_rotation(pj, angle), pauli_rotation(pi, angle)))


def pauli_circuit(p: PauliString) -> Circuit:
    """``P`` up to a global phase, as the rotation ``R_P(pi) = -iP``."""
    return Circuit(p.n, (pauli_rotation(p, math.pi),))


@dataclass
class TransitionEstimate:
    value: float
    raw_value: float
    method: str
    std_error: float | None = None
    diagonal: list[dict] = field(default_factory=list)
    pairs: list[dict] = field(default_factory=list)
    evaluations: int = 0
    amplitude: complex | None = None

    def to_dict(self) -> dict:
        d = {
            "value": self.value,
            "raw_value": self.raw_value,
            "method": self.method,
            "std_error": self.std_error,
            "evaluations": self.evaluations,
        }
        if self.diagonal:
            d["diagonal"] = self.diagonal
            d["pairs"] = self.pairs
        if self.amplitude is not None:
            d["amplitude"] = [self.amplitude.real, self.amplitude.imag]
        return d


def check_orthogonal(s1: PreparedState, s2: PreparedState, tol: float = ORTHOGONALITY_TOL) -> float:
    """Exact ``|<psi1|psi2>|^2``; raises when it exceeds ``tol``."""
    ov = abs(s1.statevector().inner(s2.statevector())) ** 2
    if ov > tol:
        raise OrthogonalityError(ov, tol)
    return ov
    return ov


class _OverlapOracle:
    """Overlaps ``|<psi1|V|psi2>|^2`` for Pauli and ``U+-`` circuits ``V``."""

    def __init__(self, s1: PreparedState, s2: PreparedState, evaluator: Evaluator):
        self.evaluator = evaluator
        self.s1, self.s2 = s1, s2
        self.count = 0
        if evaluator.exact:
            self.bra = s1.statevector().amplitudes
            self.ket = s2.statevector().amplitudes
        elif not (s1.has_circuit and s2.has_circuit):
            raise TransitionError("sampled estimates need circuit-prepared states on basis references")

    def pauli(self, p: PauliString) -> tuple[float, float]:
        self.count += 1
        if self.evaluator.exact:
            return float(abs(np.vdot(self.bra, apply_pauli(p, self.ket))) ** 2), 0.0
        return self._sampled(pauli_circuit(p))

    def circuit(self, v: Circuit) -> tuple[float, float]:
        self.count += 1
        if self.evaluator.exact:
            psi = self.ket
            for g in v.gates:
                psi = apply_gate(g, psi, v.n)
            return float(abs(np.vdot(self.bra, psi)) ** 2), 0.0
        return self._sampled(v)

    def _sampled(self, v: Circuit) -> tuple[float, float]:
        c2 = self.s2.circuit.then(v)
        return self.evaluator.overlap_with_error(self.s1.circuit, self.s1.reference, c2, self.s2.reference)


def expected_evaluations(m: int) -> int:
    return m + 3 * m * (m - 1) // 2


def transition_amplitude_squared(
    a: Observable,
    state1: StateLike,
    state2: StateLike,
    evaluator: Evaluator | None = None,
    orthogonality_tol: float = ORTHOGONALITY_TOL,
) -> TransitionEstimate:
    """Overlap-method estimate of ``|<psi1|A|psi2>|^2``.

    Orthogonality is always checked on the exact states.  In sampled mode
    each overlap is a return-probability estimate and the standard error is
    propagated in quadrature.
    """
    evaluator = evaluator or Evaluator()
    s1, s2 = as_prepared(state1), as_prepared(state2)
    if not a.n == s1.n == s2.n:
        raise TransitionError(f"dimension mismatch: A on {a.n} qubits, states on {s1.n} and {s2.n}")
    check_orthogonal(s1, s2, orthogonality_tol)
    oracle = _OverlapOracle(s1, s2, evaluator)

    coeffs = [c for c, _ in a.terms]
    strings = [p for _, p in a.terms]
    m = len(strings)
    diag = [oracle.pauli(p) for p in strings]
    # weight of each overlap in the estimator, for error propagation
    weights = [c * c for c in coeffs]
    value = sum(w * o for w, (o, _) in zip(weights, diag))
    variance = 0.0
    pairs = []
    for i, j in combinations(range(m), 2):
        aij = coeffs[i] * coeffs[j]
        o_plus, e_plus = oracle.circuit(build_u_ij(strings[i], strings[j], +1))
        o_minus, e_minus = oracle.circuit(build_u_ij(strings[i], strings[j], -1))
        o_ij, e_ij = oracle.pauli(pauli_mul(strings[i], strings[j])[1])
        value += aij * (2 * o_plus + 2 * o_minus - diag[i][0] - diag[j][0] - o_ij)
        weights[i] -= aij
        weights[j] -= aij
        variance += (2 * aij * e_plus) ** 2 + (2 * aij * e_minus) ** 2 + (aij * e_ij) ** 2
        pairs.append({
            "i": i, "j": j,
            "pi": strings[i].ops, "pj": strings[j].ops,
            "o_plus": o_plus, "o_minus": o_minus,
            "o_i": diag[i][0], "o_j": diag[j][0], "o_ij": o_ij,
        })
    variance += sum((w * e) ** 2 for w, (_, e) in zip(weights, diag))
    if oracle.count != expected_evaluations(m):
        raise AssertionError(f"{oracle.count} overlap evaluations, expected {expected_evaluations(m)}")
    raw = float(value)
    return TransitionEstimate(
        value=max(raw, 0.0),
        raw_value=raw,
        method="overlap",
        std_error=None if evaluator.exact else float(math.sqrt(variance)),
        diagonal=[{"p": p.ops, "o": o} for p, (o, _) in zip(strings, diag)],
        pairs=pairs,
        evaluations=oracle.count,
    )


def _controlled_pair_state(s1: PreparedState, s2: PreparedState) -> StateVector:
    """``(|0>|psi1> + |1>|psi2>) / sqrt 2`` with the ancilla as qubit 0.

    This is the state left by a Hadamard on the ancilla followed by
    ``psi1``'s preparation controlled on ancilla 0 and ``psi2``'s controlled
    on ancilla 1; each controlled circuit only touches its own half.
    """
    amps = np.concatenate([s1.statevector().amplitudes, s2.statevector().amplitudes]) / math.sqrt(2)
    return StateVector(amps, s1.n + 1)


def _ancilla_channel(cm: ConfusionMatrix | None) -> ConfusionMatrix | None:
    """Register channel widened by a noiseless ancilla in front (qubit 0)."""
    if cm is None:
        return None
    return ConfusionMatrix(np.kron(np.eye(2), cm.matrix), cm.n + 1, cm.n_cal)


def _with_ancilla(evaluator: Evaluator) -> Evaluator:
    """Sampling evaluator for the ancilla register that shares ``evaluator``'s random stream."""
    widened = Evaluator(
        "sampled",
        shots=evaluator.shots,
        noise=_ancilla_channel(evaluator.noise),
        mitigation=_ancilla_channel(evaluator.mitigation),
    )
    widened.rng = evaluator.rng
    return widened


def transition_amplitude_ancilla(
    a: Observable,
    state1: StateLike,
    state2: StateLike,
    evaluator: Evaluator | None = None,
) -> complex:
    """Complex ``<psi1|A|psi2>`` from ``<X P_i>`` (real part) and ``<Y P_i>`` (imaginary part).

    Needs no orthogonality.  When sampling, the register's readout channel
    and mitigation apply to the system qubits; the ancilla reads out cleanly.
    """
    evaluator = evaluator or Evaluator()
    s1, s2 = as_prepared(state1), as_prepared(state2)
    if not a.n == s1.n == s2.n:
        raise TransitionError(f"dimension mismatch: A on {a.n} qubits, states on {s1.n} and {s2.n}")
    joint = _controlled_pair_state(s1, s2)
    reader = evaluator if evaluator.exact else _with_ancilla(evaluator)
    total = 0j
    for c, p in a.terms:
        re = reader.pauli_mean(PauliString("X" + p.ops), joint)[0]
        im = reader.pauli_mean(PauliString("Y" + p.ops), joint)[0]
        total += c * complex(re, im)
    return complex(total)


def _check_real(states: Sequence[StateVector]) -> None:
    worst = max(float(np.abs(s.amplitudes.imag).max()) for s in states)
    if worst > REAL_TOL:
        raise TransitionError(
            f"superposition method needs real states (imaginary part {worst:.2e}); "
            "use the overlap or ancilla method instead"
        )


def transition_amplitude_superposition(
    a: Observable,
    circuit: Circuit,
    ref_i: int,
    ref_j: int,
    evaluator: Evaluator | None = None,
) -> TransitionEstimate:
    """``<psi_i|A|psi_j> = (<+|A|+> - <-|A|->) / 2`` with ``|+-> = U (|phi_i> +- |phi_j>) / sqrt 2``."""
    evaluator = evaluator or Evaluator()
    if a.n != circuit.n:
        raise TransitionError(f"dimension mismatch: A on {a.n} qubits, circuit on {circuit.n}")
    if ref_i == ref_j:
        raise TransitionError("references must differ")
    _check_real([run(circuit, ref_i), run(circuit, ref_j)])
    amp = subspace_matrix_superposition(a, circuit, [ref_i, ref_j], evaluator)[0, 1]
    return TransitionEstimate(
        value=float(amp * amp), raw_value=float(amp * amp), method="superposition",
        evaluations=4, amplitude=complex(amp),
    )


def transition_amplitude_contracted(
    a: Observable,
    circuit: Circuit,
    references: Sequence[int],
    coefficients_i: Sequence[float],
    coefficients_j: Sequence[float],
    evaluator: Evaluator | None = None,
) -> TransitionEstimate:
    """Superposition method for contracted states ``sum_k c_k U|phi_k>``.

    Builds ``A`` in the rotated reference basis and contracts it with the two
    coefficient vectors.
    """
    evaluator = evaluator or Evaluator()
    _check_real([run(circuit, r) for r in references])
    m = subspace_matrix_superposition(a, circuit, list(references), evaluator)
    amp = float(np.asarray(coefficients_i) @ m @ np.asarray(coefficients_j))
    k = len(references)
    return TransitionEstimate(
        value=amp * amp, raw_value=amp * amp, method="superposition",
        evaluations=k + k * (k - 1), amplitude=complex(amp),
    )


def energy_error_bar(
    terms: Sequence[tuple[float, float]],
    variant: str = "term_average",
    shots: int | None = None,
) -> float:
    """Shot-noise error of ``H = sum_i c_i P_i`` from ``(c_i, Var P_i)`` pairs.

    ``"term_average"``: ``sqrt((1/N) sum c_i^2 Var P_i)`` with ``N`` the term count.
    ``"textbook"``: ``sqrt(sum c_i^2 Var P_i / shots)`` for independent
    per-term estimates with ``shots`` samples each.
    """
    n = len(terms)
    if n == 0:
        raise TransitionError("energy error bar needs at least one term")
    total = sum(c * c * var for c, var in terms)
    if variant == "term_average":
        return math.sqrt(total / n)
    if variant == "textbook":
        if not shots or shots < 1:
            raise TransitionError("textbook error bar needs a positive shot count")
        return math.sqrt(total / shots)
    raise TransitionError(f"unknown error-bar variant {variant!r}")


def oscillator_strength_value(gap: float, amplitudes: Sequence[float]) -> float:
    return 2.0 / 3.0 * gap * float(sum(amplitudes))


def oscillator_error_bar(
    gap: float,
    energy_errors: tuple[float, float],
    repeats: Sequence[Sequence[float]],
) -> tuple[float, list[float], list[float]]:
    """First-order error of ``f = 2/3 gap sum_a amp_a``.

    ``repeats[r][a]`` is realization ``r`` of the amplitude on axis ``a``.
    Each axis's error is the standard error of the mean over the ``R``
    realizations.  Returns ``(df, mean amplitudes, amplitude errors)``.
    """
    reps = np.asarray(repeats, dtype=float)
    if reps.ndim != 2 or reps.shape[0] < 2:
        raise TransitionError("need at least two realizations of the amplitudes")
    r = reps.shape[0]
    means = reps.mean(axis=0)
    errs = reps.std(axis=0, ddof=1) / math.sqrt(r)
    gap_err = math.hypot(*energy_errors)
    df = 2.0 / 3.0 * math.sqrt((means.sum() * gap_err) ** 2 + gap**2 * float((errs**2).sum()))
    return df, means.tolist(), errs.tolist()


@dataclass
class OscillatorStrengthResult:
    f: float
    gap: float
    amplitudes: list[float]
    error: float | None = None
    amplitude_errors: list[float] | None = None
    energy_errors: tuple[float, float] | None = None
    swapped: bool = False
    estimates: list[TransitionEstimate] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "f": self.f,
            "gap": self.gap,
            "amplitudes": dict(zip("xyz", self.amplitudes)),
            "error": self.error,
            "amplitude_errors": None if self.amplitude_errors is None else dict(zip("xyz", self.amplitude_errors)),
            "energy_errors": None if self.energy_errors is None else list(self.energy_errors),
            "swapped": self.swapped,
        }


METHODS = ("overlap", "ancilla", "superposition")


def _amplitude(method: str, a: Observable, s_i, s_j, evaluator: Evaluator) -> float:
    if method == "overlap":
        return transition_amplitude_squared(a, s_j, s_i, evaluator).value
    if method == "ancilla":
        return abs(transition_amplitude_ancilla(a, s_j, s_i, evaluator)) ** 2
    if method == "superposition":
        if not (isinstance(s_i, StateRecord) and isinstance(s_j, StateRecord)):
            raise TransitionError("superposition method needs eigensolver state records")
        if s_i.coefficients is not None:
            return transition_amplitude_contracted(
                a, s_i.circuit, s_i.references, s_j.coefficients, s_i.coefficients, evaluator
            ).value
        if s_i.circuit != s_j.circuit:
            raise TransitionError("superposition method needs states from one shared circuit")
        return transition_amplitude_superposition(a, s_i.circuit, s_j.reference, s_i.reference, evaluator).value
    raise TransitionError(f"unknown method {method!r}")


def oscillator_strength(
    e_i: float,
    e_j: float,
    dipoles: Sequence[Observable],
    state_i: StateLike,
    state_j: StateLike,
    method: str = "overlap",
    evaluator: Evaluator | None = None,
) -> OscillatorStrengthResult:
    """``f_ij = 2/3 (E_j - E_i) sum_a |<S_j|R_a|S_i>|^2``.

    If ``E_j < E_i`` the two states are swapped so that ``f >= 0``;
    ``swapped`` records this.  Levels closer than ``DEGENERACY_TOL`` count as
    degenerate and get a zero gap.
    """
    evaluator = evaluator or Evaluator()
    swapped = e_j < e_i
    if swapped:
        e_i, e_j, state_i, state_j = e_j, e_i, state_j, state_i
    gap = e_j - e_i if e_j - e_i > DEGENERACY_TOL else 0.0
    amps = [_amplitude(method, d, state_i, state_j, evaluator) if len(d) else 0.0 for d in dipoles]
    return OscillatorStrengthResult(oscillator_strength_value(gap, amps), gap, amps, swapped=swapped)


def sampled_oscillator_strength(
    h: Observable,
    dipoles: Sequence[Observable],
    state_i: StateLike,
    state_j: StateLike,
    evaluator: Evaluator,
    repeats: int = DEFAULT_REPEATS,
    method: str = "overlap",
    error_variant: str = "textbook",
) -> OscillatorStrengthResult:
    """Shot-noise ``f`` with error bar.

    Energies are sampled once per state (per-term variances give their error
    bars); amplitudes are sampled ``repeats`` times and ``f`` uses their mean.
    """
    if evaluator.exact:
        raise TransitionError("sampled oscillator strength needs a sampled evaluator")
    if repeats < 2:
        raise TransitionError("need at least two amplitude realizations")
    energies, errors = [], []
    for s in (state_i, state_j):
        sv = as_prepared(s).statevector()
        e, terms = evaluator.energy_terms(h, sv)
        energies.append(e)
        errors.append(energy_error_bar(terms, error_variant, evaluator.shots))
    swapped = energies[1] < energies[0]
    if swapped:
        energies.reverse()
        errors.reverse()
        state_i, state_j = state_j, state_i
    gap = energies[1] - energies[0]
    reps = [
        [_amplitude(method, d, state_i, state_j, evaluator) if len(d) else 0.0 for d in dipoles]
        for _ in range(repeats)
    ]
    df, means, errs = oscillator_error_bar(gap, (errors[0], errors[1]), reps)
    return OscillatorStrengthResult(
        oscillator_strength_value(gap, means), gap, means, df, errs, (errors[0], errors[1]), swapped
    )
