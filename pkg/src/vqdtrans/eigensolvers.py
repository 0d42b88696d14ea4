"""VQE, SSVQE, MCVQE and VQD.

Penalty terms are expected to be folded into the Hamiltonian by the caller;
the solvers never look inside it.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .ansatz import AnsatzSpec
from .estimation import Evaluator
from .optim import (
    OptimizationTrace,
    OptimizerConfig,
    minimize,
    parameter_shift_gradient,
    shift_rules,
)
from .pauli import Observable
from .statevector import Circuit, StateVector, matrix_element, overlap_squared, run

logger = logging.getLogger(__name__)

COLLAPSE_OVERLAP = 0.5
SYMMETRY_TOL = 1e-8


class EigensolverError(ValueError):
    pass


def hartree_fock_index(n_qubits: int, n_electrons: int) -> int:
    """Basis index with the lowest ``n_electrons`` spin orbitals occupied."""
    if not 0 <= n_electrons <= n_qubits:
        raise EigensolverError(f"cannot place {n_electrons} electrons in {n_qubits} orbitals")
    index = 0
    for q in range(n_electrons):
        index |= 1 << (n_qubits - 1 - q)
    return index


def single_excitations(n_qubits: int, n_electrons: int, preserve_sz: bool = True) -> list[int]:
    """Spin-preserving single excitations of the Hartree-Fock determinant.

    Ordered by orbital distance ``a - i``, then by the occupied index, so the
    HOMO-LUMO pairs come first.
    """
    hf = hartree_fock_index(n_qubits, n_electrons)
    pairs = []
    for i in range(n_electrons):
        for a in range(n_electrons, n_qubits):
            if preserve_sz and (a - i) % 2:
                continue
            pairs.append((a - i, i, a))
    out = []
    for _, i, a in sorted(pairs):
        out.append(hf ^ (1 << (n_qubits - 1 - i)) ^ (1 << (n_qubits - 1 - a)))
    return out


def default_references(n_qubits: int, n_electrons: int, k: int) -> list[int]:
    refs = [hartree_fock_index(n_qubits, n_electrons)] + single_excitations(n_qubits, n_electrons)
    if len(refs) < k:
        raise EigensolverError(f"only {len(refs)} reference states available, {k} requested")
    return refs[:k]


def default_beta(h: Observable) -> float:
    """Twice the spectral-range bound ``2 sum_{P != I} |h_P|``.

    The bound alone can equal the range (``H = Z``), which leaves the
    deflated cost flat between the ground state and the target; doubling it
    makes ``beta`` strictly exceed ``E_max - E_min``.
    """
    return 2.0 * spectral_range_bound(h)


def spectral_range_bound(h: Observable) -> float:
    return 2.0 * sum(abs(c) for c, p in h.terms if not p.is_identity)


@dataclass
class StateRecord:
    params: np.ndarray
    energy: float
    reference: int | None
    circuit: Circuit
    trace: OptimizationTrace | None = None
    betas: list[float] | None = None
    coefficients: np.ndarray | None = None  # MCVQE contraction over the references
    references: list[int] | None = None

    def statevector(self) -> StateVector:
        if self.coefficients is None:
            return run(self.circuit, self.reference)
        amps = sum(
            c * run(self.circuit, r).amplitudes for c, r in zip(self.coefficients, self.references)
        )
        return StateVector(amps, self.circuit.n)

    def to_dict(self) -> dict:
        d = {
            "energy": float(self.energy),
            "params": [float(v) for v in self.params],
            "reference": self.reference,
        }
        if self.betas is not None:
            d["betas"] = [float(b) for b in self.betas]
        if self.coefficients is not None:
            d["coefficients"] = [float(c) for c in self.coefficients]
            d["references"] = list(self.references)
        if self.trace is not None:
            d["trace"] = self.trace.to_dict()
        return d


@dataclass
class EigensolverResult:
    algorithm: str
    ansatz: AnsatzSpec
    states: list[StateRecord]
    overlaps: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    collapsed: list[tuple[int, int]] = field(default_factory=list)
    weights: list[float] | None = None
    subspace_matrix: np.ndarray | None = None
    subspace_matrix_superposition: np.ndarray | None = None
    subspace_vectors: np.ndarray | None = None
    traces: list[OptimizationTrace] = field(default_factory=list)

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.energy for s in self.states])

    @property
    def collapse_flag(self) -> bool:
        return bool(self.collapsed)

    def statevectors(self) -> list[StateVector]:
        return [s.statevector() for s in self.states]

    def to_dict(self) -> dict:
        d = {
            "algorithm": self.algorithm,
            "ansatz": {"family": self.ansatz.family, "n": self.ansatz.n,
                       "depth": self.ansatz.depth, "block": self.ansatz.block},
            "energies": [float(e) for e in self.energies],
            "states": [s.to_dict() for s in self.states],
            "overlaps": np.asarray(self.overlaps).tolist(),
            "collapsed_pairs": [list(p) for p in self.collapsed],
        }
        if self.weights is not None:
            d["weights"] = list(self.weights)
        if self.subspace_matrix is not None:
            d["subspace_matrix"] = self.subspace_matrix.tolist()
            d["subspace_vectors"] = self.subspace_vectors.tolist()
        if self.traces:
            d["traces"] = [t.to_dict() for t in self.traces]
        return d


def _initial(spec: AnsatzSpec, initial_params, rng: np.random.Generator) -> np.ndarray:
    if initial_params is None:
        return spec.random_parameters(rng)
    x0 = np.asarray(initial_params, dtype=float)
    if x0.size != spec.parameter_count:
        raise EigensolverError(f"initial parameters have length {x0.size}, ansatz needs {spec.parameter_count}")
    return x0.copy()


def _optimize(
    cost: Callable[[np.ndarray], float],
    spec: AnsatzSpec,
    x0: np.ndarray,
    optimizer: OptimizerConfig,
    restarts: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, OptimizationTrace]:
    rules = shift_rules(spec.build(x0), spec.parameter_count)

    def grad(x):
        return parameter_shift_gradient(cost, x, rules)

    best = None
    starts = [x0] + [spec.random_parameters(rng) for _ in range(restarts)]
    for start in starts:
        x, trace = minimize(cost, start, optimizer, grad=grad)
        f = cost(x)
        if best is None or f < best[2]:
            best = (x, trace, f)
    return best[0], best[1]


def _check_refs(spec: AnsatzSpec, refs: Sequence[int]) -> list[int]:
    refs = [int(r) for r in refs]
    if len(set(refs)) != len(refs):
        raise EigensolverError(f"reference states must be distinct, got {refs}")
    for r in refs:
        if not 0 <= r < 2**spec.n:
            raise EigensolverError(f"reference {r} outside the {spec.n}-qubit basis")
    return refs


def _check_h(h: Observable, spec: AnsatzSpec) -> None:
    if h.n != spec.n:
        raise EigensolverError(f"Hamiltonian has {h.n} qubits, ansatz has {spec.n}")


def _pairwise_overlaps(states: list[StateVector]) -> np.ndarray:
    k = len(states)
    m = np.eye(k)
    for i, j in combinations(range(k), 2):
        m[i, j] = m[j, i] = abs(states[i].inner(states[j])) ** 2
    return m


def vqe(
    h: Observable,
    spec: AnsatzSpec,
    reference: int = 0,
    optimizer: OptimizerConfig | None = None,
    initial_params=None,
    evaluator: Evaluator | None = None,
    restarts: int = 0,
) -> EigensolverResult:
    _check_h(h, spec)
    optimizer = optimizer or OptimizerConfig()
    evaluator = evaluator or Evaluator()
    rng = np.random.default_rng(optimizer.seed)
    x0 = _initial(spec, initial_params, rng)

    def cost(x):
        return evaluator.energy(h, run(spec.build(x), reference))

    x, trace = _optimize(cost, spec, x0, optimizer, restarts, rng)
    circuit = spec.build(x)
    energy = evaluator.energy(h, run(circuit, reference))
    record = StateRecord(x, energy, reference, circuit, trace)
    return EigensolverResult("vqe", spec, [record], np.eye(1), traces=[trace])


def ssvqe(
    h: Observable,
    spec: AnsatzSpec,
    references: Sequence[int],
    weights: Sequence[float] | None = None,
    optimizer: OptimizerConfig | None = None,
    initial_params=None,
    evaluator: Evaluator | None = None,
    restarts: int = 0,
) -> EigensolverResult:
    """One shared circuit minimizing ``sum_i w_i <U phi_i|H|U phi_i>``; default ``w = (k, ..., 1)``."""
    _check_h(h, spec)
    refs = _check_refs(spec, references)
    k = len(refs)
    w = np.arange(k, 0, -1, dtype=float) if weights is None else np.asarray(weights, dtype=float)
    if w.size != k:
        raise EigensolverError(f"{w.size} weights for {k} references")
    if np.any(w <= 0) or np.any(np.diff(w) >= 0):
        raise EigensolverError(f"weights must be positive and strictly decreasing, got {w.tolist()}")
    optimizer = optimizer or OptimizerConfig()
    evaluator = evaluator or Evaluator()
    rng = np.random.default_rng(optimizer.seed)
    x0 = _initial(spec, initial_params, rng)

    def cost(x):
        c = spec.build(x)
        return float(sum(wi * evaluator.energy(h, run(c, r)) for wi, r in zip(w, refs)))

    x, trace = _optimize(cost, spec, x0, optimizer, restarts, rng)
    circuit = spec.build(x)
    records = [
        StateRecord(x, evaluator.energy(h, run(circuit, r)), r, circuit, trace) for r in refs
    ]
    records.sort(key=lambda s: s.energy)
    states = [s.statevector() for s in records]
    return EigensolverResult(
        "ssvqe", spec, records, _pairwise_overlaps(states), weights=w.tolist(), traces=[trace]
    )


def subspace_matrix_direct(h: Observable, circuit: Circuit, refs: Sequence[int]) -> np.ndarray:
    states = [run(circuit, r) for r in refs]
    k = len(states)
    m = np.zeros((k, k), dtype=complex)
    for i in range(k):
        for j in range(k):
            m[i, j] = matrix_element(h, states[i], states[j])
    return m


def subspace_matrix_superposition(
    h: Observable, circuit: Circuit, refs: Sequence[int], evaluator: Evaluator
) -> np.ndarray:
    """Real ``H~`` from ``(<+|H|+> - <-|H|->) / 2`` with ``|+-> = U (|phi_i> +- |phi_j>) / sqrt 2``."""
    k = len(refs)
    n = circuit.n
    m = np.zeros((k, k))
    for i in range(k):
        m[i, i] = evaluator.energy(h, run(circuit, refs[i]))
    for i, j in combinations(range(k), 2):
        plus = np.zeros(2**n, dtype=complex)
        plus[refs[i]] = plus[refs[j]] = 1 / np.sqrt(2)
        minus = plus.copy()
        minus[refs[j]] = -1 / np.sqrt(2)
        e_plus = evaluator.energy(h, run(circuit, StateVector(plus, n)))
        e_minus = evaluator.energy(h, run(circuit, StateVector(minus, n)))
        m[i, j] = m[j, i] = 0.5 * (e_plus - e_minus)
    return m


def mcvqe(
    h: Observable,
    spec: AnsatzSpec,
    references: Sequence[int],
    optimizer: OptimizerConfig | None = None,
    initial_params=None,
    evaluator: Evaluator | None = None,
    restarts: int = 0,
) -> EigensolverResult:
    """Equal-weight subspace search, then diagonalize the ``k x k`` subspace Hamiltonian."""
    _check_h(h, spec)
    refs = _check_refs(spec, references)
    optimizer = optimizer or OptimizerConfig()
    evaluator = evaluator or Evaluator()
    rng = np.random.default_rng(optimizer.seed)
    x0 = _initial(spec, initial_params, rng)

    def cost(x):
        c = spec.build(x)
        return float(sum(evaluator.energy(h, run(c, r)) for r in refs))

    x, trace = _optimize(cost, spec, x0, optimizer, restarts, rng)
    circuit = spec.build(x)
    via_superposition = subspace_matrix_superposition(h, circuit, refs, evaluator)
    if evaluator.exact:
        direct = subspace_matrix_direct(h, circuit, refs)
        asym = np.abs(direct - direct.conj().T).max()
        if asym > SYMMETRY_TOL or np.abs(direct.imag).max() > SYMMETRY_TOL:
            raise EigensolverError(
                f"subspace Hamiltonian is not real symmetric (deviation {asym:.3g}); "
                "the ansatz must produce real states"
            )
        h_tilde = direct.real
    else:
        h_tilde = via_superposition
    values, vectors = np.linalg.eigh(h_tilde)
    for m in range(vectors.shape[1]):
        pivot = np.argmax(np.abs(vectors[:, m]))
        vectors[:, m] *= np.sign(vectors[pivot, m])
    records = [
        StateRecord(x, float(values[m]), None, circuit, trace,
                    coefficients=vectors[:, m].copy(), references=list(refs))
        for m in range(len(refs))
    ]
    states = [s.statevector() for s in records]
    return EigensolverResult(
        "mcvqe", spec, records, _pairwise_overlaps(states),
        subspace_matrix=h_tilde, subspace_matrix_superposition=via_superposition,
        subspace_vectors=vectors, traces=[trace],
    )


@dataclass
class DeflationConfig:
    betas: Sequence[float] | float | None = None
    overlap_mode: str = "compose"
    init: str = "warm"
    warm_jitter: float = 0.1

    def __post_init__(self):
        if self.init not in ("warm", "random"):
            raise EigensolverError(f"unknown VQD initialization {self.init!r}")
        if self.overlap_mode not in ("compose", "direct"):
            raise EigensolverError(f"unknown overlap mode {self.overlap_mode!r}")

    def beta_list(self, h: Observable, k: int) -> list[float]:
        if self.betas is None:
            out = [default_beta(h)] * k
        elif np.isscalar(self.betas):
            out = [float(self.betas)] * k
        else:
            out = [float(b) for b in self.betas]
            if len(out) < k - 1:
                raise EigensolverError(f"{len(out)} betas for {k} states")
        if any(b <= 0 for b in out):
            raise EigensolverError(f"betas must be positive, got {out}")
        return out


def vqd(
    h: Observable,
    spec: AnsatzSpec,
    k: int,
    deflation: DeflationConfig | None = None,
    optimizer: OptimizerConfig | None = None,
    references: Sequence[int] | int = 0,
    initial_params=None,
    evaluator: Evaluator | None = None,
    restarts: int = 0,
) -> EigensolverResult:
    """Sequential deflation: state ``j`` minimizes ``E + sum_{i<j} beta_i |<psi_i|psi>|^2``.

    ``initial_params`` is one vector for the first level, or one vector per
    level (a ``k x P`` array) to warm-start every level, as in a sweep.
    """
    _check_h(h, spec)
    if k < 1:
        raise EigensolverError("k must be >= 1")
    refs = [int(references)] * k if np.isscalar(references) else [int(r) for r in references]
    if len(refs) != k:
        raise EigensolverError(f"{len(refs)} references for {k} states")
    deflation = deflation or DeflationConfig()
    betas = deflation.beta_list(h, k)
    optimizer = optimizer or OptimizerConfig()
    evaluator = evaluator or Evaluator()
    if deflation.overlap_mode == "direct" and not evaluator.exact:
        raise EigensolverError("direct overlaps are only available in exact mode")

    def overlap(c1, r1, c2, r2):
        if deflation.overlap_mode == "direct":
            return overlap_squared(c1, c2, r1, r2, method="direct")
        return evaluator.overlap(c1, r1, c2, r2)
    rng = np.random.default_rng(optimizer.seed)

    per_level = initial_params is not None and np.ndim(initial_params) == 2
    if per_level and len(initial_params) != k:
        raise EigensolverError(f"{len(initial_params)} initial vectors for {k} states")
    records: list[StateRecord] = []
    traces = []
    for j in range(k):
        if per_level:
            x0 = _initial(spec, initial_params[j], rng)
        elif j == 0:
            x0 = _initial(spec, initial_params, rng)
        elif deflation.init == "warm":
            x0 = records[-1].params + rng.normal(0.0, deflation.warm_jitter, spec.parameter_count)
        else:
            x0 = spec.random_parameters(rng)
        previous = [(r.circuit, r.reference) for r in records]
        ref_j = refs[j]
        level_betas = betas[:j]

        def cost(x, previous=previous, ref_j=ref_j, level_betas=level_betas):
            c = spec.build(x)
            value = evaluator.energy(h, run(c, ref_j))
            for b, (c_i, r_i) in zip(level_betas, previous):
                value += b * overlap(c_i, r_i, c, ref_j)
            return value

        x, trace = _optimize(cost, spec, x0, optimizer, restarts, rng)
        circuit = spec.build(x)
        energy = evaluator.energy(h, run(circuit, ref_j))
        records.append(StateRecord(x, energy, ref_j, circuit, trace, betas=list(level_betas)))
        traces.append(trace)
        logger.info("vqd level %d: energy %.10f (%s)", j, energy, trace.status)

    states = [s.statevector() for s in records]
    overlaps = _pairwise_overlaps(states)
    collapsed = [(i, j) for i, j in combinations(range(k), 2) if overlaps[i, j] > COLLAPSE_OVERLAP]
    if collapsed:
        logger.warning("vqd deflation collapse between states %s", collapsed)
    order = sorted(range(k), key=lambda i: records[i].energy)
    if order != list(range(k)):
        records = [records[i] for i in order]
        overlaps = overlaps[np.ix_(order, order)]
        collapsed = [tuple(sorted((order.index(i), order.index(j)))) for i, j in collapsed]
    return EigensolverResult("vqd", spec, records, overlaps, collapsed, traces=traces)
