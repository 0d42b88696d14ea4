"""Exact or shot-sampled evaluation of energies and overlaps.

One :class:`Evaluator` owns one random stream, so a run seeded once is
reproducible call for call.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mitigation import ConfusionMatrix, mitigate
from .pauli import Observable, PauliString
from .statevector import (
    Circuit,
    Reference,
    StateVector,
    basis_prep,
    expectation,
    measurement_basis_state,
    overlap_squared,
    parity_signs,
    pauli_expectation,
    sample_counts,
    sample_pauli_expectation,
    sample_return_probability,
)

MODES = ("exact", "sampled")


@dataclass
class Evaluator:
    mode: str = "exact"
    shots: int | None = None
    noise: ConfusionMatrix | None = None
    mitigation: ConfusionMatrix | None = None
    seed: int | None = None
    overlap_method: str = "compose"
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown evaluation mode {self.mode!r}")
        if self.mode == "sampled" and (self.shots is None or self.shots < 1):
            raise ValueError("sampled mode needs a positive shot count")
        if self.overlap_method not in ("compose", "direct"):
            raise ValueError(f"unknown overlap method {self.overlap_method!r}")
        self.rng = np.random.default_rng(self.seed)

    @property
    def exact(self) -> bool:
        return self.mode == "exact"

    def pauli_mean(self, p: PauliString, state: StateVector) -> tuple[float, float]:
        """``(mean, variance)`` of one Pauli readout."""
        if p.is_identity:
            return 1.0, 0.0
        if self.exact:
            m = pauli_expectation(p, state)
            return m, max(0.0, 1.0 - m * m)
        if self.mitigation is None:
            return sample_pauli_expectation(p, state, self.shots, self.noise, self.rng)
        rotated = measurement_basis_state(p, state)
        counts = sample_counts(rotated.probabilities(), self.shots, self.noise, self.rng)
        mean = mitigate(counts, self.mitigation).expectation(parity_signs(p))
        return mean, max(0.0, 1.0 - mean * mean)

    def energy_terms(self, h: Observable, state: StateVector) -> tuple[float, list[tuple[float, float]]]:
        """Energy plus ``(coefficient, outcome variance)`` for every term."""
        total = 0.0
        terms = []
        for c, p in h.terms:
            mean, var = self.pauli_mean(p, state)
            total += c * mean
            terms.append((c, var))
        return total, terms

    def energy(self, h: Observable, state: StateVector) -> float:
        if self.exact:
            return expectation(h, state)
        return self.energy_terms(h, state)[0]

    def overlap(self, c1: Circuit, ref1: Reference, c2: Circuit, ref2: Reference) -> float:
        """``|<psi1|psi2>|^2``, sampled as the return probability of ``c1^dagger c2``."""
        return self.overlap_with_error(c1, ref1, c2, ref2)[0]

    def overlap_with_error(
        self, c1: Circuit, ref1: Reference, c2: Circuit, ref2: Reference
    ) -> tuple[float, float]:
        """Overlap squared and its binomial standard error (0 in exact mode)."""
        if self.exact:
            method = "direct" if self.overlap_method == "direct" else "auto"
            return overlap_squared(c1, c2, ref1, ref2, method=method), 0.0
        if isinstance(ref1, StateVector) or isinstance(ref2, StateVector):
            raise ValueError("sampled overlaps need basis-state references")
        full = basis_prep(c1.n, ref2).then(c2).then(c1.inverse()).then(basis_prep(c1.n, ref1))
        return sample_return_probability(full, self.shots, self.noise, self.rng)
