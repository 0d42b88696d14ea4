"""Parameterized circuit builders.

``rsp``
    Real-valued symmetry-preserving ladder: ``depth`` layers, each applying a
    two-qubit particle-conserving real block to pairs (0,1), (1,2), ...,
    (n-2, n-1) in that order.  ``depth * (n - 1)`` parameters.

    The default block is the real exchange gate
    ``[[cos t, sin t], [sin t, -cos t]]`` on ``span{|01>, |10>}``.  A pure
    Givens rotation is also available (``block="givens"``) but under the
    Jordan-Wigner map nearest-neighbour Givens rotations are one-body orbital
    rotations, so that variant never leaves the set of Slater determinants.

``two_local``
    RY layer, then ``depth`` repetitions of (CZ chain, RY layer).
    ``n * (depth + 1)`` parameters, consumed layer by layer, qubit-ascending.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .statevector import Circuit, cz, exchange, givens, ry

FAMILIES = ("rsp", "two_local")
RSP_BLOCKS = ("exchange", "givens")


class AnsatzError(ValueError):
    pass


@dataclass(frozen=True)
class AnsatzSpec:
    family: str
    n: int
    depth: int
    block: str = "exchange"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise AnsatzError(f"unknown ansatz family {self.family!r}; choose from {FAMILIES}")
        if self.depth < 0:
            raise AnsatzError("depth must be >= 0")
        if self.n < 1 or (self.family == "rsp" and self.n < 2):
            raise AnsatzError(f"{self.family} needs more qubits than {self.n}")
        if self.block not in RSP_BLOCKS:
            raise AnsatzError(f"unknown RSP block {self.block!r}")

    @property
    def parameter_count(self) -> int:
        if self.family == "rsp":
            return self.depth * (self.n - 1)
        return self.n * (self.depth + 1)

    def build(self, params: Sequence[float]) -> Circuit:
        if self.family == "rsp":
            return build_rsp(self, params)
        return build_two_local(self, params)

    def random_parameters(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform draws from ``[0, 2 pi]``."""
        return rng.uniform(0.0, 2 * np.pi, self.parameter_count)


def _check(spec: AnsatzSpec, family: str, params: Sequence[float]) -> np.ndarray:
    if spec.family != family:
        raise AnsatzError(f"expected a {family} spec, got {spec.family}")
    values = np.asarray(params, dtype=float).ravel()
    if values.size != spec.parameter_count:
        raise AnsatzError(
            f"{family} with n={spec.n}, depth={spec.depth} takes "
            f"{spec.parameter_count} parameters, got {values.size}"
        )
    return values


def build_rsp(spec: AnsatzSpec, params: Sequence[float]) -> Circuit:
    values = _check(spec, "rsp", params)
    block = exchange if spec.block == "exchange" else givens
    gates = []
    k = 0
    for _ in range(spec.depth):
        for q in range(spec.n - 1):
            gates.append(block(q, q + 1, values[k], param=k))
            k += 1
    return Circuit(spec.n, tuple(gates))


def build_two_local(spec: AnsatzSpec, params: Sequence[float]) -> Circuit:
    values = _check(spec, "two_local", params)
    n = spec.n
    gates = [ry(q, values[q], param=q) for q in range(n)]
    for layer in range(1, spec.depth + 1):
        gates.extend(cz(q, q + 1) for q in range(n - 1))
        gates.extend(ry(q, values[layer * n + q], param=layer * n + q) for q in range(n))
    return Circuit(n, tuple(gates))
