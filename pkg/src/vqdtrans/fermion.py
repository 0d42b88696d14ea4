"""Fermionic operators, the Jordan-Wigner map, and spin observables.

Spin orbitals are interleaved: qubit ``2i`` is spatial orbital ``i`` with
spin up, qubit ``2i + 1`` the same orbital with spin down.  The map is
``a_p = Z_0 ... Z_{p-1} (X_p + i Y_p) / 2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .pauli import Observable, PauliString, observable_scale_add, pauli_mul

HERMITICITY_TOL = 1e-10

CREATE = "+"
ANNIHILATE = "-"


class FermionError(ValueError):
    pass


@dataclass(frozen=True)
class FermionTerm:
    """``coefficient * f_1 f_2 ... f_k`` with each factor ``(mode, "+" | "-")``."""

    factors: tuple[tuple[int, str], ...]
    coefficient: float = 1.0

    @classmethod
    def parse(cls, text: str, coefficient: float = 1.0) -> "FermionTerm":
        """Parse ``"1^ 0"`` style text: ``^`` marks a creation operator."""
        factors = []
        for tok in text.split():
            if tok.endswith("^"):
                factors.append((int(tok[:-1]), CREATE))
            else:
                factors.append((int(tok), ANNIHILATE))
        return cls(tuple(factors), coefficient)

    def adjoint(self) -> "FermionTerm":
        flipped = tuple(
            (m, ANNIHILATE if k == CREATE else CREATE) for m, k in reversed(self.factors)
        )
        return FermionTerm(flipped, self.coefficient)


@dataclass(frozen=True)
class FermionOperator:
    terms: tuple[FermionTerm, ...]
    n_modes: int

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[float, str]], n_modes: int) -> "FermionOperator":
        return cls(tuple(FermionTerm.parse(t, c) for c, t in terms), n_modes)

    def __add__(self, other: "FermionOperator") -> "FermionOperator":
        if other.n_modes != self.n_modes:
            raise FermionError("mode count mismatch")
        return FermionOperator(self.terms + other.terms, self.n_modes)

    def with_adjoint(self) -> "FermionOperator":
        """``f + f^dagger``, the usual way to symmetrize hopping-type terms."""
        return FermionOperator(self.terms + tuple(t.adjoint() for t in self.terms), self.n_modes)


def _ladder(mode: int, kind: str, n: int) -> dict[PauliString, complex]:
    z = "Z" * mode
    pad = "I" * (n - mode - 1)
    sign = 1j if kind == ANNIHILATE else -1j
    return {PauliString(z + "X" + pad): 0.5, PauliString(z + "Y" + pad): 0.5 * sign}


def _multiply(a: dict[PauliString, complex], b: dict[PauliString, complex]):
    out: dict[PauliString, complex] = {}
    for pa, ca in a.items():
        for pb, cb in b.items():
            ph, p = pauli_mul(pa, pb)
            out[p] = out.get(p, 0) + ph * ca * cb
    return out


def jordan_wigner(f: FermionOperator, tol: float = HERMITICITY_TOL) -> Observable:
    n = f.n_modes
    acc: dict[PauliString, complex] = {}
    for term in f.terms:
        prod: dict[PauliString, complex] = {PauliString.identity(n): term.coefficient}
        for mode, kind in term.factors:
            if not 0 <= mode < n:
                raise FermionError(f"mode {mode} out of range for {n} modes")
            if kind not in (CREATE, ANNIHILATE):
                raise FermionError(f"unknown ladder kind {kind!r}")
            prod = _multiply(prod, _ladder(mode, kind, n))
        for p, c in prod.items():
            acc[p] = acc.get(p, 0) + c
    residual = {p.ops: c.imag for p, c in acc.items() if abs(complex(c).imag) > tol}
    if residual:
        raise FermionError(f"operator is not Hermitian; imaginary Pauli coefficients {residual}")
    return Observable.from_terms(((complex(c).real, p) for p, c in acc.items()), n=n)


def number_operator(n_modes: int) -> Observable:
    return jordan_wigner(FermionOperator.from_terms([(1.0, f"{p}^ {p}") for p in range(n_modes)], n_modes))


def build_sz(n_spatial: int) -> Observable:
    n = 2 * n_spatial
    terms = []
    for i in range(n_spatial):
        terms.append((-0.25, PauliString.single(n, 2 * i, "Z")))
        terms.append((0.25, PauliString.single(n, 2 * i + 1, "Z")))
    return Observable.from_terms(terms, n=n)


def build_sz_squared(n_spatial: int) -> Observable:
    sz = build_sz(n_spatial)
    return sz @ sz


def build_s_squared(n_spatial: int) -> Observable:
    """``S^2 = S_- S_+ + Sz (Sz + 1)`` with ``S_+ = sum_i a^dagger_{i up} a_{i down}``."""
    n = 2 * n_spatial
    lowering_raising = []
    for i in range(n_spatial):
        for j in range(n_spatial):
            lowering_raising.append((1.0, f"{2 * i + 1}^ {2 * i} {2 * j}^ {2 * j + 1}"))
    s_minus_s_plus = jordan_wigner(FermionOperator.from_terms(lowering_raising, n))
    sz = build_sz(n_spatial)
    return s_minus_s_plus + (sz @ sz) + sz


def penalized(h: Observable, penalty: Observable, alpha: float) -> Observable:
    """``H + alpha * penalty``; ``alpha`` must be given explicitly by the caller."""
    return observable_scale_add(alpha, penalty, h)
