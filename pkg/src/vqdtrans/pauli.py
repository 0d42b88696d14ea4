"""Pauli strings and real-weighted sums of them.

Text convention: a Pauli string is written over ``{I, X, Y, Z}`` and the
character at position 0 (leftmost) acts on qubit 0.  Qubit 0 is also the
most significant bit of a computational-basis index, so ``"XI"`` flips
basis state 0 (``|00>``) into basis state 2 (``|10>``).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

PAULI_CHARS = "IXYZ"
DEFAULT_DROP_TOL = 1e-12

# single-qubit products: (a, b) -> (power of i, a*b)
_MUL_TABLE = {
    ("I", "I"): (0, "I"), ("I", "X"): (0, "X"), ("I", "Y"): (0, "Y"), ("I", "Z"): (0, "Z"),
    ("X", "I"): (0, "X"), ("X", "X"): (0, "I"), ("X", "Y"): (1, "Z"), ("X", "Z"): (3, "Y"),
    ("Y", "I"): (0, "Y"), ("Y", "X"): (3, "Z"), ("Y", "Y"): (0, "I"), ("Y", "Z"): (1, "X"),
    ("Z", "I"): (0, "Z"), ("Z", "X"): (1, "Y"), ("Z", "Y"): (3, "X"), ("Z", "Z"): (0, "I"),
}
_I_POWERS = (1 + 0j, 1j, -1 + 0j, -1j)


class PauliError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class PauliString:
    ops: str

    def __post_init__(self):
        if not self.ops:
            raise PauliError("a Pauli string needs at least one qubit")
        for ch in self.ops:
            if ch not in PAULI_CHARS:
                raise PauliError(f"invalid Pauli character {ch!r}")

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls("I" * n)

    @classmethod
    def single(cls, n: int, qubit: int, op: str) -> "PauliString":
        chars = ["I"] * n
        chars[qubit] = op
        return cls("".join(chars))

    @property
    def n(self) -> int:
        return len(self.ops)

    @property
    def is_identity(self) -> bool:
        return set(self.ops) == {"I"}

    def masks(self) -> tuple[int, int, int]:
        """Return ``(x_mask, z_mask, n_y)`` in basis-index bit order.

        ``x_mask`` has a bit set wherever the string flips (X or Y),
        ``z_mask`` wherever it applies a sign (Z or Y).
        """
        x_mask = z_mask = 0
        n_y = 0
        for q, ch in enumerate(self.ops):
            bit = 1 << (self.n - 1 - q)
            if ch in "XY":
                x_mask |= bit
            if ch in "ZY":
                z_mask |= bit
            if ch == "Y":
                n_y += 1
        return x_mask, z_mask, n_y

    def __str__(self) -> str:
        return self.ops


def _as_pauli(p: PauliString | str) -> PauliString:
    return p if isinstance(p, PauliString) else PauliString(p)


def pauli_mul(p: PauliString | str, q: PauliString | str) -> tuple[complex, PauliString]:
    """Multiply two Pauli strings, returning ``(phase, product)`` with phase in {±1, ±i}."""
    p, q = _as_pauli(p), _as_pauli(q)
    if p.n != q.n:
        raise PauliError(f"qubit count mismatch: {p.n} vs {q.n}")
    power = 0
    out = []
    for a, b in zip(p.ops, q.ops):
        k, c = _MUL_TABLE[a, b]
        power += k
        out.append(c)
    phase = _I_POWERS[power % 4]
    return phase, PauliString("".join(out))


@dataclass(frozen=True)
class Observable:
    """Real-weighted sum of Pauli strings on ``n`` qubits.

    Build with :meth:`from_terms`, which normalizes; the raw constructor
    trusts its input.
    """

    n: int
    terms: tuple[tuple[float, PauliString], ...] = ()

    @classmethod
    def from_terms(
        cls,
        terms: Iterable[tuple[float, PauliString | str]],
        n: int | None = None,
        drop_tol: float = DEFAULT_DROP_TOL,
    ) -> "Observable":
        raw = [(float(c), _as_pauli(s)) for c, s in terms]
        if n is None:
            if not raw:
                raise PauliError("cannot infer qubit count of an empty observable")
            n = raw[0][1].n
        return observable_normalize(cls(n, tuple(raw)), drop_tol)

    @classmethod
    def from_dict(cls, mapping: Mapping[str, float], n: int | None = None) -> "Observable":
        return cls.from_terms(((c, s) for s, c in mapping.items()), n=n)

    @classmethod
    def zero(cls, n: int) -> "Observable":
        return cls(n, ())

    @classmethod
    def identity(cls, n: int, coefficient: float = 1.0) -> "Observable":
        return cls.from_terms([(coefficient, PauliString.identity(n))], n=n)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms], dtype=float)

    @property
    def strings(self) -> list[PauliString]:
        return [s for _, s in self.terms]

    def one_norm(self) -> float:
        return float(sum(abs(c) for c, _ in self.terms))

    def to_dict(self) -> dict[str, float]:
        return {s.ops: c for c, s in self.terms}

    def __add__(self, other: "Observable") -> "Observable":
        return observable_scale_add(1.0, self, other)

    def __sub__(self, other: "Observable") -> "Observable":
        return observable_scale_add(-1.0, other, self)

    def __mul__(self, a: float) -> "Observable":
        return observable_scale_add(float(a), self, Observable.zero(self.n))

    __rmul__ = __mul__

    def __matmul__(self, other: "Observable") -> "Observable":
        """Operator product; raises if the result is not Hermitian."""
        return observable_product(self, other)


def observable_normalize(o: Observable, drop_tol: float = DEFAULT_DROP_TOL) -> Observable:
    """Merge duplicate strings, drop tiny coefficients, sort lexicographically."""
    acc: dict[PauliString, float] = {}
    for c, s in o.terms:
        if s.n != o.n:
            raise PauliError(f"term {s.ops!r} has {s.n} qubits, observable has {o.n}")
        acc[s] = acc.get(s, 0.0) + c
    terms = tuple((acc[s], s) for s in sorted(acc) if abs(acc[s]) >= drop_tol)
    return Observable(o.n, terms)


def observable_scale_add(a: float, o1: Observable, o2: Observable) -> Observable:
    """Return the normalized form of ``a * o1 + o2``."""
    if o1.n != o2.n:
        raise PauliError(f"qubit count mismatch: {o1.n} vs {o2.n}")
    terms = [(a * c, s) for c, s in o1.terms] + list(o2.terms)
    return observable_normalize(Observable(o1.n, tuple(terms)))


def observable_product(o1: Observable, o2: Observable, herm_tol: float = 1e-10) -> Observable:
    if o1.n != o2.n:
        raise PauliError(f"qubit count mismatch: {o1.n} vs {o2.n}")
    acc: dict[PauliString, complex] = {}
    for c1, s1 in o1.terms:
        for c2, s2 in o2.terms:
            ph, s = pauli_mul(s1, s2)
            acc[s] = acc.get(s, 0.0) + ph * c1 * c2
    bad = {s.ops: v.imag for s, v in acc.items() if abs(complex(v).imag) > herm_tol}
    if bad:
        raise PauliError(f"product is not Hermitian; imaginary coefficients {bad}")
    return Observable.from_terms(((complex(v).real, s) for s, v in acc.items()), n=o1.n)
