"""Plain-text problem files: Hamiltonian, dipoles and penalty settings.

Grammar::

    file     := (header | line)*
    header   := "[" name "]"
    line     := coefficient WS pauli | number | comment | blank
    comment  := "#" anything

Lines before the first header belong to ``[hamiltonian]``.  Operator
sections hold ``coefficient PAULI`` lines, with qubit 0 the leftmost
character; scalar sections hold exactly one number.  An operator section may
be empty, which means the zero operator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .fermion import build_s_squared, build_sz_squared, penalized
from .pauli import PAULI_CHARS, Observable, PauliString

OPERATOR_SECTIONS = ("hamiltonian", "dipole_x", "dipole_y", "dipole_z", "sz_squared", "s_squared")
SCALAR_SECTIONS = ("penalty_sz2_alpha", "penalty_s2_beta")
AXES = ("x", "y", "z")


class ProblemFileError(ValueError):
    pass


@dataclass
class ProblemFile:
    hamiltonian: Observable
    dipoles: dict[str, Observable] = field(default_factory=dict)
    penalty_sz2_alpha: float | None = None
    penalty_s2_beta: float | None = None
    sz_squared: Observable | None = None
    s_squared: Observable | None = None

    def __post_init__(self):
        n = self.hamiltonian.n
        for name, op in self._operators().items():
            if op.n != n:
                raise ProblemFileError(f"section [{name}] has {op.n} qubits, hamiltonian has {n}")
        for axis in self.dipoles:
            if axis not in AXES:
                raise ProblemFileError(f"unknown dipole axis {axis!r}")

    @property
    def n(self) -> int:
        return self.hamiltonian.n

    def _operators(self) -> dict[str, Observable]:
        ops = {"hamiltonian": self.hamiltonian}
        for axis in AXES:
            if axis in self.dipoles:
                ops[f"dipole_{axis}"] = self.dipoles[axis]
        if self.sz_squared is not None:
            ops["sz_squared"] = self.sz_squared
        if self.s_squared is not None:
            ops["s_squared"] = self.s_squared
        return ops

    def _spin_operator(self, explicit: Observable | None, builder, name: str) -> Observable:
        if explicit is not None:
            return explicit
        if self.n % 2:
            raise ProblemFileError(
                f"{name} penalty on an odd qubit count needs an explicit [{name}] section"
            )
        return builder(self.n // 2)

    def sz_squared_operator(self) -> Observable:
        return self._spin_operator(self.sz_squared, build_sz_squared, "sz_squared")

    def s_squared_operator(self) -> Observable:
        return self._spin_operator(self.s_squared, build_s_squared, "s_squared")

    def effective_hamiltonian(self) -> Observable:
        """``H + alpha Sz^2 + beta S^2`` for whichever penalties are set."""
        h = self.hamiltonian
        if self.penalty_sz2_alpha:
            h = penalized(h, self.sz_squared_operator(), self.penalty_sz2_alpha)
        if self.penalty_s2_beta:
            h = penalized(h, self.s_squared_operator(), self.penalty_s2_beta)
        return h

    def dipole_list(self) -> list[Observable]:
        return [self.dipoles.get(axis, Observable.zero(self.n)) for axis in AXES]


def _parse_float(text: str, lineno: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ProblemFileError(f"non-numeric coefficient {text!r} at line {lineno}") from None
    if not math.isfinite(value):
        raise ProblemFileError(f"non-finite coefficient {text!r} at line {lineno}")
    return value


def parse_problem_text(text: str) -> ProblemFile:
    sections: dict[str, list[tuple[int, str]]] = {}
    current = "hamiltonian"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ProblemFileError(f"malformed section header {line!r} at line {lineno}")
            name = line[1:-1].strip()
            if name not in OPERATOR_SECTIONS + SCALAR_SECTIONS:
                raise ProblemFileError(f"unknown section [{name}] at line {lineno}")
            if name in sections:
                raise ProblemFileError(f"duplicate section [{name}] at line {lineno}")
            sections[name] = []
            current = name
            continue
        sections.setdefault(current, []).append((lineno, line))

    if "hamiltonian" not in sections or not sections["hamiltonian"]:
        raise ProblemFileError("missing or empty [hamiltonian] section")

    ops: dict[str, list[tuple[float, PauliString]]] = {}
    scalars: dict[str, float] = {}
    n = None
    for name, lines in sections.items():
        if name in SCALAR_SECTIONS:
            if len(lines) != 1 or len(lines[0][1].split()) != 1:
                where = lines[0][0] if lines else "end of file"
                raise ProblemFileError(f"section [{name}] must hold exactly one number (line {where})")
            scalars[name] = _parse_float(lines[0][1], lines[0][0])
            continue
        terms = []
        for lineno, line in lines:
            parts = line.split()
            if len(parts) != 2:
                raise ProblemFileError(f"expected 'coefficient PAULI' at line {lineno}, got {line!r}")
            coeff = _parse_float(parts[0], lineno)
            ops_text = parts[1]
            for ch in ops_text:
                if ch not in PAULI_CHARS:
                    raise ProblemFileError(f"invalid Pauli character {ch!r} at line {lineno}")
            if n is None:
                n = len(ops_text)
            elif len(ops_text) != n:
                raise ProblemFileError(
                    f"Pauli string of length {len(ops_text)} at line {lineno}, expected {n}"
                )
            terms.append((coeff, PauliString(ops_text)))
        ops[name] = terms

    def observable(name):
        if name not in ops:
            return None
        return Observable.from_terms(ops[name], n=n)

    dipoles = {axis: observable(f"dipole_{axis}") for axis in AXES if f"dipole_{axis}" in ops}
    return ProblemFile(
        hamiltonian=observable("hamiltonian"),
        dipoles=dipoles,
        penalty_sz2_alpha=scalars.get("penalty_sz2_alpha"),
        penalty_s2_beta=scalars.get("penalty_s2_beta"),
        sz_squared=observable("sz_squared"),
        s_squared=observable("s_squared"),
    )


def parse_problem_file(path: str | Path) -> ProblemFile:
    return parse_problem_text(Path(path).read_text())


def _format_observable(o: Observable) -> list[str]:
    return [f"{float(c)!r} {p.ops}" for c, p in o.terms]


def format_problem(problem: ProblemFile, comment: str | None = None) -> str:
    """Canonical text form; ``parse_problem_text(format_problem(p))`` reproduces ``p``."""
    lines = []
    if comment:
        lines += [f"# {c}" if c else "#" for c in comment.splitlines()]
    for name, op in problem._operators().items():
        lines.append(f"[{name}]")
        lines += _format_observable(op)
        lines.append("")
    for name in SCALAR_SECTIONS:
        value = getattr(problem, name)
        if value is not None:
            lines += [f"[{name}]", f"{float(value)!r}", ""]
    return "\n".join(lines)


def write_problem_file(problem: ProblemFile, path: str | Path, comment: str | None = None) -> None:
    Path(path).write_text(format_problem(problem, comment))
