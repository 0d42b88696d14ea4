"""Generators for the bundled example problems.

The bundled files under ``data/`` are produced by :func:`write_bundled` and a
test checks they still match, so the numbers in them never drift from the
code that defines them.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from .fermion import FermionOperator, build_s_squared, build_sz_squared, jordan_wigner
from .oracle import matrix_to_observable, observable_to_matrix
from .pauli import Observable
from .problemfile import ProblemFile, write_problem_file

DATA_DIR = Path(__file__).parent / "data"

# two-site model: spatial orbital 1 on modes (0 up, 1 down), orbital 2 on (2 up, 3 down)
DIMER_HOPPING = 0.3
DIMER_INTERACTION = 0.8
DIMER_ONSITE = (-0.5, -0.3)
DIMER_SEPARATION = 1.5
SZ2_ALPHA = 4.0

# N = 2, Sz = 0 determinants of the dimer: |1100>, |1001>, |0110>, |0011>
SECTOR_INDICES = (0b1100, 0b1001, 0b0110, 0b0011)
LIH_STYLE_BOND = 1.6
LIH_STYLE_S2_BETA = 0.5
SWEEP_ENDPOINTS = (1.2, 2.4)
SWEEP_POINTS = 5


def one_qubit_z() -> ProblemFile:
    return ProblemFile(Observable.from_dict({"Z": 1.0}))


def two_qubit_z_sum() -> ProblemFile:
    """Diagonal Hamiltonian with spectrum (-0.6, -0.4, 0.2, 0.8)."""
    return ProblemFile(Observable.from_dict({"ZI": 0.5, "IZ": 0.2, "ZZ": 0.1}))


def dimer_fermion_operator(
    hopping: float = DIMER_HOPPING,
    interaction: float = DIMER_INTERACTION,
    onsite: Sequence[float] = DIMER_ONSITE,
) -> FermionOperator:
    terms = []
    for s in (0, 1):
        terms += [(-hopping, f"{s}^ {2 + s}"), (-hopping, f"{2 + s}^ {s}")]
    terms += [(interaction, "0^ 0 1^ 1"), (interaction, "2^ 2 3^ 3")]
    for mode, eps in zip(range(4), (onsite[0], onsite[0], onsite[1], onsite[1])):
        terms.append((eps, f"{mode}^ {mode}"))
    return FermionOperator.from_terms(terms, 4)


def dimer_dipole(separation: float = DIMER_SEPARATION) -> Observable:
    """``(d / 2) (n_2 - n_1)`` with ``n_i`` the occupation of spatial orbital ``i``."""
    half = separation / 2
    terms = [(-half, f"{m}^ {m}") for m in (0, 1)] + [(half, f"{m}^ {m}") for m in (2, 3)]
    return jordan_wigner(FermionOperator.from_terms(terms, 4))


def double_occupancy_difference(scale: float) -> Observable:
    """``scale (n_1up n_1down - n_2up n_2down)``."""
    return jordan_wigner(
        FermionOperator.from_terms([(scale, "0^ 0 1^ 1"), (-scale, "2^ 2 3^ 3")], 4)
    )


def hubbard_dimer(
    hopping: float = DIMER_HOPPING,
    interaction: float = DIMER_INTERACTION,
    onsite: Sequence[float] = DIMER_ONSITE,
    separation: float = DIMER_SEPARATION,
    alpha: float = SZ2_ALPHA,
) -> ProblemFile:
    """Two-site interacting-fermion problem on 4 qubits with an ``alpha Sz^2`` penalty."""
    h = jordan_wigner(dimer_fermion_operator(hopping, interaction, onsite))
    return ProblemFile(
        h,
        dipoles={"x": dimer_dipole(separation)},
        penalty_sz2_alpha=alpha,
    )


def project(o: Observable, indices: Sequence[int] = SECTOR_INDICES) -> Observable:
    """Restrict ``o`` to the span of the given basis states, relabelled ``0..len-1``."""
    m = observable_to_matrix(o)
    sub = m[np.ix_(indices, indices)]
    if np.abs(sub.imag).max() > 1e-12:
        raise ValueError("projected operator is not real")
    return matrix_to_observable(sub.real)


def lih_style_parameters(bond: float) -> dict:
    """Bond-length dependence of the dimer couplings (arbitrary but smooth)."""
    return {
        "hopping": 0.45 * np.exp(-(bond - 1.0)),
        "interaction": 0.8,
        "onsite": (-0.6, -0.6 + 0.15 * bond),
        "separation": bond,
    }


def lih_style(bond: float = LIH_STYLE_BOND, beta: float = LIH_STYLE_S2_BETA) -> ProblemFile:
    """Two-qubit Hamiltonian with dipoles: the dimer's two-electron, ``Sz = 0`` block.

    An ``[s_squared]`` section carries ``S^2`` restricted to the same block, so
    the ``beta S^2`` penalty lifts the triplet component above the singlets.
    """
    p = lih_style_parameters(bond)
    h = jordan_wigner(dimer_fermion_operator(p["hopping"], p["interaction"], p["onsite"]))
    return ProblemFile(
        project(h),
        dipoles={
            "x": project(dimer_dipole(p["separation"])),
            "y": Observable.zero(2),
            "z": project(double_occupancy_difference(0.3)),
        },
        penalty_s2_beta=beta,
        sz_squared=project(build_sz_squared(2)),
        s_squared=project(build_s_squared(2)),
    )


def interpolated(a: ProblemFile, b: ProblemFile, lam: float) -> ProblemFile:
    """``(1 - lam) a + lam b`` section by section; penalties are taken from ``a``."""

    def mix(x: Observable, y: Observable) -> Observable:
        return x * (1 - lam) + y * lam

    return ProblemFile(
        mix(a.hamiltonian, b.hamiltonian),
        dipoles={axis: mix(a.dipoles[axis], b.dipoles[axis]) for axis in a.dipoles},
        penalty_sz2_alpha=a.penalty_sz2_alpha,
        penalty_s2_beta=a.penalty_s2_beta,
        sz_squared=a.sz_squared,
        s_squared=a.s_squared,
    )


def sweep_set(points: int = SWEEP_POINTS) -> list[ProblemFile]:
    a, b = (lih_style(x) for x in SWEEP_ENDPOINTS)
    return [interpolated(a, b, lam) for lam in np.linspace(0.0, 1.0, points)]


def bundled() -> dict[str, tuple[ProblemFile, str]]:
    out = {
        "one_qubit_z.txt": (one_qubit_z(), "H = Z"),
        "two_qubit_z_sum.txt": (two_qubit_z_sum(), "diagonal two-qubit Hamiltonian"),
        "hubbard_dimer.txt": (
            hubbard_dimer(),
            f"two-site interacting fermions, JW on 4 qubits\n"
            f"t={DIMER_HOPPING} U={DIMER_INTERACTION} eps={DIMER_ONSITE} d={DIMER_SEPARATION}",
        ),
        "lih_style.txt": (
            lih_style(),
            f"two-electron Sz=0 block of the dimer at bond={LIH_STYLE_BOND}",
        ),
    }
    for i, problem in enumerate(sweep_set()):
        out[f"sweep_{i:02d}.txt"] = (problem, f"sweep point {i} of {SWEEP_POINTS}")
    return out


def write_bundled(directory: str | Path = DATA_DIR) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, (problem, comment) in bundled().items():
        path = directory / name
        write_problem_file(problem, path, comment)
        paths.append(path)
    return paths


def bundled_path(name: str) -> Path:
    return DATA_DIR / name
