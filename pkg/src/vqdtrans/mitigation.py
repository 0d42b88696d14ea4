"""Readout-error model and confusion-matrix mitigation."""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import nnls

from .statevector import SeedLike, make_rng

COLUMN_TOL = 1e-9
MAX_CONDITION = 1e6


class MitigationError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    """Column-stochastic readout map: ``matrix[y, x] = P(measure y | prepared x)``.

    ``n_cal`` is the per-column calibration shot count, or None for an exact
    channel.
    """

    matrix: np.ndarray
    n: int
    n_cal: int | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", m)
        dim = 2**self.n
        if m.shape != (dim, dim):
            raise MitigationError(f"expected a {dim}x{dim} matrix, got {m.shape}")
        if np.any(m < -COLUMN_TOL) or np.any(m > 1 + COLUMN_TOL):
            raise MitigationError("confusion-matrix entries must lie in [0, 1]")
        bad = np.abs(m.sum(axis=0) - 1) > COLUMN_TOL
        if np.any(bad):
            raise MitigationError(f"columns {np.flatnonzero(bad).tolist()} do not sum to 1")

    @classmethod
    def identity(cls, n: int) -> "ConfusionMatrix":
        return cls(np.eye(2**n), n)

    @classmethod
    def from_flip_probabilities(cls, probs: Sequence[float], drift: float = 0.0) -> "ConfusionMatrix":
        """Exact product channel; qubit 0 is the leftmost Kronecker factor.

        ``drift`` rescales every flip probability by ``1 + drift``.
        """
        blocks = []
        for p in probs:
            p = float(p) * (1 + drift)
            if not 0 <= p <= 1:
                raise MitigationError(f"flip probability {p} outside [0, 1]")
            blocks.append(np.array([[1 - p, p], [p, 1 - p]]))
        return cls(reduce(np.kron, blocks), len(blocks))

    def condition_number(self) -> float:
        return float(np.linalg.cond(self.matrix))

    def apply(self, probabilities: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(probabilities, dtype=float)

    def save(self, path: str | Path) -> None:
        header = f"n={self.n} n_cal={self.n_cal if self.n_cal is not None else 'exact'}"
        np.savetxt(path, self.matrix, header=header, fmt="%.17g")

    @classmethod
    def load(cls, path: str | Path) -> "ConfusionMatrix":
        with open(path) as fh:
            first = fh.readline()
        meta = dict(tok.split("=") for tok in first.lstrip("#").split())
        n_cal = None if meta.get("n_cal", "exact") == "exact" else int(meta["n_cal"])
        m = np.atleast_2d(np.loadtxt(path))
        return cls(m, int(meta["n"]), n_cal)


def calibrate_confusion(
    channel: ConfusionMatrix | Sequence[float],
    n_cal: int,
    seed: SeedLike = None,
) -> ConfusionMatrix:
    """Prepare each basis state, read it out ``n_cal`` times through ``channel``, tally."""
    if n_cal < 1:
        raise MitigationError(f"n_cal must be >= 1, got {n_cal}")
    if not isinstance(channel, ConfusionMatrix):
        channel = ConfusionMatrix.from_flip_probabilities(channel)
    rng = make_rng(seed)
    dim = 2**channel.n
    m = np.zeros((dim, dim))
    for prepared in range(dim):
        col = channel.matrix[:, prepared]
        m[:, prepared] = rng.multinomial(n_cal, col / col.sum()) / n_cal
    return ConfusionMatrix(m, channel.n, n_cal)


@dataclass
class QuasiDistribution:
    probabilities: np.ndarray
    has_negative: bool
    condition_number: float

    def expectation(self, signs: np.ndarray) -> float:
        return float(self.probabilities @ signs)


def mitigate(
    histogram: Sequence[float],
    cm: ConfusionMatrix,
    method: str = "inverse",
    max_condition: float = MAX_CONDITION,
) -> QuasiDistribution:
    """Undo readout error on a histogram of counts (or frequencies).

    ``"inverse"`` applies ``A^-1`` to the normalized histogram and returns
    negative entries untouched (flagged).  ``"lstsq"`` solves the
    non-negative least-squares problem instead and renormalizes.
    """
    h = np.asarray(histogram, dtype=float)
    if h.shape != (2**cm.n,):
        raise MitigationError(f"histogram has {h.shape} entries, expected {2**cm.n}")
    total = h.sum()
    if total <= 0:
        raise MitigationError("empty histogram")
    h = h / total
    cond = cm.condition_number()
    if not np.isfinite(cond) or cond > max_condition:
        raise MitigationError(
            f"confusion matrix condition number {cond:.3g} exceeds {max_condition:.3g}"
        )
    if method == "inverse":
        q = np.linalg.solve(cm.matrix, h)
    elif method == "lstsq":
        q, _ = nnls(cm.matrix, h)
        q = q / q.sum()
    else:
        raise MitigationError(f"unknown mitigation method {method!r}")
    return QuasiDistribution(q, bool(np.any(q < 0)), cond)
