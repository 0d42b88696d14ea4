"""Classical optimizers and parameter-shift gradients."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import line_search

from .statevector import Circuit

logger = logging.getLogger(__name__)

Cost = Callable[[np.ndarray], float]
Grad = Callable[[np.ndarray], np.ndarray]
ShiftRule = tuple[tuple[float, float], ...]

# d f / d t = sum_k c_k [f(t + s_k) - f(t - s_k)]
TWO_TERM: ShiftRule = ((math.pi / 2, 0.5),)
# generators with eigenvalues {-1, 0, 0, +1}: frequencies 1 and 2
FOUR_TERM: ShiftRule = ((math.pi / 2, (1 - math.sqrt(2)) / 2), (math.pi / 4, 1.0))

SHIFT_RULES: dict[str, ShiftRule] = {
    "RY": TWO_TERM,
    "RZ": TWO_TERM,
    "PAULI_ROT": TWO_TERM,
    "GIVENS": FOUR_TERM,
    "EXCHANGE": FOUR_TERM,
}


class OptimizationError(RuntimeError):
    def __init__(self, message: str, trace: "OptimizationTrace | None" = None):
        super().__init__(message)
        self.trace = trace


@dataclass
class OptimizerConfig:
    method: str = "bfgs"
    max_iters: int = 1000
    rel_energy_tol: float = 1e-8
    energy_floor: float = 1e-10
    secant_refine: bool = False
    spsa_a: float | None = None
    spsa_c: float = 0.1
    spsa_A: float | None = None
    spsa_alpha: float = 0.602
    spsa_gamma: float = 0.101
    spsa_average: int = 10
    seed: int | None = None

    def __post_init__(self):
        if self.method not in ("bfgs", "spsa"):
            raise ValueError(f"unknown optimizer {self.method!r}")
        if self.rel_energy_tol <= 0 or self.energy_floor <= 0:
            raise ValueError("tolerances must be positive")
        if not (0 < self.spsa_alpha <= 1 and 0 < self.spsa_gamma <= 1):
            raise ValueError("SPSA exponents must lie in (0, 1]")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class OptimizationTrace:
    params: list[list[float]] = field(default_factory=list)
    costs: list[float] = field(default_factory=list)
    grad_norms: list[float | None] = field(default_factory=list)
    status: str = "running"
    evaluations: int = 0

    def record(self, x: np.ndarray, f: float, gnorm: float | None = None) -> None:
        self.params.append([float(v) for v in x])
        self.costs.append(float(f))
        self.grad_norms.append(None if gnorm is None else float(gnorm))

    @property
    def iterations(self) -> int:
        return max(0, len(self.costs) - 1)

    def to_dict(self, with_params: bool = False) -> dict:
        d = {
            "status": self.status,
            "iterations": self.iterations,
            "evaluations": self.evaluations,
            "costs": self.costs,
            "grad_norms": self.grad_norms,
        }
        if with_params:
            d["params"] = self.params
        return d


def shift_rules(circuit: Circuit, n_params: int) -> list[ShiftRule]:
    """Per-parameter shift rules read off the gates that consume each parameter."""
    rules: list[ShiftRule | None] = [None] * n_params
    for g in circuit.gates:
        if g.param is None:
            continue
        if g.kind not in SHIFT_RULES:
            raise OptimizationError(f"no shift rule registered for gate {g.kind}")
        if rules[g.param] is not None:
            raise OptimizationError(f"parameter {g.param} feeds more than one gate")
        rules[g.param] = SHIFT_RULES[g.kind]
    missing = [k for k, r in enumerate(rules) if r is None]
    if missing:
        raise OptimizationError(f"parameters {missing} do not feed any gate")
    return rules  # type: ignore[return-value]


def parameter_shift_gradient(
    cost: Cost, params: Sequence[float], rules: Sequence[ShiftRule] | ShiftRule = TWO_TERM
) -> np.ndarray:
    """Exact gradient of an expectation-valued cost by parameter shifts.

    ``rules`` is one shift rule for every parameter, or a single rule shared
    by all of them.
    """
    x = np.asarray(params, dtype=float)
    if rules and isinstance(rules[0][0], (int, float)):
        rules = [rules] * x.size  # type: ignore[list-item]
    if len(rules) != x.size:
        raise OptimizationError(f"{len(rules)} shift rules for {x.size} parameters")
    grad = np.zeros_like(x)
    for k, rule in enumerate(rules):
        for shift, coeff in rule:
            xp = x.copy()
            xp[k] += shift
            xm = x.copy()
            xm[k] -= shift
            grad[k] += coeff * (cost(xp) - cost(xm))
    return grad


def _checked(cost: Cost, trace: OptimizationTrace) -> Cost:
    def wrapped(x):
        trace.evaluations += 1
        f = float(cost(x))
        if not math.isfinite(f):
            trace.status = "non_finite"
            raise OptimizationError(f"non-finite cost {f} at evaluation {trace.evaluations}", trace)
        return f

    return wrapped


def _cached_grad(grad: Grad) -> Grad:
    last: dict = {}

    def wrapped(x):
        key = np.asarray(x, dtype=float).tobytes()
        if last.get("key") != key:
            last["key"] = key
            last["value"] = np.asarray(grad(np.asarray(x, dtype=float)), dtype=float)
        return last["value"]

    return wrapped


def _relative_change(f_new: float, f_old: float, floor: float) -> float:
    return abs(f_new - f_old) / max(abs(f_old), floor)


def minimize_bfgs(
    cost: Cost, grad: Grad, initial_params: Sequence[float], config: OptimizerConfig | None = None
) -> tuple[np.ndarray, OptimizationTrace]:
    """Quasi-Newton descent with a Wolfe line search.

    Stops once the relative energy change between iterations drops below
    ``config.rel_energy_tol``.  The first step is along the unit-normalized
    negative gradient and the inverse-Hessian guess is rescaled after it, so
    multiplying the cost by a constant leaves the iterates unchanged.
    """
    config = config or OptimizerConfig()
    trace = OptimizationTrace()
    f_cost = _checked(cost, trace)
    g_fun = _cached_grad(grad)

    x = np.asarray(initial_params, dtype=float).copy()
    dim = x.size
    f = f_cost(x)
    g = g_fun(x)
    trace.record(x, f, np.linalg.norm(g))
    best_x, best_f = x.copy(), f
    h_inv = np.eye(dim)
    first = True

    for _ in range(config.max_iters):
        gnorm = np.linalg.norm(g)
        if gnorm == 0.0:
            trace.status = "converged"
            break
        p = -g / gnorm if first else -h_inv @ g
        if g @ p >= 0:
            h_inv = np.eye(dim)
            first = True
            p = -g / gnorm
        with warnings.catch_warnings():
            warnings.filterwarnings("ignore", message="The line search algorithm")
            alpha, _, _, f_new, _, _ = line_search(f_cost, g_fun, x, p, gfk=g, old_fval=f)
        if alpha is None:
            alpha, f_new = _backtrack(f_cost, x, p, f, g @ p)
            if alpha is None:
                trace.status = "stalled"
                break
        x_new = x + alpha * p
        if f_new is None:
            f_new = f_cost(x_new)
        g_new = g_fun(x_new)
        if config.secant_refine:
            alpha, x_new, f_new, g_new = _secant_refine(f_cost, g_fun, x, p, g @ p, alpha, x_new, f_new, g_new)
        s = alpha * p
        y = g_new - g
        sy = s @ y
        if first and sy > 0:
            h_inv = np.eye(dim) * (sy / (y @ y))
        if sy > 1e-16 * np.linalg.norm(s) * np.linalg.norm(y):
            rho = 1.0 / sy
            v = np.eye(dim) - rho * np.outer(s, y)
            h_inv = v @ h_inv @ v.T + rho * np.outer(s, s)
        first = False
        change = _relative_change(f_new, f, config.energy_floor)
        x, f, g = x_new, f_new, g_new
        trace.record(x, f, np.linalg.norm(g))
        if f < best_f:
            best_x, best_f = x.copy(), f
        if change < config.rel_energy_tol:
            trace.status = "converged"
            break
    else:
        trace.status = "max_iters"
    logger.debug("bfgs: %s after %d iterations, f=%.12g", trace.status, trace.iterations, best_f)
    return best_x, trace


def _secant_refine(cost, grad, x, p, slope0, alpha, x_new, f_new, g_new):
    """One secant step on the directional derivative; exact for quadratics.

    Kept only if it lowers the cost, so the Wolfe point is the fallback.
    """
    slope1 = g_new @ p
    if slope1 - slope0 <= 0 or abs(slope1) <= 1e-8 * abs(slope0):
        return alpha, x_new, f_new, g_new
    alpha_s = alpha * slope0 / (slope0 - slope1)
    x_s = x + alpha_s * p
    f_s = cost(x_s)
    if f_s < f_new:
        return alpha_s, x_s, f_s, grad(x_s)
    return alpha, x_new, f_new, g_new


def _backtrack(cost: Cost, x, p, f0, slope, c1=1e-4, shrink=0.5, tries=40):
    alpha = 1.0
    for _ in range(tries):
        f = cost(x + alpha * p)
        if f <= f0 + c1 * alpha * slope:
            return alpha, f
        alpha *= shrink
    return None, None


def minimize_spsa(
    cost: Cost, initial_params: Sequence[float], config: OptimizerConfig | None = None
) -> tuple[np.ndarray, OptimizationTrace]:
    """Simultaneous-perturbation stochastic approximation.

    Gains are ``a_k = a / (A + k + 1)^alpha`` and ``c_k = c / (k + 1)^gamma``.
    When ``a`` is not given it is calibrated so that the first step has a
    magnitude of about 2 pi / 10.  Returns the mean of the last
    ``spsa_average`` iterates.
    """
    config = config or OptimizerConfig(method="spsa")
    trace = OptimizationTrace()
    f_cost = _checked(cost, trace)
    rng = np.random.default_rng(config.seed)
    x = np.asarray(initial_params, dtype=float).copy()
    n_iter = config.max_iters
    big_a = 0.1 * n_iter if config.spsa_A is None else config.spsa_A
    c, alpha, gamma = config.spsa_c, config.spsa_alpha, config.spsa_gamma

    a = config.spsa_a
    if a is None:
        probes = []
        for _ in range(5):
            delta = rng.choice([-1.0, 1.0], size=x.size)
            diff = f_cost(x + c * delta) - f_cost(x - c * delta)
            probes.append(abs(diff) / (2 * c))
        magnitude = float(np.mean(probes))
        a = (2 * np.pi / 10) * (big_a + 1) ** alpha / magnitude if magnitude > 0 else 0.1

    history = []
    for k in range(n_iter):
        ak = a / (big_a + k + 1) ** alpha
        ck = c / (k + 1) ** gamma
        delta = rng.choice([-1.0, 1.0], size=x.size)
        f_plus = f_cost(x + ck * delta)
        f_minus = f_cost(x - ck * delta)
        ghat = (f_plus - f_minus) / (2 * ck) * delta
        x = x - ak * ghat
        history.append(x.copy())
        trace.record(x, 0.5 * (f_plus + f_minus), float(np.linalg.norm(ghat)))
    trace.status = "max_iters"
    tail = history[-max(1, config.spsa_average):]
    return np.mean(tail, axis=0), trace


def minimize(
    cost: Cost,
    initial_params: Sequence[float],
    config: OptimizerConfig,
    grad: Grad | None = None,
) -> tuple[np.ndarray, OptimizationTrace]:
    if config.method == "bfgs":
        if grad is None:
            raise OptimizationError("BFGS needs a gradient")
        return minimize_bfgs(cost, grad, initial_params, config)
    return minimize_spsa(cost, initial_params, config)
