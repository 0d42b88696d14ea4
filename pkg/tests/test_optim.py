import math

import numpy as np
import pytest

from conftest import random_observable
from vqdtrans.ansatz import AnsatzSpec
from vqdtrans.estimation import Evaluator
from vqdtrans.optim import (
    FOUR_TERM,
    TWO_TERM,
    OptimizationError,
    OptimizerConfig,
    minimize,
    minimize_bfgs,
    minimize_spsa,
    parameter_shift_gradient,
    shift_rules,
)
from vqdtrans.pauli import Observable
from vqdtrans.statevector import Circuit, expectation, rz, run, ry, x


def finite_difference(cost, x, h=1e-5):
    g = np.zeros_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (cost(x + e) - cost(x - e)) / (2 * h)
    return g


def circuit_cost(spec, h, ref=0):
    return lambda t: expectation(h, run(spec.build(t), ref))


def test_ry_gradient_examples():
    z = Observable.from_dict({"Z": 1.0})
    cost = lambda t: expectation(z, run(Circuit(1, (ry(0, t[0]),)), 0))
    assert parameter_shift_gradient(cost, [math.pi / 2])[0] == pytest.approx(-1.0)
    assert parameter_shift_gradient(cost, [0.0])[0] == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("family, block", [("rsp", "exchange"), ("rsp", "givens"), ("two_local", "exchange")])
def test_shift_rule_matches_finite_difference(rng, family, block):
    for _ in range(5):
        spec = AnsatzSpec(family, 4, 2, block)
        h = random_observable(rng, 4, 8)
        x0 = spec.random_parameters(rng)
        cost = circuit_cost(spec, h, 0b0110)
        rules = shift_rules(spec.build(x0), spec.parameter_count)
        np.testing.assert_allclose(parameter_shift_gradient(cost, x0, rules), finite_difference(cost, x0), atol=1e-6)


def test_two_term_rule_is_not_exact_for_two_qubit_blocks(rng):
    # their generator has eigenvalues {-1, 0, 0, 1}, hence two frequencies
    spec = AnsatzSpec("rsp", 3, 1)
    h = random_observable(rng, 3, 8)
    x0 = spec.random_parameters(rng)
    cost = circuit_cost(spec, h, 0b100)
    fd = finite_difference(cost, x0)
    assert np.abs(parameter_shift_gradient(cost, x0, TWO_TERM) - fd).max() > 1e-3
    assert np.abs(parameter_shift_gradient(cost, x0, FOUR_TERM) - fd).max() < 1e-6


def test_shift_rules_validation():
    with pytest.raises(OptimizationError):
        shift_rules(Circuit(1, (x(0),)), 1)
    with pytest.raises(OptimizationError):
        shift_rules(Circuit(1, (ry(0, 0.1, param=0), rz(0, 0.1, param=0))), 1)


def test_bfgs_quadratic_and_rosenbrock():
    cfg = OptimizerConfig(rel_energy_tol=1e-14)
    xs, _ = minimize_bfgs(lambda t: (t[0] - 1) ** 2, lambda t: 2 * (t - 1), [5.0], cfg)
    assert xs[0] == pytest.approx(1.0, abs=1e-6)

    def rosen(t):
        return (1 - t[0]) ** 2 + 100 * (t[1] - t[0] ** 2) ** 2

    def rosen_grad(t):
        return np.array([-2 * (1 - t[0]) - 400 * t[0] * (t[1] - t[0] ** 2), 200 * (t[1] - t[0] ** 2)])

    xs, trace = minimize_bfgs(rosen, rosen_grad, [-1.2, 1.0], OptimizerConfig(rel_energy_tol=1e-14, energy_floor=1e-10))
    np.testing.assert_allclose(xs, [1.0, 1.0], atol=1e-4)
    assert trace.status == "converged"


def test_bfgs_convex_quadratics_converge_quickly(rng):
    # finite termination needs exact line minimization, which the secant refinement supplies
    for dim in (2, 5, 8):
        a = rng.normal(size=(dim, dim))
        q = a @ a.T + dim * np.eye(dim)
        b = rng.normal(size=dim)
        xstar = np.linalg.solve(q, b)
        cost = lambda t: 0.5 * t @ q @ t - b @ t + 10.0
        cfg = OptimizerConfig(rel_energy_tol=1e-15, secant_refine=True)
        _, trace = minimize_bfgs(cost, lambda t: q @ t - b, np.zeros(dim), cfg)
        assert np.abs(np.array(trace.params[min(dim + 2, trace.iterations)]) - xstar).max() < 1e-8


def test_wolfe_only_bfgs_still_converges_on_quadratics(rng):
    q = np.diag([1.0, 3.0, 10.0])
    xs, trace = minimize_bfgs(lambda t: 0.5 * t @ q @ t, lambda t: q @ t, np.ones(3), OptimizerConfig(rel_energy_tol=1e-14))
    assert trace.status == "converged"
    assert np.abs(xs).max() < 1e-6


def test_bfgs_scale_invariant_iterates():
    def cost(t):
        return (t[0] - 1) ** 2 + 3 * (t[1] + 0.5) ** 4 + t[0] * t[1]

    def grad(t):
        return np.array([2 * (t[0] - 1) + t[1], 12 * (t[1] + 0.5) ** 3 + t[0]])

    cfg = OptimizerConfig(rel_energy_tol=1e-10)
    _, a = minimize_bfgs(cost, grad, [2.0, 1.0], cfg)
    _, b = minimize_bfgs(lambda t: 1e6 * cost(t), lambda t: 1e6 * grad(t), [2.0, 1.0], cfg)
    assert a.iterations == b.iterations
    np.testing.assert_allclose(a.params, b.params, rtol=1e-6, atol=1e-9)


def test_bfgs_one_qubit_vqe():
    z = Observable.from_dict({"Z": 1.0})
    spec = AnsatzSpec("two_local", 1, 0)
    cost = circuit_cost(spec, z)
    xs, _ = minimize(cost, [0.3], OptimizerConfig(), grad=lambda t: parameter_shift_gradient(cost, t))
    assert cost(xs) == pytest.approx(-1.0, abs=1e-8)


def test_non_finite_cost_aborts_with_trace():
    with pytest.raises(OptimizationError) as info:
        minimize_bfgs(lambda t: float("nan"), lambda t: np.zeros(1), [0.0])
    assert info.value.trace.status == "non_finite"
    with pytest.raises(OptimizationError):
        minimize_spsa(lambda t: float("inf"), [0.0], OptimizerConfig(method="spsa", max_iters=5))


def test_spsa_noiseless_quadratic():
    cfg = OptimizerConfig(method="spsa", max_iters=200, seed=0)
    xs, trace = minimize_spsa(lambda t: float(np.sum((t - 1.0) ** 2)), np.zeros(3), cfg)
    assert np.abs(xs - 1).max() < 1e-2
    assert trace.iterations == 199


def test_spsa_noisy_quadratic_median():
    errors = []
    for seed in range(20):
        noise = np.random.default_rng(100 + seed)
        cost = lambda t: float(np.sum((t - 1.0) ** 2)) + noise.normal(0, 0.01)
        xs, _ = minimize_spsa(cost, np.zeros(3), OptimizerConfig(method="spsa", max_iters=200, seed=seed))
        errors.append(np.abs(xs - 1).max())
    assert np.median(errors) < 5e-2


def test_spsa_sampled_one_qubit_vqe():
    z = Observable.from_dict({"Z": 1.0})
    spec = AnsatzSpec("two_local", 1, 0)
    ev = Evaluator("sampled", shots=4096, seed=3)
    cost = lambda t: ev.energy(z, run(spec.build(t), 0))
    xs, _ = minimize_spsa(cost, [0.5], OptimizerConfig(method="spsa", max_iters=200, seed=3))
    assert expectation(z, run(spec.build(xs), 0)) < -0.95


def test_spsa_seeded_reproducible():
    cost = lambda t: float(np.sum(np.cos(t)))
    cfg = OptimizerConfig(method="spsa", max_iters=50, seed=9)
    np.testing.assert_array_equal(minimize_spsa(cost, np.ones(2), cfg)[0], minimize_spsa(cost, np.ones(2), cfg)[0])


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(method="slsqp")
    with pytest.raises(ValueError):
        OptimizerConfig(rel_energy_tol=0)
