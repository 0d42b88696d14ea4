"""Reproducible experiment runs behind the command-line interface.

Every run returns a JSON-ready payload that echoes the full configuration,
so a result file is enough to repeat the run exactly.  Outputs carry no
timestamps and keys are sorted, so a fixed seed gives byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .ansatz import AnsatzSpec
from .eigensolvers import (
    DeflationConfig,
    EigensolverResult,
    StateRecord,
    default_references,
    hartree_fock_index,
    mcvqe,
    ssvqe,
    vqd,
    vqe,
)
from .estimation import Evaluator
from .fermion import build_s_squared, build_sz_squared, number_operator
from .mitigation import ConfusionMatrix, calibrate_confusion
from .optim import OptimizerConfig
from .oracle import exact_eigensystem, exact_oscillator_strength, exact_transition_amplitude
from .problemfile import AXES, ProblemFile, parse_problem_file
from .transition import METHODS, oscillator_strength, sampled_oscillator_strength

logger = logging.getLogger(__name__)

ALGORITHMS = ("vqe", "ssvqe", "mcvqe", "vqd")
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_COLLAPSE = 2


class RunError(ValueError):
    pass


@dataclass
class RunConfig:
    algorithm: str = "vqd"
    k: int = 2
    ansatz: str = "rsp"
    depth: int = 4
    block: str = "exchange"
    optimizer: str = "bfgs"
    max_iters: int = 1000
    rel_energy_tol: float = 1e-8
    mode: str = "exact"
    shots: int | None = None
    seed: int = 0
    noise: list[float] | None = None
    mitigation: bool = False
    cm_file: str | None = None
    n_cal: int = 8192
    electrons: int | None = None
    references: list[int] | None = None
    weights: list[float] | None = None
    betas: list[float] | None = None
    vqd_init: str = "warm"
    restarts: int = 0
    states: list[int] = field(default_factory=lambda: [0, 1])
    methods: list[str] = field(default_factory=lambda: ["overlap"])
    repeats: int = 5
    error_variant: str = "textbook"

    def __post_init__(self):
        for alg in self.algorithms:
            if alg not in ALGORITHMS:
                raise RunError(f"unknown algorithm {alg!r}")
        if self.k < 1:
            raise RunError("k must be >= 1")
        if self.mode not in ("exact", "sampled"):
            raise RunError(f"unknown mode {self.mode!r}")
        if self.mode == "sampled" and not self.shots:
            raise RunError("sampled mode requires shots")
        if self.mitigation and not (self.noise or self.cm_file):
            raise RunError("mitigation requires noise flip probabilities or a confusion-matrix file")
        for m in self.methods:
            if m not in METHODS:
                raise RunError(f"unknown transition method {m!r}")
        if len(self.states) != 2:
            raise RunError("state selection needs exactly two indices")

    @property
    def algorithms(self) -> list[str]:
        return [a.strip() for a in self.algorithm.split(",") if a.strip()]

    def spec(self, n: int) -> AnsatzSpec:
        return AnsatzSpec(self.ansatz, n, self.depth, self.block)

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            method=self.optimizer,
            max_iters=self.max_iters,
            rel_energy_tol=self.rel_energy_tol,
            seed=self.seed,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_mapping(cls, mapping: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(mapping) - known)
        if unknown:
            raise RunError(f"unknown configuration keys: {unknown}")
        return cls(**mapping)


def _seeds(seed: int) -> tuple[int, int]:
    """Independent child seeds for the evaluator and the readout calibration."""
    a, b = np.random.SeedSequence(seed).generate_state(2)
    return int(a), int(b)


def make_evaluator(config: RunConfig, n: int, mode: str | None = None) -> Evaluator:
    mode = mode or config.mode
    eval_seed, cal_seed = _seeds(config.seed)
    noise = None
    if config.noise:
        if len(config.noise) == 1:
            noise = ConfusionMatrix.from_flip_probabilities(config.noise * n)
        elif len(config.noise) == n:
            noise = ConfusionMatrix.from_flip_probabilities(config.noise)
        else:
            raise RunError(f"{len(config.noise)} flip probabilities for {n} qubits")
    cm = None
    if config.mitigation:
        if config.cm_file:
            cm = ConfusionMatrix.load(config.cm_file)
        else:
            cm = calibrate_confusion(noise, config.n_cal, cal_seed)
        if cm.n != n:
            raise RunError(f"confusion matrix is for {cm.n} qubits, problem has {n}")
    if mode == "exact":
        return Evaluator("exact")
    return Evaluator("sampled", shots=config.shots, noise=noise, mitigation=cm, seed=eval_seed)


def resolve_references(config: RunConfig, n: int, algorithm: str) -> list[int]:
    k = config.k
    if config.references:
        refs = [int(r) for r in config.references]
        if algorithm == "vqd" and len(refs) == 1:
            return refs * k
        if algorithm == "vqe":
            return refs[:1]
        if len(refs) != k:
            raise RunError(f"{len(refs)} references for k={k}")
        return refs
    if algorithm in ("vqe", "vqd"):
        ref = hartree_fock_index(n, config.electrons) if config.electrons is not None else 0
        return [ref] * (1 if algorithm == "vqe" else k)
    if config.electrons is not None:
        return default_references(n, config.electrons, k)
    return list(range(k))


def solve_problem(
    h,
    config: RunConfig,
    algorithm: str,
    evaluator: Evaluator,
    initial_params=None,
) -> EigensolverResult:
    n = h.n
    spec = config.spec(n)
    opt = config.optimizer_config()
    refs = resolve_references(config, n, algorithm)
    if algorithm == "vqe":
        return vqe(h, spec, refs[0], opt, initial_params, evaluator, config.restarts)
    if algorithm == "ssvqe":
        return ssvqe(h, spec, refs, config.weights, opt, initial_params, evaluator, config.restarts)
    if algorithm == "mcvqe":
        return mcvqe(h, spec, refs, opt, initial_params, evaluator, config.restarts)
    deflation = DeflationConfig(betas=config.betas, init=config.vqd_init)
    return vqd(h, spec, config.k, deflation, opt, refs, initial_params, evaluator, config.restarts)


def state_labels(problem: ProblemFile) -> dict:
    labels = {}
    if problem.sz_squared is not None or problem.n % 2 == 0:
        labels["sz2"] = problem.sz_squared_operator()
    if problem.s_squared is not None or problem.n % 2 == 0:
        labels["s2"] = problem.s_squared_operator()
    if problem.sz_squared is None and problem.n % 2 == 0:
        labels["n_electrons"] = number_operator(problem.n)
    return labels


def oracle_energies(problem: ProblemFile, k: int) -> list[float]:
    return [float(e) for e in exact_eigensystem(problem.effective_hamiltonian(), k).eigenvalues]


def _comparison_rows(results: dict[str, EigensolverResult], exact: list[float]) -> list[dict]:
    rows = []
    for alg, res in results.items():
        for i, e in enumerate(res.energies):
            rows.append({
                "algorithm": alg,
                "state": i,
                "energy": float(e),
                "oracle": exact[i],
                "deviation": float(e - exact[i]),
            })
    return rows


def most_accurate(results: dict[str, EigensolverResult], exact: Sequence[float]) -> str:
    """Algorithm with the smallest worst-state deviation from the oracle."""
    def worst(res):
        return float(np.max(np.abs(res.energies - np.asarray(exact[: len(res.energies)]))))

    return min(results, key=lambda a: (worst(results[a]), a))


def run_solve(problem_path: str | Path, config: RunConfig) -> tuple[dict, list[dict], int]:
    problem = parse_problem_file(problem_path)
    h = problem.effective_hamiltonian()
    k = 1 if config.algorithms == ["vqe"] else config.k
    exact = oracle_energies(problem, k)
    results = {}
    for alg in config.algorithms:
        evaluator = make_evaluator(config, h.n)
        results[alg] = solve_problem(h, config, alg, evaluator)
    rows = _comparison_rows(results, exact)
    collapse = any(r.collapse_flag for r in results.values())
    payload = {
        "command": "solve",
        "problem": str(problem_path),
        "config": config.to_dict(),
        "oracle_energies": exact,
        "results": {alg: res.to_dict() for alg, res in results.items()},
        "comparison": rows,
        "most_accurate": most_accurate(results, exact),
        "collapse": collapse,
    }
    return payload, rows, EXIT_COLLAPSE if collapse else EXIT_OK


def records_from_result(result: dict) -> tuple[AnsatzSpec, list[StateRecord]]:
    """Rebuild state records from a serialized eigensolver result."""
    a = result["ansatz"]
    spec = AnsatzSpec(a["family"], a["n"], a["depth"], a["block"])
    records = []
    for s in result["states"]:
        params = np.asarray(s["params"], dtype=float)
        circuit = spec.build(params)
        coeffs = s.get("coefficients")
        records.append(StateRecord(
            params, s["energy"], s["reference"], circuit,
            coefficients=None if coeffs is None else np.asarray(coeffs),
            references=s.get("references"),
        ))
    return spec, records


def run_transition(
    problem_path: str | Path,
    config: RunConfig,
    result_path: str | Path | None = None,
) -> tuple[dict, list[dict], int]:
    """Transition amplitudes and ``f`` between ``config.states``.

    States come from a previous solve result, or from an inline solve that
    always optimizes exactly; ``config.mode`` then governs only the
    amplitude and energy estimates.
    """
    problem = parse_problem_file(problem_path)
    if not problem.dipoles or all(len(d) == 0 for d in problem.dipoles.values()):
        raise RunError("oscillator strength requested but the problem has no dipole sections")
    h = problem.effective_hamiltonian()
    alg = config.algorithms[0]
    collapse = False
    if result_path is not None:
        stored = json.loads(Path(result_path).read_text())
        _, records = records_from_result(stored["results"][alg])
        collapse = bool(stored.get("collapse", False))
    else:
        res = solve_problem(h, config, alg, make_evaluator(config, h.n, mode="exact"))
        records = res.states
        collapse = res.collapse_flag
    i, j = config.states
    if max(i, j) >= len(records):
        raise RunError(f"state index out of range: only {len(records)} states")
    s_i, s_j = records[i], records[j]
    dipoles = problem.dipole_list()
    evaluator = make_evaluator(config, h.n)

    rows, methods = [], {}
    exact_amps = [abs(exact_transition_amplitude(d, s_j.statevector(), s_i.statevector())) ** 2 for d in dipoles]
    for method in config.methods:
        if evaluator.exact:
            out = oscillator_strength(s_i.energy, s_j.energy, dipoles, s_i, s_j, method, evaluator)
        else:
            out = sampled_oscillator_strength(
                h, dipoles, s_i, s_j, evaluator, config.repeats, method, config.error_variant
            )
        methods[method] = out.to_dict()
        for axis, amp in zip(AXES, out.amplitudes):
            rows.append({"method": method, "axis": axis, "amplitude": amp, "f": out.f, "error": out.error})

    spectrum = exact_eigensystem(h, max(i, j) + 1, state_labels(problem))
    lo, hi = sorted((i, j))
    oracle_f = exact_oscillator_strength(
        spectrum.eigenvalues[lo], spectrum.eigenvalues[hi], dipoles,
        spectrum.eigenvectors[:, lo], spectrum.eigenvectors[:, hi],
    )
    payload = {
        "command": "transition",
        "problem": str(problem_path),
        "result_file": None if result_path is None else str(result_path),
        "config": config.to_dict(),
        "states": {"indices": [i, j], "energies": [s_i.energy, s_j.energy]},
        "methods": methods,
        "oracle": {
            "f": oracle_f,
            "energies": [float(spectrum.eigenvalues[lo]), float(spectrum.eigenvalues[hi])],
            "amplitudes_of_variational_states": dict(zip(AXES, exact_amps)),
        },
        "collapse": collapse,
    }
    for row in rows:
        row["oracle_f"] = oracle_f
    return payload, rows, EXIT_COLLAPSE if collapse else EXIT_OK


def _warm_start(res: EigensolverResult, algorithm: str):
    if algorithm == "vqd":
        return np.array([s.params for s in res.states])
    return res.states[0].params


def run_sweep(problem_paths: Sequence[str | Path], config: RunConfig) -> tuple[dict, list[dict], int]:
    """Solve each point in order, warm-starting from the previous point's optima."""
    if not problem_paths:
        raise RunError("sweep needs at least one problem file")
    alg = config.algorithms[0]
    points, rows = [], []
    initial = None
    failed = collapse = False
    for index, path in enumerate(problem_paths):
        row = {"index": index, "file": str(path)}
        try:
            problem = parse_problem_file(path)
            h = problem.effective_hamiltonian()
            res = solve_problem(h, config, alg, make_evaluator(config, h.n), initial)
            exact = oracle_energies(problem, len(res.states))
            initial = _warm_start(res, alg)
            collapse |= res.collapse_flag
            row["status"] = "collapse" if res.collapse_flag else "ok"
            for s, (e, ex) in enumerate(zip(res.energies, exact)):
                row[f"energy_{s}"] = float(e)
                row[f"oracle_{s}"] = ex
            i, j = config.states
            if problem.dipoles and max(i, j) < len(res.states):
                s_i, s_j = res.states[i], res.states[j]
                dip = problem.dipole_list()
                row["f"] = oscillator_strength(s_i.energy, s_j.energy, dip, s_i, s_j).f
                spec = exact_eigensystem(h, max(i, j) + 1)
                lo, hi = sorted((i, j))
                row["oracle_f"] = exact_oscillator_strength(
                    spec.eigenvalues[lo], spec.eigenvalues[hi], dip,
                    spec.eigenvectors[:, lo], spec.eigenvectors[:, hi],
                )
            points.append({"file": str(path), "status": row["status"], "result": res.to_dict()})
        except Exception as exc:  # a failed point is recorded and the sweep continues
            logger.error("sweep point %d (%s) failed: %s", index, path, exc)
            failed = True
            row["status"] = "error"
            row["error"] = str(exc)
            points.append({"file": str(path), "status": "error", "error": str(exc)})
        rows.append(row)
    payload = {
        "command": "sweep",
        "problems": [str(p) for p in problem_paths],
        "config": config.to_dict(),
        "points": points,
        "curve": rows,
    }
    code = EXIT_ERROR if failed else (EXIT_COLLAPSE if collapse else EXIT_OK)
    return payload, rows, code


def run_calibrate(config: RunConfig, n: int, matrix_path: str | Path | None = None) -> tuple[dict, list[dict], int]:
    if not config.noise:
        raise RunError("calibration needs flip probabilities (--noise)")
    probs = config.noise * n if len(config.noise) == 1 else config.noise
    if len(probs) != n:
        raise RunError(f"{len(probs)} flip probabilities for {n} qubits")
    _, cal_seed = _seeds(config.seed)
    cm = calibrate_confusion(probs, config.n_cal, cal_seed)
    if matrix_path is not None:
        cm.save(matrix_path)
    payload = {
        "command": "calibrate",
        "config": config.to_dict(),
        "n": n,
        "condition_number": cm.condition_number(),
        "matrix": cm.matrix.tolist(),
        "matrix_file": None if matrix_path is None else str(matrix_path),
    }
    rows = [{"prepared": x, "measured": y, "probability": float(cm.matrix[y, x])}
            for x in range(2**n) for y in range(2**n)]
    return payload, rows, EXIT_OK


def run_exact(problem_path: str | Path, config: RunConfig, k: int | None = None) -> tuple[dict, list[dict], int]:
    problem = parse_problem_file(problem_path)
    h = problem.effective_hamiltonian()
    spectrum = exact_eigensystem(h, k, state_labels(problem))
    dipoles = problem.dipole_list() if problem.dipoles else None
    rows = []
    for i, e in enumerate(spectrum.eigenvalues):
        row = {"state": i, "energy": float(e)}
        for name, vals in spectrum.labels.items():
            row[name] = float(vals[i])
        if dipoles is not None and i > 0:
            row["f_from_ground"] = exact_oscillator_strength(
                spectrum.eigenvalues[0], e, dipoles, spectrum.eigenvectors[:, 0], spectrum.eigenvectors[:, i]
            )
        rows.append(row)
    payload = {
        "command": "exact",
        "problem": str(problem_path),
        "config": config.to_dict(),
        "states": rows,
    }
    return payload, rows, EXIT_OK


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def to_json(payload: dict) -> str:
    return json.dumps(_clean(payload), sort_keys=True, indent=2) + "\n"


def to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    columns = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _clean(v) for k, v in row.items()})
    return buf.getvalue()


def write_outputs(prefix: str | Path, payload: dict, rows: list[dict]) -> tuple[Path, Path]:
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    json_path = prefix.with_name(prefix.name + ".json")
    csv_path = prefix.with_name(prefix.name + ".csv")
    json_path.write_text(to_json(payload))
    csv_path.write_text(to_csv(rows))
    return json_path, csv_path
