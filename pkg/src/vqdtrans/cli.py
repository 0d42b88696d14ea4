"""Command-line entry point: ``vqdtrans {solve,transition,sweep,calibrate,exact}``.

Exit codes: 0 success, 1 error, 2 completed but a deflation collapse was
flagged.  A ``--config`` JSON file overrides any flag it sets.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import runner
from .runner import EXIT_ERROR, RunConfig


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    out = []
    for v in text.split(","):
        v = v.strip()
        if v:
            out.append(int(v, 2) if v.startswith("0b") else int(v))
    return out


def _strings(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run configuration")
    g.add_argument("--config", type=Path, help="JSON file; its keys override flags")
    g.add_argument("--algorithm", help="vqe, ssvqe, mcvqe or vqd; a comma list compares several")
    g.add_argument("--k", type=int, help="number of states")
    g.add_argument("--ansatz", choices=["rsp", "two_local"])
    g.add_argument("--depth", type=int)
    g.add_argument("--block", choices=["exchange", "givens"], help="two-qubit block of the rsp ansatz")
    g.add_argument("--optimizer", choices=["bfgs", "spsa"])
    g.add_argument("--max-iters", type=int)
    g.add_argument("--rel-energy-tol", type=float)
    g.add_argument("--mode", choices=["exact", "sampled"])
    g.add_argument("--shots", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--noise", type=_floats, help="readout flip probabilities, one or one per qubit")
    g.add_argument("--mitigation", action="store_true", default=None)
    g.add_argument("--cm-file", help="confusion matrix saved by 'calibrate'")
    g.add_argument("--n-cal", type=int, help="calibration shots per basis state")
    g.add_argument("--electrons", type=int, help="particle number for default references")
    g.add_argument("--references", type=_ints, help="basis-state indices, e.g. 12,9 or 0b1100")
    g.add_argument("--weights", type=_floats)
    g.add_argument("--betas", type=_floats)
    g.add_argument("--vqd-init", choices=["warm", "random"])
    g.add_argument("--restarts", type=int)
    g.add_argument("--states", type=_ints, help="two state indices for transition quantities")
    g.add_argument("--methods", type=_strings, help="overlap, ancilla, superposition")
    g.add_argument("--repeats", type=int, help="amplitude realizations for error bars")
    g.add_argument("--error-variant", choices=["term_average", "textbook"])
    p.add_argument("--output", "-o", type=Path, help="output prefix; writes PREFIX.json and PREFIX.csv")
    p.add_argument("--verbose", "-v", action="store_true")


CONFIG_KEYS = {f for f in RunConfig.__dataclass_fields__}


def build_config(args: argparse.Namespace) -> RunConfig:
    values = {k: v for k, v in vars(args).items() if k in CONFIG_KEYS and v is not None}
    if args.config is not None:
        values.update(json.loads(args.config.read_text()))
    return RunConfig.from_mapping(values)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vqdtrans", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="find k eigenstates variationally")
    p.add_argument("problem", type=Path)
    _add_run_flags(p)

    p = sub.add_parser("transition", help="transition amplitudes and oscillator strength")
    p.add_argument("problem", type=Path)
    p.add_argument("--result", type=Path, help="JSON from a previous solve; solves inline if omitted")
    _add_run_flags(p)

    p = sub.add_parser("sweep", help="warm-started solves over an ordered list of problem files")
    p.add_argument("problems", type=Path, nargs="+")
    _add_run_flags(p)

    p = sub.add_parser("calibrate", help="simulate readout calibration and save the confusion matrix")
    p.add_argument("--qubits", type=int, required=True)
    p.add_argument("--matrix", type=Path, help="where to save the confusion matrix")
    _add_run_flags(p)

    p = sub.add_parser("exact", help="exact spectrum of a problem file")
    p.add_argument("problem", type=Path)
    p.add_argument("--levels", type=int, help="number of levels to report (default all)")
    _add_run_flags(p)
    return parser


def dispatch(args: argparse.Namespace) -> tuple[dict, list[dict], int]:
    config = build_config(args)
    if args.command == "solve":
        return runner.run_solve(args.problem, config)
    if args.command == "transition":
        return runner.run_transition(args.problem, config, args.result)
    if args.command == "sweep":
        return runner.run_sweep(args.problems, config)
    if args.command == "calibrate":
        return runner.run_calibrate(config, args.qubits, args.matrix)
    return runner.run_exact(args.problem, config, args.levels)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        payload, rows, code = dispatch(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.output is None:
        sys.stdout.write(runner.to_json(payload))
    else:
        runner.write_outputs(args.output, payload, rows)
    return code


if __name__ == "__main__":
    sys.exit(main())
