"""
Riesz-CG Command Line
generate / solve / oracle / compare / bound / verify
"""
import argparse
import logging
import sys
from typing import List, Optional

from cg_solver import CgConfig, CgVerdict, cg_solve
from config import SolverSettings
from errors import BadParameters, RieszCGError
from oracle import compare, pointwise_oracle
from presets import GeneratorPreset, get_preset_manager
from problem_io import (
    load_oracle,
    load_problem,
    load_trace,
    load_vector,
    save_oracle,
    save_problem,
    save_report,
    save_trace,
    trace_csv_rows,
    write_csv,
)
from problems import GENERATOR_MODES, generate_problem
from rate_bounds import verify_rate
from verifier import verify_orthogonality

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_VERIFICATION_FAILED = 3
EXIT_IO = 4

GENERATOR_FIELDS = ("n", "samples", "kappa", "perturbation", "seed", "mode")


class UsageError(Exception):
    """Bad command line"""


class HarnessArgumentParser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; the harness reserves 2 for infeasible runs"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common_options(settings: SolverSettings) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", default=settings.log_level,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="Logging level (default: RIESZ_CG_LOG_LEVEL or WARNING)")
    return common


def build_parser(settings: SolverSettings) -> HarnessArgumentParser:
    common = _common_options(settings)
    parser = HarnessArgumentParser(
        prog="harness_cli",
        description="Conjugate gradients over sampled function algebras",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python harness_cli.py generate --preset desk -o problem.json
  python harness_cli.py solve problem.json -o trace.json --csv trace.csv
  python harness_cli.py oracle problem.json -o oracle.json
  python harness_cli.py compare trace.json oracle.json
  python harness_cli.py bound problem.json trace.json -o report.json --csv report.csv
  python harness_cli.py verify trace.json problem.json

Exit codes: 0 success, 1 usage, 2 infeasible, 3 verification failure, 4 I/O or validation error
        """,
    )
    sub = parser.add_subparsers(dest="command", parser_class=HarnessArgumentParser)
    sub.required = True

    gen = sub.add_parser("generate", parents=[common], help="Generate a seeded problem")
    gen.add_argument("--preset", help="Fill unspecified generator options from a preset")
    gen.add_argument("--n", type=int)
    gen.add_argument("--samples", type=int)
    gen.add_argument("--kappa", type=float)
    gen.add_argument("--perturbation", type=float)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--mode", choices=GENERATOR_MODES)
    gen.add_argument("--save-preset", metavar="KEY", help="Store the resolved generator options as a preset")
    gen.add_argument("-o", "--output", required=True)

    solve = sub.add_parser("solve", parents=[common], help="Run function-valued CG")
    solve.add_argument("problem")
    solve.add_argument("--tol", type=float, default=settings.residual_tol,
                       help="Residual tolerance (stop when sup r^T r < tol^2)")
    solve.add_argument("--max-iter", type=int, help="Iteration limit (default: n)")
    solve.add_argument("--x0", help="JSON file with a starting vector")
    solve.add_argument("--skip-validate", action="store_true")
    solve.add_argument("--csv", help="Also write k, residual_sup, error_A_sup as CSV")
    solve.add_argument("-o", "--output", required=True)

    orc = sub.add_parser("oracle", parents=[common], help="Per-sample direct solves and scalar CG")
    orc.add_argument("problem")
    orc.add_argument("--skip-validate", action="store_true")
    orc.add_argument("-o", "--output", required=True)

    cmp_ = sub.add_parser("compare", parents=[common], help="Compare a trace against the oracle")
    cmp_.add_argument("trace")
    cmp_.add_argument("oracle")
    cmp_.add_argument("--tol", type=float, default=settings.compare_tol)

    bound = sub.add_parser("bound", parents=[common], help="Check the Chebyshev rate bound")
    bound.add_argument("problem")
    bound.add_argument("trace")
    bound.add_argument("--skip-validate", action="store_true")
    bound.add_argument("--csv")
    bound.add_argument("-o", "--output", required=True)

    ver = sub.add_parser("verify", parents=[common], help="Check orthogonality of a trace")
    ver.add_argument("trace")
    ver.add_argument("problem")
    ver.add_argument("--skip-validate", action="store_true")
    return parser


def _generator_args(args: argparse.Namespace):
    values = {name: getattr(args, name) for name in GENERATOR_FIELDS}
    if args.preset:
        preset = get_preset_manager().get(args.preset)
        if preset is None:
            known = ", ".join(get_preset_manager().list_presets())
            raise UsageError(f"unknown preset {args.preset!r} (known: {known})")
        for name, value in preset.generator_args().items():
            if values[name] is None:
                values[name] = value
    if values["mode"] is None:
        values["mode"] = "random"
    missing = [f"--{name}" for name, value in values.items() if value is None]
    if missing:
        raise UsageError(f"missing {', '.join(missing)} (or use --preset)")
    return values


def cmd_generate(args: argparse.Namespace, settings: SolverSettings) -> int:
    values = _generator_args(args)
    problem = generate_problem(values["n"], values["samples"], values["kappa"],
                               values["perturbation"], values["seed"], values["mode"])
    if args.preset:
        problem.metadata["preset"] = args.preset
    save_problem(args.output, problem)
    if args.save_preset:
        preset = GeneratorPreset(name=args.save_preset, description=f"Saved from {args.output}", **values)
        path = get_preset_manager().save_preset(args.save_preset, preset)
        logger.info("saved preset %s to %s", args.save_preset, path)
    print(f"Wrote {values['mode']} problem n={problem.n} m={problem.space.m} "
          f"kappa={problem.metadata['kappa']:.4g} to {args.output}")
    return EXIT_OK


def cmd_solve(args: argparse.Namespace, settings: SolverSettings) -> int:
    tol = settings.tolerance()
    try:
        cfg = CgConfig(residual_tol=args.tol, max_iter=args.max_iter, tol=tol)
    except ValueError as e:
        raise UsageError(str(e))
    problem = load_problem(args.problem, args.skip_validate, tol)
    x0 = load_vector(args.x0, problem.space, problem.n) if args.x0 else problem.x0
    outcome = cg_solve(problem.A, problem.b, x0, cfg,
                       progress_callback=lambda msg, prog: logger.debug("[%3.0f%%] %s", prog * 100, msg))
    save_trace(args.output, outcome)
    if args.csv:
        x_star = pointwise_oracle(problem, args.tol).per_sample_solutions
        write_csv(args.csv, trace_csv_rows(outcome, x_star, problem.A))
    print(outcome.summary())
    if outcome.verdict == CgVerdict.INFEASIBLE:
        return EXIT_INFEASIBLE
    if outcome.verdict == CgVerdict.MAX_ITER_REACHED:
        logger.warning("iteration limit reached before the residual vanished")
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace, settings: SolverSettings) -> int:
    problem = load_problem(args.problem, args.skip_validate, settings.tolerance())
    result = pointwise_oracle(problem, settings.residual_tol)
    save_oracle(args.output, result)
    print(f"Wrote oracle for {int(problem.space.support.sum())} samples to {args.output}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace, settings: SolverSettings) -> int:
    result = compare(load_trace(args.trace), load_oracle(args.oracle), args.tol)
    print(result.summary())
    return EXIT_OK if result.valid else EXIT_VERIFICATION_FAILED


def cmd_bound(args: argparse.Namespace, settings: SolverSettings) -> int:
    tol = settings.tolerance()
    problem = load_problem(args.problem, args.skip_validate, tol)
    outcome = load_trace(args.trace)
    x_star = pointwise_oracle(problem, settings.residual_tol).per_sample_solutions
    report = verify_rate(outcome, problem.A, x_star, tol, slack=settings.bound_slack)
    save_report(args.output, report.to_dict())
    if args.csv:
        write_csv(args.csv, report.to_csv_rows())
    print(f"kappa={report.kappa:.4g}: rate bound {'holds' if report.holds else 'violated'} "
          f"over {len(report.per_k)} iterates")
    if report.pointwise_kappa:
        worst = max(range(len(report.pointwise_kappa)), key=report.pointwise_kappa.__getitem__)
        print(f"largest kappa(x)={report.pointwise_kappa[worst]:.4g} at sample {worst}")
    return EXIT_OK if report.holds else EXIT_VERIFICATION_FAILED


def cmd_verify(args: argparse.Namespace, settings: SolverSettings) -> int:
    outcome = load_trace(args.trace)
    problem = load_problem(args.problem, args.skip_validate, settings.tolerance())
    result = verify_orthogonality(outcome, problem.A, settings.tolerance())
    print(result.summary())
    return EXIT_OK if result.valid else EXIT_VERIFICATION_FAILED


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "oracle": cmd_oracle,
    "compare": cmd_compare,
    "bound": cmd_bound,
    "verify": cmd_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    try:
        settings = SolverSettings.from_env()
    except RieszCGError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_IO

    parser = build_parser(settings)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE

    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s - %(levelname)s - %(message)s",
    )
    try:
        return COMMANDS[args.command](args, settings)
    except (UsageError, BadParameters) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (RieszCGError, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
