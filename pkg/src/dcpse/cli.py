"""Command-line interface.

Four subcommands cover the library surface: `derive` applies one
derivative operator to a named field from a CSV file, `recover` runs the
elastic recovery chain on displacement columns, `benchmark` evaluates one
refinement level of a named benchmark, and `convergence` sweeps several
levels and fits slopes.

Exit codes: 0 on success, 1 on numerical failure (operator construction or
verification), 2 on usage or validation errors. Human-oriented diagnostics
(support sizes, condition estimates, moment residuals) go to stderr;
results go to the requested output files or stdout.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .benchmarks import (
    convergence_study,
    evaluate_level,
    get_problem,
    operator_settings,
)
from .cloud import DuplicateNodeError, build_index
from .elasticity import ElasticMaterial, recover
from .io_formats import (
    ParseError,
    UnsupportedFormatError,
    read_points_csv,
    write_field_csv,
    write_report,
)
from .operators import (
    IllConditionedNodeError,
    OperatorBuildError,
    OperatorSpec,
    build_operator,
    verify_moments,
)

_EXIT_NUMERICAL = 1
_EXIT_USAGE = 2


class _CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _parse_alpha(text: str) -> tuple[int, ...]:
    try:
        alpha = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise _CliError(
            f"invalid multi-index {text!r}; expected comma-separated integers",
            _EXIT_USAGE,
        ) from None
    return alpha


def _alpha_suffix(alpha: tuple[int, ...]) -> str:
    return "".join(axis * count for axis, count in zip("xyz", alpha))


def _operator_spec(args, alpha) -> OperatorSpec:
    try:
        return OperatorSpec(
            alpha=alpha,
            r=args.r,
            eps_factor=args.eps_factor,
            neighbor_factor=args.neighbor_factor,
        )
    except ValueError as err:
        raise _CliError(str(err), _EXIT_USAGE) from None


def _print_diagnostics(label, op, cloud):
    residual = float(np.max(verify_moments(op, cloud)))
    print(
        f"{label}: nodes={cloud.n} support<={int(np.max(op.support_size))} "
        f"cond<={float(np.max(op.condition)):.3e} moment_residual<={residual:.3e}",
        file=sys.stderr,
    )
    return residual


def cmd_derive(args) -> int:
    cloud, fields = read_points_csv(args.input)
    if args.field not in fields:
        raise _CliError(
            f"field {args.field!r} not found in {args.input}; "
            f"available: {sorted(fields)}",
            _EXIT_USAGE,
        )
    alpha = _parse_alpha(args.alpha)
    if len(alpha) != cloud.dim:
        raise _CliError(
            f"multi-index {args.alpha!r} has {len(alpha)} components but the "
            f"input is {cloud.dim}-dimensional",
            _EXIT_USAGE,
        )
    spec = _operator_spec(args, alpha)
    index = build_index(cloud)
    op = build_operator(cloud, index, spec, threads=args.threads)
    _print_diagnostics(f"derive d{_alpha_suffix(alpha)}", op, cloud)
    derived = op.apply(fields[args.field])
    out_name = f"{args.field}_d{_alpha_suffix(alpha)}"
    out_fields = dict(fields)
    out_fields[out_name] = derived
    write_field_csv(args.output, cloud, out_fields)
    print(f"wrote {args.output} with column {out_name}")
    return 0


def cmd_recover(args) -> int:
    cloud, fields = read_points_csv(args.input)
    if cloud.dim < 2:
        raise _CliError("recovery needs a 2-d or 3-d cloud", _EXIT_USAGE)
    wanted = ["ux", "uy", "uz"][: cloud.dim]
    missing = [name for name in wanted if name not in fields]
    if missing:
        raise _CliError(
            f"missing displacement column(s) {missing} in {args.input}",
            _EXIT_USAGE,
        )
    try:
        material = ElasticMaterial(young=args.young, poisson=args.poisson)
    except ValueError as err:
        raise _CliError(str(err), _EXIT_USAGE) from None
    displacement = np.column_stack([fields[name] for name in wanted])
    index = build_index(cloud)
    result = recover(
        cloud, index, displacement, material, r=args.r, threads=args.threads
    )
    print(
        f"recover: nodes={cloud.n} dim={cloud.dim} "
        f"vm_max={float(np.max(result.von_mises)):.6e}",
        file=sys.stderr,
    )
    out_fields = {
        "u": displacement,
        "e": result.strain,
        "s": result.stress,
        "vm": result.von_mises,
    }
    for i in range(cloud.dim):
        out_fields[f"p{i + 1}"] = result.principal[:, i]
    write_field_csv(args.output, cloud, out_fields)
    print(f"wrote {args.output}")
    return 0


def _checked_problem(args):
    try:
        problem = get_problem(args.problem)
    except ValueError as err:
        raise _CliError(str(err), _EXIT_USAGE) from None
    if args.kind not in ("structured", "jittered"):
        raise _CliError(
            f"kind must be 'structured' or 'jittered', got {args.kind!r}",
            _EXIT_USAGE,
        )
    return problem


def _print_level_entry(name, entry):
    worst = max(entry["nrmse"].values())
    print(
        f"{name} level={entry['level']} nodes={entry['nodes']} "
        f"h={entry['spacing']:.6g} nrmse<={worst:.3e} "
        f"cond<={entry['max_condition']:.3e} "
        f"moment_residual<={entry['max_moment_residual']:.3e}",
        file=sys.stderr,
    )


def cmd_benchmark(args) -> int:
    problem = _checked_problem(args)
    entry = evaluate_level(
        problem,
        args.level,
        kind=args.kind,
        r=args.r,
        eps_factor=args.eps_factor,
        neighbor_factor=args.neighbor_factor,
        seed=args.seed,
        threads=args.threads,
    )
    _print_level_entry(problem.name, entry)
    doc = {
        "problem": problem.name,
        "kind": args.kind,
        "operator": operator_settings(args.r, args.eps_factor, args.neighbor_factor),
        "levels": [entry],
    }
    if args.report:
        write_report(args.report, doc)
        print(f"wrote {args.report}")
    else:
        json.dump(doc, sys.stdout, indent=2)
        print()
    return 0


def _parse_levels(text: str) -> list[int]:
    try:
        parts = [int(part) for part in text.split(",")]
    except ValueError:
        raise _CliError(
            f"invalid levels {text!r}; expected a count or comma-separated "
            "levels such as 1,2,3",
            _EXIT_USAGE,
        ) from None
    if len(parts) == 1:
        # a single number is a sweep length starting at level 0
        return list(range(parts[0]))
    return parts


def cmd_convergence(args) -> int:
    problem = _checked_problem(args)
    levels = _parse_levels(args.levels)
    if len(levels) < 3:
        raise _CliError("convergence needs at least three levels", _EXIT_USAGE)
    report = convergence_study(
        problem,
        levels,
        kind=args.kind,
        r=args.r,
        eps_factor=args.eps_factor,
        neighbor_factor=args.neighbor_factor,
        seed=args.seed,
        threads=args.threads,
        exclude_coarsest=args.exclude_coarsest,
    )
    for entry in report.levels:
        _print_level_entry(report.problem, entry)
    for comp, slope in report.slopes.items():
        print(f"{comp}: slope {slope:.3f}")
    if args.report:
        write_report(args.report, report)
        print(f"wrote {args.report}")
    return 0


def _add_operator_args(parser):
    parser.add_argument("--r", type=int, default=2, help="approximation order")
    parser.add_argument(
        "--eps-factor", type=float, default=1.0, help="kernel width multiplier"
    )
    parser.add_argument(
        "--neighbor-factor",
        type=float,
        default=2.0,
        help="support size as a multiple of the basis size",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker threads (default: DCPSE_THREADS or all cores)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dcpse",
        description="Meshfree derivative operators and elastic field recovery",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive", help="apply a derivative operator to a CSV field")
    p.add_argument("--input", required=True, help="input CSV (coords + fields)")
    p.add_argument("--field", required=True, help="name of the field column")
    p.add_argument("--alpha", required=True, help="derivative multi-index, e.g. 1,0")
    p.add_argument("--output", required=True, help="output CSV path")
    _add_operator_args(p)
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("recover", help="recover stress fields from displacements")
    p.add_argument("--input", required=True, help="input CSV with ux, uy[, uz]")
    p.add_argument("--young", type=float, required=True, help="Young's modulus")
    p.add_argument("--poisson", type=float, required=True, help="Poisson's ratio")
    p.add_argument("--output", required=True, help="output CSV path")
    _add_operator_args(p)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("benchmark", help="run one benchmark refinement level")
    p.add_argument("--problem", required=True, help="franke, plate, or cantilever")
    p.add_argument("--level", type=int, default=0, help="refinement level")
    p.add_argument("--kind", default="structured", help="structured or jittered")
    p.add_argument("--seed", type=int, default=0, help="jitter seed")
    p.add_argument("--report", default=None, help="write JSON report here")
    _add_operator_args(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("convergence", help="sweep levels and fit slopes")
    p.add_argument("--problem", required=True, help="franke, plate, or cantilever")
    p.add_argument(
        "--levels",
        required=True,
        help="explicit levels such as 1,2,3, or a count N meaning 0..N-1",
    )
    p.add_argument("--kind", default="structured", help="structured or jittered")
    p.add_argument("--seed", type=int, default=0, help="jitter seed")
    p.add_argument(
        "--exclude-coarsest",
        action="store_true",
        help="drop the coarsest level from the slope fit",
    )
    p.add_argument("--report", default=None, help="write JSON report here")
    _add_operator_args(p)
    p.set_defaults(func=cmd_convergence)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.code
    except (OperatorBuildError, IllConditionedNodeError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return _EXIT_NUMERICAL
    except (ParseError, UnsupportedFormatError) as err:
        print(f"error: {err}", file=sys.stderr)
        return _EXIT_USAGE
    except (FileNotFoundError, IsADirectoryError, PermissionError) as err:
        print(f"error: {err}", file=sys.stderr)
        return _EXIT_USAGE
    except (ValueError, DuplicateNodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return _EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
