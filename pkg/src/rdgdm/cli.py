"""Command-line driver.

Subcommands: ``converge`` (refinement sweep with CSV table and plot),
``diagnose`` (discretisation-quality indicators as CSV), ``solve`` (single
run with snapshot and solver-log export).  Exit codes: 0 success, 2
nonconvergence, 3 validation errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .exceptions import (
    MeshParseError,
    MeshValidationError,
    NonconvergenceError,
    RdgdmError,
    StepSizeError,
)
from .gdcore import SCALAR_PROBES, compute_sd, compute_wd, estimate_cd
from .harness import emit_report, run_convergence
from .hmm import build_scheme
from .mesh import FAMILIES, generate_family
from .problems import anis_flux_probe, get_problem
from .rdsolver import PicardConfig, TimeGrid, march

EXIT_OK = 0
EXIT_NONCONVERGENCE = 2
EXIT_VALIDATION = 3


class _Parser(argparse.ArgumentParser):
    """Argument errors map to the validation exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _add_scheme_args(p, with_problem=True):
    if with_problem:
        p.add_argument(
            "--problem",
            default="anis-mms",
            choices=["anis-mms", "heat-sanity", "fhn-demo"],
        )
    p.add_argument("--scheme", default="hmm", choices=["hmm", "p1"])
    p.add_argument("--family", default="triangular", choices=list(FAMILIES))
    p.add_argument("--stab", type=float, default=1.0, help="stabilization weight")
    p.add_argument("--tol", type=float, default=1e-10, help="fixed-point tolerance")
    p.add_argument("--out", default="out", help="output directory")


def build_parser():
    parser = _Parser(prog="rdgdm", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("converge", help="run a refinement sweep")
    _add_scheme_args(conv)
    conv.add_argument("--levels", type=int, default=4)
    conv.add_argument(
        "--dt-scaling", default="quadratic", choices=["linear", "quadratic"]
    )
    conv.add_argument(
        "--base-steps", type=int, default=8, help="time steps at level 0"
    )

    diag = sub.add_parser("diagnose", help="emit quality indicators as CSV")
    _add_scheme_args(diag, with_problem=False)
    diag.add_argument("--level", type=int, default=0)

    solve = sub.add_parser("solve", help="single run with snapshot export")
    _add_scheme_args(solve)
    solve.add_argument("--level", type=int, default=0)
    solve.add_argument("--steps", type=int, default=32)
    solve.add_argument(
        "--guard", action="store_true", help="enforce the contraction step bound"
    )
    return parser


def _cmd_converge(args):
    problem = get_problem(args.problem)
    report = run_convergence(
        problem,
        scheme=args.scheme,
        family=args.family,
        levels=args.levels,
        dt_scaling=args.dt_scaling,
        cfg=PicardConfig(tol=args.tol),
        stab_coeff=args.stab,
        base_steps=args.base_steps,
    )
    paths = emit_report(report, args.out)
    for key in ("err_u", "err_v", "err_gu", "err_gv"):
        rates = ", ".join(f"{r:.2f}" for r in report.rates(key))
        print(f"{key}: {getattr(report, key)[-1]:.6g} (rates {rates})")
    print(f"wrote {paths['csv']} and {paths['plot']}")
    return EXIT_OK


def _cmd_diagnose(args):
    mesh = generate_family(args.family, args.level)
    gd = build_scheme(args.scheme, mesh, stab_coeff=args.stab)
    c_d = estimate_cd(gd)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "diagnostics.csv")
    probes = list(SCALAR_PROBES) + [anis_flux_probe()]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("gd,mesh,level,n_dofs,c_d,probe,s_d,w_d\n")
        for probe in probes:
            if hasattr(probe, "grad"):
                s_d = f"{compute_sd(gd, probe).value:.10g}"
                w_d = ""
            else:
                s_d = ""
                w_d = f"{compute_wd(gd, probe):.10g}"
            fh.write(
                f"{args.scheme},{args.family},{args.level},{gd.n_dofs},"
                f"{c_d:.10g},{probe.name},{s_d},{w_d}\n"
            )
    print(f"c_d = {c_d:.6g}; wrote {path}")
    return EXIT_OK


def _cmd_solve(args):
    problem = get_problem(args.problem)
    mesh = generate_family(args.family, args.level)
    gd = build_scheme(args.scheme, mesh, stab_coeff=args.stab)
    grid = TimeGrid.uniform(problem.T, args.steps)
    cfg = PicardConfig(tol=args.tol, contraction_guard=args.guard)
    solution = march(gd, problem, grid, cfg)

    os.makedirs(args.out, exist_ok=True)
    snap = os.path.join(args.out, "solution_final.csv")
    u_cells = gd.cell_values(solution.u[-1])
    v_cells = gd.cell_values(solution.v[-1])
    with open(snap, "w", encoding="utf-8") as fh:
        fh.write("cell,x,y,u,v\n")
        for k in range(gd.n_cells):
            x, y = gd.value_points[k]
            fh.write(f"{k},{x:.10g},{y:.10g},{u_cells[k]:.10g},{v_cells[k]:.10g}\n")
    log = os.path.join(args.out, "solver_log.csv")
    with open(log, "w", encoding="utf-8") as fh:
        fh.write("level,step,picard_iters,residual\n")
        for n in range(grid.n_steps):
            fh.write(
                f"{n + 1},{grid.steps[n]:.10g},{solution.picard_iters[n]},"
                f"{solution.increments[n]:.10g}\n"
            )
    print(f"wrote {snap} and {log}")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "converge": _cmd_converge,
        "diagnose": _cmd_diagnose,
        "solve": _cmd_solve,
    }
    try:
        return handlers[args.command](args)
    except NonconvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (MeshParseError, MeshValidationError, StepSizeError, ValueError, RdgdmError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
