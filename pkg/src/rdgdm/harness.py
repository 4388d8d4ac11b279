"""Refinement sweeps: error norms, observed rates, CSV tables and plots.

Error conventions follow the benchmark layout: relative space L2 errors are
maximized over time levels, gradient errors use the step-weighted
root-sum-square over levels, and rates between consecutive refinements are
log(e_l / e_{l+1}) / log(h_l / h_{l+1}).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import NormalizationError
from .gdcore import initial_interpolation_error
from .hmm import build_scheme
from .mesh import generate_family
from .rdsolver import PicardConfig, TimeGrid, march


class ErrorNorms(NamedTuple):
    err_u_l2: float
    err_v_l2: float
    err_gu: float
    err_gv: float
    e0_u: float
    e0_v: float


def error_norms(gd, grid, solution, problem):
    """Discrete space-time error norms of a solution against the exact pair.

    Values are compared at cell centroids, gradients at the gradient-region
    centroids, matching the one-point quadrature of the discretisation.
    """
    if not problem.has_exact:
        raise ValueError(f"problem {problem.name!r} has no exact solution")
    qw = gd.quad_weights
    gw = gd.grad_weights
    xc, yc = gd.value_points[:, 0], gd.value_points[:, 1]
    xg, yg = gd.grad_points[:, 0], gd.grad_points[:, 1]

    rel_u = rel_v = 0.0
    for n, t in enumerate(grid.times):
        for exact, data, which in (
            (problem.exact_u, solution.u, "u"),
            (problem.exact_v, solution.v, "v"),
        ):
            vals = exact(xc, yc, t)
            den = math.sqrt(qw @ (vals * vals))
            if den == 0.0:
                raise NormalizationError(
                    f"exact {which} has zero norm at t={t:g}"
                )
            diff = vals - gd.cell_values(data[n])
            rel = math.sqrt(qw @ (diff * diff)) / den
            if which == "u":
                rel_u = max(rel_u, rel)
            else:
                rel_v = max(rel_v, rel)

    num_gu = den_gu = num_gv = den_gv = 0.0
    for n in range(grid.n_steps):
        t = grid.times[n + 1]
        dt = grid.times[n + 1] - grid.times[n]
        for exact_grad, data, is_u in (
            (problem.grad_u, solution.u, True),
            (problem.grad_v, solution.v, False),
        ):
            ge = exact_grad(xg, yg, t)
            diff = ge - gd.grad_values(data[n + 1])
            num = dt * (gw @ (diff * diff).sum(axis=1))
            den = dt * (gw @ (ge * ge).sum(axis=1))
            if is_u:
                num_gu += num
                den_gu += den
            else:
                num_gv += num
                den_gv += den
    if den_gu == 0.0 or den_gv == 0.0:
        raise NormalizationError("exact gradient has zero space-time norm")

    return ErrorNorms(
        err_u_l2=rel_u,
        err_v_l2=rel_v,
        err_gu=math.sqrt(num_gu / den_gu),
        err_gv=math.sqrt(num_gv / den_gv),
        e0_u=initial_interpolation_error(gd, problem.u_ini),
        e0_v=initial_interpolation_error(gd, problem.v_ini),
    )


def observed_rate(e_coarse, e_fine, h_coarse, h_fine):
    """Convergence order between two refinements."""
    return math.log(e_coarse / e_fine) / math.log(h_coarse / h_fine)


_ERROR_KEYS = ("err_u", "err_v", "err_gu", "err_gv")


@dataclass
class ConvergenceReport:
    """Per-level errors of one refinement sweep plus observed rates."""

    problem: str
    scheme: str
    family: str
    dt_scaling: str
    h: list = field(default_factory=list)
    n_steps: list = field(default_factory=list)
    n_dofs: list = field(default_factory=list)
    err_u: list = field(default_factory=list)
    err_v: list = field(default_factory=list)
    err_gu: list = field(default_factory=list)
    err_gv: list = field(default_factory=list)
    e0_u: list = field(default_factory=list)
    e0_v: list = field(default_factory=list)

    @property
    def n_levels(self):
        return len(self.h)

    def add_level(self, h, n_steps, n_dofs, norms):
        if self.h and h >= self.h[-1]:
            raise ValueError("levels must be added with decreasing h")
        self.h.append(h)
        self.n_steps.append(n_steps)
        self.n_dofs.append(n_dofs)
        self.err_u.append(norms.err_u_l2)
        self.err_v.append(norms.err_v_l2)
        self.err_gu.append(norms.err_gu)
        self.err_gv.append(norms.err_gv)
        self.e0_u.append(norms.e0_u)
        self.e0_v.append(norms.e0_v)

    def rates(self, key):
        """Observed orders of one error column between consecutive levels."""
        errs = getattr(self, key)
        return [
            observed_rate(errs[i], errs[i + 1], self.h[i], self.h[i + 1])
            for i in range(len(errs) - 1)
        ]


def run_convergence(
    problem,
    scheme="hmm",
    family="triangular",
    levels=4,
    dt_scaling="quadratic",
    cfg=None,
    stab_coeff=1.0,
    base_steps=8,
):
    """Refinement sweep: mesh + discretisation per level, march, error norms.

    The step count grows with refinement as (h0/h)^p with p = 1 (linear) or 2
    (quadratic), starting from ``base_steps`` at level 0; quadratic keeps the
    implicit-Euler error subdominant to the spatial one so observed rates are
    spatial.  Deterministic given inputs.
    """
    if levels < 2:
        raise ValueError("a convergence study needs at least 2 levels")
    if dt_scaling not in ("linear", "quadratic"):
        raise ValueError("dt_scaling must be 'linear' or 'quadratic'")
    if cfg is None:
        cfg = PicardConfig()
    power = 1 if dt_scaling == "linear" else 2

    report = ConvergenceReport(
        problem=problem.name, scheme=scheme, family=family, dt_scaling=dt_scaling
    )
    h0 = None
    for level in range(levels):
        mesh = generate_family(family, level)
        gd = build_scheme(scheme, mesh, stab_coeff=stab_coeff)
        if h0 is None:
            h0 = mesh.h_m
        n_steps = max(1, round(base_steps * (h0 / mesh.h_m) ** power))
        grid = TimeGrid.uniform(problem.T, n_steps)
        solution = march(gd, problem, grid, cfg)
        norms = error_norms(gd, grid, solution, problem)
        report.add_level(mesh.h_m, n_steps, gd.n_dofs, norms)
    return report


def _format_csv(report):
    header = "h,err_u,rate_u,err_v,rate_v,err_gu,rate_gu,err_gv,rate_gv,e0_u,e0_v"
    rates = {k: report.rates(k) for k in _ERROR_KEYS}
    lines = [header]
    for i in range(report.n_levels):
        cells = [f"{report.h[i]:.10g}"]
        for key in _ERROR_KEYS:
            cells.append(f"{getattr(report, key)[i]:.10g}")
            cells.append(f"{rates[key][i]:.10g}" if i < report.n_levels - 1 else "")
        cells.append(f"{report.e0_u[i]:.10g}")
        cells.append(f"{report.e0_v[i]:.10g}")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def emit_report(report, out_dir):
    """Write report.csv and a log-log convergence plot; returns the paths."""
    if report.n_levels == 0:
        raise ValueError("cannot emit an empty report")
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "report.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(_format_csv(report))

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 5))
    h = np.asarray(report.h)
    labels = {
        "err_u": "u, L2 in space",
        "err_v": "v, L2 in space",
        "err_gu": "grad u",
        "err_gv": "grad v",
    }
    for key, marker in zip(_ERROR_KEYS, "os^v"):
        ax.loglog(h, getattr(report, key), marker=marker, label=labels[key])
    emax = max(max(getattr(report, k)) for k in _ERROR_KEYS)
    ax.loglog(h, emax * (h / h[0]), "k--", lw=0.8, label="slope 1")
    ax.loglog(h, emax * (h / h[0]) ** 2, "k:", lw=0.8, label="slope 2")
    ax.set_xlabel("mesh size h")
    ax.set_ylabel("relative error")
    ax.set_title(
        f"{report.problem} / {report.scheme} on {report.family} meshes"
    )
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    plot_path = os.path.join(out_dir, "convergence.png")
    fig.savefig(plot_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return {"csv": csv_path, "plot": plot_path}


def parse_report_csv(path):
    """Read back an emitted CSV as {column: list of floats} (blanks skipped)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        columns = {name: [] for name in header}
        for line in fh:
            for name, cell in zip(header, line.strip().split(",")):
                if cell:
                    columns[name].append(float(cell))
    return columns
