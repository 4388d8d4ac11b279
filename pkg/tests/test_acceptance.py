"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; the whole suite is sized for a desk machine.
"""

import math
import time

import numpy as np
import pytest

from rdgdm.exceptions import StepSizeError
from rdgdm.gdcore import (
    AFFINE_FIELD_PROBES,
    PROBE_SINE,
    compute_sd,
    compute_wd,
    estimate_cd,
    interpolate_initial,
)
from rdgdm.harness import emit_report, run_convergence
from rdgdm.hmm import build_hmm, build_p1
from rdgdm.mesh import cartesian_grid, generate_family
from rdgdm.problems import anis_mms, heat_sanity
from rdgdm.rdsolver import (
    PicardConfig,
    TimeGrid,
    march,
    max_stable_dt,
    picard_step,
    product_norm,
    solve_step,
)

# Reference benchmark values: triangular meshes, h = 1/8 .. 1/64.
TABLE_H = (0.125, 0.0625, 0.03125, 0.015625)
TABLE_ERR_U = (0.004738288, 0.0013162825, 0.0004082468, 0.0001064975)
TABLE_ERR_V = (0.005458805, 0.001343458, 0.000356627, 0.000105361)
TABLE_ERR_GU = (0.069660264, 0.035359614, 0.0176641949, 0.0088303991)
TABLE_ERR_GV = (0.076321506, 0.035358391, 0.0176643386, 0.008830754)


def _verdict(criterion, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


@pytest.fixture(scope="module")
def anis():
    return anis_mms()


@pytest.fixture(scope="module")
def benchmark_report(anis):
    start = time.perf_counter()
    report = run_convergence(
        anis,
        scheme="hmm",
        family="triangular",
        levels=4,
        dt_scaling="quadratic",
    )
    report.elapsed = time.perf_counter() - start
    return report


def test_criterion_1_benchmark_rates_and_magnitudes(benchmark_report):
    report = benchmark_report
    ok = tuple(report.h) == TABLE_H
    detail = [f"h={report.h}"]

    grad_rates = report.rates("err_gu") + report.rates("err_gv")
    ok &= all(0.85 <= r <= 1.15 for r in grad_rates)
    detail.append("grad rates " + ", ".join(f"{r:.3f}" for r in grad_rates))

    l2_rates = report.rates("err_u") + report.rates("err_v")
    ok &= all(r >= 1.6 for r in l2_rates)
    detail.append("L2 rates " + ", ".join(f"{r:.3f}" for r in l2_rates))

    factors = []
    for ours, reference in (
        (report.err_u, TABLE_ERR_U),
        (report.err_v, TABLE_ERR_V),
        (report.err_gu, TABLE_ERR_GU),
        (report.err_gv, TABLE_ERR_GV),
    ):
        factors.extend(o / p for o, p in zip(ours, reference))
    ok &= all(1.0 / 5.0 <= f <= 5.0 for f in factors)
    detail.append(f"Table-1 factors in [{min(factors):.2f}, {max(factors):.2f}]")

    ok &= report.elapsed <= 600.0
    detail.append(f"runtime {report.elapsed:.0f}s")
    _verdict(1, ok, "; ".join(detail))


def test_criterion_2_hexagonal_monotone_decay(anis):
    report = run_convergence(
        anis, scheme="hmm", family="hexagonal", levels=3, dt_scaling="quadratic"
    )
    ok = True
    detail = []
    for key in ("err_u", "err_v", "err_gu", "err_gv"):
        errs = getattr(report, key)
        ok &= all(b < a for a, b in zip(errs, errs[1:]))
    detail.append("all four errors strictly decrease")
    grad_slopes = report.rates("err_gu") + report.rates("err_gv")
    ok &= all(s >= 0.9 for s in grad_slopes)
    detail.append("gradient slopes " + ", ".join(f"{s:.3f}" for s in grad_slopes))
    _verdict(2, ok, "; ".join(detail))


def test_criterion_3_theorem_shape_bound(anis):
    report = run_convergence(
        anis, scheme="hmm", family="triangular", levels=4, dt_scaling="linear"
    )
    quotients = [
        (report.err_u[i] + report.err_v[i] + report.err_gu[i] + report.err_gv[i])
        / report.h[i]
        for i in range(4)
    ]
    spread = max(quotients) / min(quotients)
    _verdict(
        3,
        spread <= 2.0,
        f"(sum of errors)/h quotients {['%.3f' % q for q in quotients]}, "
        f"spread {spread:.3f} <= 2",
    )


def test_criterion_4_contraction_bound(anis):
    problem = anis.clamped()
    gd = build_hmm(generate_family("triangular", 0))
    c_d = estimate_cd(gd)
    lam_sum = problem.lam1_bounds[0] + problem.lam2_bounds[0]
    bound_dt = max_stable_dt(
        problem.lipschitz, c_d, problem.lam1_bounds[0], problem.lam2_bounds[0]
    )
    dt = 0.5 * bound_dt
    factor = math.sqrt(2.0 * dt / lam_sum) * c_d * problem.lipschitz

    pts = gd.dof_points
    u0 = problem.u_ini(pts[:, 0], pts[:, 1])
    v0 = problem.v_ini(pts[:, 0], pts[:, 1])
    bnd = gd.boundary_indices
    u0[bnd] = problem.dirichlet_u(pts[bnd, 0], pts[bnd, 1], 0.0)
    v0[bnd] = problem.dirichlet_v(pts[bnd, 0], pts[bnd, 1], 0.0)
    state = (u0, v0)

    rng = np.random.default_rng(2024)
    idx = gd.interior_indices
    worst = 0.0
    for _ in range(20):
        w = np.zeros((2, gd.n_dofs))
        d = np.zeros((2, gd.n_dofs))
        w[:, idx] = rng.normal(size=(2, idx.size))
        d[:, idx] = 0.1 * rng.normal(size=(2, idx.size))
        ga = picard_step(gd, problem, state, (w[0], w[1]), dt, dt)
        gb = picard_step(gd, problem, state, (w[0] + d[0], w[1] + d[1]), dt, dt)
        ratio = product_norm(gd, gb[0] - ga[0], gb[1] - ga[1]) / product_norm(
            gd, d[0], d[1]
        )
        worst = max(worst, ratio)
    ok = worst <= factor + 1e-6

    refused = False
    try:
        solve_step(
            gd,
            problem,
            state,
            1.05 * bound_dt,
            1.05 * bound_dt,
            PicardConfig(contraction_guard=True),
        )
    except StepSizeError:
        refused = True
    ok &= refused
    _verdict(
        4,
        ok,
        f"worst ratio {worst:.3e} <= factor {factor:.3f}; oversized step refused",
    )


def test_criterion_5_oracle_equivalence():
    import dataclasses

    heat = heat_sanity()
    linear = dataclasses.replace(
        heat,
        name="linear-decay",
        f1=lambda u, v: -u,
        f2=lambda u, v: -v,
        lipschitz=1.0,
        T=1.0,
        u_ini=lambda x, y: np.ones_like(x),
        v_ini=lambda x, y: np.ones_like(x),
        exact_u=None,
        exact_v=None,
        grad_u=None,
        grad_v=None,
    )
    gd1 = build_hmm(cartesian_grid(1))
    n_steps = 64
    sol = march(
        gd1,
        linear,
        TimeGrid.uniform(1.0, n_steps),
        PicardConfig(tol=1e-14, max_iter=300),
    )
    dt = 1.0 / n_steps
    ref = 1.0
    for _ in range(n_steps):
        ref = ref / (1.0 + dt * (1.0 + 8.0))  # hand-derived unit-cell stiffness
    recurrence_err = abs(sol.u[-1, 0] - ref)
    ok = recurrence_err <= 1e-12

    gd = build_hmm(generate_family("cartesian", 2))
    sol = march(gd, heat, TimeGrid.uniform(heat.T, 64))
    observed = gd.pi_norm(sol.u[-1]) / gd.pi_norm(sol.u[0])
    reference = math.exp(-2.0 * math.pi**2 * heat.T)
    decay_err = abs(observed - reference) / reference
    ok &= decay_err <= 0.10
    _verdict(
        5,
        ok,
        f"recurrence error {recurrence_err:.2e} <= 1e-12; "
        f"decay error {decay_err:.2%} <= 10%",
    )


def test_criterion_6_indicator_suite():
    gd = build_hmm(generate_family("cartesian", 0))
    c_d = estimate_cd(gd)
    rng = np.random.default_rng(99)
    idx = gd.interior_indices
    violations = 0
    for _ in range(100):
        w = np.zeros(gd.n_dofs)
        w[idx] = rng.normal(size=idx.size)
        if gd.pi_norm(w) > (c_d + 1e-8) * gd.grad_norm(w):
            violations += 1
    ok = violations == 0
    detail = [f"Poincare violations {violations}/100"]

    p1 = build_p1(generate_family("triangular", 0))
    w_d = max(compute_wd(p1, probe) for probe in AFFINE_FIELD_PROBES)
    ok &= w_d <= 1e-12
    detail.append(f"P1 conformity defect {w_d:.2e} <= 1e-12")

    worst_affine = 0.0
    rng = np.random.default_rng(100)
    for _ in range(20):
        a, gx, gy = rng.normal(size=3)
        w = interpolate_initial(gd, lambda x, y: a + gx * x + gy * y)
        grads = gd.grad_values(w.coeffs)
        worst_affine = max(worst_affine, np.abs(grads - np.array([gx, gy])).max())
    ok &= worst_affine <= 1e-12
    detail.append(f"affine-exactness defect {worst_affine:.2e} <= 1e-12")

    values = [
        compute_sd(build_hmm(generate_family("cartesian", level)), PROBE_SINE).value
        for level in range(4)
    ]
    ratios = [fine / coarse for coarse, fine in zip(values, values[1:])]
    ok &= all(0.3 <= r <= 0.7 for r in ratios)
    detail.append("S_D ratios " + ", ".join(f"{r:.3f}" for r in ratios))
    _verdict(6, ok, "; ".join(detail))


def test_criterion_7_deterministic_csv(tmp_path, anis):
    outputs = []
    for run in range(2):
        report = run_convergence(
            anis, scheme="hmm", family="triangular", levels=2, dt_scaling="quadratic"
        )
        paths = emit_report(report, tmp_path / f"run{run}")
        outputs.append(open(paths["csv"], "rb").read())
    ok = outputs[0] == outputs[1]
    _verdict(7, ok, f"two runs, identical CSV bytes ({len(outputs[0])} bytes)")
