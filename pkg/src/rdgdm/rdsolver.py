"""Implicit Euler time stepping of the coupled scheme with a fixed-point inner loop.

Each step freezes the reaction arguments, which decouples the two species into
a pair of SPD linear systems; iterating that map is a contraction whenever the
step size stays below 2 / (L^2 C_D^2 (lam1_min + lam2_min)).  Boundary DOFs are
pinned to the Dirichlet trace at each step and their contribution moved to the
right-hand side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import NonconvergenceError, StepSizeError
from .gdcore import estimate_cd


@dataclass
class TimeGrid:
    """Strictly increasing time levels from 0 to T."""

    times: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or len(self.times) < 1:
            raise ValueError("time grid needs at least the initial level")
        if self.times[0] != 0.0:
            raise ValueError("time grid must start at 0")
        steps = np.diff(self.times)
        if len(steps) and steps.min() <= 0.0:
            raise ValueError("time levels must be strictly increasing")
        if abs(steps.sum() - (self.times[-1] - self.times[0])) > 1e-12:
            raise ValueError("steps do not sum to the final time")

    @classmethod
    def uniform(cls, final_time, n_steps):
        return cls(np.linspace(0.0, final_time, n_steps + 1))

    @property
    def n_steps(self):
        return len(self.times) - 1

    @property
    def steps(self):
        return np.diff(self.times)

    @property
    def dt_max(self):
        return float(self.steps.max()) if self.n_steps else 0.0

    @property
    def final_time(self):
        return float(self.times[-1])


@dataclass
class PicardConfig:
    """Inner-loop controls for one implicit step.

    ``tol`` bounds the product norm |grad du| + |grad dv| of successive
    iterates; ``linear_solver`` is 'direct' (sparse LU) or 'cg'
    (Jacobi-preconditioned conjugate gradients).
    """

    tol: float = 1e-10
    max_iter: int = 100
    contraction_guard: bool = False
    linear_solver: str = "direct"

    def __post_init__(self):
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.linear_solver not in ("direct", "cg"):
            raise ValueError("linear_solver must be 'direct' or 'cg'")


@dataclass
class SpaceTimeSolution:
    """DOF trajectories of both species on a time grid.

    ``u`` and ``v`` have shape (n_steps + 1, n_dofs); row 0 holds the
    interpolated initial data with the Dirichlet lift applied.
    """

    gd: object
    grid: TimeGrid
    u: np.ndarray
    v: np.ndarray
    picard_iters: np.ndarray = field(default=None)
    increments: np.ndarray = field(default=None)

    def __post_init__(self):
        expect = (self.grid.n_steps + 1, self.gd.n_dofs)
        if self.u.shape != expect or self.v.shape != expect:
            raise ValueError(f"solution arrays must have shape {expect}")

    def fields(self, n):
        from .gdcore import DiscreteField

        return DiscreteField(self.gd, self.u[n]), DiscreteField(self.gd, self.v[n])


def max_stable_dt(lipschitz, c_d, lam1_min, lam2_min):
    """Largest step size with a guaranteed contractive fixed-point map.

    Returns 2 / (L^2 C_D^2 (lam1_min + lam2_min)); a zero Lipschitz constant
    (no reactions) gives an unconditional +inf.
    """
    if lipschitz < 0.0 or c_d <= 0.0 or lam1_min <= 0.0 or lam2_min <= 0.0:
        raise ValueError("contraction bound needs nonnegative L and positive c_d, lambda bounds")
    if lipschitz == 0.0:
        return math.inf
    return 2.0 / (lipschitz ** 2 * c_d ** 2 * (lam1_min + lam2_min))


def product_norm(gd, du, dv):
    """Norm of a pair in the zero-boundary product space: |grad du| + |grad dv|."""
    return gd.grad_norm(du) + gd.grad_norm(dv)


class _Assembler:
    """Per-(gd, problem) matrices and factorization cache for the stepper."""

    def __init__(self, gd, problem):
        self.gd = gd
        self.problem = problem
        idx = gd.interior_indices
        bnd = gd.boundary_indices
        self.idx = idx
        self.bnd = bnd

        M = gd.pi_gram()
        self.M_int = M[idx].tocsr()                 # interior rows, all columns
        self.M_ii = self.M_int[:, idx].tocsr()
        self.M_ib = self.M_int[:, bnd].tocsr()

        xc, yc = gd.value_points[:, 0], gd.value_points[:, 1]
        self.xc, self.yc = xc, yc
        self.K = {}
        for which, lam in (("u", problem.lambda1), ("v", problem.lambda2)):
            tensors = lam(xc, yc)                   # (n_cells, 2, 2)
            per_region = tensors[gd.grad_cell] * gd.grad_weights[:, None, None]
            n = gd.n_grad_regions
            r0 = 2 * np.arange(n)
            rows = np.concatenate((r0, r0, r0 + 1, r0 + 1))
            cols = np.concatenate((r0, r0 + 1, r0, r0 + 1))
            vals = np.concatenate(
                (
                    per_region[:, 0, 0],
                    per_region[:, 0, 1],
                    per_region[:, 1, 0],
                    per_region[:, 1, 1],
                )
            )
            block = sp.csr_matrix((vals, (rows, cols)), shape=(2 * n, 2 * n))
            K = (gd.Grad.T @ block @ gd.Grad).tocsr()
            K_int = K[idx]
            self.K[which] = (K_int[:, idx].tocsr(), K_int[:, bnd].tocsr())

        self.PiT_int = gd.Pi.T.tocsr()[idx]
        self.bnd_points = gd.dof_points[bnd]
        self._systems = {}
        self._factors = {}

    def trace(self, which, t):
        g = self.problem.dirichlet_u if which == "u" else self.problem.dirichlet_v
        return np.asarray(
            g(self.bnd_points[:, 0], self.bnd_points[:, 1], t), dtype=float
        )

    def system(self, which, dt):
        A = self._systems.get((which, dt))
        if A is None:
            K_ii, _ = self.K[which]
            A = self._systems[(which, dt)] = (self.M_ii / dt + K_ii).tocsr()
        return A

    def rhs(self, which, prev_full, frozen_cells, dt, t_next, lift):
        qw = self.gd.quad_weights
        if which == "u":
            react = self.problem.f1(*frozen_cells)
            src = self.problem.source_u(self.xc, self.yc, t_next)
        else:
            react = self.problem.f2(*frozen_cells)
            src = self.problem.source_v(self.xc, self.yc, t_next)
        b = self.M_int @ prev_full / dt + self.PiT_int @ (qw * (react + src))
        _, K_ib = self.K[which]
        b -= self.M_ib @ lift / dt + K_ib @ lift
        return b

    def solve(self, which, dt, b, linear_solver):
        if linear_solver == "direct":
            key = (which, dt)
            lu = self._factors.get(key)
            if lu is None:
                lu = self._factors[key] = spla.splu(self.system(which, dt).tocsc())
            return lu.solve(b)
        A = self.system(which, dt)
        precond = spla.LinearOperator(A.shape, matvec=lambda x: x / A.diagonal())
        x, info = spla.cg(A, b, rtol=1e-12, atol=0.0, M=precond, maxiter=10 * A.shape[0])
        if info != 0:
            raise NonconvergenceError(f"conjugate gradients failed (info={info})")
        return x


def _get_assembler(gd, problem):
    cache = gd._cache.setdefault("assemblers", {})
    entry = cache.get(id(problem))
    if entry is None or entry[0] is not problem:
        entry = (problem, _Assembler(gd, problem))
        cache[id(problem)] = entry
    return entry[1]


def assemble_linear_step(gd, problem, which, previous, frozen, dt, t_next):
    """One decoupled SPD system (A, b) on interior DOFs with frozen reactions.

    ``previous`` is the full DOF vector at the old level; ``frozen`` the pair
    of full DOF vectors whose reconstructions feed the reaction term.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    asm = _get_assembler(gd, problem)
    frozen_cells = (gd.cell_values(frozen[0]), gd.cell_values(frozen[1]))
    lift = asm.trace(which, t_next)
    A = asm.system(which, dt)
    b = asm.rhs(which, previous, frozen_cells, dt, t_next, lift)
    return A, b


def picard_step(gd, problem, state, frozen, dt, t_next, linear_solver="direct"):
    """One application of the frozen-reaction map: solve both linear systems.

    Returns the pair of full DOF vectors with the Dirichlet lift applied.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    asm = _get_assembler(gd, problem)
    u_prev, v_prev = state
    frozen_cells = (gd.cell_values(frozen[0]), gd.cell_values(frozen[1]))
    out = []
    for which, prev in (("u", u_prev), ("v", v_prev)):
        lift = asm.trace(which, t_next)
        b = asm.rhs(which, prev, frozen_cells, dt, t_next, lift)
        x = asm.solve(which, dt, b, linear_solver)
        full = np.zeros(gd.n_dofs)
        full[asm.idx] = x
        full[asm.bnd] = lift
        out.append(full)
    return out[0], out[1]


def _guard_dt(gd, problem, dt):
    c_d = gd._cache.get("c_d")
    if c_d is None:
        c_d = gd._cache["c_d"] = estimate_cd(gd)
    bound = max_stable_dt(
        problem.lipschitz, c_d, problem.lam1_bounds[0], problem.lam2_bounds[0]
    )
    if dt > bound:
        raise StepSizeError(
            f"dt = {dt:.6g} exceeds the contraction bound "
            f"2/(L^2 C_D^2 (lam1+lam2)) = {bound:.6g}"
        )


def solve_step(gd, problem, state, dt, t_next, cfg, stats=None):
    """Advance one level: iterate the frozen-reaction map to a fixed point.

    Starts from the previous state, stops when the product norm of successive
    iterates drops below ``cfg.tol``.  Returns (u, v, iterations); pass a dict
    as ``stats`` to receive the final increment.
    """
    if cfg.contraction_guard:
        _guard_dt(gd, problem, dt)
    w = state
    prev_inc = None
    for it in range(1, cfg.max_iter + 1):
        uv = picard_step(gd, problem, state, w, dt, t_next, cfg.linear_solver)
        inc = product_norm(gd, uv[0] - w[0], uv[1] - w[1])
        if inc <= cfg.tol:
            if stats is not None:
                stats["increment"] = inc
            return uv[0], uv[1], it
        prev_inc, w = inc, uv
    ratio = inc / prev_inc if prev_inc else math.nan
    raise NonconvergenceError(
        f"fixed-point loop did not reach tol={cfg.tol:g} in {cfg.max_iter} "
        f"iterations (last increment {inc:.3e})",
        last_ratio=ratio,
    )


def march(gd, problem, grid, cfg=None):
    """Step the coupled scheme across the whole grid.

    The initial level interpolates the initial data at the DOF points and
    applies the Dirichlet lift on boundary DOFs.  Deterministic given inputs.
    """
    if cfg is None:
        cfg = PicardConfig()
    asm = _get_assembler(gd, problem)
    n = gd.n_dofs
    u = np.empty((grid.n_steps + 1, n))
    v = np.empty((grid.n_steps + 1, n))
    pts = gd.dof_points
    u[0] = problem.u_ini(pts[:, 0], pts[:, 1])
    v[0] = problem.v_ini(pts[:, 0], pts[:, 1])
    u[0, asm.bnd] = asm.trace("u", 0.0)
    v[0, asm.bnd] = asm.trace("v", 0.0)

    iters = np.zeros(grid.n_steps, dtype=int)
    incs = np.zeros(grid.n_steps)
    for n_level in range(grid.n_steps):
        dt = grid.times[n_level + 1] - grid.times[n_level]
        stats = {}
        try:
            un, vn, it = solve_step(
                gd, problem, (u[n_level], v[n_level]), dt,
                grid.times[n_level + 1], cfg, stats=stats,
            )
        except NonconvergenceError as exc:
            raise NonconvergenceError(
                f"time level {n_level + 1}: {exc}", last_ratio=exc.last_ratio
            ) from exc
        u[n_level + 1] = un
        v[n_level + 1] = vn
        iters[n_level] = it
        incs[n_level] = stats.get("increment", 0.0)
    return SpaceTimeSolution(gd=gd, grid=grid, u=u, v=v, picard_iters=iters, increments=incs)


def scheme_residual(gd, problem, state, new, dt, t_next):
    """Max nonlinear residual of the step equations over interior basis fields."""
    asm = _get_assembler(gd, problem)
    u_prev, v_prev = state
    u_new, v_new = new
    cells = (gd.cell_values(u_new), gd.cell_values(v_new))
    out = []
    for which, prev, cur in (("u", u_prev, u_new), ("v", v_prev, v_new)):
        K_ii, K_ib = asm.K[which]
        lhs = asm.M_int @ (cur - prev) / dt + K_ii @ cur[asm.idx] + K_ib @ cur[asm.bnd]
        qw = gd.quad_weights
        if which == "u":
            react = problem.f1(*cells)
            src = problem.source_u(asm.xc, asm.yc, t_next)
        else:
            react = problem.f2(*cells)
            src = problem.source_v(asm.xc, asm.yc, t_next)
        rhs = asm.PiT_int @ (qw * (react + src))
        out.append(float(np.abs(lhs - rhs).max()))
    return tuple(out)
