"""Gradient discretisation core.

A discretisation is described by sparse linear maps: ``Pi`` reconstructs
piecewise-constant cell values from DOF vectors, ``Grad`` reconstructs
piecewise-constant gradients on the gradient quadrature regions (mesh cells
for conforming P1, cell/face sub-triangles for the hybrid scheme), and the
initial-data interpolator samples functions at per-DOF points.  All L2
quantities use one-point quadrature: cell areas for reconstructed values,
region areas for gradients.

The module also provides the three computable quality indicators: the
coercivity constant (largest generalized Rayleigh quotient of the two Gram
matrices), the best-approximation error of smooth functions, and the
integration-by-parts conformity defect of vector fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import LinAlgError, eigh

from .exceptions import DefinitenessError

DENSE_EIG_LIMIT = 400  # interior-DOF count below which eigensolves go dense


@dataclass
class GradientDiscretisation:
    """Discrete space plus reconstruction operators as sparse maps.

    ``interior_mask`` marks the DOFs spanning the zero-boundary subspace;
    boundary DOFs exist to carry non-homogeneous Dirichlet data.  DOF
    ``i`` of the interpolation operator samples functions at
    ``dof_points[i]``.
    """

    name: str
    mesh: object
    n_dofs: int
    interior_mask: np.ndarray      # (n_dofs,) bool
    Pi: sp.csr_matrix              # (n_cells, n_dofs)
    Grad: sp.csr_matrix            # (2 * n_grad_regions, n_dofs), xy interleaved
    quad_weights: np.ndarray       # (n_cells,) cell areas
    dof_points: np.ndarray         # (n_dofs, 2) sampling points of the interpolator
    value_points: np.ndarray       # (n_cells, 2) cell centroids
    grad_weights: np.ndarray       # (n_grad_regions,) region areas
    grad_points: np.ndarray        # (n_grad_regions, 2) region centroids
    grad_cell: np.ndarray          # (n_grad_regions,) parent cell of each region
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_cells(self):
        return len(self.quad_weights)

    @property
    def n_grad_regions(self):
        return len(self.grad_weights)

    @property
    def interior_indices(self):
        idx = self._cache.get("interior_indices")
        if idx is None:
            idx = self._cache["interior_indices"] = np.flatnonzero(self.interior_mask)
        return idx

    @property
    def boundary_indices(self):
        idx = self._cache.get("boundary_indices")
        if idx is None:
            idx = self._cache["boundary_indices"] = np.flatnonzero(~self.interior_mask)
        return idx

    # -- Gram matrices ------------------------------------------------------

    def pi_gram(self):
        """Pi^T W Pi over all DOFs."""
        M = self._cache.get("pi_gram")
        if M is None:
            W = sp.diags(self.quad_weights)
            M = self._cache["pi_gram"] = (self.Pi.T @ W @ self.Pi).tocsr()
        return M

    def grad_gram(self):
        """Grad^T W2 Grad over all DOFs."""
        G = self._cache.get("grad_gram")
        if G is None:
            W2 = sp.diags(np.repeat(self.grad_weights, 2))
            G = self._cache["grad_gram"] = (self.Grad.T @ W2 @ self.Grad).tocsr()
        return G

    def _interior(self, A, key):
        Ai = self._cache.get(key)
        if Ai is None:
            idx = self.interior_indices
            Ai = self._cache[key] = A[idx][:, idx].tocsr()
        return Ai

    def pi_gram_interior(self):
        return self._interior(self.pi_gram(), "pi_gram_int")

    def grad_gram_interior(self):
        return self._interior(self.grad_gram(), "grad_gram_int")

    # -- reconstructions and norms ------------------------------------------

    def cell_values(self, coeffs):
        return self.Pi @ coeffs

    def grad_values(self, coeffs):
        return (self.Grad @ coeffs).reshape(-1, 2)

    def pi_norm(self, coeffs):
        vals = self.cell_values(coeffs)
        return float(np.sqrt(self.quad_weights @ (vals * vals)))

    def grad_norm(self, coeffs):
        g = self.grad_values(coeffs)
        return float(np.sqrt(self.grad_weights @ (g * g).sum(axis=1)))


@dataclass
class DiscreteField:
    """Coefficient vector attached to its discretisation."""

    gd: GradientDiscretisation
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.gd.n_dofs,):
            raise ValueError(
                f"coefficient vector has length {self.coeffs.shape}, "
                f"expected ({self.gd.n_dofs},)"
            )


@dataclass(frozen=True)
class ScalarProbe:
    """Smooth test function with gradient, vanishing on the boundary."""

    name: str
    f: Callable
    grad: Callable  # (x, y) -> (n, 2)


@dataclass(frozen=True)
class FieldProbe:
    """Smooth vector field with divergence, for conformity testing."""

    name: str
    psi: Callable  # (x, y) -> (n, 2)
    div: Callable  # (x, y) -> (n,)


def _sine_grad(x, y):
    pi = np.pi
    return np.column_stack(
        (pi * np.cos(pi * x) * np.sin(pi * y), pi * np.sin(pi * x) * np.cos(pi * y))
    )


PROBE_SINE = ScalarProbe(
    "sine", lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y), _sine_grad
)
PROBE_BUBBLE = ScalarProbe(
    "bubble",
    lambda x, y: x * (1 - x) * y * (1 - y),
    lambda x, y: np.column_stack(((1 - 2 * x) * y * (1 - y), x * (1 - x) * (1 - 2 * y))),
)

# Affine field probes: one-point quadrature integrates them exactly, so a
# conforming scheme must produce a zero conformity defect on these.
PROBE_CONST = FieldProbe(
    "const",
    lambda x, y: np.column_stack((np.ones_like(x), np.ones_like(x))),
    lambda x, y: np.zeros_like(x),
)
PROBE_ROT = FieldProbe(
    "rot",
    lambda x, y: np.column_stack((y, -x)),
    lambda x, y: np.zeros_like(x),
)
PROBE_SHEAR = FieldProbe(
    "shear",
    lambda x, y: np.column_stack((x + 2 * y, 3 * x - y)),
    lambda x, y: np.zeros_like(x),
)
PROBE_DILATE = FieldProbe(
    "dilate",
    lambda x, y: np.column_stack((x, y)),
    lambda x, y: np.full_like(x, 2.0),
)

SCALAR_PROBES = (PROBE_SINE, PROBE_BUBBLE)
AFFINE_FIELD_PROBES = (PROBE_CONST, PROBE_ROT, PROBE_SHEAR, PROBE_DILATE)


@dataclass
class GdDiagnostics:
    """Computed quality indicators of one discretisation."""

    c_d: float
    s_d_samples: dict
    w_d_samples: dict

    def __post_init__(self):
        if self.c_d < 0:
            raise ValueError("coercivity constant must be nonnegative")
        if any(v < 0 for v in self.s_d_samples.values()):
            raise ValueError("approximation-error samples must be nonnegative")
        if any(v < 0 for v in self.w_d_samples.values()):
            raise ValueError("conformity samples must be nonnegative")


class SdResult(NamedTuple):
    value: float
    pi_part: float
    grad_part: float


def l2_inner(gd, a, b):
    """Domain inner product of two per-cell value arrays (one-point rule)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (gd.n_cells,) or b.shape != (gd.n_cells,):
        raise ValueError(
            f"cellwise arrays must have shape ({gd.n_cells},), "
            f"got {a.shape} and {b.shape}"
        )
    return float(gd.quad_weights @ (a * b))


def estimate_cd(gd, tol=1e-10):
    """Coercivity constant: the norm of Pi relative to Grad on interior DOFs.

    Square root of the largest eigenvalue of M w = mu G w, where M and G are
    the value and gradient Gram matrices restricted to interior DOFs.  Dense
    below DENSE_EIG_LIMIT interior DOFs, Lanczos (deterministic start vector)
    above.
    """
    idx = gd.interior_indices
    if idx.size == 0:
        raise DefinitenessError("discretisation has no interior DOFs")
    M = gd.pi_gram_interior()
    G = gd.grad_gram_interior()
    try:
        if idx.size < DENSE_EIG_LIMIT:
            mu = eigh(
                M.toarray(), G.toarray(), eigvals_only=True,
                subset_by_index=[idx.size - 1, idx.size - 1],
            )[0]
        else:
            v0 = np.full(idx.size, 1.0 / np.sqrt(idx.size))
            mu = spla.eigsh(
                M, k=1, M=G, which="LM", v0=v0, tol=tol, maxiter=5000
            )[0][0]
    except (LinAlgError, spla.ArpackError) as exc:
        raise DefinitenessError(
            f"gradient Gram matrix is not positive definite: {exc}"
        ) from exc
    return float(np.sqrt(max(mu, 0.0)))


def _solve_spd(A, b, context):
    """Sparse solve with NaN screening; definiteness failures name the caller."""
    try:
        x = spla.spsolve(A.tocsc(), b)
    except RuntimeError as exc:
        raise DefinitenessError(f"{context}: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise DefinitenessError(f"{context}: singular system")
    return x


def project_pd(gd, probe):
    """Best-approximation projection of a smooth function onto interior DOFs.

    Minimizes the sum of squared value and gradient misfits; the normal
    equations use the (SPD) sum of the two Gram matrices.  Returns the
    minimizer as a DiscreteField supported on interior DOFs.
    """
    idx = gd.interior_indices
    xc, yc = gd.value_points[:, 0], gd.value_points[:, 1]
    xg, yg = gd.grad_points[:, 0], gd.grad_points[:, 1]
    target_vals = np.asarray(probe.f(xc, yc), dtype=float)
    target_grad = np.asarray(probe.grad(xg, yg), dtype=float)

    rhs_full = gd.Pi.T @ (gd.quad_weights * target_vals) + gd.Grad.T @ (
        np.repeat(gd.grad_weights, 2) * target_grad.ravel()
    )
    N = (gd.pi_gram_interior() + gd.grad_gram_interior()).tocsc()
    w_int = _solve_spd(N, rhs_full[idx], "projection normal equations")
    coeffs = np.zeros(gd.n_dofs)
    coeffs[idx] = w_int
    return DiscreteField(gd, coeffs)


def sd_objective(gd, coeffs, probe):
    """Square root of the value/gradient misfit split for a candidate field."""
    xc, yc = gd.value_points[:, 0], gd.value_points[:, 1]
    xg, yg = gd.grad_points[:, 0], gd.grad_points[:, 1]
    dv = gd.cell_values(coeffs) - probe.f(xc, yc)
    dg = gd.grad_values(coeffs) - probe.grad(xg, yg)
    pi_part = float(np.sqrt(gd.quad_weights @ (dv * dv)))
    grad_part = float(np.sqrt(gd.grad_weights @ (dg * dg).sum(axis=1)))
    return SdResult(float(np.hypot(pi_part, grad_part)), pi_part, grad_part)


def compute_sd(gd, probe):
    """Consistency indicator: optimal misfit of the projection, with its split."""
    w = project_pd(gd, probe)
    return sd_objective(gd, w.coeffs, probe)


def compute_wd(gd, probe):
    """Conformity indicator: dual norm of the integration-by-parts defect.

    Evaluates r(w) = int(Grad w . psi + Pi w . div psi) on interior DOFs and
    returns the G-dual norm sqrt(r^T G^-1 r).
    """
    idx = gd.interior_indices
    xg, yg = gd.grad_points[:, 0], gd.grad_points[:, 1]
    xc, yc = gd.value_points[:, 0], gd.value_points[:, 1]
    psi = np.asarray(probe.psi(xg, yg), dtype=float)
    div = np.asarray(probe.div(xc, yc), dtype=float)
    r_full = gd.Grad.T @ (np.repeat(gd.grad_weights, 2) * psi.ravel()) + gd.Pi.T @ (
        gd.quad_weights * div
    )
    r = r_full[idx]
    z = _solve_spd(gd.grad_gram_interior().tocsc(), r, "conformity dual solve")
    return float(np.sqrt(max(r @ z, 0.0)))


def interpolate_initial(gd, f):
    """Interpolate a function by sampling it at the per-DOF points."""
    pts = gd.dof_points
    return DiscreteField(gd, np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float))


def initial_interpolation_error(gd, f):
    """L2 distance between a function and the reconstruction of its interpolant."""
    w = interpolate_initial(gd, f)
    xc, yc = gd.value_points[:, 0], gd.value_points[:, 1]
    d = f(xc, yc) - gd.cell_values(w.coeffs)
    return float(np.sqrt(gd.quad_weights @ (d * d)))


def compute_diagnostics(gd, scalar_probes=SCALAR_PROBES, field_probes=AFFINE_FIELD_PROBES):
    """Assemble the full indicator report for one discretisation."""
    return GdDiagnostics(
        c_d=estimate_cd(gd),
        s_d_samples={p.name: compute_sd(gd, p).value for p in scalar_probes},
        w_d_samples={p.name: compute_wd(gd, p) for p in field_probes},
    )
