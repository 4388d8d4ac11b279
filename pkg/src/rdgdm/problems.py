"""Problem catalog: coupled two-species diffusion-reaction configurations.

Each problem packages the diffusion tensors with declared eigenvalue bounds,
the reaction pair with its Lipschitz constant (measured on a clamp box, since
the cubic reaction is only locally Lipschitz), initial/boundary data, and,
for manufactured benchmarks, the exact solution with gradients and the
closed-form source terms it induces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .gdcore import FieldProbe


@dataclass(frozen=True)
class ProblemSpec:
    """Data of one coupled reaction-diffusion configuration on (0,1)^2.

    Tensor callables map coordinate arrays to (n, 2, 2); scalar space-time
    callables take (x, y, t) with scalar t.  ``lipschitz`` is the declared
    joint constant max(L1, L2) of the reactions on the clamp box
    ``|u|, |v| <= clamp_box``.
    """

    name: str
    lambda1: Callable
    lambda2: Callable
    lam1_bounds: tuple
    lam2_bounds: tuple
    f1: Callable
    f2: Callable
    lipschitz: float
    clamp_box: float
    u_ini: Callable
    v_ini: Callable
    dirichlet_u: Callable
    dirichlet_v: Callable
    source_u: Callable
    source_v: Callable
    T: float
    exact_u: Optional[Callable] = None
    exact_v: Optional[Callable] = None
    grad_u: Optional[Callable] = None
    grad_v: Optional[Callable] = None

    @property
    def has_exact(self):
        return self.exact_u is not None

    def clamped(self):
        """Copy with reaction inputs hard-clamped to the declared box.

        The clamped reactions are globally Lipschitz with the declared
        constant, which is what the step-size guard assumes.
        """
        m = self.clamp_box
        f1, f2 = self.f1, self.f2

        def c(u):
            return np.clip(u, -m, m)

        return replace(
            self,
            name=self.name + "-clamped",
            f1=lambda u, v: f1(c(u), c(v)),
            f2=lambda u, v: f2(c(u), c(v)),
        )


def _zero_st(x, y, t):
    return np.zeros_like(x)


def _identity_tensor(x, y):
    out = np.zeros(np.shape(x) + (2, 2))
    out[..., 0, 0] = 1.0
    out[..., 1, 1] = 1.0
    return out


# ---------------------------------------------------------------------------
# anisotropic manufactured benchmark
# ---------------------------------------------------------------------------

_TH1 = 5.0 * math.pi / 12.0
_TH2 = math.pi / 3.0
_C1, _S1 = math.cos(_TH1), math.sin(_TH1)
_C2, _S2 = math.cos(_TH2), math.sin(_TH2)


def _g1(x, y):
    return 1.0 + 2.0 * x * x + y * y


def _g2(x, y):
    return 1.0 + x * x + 2.0 * y * y


def _anis_lambda1(x, y):
    g1, g2 = _g1(x, y), _g2(x, y)
    out = np.empty(np.shape(x) + (2, 2))
    out[..., 0, 0] = _C1 * _C1 * g1 + _S1 * _S1 * g2
    out[..., 0, 1] = out[..., 1, 0] = _C1 * _S1 * (g1 - g2)
    out[..., 1, 1] = _S1 * _S1 * g1 + _C1 * _C1 * g2
    return out


def _anis_lambda2(x, y):
    # second tensor swaps the diagonal profile: D2 = diag(g2, g1)
    g1, g2 = _g1(x, y), _g2(x, y)
    out = np.empty(np.shape(x) + (2, 2))
    out[..., 0, 0] = _C2 * _C2 * g2 + _S2 * _S2 * g1
    out[..., 0, 1] = out[..., 1, 0] = _C2 * _S2 * (g2 - g1)
    out[..., 1, 1] = _S2 * _S2 * g2 + _C2 * _C2 * g1
    return out


def _cubic(u):
    return u * (1.0 - u) * (u - 0.1)


def _anis_f1(u, v):
    return _cubic(u)


def _anis_f2(u, v):
    return u - v


def _exact_u(x, y, t):
    return np.exp(-t) * np.sin(np.pi * x) * np.sin(np.pi * y)


def _exact_v(x, y, t):
    return np.exp(-t) * np.cos(np.pi * x) * np.cos(np.pi * y)


def _grad_u(x, y, t):
    pi, e = np.pi, np.exp(-t)
    return np.column_stack(
        (
            pi * e * np.cos(pi * x) * np.sin(pi * y),
            pi * e * np.sin(pi * x) * np.cos(pi * y),
        )
    )


def _grad_v(x, y, t):
    pi, e = np.pi, np.exp(-t)
    return np.column_stack(
        (
            -pi * e * np.sin(pi * x) * np.cos(pi * y),
            -pi * e * np.cos(pi * x) * np.sin(pi * y),
        )
    )


def _div_lam1_grad_u(x, y, t):
    """Closed form of div(Lambda1 grad u) for the manufactured u."""
    pi, e = np.pi, np.exp(-t)
    sx, cx = np.sin(pi * x), np.cos(pi * x)
    sy, cy = np.sin(pi * y), np.cos(pi * y)
    u = e * sx * sy
    uxx = -pi * pi * u
    uyy = -pi * pi * u
    uxy = pi * pi * e * cx * cy
    ux = pi * e * cx * sy
    uy = pi * e * sx * cy

    g1, g2 = _g1(x, y), _g2(x, y)
    l11 = _C1 * _C1 * g1 + _S1 * _S1 * g2
    l12 = _C1 * _S1 * (g1 - g2)
    l22 = _S1 * _S1 * g1 + _C1 * _C1 * g2
    # dx l11 + dy l12 and dx l12 + dy l22, from dg1 = (4x, 2y), dg2 = (2x, 4y)
    cs = _C1 * _S1
    dl_x = 2.0 * x * (1.0 + _C1 * _C1) - 2.0 * cs * y
    dl_y = 2.0 * cs * x + 2.0 * y * (1.0 + _C1 * _C1)
    return l11 * uxx + 2.0 * l12 * uxy + l22 * uyy + dl_x * ux + dl_y * uy


def _div_lam2_grad_v(x, y, t):
    """Closed form of div(Lambda2 grad v) for the manufactured v."""
    pi, e = np.pi, np.exp(-t)
    sx, cx = np.sin(pi * x), np.cos(pi * x)
    sy, cy = np.sin(pi * y), np.cos(pi * y)
    v = e * cx * cy
    vxx = -pi * pi * v
    vyy = -pi * pi * v
    vxy = pi * pi * e * sx * sy
    vx = -pi * e * sx * cy
    vy = -pi * e * cx * sy

    g1, g2 = _g1(x, y), _g2(x, y)
    m11 = _C2 * _C2 * g2 + _S2 * _S2 * g1
    m12 = _C2 * _S2 * (g2 - g1)
    m22 = _S2 * _S2 * g2 + _C2 * _C2 * g1
    cs = _C2 * _S2
    dm_x = 2.0 * x * (1.0 + _S2 * _S2) + 2.0 * cs * y
    dm_y = -2.0 * cs * x + 2.0 * y * (1.0 + _S2 * _S2)
    return m11 * vxx + 2.0 * m12 * vxy + m22 * vyy + dm_x * vx + dm_y * vy


def _anis_source_u(x, y, t):
    u = _exact_u(x, y, t)
    return -u - _div_lam1_grad_u(x, y, t) - _anis_f1(u, _exact_v(x, y, t))


def _anis_source_v(x, y, t):
    u = _exact_u(x, y, t)
    v = _exact_v(x, y, t)
    return -v - _div_lam2_grad_v(x, y, t) - _anis_f2(u, v)


# Joint Lipschitz constant on the clamp box |u|,|v| <= 2: the cubic's
# derivative 3u^2 - 2.2u + 0.1 peaks at u = -2 (16.5); the linear coupling
# contributes sqrt(2).
_CLAMP = 2.0
_L_CUBIC = 16.5
_L_ANIS = max(_L_CUBIC, math.sqrt(2.0))


def anis_mms():
    """Anisotropic manufactured-solution benchmark on (0,1)^2, T = 1.

    Rotated variable-coefficient tensors (angles 5*pi/12 and pi/3 around
    profiles 1+2x^2+y^2 and 1+x^2+2y^2), cubic/linear reactions, exact pair
    (exp(-t) sin sin, exp(-t) cos cos) with the induced sources and
    non-homogeneous Dirichlet trace for the second species.
    """
    return ProblemSpec(
        name="anis-mms",
        lambda1=_anis_lambda1,
        lambda2=_anis_lambda2,
        lam1_bounds=(1.0, 4.0),
        lam2_bounds=(1.0, 4.0),
        f1=_anis_f1,
        f2=_anis_f2,
        lipschitz=_L_ANIS,
        clamp_box=_CLAMP,
        u_ini=lambda x, y: _exact_u(x, y, 0.0),
        v_ini=lambda x, y: _exact_v(x, y, 0.0),
        dirichlet_u=_exact_u,
        dirichlet_v=_exact_v,
        source_u=_anis_source_u,
        source_v=_anis_source_v,
        T=1.0,
        exact_u=_exact_u,
        exact_v=_exact_v,
        grad_u=_grad_u,
        grad_v=_grad_v,
    )


def anis_flux_probe():
    """Initial-time diffusive flux Lambda1 grad u as a conformity probe."""

    def psi(x, y):
        g = _grad_u(x, y, 0.0)
        lam = _anis_lambda1(x, y)
        return np.einsum("nij,nj->ni", lam, g)

    def div(x, y):
        return _div_lam1_grad_u(x, y, 0.0)

    return FieldProbe("aniso-flux", psi, div)


# ---------------------------------------------------------------------------
# reduced sanity problem and simulation-only demo
# ---------------------------------------------------------------------------

_DECAY = 2.0 * math.pi * math.pi


def _heat_exact(x, y, t):
    return np.exp(-_DECAY * t) * np.sin(np.pi * x) * np.sin(np.pi * y)


def _heat_grad(x, y, t):
    pi = np.pi
    e = np.exp(-_DECAY * t)
    return np.column_stack(
        (
            pi * e * np.cos(pi * x) * np.sin(pi * y),
            pi * e * np.sin(pi * x) * np.cos(pi * y),
        )
    )


def heat_sanity():
    """Decoupled isotropic heat pair with zero reactions and zero sources.

    Both species follow the separable decay exp(-2 pi^2 t) sin(pi x) sin(pi y)
    with homogeneous Dirichlet data; used as an independent oracle for the
    time stepper.
    """
    return ProblemSpec(
        name="heat-sanity",
        lambda1=_identity_tensor,
        lambda2=_identity_tensor,
        lam1_bounds=(1.0, 1.0),
        lam2_bounds=(1.0, 1.0),
        f1=lambda u, v: np.zeros_like(u),
        f2=lambda u, v: np.zeros_like(u),
        lipschitz=0.0,
        clamp_box=1.0,
        u_ini=lambda x, y: _heat_exact(x, y, 0.0),
        v_ini=lambda x, y: _heat_exact(x, y, 0.0),
        dirichlet_u=_zero_st,
        dirichlet_v=_zero_st,
        source_u=_zero_st,
        source_v=_zero_st,
        T=0.05,
        exact_u=_heat_exact,
        exact_v=_heat_exact,
        grad_u=_heat_grad,
        grad_v=_heat_grad,
    )


def fhn_demo():
    """Excitable-medium style demo: cubic/linear kinetics, weak diffusion.

    No exact solution; starts from a localized bump of the first species.
    """
    diff = 0.05

    def tensor(x, y):
        out = np.zeros(np.shape(x) + (2, 2))
        out[..., 0, 0] = diff
        out[..., 1, 1] = diff
        return out

    return ProblemSpec(
        name="fhn-demo",
        lambda1=tensor,
        lambda2=tensor,
        lam1_bounds=(diff, diff),
        lam2_bounds=(diff, diff),
        f1=_anis_f1,
        f2=_anis_f2,
        lipschitz=_L_ANIS,
        clamp_box=_CLAMP,
        u_ini=lambda x, y: np.exp(-((x - 0.5) ** 2 + (y - 0.5) ** 2) / 0.01),
        v_ini=lambda x, y: np.zeros_like(x),
        dirichlet_u=_zero_st,
        dirichlet_v=_zero_st,
        source_u=_zero_st,
        source_v=_zero_st,
        T=2.0,
    )


_CATALOG = {
    "anis-mms": anis_mms,
    "heat-sanity": heat_sanity,
    "fhn-demo": fhn_demo,
}


def get_problem(name):
    """Look up a catalog problem by CLI name."""
    try:
        return _CATALOG[name]()
    except KeyError:
        raise ValueError(
            f"unknown problem {name!r}; expected one of {sorted(_CATALOG)}"
        ) from None
