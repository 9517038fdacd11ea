"""Shared construction helpers for the test suite."""

from __future__ import annotations

import numpy as np

from cuspfem import (
    DiscreteFunction,
    Problem,
    StabilizationProfile,
    gauss_rule,
)
from cuspfem.assembly import _ref_basis


def patch_problem(eps: float = 1.0, degree: int = 2) -> Problem:
    """
    Problem with a = -x, c = 1 whose exact solution is a polynomial of the
    given degree vanishing at +-1, with f synthesized in closed form.
    Degree 2: u = 1 - x^2.  Degree 3: u = x - x^3.
    """
    if degree == 2:
        u = lambda x: 1.0 - x * x
        du = lambda x: -2.0 * x
        ddu = lambda x: -2.0 + 0.0 * x
    elif degree == 3:
        u = lambda x: x - x ** 3
        du = lambda x: 1.0 - 3.0 * x * x
        ddu = lambda x: -6.0 * x
    else:
        raise ValueError(f"unsupported patch degree {degree}")
    return Problem(
        eps=eps,
        coeff_a=lambda x: -x,
        coeff_b=lambda x: np.ones_like(x),
        coeff_c=lambda x: np.ones_like(x),
        rhs_f=lambda x: -eps * ddu(x) - x * du(x) + u(x),
        lambda_bar=1.0,
        exact=u,
        exact_dx=du,
        exact_dxx=ddu,
        coeff_a_dx=lambda x: -np.ones_like(x),
        name="patch",
    )


def near_zero_coefficient_problem(eps: float = 1.0) -> Problem:
    """
    Effectively pure-diffusion data: b and c are positive but so small
    (1e-280) that convection and reaction are negligible, f = 0.  Used to
    probe the eps-weighted stiffness part of the assembled matrix.
    """
    tiny = 1e-280
    return Problem(
        eps=eps,
        coeff_a=lambda x: -tiny * x,
        coeff_b=lambda x: np.full_like(x, tiny),
        coeff_c=lambda x: np.full_like(x, tiny),
        rhs_f=lambda x: np.zeros_like(x),
        lambda_bar=1.0,
        coeff_a_dx=lambda x: np.full_like(x, -tiny),
        name="near-zero",
    )


def zero_stab(mesh) -> StabilizationProfile:
    n = mesh.n_intervals
    return StabilizationProfile(np.zeros(n), 1.0, "standard", np.zeros(n, dtype=bool))


def bands_to_dense(system) -> np.ndarray:
    k, n = system.halfwidth, system.dimension
    dense = np.zeros((n, n))
    for j in range(n):
        for i in range(max(0, j - k), min(n, j + k + 1)):
            dense[i, j] = system.bands[k + i - j, j]
    return dense


def discrete_l2(fn: DiscreteFunction) -> float:
    """L2 norm of a discrete function by exact per-element Gauss quadrature."""
    rule = gauss_rule(fn.order + 1)
    V, _, _ = _ref_basis(fn.order, fn.family).tables(rule.points)
    k = fn.order
    nel = fn.mesh.n_intervals
    idx = np.arange(nel)[:, None] * k + np.arange(k + 1)[None, :]
    vals = fn.coefficients[idx] @ V
    return float(np.sqrt(np.sum(rule.weights[None, :] * fn.mesh.lengths[:, None] * vals ** 2)))


def weak_form_on_exact(problem: Problem, mesh, k: int, family: str, points: int, panels: int):
    """
    Vector g with g[i] = B(u, phi_i) = (eps u', phi_i') + (a u', phi_i)
    + (c u, phi_i), integrated with a composite Gauss rule, boundary rows
    dropped.  Independent of the assembly code path.
    """
    rule = gauss_rule(points)
    pts = (np.arange(panels)[:, None] / panels + rule.points[None, :] / panels).ravel()
    wts = np.tile(rule.weights / panels, panels)
    V, D1, _ = _ref_basis(k, family).tables(pts)
    h = mesh.lengths
    xq = mesh.nodes[:-1, None] + h[:, None] * pts[None, :]
    wq = wts[None, :] * h[:, None]
    up = problem.exact_dx(xq)
    integrand_dphi = problem.eps * up * wq / h[:, None]       # pairs with phi_i'
    integrand_phi = (problem.coeff_a(xq) * up + problem.coeff_c(xq) * problem.exact(xq)) * wq
    loc = integrand_dphi @ D1.T + integrand_phi @ V.T          # (nel, k+1)
    g = np.zeros(mesh.n_intervals * k + 1)
    for ii in range(k + 1):
        np.add.at(g, np.arange(mesh.n_intervals) * k + ii, loc[:, ii])
    return g[1:-1]
