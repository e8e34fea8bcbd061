"""Integral Bochner identities, checked by quadrature on both sides."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .body import ConvexBody, HomogeneousPotential
from .errors import DomainError, SupportLeakage
from .euclidean import BoxGrid, build_box_grid, default_box, default_grading, normalized_weights, side_data
from .functions import TestFunction
from .measure import cone_measure, support_fields
from .sphere import Field, SphereGrid, spherical_derivatives

KINDS = ("euclidean", "hessian_dual", "sphere_centroaffine")
LEAK_TOL = 1e-12


def _relative(lhs, rhs):
    return abs(lhs - rhs) / max(abs(lhs) + abs(rhs), 1e-300)


def _check_leakage(u: TestFunction, grid: BoxGrid, logd_fn):
    """Reject u whose weighted size on the box faces is not negligible."""
    def size(x):
        return (np.abs(u.value(x)) + np.linalg.norm(u.gradient(x), axis=-1)
                + np.linalg.norm(u.hessian(x), axis=(-2, -1)))

    inner = size(grid.nodes) * np.exp(logd_fn(grid.nodes))
    faces = grid.face_points()
    outer = size(faces) * np.exp(logd_fn(faces))
    if np.max(outer) > LEAK_TOL * max(np.max(inner), 1e-300):
        raise SupportLeakage(f"test function carries weight {np.max(outer):.2e} on the box boundary")


def euclidean_bochner(potential: HomogeneousPotential, u: TestFunction,
                      grid: Optional[BoxGrid] = None):
    """int (L u)^2 dmu against int <D^2V grad u, grad u> dmu + int Tr (D^2 u)^2 dmu, V = Phi."""
    if grid is None:
        grid = build_box_grid(default_box(potential), 120 if potential.n == 1 else 60,
                              default_grading(potential))
    X = grid.nodes
    V, gV, HV = potential.all(X)
    _check_leakage(u, grid, lambda x: -potential.value(x))
    w = normalized_weights(grid, -V)
    g, H = u.gradient(X), u.hessian(X)
    Lu = np.trace(H, axis1=-2, axis2=-1) - np.sum(gV * g, axis=-1)
    lhs = np.dot(w, Lu**2)
    rhs = (np.dot(w, np.einsum("ni,nij,nj->n", g, HV, g))
           + np.dot(w, np.einsum("nij,nji->n", H, H)))
    return float(lhs), float(rhs)


def hessian_dual_bochner(potential: HomogeneousPotential, u: TestFunction,
                         grid: Optional[BoxGrid] = None):
    """int (L* u)^2 dmu* against int Tr[((D^2Phi*)^{-1} D^2u)^2] + <(D^2Phi*)^{-1} grad u, grad u> dmu*.

    L* u = Tr[(D^2 Phi*)^{-1} D^2 u] - <y, grad u>.
    """
    if grid is None:
        grid = build_box_grid(default_box(potential, "dual"), 120 if potential.n == 1 else 60,
                              default_grading(potential))
    Y = grid.nodes
    logd, Hs, _ = side_data(potential, grid, "dual")

    def logd_fn(y):
        val, _, hess = potential.conjugate_all(y)
        return -(potential.beta - 1) * val + np.linalg.slogdet(hess)[1]

    _check_leakage(u, grid, logd_fn)
    w = normalized_weights(grid, logd)
    inv = np.linalg.inv(Hs)
    g, H = u.gradient(Y), u.hessian(Y)
    A = inv @ H
    Lu = np.trace(A, axis1=-2, axis2=-1) - np.sum(Y * g, axis=-1)
    lhs = np.dot(w, Lu**2)
    rhs = (np.dot(w, np.einsum("nij,nji->n", A, A))
           + np.dot(w, np.einsum("ni,nij,nj->n", g, inv, g)))
    return float(lhs), float(rhs)


def centroaffine_bochner(body: ConvexBody, grid: SphereGrid, u: Field):
    """int (L* u)^2 dnu* against int Tr[(h (D^2h)^{-1} Hess* u)^2] dnu* + (n-2) * energy.

    Hess*(u) = spherical Hessian + (grad log h) x grad u + grad u x (grad log h).
    """
    h, gh, D2h = support_fields(body, grid)
    nu_star = cone_measure(body, grid)
    d = spherical_derivatives(u)
    gl = gh / h[:, None]
    hess_star = (d.hessian + gl[:, :, None] * d.gradient[:, None, :]
                 + d.gradient[:, :, None] * gl[:, None, :])
    A = h[:, None, None] * np.linalg.inv(D2h)
    M = A @ hess_star
    Lu = np.trace(M, axis1=1, axis2=2)
    lhs = nu_star.integrate(Lu**2)
    energy = nu_star.integrate(np.einsum("na,nab,nb->n", d.gradient, A, d.gradient))
    rhs = nu_star.integrate(np.einsum("nab,nba->n", M, M)) + (grid.dim - 2) * energy
    return float(lhs), float(rhs)


def bochner_residual(kind: str, target, u, grid=None) -> float:
    """Relative residual |LHS - RHS|/(|LHS| + |RHS|) of the chosen identity.

    target is a HomogeneousPotential for the Euclidean kinds and a ConvexBody
    (with a SphereGrid) for the sphere kind.
    """
    if kind == "euclidean":
        lhs, rhs = euclidean_bochner(target, u, grid)
    elif kind == "hessian_dual":
        lhs, rhs = hessian_dual_bochner(target, u, grid)
    elif kind == "sphere_centroaffine":
        if grid is None:
            raise DomainError("sphere_centroaffine needs a SphereGrid")
        lhs, rhs = centroaffine_bochner(target, grid, u)
    else:
        raise DomainError(f"unknown Bochner kind {kind!r}")
    return _relative(lhs, rhs)
