"""Variance and Dirichlet forms on the sphere, best constants and the Hilbert operator."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import scipy.linalg as sla

from .body import ConvexBody, sphere_maps
from .errors import (
    DegenerateDirichlet,
    EigSolverFailure,
    EmptyQuadrantBasis,
    SingularD2h,
    SingularD2phi,
)
from .measure import (
    cone_measure,
    gauge_fields,
    gauge_measure,
    support_fields,
)
from .sphere import Field, SphereGrid, spherical_derivatives

NULL_TOL = 1e-11


@dataclass(frozen=True, eq=False)
class FormPair:
    variance_form: np.ndarray
    dirichlet_form: np.ndarray
    mean_vector: np.ndarray
    basis: Any
    parity: np.ndarray
    measure_tag: str
    dim: int
    provenance: dict = field(default_factory=dict)
    gram: Optional[np.ndarray] = None

    def restrict(self, idx):
        idx = np.asarray(idx)
        return FormPair(self.variance_form[np.ix_(idx, idx)], self.dirichlet_form[np.ix_(idx, idx)],
                        self.mean_vector[idx], self.basis, self.parity[idx], self.measure_tag,
                        self.dim, dict(self.provenance, restricted=True),
                        None if self.gram is None else self.gram[np.ix_(idx, idx)])


@dataclass(frozen=True, eq=False)
class SpectralResult:
    best_constant: float
    coefficients: np.ndarray
    residual: float
    eigenvalues: np.ndarray
    dim: int
    provenance: dict

    @property
    def implied_p(self):
        """p with n - p = 1/C."""
        return self.dim - 1.0 / self.best_constant


def _metric_forms(grid, weights, metric, basis, tag, extra):
    """V = covariance Gram under ``weights``; D = sum_k w_k <metric_k grad b, grad b>."""
    B, G = basis.values, basis.grads
    mean = B.T @ weights
    V = (B * weights[:, None]).T @ B - np.outer(mean, mean)
    MG = np.einsum("nab,nkb->nka", metric, G)
    N, K, d = G.shape
    D = np.tensordot(G * weights[:, None, None], MG, axes=([0, 2], [0, 2]))
    V = 0.5 * (V + V.T)
    D = 0.5 * (D + D.T)
    prov = {"grid_dim": grid.dim, "grid_resolution": grid.resolution, "grid_nodes": grid.size,
            "basis_degree": basis.degree, "basis_size": basis.size}
    prov.update(extra)
    return FormPair(V, D, mean, basis, np.asarray(basis.parity), tag, grid.dim, prov)


def hilbert_metric(body: ConvexBody, grid: SphereGrid):
    """h (D^2 h)^{-1} in frame coordinates and the cone measure weights."""
    h, _, D2h = support_fields(body, grid)
    lo = np.linalg.eigvalsh(D2h)[:, 0]
    if not np.all(np.isfinite(lo)) or np.any(lo <= 0):
        raise SingularD2h("D^2 h is not positive definite at every node")
    return h[:, None, None] * np.linalg.inv(D2h), cone_measure(body, grid)


def assemble_hilbert_forms(body: ConvexBody, grid: SphereGrid, degree: Optional[int] = None) -> FormPair:
    """Var_{nu*} and int h <(D^2 h)^{-1} grad u, grad u> dnu* on the Fourier/harmonic basis."""
    metric, nu_star = hilbert_metric(body, grid)
    basis = grid.basis(degree, hessian=False)
    return _metric_forms(grid, nu_star.weights, metric, basis, "nu*",
                         {"side": "support", "eps": body.spec.regularization_eps})


def assemble_gauge_forms(body: ConvexBody, grid: SphereGrid, degree: Optional[int] = None) -> FormPair:
    """Var_nu and int phi <(D^2 phi)^{-1} grad g, grad g> dnu."""
    p, _, D2p = gauge_fields(body, grid)
    lo = np.linalg.eigvalsh(D2p)[:, 0]
    if not np.all(np.isfinite(lo)) or np.any(lo <= 0):
        raise SingularD2phi("D^2 phi is not positive definite at every node")
    metric = p[:, None, None] * np.linalg.inv(D2p)
    nu = gauge_measure(body, grid)
    basis = grid.basis(degree, hessian=False)
    return _metric_forms(grid, nu.weights, metric, basis, "nu",
                         {"side": "gauge", "eps": body.spec.regularization_eps})


def _solve(forms: FormPair, idx, label):
    V = forms.variance_form[np.ix_(idx, idx)]
    D = forms.dirichlet_form[np.ix_(idx, idx)]
    P = np.eye(len(idx))
    if forms.gram is not None:
        # monomial bases are far from orthogonal and may be dependent:
        # orthonormalize in L^2(m) and drop the dependent directions first
        G = forms.gram[np.ix_(idx, idx)]
        scale = 1 / np.sqrt(np.diag(G))
        g, Ug = np.linalg.eigh(G * np.outer(scale, scale))
        keep = g > 1e-13 * g[-1]
        P = scale[:, None] * Ug[:, keep] / np.sqrt(g[keep])
        V, D = P.T @ V @ P, P.T @ D @ P
    try:
        lam, U = np.linalg.eigh(D)
    except np.linalg.LinAlgError as exc:
        raise EigSolverFailure(str(exc)) from exc
    cut = NULL_TOL * max(lam[-1], 1e-300)
    null = lam <= cut
    if null.sum() > 1:
        raise DegenerateDirichlet(f"Dirichlet form has a {null.sum()}-dimensional null space")
    if null.sum() == 1:
        c = U[:, null][:, 0]
        if np.linalg.norm(V @ c) > 1e-8 * max(np.linalg.norm(V), 1e-300):
            raise DegenerateDirichlet("Dirichlet null vector is not a constant")
    keep = ~null
    S = U[:, keep] / np.sqrt(lam[keep])
    M = S.T @ V @ S
    M = 0.5 * (M + M.T)
    try:
        mu, W = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise EigSolverFailure(str(exc)) from exc
    u = S @ W[:, -1]
    C = float(mu[-1])
    res = np.linalg.norm(V @ u - C * D @ u) / max(np.linalg.norm(V) * np.linalg.norm(u), 1e-300)
    u = P @ u
    coef = np.zeros(forms.variance_form.shape[0])
    coef[idx] = u / np.linalg.norm(u)
    prov = dict(forms.provenance, restriction=label, measure=forms.measure_tag,
                subspace_size=int(len(idx)))
    return SpectralResult(max(C, 0.0), coef, float(res), mu[::-1].copy(), forms.dim, prov)


def best_even_constant(forms: FormPair) -> SpectralResult:
    """max Var/Dirichlet over even mean-zero functions in the span of the basis."""
    idx = np.flatnonzero(forms.parity > 0)
    return _solve(forms, idx, "even")


def best_constant(forms: FormPair) -> SpectralResult:
    """Same maximization without the parity restriction."""
    return _solve(forms, np.arange(forms.parity.size), "all")


def hilbert_apply(body: ConvexBody, grid: SphereGrid, u: Field) -> Field:
    """L* u = h Tr[(D^2 h)^{-1} Hess u] + 2 <(D^2 h)^{-1} grad h, grad u>."""
    h, gh, D2h = support_fields(body, grid)
    inv = np.linalg.inv(D2h)
    d = spherical_derivatives(u)
    out = (h * np.einsum("nab,nba->n", inv, d.hessian)
           + 2 * np.einsum("na,nab,nb->n", gh, inv, d.gradient))
    return Field(grid, out)


def dirichlet_pairing(body: ConvexBody, grid: SphereGrid, u: Field, v: Field) -> float:
    """int h <(D^2 h)^{-1} grad u, grad v> dnu*."""
    metric, nu_star = hilbert_metric(body, grid)
    gu = spherical_derivatives(u).gradient
    gv = spherical_derivatives(v).gradient
    return float(np.dot(nu_star.weights, np.einsum("na,nab,nb->n", gu, metric, gv)))


def adjointness_residual(body: ConvexBody, grid: SphereGrid, u: Field, v: Field) -> float:
    """|int (L* u) v dnu* + Dirichlet(u, v)|."""
    nu_star = cone_measure(body, grid)
    lhs = nu_star.integrate(hilbert_apply(body, grid, u).values * v.values)
    return abs(lhs + dirichlet_pairing(body, grid, u, v))


def tangent_frames(points):
    """Orthonormal tangent frames (N, n, n-1) at arbitrary unit vectors."""
    points = np.asarray(points, dtype=float)
    n = points.shape[-1]
    if n == 2:
        return np.stack([-points[:, 1], points[:, 0]], axis=1)[:, :, None]
    frames = np.empty(points.shape + (n - 1,))
    for k, p in enumerate(points):
        q, _ = np.linalg.qr(np.column_stack([p, np.eye(n)]))
        frames[k] = q[:, 1:n]
    return frames


def metric_pushforward_residual(body: ConvexBody, grid: SphereGrid, g: Field) -> float:
    """Sup over nodes of |h<(D^2h)^{-1} grad u, grad u> - phi(T)<(D^2 phi(T))^{-1} grad g(T), grad g(T)>|, u = g(T).

    The left side differentiates the nodal values of u spectrally; the right
    side reads the gradient of g at the mapped points through the spectral
    representation of its ambient components.
    """
    T = sphere_maps(body).T(grid.nodes)
    u = Field(grid, grid.interpolate(g.values, T))
    metric, _ = hilbert_metric(body, grid)
    gu = spherical_derivatives(u).gradient
    lhs = np.einsum("na,nab,nb->n", gu, metric, gu)

    amb = spherical_derivatives(g).ambient_gradient(grid)
    grad_T = np.stack([grid.interpolate(amb[:, i], T) for i in range(grid.dim)], axis=1)
    E = tangent_frames(T)
    gt = np.einsum("nia,ni->na", E, grad_T)
    p, _, Hp = body.gauge_all(T)
    D2p = np.einsum("nia,nij,njb->nab", E, Hp, E)
    rhs = p * np.einsum("na,nab,nb->n", gt, np.linalg.inv(D2p), gt)
    return float(np.max(np.abs(lhs - rhs)))


def quadrant_gap(body: ConvexBody, grid: SphereGrid, i: int, j: int,
                 degree: Optional[int] = None) -> float:
    """Smallest Dirichlet/L^2(nu*) Rayleigh quotient over functions vanishing on {y_i = 0} and {y_j = 0}.

    Trial functions are y_i y_j times the Fourier/harmonic basis, so the
    boundary condition holds identically.
    """
    if i == j:
        raise EmptyQuadrantBasis("quadrant gap needs i != j")
    metric, nu_star = hilbert_metric(body, grid)
    base = grid.basis(degree, hessian=False)
    if base.size == 0:
        raise EmptyQuadrantBasis("empty basis")
    y = grid.nodes
    f = y[:, i] * y[:, j]
    amb = np.zeros_like(y)
    amb[:, i] = y[:, j]
    amb[:, j] = y[:, i]
    gf = np.einsum("nia,ni->na", grid.frames, amb)
    basis = base.multiply(f, gf)
    w = nu_star.weights
    M = (basis.values * w[:, None]).T @ basis.values
    MG = np.einsum("nab,nkb->nka", metric, basis.grads)
    D = np.tensordot(basis.grads * w[:, None, None], MG, axes=([0, 2], [0, 2]))
    M, D = 0.5 * (M + M.T), 0.5 * (D + D.T)
    lam, U = np.linalg.eigh(M)
    keep = lam > 1e-12 * lam[-1]
    if not np.any(keep):
        raise EmptyQuadrantBasis("trial space collapsed on this grid")
    S = U[:, keep] / np.sqrt(lam[keep])
    try:
        vals = sla.eigvalsh(S.T @ D @ S)
    except np.linalg.LinAlgError as exc:
        raise EigSolverFailure(str(exc)) from exc
    return float(vals[0])
