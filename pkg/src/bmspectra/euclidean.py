"""Brascamp-Lieb forms for mu = e^{-Phi} dx and its moment measure mu* on truncated boxes.

Quadrature is a tensor product of Gauss-Legendre rules on each half-axis,
mapped by x = L u^m. The grading m = 6 turns the fractional powers |x|^(k/2)
and |x|^(k/3) produced by l^q potentials into smooth integrands in u.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .body import HomogeneousPotential
from .errors import DomainError, MassTruncationError
from .measure import RadialLaw
from .spectral import FormPair

TAIL_MASS = 1e-16
TRUNCATION_LIMIT = 1e-12


@dataclass(frozen=True, eq=False)
class BoxGrid:
    half_widths: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    points_per_half: int
    grading: int

    @property
    def dim(self):
        return self.nodes.shape[1]

    def face_points(self):
        """Points on the boundary of the box, reusing the 1-D node sets."""
        n = self.dim
        L = self.half_widths
        if n == 1:
            return np.array([[-L[0]], [L[0]]])
        pts = []
        for i in range(n):
            others = [_axis_rule(L[k], self.points_per_half, self.grading)[0]
                      for k in range(n) if k != i]
            mesh = np.array(list(itertools.product(*others)))
            for s in (-1.0, 1.0):
                p = np.insert(mesh, i, s * L[i], axis=1)
                pts.append(p)
        return np.vstack(pts)


def _axis_rule(L, m_pts, grading):
    u, w = np.polynomial.legendre.leggauss(m_pts)
    u = 0.5 * (u + 1)
    w = 0.5 * w
    x = L * u**grading
    wx = w * L * grading * u ** (grading - 1)
    return np.concatenate([-x[::-1], x]), np.concatenate([wx[::-1], wx])


def default_grading(potential: HomogeneousPotential) -> int:
    """Grading exponent: mild for smooth quadratic potentials, 6 otherwise."""
    kind = potential.body.spec.kind
    return 3 if kind in ("ball", "ellipsoid") and potential.alpha == 2 else 6


def build_box_grid(half_widths, points_per_half=80, grading=6) -> BoxGrid:
    L = np.atleast_1d(np.asarray(half_widths, dtype=float))
    if np.any(L <= 0):
        raise DomainError("box half-widths must be positive")
    rules = [_axis_rule(l, points_per_half, grading) for l in L]
    xs = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    ws = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    nodes = np.stack([x.ravel() for x in xs], axis=1)
    weights = np.prod(np.stack([w.ravel() for w in ws], axis=1), axis=1)
    return BoxGrid(L, nodes, weights, points_per_half, grading)


def _radial_law(potential: HomogeneousPotential, side):
    a, c, n = potential.alpha, potential.scale, potential.n
    law = RadialLaw(a, n, rate=c / a)
    if side == "primal":
        return law, potential.gauge_at_axes(), lambda s: s
    # h(grad Phi(x)) = c phi(x)^(alpha-1): map primal radii to dual ones
    return law, potential.polar_at_axes(), lambda s: c * s ** (a - 1)


def default_box(potential: HomogeneousPotential, side="primal", tail=TAIL_MASS):
    """Half-widths of a box holding all but ``tail`` of the mass of mu (or mu*)."""
    law, extent, to_side = _radial_law(potential, side)
    s = law.tail_radius(tail)
    return to_side(s) * extent


def truncation_mass(potential: HomogeneousPotential, grid: BoxGrid, side="primal"):
    """Upper bound for the mass outside the box (the largest inscribed level set)."""
    law, extent, to_side = _radial_law(potential, side)
    s_side = np.min(grid.half_widths / extent)
    a = potential.alpha
    s = s_side if side == "primal" else (s_side / potential.scale) ** (1 / (a - 1))
    return float(law.tail(s))


def _multi_indices(n, degree):
    return [a for a in itertools.product(range(degree + 1), repeat=n) if sum(a) <= degree]


@dataclass(frozen=True)
class EuclideanBasis:
    """Labels (a, j) of the functions u^a s^j, u the coordinate system of the side."""

    side: str
    labels: list
    degree: int
    powers: int


def _monomial_basis(u, J, s, gs, degree, powers):
    """Values and gradients of u^a s^j; J[..., i, :] is the gradient of u_i."""
    n = u.shape[1]
    labels, vals, grads, parity = [], [], [], []
    spow = [np.ones_like(s)] + [s**j for j in range(1, powers + 1)]
    for a in _multi_indices(n, degree):
        mono = np.prod([u[:, i] ** a[i] for i in range(n)], axis=0)
        dmono = np.zeros_like(u)
        for i in range(n):
            if a[i]:
                rest = np.prod([u[:, k] ** (a[k] - (k == i)) for k in range(n)], axis=0)
                dmono += a[i] * rest[:, None] * J[:, i, :]
        for j in range(powers + 1):
            if sum(a) == 0 and j == 0:
                v = np.ones_like(s)
                g = np.zeros_like(u)
            else:
                v = mono * spow[j]
                g = dmono * spow[j][:, None]
                if j:
                    g = g + (j * mono * spow[j - 1])[:, None] * gs
            labels.append((a, j))
            vals.append(v)
            grads.append(g)
            parity.append((-1) ** sum(a))
    return labels, np.stack(vals, axis=1), np.stack(grads, axis=1), np.array(parity)


def side_data(potential: HomogeneousPotential, grid: BoxGrid, side: str):
    """Unnormalized log density, Hessian metric and basis ingredients at the nodes."""
    X = grid.nodes
    if side == "primal":
        val, grad, hess = potential.all(X)
        return -val, hess, (grad, hess, val, grad)
    if side == "dual":
        val, grad, hess = potential.conjugate_all(X)
        sign, logdet = np.linalg.slogdet(hess)
        if np.any(sign <= 0):
            raise DomainError("D^2 Phi* is not positive definite on the box")
        n = X.shape[1]
        eye = np.broadcast_to(np.eye(n), hess.shape)
        return -(potential.beta - 1) * val + logdet, hess, (X, eye, val, grad)
    raise DomainError(f"side must be 'primal' or 'dual', got {side!r}")


def normalized_weights(grid: BoxGrid, logd):
    w = grid.weights * np.exp(logd - np.max(logd))
    return w / w.sum()


def assemble_euclidean_forms(potential: HomogeneousPotential, box_grid: Optional[BoxGrid] = None,
                             side: str = "primal", degree: Optional[int] = None,
                             powers: Optional[int] = None) -> FormPair:
    """Var and int <(D^2 Phi)^{-1} grad f, grad f> for mu (primal) or the same with Phi* for mu* (dual).

    Primal trial functions are monomials in y = grad Phi(x) times powers of
    Phi. The dual ones are monomials in y times powers of Phi*, which is the
    same function space transported by grad Phi*.
    """
    n = potential.n
    if n not in (1, 2):
        raise DomainError("Euclidean forms are implemented for n = 1, 2")
    if box_grid is None:
        box_grid = build_box_grid(default_box(potential, side), 100 if n == 1 else 60,
                                  default_grading(potential))
    leak = truncation_mass(potential, box_grid, side)
    if leak > TRUNCATION_LIMIT:
        raise MassTruncationError(f"box leaves mass {leak:.2e} outside")
    degree = (2 if n == 1 else 4) if degree is None else degree
    powers = (3 if n == 1 else 2) if powers is None else powers
    logd, metric, (u, J, s, gs) = side_data(potential, box_grid, side)
    w = normalized_weights(box_grid, logd)
    labels, B, G, parity = _monomial_basis(u, J, s, gs, degree, powers)
    inv = np.linalg.inv(metric)
    mean = B.T @ w
    gram = (B * w[:, None]).T @ B
    V = gram - np.outer(mean, mean)
    IG = np.einsum("nab,nkb->nka", inv, G)
    D = np.tensordot(G * w[:, None, None], IG, axes=([0, 2], [0, 2]))
    basis = EuclideanBasis(side, labels, degree, powers)
    prov = {"side": side, "box_half_widths": box_grid.half_widths.tolist(),
            "points_per_half": box_grid.points_per_half, "grading": box_grid.grading,
            "truncated_mass": leak, "basis_size": len(labels), "alpha": potential.alpha}
    return FormPair(0.5 * (V + V.T), 0.5 * (D + D.T), mean, basis, parity,
                    "mu" if side == "primal" else "mu*", n, prov, gram=0.5 * (gram + gram.T))


def power_potential(p: float, n: int) -> HomogeneousPotential:
    """Phi(x) = sum_i |x_i|^p / p."""
    from .body import BodySpec, make_body

    body = make_body(BodySpec("lq_ball", n, q=float(p)) if n > 1 else BodySpec.ball(1))
    return HomogeneousPotential(body, p)
