"""Discretizations of the circle and the 2-sphere.

n = 2: uniform periodic grid (node count divisible by 4), FFT differentiation
and a Fourier Galerkin basis.
n = 3: Gauss-Legendre in z times an offset uniform azimuth grid, with a real
spherical-harmonic Galerkin basis. The azimuth offset keeps the node set
closed under the antipodal map and every coordinate reflection.

Tangent quantities are stored in per-node frame coordinates: gradients have
shape (N, n-1) and Hessians (N, n-1, n-1). ``grid.frames`` maps them back to
ambient vectors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
import scipy.special as sps
from scipy.spatial import cKDTree

from .errors import DomainError, GridNotReflectionClosed, UnsupportedDim


@dataclass(frozen=True, eq=False)
class SphereGrid:
    dim: int
    resolution: int
    nodes: np.ndarray
    weights: np.ndarray
    antipode: np.ndarray
    frames: np.ndarray
    exactness_degree: int
    angles: tuple = field(repr=False)

    @property
    def size(self):
        return self.nodes.shape[0]

    @property
    def area(self):
        return 2 * np.pi if self.dim == 2 else 4 * np.pi

    def reflection(self, i):
        """Index map of the sign flip x_i -> -x_i."""
        target = self.nodes.copy()
        target[:, i] *= -1
        return _match(self.nodes, target)

    def integrate(self, values):
        return float(np.dot(self.weights, values))

    def spectral_degree(self):
        """Largest degree represented exactly by nodal values."""
        return self.resolution // 2 - 1 if self.dim == 2 else self.resolution

    def basis(self, degree: Optional[int] = None, hessian=True):
        """Orthonormal Fourier / spherical-harmonic basis evaluated at the nodes."""
        if degree is None:
            degree = self.resolution // 4 if self.dim == 2 else self.resolution // 2
        if self.dim == 2:
            return _fourier_basis(self.angles[0], degree, hessian)
        theta, azim = self.angles
        return _harmonic_basis(theta, azim, degree, hessian)

    def coefficients(self, values, degree=None):
        """Projection onto the orthonormal basis (exact for band-limited fields)."""
        if degree is None:
            degree = self.spectral_degree()
        b = self.basis(degree, hessian=False)
        return b, b.values.T @ (self.weights * values)

    def interpolate(self, values, points):
        """Evaluate the spectral representation of nodal values at unit vectors."""
        values = np.asarray(values, dtype=float)
        points = np.asarray(points, dtype=float)
        if self.dim == 2:
            c = np.fft.rfft(values) / self.size
            ang = np.arctan2(points[..., 1], points[..., 0])
            k = np.arange(c.size)
            fac = np.full(c.size, 2.0)
            fac[0] = 1.0
            if self.size % 2 == 0:
                fac[-1] = 1.0
            e = np.exp(1j * ang[..., None] * k)
            return np.real(e @ (fac * c))
        b, c = self.coefficients(values)
        z = np.clip(points[..., 2], -1, 1)
        az = np.arctan2(points[..., 1], points[..., 0])
        vals = _harmonic_values(np.arccos(z).ravel(), az.ravel(), b.degree)
        return (vals @ c).reshape(points.shape[:-1])


def _match(nodes, target, tol=1e-10):
    dist, idx = cKDTree(nodes).query(target)
    if np.max(dist) > tol:
        raise GridNotReflectionClosed(f"node set not closed under the map (gap {dist.max():.2e})")
    return idx


def build_grid(dim: int, resolution: int) -> SphereGrid:
    """n=2: ``resolution`` nodes (multiple of 4). n=3: harmonic degree L."""
    if dim not in (2, 3):
        raise UnsupportedDim(f"sphere grids exist for n = 2, 3 only (got {dim})")
    if resolution < 16:
        raise DomainError("resolution must be at least 16")
    if dim == 2:
        N = int(resolution)
        if N % 4:
            raise DomainError("circle node count must be a multiple of 4")
        t = 2 * np.pi * np.arange(N) / N
        nodes = np.stack([np.cos(t), np.sin(t)], axis=1)
        frames = np.stack([-np.sin(t), np.cos(t)], axis=1)[:, :, None]
        weights = np.full(N, 2 * np.pi / N)
        antipode = (np.arange(N) + N // 2) % N
        return SphereGrid(2, N, nodes, weights, antipode, frames, N - 1, (t,))
    L = int(resolution)
    nz = L + 1
    naz = 4 * ((2 * L + 2 + 3) // 4)
    z, wz = np.polynomial.legendre.leggauss(nz)
    az = 2 * np.pi * (np.arange(naz) + 0.5) / naz
    Z, A = np.meshgrid(z, az, indexing="ij")
    W = np.outer(wz, np.full(naz, 2 * np.pi / naz))
    th = np.arccos(Z)
    st = np.sqrt(1 - Z**2)
    nodes = np.stack([st * np.cos(A), st * np.sin(A), Z], axis=-1).reshape(-1, 3)
    e_th = np.stack([Z * np.cos(A), Z * np.sin(A), -st], axis=-1).reshape(-1, 3)
    e_az = np.stack([-np.sin(A), np.cos(A), np.zeros_like(A)], axis=-1).reshape(-1, 3)
    frames = np.stack([e_th, e_az], axis=-1)
    antipode = _match(nodes, -nodes)
    return SphereGrid(3, L, nodes, W.ravel(), antipode, frames, 2 * L + 1,
                      (th.ravel(), A.ravel()))


# ---------------------------------------------------------------- Galerkin bases

@dataclass(frozen=True, eq=False)
class SphereBasis:
    """Basis functions sampled at grid nodes, with frame-coordinate derivatives."""

    degree: int
    labels: list
    parity: np.ndarray       # +1 even / -1 odd under the antipodal map
    values: np.ndarray       # (N, K)
    grads: np.ndarray        # (N, K, n-1)
    hessians: Optional[np.ndarray] = None  # (N, K, n-1, n-1), spherical Hessian

    @property
    def size(self):
        return self.values.shape[1]

    def subset(self, mask):
        idx = np.arange(self.size)[np.asarray(mask)]
        h = None if self.hessians is None else self.hessians[:, idx]
        labels = [self.labels[i] for i in idx]
        return SphereBasis(self.degree, labels, self.parity[idx], self.values[:, idx],
                           self.grads[:, idx], h)

    def multiply(self, values, grads, hessians=None):
        """Basis of products g * b for a fixed function g given by its node data."""
        v = values[:, None] * self.values
        g = grads[:, None, :] * self.values[..., None] + values[:, None, None] * self.grads
        h = None
        if hessians is not None and self.hessians is not None:
            h = (hessians[:, None] * self.values[..., None, None]
                 + grads[:, None, :, None] * self.grads[:, :, None, :]
                 + self.grads[:, :, :, None] * grads[:, None, None, :]
                 + values[:, None, None, None] * self.hessians)
        return SphereBasis(self.degree, list(self.labels), self.parity, v, g, h)


def _fourier_basis(t, K, hessian=True):
    cols, d1, d2, labels, par = [], [], [], [], []
    norm0 = 1 / np.sqrt(2 * np.pi)
    norm = 1 / np.sqrt(np.pi)
    cols.append(np.full_like(t, norm0))
    d1.append(np.zeros_like(t))
    d2.append(np.zeros_like(t))
    labels.append(("cos", 0))
    par.append(1)
    for k in range(1, K + 1):
        c, s = np.cos(k * t), np.sin(k * t)
        cols += [norm * c, norm * s]
        d1 += [-k * norm * s, k * norm * c]
        d2 += [-k * k * norm * c, -k * k * norm * s]
        labels += [("cos", k), ("sin", k)]
        par += [(-1) ** k] * 2
    v = np.stack(cols, axis=1)
    g = np.stack(d1, axis=1)[..., None]
    h = np.stack(d2, axis=1)[..., None, None] if hessian else None
    return SphereBasis(K, labels, np.array(par), v, g, h)


def _legendre(theta, L, diff):
    z = np.cos(theta)
    P = sps.assoc_legendre_p_all(L, L, z, norm=True, diff_n=diff)
    return P


def _harmonic_index(L):
    return [(l, m) for l in range(L + 1) for m in range(-l, l + 1)]


def _harmonic_values(theta, az, L):
    P = _legendre(theta, L, 0)[0]
    out = []
    for l, m in _harmonic_index(L):
        out.append(_azimuth_factor(m, az) * P[l, abs(m)])
    return np.stack(out, axis=-1)


def _azimuth_factor(m, az, deriv=0):
    if m == 0:
        return np.full_like(az, 1 / np.sqrt(2 * np.pi)) if deriv == 0 else np.zeros_like(az)
    k = abs(m)
    base = [np.cos, lambda a: -np.sin(a), lambda a: -np.cos(a)] if m > 0 else \
           [np.sin, np.cos, lambda a: -np.sin(a)]
    return base[deriv](k * az) * k**deriv / np.sqrt(np.pi)


def _harmonic_basis(theta, az, L, hessian=True):
    P = _legendre(theta, L, 2)
    z = np.cos(theta)
    s = np.sin(theta)
    cot = z / s
    vals, grads, hess, labels, par = [], [], [], [], []
    for l, m in _harmonic_index(L):
        p, dp, d2p = P[0][l, abs(m)], P[1][l, abs(m)], P[2][l, abs(m)]
        p_t = -s * dp
        p_tt = s * s * d2p - z * dp
        a0, a1, a2 = (_azimuth_factor(m, az, d) for d in range(3))
        Y = p * a0
        Yt, Ya = p_t * a0, p * a1
        vals.append(Y)
        grads.append(np.stack([Yt, Ya / s], axis=-1))
        if hessian:
            Ytt = p_tt * a0
            Yta = p_t * a1
            Yaa = p * a2
            h12 = (Yta - cot * Ya) / s
            H = np.stack([np.stack([Ytt, h12], -1),
                          np.stack([h12, Yaa / s**2 + cot * Yt], -1)], -2)
            hess.append(H)
        labels.append((l, m))
        par.append((-1) ** l)
    return SphereBasis(L, labels, np.array(par), np.stack(vals, axis=1),
                       np.stack(grads, axis=1), np.stack(hess, axis=1) if hessian else None)


# ---------------------------------------------------------------- fields and operators

@dataclass(frozen=True, eq=False)
class Field:
    grid: SphereGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise DomainError("field needs one value per node")
        if not np.all(np.isfinite(v)):
            raise DomainError("field values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid, f):
        return cls(grid, f(grid.nodes))


class SphericalDerivatives(NamedTuple):
    gradient: np.ndarray  # (N, n-1) frame coordinates
    hessian: np.ndarray   # (N, n-1, n-1) spherical Hessian
    d2: np.ndarray        # f I + spherical Hessian

    def ambient_gradient(self, grid):
        return np.einsum("nij,nj->ni", grid.frames, self.gradient)


class SphereOperator:
    """Linear maps from nodal values to spherical gradient and Hessian.

    n=2 keeps dense FFT differentiation matrices; n=3 keeps the factorization
    synthesis @ analysis and materializes dense matrices only on request.
    """

    def __init__(self, grid: SphereGrid):
        self.grid = grid
        if grid.dim == 2:
            N = grid.size
            k = np.fft.fftfreq(N, 1.0 / N)
            ik = 1j * k
            ik[N // 2] = 0.0
            eye = np.eye(N)
            F = np.fft.fft(eye, axis=0)
            self._d1 = np.real(np.fft.ifft(ik[:, None] * F, axis=0))
            self._d2 = np.real(np.fft.ifft(-(k**2)[:, None] * F, axis=0))
        else:
            b = grid.basis(grid.spectral_degree())
            self._analysis = b.values.T * grid.weights
            self._basis = b

    def apply(self, values) -> SphericalDerivatives:
        values = np.asarray(values, dtype=float)
        if self.grid.dim == 2:
            g = (self._d1 @ values)[:, None]
            hs = (self._d2 @ values)[:, None, None]
        else:
            c = self._analysis @ values
            g = np.einsum("nkd,k->nd", self._basis.grads, c)
            hs = np.einsum("nkde,k->nde", self._basis.hessians, c)
        d2 = hs + values[:, None, None] * np.eye(self.grid.dim - 1)
        return SphericalDerivatives(g, hs, d2)

    def matrices(self):
        """Dense (gradient, Hessian) matrices indexed [component..., node, node]."""
        if self.grid.dim == 2:
            return self._d1[None], self._d2[None, None]
        G = np.einsum("nkd,km->dnm", self._basis.grads, self._analysis)
        H = np.einsum("nkde,km->denm", self._basis.hessians, self._analysis)
        return G, H


_OPERATORS: dict = {}


def sphere_operator(grid: SphereGrid) -> SphereOperator:
    op = _OPERATORS.get(id(grid))
    if op is None or op.grid is not grid:
        op = SphereOperator(grid)
        _OPERATORS[id(grid)] = op
    return op


def spherical_derivatives(field: Field) -> SphericalDerivatives:
    return sphere_operator(field.grid).apply(field.values)


def even_project(field: Field) -> Field:
    return Field(field.grid, 0.5 * (field.values + field.values[field.grid.antipode]))


def parity_labels(n):
    return list(itertools.product((0, 1), repeat=n))


def parity_decompose(field: Field):
    """The 2^n components f_a, x_i-odd exactly when a_i = 1, ordered as parity_labels(n)."""
    grid = field.grid
    n = grid.dim
    refl = [grid.reflection(i) for i in range(n)]
    out = []
    for a in parity_labels(n):
        acc = np.zeros(grid.size)
        for signs in itertools.product((1, -1), repeat=n):
            idx = np.arange(grid.size)
            coef = 1.0
            for i, s in enumerate(signs):
                if s < 0:
                    idx = refl[i][idx]
                    coef *= (-1) ** a[i]
            acc += coef * field.values[idx]
        out.append(Field(grid, acc / 2**n))
    return out
