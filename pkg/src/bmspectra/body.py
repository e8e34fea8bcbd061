"""Symmetric convex bodies: gauge, support function, potentials and sphere maps.

All evaluators are vectorized over leading axes: a point array of shape
(..., n) gives values (...), gradients (..., n) and Hessians (..., n, n).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    DegenerateMatrix,
    DomainError,
    NearSingularHessian,
    NonConvex,
    NotEven,
    OptimizerStall,
)

KINDS = ("ball", "ellipsoid", "lq_ball", "custom")
FD_STEP = np.cbrt(np.finfo(float).eps)


@dataclass(frozen=True)
class BodySpec:
    kind: str
    dim: int
    q: Optional[float] = None
    matrix: Optional[np.ndarray] = None
    custom_gauge: Optional[Callable] = None
    custom_grad: Optional[Callable] = None
    custom_hess: Optional[Callable] = None
    alpha: float = 2.0
    regularization_eps: float = 0.0

    @classmethod
    def ball(cls, dim, **kw):
        return cls("ball", dim, **kw)

    @classmethod
    def ellipsoid(cls, semi_axes, **kw):
        """Ellipsoid with the given semi-axes; matrix = diag(a_i^2)."""
        a = np.asarray(semi_axes, dtype=float)
        return cls("ellipsoid", len(a), matrix=np.diag(a**2), **kw)

    @classmethod
    def lq(cls, q, dim, eps=0.0, **kw):
        return cls("lq_ball", dim, q=float(q), regularization_eps=float(eps), **kw)

    @classmethod
    def custom(cls, dim, gauge, grad=None, hess=None, **kw):
        return cls("custom", dim, custom_gauge=gauge, custom_grad=grad, custom_hess=hess, **kw)

    @property
    def is_unconditional(self):
        if self.kind in ("ball", "lq_ball"):
            return True
        if self.kind == "ellipsoid":
            m = np.asarray(self.matrix)
            return bool(np.allclose(m, np.diag(np.diag(m))))
        return False

    def describe(self):
        """Plain-data summary used in reports."""
        out = {"kind": self.kind, "dim": self.dim, "alpha": self.alpha,
               "regularization_eps": self.regularization_eps}
        if self.q is not None:
            out["q"] = self.q
        if self.matrix is not None:
            out["matrix"] = np.asarray(self.matrix, dtype=float).tolist()
        return out


# ---------------------------------------------------------------- closed forms

def _norm2(x):
    r = np.linalg.norm(x, axis=-1)
    n = x.shape[-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        xh = x / r[..., None]
        hess = (np.eye(n) - xh[..., :, None] * xh[..., None, :]) / r[..., None, None]
    return r, xh, hess


def _quadratic_gauge(a):
    """Gauge sqrt(x^T a x) with its derivatives."""

    def ev(x):
        ax = x @ a
        v = np.sqrt(np.einsum("...i,...i->...", x, ax))
        with np.errstate(invalid="ignore", divide="ignore"):
            g = ax / v[..., None]
            hess = (a - g[..., :, None] * g[..., None, :]) / v[..., None, None]
        return v, g, hess

    return ev


def _lq_gauge(q, eps):
    """(sum_i N_i^q)^(1/q) with N_i = sqrt(x_i^2 + eps^2 |x|^2).

    eps = 0 is the plain l^q norm. The eps > 0 version stays 1-homogeneous and
    even, and is smooth and uniformly convex away from the origin.
    """

    def ev(x):
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        eye = np.eye(n)
        if eps > 0:
            r2 = np.sum(x * x, axis=-1)[..., None]
            N = np.sqrt(x * x + eps**2 * r2)
            # dN[..., i, k] = dN_i/dx_k
            with np.errstate(invalid="ignore", divide="ignore"):
                dN = (x[..., :, None] * eye + eps**2 * x[..., None, :]) / N[..., :, None]
        else:
            N = np.abs(x)
            with np.errstate(invalid="ignore", divide="ignore"):
                dN = np.sign(x)[..., :, None] * eye
        with np.errstate(invalid="ignore", divide="ignore"):
            S = np.sum(N**q, axis=-1)
            v = S ** (1 / q)
            gS = q * np.einsum("...i,...ik->...k", N ** (q - 1), dN)
            # D^2 N_i = (A_i - dN_i dN_i^T)/N_i, A_i = e_i e_i^T + eps^2 I, so
            # D^2 N_i^q = q N_i^(q-2) ((q-2) dN_i dN_i^T + A_i)
            outer = dN[..., :, :, None] * dN[..., :, None, :]
            A = eye[:, :, None] * eye[:, None, :] + eps**2 * eye
            w = N ** (q - 2)
            if q > 2:
                w = np.where(N > 0, w, 0.0)
            hS = q * np.einsum("...i,...ikl->...kl", w, (q - 2) * outer + A)
            g = S[..., None] ** (1 / q - 1) / q * gS
            hess = (S[..., None, None] ** (1 / q - 1) / q * hS
                    + (1 / q) * (1 / q - 1) * S[..., None, None] ** (1 / q - 2)
                    * gS[..., :, None] * gS[..., None, :])
        return v, g, hess

    return ev


def _fd_gauge(f, grad=None, hess=None):
    """Wrap a scalar gauge with central-difference derivatives where missing."""

    def value(x):
        x = np.asarray(x, dtype=float)
        try:
            v = np.asarray(f(x), dtype=float)
            if v.shape == x.shape[:-1]:
                return v
        except (TypeError, ValueError):
            pass
        flat = x.reshape(-1, x.shape[-1])
        return np.array([float(f(p)) for p in flat]).reshape(x.shape[:-1])

    def gradient(x):
        x = np.asarray(x, dtype=float)
        if grad is not None:
            flat = x.reshape(-1, x.shape[-1])
            return np.array([np.asarray(grad(p), float) for p in flat]).reshape(x.shape)
        n = x.shape[-1]
        s = FD_STEP * (1 + np.linalg.norm(x, axis=-1))[..., None]
        cols = []
        for k in range(n):
            e = np.zeros(n)
            e[k] = 1.0
            cols.append((value(x + s * e) - value(x - s * e)) / (2 * s[..., 0]))
        return np.stack(cols, axis=-1)

    def hessian(x):
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        if hess is not None:
            flat = x.reshape(-1, n)
            return np.array([np.asarray(hess(p), float) for p in flat]).reshape(x.shape + (n,))
        s = FD_STEP * (1 + np.linalg.norm(x, axis=-1))[..., None, None]
        rows = []
        for k in range(n):
            e = np.zeros(n)
            e[k] = 1.0
            sk = s[..., 0]
            rows.append((gradient(x + sk * e) - gradient(x - sk * e)) / (2 * sk))
        H = np.stack(rows, axis=-2)
        return 0.5 * (H + np.swapaxes(H, -1, -2))

    def ev(x):
        return value(x), gradient(x), hessian(x)

    return ev


# ---------------------------------------------------------------- support solve

def _diagonal_starts(n):
    starts = [np.eye(n)[i] * s for i in range(n) for s in (1.0, -1.0)]
    signs = np.array(np.meshgrid(*[[1.0, -1.0]] * n, indexing="ij")).reshape(n, -1).T
    starts.extend(signs / np.sqrt(n))
    return np.array(starts)


def support_points(gauge_ev, thetas, tol=1e-13, max_iter=100):
    """Solve grad(phi^2/2)(x) = theta for each row of ``thetas``.

    The minimizer x of phi(x)^2/2 - <theta, x> is the gradient of h^2/2 at
    theta, so h(theta) = phi(x). Starts are the best of the axis and diagonal
    directions (and theta itself); damped Newton finishes.
    Returns x, h, and D^2(phi^2/2)(x).
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    m, n = thetas.shape

    def objective(x):
        v, g, H = gauge_ev(x)
        D = g[..., :, None] * g[..., None, :] + v[..., None, None] * H
        return 0.5 * v**2 - np.sum(thetas * x, axis=-1), v[..., None] * g - thetas, D

    dirs = _diagonal_starts(n)
    phi_d, _, _ = gauge_ev(dirs)
    proj = thetas @ dirs.T
    best_val = -np.maximum(proj, 0) ** 2 / (2 * phi_d**2)
    k = np.argmin(best_val, axis=1)
    x = dirs[k] * (np.maximum(proj[np.arange(m), k], 0) / phi_d[k] ** 2)[:, None]
    # theta itself is usually the best start for near-round bodies
    phi_t, _, _ = gauge_ev(thetas)
    t_val = -np.sum(thetas * thetas, axis=1) ** 2 / (2 * phi_t**2)
    use_t = t_val < np.min(best_val, axis=1)
    x[use_t] = thetas[use_t] * (np.sum(thetas[use_t] ** 2, axis=1) / phi_t[use_t] ** 2)[:, None]

    f, g, D = objective(x)
    scale = np.linalg.norm(thetas, axis=1)
    for _ in range(max_iter):
        gn = np.linalg.norm(g, axis=1)
        active = gn > tol * scale
        if not np.any(active):
            break
        step = np.linalg.solve(D[active], g[active][..., None])[..., 0]
        t = np.ones(step.shape[0])
        xa, fa = x[active], f[active]
        for _ in range(40):
            trial = xa - t[:, None] * step
            ft = 0.5 * gauge_ev(trial)[0] ** 2 - np.sum(thetas[active] * trial, axis=1)
            ok = ft <= fa + 1e-14 * np.abs(fa) + 1e-300
            if np.all(ok):
                break
            t = np.where(ok, t, 0.5 * t)
        x[active] = xa - t[:, None] * step
        f, g, D = objective(x)
    else:
        gn = np.linalg.norm(g, axis=1)
        if np.any(gn > 1e3 * tol * scale):
            raise OptimizerStall(f"support solve: residual {gn.max():.3e} after {max_iter} iterations")
    h = gauge_ev(x)[0]
    return x, h, D


# ---------------------------------------------------------------- the body

class ConvexBody:
    """Gauge phi and support function h of a symmetric convex body.

    Use make_body to construct. Immutable after construction.
    """

    def __init__(self, spec: BodySpec, gauge_ev, support_ev, numeric_support: bool):
        self.spec = spec
        self.n = spec.dim
        self.alpha = float(spec.alpha)
        self.beta = self.alpha / (self.alpha - 1.0)
        self._gauge = gauge_ev
        self._support = support_ev
        self.numeric_support = numeric_support

    # gauge side
    def phi(self, x):
        return self._gauge(np.asarray(x, float))[0]

    def grad_phi(self, x):
        return self._gauge(np.asarray(x, float))[1]

    def hess_phi(self, x):
        return self._gauge(np.asarray(x, float))[2]

    def gauge_all(self, x):
        return self._gauge(np.asarray(x, float))

    # support side
    def h(self, y):
        return self._support(np.asarray(y, float))[0]

    def grad_h(self, y):
        return self._support(np.asarray(y, float))[1]

    def hess_h(self, y):
        return self._support(np.asarray(y, float))[2]

    def support_all(self, y):
        return self._support(np.asarray(y, float))

    def hess_half_phi2(self, x):
        """D^2(phi^2/2), which is 0-homogeneous."""
        if self.spec.kind == "ball":
            x = np.asarray(x, float)
            return np.broadcast_to(np.eye(self.n), x.shape + (self.n,)).copy()
        if self.spec.kind == "ellipsoid":
            x = np.asarray(x, float)
            a = np.linalg.inv(np.asarray(self.spec.matrix, float))
            return np.broadcast_to(a, x.shape + (self.n,)).copy()
        v, g, H = self.gauge_all(x)
        return g[..., :, None] * g[..., None, :] + v[..., None, None] * H

    @property
    def is_unconditional(self):
        return self.spec.is_unconditional

    def potential(self, scale=1.0, alpha=None):
        return HomogeneousPotential(self, self.alpha if alpha is None else alpha, scale)


def _lq_support_closed(q, n):
    qd = q / (q - 1.0)
    return _lq_gauge(qd, 0.0)


def _numeric_support(gauge_ev):
    def ev(y):
        y = np.asarray(y, dtype=float)
        shape = y.shape
        flat = y.reshape(-1, shape[-1])
        r = np.linalg.norm(flat, axis=1)
        theta = flat / r[:, None]
        x, h, D = support_points(gauge_ev, theta)
        D2H = np.linalg.inv(D)
        grad = x / h[:, None]
        hess = (D2H - grad[:, :, None] * grad[:, None, :]) / h[:, None, None]
        hess = 0.5 * (hess + np.swapaxes(hess, 1, 2))
        n = shape[-1]
        return ((h * r).reshape(shape[:-1]), grad.reshape(shape),
                (hess / r[:, None, None]).reshape(shape + (n,)))

    return ev


def _validate(body: ConvexBody, samples=100, seed=0):
    rng = np.random.default_rng(seed)
    n = body.n
    x = rng.standard_normal((samples, n))
    if body.spec.kind == "lq_ball" and body.spec.regularization_eps == 0:
        x += 0.1 * np.sign(x)  # keep off the hyperplanes where derivatives blow up
    t = rng.uniform(0.1, 10.0, samples)
    v = body.phi(x)
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise NonConvex("gauge must be positive away from the origin")
    if np.max(np.abs(body.phi(t[:, None] * x) - t * v) / (t * v)) > 1e-8:
        raise DomainError("gauge is not positively 1-homogeneous")
    if np.max(np.abs(body.phi(-x) - v) / v) > 1e-10:
        raise NotEven("gauge is not even")
    D = body.hess_half_phi2(x)
    lo = np.linalg.eigvalsh(D)[:, 0]
    if np.any(lo < -1e-7 * np.abs(D).max()):
        raise NonConvex(f"D^2(phi^2/2) has eigenvalue {lo.min():.3e}")


def make_body(spec: BodySpec) -> ConvexBody:
    """Build a ConvexBody with closed-form evaluators where available."""
    if spec.kind not in KINDS:
        raise DomainError(f"unknown body kind {spec.kind!r}")
    if spec.dim < 1:
        raise DomainError("dimension must be positive")
    if not spec.alpha > 1:
        raise DomainError("alpha must exceed 1")
    if spec.regularization_eps < 0:
        raise DomainError("regularization_eps must be nonnegative")
    n = spec.dim
    numeric = False
    if spec.kind == "ball":
        def gauge(x):
            return _norm2(x)
        support = gauge
    elif spec.kind == "ellipsoid":
        m = np.asarray(spec.matrix, dtype=float)
        if m.shape != (n, n) or not np.allclose(m, m.T):
            raise DegenerateMatrix("ellipsoid matrix must be symmetric n x n")
        if np.linalg.eigvalsh(m)[0] <= 0:
            raise DegenerateMatrix("ellipsoid matrix must be positive definite")
        gauge = _quadratic_gauge(np.linalg.inv(m))
        support = _quadratic_gauge(m)
    elif spec.kind == "lq_ball":
        if spec.q is None or not spec.q > 1:
            raise DomainError("lq_ball requires q > 1")
        gauge = _lq_gauge(spec.q, spec.regularization_eps)
        if spec.regularization_eps == 0:
            support = _lq_support_closed(spec.q, n)
        else:
            support = _numeric_support(gauge)
            numeric = True
    else:
        if spec.custom_gauge is None:
            raise DomainError("custom kind needs custom_gauge")
        gauge = _fd_gauge(spec.custom_gauge, spec.custom_grad, spec.custom_hess)
        support = _numeric_support(gauge)
        numeric = True
    body = ConvexBody(spec, gauge, support, numeric)
    _validate(body)
    return body


def support_from_gauge(body: ConvexBody, theta, numeric=False):
    """h(theta) = max over x of <theta, x>/phi(x).

    Closed form for analytic kinds unless ``numeric`` is set, in which case the
    multistart Newton solve is always used.
    """
    theta = np.asarray(theta, dtype=float)
    if not np.allclose(np.linalg.norm(theta, axis=-1), 1.0, atol=1e-12):
        raise DomainError("theta must be a unit vector")
    if numeric or body.numeric_support:
        flat = theta.reshape(-1, body.n)
        _, h, _ = support_points(body._gauge, flat)
        return h.reshape(theta.shape[:-1]) if theta.ndim > 1 else float(h[0])
    h = body.h(theta)
    return h if theta.ndim > 1 else float(h)


# ---------------------------------------------------------------- sphere maps

@dataclass(frozen=True)
class SphereMapPair:
    """T sends normal directions to radial directions, S is its inverse."""

    body: ConvexBody = field(repr=False)

    def T(self, theta):
        g = self.body.grad_h(theta)
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def S(self, x):
        g = self.body.grad_phi(x)
        return g / np.linalg.norm(g, axis=-1, keepdims=True)


def sphere_maps(body: ConvexBody) -> SphereMapPair:
    spec = body.spec
    if spec.kind == "lq_ball" and spec.regularization_eps == 0 and spec.q != 2:
        raise NearSingularHessian(
            "l^q gauge with q != 2 is singular on coordinate hyperplanes; set regularization_eps")
    return SphereMapPair(body)


def verify_phih(body: ConvexBody, grid) -> float:
    """Max residual of h(theta)|grad phi(T theta)| = 1 and phi(T theta)|grad h(theta)| = 1."""
    theta = grid.nodes
    maps = sphere_maps(body)
    x = maps.T(theta)
    h, gh, _ = body.support_all(theta)
    ph, gp, _ = body.gauge_all(x)
    r1 = np.abs(h * np.linalg.norm(gp, axis=-1) - 1)
    r2 = np.abs(ph * np.linalg.norm(gh, axis=-1) - 1)
    return float(max(r1.max(), r2.max()))


# ---------------------------------------------------------------- potentials

def _fix_origin(v, grad, hess, degree, hess_at_e1):
    """Values at x = 0: the gradient vanishes and the Hessian is 0 for degree > 2.

    For degree 2 the Hessian is 0-homogeneous; the limit along e_1 is used,
    which is exact for quadratics. Below degree 2 it stays nan.
    """
    zero = v == 0
    if np.any(zero):
        grad[zero] = 0.0
        if degree > 2:
            hess[zero] = 0.0
        elif degree == 2:
            hess[zero] = hess_at_e1()


class HomogeneousPotential:
    """Phi = (c/alpha) phi^alpha and its conjugate Phi* = (c^(1-beta)/beta) h^beta.

    ``linear`` optionally composes with an invertible matrix A: Phi_A(x) = Phi(Ax).
    """

    def __init__(self, body: ConvexBody, alpha: float, scale: float = 1.0, linear=None):
        if not alpha > 1:
            raise DomainError("alpha must exceed 1")
        self.body = body
        self.n = body.n
        self.alpha = float(alpha)
        self.beta = self.alpha / (self.alpha - 1)
        self.scale = float(scale)
        self.A = None if linear is None else np.asarray(linear, dtype=float)

    @property
    def degree(self):
        return self.alpha

    def linear_image(self, A):
        A = np.asarray(A, dtype=float)
        total = A if self.A is None else self.A @ A
        return HomogeneousPotential(self.body, self.alpha, self.scale, total)

    def _pre(self, x):
        x = np.asarray(x, dtype=float)
        return x if self.A is None else x @ self.A.T

    def value(self, x):
        return self.scale / self.alpha * self.body.phi(self._pre(x)) ** self.alpha

    def all(self, x):
        """Value, gradient and Hessian of Phi."""
        a, c = self.alpha, self.scale
        v, g, H = self.body.gauge_all(self._pre(x))
        val = c / a * v**a
        grad = c * v[..., None] ** (a - 1) * g
        hess = c * ((a - 1) * v[..., None, None] ** (a - 2) * g[..., :, None] * g[..., None, :]
                    + v[..., None, None] ** (a - 1) * H)
        _fix_origin(v, grad, hess, a, lambda: c * self.body.hess_half_phi2(np.eye(self.n)[:1])[0])
        if self.A is not None:
            grad = grad @ self.A
            hess = self.A.T @ hess @ self.A
        return val, grad, hess

    def conjugate_all(self, y):
        """Value, gradient and Hessian of Phi*."""
        b, k = self.beta, self.scale ** (1 - self.beta)
        y = np.asarray(y, dtype=float)
        if self.A is not None:
            Ainv_t = np.linalg.inv(self.A).T
            y = y @ Ainv_t.T
        h, g, H = self.body.support_all(y)
        val = k / b * h**b
        grad = k * h[..., None] ** (b - 1) * g
        hess = k * ((b - 1) * h[..., None, None] ** (b - 2) * g[..., :, None] * g[..., None, :]
                    + h[..., None, None] ** (b - 1) * H)
        _fix_origin(h, grad, hess, b, lambda: k * self._support_half_hessian_e1())
        if self.A is not None:
            grad = grad @ Ainv_t
            hess = Ainv_t.T @ hess @ Ainv_t
        return val, grad, hess

    def _support_half_hessian_e1(self):
        h, g, H = self.body.support_all(np.eye(self.n)[:1])
        return (g[0][:, None] * g[0][None, :] + h[0] * H[0])

    def conjugate_value(self, y):
        return self.conjugate_all(y)[0]

    def gauge_at_axes(self):
        """Extent of {Phi <= 1} relative quantities along each axis (support of the gauge ball)."""
        e = np.eye(self.n)
        if self.A is None:
            return self.body.h(e)
        # support of A^{-1} K in direction e_i is h_K(A^{-T} e_i)
        return self.body.h(e @ np.linalg.inv(self.A))

    def polar_at_axes(self):
        e = np.eye(self.n)
        if self.A is None:
            return self.body.phi(e)
        return self.body.phi(e @ self.A.T)
