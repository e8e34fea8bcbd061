"""Generalized Blaschke-Santalo functional, its set version, and the hypotheses behind it."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

from .body import ConvexBody, HomogeneousPotential
from .errors import (
    DivergentIntegral,
    DomainError,
    LegendreFailure,
    NearSingularHessian,
    NotEven,
    VolumeEstimateTooNoisy,
)
from .euclidean import build_box_grid, default_box
from .functions import TestFunction

FACE_TOL = 1e-17


@dataclass(frozen=True, eq=False)
class ConvexFunction:
    """Even convex f with derivatives; ``conjugate`` is f* when known in closed form."""

    dim: int
    value: Callable
    gradient: Callable
    hessian: Callable
    conjugate: Optional[Callable] = None
    label: str = "f"

    @classmethod
    def from_test_function(cls, tf: TestFunction, conjugate=None, label=None):
        return cls(tf.dim, tf.value, tf.gradient, tf.hessian, conjugate, label or tf.expression)

    @classmethod
    def parse(cls, text, dim, conjugate=None):
        return cls.from_test_function(TestFunction.parse(text, dim), conjugate, text)

    @classmethod
    def from_potential(cls, potential: HomogeneousPotential):
        return cls(potential.n, potential.value, lambda x: potential.all(x)[1],
                   lambda x: potential.all(x)[2], potential.conjugate_value, "Phi")


@dataclass(frozen=True, eq=False)
class BSInput:
    potential: HomogeneousPotential
    f: ConvexFunction
    points_per_half: int = 0
    box: Optional[np.ndarray] = None
    tol: float = 1e-10
    info: dict = field(default_factory=dict)

    @property
    def p(self):
        return self.potential.alpha

    @property
    def n(self):
        return self.potential.n


# ---------------------------------------------------------------- Legendre transform

def legendre_transform(f: ConvexFunction, ys, radius, tol=1e-11, max_iter=60):
    """f*(y) = sup_x <x, y> - f(x) by a coarse grid maximum followed by damped Newton."""
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    n = ys.shape[1]
    m = 201 if n == 1 else 41
    axis = np.linspace(-radius, radius, m)
    cand = np.stack([g.ravel() for g in np.meshgrid(*[axis] * n, indexing="ij")], axis=1)
    fc = f.value(cand)
    x = np.empty_like(ys)
    for s in range(0, len(ys), 2048):
        block = ys[s:s + 2048] @ cand.T - fc
        x[s:s + 2048] = cand[np.argmax(block, axis=1)]

    def obj(x):
        return np.sum(x * ys, axis=1) - f.value(x)

    val = obj(x)
    for _ in range(max_iter):
        g = f.gradient(x) - ys
        scale = 1 + np.linalg.norm(ys, axis=1)
        active = np.linalg.norm(g, axis=1) > tol * scale
        if not np.any(active):
            break
        H = f.hessian(x[active])
        try:
            step = np.linalg.solve(H, g[active][..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise LegendreFailure("singular Hessian in the Legendre solve") from exc
        t = np.ones(len(step))
        xa, va = x[active], val[active]
        for _ in range(50):
            trial = xa - t[:, None] * step
            tv = np.sum(trial * ys[active], axis=1) - f.value(trial)
            ok = tv >= va - 1e-13 * (1 + np.abs(va))
            if np.all(ok):
                break
            t = np.where(ok, t, 0.5 * t)
        x[active] = xa - t[:, None] * step
        val = obj(x)
    else:
        g = f.gradient(x) - ys
        if np.any(np.linalg.norm(g, axis=1) > 1e3 * tol * (1 + np.linalg.norm(ys, axis=1))):
            raise LegendreFailure("Newton iteration for f* did not converge")
    return val, x


def check_convex_even(f: ConvexFunction, radius, samples=200, seed=0, tol=1e-9):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-radius, radius, (samples, f.dim))
    b = rng.uniform(-radius, radius, (samples, f.dim))
    fa, fb = f.value(a), f.value(b)
    scale = 1 + np.abs(fa) + np.abs(fb)
    if np.any(f.value(0.5 * (a + b)) > 0.5 * (fa + fb) + tol * scale):
        raise DomainError("f fails the midpoint convexity check")
    return bool(np.all(np.abs(f.value(-a) - fa) <= tol * scale))


def _fenchel_young_gap(f, conj, radius, seed=1, samples=50):
    """max |f*(grad f(x)) + f(x) - <x, grad f(x)>| at sampled x."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-radius, radius, (samples, f.dim)) * 0.5
    g = f.gradient(x)
    return float(np.max(np.abs(conj(g) + f.value(x) - np.sum(x * g, axis=1))
                        / (1 + np.abs(f.value(x)))))


# ---------------------------------------------------------------- integrals

def _box_integral(log_integrand, half_widths, ppp, grow=1.5, max_grow=40):
    """int exp(log_integrand) over a graded tensor box, enlarged until the faces are negligible."""
    L = np.asarray(half_widths, dtype=float)
    for _ in range(max_grow):
        grid = build_box_grid(L, ppp)
        li = log_integrand(grid.nodes)
        top = np.max(li)
        face = np.max(log_integrand(grid.face_points()))
        if face - top < np.log(FACE_TOL):
            return float(np.dot(grid.weights, np.exp(li - top))) * np.exp(top), L
        L = L * grow
    raise DivergentIntegral("integrand does not decay inside the largest box tried")


def bs_ratio(inp: BSInput) -> float:
    """[int e^-f * (int e^{-f*(grad Phi)/(p-1)})^(p-1)] / (int e^-Phi)^p."""
    pot, f, p = inp.potential, inp.f, inp.p
    n = inp.n
    if n not in (1, 2):
        raise DomainError("bs_ratio is implemented for n = 1, 2")
    ppp = inp.points_per_half or (200 if n == 1 else 70)
    L0 = default_box(pot) if inp.box is None else np.asarray(inp.box, float)
    if not check_convex_even(f, float(np.max(L0))):
        raise NotEven("f is not even at sampled points")

    I_phi, _ = _box_integral(lambda x: -pot.value(x), L0, ppp)
    I_f, Lf = _box_integral(lambda x: -f.value(x), L0, ppp)

    radius = 4 * float(np.max(Lf))
    if f.conjugate is not None:
        conj = f.conjugate
    else:
        def conj(y):
            return legendre_transform(f, y, radius)[0]
    gap = _fenchel_young_gap(f, conj, float(np.max(Lf)))
    if gap > 1e-8:
        raise LegendreFailure(f"Fenchel-Young gap {gap:.2e}")

    def log_dual(x):
        return -conj(pot.all(x)[1]) / (p - 1)

    I_star, _ = _box_integral(log_dual, L0, ppp)
    inp.info.update(I_f=I_f, I_star=I_star, I_phi=I_phi, fenchel_young_gap=gap)
    return float(np.exp(np.log(I_f) + (p - 1) * np.log(I_star) - p * np.log(I_phi)))


# ---------------------------------------------------------------- set version

def _angular_rule(points_per_quadrant=200, grading=6):
    """Nodes/weights on the circle, per quadrant graded at both ends (axis singularities)."""
    u, w = np.polynomial.legendre.leggauss(points_per_quadrant)
    u = 0.5 * (u + 1)
    w = 0.5 * w
    # angle to the nearer axis from the accurate tail of the beta cdf
    near = np.pi / 2 * special.betainc(grading, grading, np.minimum(u, 1 - u))
    first = np.where((u <= 0.5)[:, None],
                     np.stack([np.cos(near), np.sin(near)], axis=1),
                     np.stack([np.sin(near), np.cos(near)], axis=1))
    dt = np.pi / 2 * np.exp((grading - 1) * np.log(u * (1 - u)) - special.betaln(grading, grading)) * w
    quads, p = [], first
    for _ in range(4):
        quads.append(p)
        p = np.stack([-p[:, 1], p[:, 0]], axis=1)
    return np.vstack(quads), np.tile(dt, 4)


def _sphere_rule(n, points_per_quadrant):
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if n == 2:
        return _angular_rule(points_per_quadrant)
    raise DomainError("set volumes are implemented for n = 1, 2")


def body_volume(body: ConvexBody, points_per_quadrant=200):
    """|K| = (1/n) int phi^-n over the sphere."""
    th, w = _sphere_rule(body.n, points_per_quadrant)
    return float(np.dot(w, body.phi(th) ** (-body.n)) / body.n)


def gradient_image_volume(body: ConvexBody, potential: HomogeneousPotential, points_per_quadrant=200):
    """|grad Phi*(K°)| = int_{K°} det D^2 Phi*, reduced to the sphere by homogeneity."""
    n, b = body.n, potential.beta
    th, w = _sphere_rule(n, points_per_quadrant)
    _, _, H = potential.conjugate_all(th)
    det = np.linalg.det(H)
    if np.any(~np.isfinite(det)) or np.any(det < 0):
        raise NearSingularHessian("det D^2 Phi* is not finite and positive on the sphere")
    return float(np.dot(w, det * body.h(th) ** (-n * (b - 1))) / (n * (b - 1)))


def level_set_volume(potential: HomogeneousPotential, level, points_per_quadrant=200):
    """|{Phi <= level}| for Phi = (c/alpha) phi^alpha."""
    a, c, n = potential.alpha, potential.scale, potential.n
    th, w = _sphere_rule(n, points_per_quadrant)
    r = (a * level / c) ** (1 / a)
    g = potential.body.phi(th if potential.A is None else th @ potential.A.T)
    return float(r**n * np.dot(w, g ** (-n)) / n)


def bs_set_ratio(body: ConvexBody, potential: HomogeneousPotential, p=None, points_per_quadrant=200):
    """|K| |grad Phi*(K°)|^(p-1) / |{Phi <= 1/p}|^p."""
    p = potential.alpha if p is None else float(p)
    if abs(p - potential.alpha) > 1e-12:
        raise DomainError("p must equal the homogeneity degree of Phi")
    vk = body_volume(body, points_per_quadrant)
    vi = gradient_image_volume(body, potential, points_per_quadrant)
    vl = level_set_volume(potential, 1 / p, points_per_quadrant)
    return float(vk * vi ** (p - 1) / vl**p)


def bs_set_ratio_montecarlo(body: ConvexBody, potential: HomogeneousPotential, samples=200_000,
                            seed=0, max_rel_error=2e-2):
    """Seeded Monte Carlo estimate of the set ratio and its relative standard error."""
    rng = np.random.default_rng(seed)
    n, p = body.n, potential.alpha
    ext_k = body.h(np.eye(n))
    ext_polar = body.phi(np.eye(n))

    def mean_err(vals, box_vol):
        m = vals.mean()
        return box_vol * m, vals.std(ddof=1) / np.sqrt(len(vals)) / max(m, 1e-300)

    x = rng.uniform(-1, 1, (samples, n)) * ext_k
    vk, ek = mean_err((body.phi(x) <= 1).astype(float), np.prod(2 * ext_k))
    y = rng.uniform(-1, 1, (samples, n)) * ext_polar
    inside = body.h(y) <= 1
    dets = np.zeros(samples)
    dets[inside] = np.linalg.det(potential.conjugate_all(y[inside])[2])
    vi, ei = mean_err(dets, np.prod(2 * ext_polar))
    vl = level_set_volume(potential, 1 / p)
    rel = float(np.hypot(ek, (p - 1) * ei))
    if rel > max_rel_error:
        raise VolumeEstimateTooNoisy(f"relative standard error {rel:.2e}")
    return float(vk * vi ** (p - 1) / vl**p), rel


# ---------------------------------------------------------------- hypotheses

def orthant_concavity_margin(potential: HomogeneousPotential, p, samples) -> float:
    """min over samples of -lambda_max of the Hessian of z -> Phi(z_1^(1/p), ..., z_n^(1/p))."""
    z = np.atleast_2d(np.asarray(samples, dtype=float))
    if np.any(z <= 0):
        raise DomainError("samples must lie in the open positive orthant")
    x = z ** (1 / p)
    _, g, H = potential.all(x)
    d = (1 / p) * z ** (1 / p - 1)
    dd = (1 / p) * (1 / p - 1) * z ** (1 / p - 2)
    G = H * d[:, :, None] * d[:, None, :]
    G[:, np.arange(z.shape[1]), np.arange(z.shape[1])] += g * dd
    return float(np.min(-np.linalg.eigvalsh(G)[:, -1]))


def rt_log_derivative(potential: HomogeneousPotential, a, index, base_points, ts, step=1e-5):
    """-d/dt log r(t), r(t) = exp(-a Phi*(y' + t e_i)) det D^2 Phi*(y' + t e_i), by central differences."""
    base = np.atleast_2d(np.asarray(base_points, dtype=float)).copy()
    base[:, index] = 0.0
    ts = np.asarray(ts, dtype=float)
    e = np.eye(base.shape[1])[index]

    def logr(t):
        y = base[:, None, :] + t[None, :, None] * e
        val, _, H = potential.conjugate_all(y)
        sign, ld = np.linalg.slogdet(H)
        if np.any(sign <= 0) or np.any(~np.isfinite(ld)):
            raise NearSingularHessian("D^2 Phi* is singular along the ray")
        return -a * val + ld

    h = step * (1 + np.abs(ts))
    return -(logr(ts + h) - logr(ts - h)) / (2 * h)


def rt_monotone_margin(potential: HomogeneousPotential, a, index, base_points, ts) -> float:
    """Minimum of -d/dt log r(t) over the rays; nonnegative means r decreases."""
    p = potential.alpha
    if not a < 1 / (p - 1):
        raise DomainError("the criterion needs a < 1/(p-1)")
    return float(np.min(rt_log_derivative(potential, a, index, base_points, ts)))


def consequent_constant(p, a):
    """max(1 - 1/p, (p-1)/(p - a(p-1)))."""
    return max(1 - 1 / p, (p - 1) / (p - a * (p - 1)))


def random_perturbation(potential: HomogeneousPotential, seed=0) -> ConvexFunction:
    """s Phi(x) + c |x|^2 + d sqrt(1 + (x_1 - x_2)^2) (n = 2) with seeded random s, c, d."""
    rng = np.random.default_rng(seed)
    s, c, d = rng.uniform(0.5, 2.0), rng.uniform(0.0, 0.5), rng.uniform(0.0, 1.0)
    n = potential.n
    names = ["x"] if n == 1 else [f"x{i + 1}" for i in range(n)]
    quad = "+".join(f"{v}**2" for v in names)
    arg = f"{names[0]}-{names[1]}" if n == 2 else names[0]
    extra = f"+{d!r}*sqrt(1+({arg})**2)"
    g = TestFunction.parse(f"{c!r}*({quad}){extra}", n)

    def value(y):
        return s * potential.value(y) + g.value(y)

    def gradient(y):
        return s * potential.all(y)[1] + g.gradient(y)

    def hessian(y):
        return s * potential.all(y)[2] + g.hessian(y)

    return ConvexFunction(n, value, gradient, hessian, None,
                          f"{s!r}*Phi+{c!r}*|x|^2{extra}")
