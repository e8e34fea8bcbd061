"""Measures on the sphere, radial laws, and the transport identities between them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from .body import ConvexBody, sphere_maps
from .errors import DomainError, NegativeDensity, QuadratureFailure
from .sphere import Field, SphereGrid


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    grid: SphereGrid
    weights: np.ndarray
    normalization: float
    tag: str

    def __post_init__(self):
        if np.any(self.weights < 0):
            raise NegativeDensity(f"{self.tag}: negative weight")
        if abs(self.weights.sum() - 1) > 1e-12:
            raise DomainError(f"{self.tag}: weights must sum to 1")

    @property
    def density(self):
        """Density with respect to the grid's surface measure, normalized."""
        return self.weights / self.grid.weights

    def integrate(self, values):
        return float(np.dot(self.weights, values))


def _normalized(grid, dens, tag):
    raw = grid.weights * dens
    total = raw.sum()
    return DiscreteMeasure(grid, raw / total, float(total), tag)


def frame_matrix(grid: SphereGrid, ambient):
    """Restrict (N, n, n) ambient matrices to the tangent frames."""
    E = grid.frames
    return np.einsum("nia,nij,njb->nab", E, ambient, E)


def support_fields(body: ConvexBody, grid: SphereGrid):
    """h, spherical gradient of h and D^2 h in frame coordinates at the nodes."""
    h, gh, Hh = body.support_all(grid.nodes)
    grad_s = np.einsum("nia,ni->na", grid.frames, gh)
    return h, grad_s, frame_matrix(grid, Hh)


def gauge_fields(body: ConvexBody, grid: SphereGrid):
    """phi, spherical gradient of phi and D^2 phi in frame coordinates at the nodes."""
    p, gp, Hp = body.gauge_all(grid.nodes)
    grad_s = np.einsum("nia,ni->na", grid.frames, gp)
    return p, grad_s, frame_matrix(grid, Hp)


def cone_density(body, grid):
    h, _, D2h = support_fields(body, grid)
    det = np.linalg.det(D2h)
    if not np.all(np.isfinite(det)):
        raise NegativeDensity("D^2 h is not finite at some node; regularize the body")
    if np.any(det < 0):
        raise NegativeDensity(f"det D^2 h = {det.min():.3e} < 0 at a node")
    return h * det


def cone_measure(body: ConvexBody, grid: SphereGrid) -> DiscreteMeasure:
    """nu*: density h det D^2 h; the normalization constant equals n |K|."""
    return _normalized(grid, cone_density(body, grid), "nu*")


def gauge_measure(body: ConvexBody, grid: SphereGrid) -> DiscreteMeasure:
    """nu: density phi^(-n); the normalization constant equals n |K|."""
    p = body.phi(grid.nodes)
    return _normalized(grid, p ** (-grid.dim), "nu")


def pushforward_residual(body: ConvexBody, grid: SphereGrid, g: Field) -> float:
    """|int g(T) dnu* - int g dnu| with g read through its spectral representation."""
    T = sphere_maps(body).T(grid.nodes)
    g_T = grid.interpolate(g.values, T)
    return abs(cone_measure(body, grid).integrate(g_T)
               - gauge_measure(body, grid).integrate(g.values))


def chvar_factor(body: ConvexBody, grid: SphereGrid):
    """phi det D^2 phi / (phi^2 + |grad phi|^2)^(n/2) at the nodes (phi side)."""
    p, gs, D2p = gauge_fields(body, grid)
    det = np.linalg.det(D2p)
    return p * det / (p**2 + np.sum(gs**2, axis=1)) ** (grid.dim / 2)


def change_of_variables_residual(body: ConvexBody, grid: SphereGrid, w, v) -> float:
    """Sup residual of e^-v/int e^-v - e^-w(S)/int e^-w * phi det D^2 phi/(phi^2+|grad phi|^2)^(n/2).

    v lives on the phi side (the nodes are radial directions) and w on the
    normal side; S sends a radial direction to the unit normal there. w may be
    a Field (read spectrally) or a callable on unit vectors.
    """
    S = sphere_maps(body).S(grid.nodes)
    if isinstance(w, Field):
        w_nodes, w_S = w.values, grid.interpolate(w.values, S)
    else:
        w_nodes, w_S = w(grid.nodes), w(S)
    v_nodes = v.values if isinstance(v, Field) else v(grid.nodes)
    lhs = np.exp(-v_nodes) / grid.integrate(np.exp(-v_nodes))
    rhs = np.exp(-w_S) / grid.integrate(np.exp(-w_nodes)) * chvar_factor(body, grid)
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------- radial laws

def radial_moment(m: float, alpha: float) -> float:
    """int_0^inf t^(m-1) exp(-t^alpha/alpha) dt = alpha^(m/alpha - 1) Gamma(m/alpha)."""
    if not m > 0:
        raise DomainError("radial_moment needs m > 0")
    if not alpha > 0:
        raise DomainError("radial_moment needs alpha > 0")
    return float(np.exp((m / alpha - 1) * np.log(alpha) + special.gammaln(m / alpha)))


def moment_ratio(m: float, alpha: float) -> float:
    """radial_moment(m + alpha)/radial_moment(m), which integration by parts makes equal to m."""
    r = float(np.exp(np.log(alpha) + special.gammaln(m / alpha + 1) - special.gammaln(m / alpha)))
    if abs(r - m) > 1e-10 * max(1.0, m):
        raise QuadratureFailure(f"moment ratio {r} differs from {m}")
    return r


@dataclass(frozen=True)
class RadialLaw:
    """Density proportional to s^(m-1) exp(-rate s^alpha) on (0, inf); rate defaults to 1/alpha."""

    alpha: float
    m: float
    rate: Optional[float] = None

    @property
    def c(self):
        return 1 / self.alpha if self.rate is None else self.rate

    def _mass(self, m):
        a = self.alpha
        return np.exp(special.gammaln(m / a) - np.log(a) - (m / a) * np.log(self.c))

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        return s ** (self.m - 1) * np.exp(-self.c * s**self.alpha) / self._mass(self.m)

    def moment(self, k):
        return float(self._mass(self.m + k) / self._mass(self.m))

    def tail(self, s):
        """P(S > s)."""
        return special.gammaincc(self.m / self.alpha, self.c * np.asarray(s, float) ** self.alpha)

    def tail_radius(self, mass):
        """Smallest s with P(S > s) <= mass."""
        u = special.gammainccinv(self.m / self.alpha, mass)
        return float((u / self.c) ** (1 / self.alpha))


def gauge_radial_law(n, alpha, phi_value=1.0):
    """gamma^phi: law of r along a ray where the gauge equals phi_value."""
    return RadialLaw(alpha, n, rate=phi_value**alpha / alpha)


def support_radial_law(n, alpha, h_value=1.0):
    """gamma^theta: law of r along a normal ray of mu*, where h equals h_value."""
    beta = alpha / (alpha - 1)
    return RadialLaw(beta, n * (beta - 1), rate=h_value**beta / alpha)


def cordero_rotem_margin(alpha: float, n: int, phi_value: float, f: Callable,
                         df: Callable, tol=1e-10) -> float:
    """RHS - LHS of Var(f) <= (1/(alpha phi^alpha)) int f'^2 r^(2-alpha) d gamma^phi.

    gamma^phi has density proportional to r^(n-1) exp(-phi^alpha r^alpha/alpha).
    """
    a, p = float(alpha), float(phi_value)

    def dens(r):
        return r ** (n - 1) * np.exp(-(p * r) ** a / a)

    # the law is concentrated at scale 1/phi; split there for the adaptive rule
    scale = 1.0 / p

    def quad(fun):
        total, err = 0.0, 0.0
        for lo, hi in ((0, scale), (scale, 10 * scale), (10 * scale, np.inf)):
            v, e = integrate.quad(fun, lo, hi, epsabs=0, epsrel=1e-13, limit=400)
            total += v
            err += e
        if not np.isfinite(total) or err > 1e-9 * max(1.0, abs(total)):
            raise QuadratureFailure(f"radial quadrature error estimate {err:.2e}")
        return total

    Z = quad(dens)
    m1 = quad(lambda r: f(r) * dens(r)) / Z
    var = quad(lambda r: (f(r) - m1) ** 2 * dens(r)) / Z
    energy = quad(lambda r: df(r) ** 2 * r ** (2 - a) * dens(r)) / Z / (a * p**a)
    return float(energy - var)
