"""Closed-form constant transfers and pointwise criteria for local p-Brunn-Minkowski."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .body import ConvexBody
from .errors import AxisProximity, DomainError, NonPSD, NonpositiveDenominator, OutOfBracket
from .spectral import hilbert_metric

BRACKET_TOL = 1e-14


@dataclass(frozen=True)
class TransferInput:
    n: int
    alpha: float
    C_alpha: Optional[float] = None
    C_nu: Optional[float] = None
    p: Optional[float] = None

    @property
    def beta(self):
        return _beta(self.alpha)


def _beta(alpha):
    if not alpha > 1:
        raise DomainError("alpha must exceed 1")
    return alpha / (alpha - 1)


def _check_bracket(alpha, C):
    _beta(alpha)
    lo = 1 - 1 / alpha
    if not (lo - BRACKET_TOL <= C <= 1 + BRACKET_TOL):
        raise OutOfBracket(f"C_alpha = {C} outside [{lo}, 1]")


def transfer_forward(n, alpha, C_alpha):
    """C_nu = C_alpha^2 / ((n - alpha) C_alpha + alpha - 1)."""
    _check_bracket(alpha, C_alpha)
    den = (n - alpha) * C_alpha + alpha - 1
    if not den > 0:
        raise NonpositiveDenominator(f"(n - alpha) C + alpha - 1 = {den}")
    return C_alpha**2 / den


def transfer_backward(n, alpha, C_nu):
    """C_mu = max(1 - 1/alpha, n C_nu)."""
    _beta(alpha)
    if not C_nu > 0:
        raise DomainError("C_nu must be positive")
    return max(1 - 1 / alpha, n * C_nu)


def p_from_Calpha(n, alpha, C_alpha):
    """p = n - ((n - alpha) C + alpha - 1) / C^2."""
    _check_bracket(alpha, C_alpha)
    return n - ((n - alpha) * C_alpha + alpha - 1) / C_alpha**2


def p_from_Cnu(n, C_nu):
    """n - p = 1/C_nu."""
    if not C_nu > 0:
        raise DomainError("C_nu must be positive")
    return n - 1 / C_nu


def params_from_p(n, p):
    """(alpha, beta, C_nu) = (1 - n/p, 1 - p/n, 1/(n beta)) for p < 0."""
    if not p < 0:
        raise DomainError("params_from_p needs p < 0")
    alpha = 1 - n / p
    beta = 1 - p / n
    return alpha, beta, 1 / (n * beta)


def product_constant(p_exponent, n):
    """Best even constant of the product measure with density exp(-sum |x_i|^p / p)."""
    p = float(p_exponent)
    if not p > 1 or n < 1:
        raise DomainError("product_constant needs p > 1 and n >= 1")
    if n == 1 or p >= 2:
        return 1 - 1 / p
    return 0.5


def pinch_threshold(n):
    """alpha/beta ratio at which 1 - n r - r^2 vanishes."""
    return (math.sqrt(n * n + 4) - n) / 2


def p_from_ratio(n, r):
    return 1 - n * r - r * r


# ---------------------------------------------------------------- Q_ij

@dataclass(frozen=True, eq=False)
class QijReport:
    points: np.ndarray
    q_dual: np.ndarray         # (P, n, n) from the support function
    q_primal: np.ndarray       # (P, n, n) from the gauge
    k2ij_margin: np.ndarray    # (P, n, n) gauge-side margin, nan on the diagonal
    spe_margin: np.ndarray     # (P, n, n) Q-side margin, nan on the diagonal
    theorem_applicable: bool
    min_margin: float
    argmin: tuple
    delta: float
    notes: list = field(default_factory=list)

    @property
    def max_disagreement(self):
        """Largest |Q_dual - Q_primal| / max(1, |Q_primal|) over points and index pairs."""
        err = np.abs(self.q_dual - self.q_primal) / np.maximum(1.0, np.abs(self.q_primal))
        return float(np.max(err))

    def offdiagonal(self, which="dual"):
        q = self.q_dual if which == "dual" else self.q_primal
        n = q.shape[1]
        mask = ~np.eye(n, dtype=bool)
        return q[:, mask]

    @property
    def condition_holds(self):
        return bool(self.min_margin >= 0)


def sample_orthant_points(n, count, seed=0, delta=1e-3):
    """Uniform directions in the open positive orthant at distance >= delta from the hyperplanes."""
    rng = np.random.default_rng(seed)
    out = []
    while sum(len(o) for o in out) < count:
        y = np.abs(rng.standard_normal((2 * count, n)))
        y /= np.linalg.norm(y, axis=1, keepdims=True)
        out.append(y[np.all(y > delta, axis=1)])
    return np.vstack(out)[:count]


def qij_report(body: ConvexBody, points, delta=1e-3) -> QijReport:
    """Q_ij = <h (D^2h)^{-1} e_i^, e_j^> at y and phi phi_ij/(phi_i phi_j) at x = h(y) grad h(y)."""
    y = np.atleast_2d(np.asarray(points, dtype=float))
    y = y / np.linalg.norm(y, axis=1, keepdims=True)
    n = body.n
    if np.any(y <= delta):
        raise AxisProximity(f"sample points must satisfy y_i > {delta}")
    h, gh, Hh = body.support_all(y)
    # tangent frames at the sample points
    E = np.linalg.svd(np.eye(n)[None] - y[:, :, None] * y[:, None, :])[0][:, :, : n - 1]
    D2h = np.einsum("pia,pij,pjb->pab", E, Hh, E)
    inv = np.linalg.inv(D2h)
    # e^_i = e_i / y_i - grad h / h, tangent at y
    ehat = np.eye(n)[None] / y[:, :, None] - (gh / h[:, None])[:, None, :]
    ehat_t = np.einsum("pkj,pja->pka", ehat, E)
    q_dual = h[:, None, None] * np.einsum("pia,pab,pjb->pij", ehat_t, inv, ehat_t)

    x = h[:, None] * gh
    ph, gp, Hp = body.gauge_all(x)
    if np.any(gp <= 0):
        raise AxisProximity("gauge partial derivatives must be positive at mapped points")
    q_primal = ph[:, None, None] * Hp / (gp[:, :, None] * gp[:, None, :])
    k2 = Hp / (gp[:, :, None] * gp[:, None, :])

    notes = [f"points within {delta} of a coordinate hyperplane are excluded"]
    dd = np.diagonal(q_dual, axis1=1, axis2=2)
    kd = np.diagonal(k2, axis1=1, axis2=2)
    off = ~np.eye(n, dtype=bool)
    if n > 2:
        f = 2 * n / (n - 2)
        spe = dd[:, :, None] + dd[:, None, :] - f * q_dual
        k2ij = kd[:, :, None] + kd[:, None, :] - f * k2
        applicable = True
    else:
        # the 2n/(n-2) factor is undefined; only phi_ij <= 0 is checked
        spe = -q_dual
        k2ij = -k2
        applicable = False
        notes.append("n = 2: margins are -Q_ij and -phi_ij/(phi_i phi_j) (sufficient condition phi_ij <= 0)")
    spe = np.where(off[None], spe, np.nan)
    k2ij = np.where(off[None], k2ij, np.nan)
    flat = np.nanargmin(spe.reshape(len(y), -1))
    pidx, rem = divmod(int(flat), n * n)
    return QijReport(y, q_dual, q_primal, k2ij, spe, applicable,
                     float(np.nanmin(spe)), (pidx, rem // n, rem % n), delta, notes)


# ---------------------------------------------------------------- pinching

def pinch_lambda(body: ConvexBody, grid):
    """lambda = min over nodes of the smallest eigenvalue of h (D^2h)^{-1}; p = 1 - lambda."""
    metric, _ = hilbert_metric(body, grid)
    lam = float(np.min(np.linalg.eigvalsh(metric)[:, 0]))
    return lam, 1 - lam


def pinch_alphabeta(body: ConvexBody, grid):
    """Extreme eigenvalues of D^2(phi^2/2) over the sphere and p = 1 - n r - r^2, r = alpha/beta."""
    D = body.hess_half_phi2(grid.nodes)
    ev = np.linalg.eigvalsh(D)
    a, b = float(ev[:, 0].min()), float(ev[:, -1].max())
    if not a > 0:
        raise NonPSD(f"D^2 Phi has eigenvalue {a:.3e}")
    return a, b, p_from_ratio(body.n, a / b)


def richardson(values, steps, order=1):
    """Extrapolate values(step) to step -> 0 assuming error ~ step^order (last two samples)."""
    v = np.asarray(values, dtype=float)
    s = np.asarray(steps, dtype=float)
    if v.size < 2:
        raise DomainError("need at least two samples")
    r = (s[-2] / s[-1]) ** order
    return float((r * v[-1] - v[-2]) / (r - 1))
