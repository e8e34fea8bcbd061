"""Verification suites run by the CLI; each appends checks to a Report."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import criteria, santalo
from .body import ConvexBody, HomogeneousPotential, make_body, sphere_maps, support_from_gauge, verify_phih
from .bochner import bochner_residual
from .config import RunConfig
from .errors import NearSingularHessian, NumericalFailure
from .functions import TestFunction
from .measure import (
    change_of_variables_residual,
    cone_density,
    cone_measure,
    cordero_rotem_margin,
    gauge_measure,
    moment_ratio,
    pushforward_residual,
)
from .report import Check, Report
from .sphere import Field, build_grid
from .spectral import (
    adjointness_residual,
    assemble_gauge_forms,
    assemble_hilbert_forms,
    best_constant,
    best_even_constant,
    metric_pushforward_residual,
    quadrant_gap,
)


class SuiteContext:
    """State shared between suites of one run (grids, spectral results)."""

    def __init__(self, config: RunConfig, report: Report):
        self.config = config
        self.report = report
        self.body: ConvexBody = make_body(config.body)
        self.n = self.body.n
        self.rng = np.random.default_rng(config.seed)
        self._grids = {}
        self.spectral = {}

    def grid(self, resolution=None):
        r = self.config.resolutions[-1] if resolution is None else resolution
        if r not in self._grids:
            self._grids[r] = build_grid(self.n, r)
        return self._grids[r]

    @property
    def regularized(self):
        return self.body.spec.regularization_eps > 0 or self.body.spec.kind == "custom"

    def prov(self, grid=None, **extra):
        out = {"eps": self.body.spec.regularization_eps}
        if grid is not None:
            out.update(grid_dim=grid.dim, grid_resolution=grid.resolution, grid_nodes=grid.size)
        out.update(extra)
        return out

    def check(self, suite, name, value, tol_name, relation="<=", threshold=None, grid=None,
              inputs=None, **prov):
        t = self.config.tol(tol_name) if threshold is None else threshold
        return self.report.add(Check(suite, name, value, t, relation, inputs or {},
                                     self.prov(grid, tolerance=tol_name, **prov)))

    def maps_available(self):
        try:
            sphere_maps(self.body)
            return True
        except NearSingularHessian as exc:
            self.report.notes.append(f"sphere maps unavailable: {exc}")
            return False


def _trig_field(grid, seed):
    """Even smooth test field: a few low-degree polynomials in the coordinates."""
    rng = np.random.default_rng(seed)
    y = grid.nodes
    c = rng.uniform(-1, 1, 3)
    return Field(grid, c[0] * (y[:, 0] ** 2 - y[:, 1] ** 2) + c[1] * y[:, 0] * y[:, 1]
                 + c[2] * y[:, 0] ** 4)


# ---------------------------------------------------------------- geometry

def geometry(ctx: SuiteContext):
    b, n, rng = ctx.body, ctx.n, ctx.rng
    x = rng.standard_normal((100, n))
    t = rng.uniform(0.1, 10, 100)
    scale = 1 + t * b.phi(x)
    hom = max(np.max(np.abs(b.phi(t[:, None] * x) - t * b.phi(x)) / scale),
              np.max(np.abs(b.h(t[:, None] * x) - t * b.h(x)) / (1 + t * b.h(x))))
    ctx.check("geometry", "homogeneity", hom, "homogeneity", inputs={"samples": 100})
    v, g, _ = b.gauge_all(x)
    ctx.check("geometry", "euler_identity", np.max(np.abs(np.sum(g * x, 1) - v)), "euler")

    pot = HomogeneousPotential(b, b.spec.alpha)
    val, grad, _ = pot.all(x)
    leg = np.abs(pot.conjugate_value(grad) + val - np.sum(x * grad, 1)) / (1 + np.abs(val))
    ctx.check("geometry", "legendre_consistency", np.max(leg), "legendre",
              inputs={"alpha": pot.alpha})

    if not b.numeric_support:
        th = x[:20] / np.linalg.norm(x[:20], axis=1, keepdims=True)
        diff = np.max(np.abs(support_from_gauge(b, th, numeric=True) - b.h(th)))
        ctx.check("geometry", "support_agreement", diff, "support_agreement")
    if ctx.maps_available():
        grid = ctx.grid()
        maps = sphere_maps(b)
        rec = np.max(np.linalg.norm(maps.S(maps.T(grid.nodes)) - grid.nodes, axis=1))
        ctx.check("geometry", "map_reciprocity", rec, "map_reciprocity", grid=grid)
        ctx.check("geometry", "phih_residual", verify_phih(b, grid),
                  "phih_regularized" if ctx.regularized else "phih", grid=grid)


# ---------------------------------------------------------------- measures

def measures(ctx: SuiteContext):
    b, n, grid = ctx.body, ctx.n, ctx.grid()
    ms = np.exp(ctx.rng.uniform(np.log(0.1), np.log(20), 50))
    als = ctx.rng.uniform(1.1, 6, 50)
    err = max(abs(moment_ratio(m, a) - m) / m for m, a in zip(ms, als))
    ctx.check("measures", "moment_ratio", err, "moment_ratio", inputs={"samples": 50})

    nu_star, nu = cone_measure(b, grid), gauge_measure(b, grid)
    ctx.check("measures", "cone_measure_mass", abs(nu_star.weights.sum() - 1), "measure_mass", grid=grid)
    ctx.check("measures", "gauge_measure_mass", abs(nu.weights.sum() - 1), "measure_mass", grid=grid)
    if b.is_unconditional:
        sym = 0.0
        for i in range(n):
            R = grid.reflection(i)
            sym = max(sym, np.max(np.abs(nu_star.weights[R] - nu_star.weights)),
                      np.max(np.abs(nu.weights[R] - nu.weights)))
        ctx.check("measures", "sign_flip_symmetry", sym, "measure_symmetry", grid=grid)

    if ctx.maps_available():
        g = _trig_field(grid, ctx.config.seed)
        ctx.check("measures", "pushforward_residual", pushforward_residual(b, grid, g),
                  "pushforward_regularized" if ctx.regularized else "pushforward", grid=grid)
        # w: normal-side log density of nu*, v: radial-side log density of nu
        w = Field(grid, -np.log(cone_density(b, grid)))
        v = Field(grid, n * np.log(b.phi(grid.nodes)))
        ctx.check("measures", "chvar_residual", change_of_variables_residual(b, grid, w, v),
                  "chvar_regularized" if ctx.regularized else "chvar", grid=grid)

    a = b.spec.alpha
    for label, f, df, phi in (("r", lambda r: r, lambda r: 1.0, 1.0),
                              ("r^2", lambda r: r * r, lambda r: 2 * r, 1.5)):
        m = cordero_rotem_margin(a, n, phi, f, df)
        ctx.check("measures", f"cordero_rotem_margin[f={label}]", m, "cordero_rotem", ">=",
                  threshold=-ctx.config.tol("cordero_rotem"),
                  inputs={"alpha": a, "n": n, "phi": phi})


# ---------------------------------------------------------------- spectral

def _spectral_one(body, grid, maps_ok):
    hf = assemble_hilbert_forms(body, grid)
    even = best_even_constant(hf)
    full = best_constant(hf)
    out = {"resolution": grid.resolution, "even": even, "full": full}
    if maps_ok:
        out["gauge_even"] = best_even_constant(assemble_gauge_forms(body, grid))
    return out


def spectral(ctx: SuiteContext):
    b, n = ctx.body, ctx.n
    maps_ok = ctx.maps_available()
    grids = [ctx.grid(r) for r in ctx.config.resolutions]
    with ThreadPoolExecutor(max_workers=ctx.config.threads) as pool:
        results = list(pool.map(lambda g: _spectral_one(b, g, maps_ok), grids))
    rows = []
    for grid, r in zip(grids, results):
        ctx.spectral[grid.resolution] = r
        even, full = r["even"], r["full"]
        tag = f"[N={grid.resolution}]"
        ctx.report.derived[f"best_even_constant{tag}"] = even.best_constant
        ctx.report.derived[f"implied_p{tag}"] = even.implied_p
        ctx.check("spectral", f"eigen_residual{tag}", even.residual, "eigen_residual", grid=grid)
        ctx.check("spectral", f"unrestricted_constant{tag}", abs(full.best_constant - 1 / (n - 1)),
                  "unrestricted_constant", grid=grid, inputs={"value": full.best_constant})
        if b.spec.kind == "ball":
            ctx.check("spectral", f"ball_even_constant{tag}", abs(even.best_constant - 1 / (2 * n)),
                      "ball_constant", grid=grid, inputs={"value": even.best_constant})
        gauge_c = None
        if "gauge_even" in r:
            gauge_c = r["gauge_even"].best_constant
            ctx.check("spectral", f"side_duality{tag}", abs(even.best_constant - gauge_c),
                      "duality", grid=grid, inputs={"h_side": even.best_constant, "phi_side": gauge_c})
        rows.append([grid.resolution, even.best_constant, gauge_c, full.best_constant, even.implied_p])

    grid = grids[-1]
    for k in range(3):
        u, v = _trig_field(grid, 10 + k), _trig_field(grid, 20 + k)
        ctx.check("spectral", f"adjointness[{k}]", adjointness_residual(b, grid, u, v),
                  "adjointness", grid=grid)
    if maps_ok:
        ctx.check("spectral", "metric_pushforward",
                  metric_pushforward_residual(b, grid, _trig_field(grid, ctx.config.seed)),
                  "metric_pushforward", grid=grid)
    ctx.report.curves["spectral_curve"] = (
        ["resolution", "even_constant_h", "even_constant_phi", "unrestricted_constant", "implied_p"], rows)


# ---------------------------------------------------------------- criteria

def criteria_suite(ctx: SuiteContext):
    b, n = ctx.body, ctx.n
    a = b.spec.alpha
    lo = 1 - 1 / a
    ctx.check("criteria", "transfer_forward_floor",
              abs(criteria.transfer_forward(n, a, lo) - lo / n), "transfer", inputs={"alpha": a})
    ctx.check("criteria", "transfer_round_trip",
              abs(criteria.transfer_backward(n, a, criteria.transfer_forward(n, a, lo)) - lo), "transfer")
    r = criteria.pinch_threshold(n)
    ctx.check("criteria", "pinch_threshold_p", abs(criteria.p_from_ratio(n, r)), "threshold")
    cs = np.linspace(lo, 1, 21)
    ps = [criteria.p_from_Calpha(n, a, c) for c in cs]
    ctx.report.curves["p_vs_Calpha"] = (["C_alpha", "p"], [[float(c), p] for c, p in zip(cs, ps)])

    grid = ctx.grid()
    try:
        amin, bmax, p_ab = criteria.pinch_alphabeta(b, grid)
        ctx.report.derived["pinch_alphabeta"] = {"alpha": amin, "beta": bmax, "p": p_ab}
        if b.spec.kind == "ball":
            ctx.check("criteria", "ball_pinch_alphabeta", abs(p_ab + n), "threshold")
    except NumericalFailure as exc:
        ctx.report.notes.append(f"pinch_alphabeta skipped: {exc}")

    if b.is_unconditional and ctx.maps_available():
        lam, p_lam = criteria.pinch_lambda(b, grid)
        ctx.report.derived["pinch_lambda"] = {"lambda": lam, "p": p_lam}
        for i in range(n):
            for j in range(i + 1, n):
                gap = quadrant_gap(b, grid, i, j)
                ctx.check("criteria", f"quadrant_gap[{i},{j}]", gap - (n - 1 + lam), "quadrant_gap",
                          ">=", threshold=-ctx.config.tol("quadrant_gap"), grid=grid,
                          inputs={"gap": gap, "lambda": lam})

    if b.is_unconditional:
        pts = criteria.sample_orthant_points(n, ctx.config.samples, ctx.config.seed)
        q = criteria.qij_report(b, pts)
        ctx.check("criteria", "qij_agreement", q.max_disagreement, "qij_agreement",
                  inputs={"points": len(pts), "delta": q.delta})
        if b.spec.kind == "lq_ball" and b.spec.regularization_eps == 0:
            dev = np.max(np.abs(q.offdiagonal() - (1 - b.spec.q)))
            ctx.check("criteria", "qij_lq_value", dev, "qij_value", inputs={"q": b.spec.q})
        ctx.report.derived["qij"] = {"theorem_applicable": q.theorem_applicable,
                                     "min_margin": q.min_margin, "argmin": list(q.argmin),
                                     "condition_holds": q.condition_holds}
        ctx.report.notes.extend(q.notes)
        if q.theorem_applicable and q.condition_holds and ctx.spectral:
            res = max(ctx.spectral)
            c = ctx.spectral[res]["even"].best_constant
            ctx.check("criteria", "spe_consistency", c, "consistency", threshold=1 / n + ctx.config.tol("consistency"),
                      inputs={"best_even_constant": c, "bound": 1 / n, "resolution": res})


# ---------------------------------------------------------------- bochner

def bochner_suite(ctx: SuiteContext):
    b, n = ctx.body, ctx.n
    if n <= 2:
        pot = HomogeneousPotential(b, b.spec.alpha)
        names = "x1**2*exp(-x1**2-x2**2)" if n == 2 else "x**2*exp(-x**2)"
        u = TestFunction.parse(names, n)
        ctx.check("bochner", "euclidean", bochner_residual("euclidean", pot, u),
                  "bochner_euclidean", inputs={"u": u.expression, "alpha": pot.alpha})
        u = TestFunction.parse("x1*x2*exp(-x1**2-x2**2)" if n == 2 else "x**2*exp(-x**2)", n)
        ctx.check("bochner", "hessian_dual", bochner_residual("hessian_dual", pot, u),
                  "bochner_hessian_dual", inputs={"u": u.expression, "alpha": pot.alpha})
    grid = ctx.grid()
    u = _trig_field(grid, ctx.config.seed)
    ctx.check("bochner", "sphere_centroaffine", bochner_residual("sphere_centroaffine", b, u, grid),
              "bochner_centroaffine", grid=grid)


# ---------------------------------------------------------------- santalo

def santalo_suite(ctx: SuiteContext, perturbations=5):
    b, n = ctx.body, ctx.n
    if n > 2:
        ctx.report.notes.append("santalo suite needs n <= 2; skipped")
        return
    pot = HomogeneousPotential(b, b.spec.alpha)
    p = pot.alpha
    ratio = santalo.bs_ratio(santalo.BSInput(pot, santalo.ConvexFunction.from_potential(pot)))
    ctx.check("santalo", "bs_ratio_equality", abs(ratio - 1), "bs_equality", inputs={"p": p})
    worst = max(santalo.bs_ratio(santalo.BSInput(pot, santalo.random_perturbation(pot, ctx.config.seed + k)))
                for k in range(perturbations))
    ctx.check("santalo", "bs_ratio_perturbations", worst, "bs_inequality",
              threshold=1 + ctx.config.tol("bs_inequality"), inputs={"count": perturbations})
    ctx.check("santalo", "bs_set_ratio_level_set", abs(santalo.bs_set_ratio(b, pot) - 1), "bs_set")
    z = np.exp(ctx.rng.uniform(-2, 2, (ctx.config.samples, n)))
    ctx.report.derived["orthant_concavity_margin"] = santalo.orthant_concavity_margin(pot, p, z)
    a = 0.5 / (p - 1)
    base = ctx.rng.standard_normal((10, n))
    ts = np.linspace(0.2, 2.0, 10)
    ctx.report.derived["rt_monotone_margin"] = {
        "a": a, "margin": santalo.rt_monotone_margin(pot, a, 0, base, ts),
        "consequent_constant": santalo.consequent_constant(p, a)}


RUNNERS = {"geometry": geometry, "measures": measures, "spectral": spectral,
           "criteria": criteria_suite, "bochner": bochner_suite, "santalo": santalo_suite}
