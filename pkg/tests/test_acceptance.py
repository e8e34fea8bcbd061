"""One test per acceptance criterion; each records a PASS/FAIL line for the summary."""

import time

import numpy as np

from bmspectra.body import BodySpec, HomogeneousPotential, make_body, verify_phih
from bmspectra.bochner import bochner_residual
from bmspectra.criteria import (
    p_from_Calpha,
    p_from_ratio,
    pinch_alphabeta,
    pinch_lambda,
    pinch_threshold,
    qij_report,
    sample_orthant_points,
    transfer_backward,
    transfer_forward,
)
from bmspectra.euclidean import assemble_euclidean_forms, power_potential
from bmspectra.functions import TestFunction
from bmspectra.measure import change_of_variables_residual, cone_density, moment_ratio, pushforward_residual
from bmspectra.santalo import (
    BSInput,
    ConvexFunction,
    bs_ratio,
    bs_set_ratio,
    random_perturbation,
)
from bmspectra.spectral import (
    assemble_gauge_forms,
    assemble_hilbert_forms,
    best_constant,
    best_even_constant,
    metric_pushforward_residual,
    quadrant_gap,
)
from bmspectra.sphere import Field, build_grid
from bmspectra.suites import _trig_field
from conftest import record


def test_c01_ball_spectrum_n2():
    t0 = time.perf_counter()
    grid = build_grid(2, 256)
    forms = assemble_hilbert_forms(make_body(BodySpec.ball(2)), grid)
    even, full = best_even_constant(forms), best_constant(forms)
    u = forms.basis.values @ full.coefficients
    th = np.arctan2(grid.nodes[:, 1], grid.nodes[:, 0])
    span = np.column_stack([np.cos(th), np.sin(th)])
    off = np.linalg.norm(u - span @ np.linalg.lstsq(span, u, rcond=None)[0]) / np.linalg.norm(u)
    dt = time.perf_counter() - t0
    ok = (abs(even.best_constant - 0.25) <= 1e-3 and abs(even.implied_p + 2) <= 1e-2
          and abs(full.best_constant - 1) <= 1e-4 and off <= 1e-6 and dt < 1)
    assert record(1, ok, f"even={even.best_constant:.12f} p={even.implied_p:.6f} "
                         f"full={full.best_constant:.12f} argmax_off_span={off:.1e} t={dt:.2f}s")


def test_c02_ball_spectrum_n3():
    t0 = time.perf_counter()
    forms = assemble_hilbert_forms(make_body(BodySpec.ball(3)), build_grid(3, 20))
    even = best_even_constant(forms)
    dt = time.perf_counter() - t0
    ok = abs(even.best_constant - 1 / 6) <= 1e-2 and abs(even.implied_p + 3) <= 0.5 and dt < 30
    assert record(2, ok, f"even={even.best_constant:.12f} p={even.implied_p:.6f} t={dt:.2f}s")


def test_c03_transfer_algebra():
    rng = np.random.default_rng(3)
    worst_fwd = worst_back = worst_p = 0.0
    for _ in range(50):
        n, a = int(rng.integers(1, 11)), rng.uniform(1.05, 8)
        lo = 1 - 1 / a
        c_nu = transfer_forward(n, a, lo)
        worst_fwd = max(worst_fwd, abs(c_nu - lo / n))
        worst_back = max(worst_back, abs(transfer_backward(n, a, c_nu) - lo))
        worst_p = max(worst_p, abs(p_from_Calpha(n, a, 1.0) - 1),
                      abs(p_from_Calpha(n, a, lo) + n / (a - 1)))
    ok = worst_fwd <= 1e-12 and worst_back <= 1e-14 and worst_p <= 1e-12
    assert record(3, ok, f"forward={worst_fwd:.1e} round_trip={worst_back:.1e} endpoints={worst_p:.1e}")


def test_c04_product_constants():
    t0 = time.perf_counter()
    parts, ok = [], True
    for p, n in [(2, 1), (3, 1), (4, 1), (1.5, 2), (3, 2)]:
        c = best_even_constant(assemble_euclidean_forms(power_potential(p, n))).best_constant
        target = 1 - 1 / p if n == 1 else max(1 - 1 / p, 0.5)
        ok &= abs(c - target) <= (1e-3 if n == 1 else 5e-3)
        parts.append(f"n={n},p={p}:{c:.6f}/{target:.6f}")
    dt = time.perf_counter() - t0
    ok &= dt < 120
    assert record(4, ok, " ".join(parts) + f" t={dt:.1f}s")


def test_c05_duality_of_sides():
    parts, ok = [], True
    for label, spec, res in [("ball", BodySpec.ball(2), 256),
                             ("ellipse", BodySpec.ellipsoid([2.0, 1.0]), 256),
                             ("l3_eps0.25", BodySpec.lq(3, 2, eps=0.25), 1024)]:
        body, grid = make_body(spec), build_grid(2, res)
        h_side = best_even_constant(assemble_hilbert_forms(body, grid)).best_constant
        phi_side = best_even_constant(assemble_gauge_forms(body, grid)).best_constant
        mp = metric_pushforward_residual(body, grid, _trig_field(grid, 0))
        ok &= abs(h_side - phi_side) <= 1e-5 and mp <= 1e-6
        parts.append(f"{label}: |dC|={abs(h_side - phi_side):.1e} metric={mp:.1e}")
    assert record(5, ok, "; ".join(parts))


def test_c06_qij_identities():
    worst, dev, ok = 0.0, 0.0, True
    bodies = [BodySpec.ellipsoid([2.0, 1.0, 0.5]), BodySpec.ellipsoid([2.0, 1.0])]
    bodies += [BodySpec.lq(q, 3) for q in (1.5, 2.0, 3.0)]
    for spec in bodies:
        rep = qij_report(make_body(spec), sample_orthant_points(spec.dim, 100, seed=6))
        worst = max(worst, rep.max_disagreement)
        if spec.kind == "lq_ball":
            dev = max(dev, float(np.max(np.abs(rep.offdiagonal() - (1 - spec.q)))))
    ok = worst <= 1e-7 and dev <= 1e-6
    assert record(6, ok, f"dual_vs_primal={worst:.1e} lq_value_dev={dev:.1e}")


def test_c07_pushforward_and_chvar():
    body, grid = make_body(BodySpec.ellipsoid([2.0, 1.0])), build_grid(2, 256)
    push = max(pushforward_residual(body, grid, _trig_field(grid, s)) for s in range(5))
    w = Field(grid, -np.log(cone_density(body, grid)))
    v = Field(grid, 2 * np.log(body.phi(grid.nodes)))
    chv = change_of_variables_residual(body, grid, w, v)
    phih = verify_phih(body, grid)
    ok = push <= 1e-8 and chv <= 1e-7 and phih <= 1e-8
    assert record(7, ok, f"pushforward={push:.1e} chvar={chv:.1e} phih={phih:.1e}")


def test_c08_bochner():
    e = bochner_residual("euclidean", power_potential(2, 1), TestFunction.parse("x**3 - 2*x", 1))
    d = bochner_residual("hessian_dual", power_potential(4, 1), TestFunction.parse("x**2*exp(-x**2)", 1))
    grid = build_grid(2, 256)
    tf = TestFunction.parse("x1**2 - x2**2 + x1*x2", 2)
    c = bochner_residual("sphere_centroaffine", make_body(BodySpec.ball(2)),
                         Field(grid, tf.value(grid.nodes)), grid)
    ok = e <= 1e-8 and d <= 1e-6 and c <= 1e-8
    assert record(8, ok, f"euclidean={e:.1e} hessian_dual={d:.1e} centroaffine={c:.1e}")


def test_c09_quadrant_gap():
    grid = build_grid(2, 256)
    ball = make_body(BodySpec.ball(2))
    g_ball = quadrant_gap(ball, grid, 0, 1)
    lam_ball = pinch_lambda(ball, grid)[0]
    ell = make_body(BodySpec.ellipsoid([1.2, 1.0]))
    g_ell = quadrant_gap(ell, grid, 0, 1)
    lam_ell = pinch_lambda(ell, grid)[0]
    ok = abs(g_ball - 4) <= 1e-3 and g_ball >= 1 + lam_ball and g_ell >= 1 + lam_ell - 1e-8
    assert record(9, ok, f"ball gap={g_ball:.10f} (>= {1 + lam_ball:.3f}); "
                         f"ellipse gap={g_ell:.6f} >= {1 + lam_ell:.6f}")


def test_c10_pinching():
    worst_ab = worst_lam = worst_thr = 0.0
    for n, res in [(2, 256), (3, 16)]:
        ball, grid = make_body(BodySpec.ball(n)), build_grid(n, res)
        worst_ab = max(worst_ab, abs(pinch_alphabeta(ball, grid)[2] + n))
        worst_lam = max(worst_lam, abs(pinch_lambda(ball, grid)[1]))
    for n in range(1, 11):
        worst_thr = max(worst_thr, abs(p_from_ratio(n, pinch_threshold(n))))
    ok = worst_ab <= 1e-14 and worst_lam <= 1e-14 and worst_thr <= 1e-12
    assert record(10, ok, f"alphabeta p+n={worst_ab:.1e} lambda p={worst_lam:.1e} threshold={worst_thr:.1e}")


def test_c11_moment_ratio():
    rng = np.random.default_rng(11)
    ms, als = np.exp(rng.uniform(np.log(0.05), np.log(50), 50)), rng.uniform(1.01, 10, 50)
    err = max(abs(moment_ratio(m, a) - m) for m, a in zip(ms, als))
    assert record(11, err <= 1e-10, f"max |ratio - m| = {err:.1e} over 50 inputs")


def test_c12_blaschke_santalo():
    gauss = power_potential(2, 1)
    eq = 0.0
    for c in (0.3, 1.0, 2.5, 7.0):
        f = ConvexFunction.parse(f"{c}*x**2/2", 1, conjugate=lambda y, c=c: np.sum(y**2, axis=-1) / (2 * c))
        eq = max(eq, abs(bs_ratio(BSInput(gauss, f)) - 1))
    pots = [HomogeneousPotential(make_body(BodySpec.ball(2)), 2.0),
            HomogeneousPotential(make_body(BodySpec.ellipsoid([2.0, 1.0])), 2.0),
            power_potential(3, 2),
            HomogeneousPotential(make_body(BodySpec.lq(3, 2)), 3.0),
            power_potential(3, 1)]
    for pot in pots:
        eq = max(eq, abs(bs_ratio(BSInput(pot, ConvexFunction.from_potential(pot))) - 1))
    sets = max(abs(bs_set_ratio(p.body, p) - 1) for p in pots[:4])
    l3 = pots[2]
    worst = max(bs_ratio(BSInput(l3, random_perturbation(l3, s))) for s in range(20))
    ok = eq <= 1e-6 and sets <= 1e-8 and worst <= 1 + 1e-6
    assert record(12, ok, f"equality={eq:.1e} level_sets={sets:.1e} max_perturbed={worst:.8f} (20 draws)")


def test_c13_criterion_spectrum_consistency():
    parts, ok = [], True
    grid = build_grid(3, 24)
    for q in (3.0, 4.0):
        body = make_body(BodySpec.lq(q, 3, eps=0.3))
        rep = qij_report(body, sample_orthant_points(3, 100, seed=13))
        c = best_even_constant(assemble_hilbert_forms(body, grid)).best_constant
        if rep.condition_holds:
            ok &= c <= 1 / 3 + 1e-3
        parts.append(f"q={q:g}: condition={'holds' if rep.condition_holds else 'fails'} "
                     f"margin={rep.min_margin:.3f} C={c:.6f}")
    assert record(13, ok, "; ".join(parts) + " (bound 1/3 + 1e-3)")
