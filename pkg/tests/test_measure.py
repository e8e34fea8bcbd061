import numpy as np
import pytest
from scipy import integrate

from bmspectra.body import BodySpec, make_body
from bmspectra.errors import DomainError
from bmspectra.measure import (
    RadialLaw,
    change_of_variables_residual,
    cone_density,
    cone_measure,
    cordero_rotem_margin,
    gauge_measure,
    moment_ratio,
    pushforward_residual,
    radial_moment,
)
from bmspectra.sphere import Field, build_grid


def angle(grid):
    return np.arctan2(grid.nodes[:, 1], grid.nodes[:, 0])


def test_ball_measures_uniform(ball2, circle):
    for m in (cone_measure(ball2, circle), gauge_measure(ball2, circle)):
        assert m.weights.sum() == pytest.approx(1, abs=1e-12)
        assert np.allclose(m.weights, 1 / circle.size)


def test_ellipse_cone_density_is_h_times_h_plus_hpp(ellipse, circle):
    t = angle(circle)
    h = np.sqrt(4 * np.cos(t) ** 2 + np.sin(t) ** 2)
    # h + h'' = a^2 b^2 / h^3 for the ellipse with semi-axes a, b
    expected = h * 4 / h**3
    assert np.allclose(cone_density(ellipse, circle), expected, rtol=1e-10)
    m = cone_measure(ellipse, circle)
    # normalization = n |K| = 2 * pi * a * b
    assert m.normalization == pytest.approx(2 * np.pi * 2, rel=1e-12)


def test_ellipse_gauge_weight_ratio(ellipse, circle):
    w = gauge_measure(ellipse, circle).weights
    i0 = np.argmin(np.abs(angle(circle)))
    i1 = np.argmin(np.abs(angle(circle) - np.pi / 2))
    assert w[i0] / w[i1] == pytest.approx(4.0, rel=1e-12)
    assert np.allclose(w[circle.antipode], w)


def test_unconditional_sign_flip_symmetry(lq3_reg, circle):
    for m in (cone_measure(lq3_reg, circle), gauge_measure(lq3_reg, circle)):
        for i in range(2):
            assert np.max(np.abs(m.weights[circle.reflection(i)] - m.weights)) <= 1e-10


def test_pushforward(ball2, ellipse, lq3_reg):
    grid = build_grid(2, 256)
    t = angle(grid)
    assert pushforward_residual(ball2, grid, Field(grid, np.cos(2 * t))) <= 1e-12
    assert pushforward_residual(ellipse, grid, Field(grid, np.cos(2 * t))) <= 1e-8
    fine = build_grid(2, 1024)
    assert pushforward_residual(lq3_reg, fine, Field(fine, np.cos(4 * angle(fine)))) <= 1e-6


def _log_densities(body, grid):
    w = Field(grid, -np.log(cone_density(body, grid)))
    v = Field(grid, grid.dim * np.log(body.phi(grid.nodes)))
    return w, v


def test_change_of_variables(ball2, ellipse):
    grid = build_grid(2, 256)
    zero = Field(grid, np.zeros(grid.size))
    assert change_of_variables_residual(ball2, grid, zero, zero) <= 1e-14
    assert change_of_variables_residual(ellipse, grid, *_log_densities(ellipse, grid)) <= 1e-7


def test_change_of_variables_regularized_l15():
    body = make_body(BodySpec.lq(1.5, 2, eps=1e-3))
    grid = build_grid(2, 4096)
    assert change_of_variables_residual(body, grid, *_log_densities(body, grid)) <= 1e-4


def test_radial_moment_values():
    assert radial_moment(2, 2) == pytest.approx(1.0, rel=1e-14)
    assert radial_moment(1, 2) == pytest.approx(np.sqrt(np.pi / 2), rel=1e-14)
    oracle = integrate.quad(lambda t: t**2.5 * np.exp(-t**3 / 3), 0, np.inf, epsrel=1e-13)[0]
    assert radial_moment(3.5, 3) == pytest.approx(oracle, rel=1e-10)
    with pytest.raises(DomainError):
        radial_moment(0, 2)


def test_moment_ratio(rng):
    assert moment_ratio(5, 3) == pytest.approx(5, rel=1e-12)
    for m, a in zip(rng.uniform(0.1, 20, 50), rng.uniform(1.1, 6, 50)):
        assert abs(moment_ratio(m, a) - m) <= 1e-10 * m


def test_radial_law_normalized():
    law = RadialLaw(3.0, 2.0)
    mass = integrate.quad(law.pdf, 0, np.inf, epsrel=1e-12)[0]
    assert mass == pytest.approx(1, rel=1e-10)
    s = law.tail_radius(1e-12)
    assert law.tail(s) == pytest.approx(1e-12, rel=1e-6)


def test_cordero_rotem_margins(rng):
    assert cordero_rotem_margin(2, 3, 1.0, lambda r: 0 * r + 1, lambda r: 0 * r) == pytest.approx(0, abs=1e-14)
    assert cordero_rotem_margin(2, 3, 1.0, lambda r: r, lambda r: 1 + 0 * r) >= 0
    assert cordero_rotem_margin(3, 2, 1.5, lambda r: r * r, lambda r: 2 * r) >= -1e-10
    # polynomial times exponential fuzz family
    for _ in range(10):
        c, k = rng.uniform(-1, 1), rng.uniform(0, 1)
        a, n = rng.uniform(1.2, 4), int(rng.integers(2, 5))

        def f(r, c=c, k=k):
            return (r + c * r**2) * np.exp(-k * r)

        def df(r, c=c, k=k):
            return (1 + 2 * c * r - k * (r + c * r**2)) * np.exp(-k * r)

        assert cordero_rotem_margin(a, n, 1.0, f, df) >= -1e-10
