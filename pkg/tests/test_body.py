import numpy as np
import pytest

from bmspectra.body import (
    BodySpec,
    HomogeneousPotential,
    make_body,
    sphere_maps,
    support_from_gauge,
    verify_phih,
)
from bmspectra.errors import DegenerateMatrix, DomainError, NearSingularHessian, NonConvex, NotEven


def test_ball_is_self_dual(ball2, rng):
    x = rng.standard_normal((10, 2))
    assert np.allclose(ball2.phi(x), np.linalg.norm(x, axis=1))
    assert np.allclose(ball2.h(x), np.linalg.norm(x, axis=1))


def test_ellipse_support_closed_form(ellipse):
    th = np.array([[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]])
    expected = np.sqrt(4 * th[:, 0] ** 2 + th[:, 1] ** 2)
    assert np.allclose(ellipse.h(th), expected, atol=1e-14)
    assert support_from_gauge(ellipse, np.array([1.0, 0.0])) == pytest.approx(2.0)


def test_lq_support_is_dual_norm_numerically(rng):
    body = make_body(BodySpec.lq(3, 3))
    x = rng.standard_normal((100, 3))
    # sup_y <x, y>/h(y) over many directions approaches phi(x) from below
    y = rng.standard_normal((20000, 3))
    ratio = (x @ y.T) / body.h(y)[None, :]
    assert np.all(ratio.max(axis=1) <= body.phi(x) + 1e-12)
    assert np.allclose(ratio.max(axis=1), body.phi(x), rtol=2e-2)


def test_numeric_support_matches_dual_norm():
    body = make_body(BodySpec.lq(3, 2))
    th = np.array([1.0, 1.0]) / np.sqrt(2)
    expected = np.sum(np.abs(th) ** 1.5) ** (1 / 1.5)
    assert support_from_gauge(body, th, numeric=True) == pytest.approx(expected, abs=1e-12)


def test_homogeneity_and_euler(lq3_reg, rng):
    x = rng.standard_normal((100, 2))
    t = rng.uniform(0.1, 10, 100)
    for f in (lq3_reg.phi, lq3_reg.h):
        assert np.max(np.abs(f(t[:, None] * x) - t * f(x))) <= 1e-12 * np.max(t * f(x))
    v, g, _ = lq3_reg.gauge_all(x)
    assert np.max(np.abs(np.sum(g * x, axis=1) - v)) <= 1e-8


@pytest.mark.parametrize("alpha", [1.5, 2.0, 3.0])
def test_legendre_consistency(ellipse, rng, alpha):
    pot = HomogeneousPotential(ellipse, alpha)
    x = rng.standard_normal((50, 2))
    val, grad, _ = pot.all(x)
    gap = pot.conjugate_value(grad) + val - np.sum(x * grad, axis=1)
    assert np.max(np.abs(gap)) <= 1e-8


def test_potential_hessian_matches_differences(lq3_reg, rng):
    pot = HomogeneousPotential(lq3_reg, 3.0)
    x = rng.standard_normal((5, 2))
    _, _, H = pot.all(x)
    s = 1e-6
    fd = np.stack([(pot.all(x + s * e)[1] - pot.all(x - s * e)[1]) / (2 * s) for e in np.eye(2)], -1)
    assert np.max(np.abs(H - fd)) <= 1e-6 * np.max(np.abs(H))


def test_sphere_maps_reciprocal(ellipse, circle):
    maps = sphere_maps(ellipse)
    assert np.allclose(maps.T(np.array([[1.0, 0.0]])), [[1.0, 0.0]])
    th = np.array([[1.0, 1.0]]) / np.sqrt(2)
    assert np.allclose(maps.S(maps.T(th)), th, atol=1e-10)
    assert np.allclose(maps.T(-circle.nodes), -maps.T(circle.nodes))


def test_phih_residuals(ball2, ellipse, lq3_reg, circle):
    assert verify_phih(ball2, circle) <= 1e-15
    assert verify_phih(ellipse, circle) <= 1e-8
    assert verify_phih(lq3_reg, circle) <= 1e-6


def test_unregularized_lq_maps_refused():
    with pytest.raises(NearSingularHessian):
        sphere_maps(make_body(BodySpec.lq(3, 2)))


def test_validation_errors():
    with pytest.raises(DegenerateMatrix):
        make_body(BodySpec("ellipsoid", 2, matrix=np.diag([1.0, -1.0])))
    with pytest.raises(DomainError):
        make_body(BodySpec.ball(2, alpha=1.0))
    with pytest.raises(NotEven):
        make_body(BodySpec.custom(2, lambda x: np.linalg.norm(x + 0.1 * np.linalg.norm(x, axis=-1)[..., None], axis=-1)))
    with pytest.raises(NonConvex):
        make_body(BodySpec.custom(2, lambda x: np.sum(np.abs(x) ** 0.5, axis=-1) ** 2))


def test_custom_body_by_finite_differences(rng):
    body = make_body(BodySpec.custom(2, lambda x: np.sqrt(x[..., 0] ** 2 / 4 + x[..., 1] ** 2)))
    th = rng.standard_normal((5, 2))
    th /= np.linalg.norm(th, axis=1, keepdims=True)
    assert np.allclose(body.h(th), np.sqrt(4 * th[:, 0] ** 2 + th[:, 1] ** 2), atol=1e-9)
